#include "corge/embedder.hpp"

#include <cmath>
#include <stdexcept>

#include "corge/rng.hpp"

namespace corge {

void EncoderConfig::validate() const {
    if (dimension < 8) {
        throw std::invalid_argument("encoder dimension must be >= 8");
    }
    const auto expected = trainable ? static_cast<std::size_t>(dimension) * dimension : 0u;
    if (projection.size() != expected) {
        throw std::invalid_argument(trainable
                                        ? "trainable encoder requires a dimension x dimension projection"
                                        : "frozen encoder must not carry a projection");
    }
}

EncoderConfig EncoderConfig::frozen(int dimension, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.dimension = dimension;
    cfg.seed = seed;
    cfg.validate();
    return cfg;
}

EncoderConfig EncoderConfig::with_identity_projection(int dimension, std::uint64_t seed) {
    EncoderConfig cfg;
    cfg.dimension = dimension;
    cfg.seed = seed;
    cfg.trainable = true;
    cfg.projection.assign(static_cast<std::size_t>(dimension) * dimension, 0.0);
    for (int i = 0; i < dimension; ++i) {
        cfg.projection[static_cast<std::size_t>(i) * dimension + i] = 1.0;
    }
    cfg.validate();
    return cfg;
}

EmbeddingVector raw_features(const std::vector<std::string>& tokens, const EncoderConfig& cfg) {
    EmbeddingVector v(static_cast<std::size_t>(cfg.dimension), 0.0);
    if (tokens.empty()) return v;
    const double weight = 1.0 / static_cast<double>(tokens.size());
    for (const auto& token : tokens) {
        const auto bucket = rng::hash_token(token, cfg.seed) % static_cast<std::uint64_t>(cfg.dimension);
        v[static_cast<std::size_t>(bucket)] += weight;
    }
    return v;
}

EmbeddingVector raw_context_features(const std::vector<Utterance>& context,
                                     const EncoderConfig& cfg) {
    std::vector<std::string> stream;
    for (const auto& turn : context) {
        stream.insert(stream.end(), turn.tokens.begin(), turn.tokens.end());
    }
    const auto& last = context.back().tokens;
    stream.insert(stream.end(), last.begin(), last.end());
    return raw_features(stream, cfg);
}

void l2_normalize(EmbeddingVector& v) {
    double sumsq = 0.0;
    for (double x : v) sumsq += x * x;
    if (sumsq <= 0.0) {
        throw std::invalid_argument("cannot normalize a zero feature vector");
    }
    const double inv = 1.0 / std::sqrt(sumsq);
    for (double& x : v) x *= inv;
}

namespace {

EmbeddingVector apply_projection(const EmbeddingVector& v, const EncoderConfig& cfg) {
    const std::size_t d = static_cast<std::size_t>(cfg.dimension);
    EmbeddingVector out(d, 0.0);
    for (std::size_t row = 0; row < d; ++row) {
        const double* w = cfg.projection.data() + row * d;
        double acc = 0.0;
        for (std::size_t col = 0; col < d; ++col) acc += w[col] * v[col];
        out[row] = acc;
    }
    return out;
}

}  // namespace

EmbeddingVector encode_response(const Utterance& u, const EncoderConfig& cfg) {
    cfg.validate();
    if (u.empty()) {
        throw std::invalid_argument("cannot encode an empty utterance");
    }
    EmbeddingVector v = raw_features(u.tokens, cfg);
    if (cfg.trainable) {
        v = apply_projection(v, cfg);
    }
    l2_normalize(v);
    return v;
}

EmbeddingVector encode_context(const std::vector<Utterance>& context, const EncoderConfig& cfg) {
    cfg.validate();
    if (context.empty()) {
        throw std::invalid_argument("cannot encode an empty context");
    }
    std::size_t total_tokens = 0;
    for (const auto& turn : context) total_tokens += turn.tokens.size();
    if (total_tokens == 0) {
        throw std::invalid_argument("context has no tokens");
    }
    EmbeddingVector v = raw_context_features(context, cfg);
    l2_normalize(v);
    return v;
}

double score(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("embedding dimension mismatch: " + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()));
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace corge
