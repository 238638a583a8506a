#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "corge/corpus.hpp"

namespace corge {

using EmbeddingVector = std::vector<double>;

/// Deterministic hashed bag-of-tokens encoder. Context and response share the
/// feature map; the optional projection applies to the response side only and
/// exists so joint retriever training has parameters to move.
struct EncoderConfig {
    int dimension = 256;  // >= 8
    std::uint64_t seed = 0;
    bool trainable = false;
    std::vector<double> projection;  // dimension x dimension, row-major; present iff trainable

    void validate() const;
    static EncoderConfig frozen(int dimension, std::uint64_t seed);
    static EncoderConfig with_identity_projection(int dimension, std::uint64_t seed);
};

/// Unnormalized hashed features: each token adds 1/count to its bucket.
EmbeddingVector raw_features(const std::vector<std::string>& tokens, const EncoderConfig& cfg);

/// Concatenated context token stream with the last turn repeated once, so
/// recent turns weigh more. Never projected.
EmbeddingVector raw_context_features(const std::vector<Utterance>& context,
                                     const EncoderConfig& cfg);

void l2_normalize(EmbeddingVector& v);

/// d(z): hashed features, projected when cfg.trainable, then unit-normalized.
EmbeddingVector encode_response(const Utterance& u, const EncoderConfig& cfg);

/// q(c): hashed features of the turn stream (last turn doubled), unit-normalized.
EmbeddingVector encode_context(const std::vector<Utterance>& context, const EncoderConfig& cfg);

/// Dot product; the relevance score for unit vectors lies in [-1, 1].
double score(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace corge
