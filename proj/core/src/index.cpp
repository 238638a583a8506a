#include "corge/index.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "corge/io.hpp"

namespace corge {

EmbeddingIndex build_index(const ResponseSet& rs, const EncoderConfig& cfg) {
    cfg.validate();
    if (rs.entries.empty()) {
        throw std::invalid_argument("cannot build an index from an empty response set");
    }
    EmbeddingIndex idx;
    idx.cfg = cfg;
    idx.response_ids.reserve(rs.size());
    idx.texts.reserve(rs.size());
    idx.matrix.reserve(rs.size() * static_cast<std::size_t>(cfg.dimension));
    for (const auto& entry : rs.entries) {
        const auto v = encode_response(entry.text, cfg);
        idx.response_ids.push_back(entry.id);
        idx.texts.push_back(entry.text);
        idx.matrix.insert(idx.matrix.end(), v.begin(), v.end());
    }
    return idx;
}

namespace {

std::vector<ScoredCandidate> topk_by_query(const EmbeddingIndex& idx, const EmbeddingVector& query,
                                           std::size_t k,
                                           const std::optional<std::string>& exclude_id) {
    const std::size_t available = idx.size() - (exclude_id ? 1 : 0);
    if (k == 0) {
        throw std::invalid_argument("k must be positive");
    }
    if (k > available) {
        throw std::invalid_argument("k = " + std::to_string(k) + " exceeds the " +
                                    std::to_string(available) + " available candidates");
    }

    struct Hit {
        double relevance;
        std::size_t row;
    };
    std::vector<Hit> hits;
    hits.reserve(idx.size());
    const std::size_t dim = static_cast<std::size_t>(idx.cfg.dimension);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (exclude_id && idx.response_ids[i] == *exclude_id) continue;
        const double* row = idx.row(i);
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) acc += row[d] * query[d];
        hits.push_back({acc, i});
    }

    // Relevance descending, then ascending id: a total order, so ties are
    // reproducible and topk(k1) is a prefix of topk(k2).
    std::sort(hits.begin(), hits.end(), [&](const Hit& a, const Hit& b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        return idx.response_ids[a.row] < idx.response_ids[b.row];
    });

    std::vector<ScoredCandidate> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back({idx.response_ids[hits[i].row], idx.texts[hits[i].row], hits[i].relevance});
    }
    return out;
}

}  // namespace

std::vector<ScoredCandidate> topk_by_context(const EmbeddingIndex& idx,
                                             const std::vector<Utterance>& context,
                                             std::size_t k) {
    return topk_by_query(idx, encode_context(context, idx.cfg), k, std::nullopt);
}

std::vector<ScoredCandidate> topk_by_response(const EmbeddingIndex& idx, const Utterance& response,
                                              std::size_t k,
                                              const std::optional<std::string>& exclude_id) {
    return topk_by_query(idx, encode_response(response, idx.cfg), k, exclude_id);
}

void save_index(const EmbeddingIndex& idx, const std::string& dir) {
    ResponseSet rs;
    rs.entries.reserve(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        rs.entries.push_back({idx.response_ids[i], idx.texts[i]});
    }
    save_response_set(rs, dir + "/response_set.jsonl");

    const std::size_t dim = static_cast<std::size_t>(idx.cfg.dimension);
    std::ostringstream matrix;
    char buf[40];
    for (std::size_t i = 0; i < idx.size(); ++i) {
        matrix << idx.response_ids[i];
        const double* row = idx.row(i);
        for (std::size_t d = 0; d < dim; ++d) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[d]);
            matrix << '\t' << buf;
        }
        matrix << '\n';
    }
    io::atomic_write(dir + "/embeddings.tsv", matrix.str());

    nlohmann::json meta;
    meta["dimension"] = idx.cfg.dimension;
    meta["seed"] = idx.cfg.seed;
    io::atomic_write(dir + "/encoder.json", meta.dump(2) + "\n");
}

EmbeddingIndex load_index(const std::string& dir) {
    const auto meta = nlohmann::json::parse(io::read_file(dir + "/encoder.json"));
    EmbeddingIndex idx;
    idx.cfg = EncoderConfig::frozen(meta.at("dimension").get<int>(),
                                    meta.at("seed").get<std::uint64_t>());

    const ResponseSet rs = load_response_set(dir + "/response_set.jsonl");
    idx.response_ids.reserve(rs.size());
    idx.texts.reserve(rs.size());
    for (const auto& entry : rs.entries) {
        idx.response_ids.push_back(entry.id);
        idx.texts.push_back(entry.text);
    }

    const std::string path = dir + "/embeddings.tsv";
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open embedding matrix: " + path);
    }
    const std::size_t dim = static_cast<std::size_t>(idx.cfg.dimension);
    idx.matrix.reserve(rs.size() * dim);
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string id;
        if (!std::getline(fields, id, '\t')) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) + ": missing id");
        }
        if (line_number > idx.response_ids.size() || id != idx.response_ids[line_number - 1]) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": id \"" + id + "\" does not match the response set order");
        }
        std::string field;
        std::size_t count = 0;
        while (std::getline(fields, field, '\t')) {
            char* end = nullptr;
            const double value = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0') {
                throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                         ": bad matrix value \"" + field + "\"");
            }
            idx.matrix.push_back(value);
            ++count;
        }
        if (count != dim) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": expected " + std::to_string(dim) + " values, found " +
                                     std::to_string(count));
        }
    }
    if (idx.matrix.size() != rs.size() * dim) {
        throw std::runtime_error(path + ": row count does not match the response set");
    }
    return idx;
}

}  // namespace corge
