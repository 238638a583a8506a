#pragma once

#include <optional>
#include <string>
#include <vector>

#include "corge/corpus.hpp"
#include "corge/embedder.hpp"

namespace corge {

struct ScoredCandidate {
    std::string response_id;
    Utterance text;
    double relevance = 0.0;
};

/// Row i of the matrix is encode_response(entries[i]) under cfg. Immutable
/// after build; queries are exact scans, ties broken by ascending id.
struct EmbeddingIndex {
    std::vector<std::string> response_ids;
    std::vector<Utterance> texts;
    std::vector<double> matrix;  // size() == response_ids.size() * cfg.dimension, row-major
    EncoderConfig cfg;

    std::size_t size() const { return response_ids.size(); }
    const double* row(std::size_t i) const {
        return matrix.data() + i * static_cast<std::size_t>(cfg.dimension);
    }
};

EmbeddingIndex build_index(const ResponseSet& rs, const EncoderConfig& cfg);

/// Top-k under S_R(z, c) = d(z) . q(c).
std::vector<ScoredCandidate> topk_by_context(const EmbeddingIndex& idx,
                                             const std::vector<Utterance>& context,
                                             std::size_t k);

/// Top-k under S_R'(z, r) = d(z) . d(r); exclude_id is never returned.
std::vector<ScoredCandidate> topk_by_response(const EmbeddingIndex& idx, const Utterance& response,
                                              std::size_t k,
                                              const std::optional<std::string>& exclude_id = {});

/// Persists as a (response set, embedding matrix, encoder meta) triple inside
/// `dir`; loading reproduces query results exactly (values written with 17
/// significant digits round-trip to the same doubles).
void save_index(const EmbeddingIndex& idx, const std::string& dir);
EmbeddingIndex load_index(const std::string& dir);

}  // namespace corge
