#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corge/corpus.hpp"
#include "corge/index.hpp"
#include "corge/rng.hpp"

namespace corge {

enum class ExemplarSource { kne, replacement };

struct ExemplarSlot {
    std::optional<std::string> response_id;  // absent for random replacements
    Utterance text;
    double relevance_score = 0.0;  // S_R(z, c)
    double weight = 0.0;           // P_R(z, c), softmax over the k slots
    double jaccard_sim = 0.0;      // against the gold response
    ExemplarSource source = ExemplarSource::kne;
};

/// Context, gold response, and the k weighted exemplars selected for it.
struct CuratedInstance {
    DialoguePair pair;
    std::vector<ExemplarSlot> exemplars;
};

struct CurationConfig {
    std::size_t k = 5;
    double jaccard_threshold = 0.6;
    double softmax_temperature = 1.0;
    std::uint64_t rng_seed = 0;
    std::size_t max_replacement_attempts = 10;
    // Ablation switches: -kNE falls back to context retrieval, -JF skips the
    // filter, -RS uses uniform weights.
    bool use_kne = true;
    bool use_jaccard_filter = true;
    bool use_relevance_weights = true;

    void validate(std::size_t response_set_size) const;
};

/// Unigram token-set overlap |A n B| / |A u B|.
double jaccard_similarity(const Utterance& a, const Utterance& b);

/// softmax(scores / temperature); all entries positive, summing to 1.
std::vector<double> softmax_weights(const std::vector<double>& scores, double temperature);

/// Candidate selected by retrieval plus its filtering outcome.
struct ExemplarDraft {
    std::optional<std::string> response_id;
    Utterance text;
    double jaccard_sim = 0.0;
    ExemplarSource source = ExemplarSource::kne;
};

/// Top-k by S_R'(z, r) with the gold response's own id excluded; with
/// use_kne=false, top-k by S_R(z, c) instead.
std::vector<ScoredCandidate> select_kne(const EmbeddingIndex& idx, const DialoguePair& pair,
                                        const CurationConfig& cfg);

/// Replaces candidates whose Jaccard similarity with the gold response
/// exceeds the threshold by uniform draws from rs (gold id excluded);
/// over-threshold draws are redrawn up to max_replacement_attempts, then the
/// last draw is kept.
std::vector<ExemplarDraft> filter_and_replace(const std::vector<ScoredCandidate>& cands,
                                              const DialoguePair& pair, const ResponseSet& rs,
                                              const CurationConfig& cfg, rng::Engine& rng);

/// Scores every draft against the context and softmax-normalizes; with
/// use_relevance_weights=false the weights are uniform but scores are still
/// recorded.
std::vector<ExemplarSlot> weight_exemplars(const EmbeddingIndex& idx,
                                           const std::vector<Utterance>& context,
                                           const std::vector<ExemplarDraft>& drafts,
                                           const CurationConfig& cfg);

/// Full pipeline per pair: select_kne -> filter_and_replace ->
/// weight_exemplars. The generator is split per pair from (rng_seed, pair
/// index), so output is deterministic and independent of evaluation order.
std::vector<CuratedInstance> curate(const std::vector<DialoguePair>& pairs, const ResponseSet& rs,
                                    const EmbeddingIndex& idx, const CurationConfig& cfg);

/// Single empty-exemplar slot with weight 1: the vanilla generator's view of
/// a pair, used to train no-exemplar baselines.
std::vector<CuratedInstance> plain_instances(const std::vector<DialoguePair>& pairs);

void save_curated(const std::vector<CuratedInstance>& instances, const std::string& path);
std::string curated_to_jsonl(const std::vector<CuratedInstance>& instances);
std::vector<CuratedInstance> load_curated(const std::string& path);

}  // namespace corge
