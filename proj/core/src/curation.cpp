#include "corge/curation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "corge/io.hpp"

namespace corge {

void CurationConfig::validate(std::size_t response_set_size) const {
    if (k == 0) throw std::invalid_argument("curation k must be positive");
    if (response_set_size < 2) {
        throw std::invalid_argument("response set must hold at least 2 entries");
    }
    if (k > response_set_size - 1) {
        throw std::invalid_argument("curation k = " + std::to_string(k) +
                                    " must be at most |R| - 1 = " +
                                    std::to_string(response_set_size - 1));
    }
    if (jaccard_threshold < 0.0 || jaccard_threshold > 1.0) {
        throw std::invalid_argument("jaccard threshold must lie in [0, 1]");
    }
    if (!(softmax_temperature > 0.0)) {
        throw std::invalid_argument("softmax temperature must be positive");
    }
    if (max_replacement_attempts == 0) {
        throw std::invalid_argument("max replacement attempts must be positive");
    }
}

double jaccard_similarity(const Utterance& a, const Utterance& b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("jaccard similarity is undefined for empty utterances");
    }
    const std::unordered_set<std::string> set_a(a.tokens.begin(), a.tokens.end());
    const std::unordered_set<std::string> set_b(b.tokens.begin(), b.tokens.end());
    std::size_t intersection = 0;
    for (const auto& token : set_a) {
        if (set_b.count(token)) ++intersection;
    }
    const std::size_t unions = set_a.size() + set_b.size() - intersection;
    return static_cast<double>(intersection) / static_cast<double>(unions);
}

std::vector<double> softmax_weights(const std::vector<double>& scores, double temperature) {
    if (scores.empty()) throw std::invalid_argument("softmax over an empty score list");
    if (!(temperature > 0.0)) throw std::invalid_argument("softmax temperature must be positive");
    double max_score = scores[0];
    for (double s : scores) max_score = std::max(max_score, s);
    std::vector<double> weights(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        weights[i] = std::exp((scores[i] - max_score) / temperature);
        total += weights[i];
    }
    for (double& w : weights) w /= total;
    return weights;
}

std::vector<ScoredCandidate> select_kne(const EmbeddingIndex& idx, const DialoguePair& pair,
                                        const CurationConfig& cfg) {
    if (cfg.use_kne) {
        return topk_by_response(idx, pair.response, cfg.k, pair.id);
    }
    return topk_by_context(idx, pair.context, cfg.k);
}

std::vector<ExemplarDraft> filter_and_replace(const std::vector<ScoredCandidate>& cands,
                                              const DialoguePair& pair, const ResponseSet& rs,
                                              const CurationConfig& cfg, rng::Engine& rng) {
    if (rs.size() < 2) {
        throw std::invalid_argument("response set too small for replacement draws");
    }
    if (cands.size() != cfg.k) {
        throw std::invalid_argument("expected exactly k candidates to filter");
    }
    if (cfg.max_replacement_attempts == 0) {
        throw std::invalid_argument("max replacement attempts must be positive");
    }

    // Draw pool excluding the gold response's own entry, built lazily.
    std::vector<std::size_t> pool;
    auto ensure_pool = [&] {
        if (!pool.empty()) return;
        pool.reserve(rs.size());
        for (std::size_t i = 0; i < rs.size(); ++i) {
            if (rs.entries[i].id != pair.id) pool.push_back(i);
        }
    };

    std::vector<ExemplarDraft> drafts;
    drafts.reserve(cands.size());
    for (const auto& cand : cands) {
        const double sim = jaccard_similarity(cand.text, pair.response);
        if (!cfg.use_jaccard_filter || sim <= cfg.jaccard_threshold) {
            drafts.push_back({cand.response_id, cand.text, sim, ExemplarSource::kne});
            continue;
        }
        ensure_pool();
        const ResponseEntry* drawn = nullptr;
        double drawn_sim = 0.0;
        for (std::size_t attempt = 0; attempt < cfg.max_replacement_attempts; ++attempt) {
            drawn = &rs.entries[pool[rng.below(pool.size())]];
            drawn_sim = jaccard_similarity(drawn->text, pair.response);
            if (drawn_sim <= cfg.jaccard_threshold) break;
        }
        drafts.push_back({std::nullopt, drawn->text, drawn_sim, ExemplarSource::replacement});
    }
    return drafts;
}

std::vector<ExemplarSlot> weight_exemplars(const EmbeddingIndex& idx,
                                           const std::vector<Utterance>& context,
                                           const std::vector<ExemplarDraft>& drafts,
                                           const CurationConfig& cfg) {
    const EmbeddingVector query = encode_context(context, idx.cfg);
    std::vector<double> scores;
    scores.reserve(drafts.size());
    for (const auto& draft : drafts) {
        scores.push_back(score(encode_response(draft.text, idx.cfg), query));
    }

    std::vector<double> weights;
    if (cfg.use_relevance_weights) {
        weights = softmax_weights(scores, cfg.softmax_temperature);
    } else {
        weights.assign(drafts.size(), 1.0 / static_cast<double>(drafts.size()));
    }

    std::vector<ExemplarSlot> slots;
    slots.reserve(drafts.size());
    for (std::size_t i = 0; i < drafts.size(); ++i) {
        slots.push_back({drafts[i].response_id, drafts[i].text, scores[i], weights[i],
                         drafts[i].jaccard_sim, drafts[i].source});
    }
    return slots;
}

std::vector<CuratedInstance> curate(const std::vector<DialoguePair>& pairs, const ResponseSet& rs,
                                    const EmbeddingIndex& idx, const CurationConfig& cfg) {
    cfg.validate(rs.size());
    std::vector<CuratedInstance> instances;
    instances.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& pair = pairs[i];
        rng::Engine rng(rng::derive_seed(cfg.rng_seed, i));
        auto cands = select_kne(idx, pair, cfg);
        auto drafts = filter_and_replace(cands, pair, rs, cfg, rng);
        auto slots = weight_exemplars(idx, pair.context, drafts, cfg);
        instances.push_back({pair, std::move(slots)});
    }
    return instances;
}

std::vector<CuratedInstance> plain_instances(const std::vector<DialoguePair>& pairs) {
    std::vector<CuratedInstance> instances;
    instances.reserve(pairs.size());
    for (const auto& pair : pairs) {
        ExemplarSlot slot;
        slot.weight = 1.0;
        instances.push_back({pair, {slot}});
    }
    return instances;
}

std::string curated_to_jsonl(const std::vector<CuratedInstance>& instances) {
    std::ostringstream out;
    for (const auto& inst : instances) {
        nlohmann::json obj;
        obj["context_id"] = inst.pair.id;
        auto turns = nlohmann::json::array();
        for (const auto& turn : inst.pair.context) turns.push_back(turn.raw);
        obj["context"] = std::move(turns);
        obj["gold_response"] = inst.pair.response.raw;
        auto exemplars = nlohmann::json::array();
        for (const auto& slot : inst.exemplars) {
            nlohmann::json e;
            if (slot.response_id) {
                e["response_id"] = *slot.response_id;
            } else {
                e["response_id"] = nullptr;
            }
            e["text"] = slot.text.raw;
            e["relevance_score"] = slot.relevance_score;
            e["weight"] = slot.weight;
            e["jaccard_sim"] = slot.jaccard_sim;
            e["source"] = slot.source == ExemplarSource::kne ? "kne" : "replacement";
            exemplars.push_back(std::move(e));
        }
        obj["exemplars"] = std::move(exemplars);
        out << obj.dump() << '\n';
    }
    return out.str();
}

void save_curated(const std::vector<CuratedInstance>& instances, const std::string& path) {
    io::atomic_write(path, curated_to_jsonl(instances));
}

std::vector<CuratedInstance> load_curated(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open curated file: " + path);
    }
    std::vector<CuratedInstance> instances;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const auto obj = io::parse_jsonl_line(line, path, line_number);
        auto fail = [&](const std::string& what) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + what);
        };
        CuratedInstance inst;
        try {
            inst.pair.id = obj.at("context_id").get<std::string>();
            for (const auto& turn : obj.at("context")) {
                inst.pair.context.emplace_back(turn.get<std::string>());
            }
            inst.pair.response = Utterance(obj.at("gold_response").get<std::string>());
            double weight_sum = 0.0;
            for (const auto& e : obj.at("exemplars")) {
                ExemplarSlot slot;
                if (!e.at("response_id").is_null()) {
                    slot.response_id = e.at("response_id").get<std::string>();
                }
                slot.text = Utterance(e.at("text").get<std::string>());
                slot.relevance_score = e.at("relevance_score").get<double>();
                slot.weight = e.at("weight").get<double>();
                slot.jaccard_sim = e.at("jaccard_sim").get<double>();
                const auto source = e.at("source").get<std::string>();
                if (source == "kne") {
                    slot.source = ExemplarSource::kne;
                } else if (source == "replacement") {
                    slot.source = ExemplarSource::replacement;
                } else {
                    fail("unknown exemplar source \"" + source + "\"");
                }
                weight_sum += slot.weight;
                inst.exemplars.push_back(std::move(slot));
            }
            if (inst.exemplars.empty()) fail("instance has no exemplars");
            if (std::abs(weight_sum - 1.0) > 1e-9) {
                fail("exemplar weights sum to " + std::to_string(weight_sum) + ", expected 1");
            }
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("bad curated record: ") + e.what());
        }
        instances.push_back(std::move(inst));
    }
    return instances;
}

}  // namespace corge
