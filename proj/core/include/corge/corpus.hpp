#pragma once

#include <string>
#include <vector>

namespace corge {

/// Lowercases and splits on whitespace; punctuation characters are detached
/// as standalone single-character tokens. Deterministic and idempotent on
/// its own output joined by spaces.
std::vector<std::string> tokenize(const std::string& raw);

struct Utterance {
    std::string raw;
    std::vector<std::string> tokens;

    Utterance() = default;
    explicit Utterance(std::string text);

    bool empty() const { return tokens.empty(); }

    bool operator==(const Utterance& other) const { return tokens == other.tokens; }
};

/// One training instance: multi-turn context plus its gold response.
struct DialoguePair {
    std::string id;
    std::vector<Utterance> context;  // oldest turn first, at least one turn
    Utterance response;
};

struct ResponseEntry {
    std::string id;
    Utterance text;
};

/// The pre-defined candidate pool exemplars are drawn from.
struct ResponseSet {
    std::vector<ResponseEntry> entries;

    std::size_t size() const { return entries.size(); }
};

/// Reads dialogue JSONL: {"id": str, "context": [str, ...], "response": str}.
/// Malformed lines and duplicate ids are reported with line number / id.
std::vector<DialoguePair> load_dialogues(const std::string& path);
void save_dialogues(const std::vector<DialoguePair>& pairs, const std::string& path);

/// One entry per pair response, id taken from the pair id. Duplicate response
/// texts are kept as distinct entries.
ResponseSet build_response_set(const std::vector<DialoguePair>& pairs);

/// Response-set JSONL: {"id": str, "text": str}.
ResponseSet load_response_set(const std::string& path);
void save_response_set(const ResponseSet& rs, const std::string& path);

}  // namespace corge
