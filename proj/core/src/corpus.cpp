#include "corge/corpus.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

#include "corge/io.hpp"

namespace corge {

std::vector<std::string> tokenize(const std::string& raw) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(current);
            current.clear();
        }
    };
    for (char ch : raw) {
        const unsigned char c = static_cast<unsigned char>(ch);
        if (std::isspace(c)) {
            flush();
        } else if (std::ispunct(c)) {
            flush();
            tokens.emplace_back(1, ch);
        } else {
            current.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    flush();
    return tokens;
}

Utterance::Utterance(std::string text) : raw(std::move(text)), tokens(tokenize(raw)) {}

namespace {

DialoguePair pair_from_json(const nlohmann::json& obj, const std::string& path,
                            std::size_t line_number) {
    auto fail = [&](const std::string& what) -> void {
        throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + what);
    };
    if (!obj.is_object()) fail("record is not a JSON object");
    if (!obj.contains("id") || !obj["id"].is_string()) fail("missing string field \"id\"");
    if (!obj.contains("context") || !obj["context"].is_array()) {
        fail("missing array field \"context\"");
    }
    if (!obj.contains("response") || !obj["response"].is_string()) {
        fail("missing string field \"response\"");
    }

    DialoguePair pair;
    pair.id = obj["id"].get<std::string>();
    for (const auto& turn : obj["context"]) {
        if (!turn.is_string()) fail("context turns must be strings");
        pair.context.emplace_back(turn.get<std::string>());
    }
    pair.response = Utterance(obj["response"].get<std::string>());

    if (pair.context.empty()) fail("empty context for id \"" + pair.id + "\"");
    if (pair.response.empty()) fail("empty response for id \"" + pair.id + "\"");
    return pair;
}

}  // namespace

std::vector<DialoguePair> load_dialogues(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open dialogue file: " + path);
    }
    std::vector<DialoguePair> pairs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const auto obj = io::parse_jsonl_line(line, path, line_number);
        DialoguePair pair = pair_from_json(obj, path, line_number);
        if (!seen_ids.insert(pair.id).second) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) +
                                     ": duplicate dialogue id \"" + pair.id + "\"");
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

void save_dialogues(const std::vector<DialoguePair>& pairs, const std::string& path) {
    std::ostringstream out;
    for (const auto& pair : pairs) {
        nlohmann::json obj;
        obj["id"] = pair.id;
        auto turns = nlohmann::json::array();
        for (const auto& turn : pair.context) turns.push_back(turn.raw);
        obj["context"] = std::move(turns);
        obj["response"] = pair.response.raw;
        out << obj.dump() << '\n';
    }
    io::atomic_write(path, out.str());
}

ResponseSet build_response_set(const std::vector<DialoguePair>& pairs) {
    if (pairs.empty()) {
        throw std::invalid_argument("cannot build a response set from an empty corpus");
    }
    ResponseSet rs;
    rs.entries.reserve(pairs.size());
    for (const auto& pair : pairs) {
        rs.entries.push_back({pair.id, pair.response});
    }
    return rs;
}

ResponseSet load_response_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open response set: " + path);
    }
    ResponseSet rs;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const auto obj = io::parse_jsonl_line(line, path, line_number);
        auto fail = [&](const std::string& what) {
            throw std::runtime_error(path + ":" + std::to_string(line_number) + ": " + what);
        };
        if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string() ||
            !obj.contains("text") || !obj["text"].is_string()) {
            fail("expected {\"id\": str, \"text\": str}");
        }
        ResponseEntry entry{obj["id"].get<std::string>(), Utterance(obj["text"].get<std::string>())};
        if (!seen_ids.insert(entry.id).second) {
            fail("duplicate response id \"" + entry.id + "\"");
        }
        rs.entries.push_back(std::move(entry));
    }
    return rs;
}

void save_response_set(const ResponseSet& rs, const std::string& path) {
    std::ostringstream out;
    for (const auto& entry : rs.entries) {
        nlohmann::json obj;
        obj["id"] = entry.id;
        obj["text"] = entry.text.raw;
        out << obj.dump() << '\n';
    }
    io::atomic_write(path, out.str());
}

}  // namespace corge
