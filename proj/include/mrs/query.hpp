#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mrs/corpus.hpp"
#include "mrs/error.hpp"

namespace mrs {

enum class Task { fever, hotpot };

inline std::string_view to_string(Task t) { return t == Task::fever ? "fever" : "hotpot"; }

inline Task parse_task(std::string_view name) {
    if (name == "fever") return Task::fever;
    if (name == "hotpot" || name == "hotpotqa") return Task::hotpot;
    throw PreconditionError("unknown task: " + std::string(name));
}

enum class Label { supports, refutes, nei };

/// Official FEVER spelling.
inline std::string_view to_string(Label l) {
    switch (l) {
        case Label::supports: return "SUPPORTS";
        case Label::refutes: return "REFUTES";
        case Label::nei: return "NOT ENOUGH INFO";
    }
    return "";
}

/// Accepts the official spellings (any case) and the short form "NEI".
inline Label parse_label(std::string_view raw) {
    std::string s(raw);
    for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (s == "SUPPORTS") return Label::supports;
    if (s == "REFUTES") return Label::refutes;
    if (s == "NOT ENOUGH INFO" || s == "NEI") return Label::nei;
    throw DataError("unknown label: " + std::string(raw));
}

/// A question (hotpot) or claim (fever) with optional gold annotations.
struct Query {
    std::string id;
    Task task = Task::hotpot;
    std::string text;
    std::optional<std::string> answer;  ///< hotpot gold answer
    std::optional<Label> label;         ///< fever gold label
    /// Annotated evidence groups; any one complete group suffices. Hotpot
    /// queries carry a single group holding the supporting facts.
    std::vector<std::vector<SentenceId>> evidence_groups;

    /// Union of all evidence groups, sorted and duplicate-free.
    std::vector<SentenceId> gold_sentences() const {
        std::vector<SentenceId> out;
        for (const auto& g : evidence_groups) out.insert(out.end(), g.begin(), g.end());
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

}  // namespace mrs
