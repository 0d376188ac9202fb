#pragma once

// Normalized, immutable Wikipedia-style corpus: documents -> paragraphs ->
// sentences, with per-paragraph hyperlink targets.

#include <algorithm>
#include <compare>
#include <cstring>
#include <iterator>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "mrs/detail/binary.hpp"
#include "mrs/error.hpp"
#include "mrs/text.hpp"

namespace mrs {

/// Canonical document title: NFC with underscores folded to spaces and
/// surrounding spaces trimmed.
/// Parenthetical disambiguators are part of the title.
class DocumentTitle {
public:
    DocumentTitle() = default;

    /// Canonicalizes `raw`; throws DataError when the result is empty.
    explicit DocumentTitle(std::string_view raw) : value_(canonicalize(raw)) {
        if (value_.empty()) throw DataError("empty document title");
    }

    static std::string canonicalize(std::string_view raw) {
        std::string folded(raw);
        std::replace(folded.begin(), folded.end(), '_', ' ');
        const auto first = folded.find_first_not_of(' ');
        if (first == std::string::npos) return {};
        folded = folded.substr(first, folded.find_last_not_of(' ') - first + 1);
        return text::nfc(folded);
    }

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const DocumentTitle&) const = default;
    bool operator==(const DocumentTitle&) const = default;

private:
    std::string value_;
};

struct ParagraphId {
    DocumentTitle title;
    std::uint32_t para_index = 0;

    auto operator<=>(const ParagraphId&) const = default;
    bool operator==(const ParagraphId&) const = default;
};

/// (title, sentence index). The index is document-global: sentences are
/// numbered across the document's paragraphs in source order, which for
/// single-paragraph documents coincides with the paragraph-local line number.
struct SentenceId {
    DocumentTitle title;
    std::int64_t sent_index = 0;

    auto operator<=>(const SentenceId&) const = default;
    bool operator==(const SentenceId&) const = default;
};

inline std::string to_string(const ParagraphId& id) {
    return id.title.str() + "#" + std::to_string(id.para_index);
}

inline std::string to_string(const SentenceId& id) {
    return id.title.str() + "#s" + std::to_string(id.sent_index);
}

}  // namespace mrs

template <>
struct std::hash<mrs::DocumentTitle> {
    std::size_t operator()(const mrs::DocumentTitle& t) const noexcept {
        return std::hash<std::string>{}(t.str());
    }
};

template <>
struct std::hash<mrs::ParagraphId> {
    std::size_t operator()(const mrs::ParagraphId& id) const noexcept {
        return std::hash<std::string>{}(id.title.str()) * 31u + id.para_index;
    }
};

template <>
struct std::hash<mrs::SentenceId> {
    std::size_t operator()(const mrs::SentenceId& id) const noexcept {
        return std::hash<std::string>{}(id.title.str()) * 31u +
               static_cast<std::size_t>(id.sent_index);
    }
};

namespace mrs {

/// One sentence slot. Empty text is the sentinel for a blank source line.
struct Sentence {
    std::uint32_t index = 0;
    std::string text;

    bool operator==(const Sentence&) const = default;
};

struct ParagraphRecord {
    DocumentTitle title;
    std::uint32_t para_index = 0;
    std::vector<Sentence> sentences;
    std::vector<DocumentTitle> hyperlinks;  ///< sorted, unique, never the own title

    ParagraphId id() const { return {title, para_index}; }

    /// Non-empty sentences joined by single spaces.
    std::string text() const {
        std::string out;
        for (const auto& s : sentences) {
            if (s.text.empty()) continue;
            if (!out.empty()) out.push_back(' ');
            out += s.text;
        }
        return out;
    }

    bool operator==(const ParagraphRecord&) const = default;
};

struct Document {
    DocumentTitle title;
    std::vector<ParagraphRecord> paragraphs;

    std::string text() const {
        std::string out;
        for (const auto& p : paragraphs) {
            auto t = p.text();
            if (t.empty()) continue;
            if (!out.empty()) out.push_back(' ');
            out += t;
        }
        return out;
    }

    bool operator==(const Document&) const = default;
};

struct CorpusCounts {
    std::size_t documents = 0;
    std::size_t paragraphs = 0;
    std::size_t sentences = 0;

    bool operator==(const CorpusCounts&) const = default;
};

/// Read-only corpus. Documents are kept in canonical title order; lookups never
/// mutate, so a built corpus may be shared across threads without locking.
class Corpus {
public:
    Corpus() = default;

    /// Validates and indexes `documents`. Throws DataError on duplicate titles.
    static Corpus from_documents(std::vector<Document> documents) {
        Corpus corpus;
        std::sort(documents.begin(), documents.end(),
                  [](const Document& a, const Document& b) { return a.title < b.title; });
        for (std::size_t i = 1; i < documents.size(); ++i) {
            if (documents[i].title == documents[i - 1].title)
                throw DataError("duplicate document title: " + documents[i].title.str());
        }
        corpus.docs_ = std::move(documents);
        for (std::size_t i = 0; i < corpus.docs_.size(); ++i) {
            auto& doc = corpus.docs_[i];
            corpus.by_title_.emplace(doc.title, i);
            std::sort(doc.paragraphs.begin(), doc.paragraphs.end(),
                      [](const ParagraphRecord& a, const ParagraphRecord& b) {
                          return a.para_index < b.para_index;
                      });
            corpus.counts_.paragraphs += doc.paragraphs.size();
            for (const auto& p : doc.paragraphs) corpus.counts_.sentences += p.sentences.size();
        }
        corpus.counts_.documents = corpus.docs_.size();
        return corpus;
    }

    const CorpusCounts& counts() const noexcept { return counts_; }
    std::span<const Document> documents() const noexcept { return docs_; }
    bool empty() const noexcept { return docs_.empty(); }

    const Document* find(const DocumentTitle& title) const {
        auto it = by_title_.find(title);
        return it == by_title_.end() ? nullptr : &docs_[it->second];
    }

    bool contains(const DocumentTitle& title) const { return by_title_.count(title) != 0; }

    const Document& document(const DocumentTitle& title) const {
        const auto* doc = find(title);
        if (doc == nullptr)
            throw NotFoundError(NotFoundError::Key::title, "unknown title: " + title.str());
        return *doc;
    }

    const ParagraphRecord& get_paragraph(const DocumentTitle& title, std::int64_t para_index) const {
        if (para_index < 0)
            throw PreconditionError("negative paragraph index " + std::to_string(para_index));
        const auto& doc = document(title);
        auto it = std::lower_bound(
            doc.paragraphs.begin(), doc.paragraphs.end(), para_index,
            [](const ParagraphRecord& p, std::int64_t i) { return p.para_index < i; });
        if (it == doc.paragraphs.end() || it->para_index != para_index)
            throw NotFoundError(NotFoundError::Key::paragraph_index,
                                "no paragraph " + std::to_string(para_index) + " in " + title.str());
        return *it;
    }

    const ParagraphRecord& get_paragraph(const ParagraphId& id) const {
        return get_paragraph(id.title, id.para_index);
    }

    /// Paragraph owning the sentence; throws NotFoundError when unresolvable.
    const ParagraphRecord& paragraph_of(const SentenceId& id) const {
        if (id.sent_index < 0)
            throw PreconditionError("negative sentence index " + std::to_string(id.sent_index));
        const auto& doc = document(id.title);
        for (const auto& p : doc.paragraphs) {
            if (p.sentences.empty()) continue;
            if (id.sent_index >= p.sentences.front().index && id.sent_index <= p.sentences.back().index) {
                auto it = std::lower_bound(
                    p.sentences.begin(), p.sentences.end(), id.sent_index,
                    [](const Sentence& s, std::int64_t i) { return s.index < i; });
                if (it != p.sentences.end() && it->index == id.sent_index) return p;
            }
        }
        throw NotFoundError(NotFoundError::Key::sentence_index,
                            "no sentence " + std::to_string(id.sent_index) + " in " + id.title.str());
    }

    const std::string& resolve_sentence(const SentenceId& id) const {
        const auto& p = paragraph_of(id);
        auto it = std::lower_bound(p.sentences.begin(), p.sentences.end(), id.sent_index,
                                   [](const Sentence& s, std::int64_t i) { return s.index < i; });
        return it->text;
    }

    bool has_sentence(const SentenceId& id) const {
        if (id.sent_index < 0 || !contains(id.title)) return false;
        try {
            paragraph_of(id);
            return true;
        } catch (const NotFoundError&) {
            return false;
        }
    }

private:
    std::vector<Document> docs_;
    std::unordered_map<DocumentTitle, std::size_t> by_title_;
    CorpusCounts counts_;
};

enum class CorpusFormat { fever_wiki, hotpot_wiki, plain_jsonl };

inline CorpusFormat parse_corpus_format(std::string_view name) {
    if (name == "fever_wiki") return CorpusFormat::fever_wiki;
    if (name == "hotpot_wiki") return CorpusFormat::hotpot_wiki;
    if (name == "plain_jsonl") return CorpusFormat::plain_jsonl;
    throw PreconditionError("unknown corpus format: " + std::string(name));
}

namespace detail {

inline std::string percent_decode(std::string_view in) {
    auto hex = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    std::string out;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == '%' && i + 2 < in.size()) {
            const int hi = hex(in[i + 1]);
            const int lo = hex(in[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>(hi * 16 + lo));
                i += 2;
                continue;
            }
        }
        out.push_back(in[i]);
    }
    return out;
}

/// Removes `<a href="target">anchor</a>` markup, keeping the anchor text, and
/// appends each decoded target to `links`.
inline std::string strip_anchors(std::string_view in, std::vector<std::string>& links) {
    std::string out;
    std::size_t i = 0;
    while (i < in.size()) {
        if (in.compare(i, 3, "<a ") == 0) {
            const auto close = in.find('>', i);
            if (close == std::string_view::npos) break;
            const auto tag = in.substr(i, close - i);
            const auto href = tag.find("href=\"");
            if (href != std::string_view::npos) {
                const auto start = href + 6;
                const auto end = tag.find('"', start);
                if (end != std::string_view::npos)
                    links.push_back(percent_decode(tag.substr(start, end - start)));
            }
            i = close + 1;
            continue;
        }
        if (in.compare(i, 4, "</a>") == 0) {
            i += 4;
            continue;
        }
        out.push_back(in[i]);
        ++i;
    }
    if (i < in.size()) out.append(in.substr(i));
    return out;
}

inline std::vector<DocumentTitle> canonical_links(const std::vector<std::string>& raw,
                                                  const DocumentTitle& self) {
    std::vector<DocumentTitle> out;
    for (const auto& r : raw) {
        auto canon = DocumentTitle::canonicalize(r);
        if (canon.empty()) continue;
        DocumentTitle t(canon);
        if (t != self) out.push_back(std::move(t));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline bool all_blank(const std::vector<Sentence>& sentences) {
    return std::all_of(sentences.begin(), sentences.end(),
                       [](const Sentence& s) { return s.text.empty(); });
}

inline const nlohmann::json& require_field(const nlohmann::json& obj, const char* name,
                                           std::size_t line) {
    auto it = obj.find(name);
    if (it == obj.end()) throw ParseError(std::string("missing field \"") + name + "\"", line);
    return *it;
}

inline std::optional<Document> parse_fever_record(const nlohmann::json& obj, std::size_t line) {
    const auto& id = require_field(obj, "id", line);
    const auto& lines = require_field(obj, "lines", line);
    if (!id.is_string() || !lines.is_string()) throw ParseError("\"id\" and \"lines\" must be strings", line);
    const auto raw_title = id.get<std::string>();
    const auto raw_lines = lines.get<std::string>();
    if (DocumentTitle::canonicalize(raw_title).empty()) {
        // The official dump opens with an empty-id placeholder record.
        if (raw_lines.empty()) return std::nullopt;
        throw ParseError("empty title with non-empty lines", line);
    }
    Document doc{DocumentTitle(raw_title), {}};
    ParagraphRecord para{doc.title, 0, {}, {}};
    std::istringstream stream(raw_lines);
    std::string row;
    while (std::getline(stream, row)) {
        if (row.empty()) continue;
        const auto tab = row.find('\t');
        const std::string number = row.substr(0, tab);
        std::uint32_t index = 0;
        try {
            std::size_t used = 0;
            const long long parsed = std::stoll(number, &used);
            if (used != number.size() || parsed < 0) throw std::invalid_argument(number);
            index = static_cast<std::uint32_t>(parsed);
        } catch (const std::exception&) {
            throw ParseError("sentence line without a numeric index: \"" + number + "\"", line);
        }
        std::string sentence;
        if (tab != std::string::npos) {
            const auto next = row.find('\t', tab + 1);
            sentence = row.substr(tab + 1, next == std::string::npos ? std::string::npos : next - tab - 1);
        }
        if (!para.sentences.empty() && index <= para.sentences.back().index)
            throw ParseError("sentence indices must increase", line);
        const std::uint32_t expected = para.sentences.empty() ? 0 : para.sentences.back().index + 1;
        for (std::uint32_t gap = expected; gap < index; ++gap) para.sentences.push_back({gap, ""});
        para.sentences.push_back({index, std::move(sentence)});
    }
    if (!para.sentences.empty() && !all_blank(para.sentences)) doc.paragraphs.push_back(std::move(para));
    return doc;
}

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* what, std::size_t line) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be a list", line);
    std::vector<std::string> out;
    for (const auto& item : j) {
        if (!item.is_string()) throw ParseError(std::string(what) + " entries must be strings", line);
        out.push_back(item.get<std::string>());
    }
    return out;
}

inline Document parse_hotpot_record(const nlohmann::json& obj, std::size_t line) {
    const auto& title = require_field(obj, "title", line);
    const auto& text = require_field(obj, "text", line);
    if (!title.is_string()) throw ParseError("\"title\" must be a string", line);
    if (!text.is_array()) throw ParseError("\"text\" must be a list of paragraphs", line);
    if (DocumentTitle::canonicalize(title.get<std::string>()).empty())
        throw ParseError("empty title", line);
    Document doc{DocumentTitle(title.get<std::string>()), {}};

    std::vector<std::vector<std::string>> per_paragraph_links(text.size());
    if (auto links = obj.find("links"); links != obj.end() && !links->is_null()) {
        if (!links->is_array()) throw ParseError("\"links\" must be a list", line);
        const bool nested = std::any_of(links->begin(), links->end(),
                                        [](const nlohmann::json& e) { return e.is_array(); });
        if (nested) {
            if (links->size() > text.size())
                throw ParseError("more link lists than paragraphs", line);
            for (std::size_t i = 0; i < links->size(); ++i)
                per_paragraph_links[i] = string_list((*links)[i], "links", line);
        } else if (!text.empty()) {
            per_paragraph_links[0] = string_list(*links, "links", line);
        }
    }

    std::uint32_t next_sentence = 0;
    for (std::size_t p = 0; p < text.size(); ++p) {
        const auto sentences = string_list(text[p], "paragraph", line);
        ParagraphRecord para{doc.title, static_cast<std::uint32_t>(p), {}, {}};
        auto& raw_links = per_paragraph_links[p];
        for (const auto& s : sentences) para.sentences.push_back({next_sentence++, strip_anchors(s, raw_links)});
        para.hyperlinks = canonical_links(raw_links, doc.title);
        if (!para.sentences.empty() && !all_blank(para.sentences)) doc.paragraphs.push_back(std::move(para));
    }
    return doc;
}

inline Document parse_plain_record(const nlohmann::json& obj, std::size_t line) {
    const auto& title = require_field(obj, "title", line);
    const auto& paragraphs = require_field(obj, "paragraphs", line);
    if (!title.is_string()) throw ParseError("\"title\" must be a string", line);
    if (!paragraphs.is_array()) throw ParseError("\"paragraphs\" must be a list", line);
    if (DocumentTitle::canonicalize(title.get<std::string>()).empty())
        throw ParseError("empty title", line);
    Document doc{DocumentTitle(title.get<std::string>()), {}};
    std::uint32_t next_sentence = 0;
    std::uint32_t next_para = 0;
    for (const auto& p : paragraphs) {
        if (!p.is_object()) throw ParseError("paragraph must be an object", line);
        ParagraphRecord para{doc.title, p.value("para_index", next_para), {}, {}};
        next_sentence = p.value("first_sentence_index", next_sentence);
        for (auto& s : string_list(require_field(p, "sentences", line), "sentences", line))
            para.sentences.push_back({next_sentence++, std::move(s)});
        std::vector<std::string> links;
        if (auto l = p.find("links"); l != p.end()) links = string_list(*l, "links", line);
        para.hyperlinks = canonical_links(links, doc.title);
        next_para = para.para_index + 1;
        if (!doc.paragraphs.empty() && para.para_index <= doc.paragraphs.back().para_index)
            throw ParseError("paragraph indices must increase", line);
        if (!para.sentences.empty() && !all_blank(para.sentences)) doc.paragraphs.push_back(std::move(para));
    }
    return doc;
}

}  // namespace detail

/// Parses one JSON-lines stream in the given format. Blank lines are skipped.
inline std::vector<Document> parse_corpus_stream(std::istream& in, CorpusFormat format) {
    std::vector<Document> docs;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line);
        }
        if (!obj.is_object()) throw ParseError("record must be a JSON object", line);
        switch (format) {
            case CorpusFormat::fever_wiki:
                if (auto doc = detail::parse_fever_record(obj, line)) docs.push_back(std::move(*doc));
                break;
            case CorpusFormat::hotpot_wiki:
                docs.push_back(detail::parse_hotpot_record(obj, line));
                break;
            case CorpusFormat::plain_jsonl:
                docs.push_back(detail::parse_plain_record(obj, line));
                break;
        }
    }
    return docs;
}

/// Ingests one or more source files into a corpus.
inline Corpus ingest_corpus(std::span<const std::filesystem::path> sources, CorpusFormat format) {
    std::vector<Document> docs;
    for (const auto& path : sources) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open corpus source " + path.string());
        try {
            auto part = parse_corpus_stream(in, format);
            std::move(part.begin(), part.end(), std::back_inserter(docs));
        } catch (const ParseError& e) {
            throw ParseError(path.string() + ": " + e.what());
        }
    }
    return Corpus::from_documents(std::move(docs));
}

inline Corpus ingest_corpus(const std::filesystem::path& source, CorpusFormat format) {
    return ingest_corpus(std::span<const std::filesystem::path>(&source, 1), format);
}

inline nlohmann::json to_plain_json(const Document& doc) {
    nlohmann::json paragraphs = nlohmann::json::array();
    for (const auto& p : doc.paragraphs) {
        nlohmann::json sentences = nlohmann::json::array();
        for (const auto& s : p.sentences) sentences.push_back(s.text);
        nlohmann::json links = nlohmann::json::array();
        for (const auto& l : p.hyperlinks) links.push_back(l.str());
        paragraphs.push_back({{"para_index", p.para_index},
                              {"first_sentence_index", p.sentences.front().index},
                              {"sentences", std::move(sentences)},
                              {"links", std::move(links)}});
    }
    return {{"title", doc.title.str()}, {"paragraphs", std::move(paragraphs)}};
}

/// Writes the corpus in the normalized plain_jsonl format.
inline void write_plain_jsonl(const Corpus& corpus, std::ostream& out) {
    for (const auto& doc : corpus.documents()) out << to_plain_json(doc).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Binary store: magic header followed by append-only [u32 size][payload]
// document records. Opening scans the records to rebuild title -> offset.

inline constexpr std::string_view kCorpusStoreMagic{"MRSCORP\x01", 8};

namespace detail {

inline std::string encode_document(const Document& doc) {
    BinaryWriter w;
    w.put_string(doc.title.str());
    w.put(static_cast<std::uint32_t>(doc.paragraphs.size()));
    for (const auto& p : doc.paragraphs) {
        w.put(p.para_index);
        w.put(static_cast<std::uint32_t>(p.sentences.size()));
        for (const auto& s : p.sentences) {
            w.put(s.index);
            w.put_string(s.text);
        }
        w.put(static_cast<std::uint32_t>(p.hyperlinks.size()));
        for (const auto& l : p.hyperlinks) w.put_string(l.str());
    }
    return w.take();
}

inline Document decode_document(std::string_view payload) {
    BinaryReader r(payload);
    Document doc{DocumentTitle(r.get_string()), {}};
    const auto n_paragraphs = r.get<std::uint32_t>();
    for (std::uint32_t i = 0; i < n_paragraphs; ++i) {
        ParagraphRecord p{doc.title, r.get<std::uint32_t>(), {}, {}};
        const auto n_sentences = r.get<std::uint32_t>();
        for (std::uint32_t j = 0; j < n_sentences; ++j) {
            const auto index = r.get<std::uint32_t>();
            p.sentences.push_back({index, r.get_string()});
        }
        const auto n_links = r.get<std::uint32_t>();
        for (std::uint32_t j = 0; j < n_links; ++j) p.hyperlinks.emplace_back(r.get_string());
        doc.paragraphs.push_back(std::move(p));
    }
    if (!r.done()) throw ParseError("trailing bytes in document record");
    return doc;
}

}  // namespace detail

/// Appends document records to a store file, creating it with a header if needed.
class CorpusStoreWriter {
public:
    explicit CorpusStoreWriter(const std::filesystem::path& path) {
        const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
        out_.open(path, std::ios::binary | std::ios::app);
        if (!out_) throw DataError("cannot open corpus store for writing: " + path.string());
        if (fresh) out_.write(kCorpusStoreMagic.data(), kCorpusStoreMagic.size());
    }

    void append(const Document& doc) {
        const auto payload = detail::encode_document(doc);
        const auto size = static_cast<std::uint32_t>(payload.size());
        out_.write(reinterpret_cast<const char*>(&size), sizeof(size));
        out_.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!out_) throw DataError("write to corpus store failed");
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline void save_corpus_store(const Corpus& corpus, const std::filesystem::path& path) {
    std::filesystem::remove(path);
    CorpusStoreWriter writer(path);
    for (const auto& doc : corpus.documents()) writer.append(doc);
    writer.flush();
}

/// Title -> byte offset of each record, rebuilt by scanning the store.
inline std::unordered_map<DocumentTitle, std::uint64_t> scan_corpus_store(std::string_view bytes) {
    if (bytes.substr(0, kCorpusStoreMagic.size()) != kCorpusStoreMagic)
        throw ParseError("not a corpus store (bad magic)");
    std::unordered_map<DocumentTitle, std::uint64_t> offsets;
    std::size_t pos = kCorpusStoreMagic.size();
    while (pos < bytes.size()) {
        if (bytes.size() - pos < sizeof(std::uint32_t)) throw ParseError("truncated corpus store");
        std::uint32_t size = 0;
        std::memcpy(&size, bytes.data() + pos, sizeof(size));
        const auto record = pos + sizeof(size);
        if (bytes.size() - record < size) throw ParseError("truncated corpus store record");
        detail::BinaryReader r(bytes.substr(record, size));
        DocumentTitle title(r.get_string());
        if (!offsets.emplace(title, pos).second)
            throw DataError("duplicate document title in store: " + title.str());
        pos = record + size;
    }
    return offsets;
}

inline Corpus open_corpus_store(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open corpus store " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto offsets = scan_corpus_store(bytes);
    std::vector<Document> docs;
    docs.reserve(offsets.size());
    for (const auto& [title, offset] : offsets) {
        std::uint32_t size = 0;
        std::memcpy(&size, bytes.data() + offset, sizeof(size));
        docs.push_back(detail::decode_document(std::string_view(bytes).substr(offset + sizeof(size), size)));
    }
    return Corpus::from_documents(std::move(docs));
}

}  // namespace mrs
