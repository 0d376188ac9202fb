#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "mrs/corpus.hpp"
#include "mrs/detail/random.hpp"
#include "mrs/downstream.hpp"
#include "mrs/pipeline.hpp"
#include "mrs/query.hpp"
#include "mrs/scoring.hpp"
#include "mrs/term_index.hpp"
#include "mrs/term_retrieval.hpp"

namespace mrs::testing {

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("mrs-test-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

    std::filesystem::path write(const std::string& name, const std::string& content) const {
        auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

inline Document make_doc(const std::string& title, const std::vector<std::vector<std::string>>& paragraphs,
                         const std::vector<std::vector<std::string>>& links = {}) {
    Document d{DocumentTitle(title), {}};
    std::uint32_t next = 0;
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        ParagraphRecord rec{d.title, static_cast<std::uint32_t>(p), {}, {}};
        for (const auto& s : paragraphs[p]) rec.sentences.push_back({next++, s});
        if (p < links.size())
            for (const auto& l : links[p]) rec.hyperlinks.emplace_back(l);
        std::sort(rec.hyperlinks.begin(), rec.hyperlinks.end());
        d.paragraphs.push_back(std::move(rec));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Synthetic multi-hop corpus. Every document has a two-word title, eight topic
// words of its own, a founder name, and two paragraphs. Paragraph 0 links to
// two or three other documents through anchor markup; the manifest records
// the intended link sets so ingestion can be checked against it.

struct SyntheticDoc {
    std::string title;
    std::vector<std::string> topics;
    std::string founder;
    std::vector<std::vector<std::string>> sentences;  ///< per paragraph, markup included
    std::vector<std::set<std::string>> links;         ///< per paragraph
    std::int64_t founder_sentence = 0;                 ///< document-global index
    std::map<std::string, std::int64_t> link_sentence; ///< target -> sentence index
    std::map<std::string, std::string> link_topic;     ///< target -> topic word used
};

struct SyntheticCorpus {
    std::vector<SyntheticDoc> docs;
    std::vector<std::string> hotpot_lines;  ///< hotpot_wiki JSONL records
    Corpus corpus;
    std::vector<Query> hotpot_queries;
    std::vector<Query> fever_queries;
};

namespace detail {

inline std::string capitalize(std::string w) {
    if (!w.empty()) w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

inline std::string url_encode_spaces(const std::string& s) {
    std::string out;
    for (char c : s) out += c == ' ' ? std::string("%20") : std::string(1, c);
    return out;
}

inline std::string strip_markup(const std::string& s) {
    std::vector<std::string> ignored;
    return mrs::detail::strip_anchors(s, ignored);
}

}  // namespace detail

inline SyntheticCorpus make_synthetic_corpus(std::size_t n_docs = 200, std::uint64_t seed = 11,
                                             std::size_t n_queries = 80) {
    std::mt19937_64 rng(seed);
    auto below = [&](std::size_t n) { return static_cast<std::size_t>(mrs::detail::uniform_below(rng, n)); };
    static const char* syllables[] = {"ka", "lo", "mi", "ren", "tu", "vas", "dor", "pel", "qui", "zan",
                                      "bor", "sel", "tik", "nu", "ra", "fe", "gal", "hon", "jo", "mur",
                                      "pix", "wen", "yul", "cor", "das"};
    std::set<std::string> used;
    auto fresh_word = [&] {
        for (;;) {
            std::string w;
            const auto n = 2 + below(2);
            for (std::size_t i = 0; i < n; ++i) w += syllables[below(std::size(syllables))];
            if (used.insert(w).second) return w;
        }
    };
    std::vector<std::string> filler;
    for (int i = 0; i < 30; ++i) filler.push_back(fresh_word());

    SyntheticCorpus out;
    out.docs.resize(n_docs);
    for (auto& d : out.docs) {
        d.title = detail::capitalize(fresh_word()) + " " + detail::capitalize(fresh_word());
        for (int i = 0; i < 8; ++i) d.topics.push_back(fresh_word());
        d.founder = detail::capitalize(fresh_word()) + " " + detail::capitalize(fresh_word());
    }
    auto f = [&] { return filler[below(filler.size())]; };
    for (std::size_t i = 0; i < n_docs; ++i) {
        auto& d = out.docs[i];
        d.sentences.resize(2);
        d.links.resize(2);
        auto& p0 = d.sentences[0];
        std::int64_t index = 0;
        p0.push_back(d.title + " is a " + f() + " " + d.topics[0] + " of the " + d.topics[1] + " " + f() + ".");
        ++index;
        const auto n_links = 2 + below(2);
        std::set<std::size_t> targets;
        while (targets.size() < n_links) {
            const auto t = below(n_docs);
            if (t != i) targets.insert(t);
        }
        std::size_t k = 2;
        for (auto t : targets) {
            const auto& target = out.docs[t].title;
            const auto& topic = d.topics[k++];
            p0.push_back(d.title + " partnered with <a href=\"" + detail::url_encode_spaces(target) + "\">" + target +
                         "</a> on " + topic + " " + f() + ".");
            d.links[0].insert(target);
            d.link_sentence[target] = index++;
            d.link_topic[target] = topic;
        }
        p0.push_back("The founder of the " + d.topics[0] + " " + d.topics[1] + " was " + d.founder + ".");
        d.founder_sentence = index++;
        auto& p1 = d.sentences[1];
        p1.push_back("Its " + d.topics[5] + " " + f() + " " + f() + " grew near " + d.topics[6] + ".");
        p1.push_back("Many " + f() + " " + d.topics[7] + " " + f() + " " + d.topics[5] + " " + f() + ".");
        if (below(3) == 0) {
            const auto t = (i + 1) % n_docs;
            const auto& target = out.docs[t].title;
            if (!d.links[0].count(target)) {
                p1.push_back("See also <a href=\"" + detail::url_encode_spaces(target) + "\">" + target + "</a>.");
                d.links[1].insert(target);
            }
        }
    }

    std::vector<Document> documents;
    for (const auto& d : out.docs) {
        nlohmann::json text = nlohmann::json::array();
        for (const auto& p : d.sentences) text.push_back(p);
        out.hotpot_lines.push_back(nlohmann::json{{"title", d.title}, {"text", text}}.dump());
        std::vector<std::vector<std::string>> plain;
        std::vector<std::vector<std::string>> links;
        for (std::size_t p = 0; p < d.sentences.size(); ++p) {
            std::vector<std::string> ss;
            for (const auto& s : d.sentences[p]) ss.push_back(detail::strip_markup(s));
            plain.push_back(std::move(ss));
            links.emplace_back(d.links[p].begin(), d.links[p].end());
        }
        documents.push_back(make_doc(d.title, plain, links));
    }
    out.corpus = Corpus::from_documents(std::move(documents));

    for (std::size_t q = 0; q < n_queries; ++q) {
        const auto& a = out.docs[below(n_docs)];
        auto it = a.link_sentence.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(below(a.link_sentence.size())));
        const auto& b_title = it->first;
        const auto& b = *std::find_if(out.docs.begin(), out.docs.end(),
                                      [&](const SyntheticDoc& d) { return d.title == b_title; });
        Query query;
        query.id = "h" + std::to_string(q);
        query.task = Task::hotpot;
        query.text = "Who was the founder of the " + b.topics[0] + " " + b.topics[1] + " that partnered with " +
                     a.title + " on " + a.link_topic.at(b_title) + "?";
        query.answer = b.founder;
        query.evidence_groups = {{{DocumentTitle(a.title), it->second}, {DocumentTitle(b.title), b.founder_sentence}}};
        std::sort(query.evidence_groups[0].begin(), query.evidence_groups[0].end());
        out.hotpot_queries.push_back(std::move(query));

        Query claim;
        claim.id = "f" + std::to_string(q);
        claim.task = Task::fever;
        switch (q % 3) {
            case 0:
                claim.text = a.title + " partnered with " + b_title + " on " + a.link_topic.at(b_title) + ".";
                claim.label = Label::supports;
                claim.evidence_groups = {{{DocumentTitle(a.title), it->second}}};
                break;
            case 1:
                claim.text = a.title + " never partnered with " + b_title + " on " + a.link_topic.at(b_title) + ".";
                claim.label = Label::refutes;
                claim.evidence_groups = {{{DocumentTitle(a.title), it->second}}};
                break;
            default:
                claim.text = a.title + " won an award for " + f() + " " + f() + ".";
                claim.label = Label::nei;
                break;
        }
        out.fever_queries.push_back(std::move(claim));
    }
    return out;
}

// ---------------------------------------------------------------------------
// The worked example with the distracting Miami Dolphins sentence.

struct PanthersFixture {
    Corpus corpus;
    TermIndex index;
    Query query;
    std::unique_ptr<TermRetriever> retriever;
    TableScorer paragraph_scores;
    TableScorer sentence_scores;
    OracleReader reader;

    static const std::string& question() {
        static const std::string q = "Wojtek Wolski played for what team based in the Miami metropolitan area?";
        return q;
    }

    PanthersFixture()
        : corpus(Corpus::from_documents({
              make_doc("Florida Panthers",
                       {{"The Florida Panthers are a professional ice hockey team based in the Miami metropolitan area.",
                         "They compete in the Atlantic Division of the Eastern Conference."}}),
              make_doc("Wojtek Wolski",
                       {{"Wojciech Wolski is a Polish-Canadian professional ice hockey winger.",
                         "In the NHL, he has played for the Colorado Avalanche, Phoenix Coyotes, New York Rangers, "
                         "Florida Panthers, and the Washington Capitals."}},
                       {{"Florida Panthers"}}),
              make_doc("History of the Miami Dolphins",
                       {{"The Miami Dolphins are a professional American football franchise based in the Miami "
                         "metropolitan area.",
                         "The team began play in 1966."}}),
          })),
          index(TermIndex::build(corpus, Granularity::document)),
          paragraph_scores({{"Florida Panthers#0", 0.99}, {"Wojtek Wolski#0", 0.98},
                            {"History of the Miami Dolphins#0", 0.56}}),
          sentence_scores({{"Florida Panthers#s0", 0.98}, {"Wojtek Wolski#s1", 0.95},
                           {"History of the Miami Dolphins#s0", 0.97}}),
          reader(std::unordered_map<std::string, std::string>{{"wolski", "Florida Panthers"}}) {
        query.id = "wolski";
        query.task = Task::hotpot;
        query.text = question();
        query.answer = "Florida Panthers";
        query.evidence_groups = {{{DocumentTitle("Florida Panthers"), 0}, {DocumentTitle("Wojtek Wolski"), 1}}};
        retriever = std::make_unique<TermRetriever>(corpus, index);
    }

    PipelineModules modules(const QAReader* r = nullptr) const {
        return {&corpus, retriever.get(), &paragraph_scores, &sentence_scores, r ? r : &reader, nullptr};
    }

    static PipelineConfig config(bool paragraph_stage = true) {
        auto c = PipelineConfig::defaults(Task::hotpot);
        c.k_p = 2;
        c.h_p = 0.0;
        c.stages.paragraph_level = paragraph_stage;
        return c;
    }

    static SentenceId distractor() { return {DocumentTitle("History of the Miami Dolphins"), 0}; }
};

// ---------------------------------------------------------------------------
// Distractor-heavy corpus for the paragraph-stage ablation. Each query names
// two gold documents by title; several distractor documents repeat the
// question's wording sentence by sentence but never its titles. The paragraph
// model keys on the title feature, the sentence model on unigram overlap, so
// distractor sentences pass sentence scoring and fail paragraph scoring.

struct DistractorFixture {
    std::vector<Query> queries;
    std::set<DocumentTitle> distractor_titles;
    Corpus corpus;
    TermIndex index;
    std::unique_ptr<TermRetriever> retriever;
    LexicalScorer paragraph_scorer;
    LexicalScorer sentence_scorer;
    BaselineReader reader;

    static LexicalScorerModel paragraph_model() {
        LexicalScorerModel m;
        m.weights = {0.0, 0.0, 0.0, 0.0, 8.0, 0.0};
        m.bias = -4.0;
        return m;
    }

    static LexicalScorerModel sentence_model() {
        LexicalScorerModel m;
        m.weights = {20.0, 0.0, 0.0, 0.0, 0.0, 0.0};
        m.bias = -4.0;
        return m;
    }

    static std::vector<Document> documents(std::vector<Query>& queries, std::set<DocumentTitle>& distractors) {
        std::vector<Document> docs;
        const std::vector<std::array<std::string, 4>> topics = {
            {"Harbor Lantern", "Quill Meadow", "copper", "lighthouse"},
            {"Amber Ridge", "Velvet Orchard", "cedar", "vineyard"},
            {"Silent Falls", "Crimson Tower", "granite", "observatory"},
            {"Northwind Press", "Saffron Hall", "ivory", "printing"},
            {"Marlow Basin", "Tidewater Guild", "cobalt", "shipyard"},
            {"Ember Fields", "Lowland Choir", "willow", "chapel"},
        };
        for (std::size_t i = 0; i < topics.size(); ++i) {
            const auto& [a, b, material, place] = topics[i];
            docs.push_back(make_doc(a, {{a + " built the " + material + " " + place + " near the coast.",
                                         "Its archives are kept in a separate building.",
                                         "Visitors arrive mostly during the summer months."}}));
            docs.push_back(make_doc(b, {{b + " restored the " + material + " " + place + " after the storm.",
                                         "The restoration took several decades.",
                                         "Local records mention a small museum."}}));
            for (int d = 0; d < 4; ++d) {
                const std::string title = "Regional survey " + std::to_string(i) + "-" + std::to_string(d);
                distractors.insert(DocumentTitle(title));
                docs.push_back(make_doc(title, {{"Someone built the " + material + " " + place + " near the coast.",
                                                 "Another group restored the " + material + " " + place +
                                                     " after the storm.",
                                                 "A " + material + " " + place + " was built and restored."}}));
            }
            Query q;
            q.id = "d" + std::to_string(i);
            q.task = Task::hotpot;
            q.text = "Did " + a + " build the " + material + " " + place + " that " + b + " restored after the storm?";
            q.answer = "yes";
            q.evidence_groups = {{{DocumentTitle(a), 0}, {DocumentTitle(b), 0}}};
            std::sort(q.evidence_groups[0].begin(), q.evidence_groups[0].end());
            queries.push_back(std::move(q));
        }
        return docs;
    }

    DistractorFixture()
        : corpus(Corpus::from_documents(documents(queries, distractor_titles))),
          index(TermIndex::build(corpus, Granularity::document)),
          paragraph_scorer(paragraph_model(), FeatureExtractor(&index)),
          sentence_scorer(sentence_model(), FeatureExtractor(&index)),
          reader(FeatureExtractor(&index)) {
        retriever = std::make_unique<TermRetriever>(corpus, index, TermRetrievalOptions{10, 5, 5});
    }

    PipelineModules modules() const {
        return {&corpus, retriever.get(), &paragraph_scorer, &sentence_scorer, &reader, nullptr};
    }

    static PipelineConfig config() {
        auto c = PipelineConfig::defaults(Task::hotpot);
        c.k_p = 2;
        c.h_p = 0.5;
        c.k_s = 5;
        c.h_s = 0.5;
        return c;
    }
};

// ---------------------------------------------------------------------------
// In-process HTTP server standing in for a remote scorer / reader / verifier.

class MockServer {
public:
    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    MockServer() {
        server_.Get("/health", [this](const httplib::Request& req, httplib::Response& res) {
            ++health_calls_;
            if (health_) return health_(req, res);
            res.set_content(R"({"status": "ok", "model": "mock"})", "application/json");
        });
        server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
            ++score_calls_;
            if (score_) return score_(req, res);
            res.status = 500;
        });
        server_.Post("/qa", [this](const httplib::Request& req, httplib::Response& res) {
            if (qa_) return qa_(req, res);
            res.status = 500;
        });
        server_.Post("/verify", [this](const httplib::Request& req, httplib::Response& res) {
            if (verify_) return verify_(req, res);
            res.status = 500;
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        while (!server_.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }

    ~MockServer() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

    void on_health(Handler h) { health_ = std::move(h); }
    void on_score(Handler h) { score_ = std::move(h); }
    void on_qa(Handler h) { qa_ = std::move(h); }
    void on_verify(Handler h) { verify_ = std::move(h); }

    /// /score answering `value` for every context.
    void score_constant(double value) {
        on_score([value](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json scores = nlohmann::json::array();
            for (std::size_t i = 0; i < body.at("contexts").size(); ++i) scores.push_back(value);
            res.set_content(nlohmann::json{{"scores", scores}}.dump(), "application/json");
        });
    }

    std::size_t score_calls() const { return score_calls_; }
    std::size_t health_calls() const { return health_calls_; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
    Handler health_, score_, qa_, verify_;
    std::atomic<std::size_t> score_calls_{0};
    std::atomic<std::size_t> health_calls_{0};
};

}  // namespace mrs::testing
