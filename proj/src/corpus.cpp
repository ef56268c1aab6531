#include "qppbench/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace qppbench {

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            if (!cfg.stopwords.count(cur)) tokens.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty() && !cfg.stopwords.count(cur)) tokens.push_back(std::move(cur));
    return tokens;
}

std::optional<DocIdx> Index::find_doc(std::string_view doc_id) const {
    auto it = doc_lookup_.find(std::string(doc_id));
    if (it == doc_lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<TermId> Index::term(std::string_view text) const {
    auto it = term_lookup_.find(std::string(text));
    if (it == term_lookup_.end()) return std::nullopt;
    return it->second;
}

std::uint32_t Index::df(std::string_view term_text) const {
    auto t = term(term_text);
    return t ? df(*t) : 0;
}

std::uint64_t Index::cf(std::string_view term_text) const {
    auto t = term(term_text);
    return t ? cf(*t) : 0;
}

double Index::collection_prob(TermId t) const {
    if (total_len_ == 0) throw std::runtime_error("collection_prob: empty collection");
    return static_cast<double>(cfs_[t]) / static_cast<double>(total_len_);
}

double Index::collection_prob(std::string_view term_text) const {
    if (total_len_ == 0) throw std::runtime_error("collection_prob: empty collection");
    auto t = term(term_text);
    return t ? collection_prob(*t) : 0.0;
}

Index build_index(std::vector<Document> docs, const TokenizerConfig& cfg) {
    std::sort(docs.begin(), docs.end(),
              [](const Document& a, const Document& b) { return a.doc_id < b.doc_id; });
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (docs[i].doc_id.empty()) throw std::runtime_error("build_index: empty doc_id");
        if (i > 0 && docs[i].doc_id == docs[i - 1].doc_id)
            throw std::runtime_error("build_index: duplicate doc_id '" + docs[i].doc_id + "'");
    }

    Index idx;
    idx.doc_ids_.reserve(docs.size());
    idx.doc_lens_.reserve(docs.size());
    idx.fwd_.reserve(docs.size());

    for (DocIdx d = 0; d < docs.size(); ++d) {
        const auto tokens = tokenize(docs[d].text, cfg);
        idx.doc_ids_.push_back(docs[d].doc_id);
        idx.doc_lens_.push_back(static_cast<std::uint32_t>(tokens.size()));
        idx.total_len_ += tokens.size();
        idx.doc_lookup_.emplace(docs[d].doc_id, d);

        // tf per distinct term, ordered by TermId
        std::map<TermId, std::uint32_t> tfs;
        for (const auto& tok : tokens) {
            auto [it, inserted] = idx.term_lookup_.emplace(tok, static_cast<TermId>(idx.terms_.size()));
            if (inserted) {
                idx.terms_.push_back(tok);
                idx.postings_.emplace_back();
                idx.cfs_.push_back(0);
            }
            ++tfs[it->second];
        }
        auto& fwd = idx.fwd_.emplace_back();
        fwd.reserve(tfs.size());
        for (const auto& [t, tf] : tfs) {
            idx.postings_[t].push_back(Posting{d, tf});
            idx.cfs_[t] += tf;
            fwd.emplace_back(t, tf);
        }
    }
    return idx;
}

namespace {

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    return in;
}

[[noreturn]] void line_error(const std::string& path, std::size_t lineno, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + what);
}

bool blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

} // namespace

std::vector<Document> read_corpus_jsonl(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            line_error(path, lineno, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("doc_id") || !obj["doc_id"].is_string() ||
            !obj.contains("text") || !obj["text"].is_string())
            line_error(path, lineno, "expected object with string fields 'doc_id' and 'text'");
        docs.push_back(Document{obj["doc_id"].get<std::string>(), obj["text"].get<std::string>()});
    }
    return docs;
}

std::vector<Document> read_corpus_tsv(const std::string& path) {
    auto in = open_or_throw(path);
    std::vector<Document> docs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            line_error(path, lineno, "expected doc_id<TAB>text");
        docs.push_back(Document{line.substr(0, tab), line.substr(tab + 1)});
    }
    return docs;
}

std::vector<Document> read_corpus(const std::string& path) {
    {
        auto in = open_or_throw(path);
        char c;
        while (in.get(c)) {
            if (std::isspace(static_cast<unsigned char>(c))) continue;
            if (c == '{') return read_corpus_jsonl(path);
            break;
        }
    }
    return read_corpus_tsv(path);
}

std::vector<Query> read_topics_tsv(const std::string& path, const TokenizerConfig& cfg) {
    auto in = open_or_throw(path);
    std::vector<Query> queries;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (blank(line)) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            line_error(path, lineno, "expected query_id<TAB>text");
        Query q;
        q.query_id = line.substr(0, tab);
        q.text = line.substr(tab + 1);
        q.terms = tokenize(q.text, cfg);
        if (!seen.insert(q.query_id).second)
            line_error(path, lineno, "duplicate query_id '" + q.query_id + "'");
        queries.push_back(std::move(q));
    }
    return queries;
}

std::unordered_set<std::string> read_stopwords(const std::string& path) {
    auto in = open_or_throw(path);
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
            line.pop_back();
        std::size_t b = 0;
        while (b < line.size() && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
        if (b > 0) line = line.substr(b);
        if (line.empty()) continue;
        std::string lower;
        lower.reserve(line.size());
        for (unsigned char c : line) lower.push_back(static_cast<char>(std::tolower(c)));
        words.insert(std::move(lower));
    }
    return words;
}

} // namespace qppbench
