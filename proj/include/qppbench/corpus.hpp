#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace qppbench {

struct Document {
    std::string doc_id;
    std::string text;
};

struct Query {
    std::string query_id;
    std::string text;
    std::vector<std::string> terms; // produced by the same tokenizer as documents
};

struct TokenizerConfig {
    std::unordered_set<std::string> stopwords; // matched after lowercasing
};

/// Lowercase, split on any non-alphanumeric byte, drop empty tokens and stopwords.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg = {});

using TermId = std::uint32_t;
using DocIdx = std::uint32_t;

struct Posting {
    DocIdx doc;
    std::uint32_t tf;
};

/// Immutable in-memory inverted index with the collection statistics the
/// retrieval models and predictors need. Documents are stored sorted by
/// doc_id, so DocIdx order and doc_id order coincide and the built index is
/// independent of corpus file order.
class Index {
public:
    std::size_t num_docs() const { return doc_ids_.size(); }
    std::uint64_t total_len() const { return total_len_; }
    double avg_doc_len() const {
        return doc_ids_.empty() ? 0.0 : static_cast<double>(total_len_) / num_docs();
    }

    const std::string& doc_id(DocIdx d) const { return doc_ids_[d]; }
    std::uint32_t doc_len(DocIdx d) const { return doc_lens_[d]; }
    std::optional<DocIdx> find_doc(std::string_view doc_id) const;

    std::size_t vocab_size() const { return terms_.size(); }
    std::optional<TermId> term(std::string_view text) const;
    const std::string& term_text(TermId t) const { return terms_[t]; }

    std::uint32_t df(TermId t) const { return static_cast<std::uint32_t>(postings_[t].size()); }
    std::uint64_t cf(TermId t) const { return cfs_[t]; }
    std::uint32_t df(std::string_view term) const;
    std::uint64_t cf(std::string_view term) const;

    /// cf(term)/total_len; 0 for unseen terms. Throws on an empty collection.
    double collection_prob(std::string_view term) const;
    double collection_prob(TermId t) const;

    std::span<const Posting> postings(TermId t) const { return postings_[t]; }

    /// Forward index: the distinct terms of a document with their tf,
    /// ordered by TermId.
    std::span<const std::pair<TermId, std::uint32_t>> doc_terms(DocIdx d) const {
        return fwd_[d];
    }

private:
    friend Index build_index(std::vector<Document> docs, const TokenizerConfig& cfg);

    std::vector<std::string> doc_ids_; // ascending
    std::vector<std::uint32_t> doc_lens_;
    std::uint64_t total_len_ = 0;
    std::vector<std::string> terms_; // TermId -> text
    std::unordered_map<std::string, TermId> term_lookup_;
    std::unordered_map<std::string, DocIdx> doc_lookup_;
    std::vector<std::vector<Posting>> postings_; // TermId -> postings, doc ascending
    std::vector<std::uint64_t> cfs_;
    std::vector<std::vector<std::pair<TermId, std::uint32_t>>> fwd_;
};

/// Build an index over the given documents. Rejects duplicate doc_ids and
/// empty doc_ids. Deterministic: the result does not depend on input order.
Index build_index(std::vector<Document> docs, const TokenizerConfig& cfg = {});

/// Corpus readers. JSON-lines: one object per line with string fields
/// "doc_id" and "text". TSV: doc_id<TAB>text. read_corpus sniffs the format
/// from the first non-blank character ('{' means JSONL).
std::vector<Document> read_corpus_jsonl(const std::string& path);
std::vector<Document> read_corpus_tsv(const std::string& path);
std::vector<Document> read_corpus(const std::string& path);

/// Topics: two-column TSV (query_id, text). Terms are tokenized with cfg.
std::vector<Query> read_topics_tsv(const std::string& path, const TokenizerConfig& cfg = {});

/// Stopword file: one token per line, applied post-lowercasing.
std::unordered_set<std::string> read_stopwords(const std::string& path);

} // namespace qppbench
