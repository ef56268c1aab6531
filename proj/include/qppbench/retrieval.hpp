#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "qppbench/corpus.hpp"

namespace qppbench {

enum class ModelKind { BM25, LMDirichlet, LMJelinekMercer };

/// A retrieval model with validated parameters. Construct through the
/// factories or parse_model; the params outside their stated ranges throw.
struct RetrievalModel {
    ModelKind kind = ModelKind::BM25;
    double k1 = 0.0;     // BM25
    double b = 0.0;      // BM25
    double mu = 0.0;     // LMDirichlet
    double lambda = 0.0; // LMJelinekMercer

    static RetrievalModel bm25(double k1, double b);
    static RetrievalModel lm_dirichlet(double mu);
    static RetrievalModel lm_jelinek_mercer(double lambda);

    /// Canonical name, e.g. "bm25(0.7,0.3)", "lmdir(1000)", "lmjm(0.6)".
    std::string name() const;
};

/// Parses "bm25(0.7,0.3)", "lmdir(1000)" or "lmjm(0.6)". A bare model name
/// uses the defaults bm25(0.9,0.4), lmdir(1000), lmjm(0.6).
RetrievalModel parse_model(std::string_view spec);

struct ScoredDoc {
    std::string doc_id;
    double score;
};

/// The top-k list for one query under one model: scores non-increasing,
/// ties broken by doc_id ascending, doc_ids unique.
struct RankedList {
    std::string query_id;
    std::string model; // model tag, e.g. "bm25(0.7,0.3)"; run tag after read_run
    std::vector<ScoredDoc> entries;
};

/// Score one document for a query. Unknown doc_id throws.
double score(const RetrievalModel& model, const Index& index, const Query& query, DocIdx doc);
double score(const RetrievalModel& model, const Index& index, const Query& query,
             const std::string& doc_id);

/// Top-k retrieval over the candidate set of documents sharing at least one
/// query term. Fewer than k candidates yields a shorter list.
RankedList retrieve_topk(const RetrievalModel& model, const Index& index, const Query& query,
                         std::size_t k);

/// The model's score of the query against the whole collection treated as a
/// single document (tf = cf, dl = total_len, avgdl unchanged).
double collection_score(const RetrievalModel& model, const Index& index, const Query& query);

/// TREC run format: "qid Q0 docid rank score tag". Scores are printed with
/// shortest round-trip formatting so write/read composes exactly.
void write_run(std::ostream& out, const std::vector<RankedList>& runs, const std::string& tag);
void write_run(const std::string& path, const std::vector<RankedList>& runs,
               const std::string& tag);

/// Parses a run file; ranks must be 1..n contiguous per query. Malformed
/// lines are reported with their line number.
std::vector<RankedList> read_run(std::istream& in, const std::string& path_for_errors = "<run>");
std::vector<RankedList> read_run(const std::string& path);

} // namespace qppbench
