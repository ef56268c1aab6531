#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qppbench/corpus.hpp"
#include "qppbench/retrieval.hpp"

namespace qppbench {

enum class QppMethod { AvgIdf, Clarity, Nqc, Wig, UefClarity, UefNqc, UefWig };

std::string method_name(QppMethod m);
QppMethod parse_method(std::string_view name);

/// Hyperparameters; each method reads the fields it uses (k for NQC/WIG,
/// fb_docs/fb_terms for Clarity and UEF, both for UEF over NQC/WIG).
struct QppParams {
    int k = 100;
    int fb_docs = 10;
    int fb_terms = 100;

    bool operator==(const QppParams&) const = default;
};

/// Parses "nqc", "nqc(k=50)", "clarity(fb_docs=10,fb_terms=100)",
/// "uef-nqc(k=100,fb_docs=25,fb_terms=50)".
std::pair<QppMethod, QppParams> parse_method_spec(std::string_view spec);

struct QppScore {
    std::string query_id;
    std::string method;
    double raw = 0.0;
    std::optional<double> normalized; // in [0,1], set by normalize_scores
};

/// Mean ln(N/df) over query terms with df > 0; 0 when no query term is indexed.
double avg_idf(const Query& query, const Index& index);

/// RM1 feedback distribution over the top fb_docs documents, truncated to the
/// fb_terms most probable terms and renormalized.
struct RelevanceModel {
    std::vector<std::pair<TermId, double>> probs; // probability descending
    int fb_docs = 0;
    int fb_terms = 0;
};

/// P(w|R) proportional to sum over feedback docs of P(w|d) * P(q|d), where
/// P(w|d) is the maximum-likelihood document model and P(q|d) comes from the
/// LM-Dirichlet score of the query against d with the given mu.
RelevanceModel relevance_model(const RankedList& ranked, const Index& index, const Query& query,
                               int fb_docs, int fb_terms, double mu);

/// KL divergence (log base 2) between the relevance model and the collection
/// language model, over the model's retained terms.
double clarity_from_model(const RelevanceModel& rm, const Index& index);
double clarity(const Query& query, const RankedList& ranked, const Index& index, int fb_docs,
               int fb_terms, double mu);

/// NQC: std dev of the top-k scores over |collection score|. Fewer than two
/// entries yields 0; a zero collection score is an error.
double nqc(const RankedList& ranked, double coll_score, int k);
double nqc(const Query& query, const RankedList& ranked, const Index& index,
           const RetrievalModel& model, int k);

/// WIG: mean excess of the top-k scores over the collection score, scaled by
/// 1/sqrt(|q|). An empty query is an error.
double wig(const RankedList& ranked, double coll_score, std::size_t query_len, int k);
double wig(const Query& query, const RankedList& ranked, const Index& index,
           const RetrievalModel& model, int k);

/// Kendall tau between the given ranking and its re-ranking by relevance
/// model likelihood (Dirichlet-smoothed document models). 1.0 for lists
/// shorter than two entries.
double rerank_similarity(const RankedList& ranked, const Index& index, const RelevanceModel& rm,
                         double mu);

/// UEF(base): rerank_similarity times the base predictor value. base must be
/// Clarity, Nqc or Wig.
double uef(const Query& query, const RankedList& ranked, const Index& index,
           const RetrievalModel& model, QppMethod base, const QppParams& params, double mu);

/// Min-max normalization over the given score set; all-equal raw scores map
/// to 0.5. Order-preserving, so rank-based evaluation is unaffected.
std::vector<QppScore> normalize_scores(std::vector<QppScore> scores);

/// QPP score TSV: header then "query_id<TAB>method<TAB>raw_score".
void write_qpp_scores(const std::string& path, const std::vector<QppScore>& scores);
std::vector<QppScore> read_qpp_scores(const std::string& path, bool normalize = false);

} // namespace qppbench
