#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "qppbench/retrieval.hpp"

namespace qppbench {

/// Relevance judgments. Absent (query, doc) pairs have grade 0.
class Qrels {
public:
    void add(const std::string& query_id, const std::string& doc_id, int grade);
    int grade(const std::string& query_id, const std::string& doc_id) const;
    /// Number of docs with grade > 0 for the query.
    std::size_t total_relevant(const std::string& query_id) const;
    /// All judged grades for the query, sorted descending (for IDCG).
    std::vector<int> grades_descending(const std::string& query_id) const;
    bool has_query(const std::string& query_id) const;

    /// TREC qrels format: "qid 0 docid grade", whitespace-separated.
    static Qrels read(const std::string& path);
    void write(const std::string& path) const;

private:
    std::map<std::string, std::map<std::string, int>> by_query_;
};

enum class MetricFamily { AP, NDCG, P, R };

struct MetricId {
    MetricFamily family = MetricFamily::AP;
    int cutoff = 100; // >= 1

    std::string name() const; // "AP@100", "nDCG@10", "P@10", "R@100"
    bool operator==(const MetricId&) const = default;
    bool operator<(const MetricId& o) const {
        if (family != o.family) return family < o.family;
        return cutoff < o.cutoff;
    }
};

/// Parses "AP@100", "nDCG@10", "P@10", "R@100" (family case-insensitive,
/// "recall" accepted as an alias for R).
MetricId parse_metric(std::string_view spec);
std::vector<MetricId> parse_metric_list(std::string_view csv);

struct MetricScore {
    std::string query_id;
    MetricId metric;
    double value; // in [0,1]
};

/// AP@k with the total-relevant denominator; grades binarized at > 0.
double average_precision_at_k(const RankedList& ranked, const Qrels& qrels, int k);
/// nDCG@k with gain = grade and discount 1/log2(i+1); 0 when IDCG = 0.
double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, int k);
/// P@k with denominator k even for short lists.
double precision_at_k(const RankedList& ranked, const Qrels& qrels, int k);
/// R@k with the total-relevant denominator; 0 when nothing is relevant.
double recall_at_k(const RankedList& ranked, const Qrels& qrels, int k);

double eval_metric(const MetricId& metric, const RankedList& ranked, const Qrels& qrels);

/// Per-query metric TSV: header then "query_id<TAB>metric<TAB>value".
void write_metric_scores(const std::string& path, const std::vector<MetricScore>& scores);
std::vector<MetricScore> read_metric_scores(const std::string& path);

} // namespace qppbench
