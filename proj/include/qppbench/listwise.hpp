#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qppbench {

/// Query ids ordered by value descending, ties broken by id ascending.
struct QueryRanking {
    std::vector<std::string> ids;
};

QueryRanking rank_queries(const std::map<std::string, double>& values);

/// Correlations return nullopt on degenerate (all-tied / zero-variance)
/// input rather than 0 or NaN, so split aggregation can exclude and count
/// such outcomes explicitly. Inputs must have equal length >= 2.

/// Kendall tau-b: (C - D)/sqrt((C+D+Tx)(C+D+Ty)), pairs tied in both
/// sequences contribute nowhere. Computed in O(n log n) by merge-sort
/// inversion counting with tie corrections.
std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y);

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y);

/// Spearman rho: Pearson over average fractional ranks.
std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y);

/// 1-based average fractional ranks (ties share the mean of their positions).
std::vector<double> fractional_ranks(std::span<const double> v);

struct SareResult {
    std::vector<std::pair<std::string, double>> per_query; // (query_id, 1 - sARE)
    double mean = 0.0;
};

/// Per query, sARE = |rank_phi - rank_mu| / |Q| using competition-free
/// ordinal ranks from rank_queries. Returns 1 - sARE per query and the mean.
/// Throws if the two rankings cover different query sets.
SareResult one_minus_sare(const QueryRanking& ranking_mu, const QueryRanking& ranking_phi);

/// Kendall tau between two orderings of the same id set (never degenerate
/// for n >= 2 since rank positions are permutations).
double kendall_between_rankings(const QueryRanking& a, const QueryRanking& b);

} // namespace qppbench
