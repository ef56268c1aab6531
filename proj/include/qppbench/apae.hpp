#pragma once

#include <map>
#include <string>
#include <vector>

#include "qppbench/ir_metrics.hpp"

namespace qppbench {

enum class Aggregator { Avg, Min, Max };

std::string aggregator_name(Aggregator a);
Aggregator parse_aggregator(std::string_view name);

struct ApaeResult {
    std::string method;
    Aggregator aggregator = Aggregator::Avg;
    std::map<std::string, double> per_query; // query_id -> agreement in [0,1]
    double mean = 0.0;
};

/// Pointwise agreement 1 - |mu - phi| between a metric value and a normalized
/// QPP score, both in [0,1]; out-of-range input is an error.
double pointwise_agreement(double mu_value, double phi_normalized);

/// Per-query agreement against a single metric, averaged over the query set.
/// Both maps must cover the same non-empty query set.
ApaeResult apae_single_metric(const std::map<std::string, double>& mu,
                              const std::map<std::string, double>& phi_normalized);

/// Per query: agreement against each metric in the set, combined with the
/// aggregator, then averaged over queries. Every metric must cover the full
/// query set.
ApaeResult apae_multi_metric(const std::map<MetricId, std::map<std::string, double>>& mus,
                             const std::map<std::string, double>& phi_normalized,
                             Aggregator aggregator);

} // namespace qppbench
