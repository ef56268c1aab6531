#include "qppbench/apae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qppbench {

std::string aggregator_name(Aggregator a) {
    switch (a) {
        case Aggregator::Avg: return "avg";
        case Aggregator::Min: return "min";
        case Aggregator::Max: return "max";
    }
    return "?";
}

Aggregator parse_aggregator(std::string_view name) {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "avg") return Aggregator::Avg;
    if (s == "min") return Aggregator::Min;
    if (s == "max") return Aggregator::Max;
    throw std::runtime_error("parse_aggregator: expected avg, min or max, got '" +
                             std::string(name) + "'");
}

double pointwise_agreement(double mu_value, double phi_normalized) {
    if (!(mu_value >= 0.0 && mu_value <= 1.0))
        throw std::invalid_argument("pointwise_agreement: mu outside [0,1]");
    if (!(phi_normalized >= 0.0 && phi_normalized <= 1.0))
        throw std::invalid_argument("pointwise_agreement: phi outside [0,1]");
    return 1.0 - std::abs(mu_value - phi_normalized);
}

namespace {

void check_same_queries(const std::map<std::string, double>& a,
                        const std::map<std::string, double>& b, const char* who) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(who) + ": query sets differ in size");
    auto ia = a.begin();
    auto ib = b.begin();
    for (; ia != a.end(); ++ia, ++ib)
        if (ia->first != ib->first)
            throw std::invalid_argument(std::string(who) + ": query sets differ ('" +
                                        ia->first + "' vs '" + ib->first + "')");
}

} // namespace

ApaeResult apae_single_metric(const std::map<std::string, double>& mu,
                              const std::map<std::string, double>& phi_normalized) {
    if (mu.empty()) throw std::invalid_argument("apae_single_metric: empty query set");
    check_same_queries(mu, phi_normalized, "apae_single_metric");
    ApaeResult res;
    double sum = 0.0;
    for (const auto& [qid, m] : mu) {
        double a = pointwise_agreement(m, phi_normalized.at(qid));
        res.per_query.emplace(qid, a);
        sum += a;
    }
    res.mean = sum / static_cast<double>(mu.size());
    return res;
}

ApaeResult apae_multi_metric(const std::map<MetricId, std::map<std::string, double>>& mus,
                             const std::map<std::string, double>& phi_normalized,
                             Aggregator aggregator) {
    if (mus.empty()) throw std::invalid_argument("apae_multi_metric: empty metric set");
    if (phi_normalized.empty())
        throw std::invalid_argument("apae_multi_metric: empty query set");
    for (const auto& [metric, mu] : mus) {
        if (mu.size() != phi_normalized.size())
            throw std::invalid_argument("apae_multi_metric: metric " + metric.name() +
                                        " does not cover the full query set");
        for (const auto& [qid, v] : phi_normalized)
            if (!mu.count(qid))
                throw std::invalid_argument("apae_multi_metric: metric " + metric.name() +
                                            " missing query '" + qid + "'");
    }

    ApaeResult res;
    res.aggregator = aggregator;
    double sum = 0.0;
    for (const auto& [qid, phi] : phi_normalized) {
        double lo = 1.0, hi = 0.0, acc = 0.0;
        for (const auto& [metric, mu] : mus) {
            double a = pointwise_agreement(mu.at(qid), phi);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
            acc += a;
        }
        double agg = 0.0;
        switch (aggregator) {
            case Aggregator::Min: agg = lo; break;
            case Aggregator::Max: agg = hi; break;
            case Aggregator::Avg:
                // the true mean lies in [lo, hi]; keep the floating-point one
                // inside so the min <= avg <= max invariant holds exactly
                agg = std::clamp(acc / static_cast<double>(mus.size()), lo, hi);
                break;
        }
        res.per_query.emplace(qid, agg);
        sum += agg;
    }
    res.mean = sum / static_cast<double>(phi_normalized.size());
    return res;
}

} // namespace qppbench
