#include <doctest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "qppbench/apae.hpp"

using namespace qppbench;

TEST_CASE("pointwise agreement") {
    CHECK(pointwise_agreement(0.4, 0.4) == 1.0);
    CHECK(pointwise_agreement(0.0, 1.0) == 0.0);
    CHECK(pointwise_agreement(0.5, 0.4) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(pointwise_agreement(0.2, 0.7) == pointwise_agreement(0.7, 0.2)); // symmetric
    CHECK_THROWS_AS(pointwise_agreement(-0.1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(pointwise_agreement(0.5, 1.1), std::invalid_argument);
}

TEST_CASE("apae single metric") {
    std::map<std::string, double> mu{{"q1", 0.5}, {"q2", 0.2}};
    std::map<std::string, double> phi{{"q1", 0.4}, {"q2", 0.4}};
    auto res = apae_single_metric(mu, phi);
    CHECK(res.per_query["q1"] == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(res.per_query["q2"] == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(res.mean == doctest::Approx(0.85).epsilon(1e-12));

    auto perfect = apae_single_metric(mu, mu);
    CHECK(perfect.mean == 1.0);

    auto single = apae_single_metric({{"q", 0.7}}, {{"q", 0.2}});
    CHECK(single.mean == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(apae_single_metric({}, {}), std::invalid_argument);
    CHECK_THROWS_AS(apae_single_metric(mu, {{"q1", 0.4}, {"qX", 0.4}}),
                    std::invalid_argument);
}

TEST_CASE("apae multi metric spec examples") {
    MetricId ap = parse_metric("AP@100");
    MetricId ndcg = parse_metric("nDCG@100");
    std::map<std::string, double> phi{{"q1", 0.5}};
    std::map<MetricId, std::map<std::string, double>> mus{{ap, {{"q1", 0.6}}},
                                                          {ndcg, {{"q1", 0.7}}}};
    // agreements are 0.9 and 0.8
    CHECK(apae_multi_metric(mus, phi, Aggregator::Avg).mean ==
          doctest::Approx(0.85).epsilon(1e-12));
    CHECK(apae_multi_metric(mus, phi, Aggregator::Min).mean ==
          doctest::Approx(0.8).epsilon(1e-12));
    CHECK(apae_multi_metric(mus, phi, Aggregator::Max).mean ==
          doctest::Approx(0.9).epsilon(1e-12));

    // singleton metric set equals the single-metric form for every aggregator
    std::map<MetricId, std::map<std::string, double>> one{{ap, {{"q1", 0.6}}}};
    for (auto agg : {Aggregator::Avg, Aggregator::Min, Aggregator::Max})
        CHECK(apae_multi_metric(one, phi, agg).mean ==
              apae_single_metric(one.at(ap), phi).mean);

    // phi equal to every metric -> 1.0 under all aggregators
    std::map<MetricId, std::map<std::string, double>> same{{ap, {{"q1", 0.5}}},
                                                           {ndcg, {{"q1", 0.5}}}};
    for (auto agg : {Aggregator::Avg, Aggregator::Min, Aggregator::Max})
        CHECK(apae_multi_metric(same, phi, agg).mean == 1.0);

    CHECK_THROWS_AS(apae_multi_metric({}, phi, Aggregator::Avg), std::invalid_argument);
    std::map<MetricId, std::map<std::string, double>> missing{{ap, {{"q2", 0.6}}}};
    CHECK_THROWS_AS(apae_multi_metric(missing, phi, Aggregator::Avg), std::invalid_argument);
}

TEST_CASE("apae algebra on random instances") {
    std::mt19937_64 rng(31);
    std::vector<MetricId> metric_pool{parse_metric("AP@100"), parse_metric("nDCG@100"),
                                      parse_metric("P@10"), parse_metric("R@100"),
                                      parse_metric("AP@10")};
    for (int iter = 0; iter < 300; ++iter) {
        std::size_t n_queries = 1 + oracle::uniform_below(rng, 8);
        std::size_t n_metrics = 1 + oracle::uniform_below(rng, metric_pool.size());
        std::map<std::string, double> phi;
        for (std::size_t q = 0; q < n_queries; ++q)
            phi.emplace("q" + std::to_string(q), oracle::uniform01(rng));
        std::map<MetricId, std::map<std::string, double>> mus;
        for (std::size_t m = 0; m < n_metrics; ++m) {
            auto& mu = mus[metric_pool[m]];
            for (const auto& [qid, v] : phi) mu.emplace(qid, oracle::uniform01(rng));
        }
        auto avg = apae_multi_metric(mus, phi, Aggregator::Avg);
        auto mn = apae_multi_metric(mus, phi, Aggregator::Min);
        auto mx = apae_multi_metric(mus, phi, Aggregator::Max);
        for (const auto& [qid, v] : avg.per_query) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(mn.per_query.at(qid) <= v + 1e-15);
            CHECK(v <= mx.per_query.at(qid) + 1e-15);
        }
        CHECK(mn.mean <= avg.mean + 1e-15);
        CHECK(avg.mean <= mx.mean + 1e-15);
        CHECK(avg.mean >= 0.0);
        CHECK(avg.mean <= 1.0);
    }
}

TEST_CASE("apae is invariant to query and metric enumeration order") {
    // maps fix iteration order, so permutation invariance reduces to the
    // result not depending on insertion order
    std::map<std::string, double> phi{{"b", 0.2}, {"a", 0.9}, {"c", 0.6}};
    std::map<std::string, double> phi_rev{{"c", 0.6}, {"a", 0.9}, {"b", 0.2}};
    MetricId ap = parse_metric("AP@100");
    MetricId p10 = parse_metric("P@10");
    std::map<MetricId, std::map<std::string, double>> mus{
        {ap, {{"a", 0.8}, {"b", 0.1}, {"c", 0.4}}},
        {p10, {{"a", 0.3}, {"b", 0.9}, {"c", 0.2}}}};
    std::map<MetricId, std::map<std::string, double>> mus_rev{
        {p10, {{"c", 0.2}, {"b", 0.9}, {"a", 0.3}}},
        {ap, {{"c", 0.4}, {"b", 0.1}, {"a", 0.8}}}};
    for (auto agg : {Aggregator::Avg, Aggregator::Min, Aggregator::Max}) {
        auto r1 = apae_multi_metric(mus, phi, agg);
        auto r2 = apae_multi_metric(mus_rev, phi_rev, agg);
        CHECK(r1.mean == r2.mean);
        CHECK(r1.per_query == r2.per_query);
    }
}

TEST_CASE("aggregator names") {
    CHECK(aggregator_name(Aggregator::Min) == "min");
    CHECK(parse_aggregator("MAX") == Aggregator::Max);
    CHECK_THROWS_AS(parse_aggregator("median"), std::runtime_error);
}
