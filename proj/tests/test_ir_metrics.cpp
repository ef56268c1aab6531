#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "qppbench/ir_metrics.hpp"

using namespace qppbench;

namespace {

RankedList make_ranking(const std::vector<std::string>& docs) {
    RankedList run;
    run.query_id = "q";
    double s = static_cast<double>(docs.size());
    for (const auto& d : docs) run.entries.push_back(ScoredDoc{d, s--});
    return run;
}

Qrels make_qrels(const std::vector<std::pair<std::string, int>>& grades) {
    Qrels qrels;
    for (const auto& [d, g] : grades) qrels.add("q", d, g);
    return qrels;
}

} // namespace

TEST_CASE("metric id parsing") {
    CHECK(parse_metric("AP@100").name() == "AP@100");
    CHECK(parse_metric("ndcg@10").name() == "nDCG@10");
    CHECK(parse_metric("Recall@100").name() == "R@100");
    CHECK(parse_metric("P@10").family == MetricFamily::P);
    CHECK_THROWS_AS(parse_metric("AP"), std::runtime_error);
    CHECK_THROWS_AS(parse_metric("AP@0"), std::runtime_error);
    CHECK_THROWS_AS(parse_metric("XYZ@10"), std::runtime_error);
    auto list = parse_metric_list("AP@100, nDCG@100 ,P@10");
    REQUIRE(list.size() == 3);
    CHECK(list[1].name() == "nDCG@100");
}

TEST_CASE("average precision examples") {
    auto run = make_ranking({"a", "b", "c"});
    auto qrels = make_qrels({{"a", 1}, {"c", 1}});
    CHECK(average_precision_at_k(run, qrels, 3) ==
          doctest::Approx(0.8333333333333333).epsilon(1e-12));

    CHECK(average_precision_at_k(run, make_qrels({}), 3) == 0.0);

    auto all_rel = make_qrels({{"a", 1}, {"b", 1}, {"c", 1}});
    CHECK(average_precision_at_k(run, all_rel, 3) == 1.0);

    // relevant document below the cutoff still counts in the denominator
    CHECK(average_precision_at_k(run, qrels, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("ndcg examples") {
    auto run = make_ranking({"a", "b", "c"});
    auto qrels = make_qrels({{"a", 1}, {"c", 1}});
    CHECK(ndcg_at_k(run, qrels, 3) == doctest::Approx(0.9197207891481876).epsilon(1e-12));

    auto ideal = make_ranking({"a", "c", "b"});
    CHECK(ndcg_at_k(ideal, qrels, 3) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK(ndcg_at_k(run, make_qrels({}), 3) == 0.0);

    // graded gains
    auto graded = make_qrels({{"a", 2}, {"b", 1}});
    CHECK(ndcg_at_k(make_ranking({"b", "a"}), graded, 2) <
          ndcg_at_k(make_ranking({"a", "b"}), graded, 2));
}

TEST_CASE("precision and recall examples") {
    std::vector<std::string> docs;
    for (int i = 0; i < 10; ++i) docs.push_back("d" + std::to_string(i));
    auto run = make_ranking(docs);
    auto qrels = make_qrels({{"d0", 1}, {"d4", 2}, {"d9", 1}});
    CHECK(precision_at_k(run, qrels, 10) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(recall_at_k(run, qrels, 10) == 1.0);
    CHECK(recall_at_k(run, make_qrels({}), 10) == 0.0);
    // short list pads the P@k denominator
    auto shorty = make_ranking({"d0"});
    CHECK(precision_at_k(shorty, qrels, 10) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("metrics agree with brute-force oracles on random instances") {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 200; ++iter) {
        std::size_t len = 1 + oracle::uniform_below(rng, 20);
        std::size_t n_judged = oracle::uniform_below(rng, 25);
        std::vector<std::string> docs;
        for (std::size_t i = 0; i < len; ++i) docs.push_back("d" + std::to_string(i));
        oracle::Judged judged;
        Qrels qrels;
        for (std::size_t i = 0; i < n_judged; ++i) {
            std::string d = "d" + std::to_string(oracle::uniform_below(rng, 30));
            int g = static_cast<int>(oracle::uniform_below(rng, 3));
            judged.grades[d] = g;
        }
        for (const auto& [d, g] : judged.grades) qrels.add("q", d, g);
        auto run = make_ranking(docs);
        int k = 1 + static_cast<int>(oracle::uniform_below(rng, 25));
        CHECK(average_precision_at_k(run, qrels, k) ==
              doctest::Approx(oracle::ap_at_k(docs, judged, k)).epsilon(1e-12));
        CHECK(ndcg_at_k(run, qrels, k) ==
              doctest::Approx(oracle::ndcg_at_k(docs, judged, k)).epsilon(1e-12));
        CHECK(precision_at_k(run, qrels, k) ==
              doctest::Approx(oracle::precision_at_k(docs, judged, k)).epsilon(1e-12));
        CHECK(recall_at_k(run, qrels, k) ==
              doctest::Approx(oracle::recall_at_k(docs, judged, k)).epsilon(1e-12));
        // range invariant
        for (double v : {average_precision_at_k(run, qrels, k), ndcg_at_k(run, qrels, k),
                         precision_at_k(run, qrels, k), recall_at_k(run, qrels, k)}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("swapping a relevant doc upward never decreases AP or nDCG") {
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 100; ++iter) {
        std::size_t len = 3 + oracle::uniform_below(rng, 8);
        std::vector<std::string> docs;
        Qrels qrels;
        for (std::size_t i = 0; i < len; ++i) {
            docs.push_back("d" + std::to_string(i));
            if (oracle::uniform01(rng) < 0.4)
                qrels.add("q", docs.back(), 1 + static_cast<int>(oracle::uniform_below(rng, 2)));
        }
        // find a relevant doc below a non-relevant one and swap them
        for (std::size_t i = 1; i < len; ++i) {
            if (qrels.grade("q", docs[i]) > 0 && qrels.grade("q", docs[i - 1]) == 0) {
                auto before = make_ranking(docs);
                auto swapped_docs = docs;
                std::swap(swapped_docs[i], swapped_docs[i - 1]);
                auto after = make_ranking(swapped_docs);
                CHECK(average_precision_at_k(after, qrels, static_cast<int>(len)) >=
                      average_precision_at_k(before, qrels, static_cast<int>(len)));
                CHECK(ndcg_at_k(after, qrels, static_cast<int>(len)) >=
                      ndcg_at_k(before, qrels, static_cast<int>(len)));
                break;
            }
        }
    }
}

TEST_CASE("qrels parsing and round trip") {
    auto path = (std::filesystem::temp_directory_path() / "qppbench_qrels.txt").string();
    {
        std::ofstream out(path);
        out << "q1 0 docA 1\nq1 0 docB 0\nq2 0 docA 2\n";
    }
    auto qrels = Qrels::read(path);
    CHECK(qrels.grade("q1", "docA") == 1);
    CHECK(qrels.grade("q1", "docB") == 0);
    CHECK(qrels.grade("q2", "docA") == 2);
    CHECK(qrels.grade("q2", "missing") == 0);
    CHECK(qrels.total_relevant("q1") == 1);
    CHECK(qrels.grades_descending("q2") == std::vector<int>{2});

    auto out_path = (std::filesystem::temp_directory_path() / "qppbench_qrels2.txt").string();
    qrels.write(out_path);
    auto qrels2 = Qrels::read(out_path);
    CHECK(qrels2.grade("q1", "docA") == 1);
    CHECK(qrels2.grade("q2", "docA") == 2);

    Qrels bad;
    CHECK_THROWS_AS(bad.add("q", "d", -1), std::invalid_argument);

    auto bad_path = (std::filesystem::temp_directory_path() / "qppbench_qrels_bad.txt").string();
    {
        std::ofstream out(bad_path);
        out << "q1 0 docA\n";
    }
    CHECK_THROWS_WITH_AS(Qrels::read(bad_path), doctest::Contains(":1"), std::runtime_error);
}

TEST_CASE("metric score TSV round trip") {
    std::vector<MetricScore> scores{{"q1", parse_metric("AP@100"), 0.25},
                                    {"q2", parse_metric("nDCG@10"), 0.5}};
    auto path = (std::filesystem::temp_directory_path() / "qppbench_metrics.tsv").string();
    write_metric_scores(path, scores);
    auto back = read_metric_scores(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].query_id == "q1");
    CHECK(back[0].metric == parse_metric("AP@100"));
    CHECK(back[0].value == 0.25);
    CHECK(back[1].value == 0.5);
}
