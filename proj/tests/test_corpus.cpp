#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "qppbench/corpus.hpp"

using namespace qppbench;

namespace {

std::string temp_file(const std::string& name, const std::string& contents) {
    auto path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << contents;
    return path;
}

} // namespace

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
    CHECK(tokenize("") == std::vector<std::string>{});
    CHECK(tokenize("Query Performance-Prediction") ==
          std::vector<std::string>{"query", "performance", "prediction"});
    TokenizerConfig cfg;
    cfg.stopwords = {"the"};
    CHECK(tokenize("the QPP 2023!", cfg) == std::vector<std::string>{"qpp", "2023"});
    CHECK(tokenize("...!!,,") == std::vector<std::string>{});
    CHECK(tokenize("a1b2 C3") == std::vector<std::string>{"a1b2", "c3"});
}

TEST_CASE("build_index hand counts") {
    auto idx = build_index({{"d1", "a b"}, {"d2", "b c"}});
    CHECK(idx.num_docs() == 2);
    CHECK(idx.total_len() == 4);
    CHECK(idx.df("b") == 2);
    CHECK(idx.cf("b") == 2);
    CHECK(idx.df("a") == 1);
    CHECK(idx.cf("missing") == 0);

    auto empty = build_index({});
    CHECK(empty.num_docs() == 0);
    CHECK(empty.total_len() == 0);

    auto one = build_index({{"d1", "x x x"}});
    CHECK(one.doc_len(0) == 3);
    CHECK(one.cf("x") == 3);
    CHECK(one.df("x") == 1);
}

TEST_CASE("build_index rejects duplicate and empty doc ids") {
    CHECK_THROWS_WITH_AS(build_index({{"d1", "a"}, {"d1", "b"}}),
                         doctest::Contains("d1"), std::runtime_error);
    CHECK_THROWS_AS(build_index({{"", "a"}}), std::runtime_error);
}

TEST_CASE("collection_prob") {
    auto idx = build_index({{"d1", "x x x y"}});
    CHECK(idx.collection_prob("x") == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(idx.collection_prob("unseen") == 0.0);

    auto single = build_index({{"d1", "only"}});
    CHECK(single.collection_prob("only") == 1.0);

    auto empty = build_index({});
    CHECK_THROWS_AS(empty.collection_prob("x"), std::runtime_error);
}

TEST_CASE("index invariants") {
    auto idx = build_index({{"d1", "a b b c"}, {"d2", "b c c d"}, {"d3", "a a"}, {"d4", ""}});
    std::uint64_t cf_sum = 0;
    double prob_sum = 0.0;
    for (TermId t = 0; t < idx.vocab_size(); ++t) {
        cf_sum += idx.cf(t);
        prob_sum += idx.collection_prob(t);
        CHECK(idx.df(t) <= idx.num_docs());
        CHECK(idx.cf(t) >= idx.df(t));
        auto posts = idx.postings(t);
        for (std::size_t i = 1; i < posts.size(); ++i) CHECK(posts[i - 1].doc < posts[i].doc);
        CHECK(idx.df(t) == posts.size());
    }
    CHECK(cf_sum == idx.total_len());
    CHECK(prob_sum == doctest::Approx(1.0).epsilon(1e-12));
    std::uint64_t len_sum = 0;
    for (DocIdx d = 0; d < idx.num_docs(); ++d) len_sum += idx.doc_len(d);
    CHECK(len_sum == idx.total_len());
}

TEST_CASE("index is independent of document order") {
    std::vector<Document> docs{{"b", "x y"}, {"a", "y z z"}, {"c", "x"}};
    auto i1 = build_index(docs);
    std::swap(docs[0], docs[2]);
    std::swap(docs[0], docs[1]);
    auto i2 = build_index(docs);
    REQUIRE(i1.num_docs() == i2.num_docs());
    CHECK(i1.total_len() == i2.total_len());
    for (DocIdx d = 0; d < i1.num_docs(); ++d) {
        CHECK(i1.doc_id(d) == i2.doc_id(d));
        CHECK(i1.doc_len(d) == i2.doc_len(d));
    }
    REQUIRE(i1.vocab_size() == i2.vocab_size());
    for (TermId t = 0; t < i1.vocab_size(); ++t) {
        auto other = i2.term(i1.term_text(t));
        REQUIRE(other.has_value());
        CHECK(i1.df(t) == i2.df(*other));
        CHECK(i1.cf(t) == i2.cf(*other));
    }
}

TEST_CASE("corpus readers") {
    auto jsonl = temp_file("qppbench_corpus.jsonl",
                           "{\"doc_id\":\"d1\",\"text\":\"Alpha beta\"}\n"
                           "{\"doc_id\":\"d2\",\"text\":\"gamma\"}\n");
    auto docs = read_corpus(jsonl);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].doc_id == "d1");
    CHECK(docs[1].text == "gamma");

    auto tsv = temp_file("qppbench_corpus.tsv", "d1\tAlpha beta\nd2\tgamma\n");
    auto docs2 = read_corpus(tsv);
    REQUIRE(docs2.size() == 2);
    CHECK(docs2[0].text == "Alpha beta");

    auto bad = temp_file("qppbench_corpus_bad.jsonl", "{\"doc_id\":\"d1\"\n");
    CHECK_THROWS_WITH_AS(read_corpus(bad), doctest::Contains(":1:"), std::runtime_error);

    CHECK_THROWS_AS(read_corpus("/nonexistent/corpus.jsonl"), std::runtime_error);
}

TEST_CASE("topics and stopwords readers") {
    auto topics = temp_file("qppbench_topics.tsv", "q1\tHello World\nq2\tfoo-bar\n");
    auto qs = read_topics_tsv(topics);
    REQUIRE(qs.size() == 2);
    CHECK(qs[0].terms == std::vector<std::string>{"hello", "world"});
    CHECK(qs[1].terms == std::vector<std::string>{"foo", "bar"});

    auto dup = temp_file("qppbench_topics_dup.tsv", "q1\ta\nq1\tb\n");
    CHECK_THROWS_WITH_AS(read_topics_tsv(dup), doctest::Contains("q1"), std::runtime_error);

    auto stop = temp_file("qppbench_stop.txt", "The\nand\n\n  of  \n");
    auto words = read_stopwords(stop);
    CHECK(words.count("the") == 1);
    CHECK(words.count("and") == 1);
    CHECK(words.count("of") == 1);
    CHECK(words.size() == 3);
}
