#include "qppbench/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace qppbench {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

std::string zero_pad(int v, int width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%0*d", width, v);
    return buf;
}

// Zipf-like sampler over ranked items: weight(i) = 1/(i + offset).
class RankedSampler {
public:
    RankedSampler(std::size_t n, double offset) {
        cum_.reserve(n);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += 1.0 / (static_cast<double>(i) + offset);
            cum_.push_back(total);
        }
    }
    std::size_t draw(std::mt19937_64& rng) const {
        double u = uniform01(rng) * cum_.back();
        return static_cast<std::size_t>(
            std::lower_bound(cum_.begin(), cum_.end(), u) - cum_.begin());
    }

private:
    std::vector<double> cum_;
};

} // namespace

SynthData make_synth(const SynthSpec& spec) {
    if (spec.n_docs < 10 || spec.n_queries < 2)
        throw std::invalid_argument("make_synth: need n_docs >= 10 and n_queries >= 2");
    std::mt19937_64 rng(splitmix64(spec.seed));

    const int n_vocab = 800;
    const int terms_per_topic = 5;
    RankedSampler background(n_vocab, 5.0);
    RankedSampler topical(terms_per_topic, 1.5);
    auto word = [](std::size_t i) { return "w" + zero_pad(static_cast<int>(i), 3); };

    // Topic terms come from the mid-frequency band of the shared vocabulary,
    // so every query term also occurs as background noise across the corpus
    // and retrieval has to rank by density rather than mere presence.
    std::vector<std::vector<std::string>> topic_terms(spec.n_queries);
    for (int t = 0; t < spec.n_queries; ++t) {
        std::vector<std::size_t> picked;
        while (picked.size() < terms_per_topic) {
            std::size_t w = 30 + uniform_below(rng, 300);
            if (std::find(picked.begin(), picked.end(), w) == picked.end())
                picked.push_back(w);
        }
        for (auto w : picked) topic_terms[t].push_back(word(w));
    }

    // Per-topic difficulty knobs: low-focus topics bury their signal, large
    // relevant sets cannot fit under shallow cutoffs.
    std::vector<double> focus(spec.n_queries);
    std::vector<int> n_rel(spec.n_queries);
    for (int t = 0; t < spec.n_queries; ++t) {
        focus[t] = 0.10 + 0.45 * uniform01(rng);
        n_rel[t] = 8 + static_cast<int>(uniform_below(rng, 33));
    }

    // Assign a primary topic to at most 90% of the docs, the rest are
    // background-only.
    std::vector<int> doc_topic(spec.n_docs, -1);
    {
        int budget = spec.n_docs * 9 / 10;
        int d = 0;
        for (int t = 0; t < spec.n_queries && d < budget; ++t)
            for (int r = 0; r < n_rel[t] && d < budget; ++r) doc_topic[d++] = t;
        for (std::size_t i = doc_topic.size() - 1; i > 0; --i) {
            std::size_t j = uniform_below(rng, i + 1);
            std::swap(doc_topic[i], doc_topic[j]);
        }
    }

    SynthData data;
    data.docs.reserve(spec.n_docs);
    std::vector<int> topical_hits(spec.n_docs, 0);
    for (int d = 0; d < spec.n_docs; ++d) {
        const int topic = doc_topic[d];
        const int len = 30 + static_cast<int>(uniform_below(rng, 81));
        std::string text;
        int hits = 0;
        for (int i = 0; i < len; ++i) {
            std::string tok;
            if (topic >= 0 && uniform01(rng) < focus[topic]) {
                tok = topic_terms[topic][topical.draw(rng)];
                ++hits;
            } else if (uniform01(rng) < 0.10) {
                // distractor: an off-topic doc borrows another topic's term
                int other = static_cast<int>(uniform_below(rng, spec.n_queries));
                tok = topic_terms[other][topical.draw(rng)];
            } else {
                tok = word(background.draw(rng));
            }
            if (!text.empty()) text.push_back(' ');
            text += tok;
        }
        topical_hits[d] = hits;
        data.docs.push_back(Document{"d" + zero_pad(d + 1, 4), text});
    }

    // Queries: 2-4 head terms of the topic.
    for (int t = 0; t < spec.n_queries; ++t) {
        std::string qid = "q" + zero_pad(t + 1, 3);
        int n_terms = 2 + t % 3;
        std::string text;
        for (int j = 0; j < n_terms; ++j) {
            if (!text.empty()) text.push_back(' ');
            text += topic_terms[t][j];
        }
        data.topics.emplace_back(qid, text);
    }

    // Qrels: primary-topic docs are relevant; dense ones get grade 2, plus a
    // handful of judged non-relevant docs per query.
    for (int t = 0; t < spec.n_queries; ++t) {
        const std::string qid = data.topics[t].first;
        std::vector<int> hit_counts;
        for (int d = 0; d < spec.n_docs; ++d)
            if (doc_topic[d] == t) hit_counts.push_back(topical_hits[d]);
        std::sort(hit_counts.begin(), hit_counts.end());
        int median = hit_counts.empty() ? 0 : hit_counts[hit_counts.size() / 2];
        for (int d = 0; d < spec.n_docs; ++d) {
            if (doc_topic[d] != t) continue;
            data.qrels.add(qid, data.docs[d].doc_id, topical_hits[d] >= median ? 2 : 1);
        }
        for (int j = 0; j < 10; ++j) {
            int d = static_cast<int>(uniform_below(rng, spec.n_docs));
            if (doc_topic[d] != t) data.qrels.add(qid, data.docs[d].doc_id, 0);
        }
    }
    return data;
}

void write_synth(const SynthData& data, const std::string& corpus_path,
                 const std::string& topics_path, const std::string& qrels_path) {
    {
        std::ofstream out(corpus_path);
        if (!out) throw std::runtime_error("cannot write file: " + corpus_path);
        for (const auto& doc : data.docs) {
            nlohmann::ordered_json j;
            j["doc_id"] = doc.doc_id;
            j["text"] = doc.text;
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(topics_path);
        if (!out) throw std::runtime_error("cannot write file: " + topics_path);
        for (const auto& [qid, text] : data.topics) out << qid << '\t' << text << '\n';
    }
    data.qrels.write(qrels_path);
}

} // namespace qppbench
