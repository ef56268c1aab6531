#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qppbench/corpus.hpp"
#include "qppbench/ir_metrics.hpp"

namespace qppbench {

/// Deterministic synthetic benchmark: topic-clustered documents over a
/// Zipf-like background vocabulary, one query per topic with varying focus
/// and relevant-set size so retrieval quality spreads across queries.
struct SynthSpec {
    int n_docs = 1000;
    int n_queries = 50;
    std::uint64_t seed = 7;
};

struct SynthData {
    std::vector<Document> docs;
    std::vector<std::pair<std::string, std::string>> topics; // (query_id, text)
    Qrels qrels;
};

SynthData make_synth(const SynthSpec& spec);

/// Writes corpus as JSONL, topics as TSV and qrels in TREC format.
void write_synth(const SynthData& data, const std::string& corpus_path,
                 const std::string& topics_path, const std::string& qrels_path);

} // namespace qppbench
