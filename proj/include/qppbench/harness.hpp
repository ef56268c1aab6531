#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qppbench/apae.hpp"
#include "qppbench/corpus.hpp"
#include "qppbench/ir_metrics.hpp"
#include "qppbench/listwise.hpp"
#include "qppbench/qpp.hpp"
#include "qppbench/retrieval.hpp"

namespace qppbench {

/// Evaluation measures a QPP system can be scored with. The listwise four
/// correlate predicted scores with metric values across the query set; the
/// apae three compare them pointwise per query.
enum class Evaluator { Pearson, Spearman, Kendall, OneMinusSare, ApaeAvg, ApaeMin, ApaeMax };

std::string evaluator_name(Evaluator e);
Evaluator parse_evaluator(std::string_view name);
bool is_listwise(Evaluator e);
Aggregator evaluator_aggregator(Evaluator e); // apae evaluators only

struct HyperGrids {
    std::vector<int> k{5, 10, 25, 50, 100};
    std::vector<int> fb_docs{10, 25, 50};
    std::vector<int> fb_terms{25, 50, 100};
};

/// Tuning grid for one method: the cross product of the grids the method
/// actually reads. AvgIDF has a single (empty) point.
std::vector<QppParams> method_grid(QppMethod m, const HyperGrids& grids);

struct ExperimentConfig {
    std::string corpus;
    std::string topics;
    std::string qrels;
    std::string stopwords; // optional

    std::vector<RetrievalModel> models;       // agreement + metric-pair studies
    std::vector<RetrievalModel> extra_models; // added for the model-pair study
    std::vector<MetricId> metrics;            // APAE metric set; first = listwise target
    std::vector<MetricId> stability_metrics;
    std::vector<MetricId> model_stability_metrics;
    std::vector<QppMethod> methods;
    std::vector<Evaluator> evaluators;
    HyperGrids grids;

    int k = 100;
    int n_splits = 30;
    std::uint64_t seed = 42;
    double rm_mu = 1000.0;
    int threads = 1;
    std::string out_dir = "out";
};

/// Paper-grid defaults: models lmjm(0.6)/lmdir(1000)/bm25(0.7,0.3) plus the
/// extra parameterizations lmjm(0.3)/bm25(0.3,0.7)/lmdir(500), k=100 and 30
/// splits, the seven QPP methods, and the Table-shaped metric lists.
ExperimentConfig default_config();

/// Key-value config file: "key = value" lines, '#' starts a comment.
ExperimentConfig read_config(const std::string& path);

struct SplitPlan {
    std::uint64_t seed = 0;
    // (train, test) pairs; each side sorted ascending. |train| = ceil(|Q|/2).
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> splits;
};

/// n_splits independent uniform half/half partitions from a seeded generator
/// that is split-indexed, so the plan is reproducible byte-for-byte on any
/// platform regardless of scheduling.
SplitPlan make_splits(std::vector<std::string> query_ids, int n_splits, std::uint64_t seed);

/// Raw predictor scores for every tuning grid point of one method under one
/// model: scores[g][q] for grid point g and query index q.
struct PredictorTable {
    QppMethod method = QppMethod::AvgIdf;
    std::vector<QppParams> grid;
    std::vector<std::vector<double>> scores;
};

/// Everything evaluation needs for one retrieval model.
struct ModelData {
    RetrievalModel model;
    std::vector<RankedList> runs;                          // per query index
    std::map<MetricId, std::vector<double>> metric_values; // per metric, per query index
    std::vector<PredictorTable> predictors;                // aligned with config.methods
};

struct ExperimentData {
    std::vector<std::string> query_ids; // ascending; defines query indices
    std::vector<Query> queries;
    Index index;
    Qrels qrels;
    std::vector<ModelData> models; // main models first, then extra
    std::size_t n_main_models = 0;
    std::vector<std::string> excluded_queries; // no indexed term or empty run
};

/// index -> retrieve -> metrics -> predictor grids. Queries that cannot be
/// evaluated under every model (no indexed term, empty candidate set) are
/// excluded and reported.
ExperimentData prepare_experiment(const ExperimentConfig& cfg);

/// Value of one phi score vector on a query subset under an evaluator.
/// Listwise evaluators use metric_set.front() as the target; apae evaluators
/// aggregate over the whole set with phi min-max normalized over the subset.
/// nullopt = degenerate (zero-variance / all-tied) outcome.
std::optional<double> evaluate_scores(const std::vector<std::string>& query_ids,
                                      const std::map<MetricId, std::vector<double>>& metric_values,
                                      const std::vector<double>& phi, Evaluator ev,
                                      const std::vector<MetricId>& metric_set,
                                      const std::vector<std::size_t>& subset);

struct TuneOutcome {
    std::size_t grid_index = 0;
    bool fallback = false; // every grid point was degenerate on the train split
};

/// Grid point maximizing the objective on the train subset; ties keep the
/// first point in enumeration order.
TuneOutcome tune(const std::vector<std::string>& query_ids,
                 const std::map<MetricId, std::vector<double>>& metric_values,
                 const PredictorTable& table, Evaluator objective,
                 const std::vector<MetricId>& metric_set,
                 const std::vector<std::size_t>& train_subset);

struct ContextSummary {
    double mean = 0.0; // over non-degenerate splits
    int n_splits = 0;
    int degenerate = 0;
    int tune_fallbacks = 0; // splits where every grid point was degenerate
    std::vector<std::optional<double>> per_split;
    std::vector<std::size_t> chosen_grid; // tuned grid index per split
    bool defined() const { return n_splits > degenerate; }
};

/// Tune on each split's train side, evaluate on its test side, and average
/// the defined outcomes.
ContextSummary evaluate_context(const std::vector<std::string>& query_ids,
                                const std::map<MetricId, std::vector<double>>& metric_values,
                                const PredictorTable& table, Evaluator ev,
                                const std::vector<MetricId>& metric_set, const SplitPlan& plan);

/// QPP systems ordered by context value descending (ties by method name);
/// nullopt when any system's value is undefined.
std::optional<QueryRanking> system_ranking(const std::map<std::string, ContextSummary>& values);

struct AgreementCell {
    std::string model;
    Evaluator listwise = Evaluator::Kendall;
    Evaluator apae = Evaluator::ApaeAvg;
    std::optional<double> tau; // nullopt when a system ranking is degenerate
};

struct StabilityCell {
    std::string fixed; // model name (metric axis) or metric name (model axis)
    std::string a;
    std::string b;
    std::optional<double> tau; // nullopt = degenerate
};

struct ExperimentReport {
    std::size_t n_queries = 0;
    std::vector<std::string> excluded_queries;
    // one row per evaluated context: (model, evaluator, metric key, method)
    struct ContextRow {
        std::string model;
        Evaluator ev;
        std::string metrics;
        std::string method;
        ContextSummary summary;
    };
    std::vector<ContextRow> context_values;
    std::vector<AgreementCell> agreement;
    std::vector<StabilityCell> metric_stability_listwise;
    std::vector<StabilityCell> metric_stability_apae;
    std::vector<StabilityCell> model_stability_listwise;
    std::vector<StabilityCell> model_stability_apae;
};

/// Full pipeline: prepare, evaluate every needed context, build the
/// agreement and stability tables, and (when out_dir is non-empty) write the
/// report bundle: runs/, metrics.tsv, context_values.tsv, agreement.tsv,
/// stability_{metrics,models}_{listwise,apae}.tsv, summary.json.
ExperimentReport run_experiment(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg, const ExperimentData& data);

void write_agreement_tsv(const std::string& path, const std::vector<AgreementCell>& cells);
/// Writes the four stability TSVs into dir.
void write_stability_tsvs(const std::string& dir, const ExperimentReport& report);

} // namespace qppbench
