// qppbench: retrieval + QPP + evaluation pipeline with pointwise (APAE) and
// listwise evaluation. Each subcommand exposes one pipeline stage; the
// experiment subcommand runs everything from a config file.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "qppbench/format.hpp"
#include "qppbench/harness.hpp"

using namespace qppbench;

namespace {

int env_thread_cap() {
    const char* env = std::getenv("QPPBENCH_THREADS");
    if (!env || !*env) return 0;
    return static_cast<int>(parse_long(env, "QPPBENCH_THREADS"));
}

TokenizerConfig tokenizer_from(const std::string& stopwords_path) {
    TokenizerConfig tok;
    if (!stopwords_path.empty()) tok.stopwords = read_stopwords(stopwords_path);
    return tok;
}

RetrievalModel model_from(const std::string& model, const std::string& params) {
    if (params.empty()) return parse_model(model);
    return parse_model(model + "(" + params + ")");
}

struct IndexArgs {
    std::string corpus, stopwords, out;
};

void cmd_index(const IndexArgs& a) {
    auto index = build_index(read_corpus(a.corpus), tokenizer_from(a.stopwords));
    nlohmann::ordered_json j;
    j["num_docs"] = index.num_docs();
    j["total_tokens"] = index.total_len();
    j["unique_terms"] = index.vocab_size();
    j["avg_doc_len"] = index.avg_doc_len();
    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write file: " + a.out);
    out << j.dump(2) << '\n';
}

struct RetrieveArgs {
    std::string corpus, topics, stopwords, model = "lmdir", model_params, out, tag = "qppbench";
    int k = 100;
};

void cmd_retrieve(const RetrieveArgs& a) {
    auto tok = tokenizer_from(a.stopwords);
    auto index = build_index(read_corpus(a.corpus), tok);
    auto queries = read_topics_tsv(a.topics, tok);
    auto model = model_from(a.model, a.model_params);
    std::vector<RankedList> runs;
    runs.reserve(queries.size());
    for (const auto& q : queries)
        runs.push_back(retrieve_topk(model, index, q, static_cast<std::size_t>(a.k)));
    write_run(a.out, runs, a.tag);
}

struct MetricsArgs {
    std::string run, qrels, metrics = "AP@100,nDCG@100,P@10,R@100", out;
};

void cmd_metrics(const MetricsArgs& a) {
    auto runs = read_run(a.run);
    auto qrels = Qrels::read(a.qrels);
    auto metric_ids = parse_metric_list(a.metrics);
    std::vector<MetricScore> scores;
    for (const auto& run : runs)
        for (const auto& metric : metric_ids)
            scores.push_back(MetricScore{run.query_id, metric, eval_metric(metric, run, qrels)});
    write_metric_scores(a.out, scores);
}

struct QppArgs {
    std::string corpus, topics, stopwords, run, model, model_params, qpp, out;
    double rm_mu = 1000.0;
};

void cmd_qpp(const QppArgs& a) {
    auto tok = tokenizer_from(a.stopwords);
    auto index = build_index(read_corpus(a.corpus), tok);
    auto queries = read_topics_tsv(a.topics, tok);
    std::map<std::string, const Query*> by_id;
    for (const auto& q : queries) by_id.emplace(q.query_id, &q);
    auto runs = read_run(a.run);

    std::vector<std::pair<std::string, std::pair<QppMethod, QppParams>>> specs;
    {
        // split on commas outside parentheses
        std::string cur;
        int depth = 0;
        auto flush = [&] {
            if (cur.empty()) return;
            specs.emplace_back(cur, parse_method_spec(cur));
            cur.clear();
        };
        for (char c : a.qpp) {
            if (c == '(') ++depth;
            if (c == ')') --depth;
            if (c == ',' && depth == 0)
                flush();
            else if (!std::isspace(static_cast<unsigned char>(c)))
                cur.push_back(c);
        }
        flush();
    }
    if (specs.empty()) throw std::runtime_error("qpp: no method given (use --qpp)");

    bool needs_model = false;
    for (const auto& [name, spec] : specs)
        needs_model = needs_model || spec.first == QppMethod::Nqc ||
                      spec.first == QppMethod::Wig || spec.first == QppMethod::UefNqc ||
                      spec.first == QppMethod::UefWig;
    if (needs_model && a.model.empty())
        throw std::runtime_error("qpp: --model is required for nqc/wig/uef methods");
    RetrievalModel model = a.model.empty() ? RetrievalModel::lm_dirichlet(a.rm_mu)
                                           : model_from(a.model, a.model_params);

    std::vector<QppScore> out_scores;
    for (const auto& [label, spec] : specs) {
        const auto& [method, params] = spec;
        for (const auto& run : runs) {
            auto it = by_id.find(run.query_id);
            if (it == by_id.end())
                throw std::runtime_error("qpp: run query '" + run.query_id +
                                         "' not present in topics");
            const Query& q = *it->second;
            double v = 0.0;
            switch (method) {
                case QppMethod::AvgIdf: v = avg_idf(q, index); break;
                case QppMethod::Clarity:
                    v = clarity(q, run, index, params.fb_docs, params.fb_terms, a.rm_mu);
                    break;
                case QppMethod::Nqc: v = nqc(q, run, index, model, params.k); break;
                case QppMethod::Wig: v = wig(q, run, index, model, params.k); break;
                case QppMethod::UefClarity:
                    v = uef(q, run, index, model, QppMethod::Clarity, params, a.rm_mu);
                    break;
                case QppMethod::UefNqc:
                    v = uef(q, run, index, model, QppMethod::Nqc, params, a.rm_mu);
                    break;
                case QppMethod::UefWig:
                    v = uef(q, run, index, model, QppMethod::Wig, params, a.rm_mu);
                    break;
            }
            out_scores.push_back(QppScore{run.query_id, label, v, std::nullopt});
        }
    }
    write_qpp_scores(a.out, out_scores);
}

struct EvalArgs {
    std::string scores, metrics, aggregator, out, per_query;
};

void cmd_eval(const EvalArgs& a) {
    auto qpp_scores = read_qpp_scores(a.scores);
    auto metric_scores = read_metric_scores(a.metrics);

    std::map<std::string, std::map<std::string, double>> by_method; // method -> qid -> raw
    for (const auto& s : qpp_scores) by_method[s.method][s.query_id] = s.raw;
    std::map<MetricId, std::map<std::string, double>> by_metric; // metric -> qid -> value
    for (const auto& s : metric_scores) by_metric[s.metric][s.query_id] = s.value;
    if (by_method.empty()) throw std::runtime_error("eval: empty score file");
    if (by_metric.empty()) throw std::runtime_error("eval: empty metric file");

    std::vector<Aggregator> aggs{Aggregator::Avg, Aggregator::Min, Aggregator::Max};
    if (!a.aggregator.empty()) aggs = {parse_aggregator(a.aggregator)};

    std::ofstream out(a.out);
    if (!out) throw std::runtime_error("cannot write file: " + a.out);
    out << "evaluator\tmetric\tmethod\tvalue\tn_queries\n";

    std::ofstream detail;
    if (!a.per_query.empty()) {
        detail.open(a.per_query);
        if (!detail) throw std::runtime_error("cannot write file: " + a.per_query);
        detail << "method\tquery_id\tmetric_or_aggregate\tvalue\n";
    }

    for (const auto& [method, phi_all] : by_method) {
        // evaluation population: queries covered by the scores and every metric
        std::vector<std::string> qids;
        for (const auto& [qid, v] : phi_all) {
            bool everywhere = true;
            for (const auto& [metric, mu] : by_metric)
                everywhere = everywhere && mu.count(qid) > 0;
            if (everywhere) qids.push_back(qid);
        }
        if (qids.empty())
            throw std::runtime_error("eval: no common queries between scores and metrics for "
                                     "method '" +
                                     method + "'");
        std::vector<double> phi;
        phi.reserve(qids.size());
        for (const auto& qid : qids) phi.push_back(phi_all.at(qid));

        std::map<MetricId, std::vector<double>> metric_values;
        for (const auto& [metric, mu] : by_metric) {
            auto& vals = metric_values[metric];
            for (const auto& qid : qids) vals.push_back(mu.at(qid));
        }
        std::vector<std::size_t> subset(qids.size());
        for (std::size_t i = 0; i < subset.size(); ++i) subset[i] = i;

        for (const auto& [metric, mu] : by_metric) {
            for (auto ev : {Evaluator::Pearson, Evaluator::Spearman, Evaluator::Kendall,
                            Evaluator::OneMinusSare}) {
                std::optional<double> v;
                if (qids.size() >= 2)
                    v = evaluate_scores(qids, metric_values, phi, ev, {metric}, subset);
                out << evaluator_name(ev) << '\t' << metric.name() << '\t' << method << '\t'
                    << (v ? format_double(*v) : "degenerate") << '\t' << qids.size() << '\n';
            }
        }
        std::vector<MetricId> all_metrics;
        for (const auto& [metric, mu] : by_metric) all_metrics.push_back(metric);
        for (auto agg : aggs) {
            Evaluator ev = agg == Aggregator::Avg   ? Evaluator::ApaeAvg
                           : agg == Aggregator::Min ? Evaluator::ApaeMin
                                                    : Evaluator::ApaeMax;
            auto v = evaluate_scores(qids, metric_values, phi, ev, all_metrics, subset);
            out << evaluator_name(ev) << "\tALL\t" << method << '\t'
                << (v ? format_double(*v) : "degenerate") << '\t' << qids.size() << '\n';
        }

        // per-query pointwise analysis: agreement against each metric plus
        // the aggregated values
        if (detail.is_open()) {
            std::map<std::string, double> phi_norm;
            {
                std::vector<QppScore> tmp;
                for (std::size_t i = 0; i < qids.size(); ++i)
                    tmp.push_back(QppScore{qids[i], method, phi[i], std::nullopt});
                for (const auto& s : normalize_scores(std::move(tmp)))
                    phi_norm[s.query_id] = *s.normalized;
            }
            std::map<MetricId, std::map<std::string, double>> mus;
            for (const auto& metric : all_metrics) {
                const auto& vals = metric_values.at(metric);
                for (std::size_t i = 0; i < qids.size(); ++i)
                    mus[metric].emplace(qids[i], vals[i]);
            }
            for (const auto& metric : all_metrics) {
                auto single = apae_single_metric(mus.at(metric), phi_norm);
                for (const auto& [qid, v] : single.per_query)
                    detail << method << '\t' << qid << '\t' << metric.name() << '\t'
                           << format_double(v) << '\n';
            }
            for (auto agg : aggs) {
                auto res = apae_multi_metric(mus, phi_norm, agg);
                for (const auto& [qid, v] : res.per_query)
                    detail << method << '\t' << qid << '\t' << aggregator_name(agg) << '\t'
                           << format_double(v) << '\n';
            }
        }
    }
}

struct HarnessArgs {
    std::string config, out;
    int splits = -1;
    long seed = -1;
};

ExperimentConfig harness_config(const HarnessArgs& a) {
    auto cfg = read_config(a.config);
    if (a.splits > 0) cfg.n_splits = a.splits;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    int cap = env_thread_cap();
    if (cap > 0) cfg.threads = std::min(cfg.threads, cap);
    return cfg;
}

void cmd_experiment(const HarnessArgs& a) {
    auto cfg = harness_config(a);
    if (!a.out.empty()) cfg.out_dir = a.out;
    auto report = run_experiment(cfg);
    std::cout << "wrote report bundle to " << cfg.out_dir << " (" << report.n_queries
              << " queries, " << report.agreement.size() << " agreement cells, "
              << report.metric_stability_listwise.size() +
                     report.model_stability_listwise.size()
              << " stability cells per evaluator)\n";
}

void cmd_agreement(const HarnessArgs& a) {
    auto cfg = harness_config(a);
    cfg.out_dir.clear();
    auto report = run_experiment(cfg);
    std::string path = a.out.empty() ? "agreement.tsv" : a.out;
    write_agreement_tsv(path, report.agreement);
    std::cout << "wrote " << path << '\n';
}

void cmd_stability(const HarnessArgs& a) {
    auto cfg = harness_config(a);
    cfg.out_dir.clear();
    auto report = run_experiment(cfg);
    std::string dir = a.out.empty() ? "." : a.out;
    write_stability_tsvs(dir, report);
    std::cout << "wrote stability tables to " << dir << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qppbench: pointwise and listwise QPP evaluation pipeline"};
    app.require_subcommand(1);

    IndexArgs index_args;
    auto* index_cmd = app.add_subcommand("index", "build an index and report its statistics");
    index_cmd->add_option("--corpus", index_args.corpus, "corpus JSONL or TSV")->required();
    index_cmd->add_option("--stopwords", index_args.stopwords, "stopword file");
    index_cmd->add_option("--out", index_args.out, "output stats JSON")->required();

    RetrieveArgs retrieve_args;
    auto* retrieve_cmd = app.add_subcommand("retrieve", "write a TREC run file");
    retrieve_cmd->add_option("--corpus", retrieve_args.corpus)->required();
    retrieve_cmd->add_option("--topics", retrieve_args.topics)->required();
    retrieve_cmd->add_option("--stopwords", retrieve_args.stopwords);
    retrieve_cmd->add_option("--model", retrieve_args.model,
                             "bm25 | lmdir | lmjm, optionally with (params)");
    retrieve_cmd->add_option("--model-params", retrieve_args.model_params,
                             "comma-separated model parameters");
    retrieve_cmd->add_option("--k", retrieve_args.k, "retrieval depth")
        ->check(CLI::PositiveNumber);
    retrieve_cmd->add_option("--tag", retrieve_args.tag, "run tag");
    retrieve_cmd->add_option("--out", retrieve_args.out, "output run file")->required();

    MetricsArgs metrics_args;
    auto* metrics_cmd = app.add_subcommand("metrics", "per-query metric values from run+qrels");
    metrics_cmd->add_option("--run", metrics_args.run)->required();
    metrics_cmd->add_option("--qrels", metrics_args.qrels)->required();
    metrics_cmd->add_option("--metrics", metrics_args.metrics, "metric list, e.g. AP@100,P@10");
    metrics_cmd->add_option("--out", metrics_args.out, "output TSV")->required();

    QppArgs qpp_args;
    auto* qpp_cmd = app.add_subcommand("qpp", "QPP scores from run+index");
    qpp_cmd->add_option("--corpus", qpp_args.corpus)->required();
    qpp_cmd->add_option("--topics", qpp_args.topics)->required();
    qpp_cmd->add_option("--stopwords", qpp_args.stopwords);
    qpp_cmd->add_option("--run", qpp_args.run)->required();
    qpp_cmd->add_option("--model", qpp_args.model, "model behind the run (nqc/wig/uef)");
    qpp_cmd->add_option("--model-params", qpp_args.model_params);
    qpp_cmd->add_option("--qpp", qpp_args.qpp,
                        "method specs, e.g. avgidf,nqc(k=100),uef-wig(k=100,fb_docs=10,"
                        "fb_terms=100)")
        ->required();
    qpp_cmd->add_option("--rm-mu", qpp_args.rm_mu, "Dirichlet mu for relevance models");
    qpp_cmd->add_option("--out", qpp_args.out, "output score TSV")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "listwise + apae values from score/metric TSVs");
    eval_cmd->add_option("--scores", eval_args.scores, "QPP score TSV")->required();
    eval_cmd->add_option("--metrics", eval_args.metrics, "metric TSV from the metrics command")
        ->required();
    eval_cmd->add_option("--aggregator", eval_args.aggregator, "avg|min|max (default: all)");
    eval_cmd->add_option("--per-query", eval_args.per_query,
                         "also write per-query agreement detail TSV");
    eval_cmd->add_option("--out", eval_args.out, "output TSV")->required();

    HarnessArgs agreement_args, stability_args, experiment_args;
    auto* agreement_cmd = app.add_subcommand("agreement", "Table-2 style agreement TSV");
    agreement_cmd->add_option("--config", agreement_args.config)->required();
    agreement_cmd->add_option("--out", agreement_args.out, "output TSV path");
    agreement_cmd->add_option("--splits", agreement_args.splits);
    agreement_cmd->add_option("--seed", agreement_args.seed);

    auto* stability_cmd = app.add_subcommand("stability", "Table-3 style stability TSVs");
    stability_cmd->add_option("--config", stability_args.config)->required();
    stability_cmd->add_option("--out", stability_args.out, "output directory");
    stability_cmd->add_option("--splits", stability_args.splits);
    stability_cmd->add_option("--seed", stability_args.seed);

    auto* experiment_cmd = app.add_subcommand("experiment", "full pipeline from a config file");
    experiment_cmd->add_option("--config", experiment_args.config)->required();
    experiment_cmd->add_option("--out", experiment_args.out, "output directory override");
    experiment_cmd->add_option("--splits", experiment_args.splits);
    experiment_cmd->add_option("--seed", experiment_args.seed);

    CLI11_PARSE(app, argc, argv);

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (index_cmd->parsed())
            cmd_index(index_args);
        else if (retrieve_cmd->parsed())
            cmd_retrieve(retrieve_args);
        else if (metrics_cmd->parsed())
            cmd_metrics(metrics_args);
        else if (qpp_cmd->parsed())
            cmd_qpp(qpp_args);
        else if (eval_cmd->parsed())
            cmd_eval(eval_args);
        else if (agreement_cmd->parsed())
            cmd_agreement(agreement_args);
        else if (stability_cmd->parsed())
            cmd_stability(stability_args);
        else if (experiment_cmd->parsed())
            cmd_experiment(experiment_args);
    } catch (const std::exception& e) {
        std::cerr << "error: [" << stage << "] " << e.what() << '\n';
        return 1;
    }
    return 0;
}
