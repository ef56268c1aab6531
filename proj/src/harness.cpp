#include "qppbench/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "qppbench/format.hpp"

namespace qppbench {

std::string evaluator_name(Evaluator e) {
    switch (e) {
        case Evaluator::Pearson: return "pearson";
        case Evaluator::Spearman: return "spearman";
        case Evaluator::Kendall: return "kendall";
        case Evaluator::OneMinusSare: return "sare";
        case Evaluator::ApaeAvg: return "apae_avg";
        case Evaluator::ApaeMin: return "apae_min";
        case Evaluator::ApaeMax: return "apae_max";
    }
    return "?";
}

Evaluator parse_evaluator(std::string_view name) {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (s == "pearson" || s == "r") return Evaluator::Pearson;
    if (s == "spearman" || s == "rho") return Evaluator::Spearman;
    if (s == "kendall" || s == "tau") return Evaluator::Kendall;
    if (s == "sare" || s == "1-sare" || s == "one_minus_sare") return Evaluator::OneMinusSare;
    if (s == "apae_avg") return Evaluator::ApaeAvg;
    if (s == "apae_min") return Evaluator::ApaeMin;
    if (s == "apae_max") return Evaluator::ApaeMax;
    throw std::runtime_error("parse_evaluator: unknown evaluator '" + std::string(name) + "'");
}

bool is_listwise(Evaluator e) {
    return e == Evaluator::Pearson || e == Evaluator::Spearman || e == Evaluator::Kendall ||
           e == Evaluator::OneMinusSare;
}

Aggregator evaluator_aggregator(Evaluator e) {
    switch (e) {
        case Evaluator::ApaeAvg: return Aggregator::Avg;
        case Evaluator::ApaeMin: return Aggregator::Min;
        case Evaluator::ApaeMax: return Aggregator::Max;
        default: throw std::invalid_argument("evaluator_aggregator: not an apae evaluator");
    }
}

std::vector<QppParams> method_grid(QppMethod m, const HyperGrids& grids) {
    if (grids.k.empty() || grids.fb_docs.empty() || grids.fb_terms.empty())
        throw std::invalid_argument("method_grid: empty hyperparameter grid");
    std::vector<QppParams> out;
    switch (m) {
        case QppMethod::AvgIdf:
            out.push_back(QppParams{});
            break;
        case QppMethod::Nqc:
        case QppMethod::Wig:
            for (int k : grids.k) {
                QppParams p;
                p.k = k;
                out.push_back(p);
            }
            break;
        case QppMethod::Clarity:
        case QppMethod::UefClarity:
            for (int fd : grids.fb_docs)
                for (int ft : grids.fb_terms) {
                    QppParams p;
                    p.fb_docs = fd;
                    p.fb_terms = ft;
                    out.push_back(p);
                }
            break;
        case QppMethod::UefNqc:
        case QppMethod::UefWig:
            for (int fd : grids.fb_docs)
                for (int ft : grids.fb_terms)
                    for (int k : grids.k) {
                        QppParams p;
                        p.k = k;
                        p.fb_docs = fd;
                        p.fb_terms = ft;
                        out.push_back(p);
                    }
            break;
    }
    return out;
}

ExperimentConfig default_config() {
    ExperimentConfig cfg;
    cfg.models = {RetrievalModel::lm_jelinek_mercer(0.6), RetrievalModel::lm_dirichlet(1000),
                  RetrievalModel::bm25(0.7, 0.3)};
    cfg.extra_models = {RetrievalModel::lm_jelinek_mercer(0.3), RetrievalModel::bm25(0.3, 0.7),
                        RetrievalModel::lm_dirichlet(500)};
    cfg.metrics = parse_metric_list("AP@100,nDCG@100,P@10,R@100");
    cfg.stability_metrics = parse_metric_list("AP@10,AP@100,R@10,R@100,nDCG@10,nDCG@100");
    cfg.model_stability_metrics = parse_metric_list("AP@100,nDCG@100,R@100");
    cfg.methods = {QppMethod::AvgIdf,     QppMethod::Clarity, QppMethod::Nqc,
                   QppMethod::Wig,        QppMethod::UefClarity, QppMethod::UefNqc,
                   QppMethod::UefWig};
    cfg.evaluators = {Evaluator::Pearson, Evaluator::Spearman, Evaluator::Kendall,
                      Evaluator::OneMinusSare, Evaluator::ApaeAvg, Evaluator::ApaeMin,
                      Evaluator::ApaeMax};
    return cfg;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            auto t = trim(cur);
            if (!t.empty()) out.push_back(t);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    auto t = trim(cur);
    if (!t.empty()) out.push_back(t);
    return out;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    for (const auto& tok : split_csv(s)) out.push_back(static_cast<int>(parse_long(tok, key)));
    if (out.empty()) throw std::runtime_error(key + ": empty list");
    return out;
}

} // namespace

ExperimentConfig read_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    ExperimentConfig cfg = default_config();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        const std::string where = path + ":" + std::to_string(lineno);

        if (key == "corpus")
            cfg.corpus = value;
        else if (key == "topics")
            cfg.topics = value;
        else if (key == "qrels")
            cfg.qrels = value;
        else if (key == "stopwords")
            cfg.stopwords = value;
        else if (key == "models") {
            cfg.models.clear();
            for (const auto& tok : split_csv(value)) cfg.models.push_back(parse_model(tok));
        } else if (key == "extra_models") {
            cfg.extra_models.clear();
            for (const auto& tok : split_csv(value))
                cfg.extra_models.push_back(parse_model(tok));
        } else if (key == "metrics")
            cfg.metrics = parse_metric_list(value);
        else if (key == "stability_metrics")
            cfg.stability_metrics = parse_metric_list(value);
        else if (key == "model_stability_metrics")
            cfg.model_stability_metrics = parse_metric_list(value);
        else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& tok : split_csv(value)) cfg.methods.push_back(parse_method(tok));
        } else if (key == "evaluators") {
            cfg.evaluators.clear();
            for (const auto& tok : split_csv(value))
                cfg.evaluators.push_back(parse_evaluator(tok));
        } else if (key == "k")
            cfg.k = static_cast<int>(parse_long(value, where));
        else if (key == "n_splits")
            cfg.n_splits = static_cast<int>(parse_long(value, where));
        else if (key == "seed")
            cfg.seed = static_cast<std::uint64_t>(parse_long(value, where));
        else if (key == "rm_mu")
            cfg.rm_mu = parse_double(value, where);
        else if (key == "threads")
            cfg.threads = static_cast<int>(parse_long(value, where));
        else if (key == "out")
            cfg.out_dir = value;
        else if (key == "grid_k")
            cfg.grids.k = parse_int_list(value, where);
        else if (key == "grid_fb_docs")
            cfg.grids.fb_docs = parse_int_list(value, where);
        else if (key == "grid_fb_terms")
            cfg.grids.fb_terms = parse_int_list(value, where);
        else
            throw std::runtime_error(where + ": unknown config key '" + key + "'");
    }
    if (cfg.corpus.empty() || cfg.topics.empty() || cfg.qrels.empty())
        throw std::runtime_error(path + ": corpus, topics and qrels are required");
    return cfg;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

SplitPlan make_splits(std::vector<std::string> query_ids, int n_splits, std::uint64_t seed) {
    if (n_splits < 1) throw std::invalid_argument("make_splits: n_splits must be >= 1");
    std::sort(query_ids.begin(), query_ids.end());
    if (std::adjacent_find(query_ids.begin(), query_ids.end()) != query_ids.end())
        throw std::invalid_argument("make_splits: duplicate query ids");
    if (query_ids.size() < 2) throw std::invalid_argument("make_splits: need >= 2 queries");

    SplitPlan plan;
    plan.seed = seed;
    plan.splits.reserve(n_splits);
    const std::size_t train_n = (query_ids.size() + 1) / 2;
    for (int s = 0; s < n_splits; ++s) {
        // split-indexed generator: sampling is independent of execution order
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(s) + 1)));
        auto shuffled = query_ids;
        for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
            std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
            std::swap(shuffled[i], shuffled[j]);
        }
        std::vector<std::string> train(shuffled.begin(), shuffled.begin() + train_n);
        std::vector<std::string> test(shuffled.begin() + train_n, shuffled.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
        plan.splits.emplace_back(std::move(train), std::move(test));
    }
    return plan;
}

namespace {

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int t = std::min<int>(threads, static_cast<int>(n));
    pool.reserve(t);
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

bool method_needs_collection_score(QppMethod m) {
    return m == QppMethod::Nqc || m == QppMethod::Wig || m == QppMethod::UefNqc ||
           m == QppMethod::UefWig;
}

bool method_needs_feedback(QppMethod m) {
    return m == QppMethod::Clarity || m == QppMethod::UefClarity || m == QppMethod::UefNqc ||
           m == QppMethod::UefWig;
}

struct FbCell {
    double clarity = 0.0;
    double kappa = 1.0;
};

void fill_predictors(const ExperimentConfig& cfg, const Index& index,
                     const std::vector<Query>& queries, ModelData& md) {
    const std::size_t nq = queries.size();
    bool need_coll = false, need_fb = false;
    for (auto m : cfg.methods) {
        need_coll = need_coll || method_needs_collection_score(m);
        need_fb = need_fb || method_needs_feedback(m);
    }

    std::vector<double> coll(nq, 0.0);
    if (need_coll)
        for (std::size_t q = 0; q < nq; ++q)
            coll[q] = collection_score(md.model, index, queries[q]);

    // Shared clarity / rerank-similarity values per (query, fb_docs, fb_terms).
    const auto& fds = cfg.grids.fb_docs;
    const auto& fts = cfg.grids.fb_terms;
    std::vector<std::vector<std::vector<FbCell>>> fb(
        nq, std::vector<std::vector<FbCell>>(fds.size(), std::vector<FbCell>(fts.size())));
    if (need_fb) {
        parallel_for(nq, cfg.threads, [&](std::size_t q) {
            for (std::size_t i = 0; i < fds.size(); ++i)
                for (std::size_t j = 0; j < fts.size(); ++j) {
                    auto rm = relevance_model(md.runs[q], index, queries[q], fds[i], fts[j],
                                              cfg.rm_mu);
                    FbCell cell;
                    cell.clarity = clarity_from_model(rm, index);
                    cell.kappa = md.runs[q].entries.size() < 2
                                     ? 1.0
                                     : rerank_similarity(md.runs[q], index, rm, cfg.rm_mu);
                    fb[q][i][j] = cell;
                }
        });
    }
    auto fd_index = [&](int v) {
        return static_cast<std::size_t>(std::find(fds.begin(), fds.end(), v) - fds.begin());
    };
    auto ft_index = [&](int v) {
        return static_cast<std::size_t>(std::find(fts.begin(), fts.end(), v) - fts.begin());
    };

    md.predictors.clear();
    md.predictors.reserve(cfg.methods.size());
    for (auto method : cfg.methods) {
        PredictorTable table;
        table.method = method;
        table.grid = method_grid(method, cfg.grids);
        table.scores.assign(table.grid.size(), std::vector<double>(nq, 0.0));
        for (std::size_t g = 0; g < table.grid.size(); ++g) {
            const auto& p = table.grid[g];
            for (std::size_t q = 0; q < nq; ++q) {
                double v = 0.0;
                switch (method) {
                    case QppMethod::AvgIdf:
                        v = avg_idf(queries[q], index);
                        break;
                    case QppMethod::Nqc:
                        v = nqc(md.runs[q], coll[q], p.k);
                        break;
                    case QppMethod::Wig:
                        v = wig(md.runs[q], coll[q], queries[q].terms.size(), p.k);
                        break;
                    case QppMethod::Clarity:
                        v = fb[q][fd_index(p.fb_docs)][ft_index(p.fb_terms)].clarity;
                        break;
                    case QppMethod::UefClarity: {
                        const auto& cell = fb[q][fd_index(p.fb_docs)][ft_index(p.fb_terms)];
                        v = cell.kappa * cell.clarity;
                        break;
                    }
                    case QppMethod::UefNqc: {
                        const auto& cell = fb[q][fd_index(p.fb_docs)][ft_index(p.fb_terms)];
                        v = cell.kappa * nqc(md.runs[q], coll[q], p.k);
                        break;
                    }
                    case QppMethod::UefWig: {
                        const auto& cell = fb[q][fd_index(p.fb_docs)][ft_index(p.fb_terms)];
                        v = cell.kappa * wig(md.runs[q], coll[q], queries[q].terms.size(), p.k);
                        break;
                    }
                }
                table.scores[g][q] = v;
            }
        }
        md.predictors.push_back(std::move(table));
    }
}

} // namespace

ExperimentData prepare_experiment(const ExperimentConfig& cfg) {
    TokenizerConfig tok;
    if (!cfg.stopwords.empty()) tok.stopwords = read_stopwords(cfg.stopwords);

    ExperimentData data;
    data.index = build_index(read_corpus(cfg.corpus), tok);
    if (data.index.num_docs() == 0 || data.index.total_len() == 0)
        throw std::runtime_error("prepare_experiment: corpus produced an empty index");
    data.qrels = Qrels::read(cfg.qrels);

    auto queries = read_topics_tsv(cfg.topics, tok);
    if (queries.size() < 2)
        throw std::runtime_error("prepare_experiment: need at least 2 topics");
    std::sort(queries.begin(), queries.end(),
              [](const Query& a, const Query& b) { return a.query_id < b.query_id; });

    // Model configs: main models first, then the extra parameterizations.
    std::vector<RetrievalModel> all_models = cfg.models;
    for (const auto& m : cfg.extra_models) {
        bool dup = false;
        for (const auto& existing : all_models) dup = dup || existing.name() == m.name();
        if (!dup) all_models.push_back(m);
    }
    if (all_models.empty()) throw std::runtime_error("prepare_experiment: no models configured");
    data.n_main_models = cfg.models.size();

    // Retrieve under every model, then drop queries that cannot be evaluated
    // everywhere (no indexed term or an empty candidate set).
    std::vector<std::vector<RankedList>> runs(all_models.size(),
                                              std::vector<RankedList>(queries.size()));
    for (std::size_t m = 0; m < all_models.size(); ++m) {
        parallel_for(queries.size(), cfg.threads, [&, m](std::size_t q) {
            runs[m][q] = retrieve_topk(all_models[m], data.index, queries[q],
                                       static_cast<std::size_t>(cfg.k));
        });
    }
    std::vector<std::size_t> keep;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        bool ok = !queries[q].terms.empty();
        for (std::size_t m = 0; ok && m < all_models.size(); ++m)
            ok = !runs[m][q].entries.empty();
        if (ok)
            keep.push_back(q);
        else
            data.excluded_queries.push_back(queries[q].query_id);
    }
    if (keep.size() < 2)
        throw std::runtime_error("prepare_experiment: fewer than 2 evaluable queries");

    for (auto q : keep) {
        data.queries.push_back(queries[q]);
        data.query_ids.push_back(queries[q].query_id);
    }

    // Metric tables over the union of every metric list in play.
    std::set<MetricId> metric_union(cfg.metrics.begin(), cfg.metrics.end());
    metric_union.insert(cfg.stability_metrics.begin(), cfg.stability_metrics.end());
    metric_union.insert(cfg.model_stability_metrics.begin(),
                        cfg.model_stability_metrics.end());

    data.models.resize(all_models.size());
    for (std::size_t m = 0; m < all_models.size(); ++m) {
        auto& md = data.models[m];
        md.model = all_models[m];
        md.runs.reserve(keep.size());
        for (auto q : keep) md.runs.push_back(std::move(runs[m][q]));
        for (const auto& metric : metric_union) {
            auto& vals = md.metric_values[metric];
            vals.reserve(keep.size());
            for (std::size_t q = 0; q < md.runs.size(); ++q)
                vals.push_back(eval_metric(metric, md.runs[q], data.qrels));
        }
        fill_predictors(cfg, data.index, data.queries, md);
    }
    return data;
}

std::optional<double> evaluate_scores(const std::vector<std::string>& query_ids,
                                      const std::map<MetricId, std::vector<double>>& metric_values,
                                      const std::vector<double>& phi, Evaluator ev,
                                      const std::vector<MetricId>& metric_set,
                                      const std::vector<std::size_t>& subset) {
    if (metric_set.empty()) throw std::invalid_argument("evaluate_scores: empty metric set");
    if (subset.empty()) throw std::invalid_argument("evaluate_scores: empty query subset");

    if (is_listwise(ev)) {
        const auto& mu = metric_values.at(metric_set.front());
        if (ev == Evaluator::OneMinusSare) {
            std::map<std::string, double> mu_map, phi_map;
            for (auto q : subset) {
                mu_map.emplace(query_ids[q], mu[q]);
                phi_map.emplace(query_ids[q], phi[q]);
            }
            return one_minus_sare(rank_queries(mu_map), rank_queries(phi_map)).mean;
        }
        if (subset.size() < 2) return std::nullopt;
        std::vector<double> x, y;
        x.reserve(subset.size());
        y.reserve(subset.size());
        for (auto q : subset) {
            x.push_back(mu[q]);
            y.push_back(phi[q]);
        }
        switch (ev) {
            case Evaluator::Pearson: return pearson_r(x, y);
            case Evaluator::Spearman: return spearman_rho(x, y);
            case Evaluator::Kendall: return kendall_tau(x, y);
            default: break;
        }
        throw std::logic_error("evaluate_scores: unreachable");
    }

    // apae evaluators: min-max normalize phi over the subset, then aggregate
    // agreements over the metric set.
    double lo = phi[subset.front()], hi = lo;
    for (auto q : subset) {
        lo = std::min(lo, phi[q]);
        hi = std::max(hi, phi[q]);
    }
    std::map<std::string, double> phi_norm;
    for (auto q : subset)
        phi_norm.emplace(query_ids[q], hi == lo ? 0.5 : (phi[q] - lo) / (hi - lo));

    std::map<MetricId, std::map<std::string, double>> mus;
    for (const auto& metric : metric_set) {
        const auto& vals = metric_values.at(metric);
        auto& mu_map = mus[metric];
        for (auto q : subset) mu_map.emplace(query_ids[q], vals[q]);
    }
    return apae_multi_metric(mus, phi_norm, evaluator_aggregator(ev)).mean;
}

TuneOutcome tune(const std::vector<std::string>& query_ids,
                 const std::map<MetricId, std::vector<double>>& metric_values,
                 const PredictorTable& table, Evaluator objective,
                 const std::vector<MetricId>& metric_set,
                 const std::vector<std::size_t>& train_subset) {
    if (table.grid.empty()) throw std::invalid_argument("tune: empty grid");
    TuneOutcome out;
    double best = 0.0;
    bool any = false;
    for (std::size_t g = 0; g < table.grid.size(); ++g) {
        auto v = evaluate_scores(query_ids, metric_values, table.scores[g], objective,
                                 metric_set, train_subset);
        if (v && (!any || *v > best)) {
            best = *v;
            out.grid_index = g;
            any = true;
        }
    }
    out.fallback = !any;
    return out;
}

ContextSummary evaluate_context(const std::vector<std::string>& query_ids,
                                const std::map<MetricId, std::vector<double>>& metric_values,
                                const PredictorTable& table, Evaluator ev,
                                const std::vector<MetricId>& metric_set, const SplitPlan& plan) {
    std::unordered_map<std::string, std::size_t> pos;
    pos.reserve(query_ids.size());
    for (std::size_t i = 0; i < query_ids.size(); ++i) pos.emplace(query_ids[i], i);
    auto to_indices = [&](const std::vector<std::string>& ids) {
        std::vector<std::size_t> out;
        out.reserve(ids.size());
        for (const auto& id : ids) {
            auto it = pos.find(id);
            if (it == pos.end())
                throw std::runtime_error("evaluate_context: split references unknown query '" +
                                         id + "'");
            out.push_back(it->second);
        }
        return out;
    };

    ContextSummary summary;
    summary.n_splits = static_cast<int>(plan.splits.size());
    double sum = 0.0;
    for (const auto& [train_ids, test_ids] : plan.splits) {
        auto train = to_indices(train_ids);
        auto test = to_indices(test_ids);
        auto tuned = tune(query_ids, metric_values, table, ev, metric_set, train);
        if (tuned.fallback) ++summary.tune_fallbacks;
        auto v = evaluate_scores(query_ids, metric_values, table.scores[tuned.grid_index], ev,
                                 metric_set, test);
        summary.per_split.push_back(v);
        summary.chosen_grid.push_back(tuned.grid_index);
        if (v)
            sum += *v;
        else
            ++summary.degenerate;
    }
    if (summary.defined()) sum /= static_cast<double>(summary.n_splits - summary.degenerate);
    summary.mean = summary.defined() ? sum : 0.0;
    return summary;
}

std::optional<QueryRanking> system_ranking(const std::map<std::string, ContextSummary>& values) {
    std::map<std::string, double> v;
    for (const auto& [name, summary] : values) {
        if (!summary.defined()) return std::nullopt;
        v.emplace(name, summary.mean);
    }
    return rank_queries(v);
}

namespace {

std::string metric_set_key(const std::vector<MetricId>& metrics) {
    std::string key;
    for (const auto& m : metrics) {
        if (!key.empty()) key += '+';
        key += m.name();
    }
    return key;
}

std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-')
            out.push_back(c);
        else
            out.push_back('_');
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

// Lazily evaluated (model, evaluator, metric set) contexts over all methods.
class ContextCache {
public:
    ContextCache(const ExperimentData& data, const SplitPlan& plan, ExperimentReport& report)
        : data_(data), plan_(plan), report_(report) {}

    const std::map<std::string, ContextSummary>& get(std::size_t model_idx, Evaluator ev,
                                                     const std::vector<MetricId>& metric_set) {
        Key key{model_idx, ev, metric_set_key(metric_set)};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;

        const auto& md = data_.models[model_idx];
        std::map<std::string, ContextSummary> values;
        for (const auto& table : md.predictors) {
            auto summary = evaluate_context(data_.query_ids, md.metric_values, table, ev,
                                            metric_set, plan_);
            report_.context_values.push_back(
                ExperimentReport::ContextRow{md.model.name(), ev, std::get<2>(key),
                                             method_name(table.method), summary});
            values.emplace(method_name(table.method), std::move(summary));
        }
        return cache_.emplace(std::move(key), std::move(values)).first->second;
    }

    std::optional<QueryRanking> ranking(std::size_t model_idx, Evaluator ev,
                                        const std::vector<MetricId>& metric_set) {
        return system_ranking(get(model_idx, ev, metric_set));
    }

private:
    using Key = std::tuple<std::size_t, Evaluator, std::string>;
    const ExperimentData& data_;
    const SplitPlan& plan_;
    ExperimentReport& report_;
    std::map<Key, std::map<std::string, ContextSummary>> cache_;
};

std::optional<double> ranking_tau(const std::optional<QueryRanking>& a,
                                  const std::optional<QueryRanking>& b) {
    if (!a || !b) return std::nullopt;
    return kendall_between_rankings(*a, *b);
}

std::string tau_or_degenerate(const std::optional<double>& v) {
    return v ? format_double(*v) : "degenerate";
}

void write_stability_file(const std::filesystem::path& path, const char* fixed_col,
                          const char* a_col, const char* b_col,
                          const std::vector<StabilityCell>& cells) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << fixed_col << '\t' << a_col << '\t' << b_col << "\ttau\n";
    for (const auto& cell : cells)
        out << cell.fixed << '\t' << cell.a << '\t' << cell.b << '\t'
            << tau_or_degenerate(cell.tau) << '\n';
}

void write_reports(const ExperimentConfig& cfg, const ExperimentData& data,
                   const SplitPlan& plan, const ExperimentReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "runs");

    for (const auto& md : data.models)
        write_run((fs::path(cfg.out_dir) / "runs" / (sanitize_filename(md.model.name()) + ".run"))
                      .string(),
                  md.runs, "qppbench");

    {
        std::ofstream out(fs::path(cfg.out_dir) / "metrics.tsv");
        out << "model\tquery_id\tmetric\tvalue\n";
        for (const auto& md : data.models)
            for (const auto& [metric, vals] : md.metric_values)
                for (std::size_t q = 0; q < vals.size(); ++q)
                    out << md.model.name() << '\t' << data.query_ids[q] << '\t' << metric.name()
                        << '\t' << format_double(vals[q]) << '\n';
    }
    {
        std::ofstream out(fs::path(cfg.out_dir) / "context_values.tsv");
        out << "model\tevaluator\tmetrics\tmethod\tmean\tn_splits\tdegenerate_splits\n";
        for (const auto& row : report.context_values)
            out << row.model << '\t' << evaluator_name(row.ev) << '\t' << row.metrics << '\t'
                << row.method << '\t'
                << (row.summary.defined() ? format_double(row.summary.mean) : "degenerate")
                << '\t' << row.summary.n_splits << '\t' << row.summary.degenerate << '\n';
    }
    write_agreement_tsv((fs::path(cfg.out_dir) / "agreement.tsv").string(), report.agreement);
    write_stability_tsvs(cfg.out_dir, report);

    nlohmann::ordered_json j;
    j["n_queries"] = report.n_queries;
    j["excluded_queries"] = report.excluded_queries;
    j["splits"] = {{"n", plan.splits.size()},
                   {"seed", plan.seed},
                   {"train_size", plan.splits.empty() ? 0 : plan.splits[0].first.size()},
                   {"test_size", plan.splits.empty() ? 0 : plan.splits[0].second.size()}};
    {
        nlohmann::ordered_json models = nlohmann::ordered_json::array();
        for (const auto& md : data.models) models.push_back(md.model.name());
        j["models"] = models;
        nlohmann::ordered_json methods = nlohmann::ordered_json::array();
        for (auto m : cfg.methods) methods.push_back(method_name(m));
        j["methods"] = methods;
        j["k"] = cfg.k;
        j["rm_mu"] = cfg.rm_mu;
    }
    {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& row : report.context_values) {
            nlohmann::ordered_json r;
            r["model"] = row.model;
            r["evaluator"] = evaluator_name(row.ev);
            r["metrics"] = row.metrics;
            r["method"] = row.method;
            if (row.summary.defined())
                r["mean"] = row.summary.mean;
            else
                r["mean"] = nullptr;
            r["n_splits"] = row.summary.n_splits;
            r["degenerate_splits"] = row.summary.degenerate;
            r["tune_fallbacks"] = row.summary.tune_fallbacks;
            rows.push_back(std::move(r));
        }
        j["context_values"] = rows;
    }
    {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& cell : report.agreement) {
            nlohmann::ordered_json r;
            r["model"] = cell.model;
            r["listwise"] = evaluator_name(cell.listwise);
            r["apae"] = evaluator_name(cell.apae);
            if (cell.tau)
                r["tau"] = *cell.tau;
            else
                r["tau"] = nullptr;
            rows.push_back(std::move(r));
        }
        j["agreement"] = rows;
    }
    auto stability_json = [](const std::vector<StabilityCell>& cells, const char* fixed_col,
                             const char* a_col, const char* b_col) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const auto& cell : cells) {
            nlohmann::ordered_json r;
            r[fixed_col] = cell.fixed;
            r[a_col] = cell.a;
            r[b_col] = cell.b;
            if (cell.tau)
                r["tau"] = *cell.tau;
            else
                r["tau"] = nullptr;
            rows.push_back(std::move(r));
        }
        return rows;
    };
    j["stability_metric_pairs"] = {
        {"listwise",
         stability_json(report.metric_stability_listwise, "model", "metric_a", "metric_b")},
        {"apae", stability_json(report.metric_stability_apae, "model", "metric_a", "metric_b")}};
    j["stability_model_pairs"] = {
        {"listwise",
         stability_json(report.model_stability_listwise, "metric", "model_a", "model_b")},
        {"apae", stability_json(report.model_stability_apae, "metric", "model_a", "model_b")}};

    std::ofstream out(fs::path(cfg.out_dir) / "summary.json");
    out << j.dump(2) << '\n';
}

} // namespace

void write_agreement_tsv(const std::string& path, const std::vector<AgreementCell>& cells) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "model\tlistwise\tapae\ttau\n";
    for (const auto& cell : cells)
        out << cell.model << '\t' << evaluator_name(cell.listwise) << '\t'
            << evaluator_name(cell.apae) << '\t' << tau_or_degenerate(cell.tau) << '\n';
}

void write_stability_tsvs(const std::string& dir, const ExperimentReport& report) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    write_stability_file(fs::path(dir) / "stability_metrics_listwise.tsv", "model", "metric_a",
                         "metric_b", report.metric_stability_listwise);
    write_stability_file(fs::path(dir) / "stability_metrics_apae.tsv", "model", "metric_a",
                         "metric_b", report.metric_stability_apae);
    write_stability_file(fs::path(dir) / "stability_models_listwise.tsv", "metric", "model_a",
                         "model_b", report.model_stability_listwise);
    write_stability_file(fs::path(dir) / "stability_models_apae.tsv", "metric", "model_a",
                         "model_b", report.model_stability_apae);
}

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ExperimentData& data) {
    if (cfg.methods.size() < 2)
        throw std::runtime_error("run_experiment: need at least 2 QPP methods");
    {
        std::set<QppMethod> distinct(cfg.methods.begin(), cfg.methods.end());
        if (distinct.size() != cfg.methods.size())
            throw std::runtime_error("run_experiment: duplicate QPP method configured");
        std::set<std::string> model_names;
        for (const auto& md : data.models)
            if (!model_names.insert(md.model.name()).second)
                throw std::runtime_error("run_experiment: duplicate model config '" +
                                         md.model.name() + "'");
    }
    if (cfg.metrics.empty()) throw std::runtime_error("run_experiment: empty metric set");
    if (cfg.stability_metrics.size() < 2)
        throw std::runtime_error("run_experiment: need >= 2 stability metrics");
    if (data.models.size() < 2)
        throw std::runtime_error("run_experiment: need >= 2 model configs for the model-pair "
                                 "study");

    std::vector<Evaluator> listwise_evs, apae_evs;
    for (auto e : cfg.evaluators)
        (is_listwise(e) ? listwise_evs : apae_evs).push_back(e);
    if (listwise_evs.empty() || apae_evs.empty())
        throw std::runtime_error("run_experiment: need at least one listwise and one apae "
                                 "evaluator");

    auto plan = make_splits(data.query_ids, cfg.n_splits, cfg.seed);

    ExperimentReport report;
    report.n_queries = data.query_ids.size();
    report.excluded_queries = data.excluded_queries;
    ContextCache cache(data, plan, report);

    const std::vector<MetricId> primary_metric{cfg.metrics.front()};
    const std::size_t n_main = std::min(data.n_main_models, data.models.size());

    // Agreement table: tau between the system ranking under each listwise
    // evaluator (primary metric) and under each apae aggregator (full set).
    for (std::size_t m = 0; m < n_main; ++m) {
        const std::string model_name = data.models[m].model.name();
        for (auto le : listwise_evs) {
            auto ranking_l = cache.ranking(m, le, primary_metric);
            for (auto ae : apae_evs) {
                auto ranking_a = cache.ranking(m, ae, cfg.metrics);
                report.agreement.push_back(
                    AgreementCell{model_name, le, ae, ranking_tau(ranking_l, ranking_a)});
            }
        }
    }

    // Metric-pair stability per main model, under the listwise tau evaluator
    // and under single-metric apae.
    for (std::size_t m = 0; m < n_main; ++m) {
        const std::string model_name = data.models[m].model.name();
        for (std::size_t i = 0; i < cfg.stability_metrics.size(); ++i) {
            for (std::size_t jj = i + 1; jj < cfg.stability_metrics.size(); ++jj) {
                const std::vector<MetricId> ma{cfg.stability_metrics[i]};
                const std::vector<MetricId> mb{cfg.stability_metrics[jj]};
                report.metric_stability_listwise.push_back(StabilityCell{
                    model_name, ma[0].name(), mb[0].name(),
                    ranking_tau(cache.ranking(m, Evaluator::Kendall, ma),
                                cache.ranking(m, Evaluator::Kendall, mb))});
                report.metric_stability_apae.push_back(StabilityCell{
                    model_name, ma[0].name(), mb[0].name(),
                    ranking_tau(cache.ranking(m, Evaluator::ApaeAvg, ma),
                                cache.ranking(m, Evaluator::ApaeAvg, mb))});
            }
        }
    }

    // Model-pair stability per target metric, over every configured model.
    for (const auto& metric : cfg.model_stability_metrics) {
        const std::vector<MetricId> mset{metric};
        for (std::size_t a = 0; a < data.models.size(); ++a) {
            for (std::size_t b = a + 1; b < data.models.size(); ++b) {
                report.model_stability_listwise.push_back(StabilityCell{
                    metric.name(), data.models[a].model.name(), data.models[b].model.name(),
                    ranking_tau(cache.ranking(a, Evaluator::Kendall, mset),
                                cache.ranking(b, Evaluator::Kendall, mset))});
                report.model_stability_apae.push_back(StabilityCell{
                    metric.name(), data.models[a].model.name(), data.models[b].model.name(),
                    ranking_tau(cache.ranking(a, Evaluator::ApaeAvg, mset),
                                cache.ranking(b, Evaluator::ApaeAvg, mset))});
            }
        }
    }

    if (!cfg.out_dir.empty()) write_reports(cfg, data, plan, report);
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    auto data = prepare_experiment(cfg);
    return run_experiment(cfg, data);
}

} // namespace qppbench
