#include "qppbench/qpp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qppbench/format.hpp"
#include "qppbench/listwise.hpp"

namespace qppbench {

std::string method_name(QppMethod m) {
    switch (m) {
        case QppMethod::AvgIdf: return "avgidf";
        case QppMethod::Clarity: return "clarity";
        case QppMethod::Nqc: return "nqc";
        case QppMethod::Wig: return "wig";
        case QppMethod::UefClarity: return "uef-clarity";
        case QppMethod::UefNqc: return "uef-nqc";
        case QppMethod::UefWig: return "uef-wig";
    }
    return "?";
}

QppMethod parse_method(std::string_view name) {
    std::string s(name);
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    // accept the UEF(x) spelling as well
    if (s.size() > 5 && s.rfind("uef(", 0) == 0 && s.back() == ')')
        s = "uef-" + s.substr(4, s.size() - 5);
    if (s == "avgidf") return QppMethod::AvgIdf;
    if (s == "clarity") return QppMethod::Clarity;
    if (s == "nqc") return QppMethod::Nqc;
    if (s == "wig") return QppMethod::Wig;
    if (s == "uef-clarity") return QppMethod::UefClarity;
    if (s == "uef-nqc") return QppMethod::UefNqc;
    if (s == "uef-wig") return QppMethod::UefWig;
    throw std::runtime_error("parse_method: unknown QPP method '" + std::string(name) + "'");
}

std::pair<QppMethod, QppParams> parse_method_spec(std::string_view spec) {
    std::string s(spec);
    QppParams params;
    auto open = s.find('(');
    std::string name = s;
    if (open != std::string::npos) {
        // distinguish uef(clarity) from a parameter list
        std::string inner = s.substr(open + 1, s.size() - open - 2);
        if (inner.find('=') != std::string::npos) {
            if (s.back() != ')')
                throw std::runtime_error("parse_method_spec: missing ')' in '" + s + "'");
            name = s.substr(0, open);
            std::stringstream ss(inner);
            std::string kv;
            while (std::getline(ss, kv, ',')) {
                auto eq = kv.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error("parse_method_spec: expected key=value in '" + s +
                                             "'");
                std::string key = kv.substr(0, eq);
                long val = parse_long(kv.substr(eq + 1), "parse_method_spec");
                if (key == "k")
                    params.k = static_cast<int>(val);
                else if (key == "fb_docs")
                    params.fb_docs = static_cast<int>(val);
                else if (key == "fb_terms")
                    params.fb_terms = static_cast<int>(val);
                else
                    throw std::runtime_error("parse_method_spec: unknown parameter '" + key +
                                             "'");
            }
        }
    }
    return {parse_method(name), params};
}

double avg_idf(const Query& query, const Index& index) {
    if (query.terms.empty()) return 0.0;
    double sum = 0.0;
    bool any = false;
    for (const auto& tok : query.terms) {
        auto df = index.df(tok);
        if (df == 0) continue;
        sum += std::log(static_cast<double>(index.num_docs()) / static_cast<double>(df));
        any = true;
    }
    if (!any) return 0.0;
    return sum / static_cast<double>(query.terms.size());
}

RelevanceModel relevance_model(const RankedList& ranked, const Index& index, const Query& query,
                               int fb_docs, int fb_terms, double mu) {
    if (ranked.entries.empty())
        throw std::invalid_argument("relevance_model: empty ranked list");
    if (fb_docs < 1 || fb_terms < 1)
        throw std::invalid_argument("relevance_model: fb_docs and fb_terms must be >= 1");

    const auto lmdir = RetrievalModel::lm_dirichlet(mu);
    const std::size_t n_fb = std::min<std::size_t>(fb_docs, ranked.entries.size());

    std::vector<DocIdx> docs(n_fb);
    std::vector<double> log_w(n_fb);
    for (std::size_t i = 0; i < n_fb; ++i) {
        auto d = index.find_doc(ranked.entries[i].doc_id);
        if (!d)
            throw std::runtime_error("relevance_model: doc '" + ranked.entries[i].doc_id +
                                     "' not in index");
        docs[i] = *d;
        log_w[i] = score(lmdir, index, query, *d);
    }
    // P(q|d) weights enter only as relative factors; shift the log scores so
    // exp() stays in range.
    double max_lw = *std::max_element(log_w.begin(), log_w.end());

    std::map<TermId, double> acc;
    double mass = 0.0;
    for (std::size_t i = 0; i < n_fb; ++i) {
        double dl = static_cast<double>(index.doc_len(docs[i]));
        if (dl == 0.0) continue;
        double w = std::exp(log_w[i] - max_lw);
        for (const auto& [t, tf] : index.doc_terms(docs[i])) {
            acc[t] += (tf / dl) * w;
            mass += (tf / dl) * w;
        }
    }
    if (mass <= 0.0)
        throw std::runtime_error("relevance_model: no term mass in feedback documents");

    std::vector<std::pair<TermId, double>> items(acc.begin(), acc.end());
    std::sort(items.begin(), items.end(), [&](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return index.term_text(a.first) < index.term_text(b.first);
    });
    if (items.size() > static_cast<std::size_t>(fb_terms)) items.resize(fb_terms);

    double kept = 0.0;
    for (const auto& [t, p] : items) kept += p;
    RelevanceModel rm;
    rm.fb_docs = fb_docs;
    rm.fb_terms = fb_terms;
    rm.probs.reserve(items.size());
    for (const auto& [t, p] : items) rm.probs.emplace_back(t, p / kept);
    return rm;
}

double clarity_from_model(const RelevanceModel& rm, const Index& index) {
    double kl = 0.0;
    for (const auto& [t, p] : rm.probs) {
        double pc = index.collection_prob(t);
        if (pc <= 0.0 || p <= 0.0) continue;
        kl += p * std::log2(p / pc);
    }
    return kl;
}

double clarity(const Query& query, const RankedList& ranked, const Index& index, int fb_docs,
               int fb_terms, double mu) {
    return clarity_from_model(relevance_model(ranked, index, query, fb_docs, fb_terms, mu),
                              index);
}

double nqc(const RankedList& ranked, double coll_score, int k) {
    if (k < 1) throw std::invalid_argument("nqc: k must be >= 1");
    if (ranked.entries.size() < 2) return 0.0;
    if (coll_score == 0.0) throw std::runtime_error("nqc: collection score is zero");
    const std::size_t kk = std::min<std::size_t>(k, ranked.entries.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < kk; ++i) mean += ranked.entries[i].score;
    mean /= static_cast<double>(kk);
    double var = 0.0;
    for (std::size_t i = 0; i < kk; ++i) {
        double d = ranked.entries[i].score - mean;
        var += d * d;
    }
    var /= static_cast<double>(kk);
    return std::sqrt(var) / std::abs(coll_score);
}

double nqc(const Query& query, const RankedList& ranked, const Index& index,
           const RetrievalModel& model, int k) {
    if (ranked.entries.size() < 2) return 0.0;
    return nqc(ranked, collection_score(model, index, query), k);
}

double wig(const RankedList& ranked, double coll_score, std::size_t query_len, int k) {
    if (k < 1) throw std::invalid_argument("wig: k must be >= 1");
    if (query_len == 0) throw std::invalid_argument("wig: empty query");
    if (ranked.entries.empty()) throw std::invalid_argument("wig: empty ranked list");
    const std::size_t kk = std::min<std::size_t>(k, ranked.entries.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < kk; ++i) sum += ranked.entries[i].score - coll_score;
    return sum / static_cast<double>(kk) / std::sqrt(static_cast<double>(query_len));
}

double wig(const Query& query, const RankedList& ranked, const Index& index,
           const RetrievalModel& model, int k) {
    return wig(ranked, collection_score(model, index, query), query.terms.size(), k);
}

double rerank_similarity(const RankedList& ranked, const Index& index, const RelevanceModel& rm,
                         double mu) {
    const std::size_t n = ranked.entries.size();
    if (n < 2) return 1.0;

    std::vector<DocIdx> docs(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto d = index.find_doc(ranked.entries[i].doc_id);
        if (!d)
            throw std::runtime_error("rerank_similarity: doc '" + ranked.entries[i].doc_id +
                                     "' not in index");
        docs[i] = *d;
    }

    // Relevance-model likelihood of each document under Dirichlet smoothing.
    std::vector<double> likelihood(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double dl = static_cast<double>(index.doc_len(docs[i]));
        auto terms = index.doc_terms(docs[i]);
        double ll = 0.0;
        for (const auto& [t, p] : rm.probs) {
            auto it = std::lower_bound(terms.begin(), terms.end(), t,
                                       [](const auto& e, TermId id) { return e.first < id; });
            double tf = (it != terms.end() && it->first == t) ? it->second : 0.0;
            ll += p * std::log((tf + mu * index.collection_prob(t)) / (dl + mu));
        }
        likelihood[i] = ll;
    }

    // Re-ranked order: likelihood descending, doc_id ascending on ties.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (likelihood[a] != likelihood[b]) return likelihood[a] > likelihood[b];
        return ranked.entries[a].doc_id < ranked.entries[b].doc_id;
    });

    std::vector<double> orig_pos(n), new_pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        orig_pos[order[i]] = static_cast<double>(order[i]);
        new_pos[order[i]] = static_cast<double>(i);
    }
    auto tau = kendall_tau(orig_pos, new_pos);
    if (!tau) throw std::logic_error("rerank_similarity: unexpected degenerate tau");
    return *tau;
}

double uef(const Query& query, const RankedList& ranked, const Index& index,
           const RetrievalModel& model, QppMethod base, const QppParams& params, double mu) {
    double base_score = 0.0;
    switch (base) {
        case QppMethod::Clarity:
            base_score = clarity(query, ranked, index, params.fb_docs, params.fb_terms, mu);
            break;
        case QppMethod::Nqc:
            base_score = nqc(query, ranked, index, model, params.k);
            break;
        case QppMethod::Wig:
            base_score = wig(query, ranked, index, model, params.k);
            break;
        default:
            throw std::invalid_argument("uef: base must be clarity, nqc or wig");
    }
    if (ranked.entries.size() < 2) return base_score;
    auto rm = relevance_model(ranked, index, query, params.fb_docs, params.fb_terms, mu);
    return rerank_similarity(ranked, index, rm, mu) * base_score;
}

std::vector<QppScore> normalize_scores(std::vector<QppScore> scores) {
    if (scores.empty()) throw std::invalid_argument("normalize_scores: empty input");
    double lo = scores[0].raw, hi = scores[0].raw;
    for (const auto& s : scores) {
        lo = std::min(lo, s.raw);
        hi = std::max(hi, s.raw);
    }
    for (auto& s : scores)
        s.normalized = (hi == lo) ? 0.5 : (s.raw - lo) / (hi - lo);
    return scores;
}

void write_qpp_scores(const std::string& path, const std::vector<QppScore>& scores) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "query_id\tmethod\traw_score\n";
    for (const auto& s : scores)
        out << s.query_id << '\t' << s.method << '\t' << format_double(s.raw) << '\n';
}

std::vector<QppScore> read_qpp_scores(const std::string& path, bool normalize) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<QppScore> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line == "query_id\tmethod\traw_score") continue;
        std::istringstream ss(line);
        std::string qid, method, raw;
        if (!(ss >> qid >> method >> raw))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed score line (expected 3 fields)");
        out.push_back(QppScore{qid, method,
                               parse_double(raw, path + ":" + std::to_string(lineno)),
                               std::nullopt});
    }
    if (normalize && !out.empty()) {
        // normalize per method over the file's query population
        std::map<std::string, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < out.size(); ++i) groups[out[i].method].push_back(i);
        for (const auto& [m, idxs] : groups) {
            std::vector<QppScore> grp;
            grp.reserve(idxs.size());
            for (auto i : idxs) grp.push_back(out[i]);
            grp = normalize_scores(std::move(grp));
            for (std::size_t j = 0; j < idxs.size(); ++j)
                out[idxs[j]].normalized = grp[j].normalized;
        }
    }
    return out;
}

} // namespace qppbench
