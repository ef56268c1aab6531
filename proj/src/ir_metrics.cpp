#include "qppbench/ir_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qppbench/format.hpp"

namespace qppbench {

void Qrels::add(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) throw std::invalid_argument("qrels: grade must be >= 0");
    by_query_[query_id][doc_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = by_query_.find(query_id);
    if (q == by_query_.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

std::size_t Qrels::total_relevant(const std::string& query_id) const {
    auto q = by_query_.find(query_id);
    if (q == by_query_.end()) return 0;
    std::size_t n = 0;
    for (const auto& [doc, g] : q->second)
        if (g > 0) ++n;
    return n;
}

std::vector<int> Qrels::grades_descending(const std::string& query_id) const {
    std::vector<int> grades;
    auto q = by_query_.find(query_id);
    if (q == by_query_.end()) return grades;
    for (const auto& [doc, g] : q->second) grades.push_back(g);
    std::sort(grades.begin(), grades.end(), std::greater<>());
    return grades;
}

bool Qrels::has_query(const std::string& query_id) const {
    return by_query_.count(query_id) > 0;
}

Qrels Qrels::read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    Qrels qrels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string qid, iter, docid, grade_tok;
        if (!(ss >> qid >> iter >> docid >> grade_tok))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed qrels line (expected 4 fields)");
        long g = parse_long(grade_tok, path + ":" + std::to_string(lineno));
        qrels.add(qid, docid, static_cast<int>(g));
    }
    return qrels;
}

void Qrels::write(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& [qid, docs] : by_query_)
        for (const auto& [docid, g] : docs) out << qid << " 0 " << docid << ' ' << g << '\n';
}

std::string MetricId::name() const {
    const char* fam = "";
    switch (family) {
        case MetricFamily::AP: fam = "AP"; break;
        case MetricFamily::NDCG: fam = "nDCG"; break;
        case MetricFamily::P: fam = "P"; break;
        case MetricFamily::R: fam = "R"; break;
    }
    return std::string(fam) + "@" + std::to_string(cutoff);
}

MetricId parse_metric(std::string_view spec) {
    auto at = spec.find('@');
    if (at == std::string_view::npos || at == 0 || at + 1 >= spec.size())
        throw std::runtime_error("parse_metric: expected FAMILY@CUTOFF, got '" +
                                 std::string(spec) + "'");
    std::string fam(spec.substr(0, at));
    for (auto& c : fam) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    MetricId m;
    if (fam == "ap")
        m.family = MetricFamily::AP;
    else if (fam == "ndcg")
        m.family = MetricFamily::NDCG;
    else if (fam == "p")
        m.family = MetricFamily::P;
    else if (fam == "r" || fam == "recall")
        m.family = MetricFamily::R;
    else
        throw std::runtime_error("parse_metric: unknown family '" + fam + "'");
    long cutoff = parse_long(std::string(spec.substr(at + 1)), "parse_metric");
    if (cutoff < 1) throw std::runtime_error("parse_metric: cutoff must be >= 1");
    m.cutoff = static_cast<int>(cutoff);
    return m;
}

std::vector<MetricId> parse_metric_list(std::string_view csv) {
    std::vector<MetricId> out;
    std::string cur;
    std::stringstream ss{std::string(csv)};
    while (std::getline(ss, cur, ',')) {
        std::size_t b = cur.find_first_not_of(" \t");
        std::size_t e = cur.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        out.push_back(parse_metric(cur.substr(b, e - b + 1)));
    }
    if (out.empty()) throw std::runtime_error("parse_metric_list: empty metric list");
    return out;
}

double average_precision_at_k(const RankedList& ranked, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("average_precision_at_k: k must be >= 1");
    std::size_t r_total = qrels.total_relevant(ranked.query_id);
    if (r_total == 0) return 0.0;
    double sum = 0.0;
    std::size_t rel_seen = 0;
    std::size_t depth = std::min<std::size_t>(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        if (qrels.grade(ranked.query_id, ranked.entries[i].doc_id) > 0) {
            ++rel_seen;
            sum += static_cast<double>(rel_seen) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(r_total);
}

double ndcg_at_k(const RankedList& ranked, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
    double dcg = 0.0;
    std::size_t depth = std::min<std::size_t>(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i) {
        int g = qrels.grade(ranked.query_id, ranked.entries[i].doc_id);
        if (g > 0) dcg += g / std::log2(static_cast<double>(i + 2));
    }
    double idcg = 0.0;
    auto ideal = qrels.grades_descending(ranked.query_id);
    for (std::size_t i = 0; i < std::min<std::size_t>(k, ideal.size()); ++i) {
        if (ideal[i] <= 0) break;
        idcg += ideal[i] / std::log2(static_cast<double>(i + 2));
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

double precision_at_k(const RankedList& ranked, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
    std::size_t rel = 0;
    std::size_t depth = std::min<std::size_t>(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (qrels.grade(ranked.query_id, ranked.entries[i].doc_id) > 0) ++rel;
    return static_cast<double>(rel) / static_cast<double>(k);
}

double recall_at_k(const RankedList& ranked, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("recall_at_k: k must be >= 1");
    std::size_t r_total = qrels.total_relevant(ranked.query_id);
    if (r_total == 0) return 0.0;
    std::size_t rel = 0;
    std::size_t depth = std::min<std::size_t>(k, ranked.entries.size());
    for (std::size_t i = 0; i < depth; ++i)
        if (qrels.grade(ranked.query_id, ranked.entries[i].doc_id) > 0) ++rel;
    return static_cast<double>(rel) / static_cast<double>(r_total);
}

double eval_metric(const MetricId& metric, const RankedList& ranked, const Qrels& qrels) {
    switch (metric.family) {
        case MetricFamily::AP: return average_precision_at_k(ranked, qrels, metric.cutoff);
        case MetricFamily::NDCG: return ndcg_at_k(ranked, qrels, metric.cutoff);
        case MetricFamily::P: return precision_at_k(ranked, qrels, metric.cutoff);
        case MetricFamily::R: return recall_at_k(ranked, qrels, metric.cutoff);
    }
    throw std::logic_error("eval_metric: bad family");
}

void write_metric_scores(const std::string& path, const std::vector<MetricScore>& scores) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "query_id\tmetric\tvalue\n";
    for (const auto& s : scores)
        out << s.query_id << '\t' << s.metric.name() << '\t' << format_double(s.value) << '\n';
}

std::vector<MetricScore> read_metric_scores(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::vector<MetricScore> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line == "query_id\tmetric\tvalue") continue;
        std::istringstream ss(line);
        std::string qid, metric, value;
        if (!(ss >> qid >> metric >> value))
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed metric line (expected 3 fields)");
        out.push_back(MetricScore{qid, parse_metric(metric),
                                  parse_double(value, path + ":" + std::to_string(lineno))});
    }
    return out;
}

} // namespace qppbench
