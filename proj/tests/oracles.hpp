// Brute-force reference implementations used only by tests. These evaluate
// the definitions directly (exhaustive pair enumeration, recounting from
// scratch) and stay independent of the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Kendall tau-b by O(n^2) pair enumeration.
inline std::optional<double> kendall_tau(const std::vector<double>& x,
                                         const std::vector<double>& y) {
    const std::size_t n = x.size();
    std::int64_t concordant = 0, discordant = 0, tied_x_only = 0, tied_y_only = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j], dy = y[i] - y[j];
            if (dx == 0.0 && dy == 0.0) continue;
            if (dx == 0.0)
                ++tied_x_only;
            else if (dy == 0.0)
                ++tied_y_only;
            else if (dx * dy > 0.0)
                ++concordant;
            else
                ++discordant;
        }
    }
    double a = static_cast<double>(concordant + discordant + tied_x_only);
    double b = static_cast<double>(concordant + discordant + tied_y_only);
    if (a == 0.0 || b == 0.0) return std::nullopt;
    return static_cast<double>(concordant - discordant) / std::sqrt(a * b);
}

// Pearson via the raw-sum formulation (different route than the library's
// mean-centered one).
inline std::optional<double> pearson(const std::vector<double>& x,
                                     const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    double vx = n * sxx - sx * sx, vy = n * syy - sy * sy;
    if (vx <= 0.0 || vy <= 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / std::sqrt(vx * vy);
}

// 1-based fractional ranks via sorted-copy bounds.
inline std::vector<double> rankify(const std::vector<double>& v) {
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto lb = std::lower_bound(sorted.begin(), sorted.end(), v[i]);
        auto ub = std::upper_bound(sorted.begin(), sorted.end(), v[i]);
        double r = 1.0 + static_cast<double>(lb - sorted.begin());
        double s = static_cast<double>(ub - lb);
        out[i] = r + (s - 1.0) * 0.5;
    }
    return out;
}

// A ranking is (doc_id, grade) in rank order; judged is every (doc_id, grade)
// pair in the qrels for the query.
struct Judged {
    std::map<std::string, int> grades;
    int grade(const std::string& d) const {
        auto it = grades.find(d);
        return it == grades.end() ? 0 : it->second;
    }
    std::size_t total_relevant() const {
        std::size_t n = 0;
        for (auto& [d, g] : grades)
            if (g > 0) ++n;
        return n;
    }
};

inline double ap_at_k(const std::vector<std::string>& ranking, const Judged& judged, int k) {
    std::size_t r_total = judged.total_relevant();
    if (r_total == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < ranking.size() && i < static_cast<std::size_t>(k); ++i) {
        if (judged.grade(ranking[i]) <= 0) continue;
        // precision at i+1, recounted from scratch
        std::size_t rel = 0;
        for (std::size_t j = 0; j <= i; ++j)
            if (judged.grade(ranking[j]) > 0) ++rel;
        sum += static_cast<double>(rel) / static_cast<double>(i + 1);
    }
    return sum / static_cast<double>(r_total);
}

inline double ndcg_at_k(const std::vector<std::string>& ranking, const Judged& judged, int k) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < ranking.size() && i < static_cast<std::size_t>(k); ++i)
        dcg += judged.grade(ranking[i]) * std::log(2.0) / std::log(static_cast<double>(i + 2));
    std::vector<int> grades;
    for (auto& [d, g] : judged.grades) grades.push_back(g);
    std::sort(grades.begin(), grades.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < static_cast<std::size_t>(k); ++i)
        idcg += grades[i] * std::log(2.0) / std::log(static_cast<double>(i + 2));
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

inline double precision_at_k(const std::vector<std::string>& ranking, const Judged& judged,
                             int k) {
    std::size_t rel = 0;
    for (std::size_t i = 0; i < ranking.size() && i < static_cast<std::size_t>(k); ++i)
        if (judged.grade(ranking[i]) > 0) ++rel;
    return static_cast<double>(rel) / static_cast<double>(k);
}

inline double recall_at_k(const std::vector<std::string>& ranking, const Judged& judged, int k) {
    std::size_t r_total = judged.total_relevant();
    if (r_total == 0) return 0.0;
    std::size_t rel = 0;
    for (std::size_t i = 0; i < ranking.size() && i < static_cast<std::size_t>(k); ++i)
        if (judged.grade(ranking[i]) > 0) ++rel;
    return static_cast<double>(rel) / static_cast<double>(r_total);
}

// Deterministic helpers for seeded random instances.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % n);
}

} // namespace oracle
