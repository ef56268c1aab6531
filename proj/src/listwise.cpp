#include "qppbench/listwise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace qppbench {

QueryRanking rank_queries(const std::map<std::string, double>& values) {
    if (values.empty()) throw std::invalid_argument("rank_queries: empty input");
    std::vector<std::pair<std::string, double>> items(values.begin(), values.end());
    // std::map iteration is id-ascending, so a stable sort on value descending
    // leaves ties in id order.
    std::stable_sort(items.begin(), items.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    QueryRanking r;
    r.ids.reserve(items.size());
    for (auto& [id, v] : items) r.ids.push_back(std::move(id));
    return r;
}

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y, const char* who) {
    if (x.size() != y.size())
        throw std::invalid_argument(std::string(who) + ": length mismatch");
    if (x.size() < 2) throw std::invalid_argument(std::string(who) + ": need length >= 2");
}

// Counts pairs (i < j) with v[i] > v[j] by merge sort; `v` is consumed.
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch) {
    const std::size_t n = v.size();
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            std::size_t mid = lo + width;
            std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (v[b] < v[a]) {
                    inversions += mid - a;
                    scratch[out++] = v[b++];
                } else {
                    scratch[out++] = v[a++];
                }
            }
            while (a < mid) scratch[out++] = v[a++];
            while (b < hi) scratch[out++] = v[b++];
            std::copy(scratch.begin() + lo, scratch.begin() + hi, v.begin() + lo);
        }
    }
    return inversions;
}

std::uint64_t tie_pairs(std::uint64_t group) { return group * (group - 1) / 2; }

} // namespace

std::optional<double> kendall_tau(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "kendall_tau");
    const std::size_t n = x.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    // Tie-pair counts: n1 over x-groups, n2 over y-groups, n3 over joint groups.
    std::uint64_t n1 = 0, n3 = 0;
    {
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && x[order[j]] == x[order[i]]) ++j;
            n1 += tie_pairs(j - i);
            std::size_t a = i;
            while (a < j) {
                std::size_t b = a;
                while (b < j && y[order[b]] == y[order[a]]) ++b;
                n3 += tie_pairs(b - a);
                a = b;
            }
            i = j;
        }
    }
    std::uint64_t n2 = 0;
    {
        std::vector<double> ys(y.begin(), y.end());
        std::sort(ys.begin(), ys.end());
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j < n && ys[j] == ys[i]) ++j;
            n2 += tie_pairs(j - i);
            i = j;
        }
    }

    // With rows sorted by (x asc, y asc), strict y-inversions are exactly the
    // discordant pairs.
    std::vector<double> y_sorted(n);
    for (std::size_t i = 0; i < n; ++i) y_sorted[i] = y[order[i]];
    std::vector<double> scratch(n);
    const std::uint64_t discordant = count_inversions(y_sorted, scratch);

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (n0 == n1 || n0 == n2) return std::nullopt; // all tied in x or in y
    const std::int64_t c_minus_d =
        static_cast<std::int64_t>(n0 - n1 - n2 + n3) - 2 * static_cast<std::int64_t>(discordant);
    return static_cast<double>(c_minus_d) /
           std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
}

std::optional<double> pearson_r(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "pearson_r");
    const std::size_t n = x.size();
    // all-equal input is degenerate regardless of floating-point mean error
    bool x_const = true, y_const = true;
    for (std::size_t i = 1; i < n; ++i) {
        x_const = x_const && x[i] == x[0];
        y_const = y_const && y[i] == y[0];
    }
    if (x_const || y_const) return std::nullopt;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && v[order[j]] == v[order[i]]) ++j;
        double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
        i = j;
    }
    return ranks;
}

std::optional<double> spearman_rho(std::span<const double> x, std::span<const double> y) {
    check_lengths(x, y, "spearman_rho");
    auto rx = fractional_ranks(x);
    auto ry = fractional_ranks(y);
    return pearson_r(rx, ry);
}

SareResult one_minus_sare(const QueryRanking& ranking_mu, const QueryRanking& ranking_phi) {
    if (ranking_mu.ids.empty()) throw std::invalid_argument("one_minus_sare: empty ranking");
    if (ranking_mu.ids.size() != ranking_phi.ids.size())
        throw std::invalid_argument("one_minus_sare: query sets differ in size");
    const std::size_t n = ranking_mu.ids.size();
    std::unordered_map<std::string, std::size_t> phi_rank;
    for (std::size_t i = 0; i < n; ++i) phi_rank.emplace(ranking_phi.ids[i], i + 1);

    SareResult res;
    res.per_query.reserve(n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto it = phi_rank.find(ranking_mu.ids[i]);
        if (it == phi_rank.end())
            throw std::invalid_argument("one_minus_sare: query '" + ranking_mu.ids[i] +
                                        "' missing from predicted ranking");
        double sare = std::abs(static_cast<double>(i + 1) - static_cast<double>(it->second)) /
                      static_cast<double>(n);
        res.per_query.emplace_back(ranking_mu.ids[i], 1.0 - sare);
        sum += 1.0 - sare;
    }
    res.mean = sum / static_cast<double>(n);
    return res;
}

double kendall_between_rankings(const QueryRanking& a, const QueryRanking& b) {
    if (a.ids.size() != b.ids.size() || a.ids.size() < 2)
        throw std::invalid_argument("kendall_between_rankings: need two rankings of the same "
                                    "set with >= 2 elements");
    const std::size_t n = a.ids.size();
    std::unordered_map<std::string, std::size_t> pos_b;
    for (std::size_t i = 0; i < n; ++i) pos_b.emplace(b.ids[i], i);
    std::vector<double> ra(n), rb(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto it = pos_b.find(a.ids[i]);
        if (it == pos_b.end())
            throw std::invalid_argument("kendall_between_rankings: id sets differ ('" +
                                        a.ids[i] + "')");
        ra[i] = static_cast<double>(i);
        rb[i] = static_cast<double>(it->second);
    }
    auto tau = kendall_tau(ra, rb);
    if (!tau) throw std::logic_error("kendall_between_rankings: unexpected degenerate tau");
    return *tau;
}

} // namespace qppbench
