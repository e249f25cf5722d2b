// Independent reference implementations used to check the library. These
// deliberately avoid the library's own code paths: different algorithms,
// different data structures, brute force where affordable.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <vector>

namespace oracle {

// flood-fill connected components on an occupancy grid with periodic
// 4-adjacency; returns sorted cluster sizes and the partition as labels
inline std::vector<int> grid_components(const std::vector<std::uint8_t>& occ, int nx, int ny) {
    std::vector<int> label(occ.size(), -1);
    int next = 0;
    for (int start = 0; start < nx * ny; ++start) {
        if (!occ[static_cast<std::size_t>(start)] || label[static_cast<std::size_t>(start)] >= 0)
            continue;
        std::vector<int> todo{start};
        label[static_cast<std::size_t>(start)] = next;
        while (!todo.empty()) {
            const int c = todo.back();
            todo.pop_back();
            const int x = c % nx, y = c / nx;
            const int nbs[4] = {(x + 1) % nx + y * nx, (x + nx - 1) % nx + y * nx,
                                x + ((y + 1) % ny) * nx, x + ((y + ny - 1) % ny) * nx};
            for (const int nb : nbs) {
                if (occ[static_cast<std::size_t>(nb)] && label[static_cast<std::size_t>(nb)] < 0) {
                    label[static_cast<std::size_t>(nb)] = next;
                    todo.push_back(nb);
                }
            }
        }
        ++next;
    }
    return label;
}

// rank-based Kruskal-Wallis by direct definition (independent ranking code)
inline double kruskal_wallis_h(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    const double n = static_cast<double>(all.size());
    auto rank_of = [&](double v) {
        // average rank: 1 + (#strictly smaller) + (#equal - 1)/2
        double below = 0, equal = 0;
        for (const double a : all) {
            if (a < v) ++below;
            if (a == v) ++equal;
        }
        return below + 0.5 * (equal + 1.0);
    };
    double h = 0;
    for (const auto& g : groups) {
        double rsum = 0;
        for (const double v : g) rsum += rank_of(v);
        const double ng = static_cast<double>(g.size());
        const double rbar = rsum / ng;
        h += ng * (rbar - (n + 1) / 2) * (rbar - (n + 1) / 2);
    }
    h *= 12.0 / (n * (n + 1));
    // tie correction
    std::map<double, int> counts;
    for (const double v : all) ++counts[v];
    double tt = 0;
    for (const auto& [v, t] : counts) tt += static_cast<double>(t) * t * t - t;
    return h / (1.0 - tt / (n * n * n - n));
}

// step-up BH by literal definition: q_i = min_{j >= i} min(1, p_(j) m / j)
inline std::vector<double> bh_adjust(const std::vector<double>& p) {
    const std::size_t m = p.size();
    std::vector<std::size_t> ord(m);
    std::iota(ord.begin(), ord.end(), std::size_t{0});
    std::sort(ord.begin(), ord.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> adj(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = 1.0;
        for (std::size_t j = i; j < m; ++j)
            best = std::min(best, p[ord[j]] * static_cast<double>(m) / static_cast<double>(j + 1));
        adj[ord[i]] = best;
    }
    return adj;
}

// rand index by literal pair enumeration
inline double rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    long agree = 0, total = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            agree += (a[i] == a[j]) == (b[i] == b[j]);
            ++total;
        }
    return static_cast<double>(agree) / static_cast<double>(total);
}

// average-linkage agglomeration by brute force over cluster sets, with the
// same declared tie-break (smallest representative pair); returns merge list
struct HclustOracle {
    std::vector<std::vector<int>> clusters;
    std::vector<std::pair<int, int>> merges;
};

inline HclustOracle hclust_average(const std::vector<std::vector<double>>& pts, int k) {
    const std::size_t n = pts.size();
    HclustOracle res;
    for (std::size_t i = 0; i < n; ++i) res.clusters.push_back({static_cast<int>(i)});
    auto dist = [&](int a, int b) {
        double s = 0;
        for (std::size_t d = 0; d < pts[static_cast<std::size_t>(a)].size(); ++d) {
            const double dd = pts[static_cast<std::size_t>(a)][d] - pts[static_cast<std::size_t>(b)][d];
            s += dd * dd;
        }
        return std::sqrt(s);
    };
    while (res.clusters.size() > static_cast<std::size_t>(k)) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < res.clusters.size(); ++i)
            for (std::size_t j = i + 1; j < res.clusters.size(); ++j) {
                double s = 0;
                for (const int a : res.clusters[i])
                    for (const int b : res.clusters[j]) s += dist(a, b);
                const double link = s / (static_cast<double>(res.clusters[i].size()) *
                                         static_cast<double>(res.clusters[j].size()));
                if (link < best) {
                    best = link;
                    bi = i;
                    bj = j;
                }
            }
        res.merges.emplace_back(res.clusters[bi].front(), res.clusters[bj].front());
        res.clusters[bi].insert(res.clusters[bi].end(), res.clusters[bj].begin(),
                                res.clusters[bj].end());
        std::sort(res.clusters[bi].begin(), res.clusters[bi].end());
        res.clusters.erase(res.clusters.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    return res;
}

// quantile by explicit sort + linear interpolation at (n-1)p
inline double quantile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - std::floor(h)) * (v[hi] - v[lo]);
}

// central finite-difference gradient of a scalar function
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double step = h * std::max(1.0, std::fabs(x[i]));
        const double keep = x[i];
        x[i] = keep + step;
        const double fp = f(x);
        x[i] = keep - step;
        const double fm = f(x);
        x[i] = keep;
        g[i] = (fp - fm) / (2 * step);
    }
    return g;
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    double num = 0, den = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - b[i]) * (a[i] - b[i]);
        den += std::max(a[i] * a[i], b[i] * b[i]);
    }
    return den == 0 ? std::sqrt(num) : std::sqrt(num / den);
}

}  // namespace oracle
