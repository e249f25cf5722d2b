#include "platelet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "platelet/special.hpp"

namespace platelet::stats {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty data");
    if (!(p >= 0.0) || !(p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0,1]");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, p);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double mean(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("mean: empty data");
    return std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
}

double sample_sd(const std::vector<double>& values) {
    if (values.size() < 2) throw std::invalid_argument("sample_sd: need at least 2 values");
    const double m = mean(values);
    double s = 0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / (static_cast<double>(values.size()) - 1.0));
}

KwResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::invalid_argument("kruskal_wallis: need >= 2 groups");
    std::vector<std::pair<double, std::size_t>> pooled;  // value, group
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty())
            throw std::invalid_argument("kruskal_wallis: empty group");
        for (double v : groups[g]) {
            if (!std::isfinite(v))
                throw std::invalid_argument("kruskal_wallis: non-finite value");
            pooled.emplace_back(v, g);
        }
    }
    const auto n_total = pooled.size();
    if (n_total < 3) throw std::invalid_argument("kruskal_wallis: need at least 3 values");

    std::sort(pooled.begin(), pooled.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // average ranks on ties, accumulating the tie-correction term
    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < n_total) {
        std::size_t j = i;
        while (j < n_total && pooled[j].first == pooled[i].first) ++j;
        const double t = static_cast<double>(j - i);
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].second] += avg_rank;
        tie_term += t * t * t - t;
        i = j;
    }

    const double n = static_cast<double>(n_total);
    double h = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double ng = static_cast<double>(groups[g].size());
        const double rbar = rank_sum[g] / ng;
        h += ng * (rbar - 0.5 * (n + 1.0)) * (rbar - 0.5 * (n + 1.0));
    }
    h *= 12.0 / (n * (n + 1.0));

    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (correction <= 0.0)
        throw std::invalid_argument("kruskal_wallis: degenerate ties (all values identical)");
    h /= correction;

    return {h, chi2_sf(h, static_cast<double>(groups.size()) - 1.0)};
}

std::vector<double> bh_adjust(const std::vector<double>& pvalues) {
    const std::size_t m = pvalues.size();
    for (double p : pvalues)
        if (!(p >= 0.0) || !(p <= 1.0))
            throw std::invalid_argument("bh_adjust: p-values must lie in [0,1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });

    std::vector<double> adjusted(m, 0.0);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double q = pvalues[order[k]] * static_cast<double>(m) / static_cast<double>(k + 1);
        running = std::min(running, std::min(q, 1.0));
        adjusted[order[k]] = running;
    }
    return adjusted;
}

namespace {

double norm_beta(const std::vector<double>& a, const std::vector<double>& b, double beta) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    const double d = std::sqrt(s);
    return beta == 1.0 ? d : std::pow(d, beta);
}

}  // namespace

double energy_score(const std::vector<std::vector<double>>& predictions,
                    const std::vector<double>& x_obs, double beta, bool normalized) {
    if (predictions.empty()) throw std::invalid_argument("energy_score: no predictions");
    if (!(beta > 0.0) || !(beta < 2.0))
        throw std::invalid_argument("energy_score: beta must be in (0,2)");
    for (const auto& p : predictions)
        if (p.size() != x_obs.size())
            throw std::invalid_argument("energy_score: dimension mismatch");

    double first = 0.0;
    for (const auto& p : predictions) first += norm_beta(p, x_obs, beta);
    double second = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (std::size_t j = i + 1; j < predictions.size(); ++j)
            second += 2.0 * norm_beta(predictions[i], predictions[j], beta);

    if (!normalized) return 2.0 * first - second;
    const double n = static_cast<double>(predictions.size());
    return 2.0 / n * first - second / (n * n);
}

double rand_index(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
    if (labels_a.size() != labels_b.size())
        throw std::invalid_argument("rand_index: partitions cover different item sets");
    const std::size_t n = labels_a.size();
    if (n < 2) throw std::invalid_argument("rand_index: need at least 2 items");
    long agree = 0, total = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool same_a = labels_a[i] == labels_a[j];
            const bool same_b = labels_b[i] == labels_b[j];
            agree += same_a == same_b;
            ++total;
        }
    return static_cast<double>(agree) / static_cast<double>(total);
}

HclustResult hierarchical_cluster(const std::vector<std::vector<double>>& points,
                                  int n_clusters) {
    const std::size_t n = points.size();
    if (n_clusters < 1) throw std::invalid_argument("hierarchical_cluster: n_clusters must be >= 1");
    if (n < static_cast<std::size_t>(n_clusters))
        throw std::invalid_argument("hierarchical_cluster: fewer points than clusters");

    // average linkage over the full pairwise distance matrix; clusters carry
    // their smallest original item index as the deterministic representative
    std::vector<std::vector<std::size_t>> members(n);
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        members[i] = {i};
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0;
            if (points[i].size() != points[j].size())
                throw std::invalid_argument("hierarchical_cluster: inconsistent dimensions");
            for (std::size_t k = 0; k < points[i].size(); ++k)
                s += (points[i][k] - points[j][k]) * (points[i][k] - points[j][k]);
            dist[i * n + j] = dist[j * n + i] = std::sqrt(s);
        }
    }

    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    HclustResult result;

    while (active.size() > static_cast<std::size_t>(n_clusters)) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bi = 0, bj = 0;
        for (std::size_t a = 0; a < active.size(); ++a) {
            for (std::size_t b = a + 1; b < active.size(); ++b) {
                const std::size_t ca = active[a], cb = active[b];
                double s = 0;
                for (const auto u : members[ca])
                    for (const auto v : members[cb]) s += dist[u * n + v];
                const double link =
                    s / (static_cast<double>(members[ca].size()) * static_cast<double>(members[cb].size()));
                // representatives are ascending by construction, so the first
                // strict improvement wins and equal linkages keep the earlier
                // (lexicographically smaller) pair
                if (link < best) {
                    best = link;
                    bi = a;
                    bj = b;
                }
            }
        }
        const std::size_t ci = active[bi], cj = active[bj];
        result.merges.push_back({static_cast<int>(members[ci].front()),
                                 static_cast<int>(members[cj].front())});
        members[ci].insert(members[ci].end(), members[cj].begin(), members[cj].end());
        std::sort(members[ci].begin(), members[ci].end());
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    }

    result.labels.assign(n, -1);
    int next = 0;
    for (const std::size_t c : active) {
        for (const auto m : members[c]) result.labels[m] = next;
        ++next;
    }
    return result;
}

BoxplotStats boxplot_stats(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("boxplot_stats: empty data");
    std::sort(values.begin(), values.end());
    BoxplotStats b;
    b.q1 = quantile_sorted(values, 0.25);
    b.med = quantile_sorted(values, 0.5);
    b.q3 = quantile_sorted(values, 0.75);
    const double iqr = b.q3 - b.q1;
    const double lo_fence = b.q1 - 1.5 * iqr;
    const double hi_fence = b.q3 + 1.5 * iqr;
    b.whisker_lo = b.q3;
    b.whisker_hi = b.q1;
    bool any_in = false;
    for (double v : values) {
        if (v < lo_fence || v > hi_fence) {
            b.outliers.push_back(v);
        } else {
            if (!any_in) {
                b.whisker_lo = v;
                b.whisker_hi = v;
                any_in = true;
            } else {
                b.whisker_lo = std::min(b.whisker_lo, v);
                b.whisker_hi = std::max(b.whisker_hi, v);
            }
        }
    }
    return b;
}

Label classify_pathology(double value, double median_healthy, double median_disease) {
    if (!std::isfinite(median_healthy) || !std::isfinite(median_disease))
        throw std::invalid_argument("classify_pathology: medians must be finite");
    const double dh = std::fabs(value - median_healthy);
    const double dd = std::fabs(value - median_disease);
    return dh <= dd ? Label::healthy : Label::disease;
}

PathologyResult confusion_metrics(const std::vector<Label>& predicted,
                                  const std::vector<Label>& truth) {
    if (predicted.size() != truth.size())
        throw std::invalid_argument("confusion_metrics: label lists differ in length");
    if (predicted.empty()) throw std::invalid_argument("confusion_metrics: no labels");
    PathologyResult r;
    r.predicted = predicted;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pos = truth[i] == Label::disease;
        const bool hit = predicted[i] == Label::disease;
        if (pos && hit) ++r.tp;
        else if (pos && !hit) ++r.fn;
        else if (!pos && hit) ++r.fp;
        else ++r.tn;
    }
    r.sensitivity = r.tp + r.fn > 0
                        ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn)
                        : 0.0;
    r.specificity = r.tn + r.fp > 0
                        ? static_cast<double>(r.tn) / static_cast<double>(r.tn + r.fp)
                        : 0.0;
    return r;
}

}  // namespace platelet::stats
