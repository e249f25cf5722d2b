#include "platelet/lmnn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace platelet::summary {

namespace {

std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

double sq_norm_projected(const std::vector<double>& l, std::size_t out_dim,
                         const std::vector<double>& v) {
    const std::size_t d = v.size();
    double s = 0;
    for (std::size_t r = 0; r < out_dim; ++r) {
        double acc = 0;
        const double* row = &l[r * d];
        for (std::size_t c = 0; c < d; ++c) acc += row[c] * v[c];
        s += acc * acc;
    }
    return s;
}

// grad += scale * 2 L v v^T
void add_outer_grad(std::vector<double>& grad, const std::vector<double>& l,
                    std::size_t out_dim, const std::vector<double>& v, double scale) {
    const std::size_t d = v.size();
    for (std::size_t r = 0; r < out_dim; ++r) {
        double lv = 0;
        const double* row = &l[r * d];
        for (std::size_t c = 0; c < d; ++c) lv += row[c] * v[c];
        const double f = 2.0 * scale * lv;
        double* grow = &grad[r * d];
        for (std::size_t c = 0; c < d; ++c) grow[c] += f * v[c];
    }
}

}  // namespace

double LmnnProblem::loss(const std::vector<double>& l_matrix) const {
    double pull = 0, push = 0;
    const double sign = printed_sign ? 1.0 : -1.0;
    for (const auto& [i, j] : targets) {
        const auto dij = diff(rows[i], rows[j]);
        const double pij = sq_norm_projected(l_matrix, out_dim, dij);
        pull += pij;
        for (const auto l : impostors[i]) {
            const auto dil = diff(rows[i], rows[l]);
            const double pil = sq_norm_projected(l_matrix, out_dim, dil);
            const double hinge = 1.0 + pij + sign * pil;
            if (hinge > 0) push += hinge;
        }
    }
    return pull + push;
}

std::vector<double> LmnnProblem::grad(const std::vector<double>& l_matrix) const {
    std::vector<double> g(l_matrix.size(), 0.0);
    const double sign = printed_sign ? 1.0 : -1.0;
    for (const auto& [i, j] : targets) {
        const auto dij = diff(rows[i], rows[j]);
        const double pij = sq_norm_projected(l_matrix, out_dim, dij);
        double active = 1.0;  // pull term weight; active hinge terms add to it
        for (const auto l : impostors[i]) {
            const auto dil = diff(rows[i], rows[l]);
            const double pil = sq_norm_projected(l_matrix, out_dim, dil);
            if (1.0 + pij + sign * pil > 0) {
                active += 1.0;
                add_outer_grad(g, l_matrix, out_dim, dil, sign);
            }
        }
        add_outer_grad(g, l_matrix, out_dim, dij, active);
    }
    return g;
}

LmnnProblem build_lmnn_problem(const std::vector<std::vector<double>>& rows,
                               const std::vector<int>& labels, int k, std::size_t out_dim,
                               bool printed_sign) {
    if (rows.empty() || rows.size() != labels.size())
        throw std::invalid_argument("lmnn: rows and labels must align");
    if (k < 1) throw std::invalid_argument("lmnn: k must be >= 1");

    // a single group is allowed: no impostors, the objective is pull-only
    std::map<int, std::size_t> group_sizes;
    for (const int lbl : labels) ++group_sizes[lbl];
    for (const auto& [lbl, n] : group_sizes)
        if (n <= static_cast<std::size_t>(k))
            throw std::invalid_argument("lmnn: a group has fewer than k+1 members");

    LmnnProblem prob;
    prob.rows = rows;
    prob.labels = labels;
    prob.dim = rows[0].size();
    prob.out_dim = out_dim;
    prob.printed_sign = printed_sign;
    prob.impostors.resize(rows.size());

    const std::size_t n = rows.size();
    for (std::size_t i = 0; i < n; ++i) {
        // k nearest same-label points under Euclidean distance on the rows,
        // fixed once here
        std::vector<std::pair<double, std::size_t>> same;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i || labels[j] != labels[i]) continue;
            double d2 = 0;
            for (std::size_t c = 0; c < prob.dim; ++c)
                d2 += (rows[i][c] - rows[j][c]) * (rows[i][c] - rows[j][c]);
            same.emplace_back(d2, j);
        }
        std::sort(same.begin(), same.end());
        for (int t = 0; t < k && t < static_cast<int>(same.size()); ++t)
            prob.targets.emplace_back(i, same[static_cast<std::size_t>(t)].second);
        for (std::size_t l = 0; l < n; ++l)
            if (labels[l] != labels[i]) prob.impostors[i].push_back(l);
    }
    return prob;
}

LmnnModel train_lmnn(const std::vector<std::vector<double>>& rows,
                     const std::vector<int>& labels, const LmnnOptions& options) {
    auto prob = build_lmnn_problem(rows, labels, options.k, options.out_dim,
                                   options.printed_sign);

    // identity slice start: L0 projects onto the first out_dim coordinates
    std::vector<double> l(options.out_dim * prob.dim, 0.0);
    for (std::size_t r = 0; r < options.out_dim && r < prob.dim; ++r) l[r * prob.dim + r] = 1.0;

    LmnnModel model;
    double step = options.step;
    double loss = prob.loss(l);
    if (!std::isfinite(loss)) throw std::runtime_error("lmnn: non-finite initial loss");
    model.loss_curve.push_back(loss);

    for (int it = 0; it < options.max_iterations; ++it) {
        ++model.iterations;
        const auto g = prob.grad(l);
        std::vector<double> cand(l.size());
        double new_loss;
        for (;;) {
            for (std::size_t p = 0; p < l.size(); ++p) cand[p] = l[p] - step * g[p];
            new_loss = prob.loss(cand);
            if (!std::isfinite(new_loss))
                throw std::runtime_error("lmnn: non-finite loss during optimization");
            if (new_loss <= loss) break;
            step *= 0.5;
            if (step < 1e-18) break;  // gradient no longer improves; stop
        }
        if (new_loss > loss) break;
        const double rel = (loss - new_loss) / std::max(std::fabs(loss), 1e-300);
        l = cand;
        loss = new_loss;
        model.loss_curve.push_back(loss);
        if (rel < options.rel_tol) break;
    }

    model.l_matrix = std::move(l);
    model.final_loss = loss;
    model.final_step = step;
    model.loo_knn_accuracy =
        loo_knn_accuracy(rows, labels, model.l_matrix, options.out_dim, options.k);
    return model;
}

double loo_knn_accuracy(const std::vector<std::vector<double>>& rows,
                        const std::vector<int>& labels, const std::vector<double>& l_matrix,
                        std::size_t out_dim, int k) {
    const std::size_t n = rows.size();
    const std::size_t d = rows[0].size();
    std::vector<std::vector<double>> proj(n, std::vector<double>(out_dim, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t r = 0; r < out_dim; ++r) {
            double s = 0;
            for (std::size_t c = 0; c < d; ++c) s += l_matrix[r * d + c] * rows[i][c];
            proj[i][r] = s;
        }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> others;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0;
            for (std::size_t r = 0; r < out_dim; ++r)
                d2 += (proj[i][r] - proj[j][r]) * (proj[i][r] - proj[j][r]);
            others.emplace_back(d2, j);
        }
        std::sort(others.begin(), others.end());
        std::map<int, int> votes;
        for (int t = 0; t < k && t < static_cast<int>(others.size()); ++t)
            ++votes[labels[others[static_cast<std::size_t>(t)].second]];
        int best_label = labels[others.front().second];
        int best_count = 0;
        for (const auto& [lbl, cnt] : votes)
            if (cnt > best_count) {
                best_count = cnt;
                best_label = lbl;
            }
        correct += best_label == labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

}  // namespace platelet::summary
