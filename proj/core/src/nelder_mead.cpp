#include "platelet/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace platelet::stats {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& start, double initial_edge,
                             double diameter_tol, long max_evaluations) {
    const std::size_t n = start.size();
    if (n == 0) throw std::invalid_argument("nelder_mead: empty start point");

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<std::vector<double>> x(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) x[i + 1][i] += initial_edge;

    NelderMeadResult res;
    std::vector<double> fx(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        fx[i] = f(x[i]);
        ++res.evaluations;
    }

    std::vector<std::size_t> idx(n + 1);
    std::iota(idx.begin(), idx.end(), std::size_t{0});

    auto diameter = [&](std::size_t best) {
        double dmax = 0;
        for (std::size_t i = 0; i <= n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = x[i][j] - x[best][j];
                s += d * d;
            }
            dmax = std::max(dmax, std::sqrt(s));
        }
        return dmax;
    };

    std::vector<double> xc(n), xr(n), xe(n), xk(n);

    while (res.evaluations < max_evaluations) {
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
        ++res.iterations;

        if (diameter(idx[0]) < diameter_tol) {
            res.converged = true;
            break;
        }

        // centroid of all but the worst
        std::fill(xc.begin(), xc.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) xc[j] += x[idx[i]][j];
        for (auto& v : xc) v /= static_cast<double>(n);

        const auto& xw = x[idx[n]];
        for (std::size_t j = 0; j < n; ++j) xr[j] = xc[j] + alpha * (xc[j] - xw[j]);
        const double fr = f(xr);
        ++res.evaluations;

        if (fr < fx[idx[0]]) {
            for (std::size_t j = 0; j < n; ++j) xe[j] = xc[j] + gamma * (xr[j] - xc[j]);
            const double fe = f(xe);
            ++res.evaluations;
            if (fe < fr) {
                x[idx[n]] = xe;
                fx[idx[n]] = fe;
            } else {
                x[idx[n]] = xr;
                fx[idx[n]] = fr;
            }
            continue;
        }
        if (fr < fx[idx[n - 1]]) {
            x[idx[n]] = xr;
            fx[idx[n]] = fr;
            continue;
        }
        if (fr < fx[idx[n]]) {
            for (std::size_t j = 0; j < n; ++j) xk[j] = xc[j] + rho * (xr[j] - xc[j]);
        } else {
            for (std::size_t j = 0; j < n; ++j) xk[j] = xc[j] + rho * (xw[j] - xc[j]);
        }
        const double fk = f(xk);
        ++res.evaluations;
        if (fk < std::min(fr, fx[idx[n]])) {
            x[idx[n]] = xk;
            fx[idx[n]] = fk;
            continue;
        }
        // shrink toward the best vertex
        for (std::size_t i = 1; i <= n; ++i) {
            auto& xi = x[idx[i]];
            for (std::size_t j = 0; j < n; ++j)
                xi[j] = x[idx[0]][j] + sigma * (xi[j] - x[idx[0]][j]);
            fx[idx[i]] = f(xi);
            ++res.evaluations;
        }
    }

    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return fx[a] < fx[b]; });
    res.x = x[idx[0]];
    res.fx = fx[idx[0]];
    return res;
}

}  // namespace platelet::stats
