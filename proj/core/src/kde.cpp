#include "platelet/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "platelet/nelder_mead.hpp"

namespace platelet::stats {

namespace {
constexpr double kLogFloor = -1e9;
constexpr double kLog2Pi = 1.8378770664093454836;
}  // namespace

std::vector<double> Whitening::to_white(const std::vector<double>& x) const {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) z[j] = (x[j] - mean[j]) / scale[j];
    return z;
}

std::vector<double> Whitening::to_raw(const std::vector<double>& z) const {
    std::vector<double> x(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) x[j] = mean[j] + scale[j] * z[j];
    return x;
}

Whitening fit_whitening(const std::vector<std::vector<double>>& samples) {
    if (samples.empty()) throw std::invalid_argument("whitening: no samples");
    const std::size_t d = samples[0].size();
    Whitening w;
    w.mean.assign(d, 0.0);
    w.scale.assign(d, 1.0);
    for (const auto& s : samples) {
        if (s.size() != d) throw std::invalid_argument("whitening: ragged sample matrix");
        for (std::size_t j = 0; j < d; ++j) w.mean[j] += s[j];
    }
    for (auto& m : w.mean) m /= static_cast<double>(samples.size());
    if (samples.size() < 2) {
        w.degenerate = true;
        return w;
    }
    for (std::size_t j = 0; j < d; ++j) {
        double ss = 0;
        for (const auto& s : samples) ss += (s[j] - w.mean[j]) * (s[j] - w.mean[j]);
        const double sd = std::sqrt(ss / (static_cast<double>(samples.size()) - 1.0));
        if (sd > 0 && std::isfinite(sd)) {
            w.scale[j] = sd;
        } else {
            w.degenerate = true;  // per-dimension fallback to unit scale
        }
    }
    return w;
}

namespace {

double log_density_white(const std::vector<std::vector<double>>& white, double bandwidth,
                         const std::vector<double>& z) {
    const std::size_t d = z.size();
    const double inv2h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    double max_expo = -std::numeric_limits<double>::infinity();
    std::vector<double> expos(white.size());
    for (std::size_t k = 0; k < white.size(); ++k) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) {
            const double dd = z[j] - white[k][j];
            s += dd * dd;
        }
        expos[k] = -s * inv2h2;
        max_expo = std::max(max_expo, expos[k]);
    }
    if (!std::isfinite(max_expo)) return kLogFloor;
    double acc = 0;
    for (const double e : expos) acc += std::exp(e - max_expo);
    const double norm = -static_cast<double>(d) * (std::log(bandwidth) + 0.5 * kLog2Pi) -
                        std::log(static_cast<double>(white.size()));
    const double out = max_expo + std::log(acc) + norm;
    return std::max(out, kLogFloor);
}

}  // namespace

double kde_log_density(const std::vector<std::vector<double>>& samples, double bandwidth,
                       const std::vector<double>& point) {
    if (samples.empty()) throw std::invalid_argument("kde: no samples");
    if (!(bandwidth > 0)) throw std::invalid_argument("kde: bandwidth must be > 0");
    if (point.size() != samples[0].size())
        throw std::invalid_argument("kde: point dimension mismatch");
    const Whitening w = fit_whitening(samples);
    std::vector<std::vector<double>> white;
    white.reserve(samples.size());
    for (const auto& s : samples) white.push_back(w.to_white(s));
    return log_density_white(white, bandwidth, w.to_white(point));
}

MapEstimate map_estimate(const std::vector<std::vector<double>>& samples, double bandwidth) {
    if (samples.empty()) throw std::invalid_argument("map_estimate: no samples");
    if (!(bandwidth > 0)) throw std::invalid_argument("map_estimate: bandwidth must be > 0");

    const Whitening w = fit_whitening(samples);
    std::vector<std::vector<double>> white;
    white.reserve(samples.size());
    for (const auto& s : samples) white.push_back(w.to_white(s));

    // start from the highest-density sample; first index wins ties so the
    // bimodal case lands deterministically
    std::size_t best = 0;
    double best_ld = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < white.size(); ++k) {
        const double ld = log_density_white(white, bandwidth, white[k]);
        if (ld > best_ld) {
            best_ld = ld;
            best = k;
        }
    }

    const auto nm = nelder_mead(
        [&](const std::vector<double>& z) { return -log_density_white(white, bandwidth, z); },
        white[best], 0.1, 1e-8, 10000);

    MapEstimate est;
    est.bandwidth = bandwidth;
    est.value = w.to_raw(nm.x);
    est.log_density = -nm.fx;
    est.start = samples[best];
    est.evaluations = nm.evaluations;
    est.iterations = nm.iterations;
    est.converged = nm.converged;
    const std::size_t d = samples[0].size();
    est.posterior_sd.assign(d, 0.0);
    if (samples.size() > 1) {
        for (std::size_t j = 0; j < d; ++j) {
            double ss = 0;
            for (const auto& s : samples) ss += (s[j] - w.mean[j]) * (s[j] - w.mean[j]);
            est.posterior_sd[j] = std::sqrt(ss / (static_cast<double>(samples.size()) - 1.0));
        }
    }
    return est;
}

}  // namespace platelet::stats
