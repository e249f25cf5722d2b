#pragma once

#include <vector>

namespace platelet::stats {

// Whitening constants fitted on a sample matrix: per-dimension mean and
// sample sd, with sd falling back to 1 for degenerate dimensions (a warning
// flag records the fallback).
struct Whitening {
    std::vector<double> mean;
    std::vector<double> scale;
    bool degenerate = false;

    std::vector<double> to_white(const std::vector<double>& x) const;
    std::vector<double> to_raw(const std::vector<double>& z) const;
};

Whitening fit_whitening(const std::vector<std::vector<double>>& samples);

// Log of the product-Gaussian KDE evaluated at `point`, with the scalar
// bandwidth applied in whitened coordinates (the seven deposition parameters
// span six decades, so a dimensionless bandwidth is only meaningful after
// standardization). Clamped to a very negative finite floor far outside the
// sample cloud.
double kde_log_density(const std::vector<std::vector<double>>& samples, double bandwidth,
                       const std::vector<double>& point);

struct MapEstimate {
    std::vector<double> value;     // mode in the input coordinates
    double bandwidth = 0;
    double log_density = 0;        // at the mode, whitened coordinates
    std::vector<double> start;     // highest-density sample, input coordinates
    long evaluations = 0;
    long iterations = 0;
    bool converged = false;
    std::vector<double> posterior_sd;  // per-dimension sample sd
};

// Mode of the KDE-smoothed sample cloud: Nelder-Mead started from the
// highest-density sample, run in whitened coordinates (initial simplex edge
// 0.1), result mapped back. Non-convergence returns the best point found,
// flagged.
MapEstimate map_estimate(const std::vector<std::vector<double>>& samples,
                         double bandwidth = 0.45);

}  // namespace platelet::stats
