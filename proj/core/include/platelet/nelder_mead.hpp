#pragma once

#include <functional>
#include <vector>

namespace platelet::stats {

struct NelderMeadResult {
    std::vector<double> x;
    double fx = 0;
    long evaluations = 0;
    long iterations = 0;
    bool converged = false;
};

// Downhill simplex minimization. Stops when the simplex diameter falls below
// `diameter_tol` or `max_evaluations` function calls were spent. The best
// vertex never worsens, so starting from a known good point is safe.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& start, double initial_edge,
                             double diameter_tol = 1e-8, long max_evaluations = 10000);

}  // namespace platelet::stats
