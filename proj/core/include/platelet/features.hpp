#pragma once

#include <cstddef>
#include <vector>

namespace platelet::summary {

// Polynomial expansion of a d0-vector: [x, x^2, x^3, {x_i*x_j}_{i<j}] in that
// order. For the 9-value deposition trace this gives 9+9+9+36 = 63 features.
std::vector<double> polynomial_expand(const std::vector<double>& x);
std::size_t expanded_dim(std::size_t d0);

struct Standardization {
    std::vector<double> mean;
    std::vector<double> sd;  // degenerate dimensions fall back to 1

    std::vector<double> apply(const std::vector<double>& x) const;
};

Standardization fit_standardization(const std::vector<std::vector<double>>& rows);

// The full input map used by linear summary transforms: standardize the raw
// features, expand, standardize the expansion (keeps the cubic terms from
// dominating). Constants are fitted on training data and stored with the
// transform.
struct FeatureExpansion {
    std::size_t input_dim = 0;
    Standardization input_std;
    Standardization expanded_std;

    std::size_t output_dim() const { return expanded_dim(input_dim); }
    std::vector<double> apply(const std::vector<double>& x) const;
};

FeatureExpansion fit_feature_expansion(const std::vector<std::vector<double>>& rows);

}  // namespace platelet::summary
