#pragma once

#include <string>
#include <utility>
#include <vector>

#include "platelet/params.hpp"
#include "platelet/rng.hpp"

namespace platelet::abc {

// Independent uniform prior over a box. Dimensions flagged `log_scale` are
// handled in log10 coordinates by the samplers' move kernels and by MAP
// estimation; draws and reported values are always in natural units.
struct PriorBox {
    std::vector<std::pair<double, double>> bounds;
    std::vector<bool> log_scale;       // empty means all-linear
    std::vector<std::string> names;    // optional, for file headers

    std::size_t dim() const { return bounds.size(); }
    void validate() const;  // lower < upper componentwise, finite

    std::vector<double> sample(rng::Stream& stream) const;
    bool contains(const std::vector<double>& theta) const;

    bool is_log(std::size_t i) const {
        return !log_scale.empty() && log_scale[i];
    }
    // natural <-> inference coordinates (log10 on flagged dims)
    std::vector<double> to_internal(const std::vector<double>& theta) const;
    std::vector<double> to_natural(const std::vector<double>& internal) const;
    bool contains_internal(const std::vector<double>& internal) const;

    std::string name_of(std::size_t i) const {
        return i < names.size() ? names[i] : "theta_" + std::to_string(i);
    }
};

// Default box for the seven deposition-model parameters; the two velocity
// components span three decades and are flagged for log-scale inference.
PriorBox default_model_prior();

// CSV schema: param,low,high,scale with scale in {linear, log}
PriorBox read_prior_csv(const std::string& path);
void write_prior_csv(const PriorBox& prior, const std::string& path);

}  // namespace platelet::abc
