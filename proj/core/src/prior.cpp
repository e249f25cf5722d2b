#include "platelet/prior.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "platelet/io_util.hpp"

namespace platelet::abc {

void PriorBox::validate() const {
    if (bounds.empty()) throw std::invalid_argument("prior: no dimensions");
    for (const auto& [lo, hi] : bounds) {
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw std::invalid_argument("prior: bounds must be finite");
        if (!(lo < hi)) throw std::invalid_argument("prior: lower bound must be < upper bound");
    }
    if (!log_scale.empty() && log_scale.size() != bounds.size())
        throw std::invalid_argument("prior: log_scale size mismatch");
    for (std::size_t i = 0; i < bounds.size(); ++i)
        if (is_log(i) && !(bounds[i].first > 0))
            throw std::invalid_argument("prior: log-scaled dimension needs positive bounds");
}

std::vector<double> PriorBox::sample(rng::Stream& stream) const {
    std::vector<double> theta(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        const auto& [lo, hi] = bounds[i];
        theta[i] = lo + (hi - lo) * stream.uniform();
    }
    return theta;
}

bool PriorBox::contains(const std::vector<double>& theta) const {
    if (theta.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i)
        if (theta[i] < bounds[i].first || theta[i] > bounds[i].second) return false;
    return true;
}

std::vector<double> PriorBox::to_internal(const std::vector<double>& theta) const {
    std::vector<double> u(theta);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (is_log(i)) u[i] = std::log10(u[i]);
    return u;
}

std::vector<double> PriorBox::to_natural(const std::vector<double>& internal) const {
    std::vector<double> theta(internal);
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (is_log(i)) theta[i] = std::pow(10.0, theta[i]);
    return theta;
}

bool PriorBox::contains_internal(const std::vector<double>& internal) const {
    if (internal.size() != dim()) return false;
    for (std::size_t i = 0; i < dim(); ++i) {
        double lo = bounds[i].first, hi = bounds[i].second;
        if (is_log(i)) {
            lo = std::log10(lo);
            hi = std::log10(hi);
        }
        if (internal[i] < lo || internal[i] > hi) return false;
    }
    return true;
}

PriorBox default_model_prior() {
    PriorBox p;
    p.bounds = {{1.0, 300.0},   // p_ad
                {1.0, 300.0},   // p_ag
                {0.1, 10.0},    // p_t
                {1e-4, 10.0},   // p_f
                {0.1, 20.0},    // a_t
                {1e-6, 1e-3},   // v_z_ap
                {1e-6, 1e-3}};  // v_z_nap
    p.log_scale = {false, false, false, false, false, true, true};
    p.names.assign(ModelParams::names().begin(), ModelParams::names().end());
    p.validate();
    return p;
}

PriorBox read_prior_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || io::trim(line) != "param,low,high,scale")
        throw std::runtime_error("prior csv: expected header 'param,low,high,scale'");
    PriorBox p;
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 4) throw std::runtime_error("prior csv: bad row '" + line + "'");
        p.names.push_back(io::trim(f[0]));
        p.bounds.emplace_back(io::parse_double(f[1]), io::parse_double(f[2]));
        const std::string scale = io::trim(f[3]);
        if (scale == "linear") p.log_scale.push_back(false);
        else if (scale == "log") p.log_scale.push_back(true);
        else throw std::runtime_error("prior csv: scale must be 'linear' or 'log', got '" + scale + "'");
    }
    p.validate();
    return p;
}

void write_prior_csv(const PriorBox& prior, const std::string& path) {
    std::ostringstream out;
    out << "param,low,high,scale\n";
    for (std::size_t i = 0; i < prior.dim(); ++i) {
        out << prior.name_of(i) << ',' << io::fmt(prior.bounds[i].first) << ','
            << io::fmt(prior.bounds[i].second) << ',' << (prior.is_log(i) ? "log" : "linear")
            << "\n";
    }
    io::write_file(path, out.str());
}

}  // namespace platelet::abc
