#include "platelet/features.hpp"

#include <cmath>
#include <stdexcept>

namespace platelet::summary {

std::size_t expanded_dim(std::size_t d0) { return 3 * d0 + d0 * (d0 - 1) / 2; }

std::vector<double> polynomial_expand(const std::vector<double>& x) {
    const std::size_t d0 = x.size();
    std::vector<double> out;
    out.reserve(expanded_dim(d0));
    for (double v : x) out.push_back(v);
    for (double v : x) out.push_back(v * v);
    for (double v : x) out.push_back(v * v * v);
    for (std::size_t i = 0; i < d0; ++i)
        for (std::size_t j = i + 1; j < d0; ++j) out.push_back(x[i] * x[j]);
    return out;
}

std::vector<double> Standardization::apply(const std::vector<double>& x) const {
    if (x.size() != mean.size())
        throw std::invalid_argument("standardization: dimension mismatch");
    std::vector<double> z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean[i]) / sd[i];
    return z;
}

Standardization fit_standardization(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("standardization: no rows");
    const std::size_t d = rows[0].size();
    Standardization s;
    s.mean.assign(d, 0.0);
    s.sd.assign(d, 1.0);
    for (const auto& r : rows) {
        if (r.size() != d) throw std::invalid_argument("standardization: ragged rows");
        for (std::size_t i = 0; i < d; ++i) s.mean[i] += r[i];
    }
    for (auto& m : s.mean) m /= static_cast<double>(rows.size());
    if (rows.size() < 2) return s;
    for (std::size_t i = 0; i < d; ++i) {
        double ss = 0;
        for (const auto& r : rows) ss += (r[i] - s.mean[i]) * (r[i] - s.mean[i]);
        const double sd = std::sqrt(ss / (static_cast<double>(rows.size()) - 1.0));
        if (sd > 0 && std::isfinite(sd)) s.sd[i] = sd;
    }
    return s;
}

std::vector<double> FeatureExpansion::apply(const std::vector<double>& x) const {
    if (x.size() != input_dim)
        throw std::invalid_argument("feature expansion: input dimension mismatch");
    return expanded_std.apply(polynomial_expand(input_std.apply(x)));
}

FeatureExpansion fit_feature_expansion(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("feature expansion: no rows");
    FeatureExpansion fe;
    fe.input_dim = rows[0].size();
    fe.input_std = fit_standardization(rows);
    std::vector<std::vector<double>> expanded;
    expanded.reserve(rows.size());
    for (const auto& r : rows) expanded.push_back(polynomial_expand(fe.input_std.apply(r)));
    fe.expanded_std = fit_standardization(expanded);
    return fe;
}

}  // namespace platelet::summary
