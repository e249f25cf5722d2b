#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace platelet {

// The seven model parameters, in the fixed serialization order used by every
// file format and CLI flag in the toolkit.
struct ModelParams {
    double p_ad = 0;     // adhesion rate onto empty substrate [1/s]
    double p_ag = 0;     // aggregation rate at cluster periphery [1/s]
    double p_t = 0;      // rate of depositing on top of an existing cluster [1/s]
    double p_f = 0;      // albumin deposition rate [1/s per density unit]
    double a_t = 0;      // attenuation factor multiplying albumin density
    double v_z_ap = 0;   // characteristic vertical velocity, activated platelets [m/s]
    double v_z_nap = 0;  // characteristic vertical velocity, non-activated platelets [m/s]

    static constexpr std::size_t dim = 7;

    static const std::array<std::string, dim>& names();

    std::array<double, dim> to_array() const {
        return {p_ad, p_ag, p_t, p_f, a_t, v_z_ap, v_z_nap};
    }
    static ModelParams from_array(const std::array<double, dim>& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }

    double operator[](std::size_t i) const { return to_array()[i]; }

    // all components strictly positive and finite
    bool valid() const;
    void validate() const;  // throws std::invalid_argument
};

}  // namespace platelet
