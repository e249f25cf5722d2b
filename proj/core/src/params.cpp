#include "platelet/params.hpp"

#include <cmath>

namespace platelet {

const std::array<std::string, ModelParams::dim>& ModelParams::names() {
    static const std::array<std::string, dim> n = {
        "p_ad", "p_ag", "p_t", "p_f", "a_t", "v_z_ap", "v_z_nap"};
    return n;
}

bool ModelParams::valid() const {
    for (double v : to_array())
        if (!(v > 0.0) || !std::isfinite(v)) return false;
    return true;
}

void ModelParams::validate() const {
    if (!valid())
        throw std::invalid_argument(
            "ModelParams: all seven components must be strictly positive and finite");
}

}  // namespace platelet
