#include "platelet/sim_config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "platelet/io_util.hpp"
#include "platelet/keyval.hpp"

namespace platelet {

int SimConfig::eff_nx() const {
    return static_cast<int>(std::max(1L, std::lround(nx * std::sqrt(particle_scale))));
}

int SimConfig::eff_ny() const {
    return static_cast<int>(std::max(1L, std::lround(ny * std::sqrt(particle_scale))));
}

long SimConfig::initial_nap_count() const {
    return std::lround(density_nap * domain_volume_ul());
}

long SimConfig::initial_ap_count() const {
    return std::lround(density_ap * domain_volume_ul());
}

void SimConfig::validate() const {
    if (!(lx > 0) || !(ly > 0) || !(lz > 0))
        throw std::invalid_argument("sim config: domain lengths must be positive");
    if (!(dt > 0)) throw std::invalid_argument("sim config: dt must be positive");
    if (nx < 1 || ny < 1) throw std::invalid_argument("sim config: grid must be at least 1x1");
    if (!(cell_area_um2 > 0))
        throw std::invalid_argument("sim config: cell area must be positive");
    if (!(rho_max > 0)) throw std::invalid_argument("sim config: rho_max must be positive");
    if (!(particle_scale > 0))
        throw std::invalid_argument("sim config: particle_scale must be positive");
    if (density_nap < 0 || density_ap < 0 || density_albumin < 0)
        throw std::invalid_argument("sim config: densities must be non-negative");

    // grid area must match the observation window; square sqrt(5)-um cells
    // cannot tile 1 mm exactly, so allow 0.5% relative slack (448^2 cells of
    // 5 um^2 overshoot 1 mm^2 by 0.35%)
    const double grid_area_um2 = static_cast<double>(nx) * ny * cell_area_um2;
    const double domain_area_um2 = lx * ly * 1e12;
    if (std::abs(grid_area_um2 - domain_area_um2) >
        std::max(cell_area_um2, 5e-3 * domain_area_um2))
        throw std::invalid_argument("sim config: grid area does not cover the domain");

    if (obs_times.empty())
        throw std::invalid_argument("sim config: at least one observation time required");
    double prev = 0.0;
    for (double t : obs_times) {
        if (!(t > prev))
            throw std::invalid_argument("sim config: obs_times must be strictly increasing and positive");
        prev = t;
    }
    if (initial_nap_count() + initial_ap_count() <= 0)
        throw std::invalid_argument(
            "sim config: particle_scale yields zero particles after rounding");
}

SimConfig SimConfig::desk() {
    SimConfig c;
    c.particle_scale = 0.05;
    c.dt = 0.1;
    return c;
}

SimConfig sim_config_from_keyvalues(const std::vector<std::pair<std::string, std::string>>& kv) {
    SimConfig c;
    for (const auto& [k, v] : kv) {
        if (k == "lx") c.lx = io::parse_double(v);
        else if (k == "ly") c.ly = io::parse_double(v);
        else if (k == "lz") c.lz = io::parse_double(v);
        else if (k == "shear_rate") c.shear_rate = io::parse_double(v);
        else if (k == "dt") c.dt = io::parse_double(v);
        else if (k == "nx") c.nx = static_cast<int>(io::parse_int(v));
        else if (k == "ny") c.ny = static_cast<int>(io::parse_int(v));
        else if (k == "cell_area_um2") c.cell_area_um2 = io::parse_double(v);
        else if (k == "rho_max") c.rho_max = io::parse_double(v);
        else if (k == "density_nap") c.density_nap = io::parse_double(v);
        else if (k == "density_ap") c.density_ap = io::parse_double(v);
        else if (k == "density_albumin") c.density_albumin = io::parse_double(v);
        else if (k == "particle_scale") c.particle_scale = io::parse_double(v);
        else if (k == "obs_times") {
            c.obs_times.clear();
            for (const auto& tok : io::split(v, ' '))
                if (!io::trim(tok).empty()) c.obs_times.push_back(io::parse_double(tok));
        } else {
            throw std::runtime_error("sim config: unknown key '" + k + "'");
        }
    }
    c.validate();
    return c;
}

SimConfig read_sim_config(const std::string& path) {
    return sim_config_from_keyvalues(io::read_keyvalues(path));
}

std::string sim_config_to_keyvalues(const SimConfig& c) {
    io::KeyValues kv;
    kv.emplace_back("lx", io::fmt(c.lx));
    kv.emplace_back("ly", io::fmt(c.ly));
    kv.emplace_back("lz", io::fmt(c.lz));
    kv.emplace_back("shear_rate", io::fmt(c.shear_rate));
    kv.emplace_back("dt", io::fmt(c.dt));
    kv.emplace_back("nx", std::to_string(c.nx));
    kv.emplace_back("ny", std::to_string(c.ny));
    kv.emplace_back("cell_area_um2", io::fmt(c.cell_area_um2));
    kv.emplace_back("rho_max", io::fmt(c.rho_max));
    kv.emplace_back("density_nap", io::fmt(c.density_nap));
    kv.emplace_back("density_ap", io::fmt(c.density_ap));
    kv.emplace_back("density_albumin", io::fmt(c.density_albumin));
    kv.emplace_back("particle_scale", io::fmt(c.particle_scale));
    std::string times;
    for (std::size_t i = 0; i < c.obs_times.size(); ++i) {
        if (i) times += ' ';
        times += io::fmt(c.obs_times[i]);
    }
    kv.emplace_back("obs_times", times);
    return io::keyvalues_to_text(kv);
}

}  // namespace platelet
