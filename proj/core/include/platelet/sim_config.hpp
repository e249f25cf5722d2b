#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace platelet {

// Geometry, discretization and initial densities of the deposition chamber.
//
// Albumin surface density is measured in units of the per-cell capacity
// (100,000 particles per 5 um^2 cell), so rho_max defaults to 1 and the
// attenuation exponent a_t * rho_al stays O(1) across the default prior box.
struct SimConfig {
    // domain [m]
    double lx = 1.0e-3;
    double ly = 1.0e-3;
    double lz = 0.82e-3;

    double shear_rate = 100.0;  // [1/s]
    double dt = 0.01;           // [s]

    // substrate grid: square cells of area cell_area
    int nx = 448;
    int ny = 448;
    double cell_area_um2 = 5.0;  // one deposited platelet per cell

    double rho_max = 1.0;  // albumin capacity per cell, in density units

    // initial suspension densities [1/ul]
    double density_nap = 172200.0;
    double density_ap = 4808.0;
    double density_albumin = 2.69e13;

    // Down-scaling for desk runs: shrinks the observation window area (and
    // with it the particle counts) by this factor, leaving the wall-normal
    // physics and all areal/volumetric densities untouched. Densities are
    // reported in physical units at every scale.
    double particle_scale = 1.0;

    std::vector<double> obs_times = {20.0, 120.0, 300.0};  // [s]

    // effective (scaled) window geometry used by the simulation
    double eff_lx() const { return lx * std::sqrt(particle_scale); }
    double eff_ly() const { return ly * std::sqrt(particle_scale); }
    int eff_nx() const;
    int eff_ny() const;

    // scaled window volume/area; counts and densities derive from these
    double domain_volume_ul() const { return lx * ly * lz * 1e9 * particle_scale; }
    double domain_area_mm2() const { return lx * ly * 1e6 * particle_scale; }
    long n_cells() const { return static_cast<long>(eff_nx()) * eff_ny(); }

    // initial particle counts after scaling
    long initial_nap_count() const;
    long initial_ap_count() const;

    void validate() const;  // throws std::invalid_argument

    // fast-test preset: particle_scale 0.05, dt 0.1
    static SimConfig desk();
};

// Plain-text key-value parsing (`key = value`, '#' comments). Unknown keys
// are rejected so typos fail loudly.
SimConfig sim_config_from_keyvalues(const std::vector<std::pair<std::string, std::string>>& kv);
SimConfig read_sim_config(const std::string& path);
std::string sim_config_to_keyvalues(const SimConfig& c);

}  // namespace platelet
