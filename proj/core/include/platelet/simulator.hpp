#pragma once

#include <cstdint>
#include <vector>

#include "platelet/params.hpp"
#include "platelet/rng.hpp"
#include "platelet/sim_config.hpp"
#include "platelet/trace.hpp"

namespace platelet::sim {

enum class Kind : std::uint8_t { ap, nap };

// Bulk platelets of one kind, structure-of-arrays. `key` is the persistent
// per-particle RNG stream key assigned at initialization; it survives
// removal so draws never depend on array layout.
struct Particles {
    std::vector<double> x, y, z;  // [m]
    std::vector<std::uint64_t> key;

    std::size_t size() const { return x.size(); }
    void add(double px, double py, double pz, std::uint64_t pkey) {
        x.push_back(px);
        y.push_back(py);
        z.push_back(pz);
        key.push_back(pkey);
    }
    void remove(std::size_t i) {
        x[i] = x.back();
        y[i] = y.back();
        z[i] = z.back();
        key[i] = key.back();
        x.pop_back();
        y.pop_back();
        z.pop_back();
        key.pop_back();
    }
};

// Deposited platelets and albumin on the discretized substrate.
//
// Under the expected-value albumin scheme the per-cell density receives the
// same increment everywhere each step, so the field stays spatially uniform
// and is stored as a single level; rho_al(cell) reads that level. Platelet
// occupancy is a per-cell stack count (footprint cell plus deposits on top).
struct Substrate {
    int nx = 0, ny = 0;
    std::vector<std::uint32_t> stack;
    double rho_al_level = 0.0;

    long cell_count() const { return static_cast<long>(nx) * ny; }
    bool occupied(long cell) const { return stack[static_cast<std::size_t>(cell)] > 0; }
    double rho_al(long /*cell*/) const { return rho_al_level; }
    // 4-neighbors with periodic wrap
    void neighbors(long cell, long out[4]) const;
    bool adjacent_occupied(long cell) const;
};

struct ClampCounters {
    std::uint64_t p_albumin = 0;
    std::uint64_t q_adhesion = 0;
    std::uint64_t r_aggregation = 0;
    std::uint64_t p_top = 0;
    std::uint64_t total() const { return p_albumin + q_adhesion + r_aggregation + p_top; }
};

struct SimState {
    Particles ap, nap;
    // per-cell queues of platelets below the cell-free layer awaiting
    // deposition; same-kind waiters are exchangeable so counts suffice
    std::vector<std::uint32_t> trapped_ap, trapped_nap;
    std::vector<std::uint32_t> active_cells;  // sorted cells with waiters
    Substrate substrate;

    double t = 0.0;
    long step_index = 0;
    long deposited = 0;
    long trapped_total = 0;
    long trapped_nap_total = 0;
    long initial_platelets = 0;
    ClampCounters clamps;
    std::uint64_t seed = 0;

    long bulk_count() const {
        return static_cast<long>(ap.size()) + static_cast<long>(nap.size());
    }
    // NAP not yet deposited: in the bulk or waiting below the cell-free
    // layer. Both count as "still in suspension" for the measured trace.
    long suspended_nap() const {
        return static_cast<long>(nap.size()) + trapped_nap_total;
    }
    // bulk + trapped + deposited must equal the initial count, exactly
    bool conservation_ok() const {
        return bulk_count() + trapped_total + deposited == initial_platelets;
    }
};

class Simulator {
public:
    // Places round(density * volume * particle_scale) platelets of each kind
    // uniformly in the domain; substrate starts empty. Bit-identical state
    // for equal (config, params, seed).
    Simulator(const SimConfig& config, const ModelParams& params, std::uint64_t seed);

    // Random-walk jump plus shear advection for every bulk platelet, periodic
    // wrap in x/y, bounce-back at the top wall; platelets crossing z=0 join
    // their cell's trapped queue and never re-enter the bulk.
    void advance_transport();

    // Albumin field update, then one deposition attempt per trapped platelet
    // against its current cell (AP queue first, then NAP; live substrate
    // state within the step).
    void attempt_depositions();

    void step() {
        advance_transport();
        attempt_depositions();
        state_.t += config_.dt;
        ++state_.step_index;
    }

    ObservationRow measure() const;

    // Full run to the last observation time, recording at every obs_time.
    DepositionTrace run();

    const SimState& state() const { return state_; }
    SimState& mutable_state() { return state_; }
    const SimConfig& config() const { return config_; }
    const ModelParams& params() const { return params_; }

private:
    void trap(Kind kind, long cell);

    SimConfig config_;
    ModelParams params_;
    SimState state_;
    std::vector<std::uint32_t> arrival_buffer_;
};

// Partition of occupied cells into 4-connected components under periodic
// wrap, each component a list of cell indices. Deterministic: components in
// first-cell order, cells in ascending order.
std::vector<std::vector<std::uint32_t>> label_clusters(const Substrate& substrate);

DepositionTrace simulate(const ModelParams& params, const SimConfig& config,
                         std::uint64_t seed);

}  // namespace platelet::sim
