#include "platelet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace platelet::sim {

void Substrate::neighbors(long cell, long out[4]) const {
    const long ix = cell % nx;
    const long iy = cell / nx;
    const long left = ix == 0 ? nx - 1 : ix - 1;
    const long right = ix == nx - 1 ? 0 : ix + 1;
    const long down = iy == 0 ? ny - 1 : iy - 1;
    const long up = iy == ny - 1 ? 0 : iy + 1;
    out[0] = iy * nx + left;
    out[1] = iy * nx + right;
    out[2] = down * nx + ix;
    out[3] = up * nx + ix;
}

bool Substrate::adjacent_occupied(long cell) const {
    long nb[4];
    neighbors(cell, nb);
    return occupied(nb[0]) || occupied(nb[1]) || occupied(nb[2]) || occupied(nb[3]);
}

namespace {

// periodic wrap without fmod: the shear advection can cross the window
// hundreds of times per step, so this runs hot
inline double wrap(double v, double period, double inv_period) {
    const double k = std::floor(v * inv_period);
    double r = v - k * period;
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

inline double clamp01_count(double p, std::uint64_t& counter) {
    if (p > 1.0) {
        ++counter;
        return 1.0;
    }
    return p < 0.0 ? 0.0 : p;
}

}  // namespace

Simulator::Simulator(const SimConfig& config, const ModelParams& params, std::uint64_t seed)
    : config_(config), params_(params) {
    config_.validate();
    for (double v : params_.to_array())
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("simulator: parameters must be finite and non-negative");

    const long n_nap = config_.initial_nap_count();
    const long n_ap = config_.initial_ap_count();

    state_.seed = seed;
    state_.initial_platelets = n_nap + n_ap;
    state_.substrate.nx = config_.eff_nx();
    state_.substrate.ny = config_.eff_ny();
    state_.substrate.stack.assign(static_cast<std::size_t>(config_.n_cells()), 0);
    state_.trapped_ap.assign(static_cast<std::size_t>(config_.n_cells()), 0);
    state_.trapped_nap.assign(static_cast<std::size_t>(config_.n_cells()), 0);

    // AP stream indices come first, then NAP
    rng::Stream init(seed, rng::Tag::generic, 0);
    const double wlx = config_.eff_lx(), wly = config_.eff_ly();
    std::uint64_t next_id = 0;
    for (long i = 0; i < n_ap; ++i, ++next_id) {
        state_.ap.add(init.uniform() * wlx, init.uniform() * wly, init.uniform() * config_.lz,
                      rng::derive_key(seed, rng::Tag::particle, next_id));
    }
    for (long i = 0; i < n_nap; ++i, ++next_id) {
        state_.nap.add(init.uniform() * wlx, init.uniform() * wly, init.uniform() * config_.lz,
                       rng::derive_key(seed, rng::Tag::particle, next_id));
    }
}

void Simulator::trap(Kind kind, long cell) {
    auto& counts = kind == Kind::ap ? state_.trapped_ap : state_.trapped_nap;
    const auto c = static_cast<std::size_t>(cell);
    if (state_.trapped_ap[c] + state_.trapped_nap[c] == 0)
        arrival_buffer_.push_back(static_cast<std::uint32_t>(cell));
    ++counts[c];
    ++state_.trapped_total;
    if (kind == Kind::nap) ++state_.trapped_nap_total;
}

void Simulator::advance_transport() {
    const double dt = config_.dt;
    const double shear_dt = config_.shear_rate * dt;
    const double lx = config_.eff_lx(), ly = config_.eff_ly(), lz = config_.lz;
    const double inv_lx = 1.0 / lx, inv_ly = 1.0 / ly;
    const int gnx = state_.substrate.nx, gny = state_.substrate.ny;
    const double cell_x = gnx * inv_lx, cell_y = gny * inv_ly;
    const auto step = static_cast<std::uint64_t>(state_.step_index);

    arrival_buffer_.clear();

    auto move_kind = [&](Particles& ps, Kind kind, double v) {
        const double vdt = v * dt;
        std::size_t i = 0;
        while (i < ps.size()) {
            rng::Stream draws(rng::step_key(ps.key[i], step));
            const double lambda = draws.coin() ? 1.0 : -1.0;
            const double s = std::fabs(draws.normal());
            double cdir, sdir;
            draws.unit_circle(cdir, sdir);

            const double jump = vdt * s;
            double nz = ps.z[i] + lambda * jump;
            // advection uses the pre-step height
            double nxp = ps.x[i] + jump * cdir + shear_dt * ps.z[i];
            double nyp = ps.y[i] + jump * sdir;

            nxp = wrap(nxp, lx, inv_lx);
            nyp = wrap(nyp, ly, inv_ly);
            while (nz > lz) nz = 2.0 * lz - nz;  // bounce back at the top wall

            if (nz < 0.0) {
                long ix = static_cast<long>(nxp * cell_x);
                long iy = static_cast<long>(nyp * cell_y);
                if (ix >= gnx) ix = gnx - 1;
                if (iy >= gny) iy = gny - 1;
                trap(kind, iy * gnx + ix);
                ps.remove(i);
                continue;  // swapped-in particle processed next
            }
            ps.x[i] = nxp;
            ps.y[i] = nyp;
            ps.z[i] = nz;
            ++i;
        }
    };

    move_kind(state_.ap, Kind::ap, params_.v_z_ap);
    move_kind(state_.nap, Kind::nap, params_.v_z_nap);

    if (!arrival_buffer_.empty()) {
        std::sort(arrival_buffer_.begin(), arrival_buffer_.end());
        std::vector<std::uint32_t> merged;
        merged.reserve(state_.active_cells.size() + arrival_buffer_.size());
        std::merge(state_.active_cells.begin(), state_.active_cells.end(),
                   arrival_buffer_.begin(), arrival_buffer_.end(),
                   std::back_inserter(merged));
        merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
        state_.active_cells = std::move(merged);
    }
}

void Simulator::attempt_depositions() {
    const double dt = config_.dt;
    auto& sub = state_.substrate;

    // albumin first: P = p_f * (rho_max - rho_al) * dt, one increment of the
    // uniform density field per step
    {
        const double head = config_.rho_max - sub.rho_al_level;
        if (head > 0.0 && params_.p_f > 0.0) {
            const double p = clamp01_count(params_.p_f * head * dt, state_.clamps.p_albumin);
            sub.rho_al_level = std::min(sub.rho_al_level + p, config_.rho_max);
        }
    }

    // deposition probabilities; the albumin level is uniform, so these are
    // shared by every cell this step
    const double atten = std::exp(-params_.a_t * sub.rho_al_level);
    const double q = clamp01_count(params_.p_ad * atten * dt, state_.clamps.q_adhesion);
    const double r = clamp01_count(params_.p_ag * atten * dt, state_.clamps.r_aggregation);
    const double p_top = clamp01_count(params_.p_t * dt, state_.clamps.p_top);

    const auto step = static_cast<std::uint64_t>(state_.step_index);
    bool any_emptied = false;

    for (const std::uint32_t zcell : state_.active_cells) {
        const long cell = zcell;
        const auto c = static_cast<std::size_t>(cell);
        std::uint32_t n_ap = state_.trapped_ap[c];
        std::uint32_t n_nap = state_.trapped_nap[c];
        if (n_ap + n_nap == 0) continue;

        rng::Stream draws(state_.seed, rng::Tag::cell_deposit, static_cast<std::uint64_t>(cell), step);

        // one attempt per waiting platelet; AP queue first, then NAP; the
        // branch is re-read from live state after each deposit
        for (std::uint32_t k = 0; k < n_ap; ++k) {
            const double prob = sub.occupied(cell) ? p_top : q;
            if (prob > 0.0 && draws.uniform() < prob) {
                ++sub.stack[c];
                --state_.trapped_ap[c];
                --state_.trapped_total;
                ++state_.deposited;
            }
        }
        for (std::uint32_t k = 0; k < n_nap; ++k) {
            double prob = 0.0;
            if (sub.occupied(cell)) prob = p_top;
            else if (sub.adjacent_occupied(cell)) prob = r;
            else continue;  // NAP cannot seed a cluster; no draw consumed
            if (prob > 0.0 && draws.uniform() < prob) {
                ++sub.stack[c];
                --state_.trapped_nap[c];
                --state_.trapped_total;
                --state_.trapped_nap_total;
                ++state_.deposited;
            }
        }
        if (state_.trapped_ap[c] + state_.trapped_nap[c] == 0) any_emptied = true;
    }

    if (any_emptied) {
        auto& active = state_.active_cells;
        active.erase(std::remove_if(active.begin(), active.end(),
                                    [&](std::uint32_t cc) {
                                        return state_.trapped_ap[cc] + state_.trapped_nap[cc] == 0;
                                    }),
                     active.end());
    }
}

ObservationRow Simulator::measure() const {
    const auto clusters = label_clusters(state_.substrate);
    ObservationRow row;
    row.t = state_.t;
    row.n_agg_clust = static_cast<double>(clusters.size()) / config_.domain_area_mm2();
    if (!clusters.empty()) {
        std::size_t cells = 0;
        for (const auto& cl : clusters) cells += cl.size();
        row.s_agg_clust =
            static_cast<double>(cells) / static_cast<double>(clusters.size()) * config_.cell_area_um2;
    }
    row.n_platelet = static_cast<double>(state_.suspended_nap()) / config_.domain_volume_ul();
    return row;
}

DepositionTrace Simulator::run() {
    DepositionTrace trace;
    const double vol = config_.domain_volume_ul();
    trace.n_platelet_0 = static_cast<double>(config_.initial_nap_count()) / vol;
    trace.n_act_platelet_0 = static_cast<double>(config_.initial_ap_count()) / vol;

    for (const double t_obs : config_.obs_times) {
        const long target = std::lround(t_obs / config_.dt);
        while (state_.step_index < target) step();
        ObservationRow row = measure();
        row.t = t_obs;  // label with the requested time
        trace.rows.push_back(row);
    }
    return trace;
}

std::vector<std::vector<std::uint32_t>> label_clusters(const Substrate& substrate) {
    std::vector<std::vector<std::uint32_t>> clusters;
    const long n = substrate.cell_count();
    std::vector<std::uint8_t> visited(static_cast<std::size_t>(n), 0);
    std::vector<std::uint32_t> stack_buf;
    long nb[4];

    for (long c0 = 0; c0 < n; ++c0) {
        if (!substrate.occupied(c0) || visited[static_cast<std::size_t>(c0)]) continue;
        std::vector<std::uint32_t> comp;
        stack_buf.clear();
        stack_buf.push_back(static_cast<std::uint32_t>(c0));
        visited[static_cast<std::size_t>(c0)] = 1;
        while (!stack_buf.empty()) {
            const long c = stack_buf.back();
            stack_buf.pop_back();
            comp.push_back(static_cast<std::uint32_t>(c));
            substrate.neighbors(c, nb);
            for (const long m : nb) {
                if (substrate.occupied(m) && !visited[static_cast<std::size_t>(m)]) {
                    visited[static_cast<std::size_t>(m)] = 1;
                    stack_buf.push_back(static_cast<std::uint32_t>(m));
                }
            }
        }
        std::sort(comp.begin(), comp.end());
        clusters.push_back(std::move(comp));
    }
    return clusters;
}

DepositionTrace simulate(const ModelParams& params, const SimConfig& config,
                         std::uint64_t seed) {
    Simulator s(config, params, seed);
    return s.run();
}

}  // namespace platelet::sim
