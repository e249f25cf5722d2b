#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "platelet/prior.hpp"
#include "platelet/rng.hpp"
#include "platelet/summary_transform.hpp"
#include "platelet/trace.hpp"

namespace platelet::abc {

// A simulator under inference: maps parameters (natural units) and a seed to
// a raw observation vector.
using Simulate = std::function<std::vector<double>(const std::vector<double>&, std::uint64_t)>;
using Distance = std::function<double(const std::vector<double>&, const std::vector<double>&)>;

struct Provenance {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::string observed_id;
    std::string kernel;
    int n_samples = 0;
    int n_iterations = 0;
    std::vector<double> epsilon_schedule;            // per generation
    std::vector<double> mean_distance_per_generation;
    std::vector<double> acceptance_rate_per_generation;
    double final_epsilon = 0;
    long n_simulations = 0;
    bool budget_exhausted = false;
};

struct PosteriorSamples {
    std::vector<std::vector<double>> samples;  // natural units
    std::vector<double> weights;               // uniform unless stated
    std::vector<double> distances;             // accepted distance per sample
    Provenance provenance;

    std::size_t size() const { return samples.size(); }
};

struct AbcConfig {
    int n_samples = 510;
    int n_iterations = 20;
    double epsilon0 = -1.0;          // <0: median distance of the initial population
    double epsilon_quantile = 0.5;   // per-generation shrink quantile
    double epsilon_min = 1e-6;
    std::string kernel = "exponential";  // exponential | indicator
    long budget = 0;                 // simulation cap for rejection; 0 = 1000 * n_samples
    std::uint64_t seed = 0;
    int workers = 1;

    void validate() const;
};

// Rejection ABC accepts nothing within budget.
struct NoAcceptanceError : std::runtime_error {
    explicit NoAcceptanceError(double smallest)
        : std::runtime_error("rejection ABC: budget exhausted with zero acceptances"
                             " (smallest distance seen: " + std::to_string(smallest) + ")"),
          smallest_distance(smallest) {}
    double smallest_distance;
};

// Simulator threw mid-run; carries whatever provenance accumulated.
struct SabcAbortError : std::runtime_error {
    SabcAbortError(const std::string& what, Provenance prov)
        : std::runtime_error(what), partial(std::move(prov)) {}
    Provenance partial;
};

// SABC acceptance kernel, exposed for unit tests: increasing in epsilon for
// fixed d, decreasing in d for fixed epsilon.
double exponential_kernel(double d, double epsilon);

// Euclidean distance between learned summaries: ||s(x1) - s(x2)||_2.
double summary_distance(const summary::SummaryTransform& transform,
                        const DepositionTrace& x1, const DepositionTrace& x2);

// Same distance on raw flattened observation vectors, as a Distance functor.
Distance make_summary_distance(const summary::SummaryTransform& transform);

// Accept theta ~ prior whenever d(x_sim, x_obs) < epsilon, until n_target
// acceptances or the budget runs out. Candidate seeds derive from (seed,
// index), so the accepted set is invariant to evaluation order and worker
// count.
PosteriorSamples rejection_abc(const Simulate& simulate, const PriorBox& prior,
                               const Distance& distance, const std::vector<double>& x_obs,
                               double epsilon, int n_target, long budget,
                               std::uint64_t seed, int workers = 1);

// Population SABC: prior-initialized particles evolved for n_iterations
// generations; each particle proposes a Gaussian move (covariance 2x the
// population covariance in inference coordinates, out-of-box proposals
// re-drawn) and replaces its state with probability min(1, exp((d_old -
// d_new)/eps_g)); eps shrinks to the configured quantile of the population
// distances, floored at epsilon_min.
PosteriorSamples sabc(const Simulate& simulate, const PriorBox& prior,
                      const Distance& distance, const std::vector<double>& x_obs,
                      const AbcConfig& config);

// Persistence: CSV (one row per sample: parameters + distance) plus a JSON
// provenance sidecar.
void write_posterior_csv(const PosteriorSamples& posterior, const PriorBox& prior,
                         const std::string& path);
PosteriorSamples read_posterior_csv(const std::string& path);
void write_provenance_json(const Provenance& prov, const std::string& path);

}  // namespace platelet::abc
