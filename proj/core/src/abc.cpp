#include "platelet/abc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "platelet/io_util.hpp"
#include "platelet/parallel.hpp"
#include "platelet/stats.hpp"

namespace platelet::abc {

void AbcConfig::validate() const {
    if (n_samples < 1) throw std::invalid_argument("abc config: n_samples must be >= 1");
    if (n_iterations < 0) throw std::invalid_argument("abc config: n_iterations must be >= 0");
    if (epsilon0 == 0 || (epsilon0 > 0 && !std::isfinite(epsilon0)))
        throw std::invalid_argument("abc config: epsilon0 must be positive (or <0 for auto)");
    if (!(epsilon_quantile > 0) || !(epsilon_quantile <= 1))
        throw std::invalid_argument("abc config: epsilon_quantile must be in (0, 1]");
    if (!(epsilon_min > 0)) throw std::invalid_argument("abc config: epsilon_min must be > 0");
    if (kernel != "exponential" && kernel != "indicator")
        throw std::invalid_argument("abc config: kernel must be 'exponential' or 'indicator'");
    if (budget < 0) throw std::invalid_argument("abc config: budget must be >= 0");
    if (workers < 1) throw std::invalid_argument("abc config: workers must be >= 1");
}

double exponential_kernel(double d, double epsilon) {
    return std::exp(-d / epsilon);
}

double summary_distance(const summary::SummaryTransform& transform,
                        const DepositionTrace& x1, const DepositionTrace& x2) {
    const auto s1 = transform.apply(x1);
    const auto s2 = transform.apply(x2);
    double acc = 0;
    for (std::size_t i = 0; i < s1.size(); ++i) acc += (s1[i] - s2[i]) * (s1[i] - s2[i]);
    return std::sqrt(acc);
}

Distance make_summary_distance(const summary::SummaryTransform& transform) {
    return [&transform](const std::vector<double>& a, const std::vector<double>& b) {
        const auto sa = transform.apply(a);
        const auto sb = transform.apply(b);
        double acc = 0;
        for (std::size_t i = 0; i < sa.size(); ++i) acc += (sa[i] - sb[i]) * (sa[i] - sb[i]);
        return std::sqrt(acc);
    };
}

PosteriorSamples rejection_abc(const Simulate& simulate, const PriorBox& prior,
                               const Distance& distance, const std::vector<double>& x_obs,
                               double epsilon, int n_target, long budget,
                               std::uint64_t seed, int workers) {
    prior.validate();
    if (!(epsilon > 0)) throw std::invalid_argument("rejection ABC: epsilon must be > 0");
    if (n_target < 1) throw std::invalid_argument("rejection ABC: n_target must be >= 1");
    if (budget <= 0) budget = 1000L * n_target;

    PosteriorSamples out;
    out.provenance.algorithm = "rejection";
    out.provenance.kernel = "indicator";
    out.provenance.seed = seed;
    out.provenance.n_samples = n_target;
    out.provenance.epsilon_schedule = {epsilon};
    out.provenance.final_epsilon = epsilon;

    double smallest = std::numeric_limits<double>::infinity();
    long used = 0;

    const long batch = std::max<long>(64, 64L * workers);
    std::vector<std::vector<double>> thetas(static_cast<std::size_t>(batch));
    std::vector<double> dists(static_cast<std::size_t>(batch));

    while (used < budget && static_cast<int>(out.samples.size()) < n_target) {
        const long n_block = std::min(batch, budget - used);
        parallel_for(static_cast<std::size_t>(n_block), workers, [&](std::size_t j) {
            const std::uint64_t idx = static_cast<std::uint64_t>(used) + j;
            rng::Stream draw(seed, rng::Tag::abc_proposal, idx);
            auto theta = prior.sample(draw);
            const auto x = simulate(theta, rng::derive_key(seed, rng::Tag::abc_candidate, idx));
            dists[j] = distance(x, x_obs);
            thetas[j] = std::move(theta);
        });
        for (long j = 0; j < n_block && static_cast<int>(out.samples.size()) < n_target; ++j) {
            const double d = dists[static_cast<std::size_t>(j)];
            smallest = std::min(smallest, d);
            if (d < epsilon) {
                out.samples.push_back(thetas[static_cast<std::size_t>(j)]);
                out.distances.push_back(d);
            }
        }
        used += n_block;
    }
    out.provenance.n_simulations = used;
    out.provenance.budget_exhausted = static_cast<int>(out.samples.size()) < n_target;
    if (out.samples.empty()) throw NoAcceptanceError(smallest);
    out.weights.assign(out.samples.size(), 1.0 / static_cast<double>(out.samples.size()));
    return out;
}

namespace {

// lower Cholesky of a small SPD matrix with a diagonal ridge for safety
std::vector<double> cholesky_ridged(std::vector<double> m, std::size_t d) {
    double max_diag = 0;
    for (std::size_t i = 0; i < d; ++i) max_diag = std::max(max_diag, m[i * d + i]);
    const double ridge = std::max(1e-12 * max_diag, 1e-300);
    for (std::size_t i = 0; i < d; ++i) m[i * d + i] += ridge;

    std::vector<double> l(d * d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m[i * d + j];
            for (std::size_t k = 0; k < j; ++k) s -= l[i * d + k] * l[j * d + k];
            if (i == j) {
                l[i * d + i] = std::sqrt(std::max(s, 0.0));
            } else {
                l[i * d + j] = l[j * d + j] > 0 ? s / l[j * d + j] : 0.0;
            }
        }
    }
    return l;
}

std::vector<double> population_covariance(const std::vector<std::vector<double>>& pop,
                                          std::size_t d) {
    const auto n = static_cast<double>(pop.size());
    std::vector<double> mean(d, 0.0);
    for (const auto& p : pop)
        for (std::size_t i = 0; i < d; ++i) mean[i] += p[i];
    for (auto& m : mean) m /= n;
    std::vector<double> cov(d * d, 0.0);
    for (const auto& p : pop)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                cov[i * d + j] += (p[i] - mean[i]) * (p[j] - mean[j]);
    const double denom = pop.size() > 1 ? n - 1.0 : 1.0;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            cov[i * d + j] /= denom;
            cov[j * d + i] = cov[i * d + j];
        }
    return cov;
}

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

PosteriorSamples sabc(const Simulate& simulate, const PriorBox& prior,
                      const Distance& distance, const std::vector<double>& x_obs,
                      const AbcConfig& config) {
    prior.validate();
    config.validate();
    const std::size_t d = prior.dim();
    const auto n = static_cast<std::size_t>(config.n_samples);
    const bool indicator = config.kernel == "indicator";

    Provenance prov;
    prov.algorithm = "sabc";
    prov.kernel = config.kernel;
    prov.seed = config.seed;
    prov.n_samples = config.n_samples;
    prov.n_iterations = config.n_iterations;

    std::vector<std::vector<double>> pop(n);       // inference coordinates
    std::vector<double> dist_pop(n);

    try {
        parallel_for(n, config.workers, [&](std::size_t i) {
            rng::Stream draw(config.seed, rng::Tag::abc_proposal, 0, i);
            const auto theta = prior.sample(draw);
            const auto x = simulate(theta, rng::derive_key(config.seed, rng::Tag::abc_candidate, 0, i));
            dist_pop[i] = distance(x, x_obs);
            pop[i] = prior.to_internal(theta);
        });
    } catch (const std::exception& e) {
        throw SabcAbortError(std::string("SABC: simulator failed during initialization: ") + e.what(),
                             prov);
    }
    prov.n_simulations += static_cast<long>(n);

    double eps = config.epsilon0 > 0 ? config.epsilon0
                                     : stats::quantile(dist_pop, 0.5);
    eps = std::max(eps, config.epsilon_min);
    prov.epsilon_schedule.push_back(eps);
    prov.mean_distance_per_generation.push_back(mean_of(dist_pop));
    prov.acceptance_rate_per_generation.push_back(1.0);

    for (int g = 1; g <= config.n_iterations; ++g) {
        // move kernel: N(0, 2 * population covariance) in inference coords
        auto cov = population_covariance(pop, d);
        for (auto& c : cov) c *= 2.0;
        const auto chol = cholesky_ridged(std::move(cov), d);

        std::vector<std::vector<double>> next_pop = pop;
        std::vector<double> next_dist = dist_pop;
        std::vector<std::uint8_t> accepted(n, 0);
        const double cur_eps = eps;

        try {
            parallel_for(n, config.workers, [&](std::size_t i) {
                rng::Stream prop(config.seed, rng::Tag::abc_proposal,
                                 static_cast<std::uint64_t>(g), i);
                std::vector<double> cand(d);
                bool found = false;
                for (int attempt = 0; attempt < 100 && !found; ++attempt) {
                    for (std::size_t a = 0; a < d; ++a) cand[a] = pop[i][a];
                    for (std::size_t a = 0; a < d; ++a) {
                        const double z = prop.normal();
                        for (std::size_t b = a; b < d; ++b) cand[b] += chol[b * d + a] * z;
                    }
                    found = prior.contains_internal(cand);
                }
                if (!found) return;  // particle keeps its state this generation

                const auto x = simulate(prior.to_natural(cand),
                                        rng::derive_key(config.seed, rng::Tag::abc_candidate,
                                                        static_cast<std::uint64_t>(g), i));
                const double d_new = distance(x, x_obs);
                rng::Stream acc(config.seed, rng::Tag::abc_accept,
                                static_cast<std::uint64_t>(g), i);
                bool take;
                if (indicator) {
                    take = d_new < cur_eps;
                } else {
                    const double ratio = std::exp((dist_pop[i] - d_new) / cur_eps);
                    take = d_new <= dist_pop[i] || acc.uniform() < ratio;
                }
                if (take) {
                    next_pop[i] = std::move(cand);
                    next_dist[i] = d_new;
                    accepted[i] = 1;
                }
            });
        } catch (const std::exception& e) {
            prov.final_epsilon = eps;
            throw SabcAbortError(std::string("SABC: simulator failed in generation ") +
                                     std::to_string(g) + ": " + e.what(),
                                 prov);
        }
        prov.n_simulations += static_cast<long>(n);

        pop = std::move(next_pop);
        dist_pop = std::move(next_dist);

        eps = std::max(std::min(eps, stats::quantile(dist_pop, config.epsilon_quantile)),
                       config.epsilon_min);
        prov.epsilon_schedule.push_back(eps);
        prov.mean_distance_per_generation.push_back(mean_of(dist_pop));
        long n_acc = 0;
        for (auto a : accepted) n_acc += a;
        prov.acceptance_rate_per_generation.push_back(static_cast<double>(n_acc) /
                                                      static_cast<double>(n));
    }

    prov.final_epsilon = eps;
    PosteriorSamples out;
    out.provenance = std::move(prov);
    out.samples.reserve(n);
    for (const auto& p : pop) out.samples.push_back(prior.to_natural(p));
    out.distances = std::move(dist_pop);
    out.weights.assign(n, 1.0 / static_cast<double>(n));
    return out;
}

void write_posterior_csv(const PosteriorSamples& posterior, const PriorBox& prior,
                         const std::string& path) {
    std::ostringstream out;
    for (std::size_t i = 0; i < prior.dim(); ++i) out << prior.name_of(i) << ',';
    out << "distance\n";
    for (std::size_t k = 0; k < posterior.size(); ++k) {
        for (const double v : posterior.samples[k]) out << io::fmt(v) << ',';
        out << io::fmt(posterior.distances[k]) << "\n";
    }
    io::write_file(path, out.str());
}

PosteriorSamples read_posterior_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("posterior csv: empty file");
    const auto header = io::split(io::trim(line), ',');
    if (header.size() < 2 || header.back() != "distance")
        throw std::runtime_error("posterior csv: expected '<params...>,distance' header");
    const std::size_t d = header.size() - 1;
    PosteriorSamples out;
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != d + 1)
            throw std::runtime_error("posterior csv: bad row '" + line + "'");
        std::vector<double> theta(d);
        for (std::size_t i = 0; i < d; ++i) theta[i] = io::parse_double(f[i]);
        out.samples.push_back(std::move(theta));
        out.distances.push_back(io::parse_double(f[d]));
    }
    if (out.samples.empty()) throw std::runtime_error("posterior csv: no samples");
    out.weights.assign(out.samples.size(), 1.0 / static_cast<double>(out.samples.size()));
    return out;
}

void write_provenance_json(const Provenance& prov, const std::string& path) {
    nlohmann::json j;
    j["algorithm"] = prov.algorithm;
    j["seed"] = prov.seed;
    j["observed_id"] = prov.observed_id;
    j["kernel"] = prov.kernel;
    j["n_samples"] = prov.n_samples;
    j["n_iterations"] = prov.n_iterations;
    j["epsilon_schedule"] = prov.epsilon_schedule;
    j["mean_distance_per_generation"] = prov.mean_distance_per_generation;
    j["acceptance_rate_per_generation"] = prov.acceptance_rate_per_generation;
    j["final_epsilon"] = prov.final_epsilon;
    j["n_simulations"] = prov.n_simulations;
    j["budget_exhausted"] = prov.budget_exhausted;
    io::write_file(path, j.dump(2) + "\n");
}

}  // namespace platelet::abc
