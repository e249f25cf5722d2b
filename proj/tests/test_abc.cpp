#include <doctest.h>

#include <cmath>
#include <limits>

#include "platelet/abc.hpp"
#include "platelet/stats.hpp"

using namespace platelet;

namespace {

abc::PriorBox box1d(double lo, double hi) {
    abc::PriorBox p;
    p.bounds = {{lo, hi}};
    return p;
}

// deterministic toy: the simulator output is theta itself
const abc::Simulate kIdentitySim = [](const std::vector<double>& theta, std::uint64_t) {
    return theta;
};

const abc::Distance kAbsDistance = [](const std::vector<double>& a,
                                      const std::vector<double>& b) {
    return std::fabs(a[0] - b[0]);
};

// raw identity transform: no centering, unit scales, L picks the first two
// expanded coordinates (the first two raw features)
summary::SummaryTransform raw_identity(std::size_t d0) {
    summary::SummaryTransform t;
    t.kind = summary::SummaryTransform::Kind::linear;
    t.expansion.input_dim = d0;
    t.expansion.input_std.mean.assign(d0, 0.0);
    t.expansion.input_std.sd.assign(d0, 1.0);
    const std::size_t d = t.expansion.output_dim();
    t.expansion.expanded_std.mean.assign(d, 0.0);
    t.expansion.expanded_std.sd.assign(d, 1.0);
    t.out_dim = 2;
    t.l_matrix.assign(2 * d, 0.0);
    t.l_matrix[0] = 1.0;
    t.l_matrix[d + 1] = 1.0;
    t.trained = true;
    return t;
}

}  // namespace

TEST_CASE("prior: bounds, degenerate construction, uniform marginals") {
    auto p = box1d(0.0, 1.0);
    p.validate();
    rng::Stream s(1, rng::Tag::generic, 0);
    for (int i = 0; i < 1000; ++i) {
        const auto theta = p.sample(s);
        CHECK(theta[0] >= 0.0);
        CHECK(theta[0] <= 1.0);
    }

    CHECK_THROWS_AS(box1d(0.5, 0.5).validate(), std::invalid_argument);
    CHECK_THROWS_AS(box1d(1.0, 0.0).validate(), std::invalid_argument);

    // chi-square goodness of fit at the 1% level, 20 bins
    const int bins = 20, n = 10000;
    std::vector<int> count(bins, 0);
    rng::Stream s2(7, rng::Tag::generic, 1);
    for (int i = 0; i < n; ++i)
        ++count[static_cast<std::size_t>(p.sample(s2)[0] * bins)];
    double chi2 = 0;
    for (const int c : count) {
        const double e = static_cast<double>(n) / bins;
        chi2 += (c - e) * (c - e) / e;
    }
    CHECK(chi2 < 36.191);  // chi2_{0.99, df=19}
}

TEST_CASE("prior: log-scaled dimensions round-trip") {
    abc::PriorBox p;
    p.bounds = {{1e-6, 1e-3}, {1.0, 300.0}};
    p.log_scale = {true, false};
    p.validate();
    const std::vector<double> theta = {1e-4, 42.0};
    const auto u = p.to_internal(theta);
    CHECK(u[0] == doctest::Approx(-4.0));
    CHECK(u[1] == 42.0);
    const auto back = p.to_natural(u);
    CHECK(back[0] == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(p.contains_internal(u));
}

TEST_CASE("summary_distance: zero, Euclidean, and scaled cases") {
    const auto t = raw_identity(9);
    DepositionTrace a, b;
    for (double tt : {20.0, 120.0, 300.0}) {
        a.rows.push_back({tt, 1.0, 2.0, 3.0});
        b.rows.push_back({tt, 1.0, 2.0, 3.0});
    }
    CHECK(abc::summary_distance(t, a, a) == 0.0);

    // difference (3,4,0,...) in the first two coordinates: distance 5
    b.rows[0].n_agg_clust += 3.0;
    b.rows[0].s_agg_clust += 4.0;
    CHECK(abc::summary_distance(t, a, b) == doctest::Approx(5.0));

    // L = [[2,0],[0,1]] on the summary plane, difference (1,0) -> 2
    auto t2 = raw_identity(9);
    t2.l_matrix[0] = 2.0;
    DepositionTrace c = a;
    c.rows[0].n_agg_clust += 1.0;
    CHECK(abc::summary_distance(t2, a, c) == doctest::Approx(2.0));

    // dimension mismatch is an error
    DepositionTrace short_trace;
    short_trace.rows.push_back({20.0, 1.0, 2.0, 3.0});
    CHECK_THROWS(abc::summary_distance(t, a, short_trace));
}

TEST_CASE("exponential kernel monotonicity") {
    CHECK(abc::exponential_kernel(1.0, 2.0) > abc::exponential_kernel(1.0, 1.0));
    CHECK(abc::exponential_kernel(2.0, 1.0) < abc::exponential_kernel(1.0, 1.0));
    CHECK(abc::exponential_kernel(0.0, 1.0) == 1.0);
}

TEST_CASE("rejection: indicator support on the deterministic toy") {
    const auto prior = box1d(0.0, 1.0);
    const std::vector<double> obs = {0.5};
    const auto post =
        abc::rejection_abc(kIdentitySim, prior, kAbsDistance, obs, 0.01, 200, 2000000, 3);
    CHECK(post.size() == 200);
    for (const auto& s : post.samples) {
        CHECK(s[0] > 0.49);
        CHECK(s[0] < 0.51);
    }
    for (const double d : post.distances) CHECK(d >= 0.0);
}

TEST_CASE("rejection: infinite tolerance reproduces the prior") {
    const auto prior = box1d(0.0, 1.0);
    const std::vector<double> obs = {0.5};
    const auto post = abc::rejection_abc(kIdentitySim, prior, kAbsDistance, obs,
                                         std::numeric_limits<double>::infinity(), 10000,
                                         20000, 4);
    CHECK(post.size() == 10000);
    CHECK(post.provenance.n_simulations == 10000);  // acceptance rate 1
    const int bins = 20;
    std::vector<int> count(bins, 0);
    for (const auto& s : post.samples)
        ++count[std::min<std::size_t>(static_cast<std::size_t>(s[0] * bins), bins - 1)];
    double chi2 = 0;
    for (const int c : count) {
        const double e = 10000.0 / bins;
        chi2 += (c - e) * (c - e) / e;
    }
    CHECK(chi2 < 36.191);  // 1% critical value, df = 19
}

TEST_CASE("rejection: zero acceptances carries the smallest distance seen") {
    const auto prior = box1d(0.0, 1.0);
    const std::vector<double> obs = {100.0};  // unreachable
    try {
        abc::rejection_abc(kIdentitySim, prior, kAbsDistance, obs, 1e-6, 10, 500, 5);
        FAIL("expected NoAcceptanceError");
    } catch (const abc::NoAcceptanceError& e) {
        CHECK(e.smallest_distance >= 99.0);
        CHECK(e.smallest_distance <= 100.0);
    }
}

TEST_CASE("rejection: worker count does not change the accepted set") {
    const auto prior = box1d(0.0, 1.0);
    const std::vector<double> obs = {0.3};
    const auto a = abc::rejection_abc(kIdentitySim, prior, kAbsDistance, obs, 0.05, 50, 100000,
                                      11, 1);
    const auto b = abc::rejection_abc(kIdentitySim, prior, kAbsDistance, obs, 0.05, 50, 100000,
                                      11, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.samples[i][0] == b.samples[i][0]);
}

TEST_CASE("sabc: concentration on the deterministic toy") {
    const auto prior = box1d(0.0, 1.0);
    const std::vector<double> obs = {0.5};
    abc::AbcConfig cfg;
    cfg.n_samples = 128;
    cfg.n_iterations = 10;
    cfg.seed = 17;
    const auto post = abc::sabc(kIdentitySim, prior, kAbsDistance, obs, cfg);
    REQUIRE(post.size() == 128);

    double mean = 0;
    for (const auto& s : post.samples) mean += s[0];
    mean /= 128.0;
    CHECK(std::fabs(mean - 0.5) < 0.02);

    const auto& md = post.provenance.mean_distance_per_generation;
    REQUIRE(md.size() == 11);
    for (std::size_t g = 1; g < md.size(); ++g) CHECK(md[g] <= md[g - 1] * 1.05);
    CHECK(md.back() < md.front());

    const auto& eps = post.provenance.epsilon_schedule;
    for (std::size_t g = 1; g < eps.size(); ++g) {
        CHECK(eps[g] <= eps[g - 1]);
        CHECK(eps[g] > 0);
    }
    for (const auto& s : post.samples) CHECK(prior.contains(s));
}

TEST_CASE("sabc: zero iterations returns the prior-initialized population") {
    const auto prior = box1d(0.0, 1.0);
    abc::AbcConfig cfg;
    cfg.n_samples = 64;
    cfg.n_iterations = 0;
    cfg.seed = 23;
    const auto post = abc::sabc(kIdentitySim, prior, kAbsDistance, {0.5}, cfg);
    REQUIRE(post.size() == 64);
    // exactly the draws the per-particle initialization streams produce
    for (std::size_t i = 0; i < 64; ++i) {
        rng::Stream draw(cfg.seed, rng::Tag::abc_proposal, 0, i);
        CHECK(post.samples[i][0] == prior.sample(draw)[0]);
    }
}

TEST_CASE("sabc: determinism and worker invariance") {
    const auto prior = box1d(0.0, 1.0);
    abc::AbcConfig cfg;
    cfg.n_samples = 64;
    cfg.n_iterations = 5;
    cfg.seed = 29;
    const auto a = abc::sabc(kIdentitySim, prior, kAbsDistance, {0.5}, cfg);
    const auto b = abc::sabc(kIdentitySim, prior, kAbsDistance, {0.5}, cfg);
    cfg.workers = 4;
    const auto c = abc::sabc(kIdentitySim, prior, kAbsDistance, {0.5}, cfg);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.samples[i][0] == b.samples[i][0]);
        CHECK(a.samples[i][0] == c.samples[i][0]);
    }
}

TEST_CASE("sabc: smaller epsilon floor never widens the final population") {
    const auto prior = box1d(0.0, 1.0);
    abc::AbcConfig cfg;
    cfg.n_samples = 128;
    cfg.n_iterations = 12;
    cfg.seed = 31;
    cfg.epsilon_min = 0.02;
    const auto wide = abc::sabc(kIdentitySim, prior, kAbsDistance, {0.5}, cfg);
    cfg.epsilon_min = 0.01;
    const auto narrow = abc::sabc(kIdentitySim, prior, kAbsDistance, {0.5}, cfg);
    auto sd = [](const abc::PosteriorSamples& p) {
        std::vector<double> v;
        for (const auto& s : p.samples) v.push_back(s[0]);
        return stats::sample_sd(v);
    };
    CHECK(sd(narrow) <= sd(wide) * 1.25);  // Monte Carlo slack
}

TEST_CASE("sabc: simulator failure aborts with partial provenance") {
    const auto prior = box1d(0.0, 1.0);
    abc::AbcConfig cfg;
    cfg.n_samples = 16;
    cfg.n_iterations = 4;
    cfg.seed = 37;
    int calls = 0;
    const abc::Simulate flaky = [&calls](const std::vector<double>& theta, std::uint64_t) {
        if (++calls > 30) throw std::runtime_error("boom");
        return theta;
    };
    try {
        abc::sabc(flaky, prior, kAbsDistance, {0.5}, cfg);
        FAIL("expected SabcAbortError");
    } catch (const abc::SabcAbortError& e) {
        CHECK(e.partial.epsilon_schedule.size() >= 1);
        CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
}

TEST_CASE("gaussian toy: rejection posterior matches the conjugate answer") {
    // x ~ N(theta, 1), one observation, wide flat prior
    const auto prior = box1d(-8.0, 8.0);
    const abc::Simulate noisy = [](const std::vector<double>& theta, std::uint64_t seed) {
        rng::Stream s(seed);
        return std::vector<double>{theta[0] + s.normal()};
    };
    const std::vector<double> obs = {0.4};
    const auto post = abc::rejection_abc(noisy, prior, kAbsDistance, obs, 0.1, 2000, 4000000, 41, 2);
    REQUIRE(post.size() == 2000);
    double mean = 0;
    std::vector<double> vals;
    for (const auto& s : post.samples) {
        mean += s[0];
        vals.push_back(s[0]);
    }
    mean /= static_cast<double>(post.size());
    CHECK(std::fabs(mean - 0.4) < 0.1);
    CHECK(std::fabs(stats::sample_sd(vals) - 1.0) < 0.12);
}

TEST_CASE("posterior csv round trip") {
    abc::PosteriorSamples p;
    p.samples = {{1.5, 2.25}, {3.0, 0.125}};
    p.distances = {0.5, 0.75};
    p.weights = {0.5, 0.5};
    abc::PriorBox box;
    box.bounds = {{0, 10}, {0, 10}};
    box.names = {"alpha", "beta"};
    abc::write_posterior_csv(p, box, "/tmp/platelet_test_posterior.csv");
    const auto q = abc::read_posterior_csv("/tmp/platelet_test_posterior.csv");
    REQUIRE(q.size() == 2);
    CHECK(q.samples[0][0] == 1.5);
    CHECK(q.samples[1][1] == 0.125);
    CHECK(q.distances[1] == 0.75);
}
