// platelet: stochastic platelet-deposition simulation and likelihood-free
// inference toolkit. Subcommands mirror the pipeline stages; `run-pipeline`
// chains them end to end.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "platelet/abc.hpp"
#include "platelet/parallel.hpp"
#include "platelet/cohort.hpp"
#include "platelet/io_util.hpp"
#include "platelet/kde.hpp"
#include "platelet/pipeline.hpp"
#include "platelet/simulator.hpp"
#include "platelet/stats.hpp"
#include "platelet/summary_transform.hpp"

namespace fs = std::filesystem;
using namespace platelet;

namespace {

ModelParams params_from(const std::vector<double>& v) {
    std::array<double, ModelParams::dim> a;
    std::copy(v.begin(), v.end(), a.begin());
    return ModelParams::from_array(a);
}

void add_simulate(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate", "Run the deposition simulator once");
    struct SimulateOpts {
        double p_ad = 50, p_ag = 50, p_t = 1, p_f = 0.01, a_t = 2, v_ap = 1e-4, v_nap = 2e-5;
        std::string config_path, out = "trace.csv", sidecar;
        std::uint64_t seed = 1;
    };
    auto opts = std::make_shared<SimulateOpts>();
    cmd->add_option("--p-ad", opts->p_ad, "adhesion rate [1/s]");
    cmd->add_option("--p-ag", opts->p_ag, "aggregation rate [1/s]");
    cmd->add_option("--p-t", opts->p_t, "deposit-on-top rate [1/s]");
    cmd->add_option("--p-f", opts->p_f, "albumin deposition rate");
    cmd->add_option("--a-t", opts->a_t, "albumin attenuation factor");
    cmd->add_option("--v-ap", opts->v_ap, "AP vertical velocity [m/s]");
    cmd->add_option("--v-nap", opts->v_nap, "NAP vertical velocity [m/s]");
    cmd->add_option("--config", opts->config_path, "sim config file (key = value)");
    cmd->add_option("--seed", opts->seed, "RNG seed");
    cmd->add_option("--out", opts->out, "output trace CSV");
    cmd->add_option("--sidecar", opts->sidecar, "JSON sidecar path (default: <out>.json)");
    cmd->callback([opts] {
        SimConfig config;
        if (!opts->config_path.empty()) config = read_sim_config(opts->config_path);
        ModelParams p{opts->p_ad, opts->p_ag, opts->p_t, opts->p_f,
                      opts->a_t, opts->v_ap, opts->v_nap};
        sim::Simulator s(config, p, opts->seed);
        const auto trace = s.run();
        write_trace_csv(trace, opts->out);

        nlohmann::json j;
        nlohmann::json jp;
        const auto arr = p.to_array();
        for (std::size_t i = 0; i < arr.size(); ++i) jp[ModelParams::names()[i]] = arr[i];
        j["params"] = jp;
        j["seed"] = opts->seed;
        j["config_hash"] = io::hash_hex(io::content_hash(sim_config_to_keyvalues(config)));
        j["clamp_counters"] = {{"p_albumin", s.state().clamps.p_albumin},
                               {"q_adhesion", s.state().clamps.q_adhesion},
                               {"r_aggregation", s.state().clamps.r_aggregation},
                               {"p_top", s.state().clamps.p_top}};
        j["n_act_platelet_0"] = trace.n_act_platelet_0;
        const std::string sidecar =
            opts->sidecar.empty() ? opts->out + ".json" : opts->sidecar;
        io::write_file(sidecar, j.dump(2) + "\n");
        std::printf("wrote %s and %s\n", opts->out.c_str(), sidecar.c_str());
    });
}

void add_infer(CLI::App& app) {
    auto* cmd = app.add_subcommand("infer", "ABC posterior for one observed trace");
    struct InferOpts {
        std::string obs, prior_path, transform_path, algorithm = "sabc";
        std::string sim_config_path, out = "posterior.csv";
        int n_samples = 510, n_iterations = 20, workers = 1;
        double epsilon = 0.0;
        long budget = 0;
        std::uint64_t seed = 1;
    };
    auto opts = std::make_shared<InferOpts>();
    cmd->add_option("--obs", opts->obs, "observed trace CSV")->required();
    cmd->add_option("--prior", opts->prior_path, "prior CSV (param,low,high,scale)");
    cmd->add_option("--transform", opts->transform_path, "summary transform JSON")->required();
    cmd->add_option("--algorithm", opts->algorithm, "rejection | sabc");
    cmd->add_option("--sim-config", opts->sim_config_path, "sim config file");
    cmd->add_option("--n-samples", opts->n_samples, "posterior sample count");
    cmd->add_option("--n-iterations", opts->n_iterations, "SABC generations");
    cmd->add_option("--epsilon", opts->epsilon, "rejection tolerance (required for rejection)");
    cmd->add_option("--budget", opts->budget, "simulation budget (rejection)");
    cmd->add_option("--seed", opts->seed, "master seed");
    cmd->add_option("--workers", opts->workers, "worker threads");
    cmd->add_option("--out", opts->out, "posterior CSV output");
    cmd->callback([opts] {
        const auto trace = read_trace_csv(opts->obs);
        const auto prior = opts->prior_path.empty() ? abc::default_model_prior()
                                                    : abc::read_prior_csv(opts->prior_path);
        const auto transform = summary::load_transform(opts->transform_path);
        SimConfig config;
        if (!opts->sim_config_path.empty()) config = read_sim_config(opts->sim_config_path);

        const auto x_obs = trace.flatten();
        const auto distance = abc::make_summary_distance(transform);
        auto simulate_fn = [&](const std::vector<double>& theta, std::uint64_t s) {
            return sim::simulate(params_from(theta), config, s).flatten();
        };

        abc::PosteriorSamples post;
        if (opts->algorithm == "rejection") {
            if (!(opts->epsilon > 0))
                throw CLI::ValidationError("--epsilon", "rejection needs a positive epsilon");
            post = abc::rejection_abc(simulate_fn, prior, distance, x_obs, opts->epsilon,
                                      opts->n_samples, opts->budget, opts->seed, opts->workers);
        } else if (opts->algorithm == "sabc") {
            abc::AbcConfig cfg;
            cfg.n_samples = opts->n_samples;
            cfg.n_iterations = opts->n_iterations;
            cfg.seed = opts->seed;
            cfg.workers = opts->workers;
            post = abc::sabc(simulate_fn, prior, distance, x_obs, cfg);
        } else {
            throw CLI::ValidationError("--algorithm", "must be 'rejection' or 'sabc'");
        }
        post.provenance.observed_id = opts->obs;
        abc::write_posterior_csv(post, prior, opts->out);
        abc::write_provenance_json(post.provenance, opts->out + ".provenance.json");
        std::printf("wrote %s (%zu samples, %ld simulations)\n", opts->out.c_str(), post.size(),
                    post.provenance.n_simulations);
    });
}

void add_learn_summary(CLI::App& app) {
    auto* cmd = app.add_subcommand("learn-summary", "Train a summary transform");
    struct LearnSummaryOpts {
        std::string method = "dssl", input, out = "transform.json", sim_config_path, prior_path;
        int k = 3, epochs = 0, simulate_pilot = 0, workers = 1;
        double step = 1e-3, learning_rate = 1e-3, margin = 1.0;
        std::uint64_t seed = 1;
        bool tune = false;
    };
    auto opts = std::make_shared<LearnSummaryOpts>();
    cmd->add_option("--method", opts->method, "dssl | sasl | tlsl")->required();
    cmd->add_option("--input", opts->input, "cohort CSV (dssl) or pilot CSV (sasl/tlsl)");
    cmd->add_option("--out", opts->out, "output transform JSON");
    cmd->add_option("--k", opts->k, "LMNN target neighbors");
    cmd->add_option("--step", opts->step, "LMNN gradient step");
    cmd->add_option("--epochs", opts->epochs, "training epochs (0 = protocol default)");
    cmd->add_option("--learning-rate", opts->learning_rate, "SGD learning rate");
    cmd->add_option("--margin", opts->margin, "triplet margin");
    cmd->add_option("--seed", opts->seed, "training seed");
    cmd->add_option("--simulate-pilot", opts->simulate_pilot,
                    "simulate this many pilot pairs from the prior instead of --input");
    cmd->add_option("--sim-config", opts->sim_config_path, "sim config for --simulate-pilot");
    cmd->add_option("--prior", opts->prior_path, "prior CSV for --simulate-pilot");
    cmd->add_option("--workers", opts->workers, "worker threads for pilot simulation");
    cmd->add_flag("--tune", opts->tune, "dssl: grid-search (step, k) by rand index");
    cmd->callback([opts] {
        summary::SummaryTransform t;
        if (opts->method == "dssl") {
            if (opts->input.empty())
                throw CLI::ValidationError("--input", "dssl needs a cohort CSV");
            const auto cohort = pipeline::load_cohort(opts->input);
            std::vector<std::vector<double>> traces;
            std::vector<int> labels;
            for (const auto& r : cohort.records) {
                traces.push_back(r.trace.flatten());
                labels.push_back(static_cast<int>(
                    std::find(cohort.label_set.begin(), cohort.label_set.end(), r.group) -
                    cohort.label_set.begin()));
            }
            if (opts->tune) {
                const auto tuned = summary::tune_dssl(traces, labels, {1e-4, 1e-3, 1e-2},
                                                      {std::max(1, opts->k - 2), opts->k});
                t = tuned.transform;
                std::printf("tuned: best rand index %.4f (step=%g, k=%d)\n",
                            tuned.best_rand_index, tuned.best.step, tuned.best.k);
            } else {
                summary::DsslOptions o;
                o.k = opts->k;
                o.step = opts->step;
                t = summary::train_dssl(traces, labels, o);
            }
        } else if (opts->method == "sasl" || opts->method == "tlsl") {
            summary::PilotSet pilot;
            if (opts->simulate_pilot > 0) {
                SimConfig config;
                if (!opts->sim_config_path.empty()) config = read_sim_config(opts->sim_config_path);
                const auto prior = opts->prior_path.empty()
                                       ? abc::default_model_prior()
                                       : abc::read_prior_csv(opts->prior_path);
                const auto n = static_cast<std::size_t>(opts->simulate_pilot);
                pilot.thetas.resize(n);
                pilot.xs.resize(n);
                pilot.seeds.resize(n);
                parallel_for(n, opts->workers, [&](std::size_t i) {
                    rng::Stream draw(opts->seed, rng::Tag::pilot, i, 0);
                    const auto theta = prior.sample(draw);
                    const auto s = rng::derive_key(opts->seed, rng::Tag::pilot, i, 1);
                    pilot.xs[i] = sim::simulate(params_from(theta), config, s).flatten();
                    pilot.thetas[i] = theta;
                    pilot.seeds[i] = s;
                });
                write_pilot_csv(pilot,
                                {ModelParams::names().begin(), ModelParams::names().end()},
                                opts->out + ".pilot.csv");
            } else {
                if (opts->input.empty())
                    throw CLI::ValidationError("--input", "sasl/tlsl need a pilot CSV");
                pilot = summary::read_pilot_csv(opts->input);
            }
            summary::NetOptions net;
            if (opts->epochs > 0) net.epochs = opts->epochs;
            net.learning_rate = opts->learning_rate;
            net.margin = opts->margin;
            net.seed = opts->seed;
            t = opts->method == "sasl" ? summary::train_sasl(pilot, net)
                                       : summary::train_tlsl(pilot, net);
        } else {
            throw CLI::ValidationError("--method", "must be dssl, sasl or tlsl");
        }
        summary::save_transform(t, opts->out);
        std::printf("wrote %s (method %s, final loss %g)\n", opts->out.c_str(),
                    t.provenance.method.c_str(), t.provenance.final_loss);
    });
}

void add_map(CLI::App& app) {
    auto* cmd = app.add_subcommand("map", "MAP estimate from a posterior CSV");
    struct MapOpts {
        std::string samples, prior_path, out = "map.json";
        double bandwidth = 0.45;
    };
    auto opts = std::make_shared<MapOpts>();
    cmd->add_option("--samples", opts->samples, "posterior CSV")->required();
    cmd->add_option("--bandwidth", opts->bandwidth, "Gaussian KDE bandwidth");
    cmd->add_option("--prior", opts->prior_path, "prior CSV (for log-scale flags)");
    cmd->add_option("--out", opts->out, "output JSON");
    cmd->callback([opts] {
        const auto post = abc::read_posterior_csv(opts->samples);
        const auto prior = opts->prior_path.empty() ? abc::default_model_prior()
                                                    : abc::read_prior_csv(opts->prior_path);
        std::vector<std::vector<double>> internal;
        internal.reserve(post.size());
        for (const auto& s : post.samples) internal.push_back(prior.to_internal(s));
        const auto est = stats::map_estimate(internal, opts->bandwidth);
        const auto value = prior.to_natural(est.value);

        nlohmann::json j;
        nlohmann::json jm;
        for (std::size_t i = 0; i < value.size(); ++i) jm[prior.name_of(i)] = value[i];
        j["map"] = jm;
        j["bandwidth"] = est.bandwidth;
        j["log_density"] = est.log_density;
        j["converged"] = est.converged;
        j["evaluations"] = est.evaluations;
        j["posterior_sd_internal"] = est.posterior_sd;
        io::write_file(opts->out, j.dump(2) + "\n");
        std::printf("wrote %s\n", opts->out.c_str());
    });
}

void add_analyze(CLI::App& app) {
    auto* cmd = app.add_subcommand("analyze", "Group tests and boxplots over a MAP table");
    struct AnalyzeOpts {
        std::string maps, out_dir = ".";
        double alpha = 0.05;
    };
    auto opts = std::make_shared<AnalyzeOpts>();
    cmd->add_option("--maps", opts->maps, "MAP table CSV (id,group,<params>)")->required();
    cmd->add_option("--alpha", opts->alpha, "significance cutoff");
    cmd->add_option("--out-dir", opts->out_dir, "output directory");
    cmd->callback([opts] {
        const auto cohort = pipeline::read_map_table(opts->maps);
        const auto report = pipeline::analyze_maps(cohort, opts->alpha);
        fs::create_directories(opts->out_dir);
        io::write_file((fs::path(opts->out_dir) / "test_report.csv").string(),
                       pipeline::test_report_to_csv(report));

        std::string box = "group,parameter,q1,median,q3,whisker_lo,whisker_hi,outliers\n";
        for (const auto& g : cohort.label_set) {
            for (std::size_t p = 0; p < ModelParams::dim; ++p) {
                std::vector<double> vals;
                for (const auto i : cohort.indices_of(g))
                    vals.push_back(cohort.records[i].map_value[p]);
                if (vals.empty()) continue;
                const auto b = stats::boxplot_stats(vals);
                box += g + "," + ModelParams::names()[p] + "," + io::fmt(b.q1) + "," +
                       io::fmt(b.med) + "," + io::fmt(b.q3) + "," + io::fmt(b.whisker_lo) + "," +
                       io::fmt(b.whisker_hi) + ",";
                for (std::size_t o = 0; o < b.outliers.size(); ++o)
                    box += (o ? ";" : "") + io::fmt(b.outliers[o]);
                box += "\n";
            }
        }
        io::write_file((fs::path(opts->out_dir) / "boxplot_stats.csv").string(), box);
        std::printf("wrote %s/test_report.csv and boxplot_stats.csv\n", opts->out_dir.c_str());
    });
}

void add_pathology(CLI::App& app) {
    auto* cmd = app.add_subcommand("pathology-test",
                                   "Median-proximity pathology classifier over a MAP table");
    struct PathologyOpts {
        std::string maps, parameter = "p_ag", healthy = "healthy", disease = "copd";
        std::string out = "pathology.json";
    };
    auto opts = std::make_shared<PathologyOpts>();
    cmd->add_option("--maps", opts->maps, "MAP table CSV")->required();
    cmd->add_option("--param", opts->parameter, "discriminating parameter name");
    cmd->add_option("--healthy-group", opts->healthy, "healthy group label");
    cmd->add_option("--disease-group", opts->disease, "disease group label");
    cmd->add_option("--out", opts->out, "output JSON");
    cmd->callback([opts] {
        const auto cohort = pipeline::read_map_table(opts->maps);
        const auto r =
            pipeline::pathology_test(cohort, opts->parameter, opts->healthy, opts->disease);
        nlohmann::json j;
        j["parameter"] = r.parameter;
        j["median_healthy"] = r.median_healthy;
        j["median_disease"] = r.median_disease;
        j["confusion"] = {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
        j["sensitivity"] = r.sensitivity;
        j["specificity"] = r.specificity;
        io::write_file(opts->out, j.dump(2) + "\n");
        std::printf("sensitivity %.3f, specificity %.3f -> %s\n", r.sensitivity, r.specificity,
                    opts->out.c_str());
    });
}

void add_generate_cohort(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate-cohort", "Synthesize a labeled cohort");
    struct GenerateCohortOpts {
        std::string config_path, out = "cohort.csv", truth;
        std::uint64_t seed = 0;
        bool seed_set = false;
    };
    auto opts = std::make_shared<GenerateCohortOpts>();
    cmd->add_option("--config", opts->config_path, "pipeline config file");
    auto* seed_opt = cmd->add_option("--seed", opts->seed, "override master seed");
    cmd->add_option("--out", opts->out, "cohort CSV output");
    cmd->add_option("--truth", opts->truth, "also write true parameters CSV here");
    cmd->callback([opts, seed_opt] {
        pipeline::PipelineConfig config = opts->config_path.empty()
                                              ? pipeline::default_pipeline_config()
                                              : pipeline::read_pipeline_config(opts->config_path);
        auto spec = config.synthetic;
        if (!seed_opt->empty()) spec.seed = opts->seed;
        const auto cohort = pipeline::generate_synthetic_cohort(spec);
        pipeline::write_cohort_csv(cohort, opts->out);
        if (!opts->truth.empty()) pipeline::write_truth_csv(cohort, opts->truth);
        std::printf("wrote %s (%zu records)\n", opts->out.c_str(), cohort.records.size());
    });
}

void add_run_pipeline(CLI::App& app) {
    auto* cmd = app.add_subcommand("run-pipeline", "Cohort -> inference -> reports");
    struct RunPipelineOpts {
        std::string config_path, cohort, out_dir = "run";
        int workers = 0;
    };
    auto opts = std::make_shared<RunPipelineOpts>();
    cmd->add_option("--config", opts->config_path, "pipeline config file");
    cmd->add_option("--cohort", opts->cohort, "cohort CSV (omit to synthesize)");
    cmd->add_option("--out-dir", opts->out_dir, "run directory (resumable)");
    cmd->add_option("--workers", opts->workers, "override worker count");
    cmd->callback([opts] {
        pipeline::PipelineConfig config = opts->config_path.empty()
                                              ? pipeline::default_pipeline_config()
                                              : pipeline::read_pipeline_config(opts->config_path);
        if (opts->workers > 0) config.workers = opts->workers;
        const auto t0 = std::chrono::steady_clock::now();
        const auto result = pipeline::run_pipeline(config, opts->cohort, opts->out_dir);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        nlohmann::json timing;
        timing["wall_seconds"] = secs;
        timing["simulations"] = result.inference.new_simulations;
        io::write_file((fs::path(opts->out_dir) / "timing.json").string(),
                       timing.dump(2) + "\n");
        std::printf("pipeline %s: %zu subjects, %ld simulations, %.1f s -> %s/report\n",
                    result.complete ? "complete" : "INCOMPLETE", result.cohort.records.size(),
                    result.inference.new_simulations, secs, opts->out_dir.c_str());
        if (!result.complete) {
            for (const auto& f : result.inference.failures)
                std::fprintf(stderr, "subject failed: %s\n", f.c_str());
            std::exit(1);
        }
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic platelet deposition: simulation, ABC inference, cohort analysis"};
    app.require_subcommand(1);
    add_simulate(app);
    add_infer(app);
    add_learn_summary(app);
    add_map(app);
    add_analyze(app);
    add_pathology(app);
    add_generate_cohort(app);
    add_run_pipeline(app);
    try {
        CLI11_PARSE(app, argc, argv);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
