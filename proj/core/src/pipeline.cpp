#include "platelet/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "platelet/io_util.hpp"
#include "platelet/keyval.hpp"
#include "platelet/parallel.hpp"
#include "platelet/simulator.hpp"

namespace fs = std::filesystem;

namespace platelet::pipeline {

void PipelineConfig::validate() const {
    sim.validate();
    abc.validate();
    prior.validate();
    if (summary_method != "dssl" && summary_method != "sasl" && summary_method != "tlsl" &&
        summary_method != "identity")
        throw std::invalid_argument("pipeline: unknown summary method '" + summary_method + "'");
    if (pilot_size < 3) throw std::invalid_argument("pipeline: pilot_size must be >= 3");
    if (workers < 1) throw std::invalid_argument("pipeline: workers must be >= 1");
    if (predictive_draws < 0)
        throw std::invalid_argument("pipeline: predictive_draws must be >= 0");
    if (!(predictive_level > 0) || !(predictive_level < 1))
        throw std::invalid_argument("pipeline: predictive_level must be in (0,1)");
    if (!(kde_bandwidth > 0)) throw std::invalid_argument("pipeline: kde_bandwidth must be > 0");
}

PipelineConfig default_pipeline_config() {
    PipelineConfig c;
    c.prior = abc::default_model_prior();
    c.synthetic = default_synthetic_spec();
    c.sim = c.synthetic.sim;
    return c;
}

namespace {

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    for (const auto& tok : io::split(text, ' '))
        if (!io::trim(tok).empty()) out.push_back(io::parse_double(tok));
    return out;
}

std::string join_numbers(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ' ';
        s += io::fmt(v[i]);
    }
    return s;
}

ModelParams params_from_vector(const std::vector<double>& v) {
    if (v.size() != ModelParams::dim)
        throw std::invalid_argument("expected 7 parameter values");
    std::array<double, ModelParams::dim> a;
    std::copy(v.begin(), v.end(), a.begin());
    return ModelParams::from_array(a);
}

std::string abc_config_text(const abc::AbcConfig& a) {
    io::KeyValues kv;
    kv.emplace_back("n_samples", std::to_string(a.n_samples));
    kv.emplace_back("n_iterations", std::to_string(a.n_iterations));
    kv.emplace_back("epsilon0", io::fmt(a.epsilon0));
    kv.emplace_back("epsilon_quantile", io::fmt(a.epsilon_quantile));
    kv.emplace_back("epsilon_min", io::fmt(a.epsilon_min));
    kv.emplace_back("kernel", a.kernel);
    kv.emplace_back("budget", std::to_string(a.budget));
    return io::keyvalues_to_text(kv);
}

std::string prior_text(const abc::PriorBox& p) {
    std::string s;
    for (std::size_t i = 0; i < p.dim(); ++i)
        s += p.name_of(i) + " = " + io::fmt(p.bounds[i].first) + " " +
             io::fmt(p.bounds[i].second) + (p.is_log(i) ? " log" : " linear") + "\n";
    return s;
}

int label_index(const std::vector<std::string>& labels, const std::string& g) {
    const auto it = std::find(labels.begin(), labels.end(), g);
    if (it == labels.end()) throw std::runtime_error("unknown group label '" + g + "'");
    return static_cast<int>(it - labels.begin());
}

int param_index(const std::string& name) {
    const auto& names = ModelParams::names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    throw std::runtime_error("unknown parameter name '" + name + "'");
}

}  // namespace

PipelineConfig read_pipeline_config(const std::string& path) {
    const auto kv = io::read_keyvalues(path);
    PipelineConfig c = default_pipeline_config();
    io::KeyValues sim_kv;
    bool prior_seen = false;
    abc::PriorBox prior;
    prior.names.assign(ModelParams::names().begin(), ModelParams::names().end());
    prior.bounds.assign(ModelParams::dim, {0, 0});
    prior.log_scale.assign(ModelParams::dim, false);
    std::map<std::string, ModelParams> group_centers;
    std::vector<std::string> group_order;

    for (const auto& [key, value] : kv) {
        if (key == "master_seed") c.master_seed = static_cast<std::uint64_t>(io::parse_int(value));
        else if (key == "workers") c.workers = static_cast<int>(io::parse_int(value));
        else if (key == "summary_method") c.summary_method = value;
        else if (key == "pilot_size") c.pilot_size = static_cast<int>(io::parse_int(value));
        else if (key == "predictive_draws") c.predictive_draws = static_cast<int>(io::parse_int(value));
        else if (key == "predictive_level") c.predictive_level = io::parse_double(value);
        else if (key == "kde_bandwidth") c.kde_bandwidth = io::parse_double(value);
        else if (key == "healthy_group") c.healthy_group = value;
        else if (key == "disease_group") c.disease_group = value;
        else if (key == "pathology_parameter") c.pathology_parameter = value;
        else if (key == "abc.n_samples") c.abc.n_samples = static_cast<int>(io::parse_int(value));
        else if (key == "abc.n_iterations") c.abc.n_iterations = static_cast<int>(io::parse_int(value));
        else if (key == "abc.epsilon0") c.abc.epsilon0 = io::parse_double(value);
        else if (key == "abc.epsilon_quantile") c.abc.epsilon_quantile = io::parse_double(value);
        else if (key == "abc.epsilon_min") c.abc.epsilon_min = io::parse_double(value);
        else if (key == "abc.kernel") c.abc.kernel = value;
        else if (key == "abc.budget") c.abc.budget = io::parse_int(value);
        else if (key == "dssl.k") c.dssl.k = static_cast<int>(io::parse_int(value));
        else if (key == "dssl.step") c.dssl.step = io::parse_double(value);
        else if (key == "dssl.max_iterations") c.dssl.max_iterations = static_cast<int>(io::parse_int(value));
        else if (key == "net.epochs") c.net.epochs = static_cast<int>(io::parse_int(value));
        else if (key == "net.learning_rate") c.net.learning_rate = io::parse_double(value);
        else if (key == "net.batch_size") c.net.batch_size = static_cast<std::size_t>(io::parse_int(value));
        else if (key == "net.margin") c.net.margin = io::parse_double(value);
        else if (key == "synthetic.subjects_per_group")
            c.synthetic.subjects_per_group = static_cast<int>(io::parse_int(value));
        else if (key == "synthetic.jitter_sd") c.synthetic.jitter_sd = io::parse_double(value);
        else if (key.rfind("synthetic.group.", 0) == 0) {
            const std::string label = key.substr(16);
            group_centers[label] = params_from_vector(parse_numbers(value));
            group_order.push_back(label);
        } else if (key.rfind("sim.", 0) == 0) {
            sim_kv.emplace_back(key.substr(4), value);
        } else if (key.rfind("prior.", 0) == 0) {
            const std::string pname = key.substr(6);
            const auto toks = io::split(io::trim(value), ' ');
            std::vector<std::string> parts;
            for (const auto& t : toks)
                if (!io::trim(t).empty()) parts.push_back(io::trim(t));
            if (parts.size() != 3)
                throw std::runtime_error("pipeline config: prior." + pname +
                                         " wants 'low high linear|log'");
            const int pi = param_index(pname);
            prior.bounds[static_cast<std::size_t>(pi)] = {io::parse_double(parts[0]),
                                                          io::parse_double(parts[1])};
            prior.log_scale[static_cast<std::size_t>(pi)] = parts[2] == "log";
            prior_seen = true;
        } else {
            throw std::runtime_error("pipeline config: unknown key '" + key + "'");
        }
    }
    if (!sim_kv.empty()) c.sim = sim_config_from_keyvalues(sim_kv);
    if (prior_seen) {
        prior.validate();
        c.prior = prior;
    }
    if (!group_order.empty()) {
        c.synthetic.groups.clear();
        for (const auto& label : group_order)
            c.synthetic.groups.push_back({label, group_centers[label]});
    }
    c.synthetic.sim = c.sim;
    c.synthetic.prior = c.prior;
    c.synthetic.seed = c.master_seed;
    c.validate();
    return c;
}

std::string pipeline_config_to_text(const PipelineConfig& c) {
    std::ostringstream out;
    out << "master_seed = " << c.master_seed << "\n";
    out << "workers = " << c.workers << "\n";
    out << "summary_method = " << c.summary_method << "\n";
    out << "pilot_size = " << c.pilot_size << "\n";
    out << "predictive_draws = " << c.predictive_draws << "\n";
    out << "predictive_level = " << io::fmt(c.predictive_level) << "\n";
    out << "kde_bandwidth = " << io::fmt(c.kde_bandwidth) << "\n";
    out << "healthy_group = " << c.healthy_group << "\n";
    out << "disease_group = " << c.disease_group << "\n";
    out << "pathology_parameter = " << c.pathology_parameter << "\n";
    out << "abc.n_samples = " << c.abc.n_samples << "\n";
    out << "abc.n_iterations = " << c.abc.n_iterations << "\n";
    out << "abc.epsilon0 = " << io::fmt(c.abc.epsilon0) << "\n";
    out << "abc.epsilon_quantile = " << io::fmt(c.abc.epsilon_quantile) << "\n";
    out << "abc.epsilon_min = " << io::fmt(c.abc.epsilon_min) << "\n";
    out << "abc.kernel = " << c.abc.kernel << "\n";
    out << "abc.budget = " << c.abc.budget << "\n";
    out << "dssl.k = " << c.dssl.k << "\n";
    out << "dssl.step = " << io::fmt(c.dssl.step) << "\n";
    out << "dssl.max_iterations = " << c.dssl.max_iterations << "\n";
    out << "net.epochs = " << c.net.epochs << "\n";
    out << "net.learning_rate = " << io::fmt(c.net.learning_rate) << "\n";
    out << "net.batch_size = " << c.net.batch_size << "\n";
    out << "net.margin = " << io::fmt(c.net.margin) << "\n";
    out << "synthetic.subjects_per_group = " << c.synthetic.subjects_per_group << "\n";
    out << "synthetic.jitter_sd = " << io::fmt(c.synthetic.jitter_sd) << "\n";
    for (const auto& g : c.synthetic.groups) {
        const auto a = g.center.to_array();
        out << "synthetic.group." << g.label << " = "
            << join_numbers(std::vector<double>(a.begin(), a.end())) << "\n";
    }
    for (const auto& [k, v] : io::parse_keyvalues(sim_config_to_keyvalues(c.sim)))
        out << "sim." << k << " = " << v << "\n";
    for (std::size_t i = 0; i < c.prior.dim(); ++i)
        out << "prior." << c.prior.name_of(i) << " = " << io::fmt(c.prior.bounds[i].first) << ' '
            << io::fmt(c.prior.bounds[i].second) << (c.prior.is_log(i) ? " log" : " linear")
            << "\n";
    return out.str();
}

TestReport analyze_maps(const Cohort& cohort, double alpha) {
    TestReport report;
    report.alpha = alpha;
    report.parameters.assign(ModelParams::names().begin(), ModelParams::names().end());

    std::vector<std::vector<std::size_t>> group_idx;
    for (const auto& g : cohort.label_set) {
        auto idx = cohort.indices_of(g);
        std::erase_if(idx, [&](std::size_t i) { return !cohort.records[i].has_map; });
        if (!idx.empty()) group_idx.push_back(std::move(idx));
    }
    if (group_idx.size() < 2)
        throw std::runtime_error("analyze: need MAP estimates in at least two groups");

    std::vector<std::string> used_labels;
    for (const auto& idx : group_idx) used_labels.push_back(cohort.records[idx[0]].group);

    report.columns.push_back("all");
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t a = 0; a < group_idx.size(); ++a)
        for (std::size_t b = a + 1; b < group_idx.size(); ++b) {
            pairs.emplace_back(a, b);
            report.columns.push_back(used_labels[a] + "_vs_" + used_labels[b]);
        }

    const std::size_t n_params = ModelParams::dim;
    report.cells.assign(n_params, std::vector<TestCell>(report.columns.size()));

    auto values_of = [&](std::size_t group, std::size_t param) {
        std::vector<double> v;
        for (const auto i : group_idx[group])
            v.push_back(cohort.records[i].map_value[param]);
        return v;
    };

    for (std::size_t col = 0; col < report.columns.size(); ++col) {
        std::vector<double> raw(n_params);
        for (std::size_t p = 0; p < n_params; ++p) {
            std::vector<std::vector<double>> groups;
            if (col == 0) {
                for (std::size_t g = 0; g < group_idx.size(); ++g)
                    groups.push_back(values_of(g, p));
            } else {
                const auto& [a, b] = pairs[col - 1];
                groups.push_back(values_of(a, p));
                groups.push_back(values_of(b, p));
            }
            const auto kw = stats::kruskal_wallis(groups);
            report.cells[p][col].h = kw.h;
            report.cells[p][col].p_raw = kw.p;
            raw[p] = kw.p;
        }
        const auto adj = stats::bh_adjust(raw);
        for (std::size_t p = 0; p < n_params; ++p) {
            report.cells[p][col].p_adj = adj[p];
            report.cells[p][col].significant = adj[p] < alpha;
        }
    }
    return report;
}

std::string test_report_to_csv(const TestReport& report) {
    std::ostringstream out;
    out << "parameter";
    for (const auto& c : report.columns)
        out << ',' << c << "_h," << c << "_p," << c << "_p_adj," << c << "_significant";
    out << "\n";
    for (std::size_t p = 0; p < report.parameters.size(); ++p) {
        out << report.parameters[p];
        for (const auto& cell : report.cells[p])
            out << ',' << io::fmt(cell.h) << ',' << io::fmt(cell.p_raw) << ','
                << io::fmt(cell.p_adj) << ',' << (cell.significant ? 1 : 0);
        out << "\n";
    }
    return out.str();
}

Cohort read_map_table(const std::string& path) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    std::string expected = "id,group";
    for (const auto& n : ModelParams::names()) expected += "," + n;
    if (!std::getline(in, line) || io::trim(line) != expected)
        throw std::runtime_error("map table: expected header '" + expected + "'");
    Cohort cohort;
    cohort.label_set.clear();
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 2 + ModelParams::dim)
            throw std::runtime_error("map table: bad row '" + line + "'");
        PatientRecord rec;
        rec.id = io::trim(f[0]);
        rec.group = io::trim(f[1]);
        rec.map_value.resize(ModelParams::dim);
        for (std::size_t i = 0; i < ModelParams::dim; ++i)
            rec.map_value[i] = io::parse_double(f[i + 2]);
        rec.has_map = true;
        if (std::find(cohort.label_set.begin(), cohort.label_set.end(), rec.group) ==
            cohort.label_set.end())
            cohort.label_set.push_back(rec.group);
        cohort.records.push_back(std::move(rec));
    }
    if (cohort.records.empty()) throw std::runtime_error("map table: no rows");
    return cohort;
}

std::string map_table_to_csv(const Cohort& cohort) {
    std::ostringstream out;
    out << "id,group";
    for (const auto& n : ModelParams::names()) out << ',' << n;
    out << "\n";
    for (const auto& r : cohort.records) {
        if (!r.has_map) continue;
        out << r.id << ',' << r.group;
        for (const double v : r.map_value) out << ',' << io::fmt(v);
        out << "\n";
    }
    return out.str();
}

stats::PathologyResult pathology_test(const Cohort& cohort, const std::string& parameter,
                                      const std::string& healthy_group,
                                      const std::string& disease_group) {
    const int p = param_index(parameter);
    std::vector<double> healthy_vals, disease_vals;
    std::vector<double> subject_vals;
    std::vector<stats::Label> truth;
    for (const auto& r : cohort.records) {
        if (!r.has_map) continue;
        if (r.group == healthy_group) {
            healthy_vals.push_back(r.map_value[static_cast<std::size_t>(p)]);
        } else if (r.group == disease_group) {
            disease_vals.push_back(r.map_value[static_cast<std::size_t>(p)]);
        }
    }
    if (healthy_vals.empty() || disease_vals.empty())
        throw std::runtime_error("pathology test: both groups need MAP estimates");
    const double mh = stats::median(healthy_vals);
    const double md = stats::median(disease_vals);

    std::vector<stats::Label> predicted;
    for (const auto& r : cohort.records) {
        if (!r.has_map || (r.group != healthy_group && r.group != disease_group)) continue;
        subject_vals.push_back(r.map_value[static_cast<std::size_t>(p)]);
        truth.push_back(r.group == disease_group ? stats::Label::disease : stats::Label::healthy);
        predicted.push_back(stats::classify_pathology(subject_vals.back(), mh, md));
    }
    auto result = stats::confusion_metrics(predicted, truth);
    result.parameter = parameter;
    result.median_healthy = mh;
    result.median_disease = md;
    return result;
}

PredictiveBands posterior_predictive(const abc::PosteriorSamples& posterior,
                                     const TraceSimulate& simulate, int n_draws, double level,
                                     std::uint64_t seed, int workers) {
    if (posterior.size() == 0) throw std::invalid_argument("predictive: empty posterior");
    if (n_draws < 1) throw std::invalid_argument("predictive: n_draws must be >= 1");

    PredictiveBands bands;
    bands.draws.resize(static_cast<std::size_t>(n_draws));

    rng::Stream pick(seed, rng::Tag::generic, 101);
    std::vector<std::size_t> chosen(static_cast<std::size_t>(n_draws));
    for (auto& c : chosen) c = static_cast<std::size_t>(pick.below(posterior.size()));

    parallel_for(static_cast<std::size_t>(n_draws), workers, [&](std::size_t k) {
        bands.draws[k] = simulate(posterior.samples[chosen[k]],
                                  rng::derive_key(seed, rng::Tag::generic, 200 + k));
    });
    for (const auto& r : bands.draws.front().rows) bands.times.push_back(r.t);

    const double tail = 0.5 * (1.0 - level);
    bands.lo.assign(3, std::vector<double>(bands.times.size()));
    bands.med.assign(3, std::vector<double>(bands.times.size()));
    bands.hi.assign(3, std::vector<double>(bands.times.size()));
    for (std::size_t obs = 0; obs < 3; ++obs) {
        for (std::size_t t = 0; t < bands.times.size(); ++t) {
            std::vector<double> v;
            v.reserve(bands.draws.size());
            for (const auto& tr : bands.draws) v.push_back(tr.series(obs)[t]);
            std::sort(v.begin(), v.end());
            bands.lo[obs][t] = stats::quantile_sorted(v, tail);
            bands.med[obs][t] = stats::quantile_sorted(v, 0.5);
            bands.hi[obs][t] = stats::quantile_sorted(v, 1.0 - tail);
        }
    }
    return bands;
}

namespace {

nlohmann::json map_to_json(const PatientRecord& r) {
    nlohmann::json j;
    j["map"] = r.map_value;
    j["posterior_sd_internal"] = r.posterior_sd;
    j["bandwidth"] = r.map_detail.bandwidth;
    j["log_density"] = r.map_detail.log_density;
    j["converged"] = r.map_detail.converged;
    j["evaluations"] = r.map_detail.evaluations;
    return j;
}

void map_from_json(const nlohmann::json& j, PatientRecord& r) {
    r.map_value = j.at("map").get<std::vector<double>>();
    r.posterior_sd = j.at("posterior_sd_internal").get<std::vector<double>>();
    r.map_detail.bandwidth = j.at("bandwidth").get<double>();
    r.map_detail.log_density = j.at("log_density").get<double>();
    r.map_detail.converged = j.at("converged").get<bool>();
    r.map_detail.evaluations = j.at("evaluations").get<long>();
    r.has_map = true;
}

std::string subject_hash(const PatientRecord& r, const std::string& prior_txt,
                         const std::string& abc_txt, const std::string& sim_txt,
                         const std::string& transform_bytes, std::uint64_t subject_seed,
                         double kde_bandwidth) {
    std::string blob = trace_to_csv(r.trace);
    blob += prior_txt;
    blob += abc_txt;
    blob += sim_txt;
    blob += transform_bytes;
    blob += std::to_string(subject_seed);
    blob += io::fmt(kde_bandwidth);
    return io::hash_hex(io::content_hash(blob));
}

}  // namespace

InferenceOutcome run_inference_all(Cohort& cohort, const summary::SummaryTransform& transform,
                                   const abc::PriorBox& prior, const abc::AbcConfig& abc_config,
                                   const SimConfig& sim, double kde_bandwidth, int workers,
                                   std::uint64_t master_seed, const std::string& out_dir) {
    const bool persist = !out_dir.empty();
    const std::string prior_txt = prior_text(prior);
    const std::string abc_txt = abc_config_text(abc_config);
    const std::string sim_txt = sim_config_to_keyvalues(sim);
    std::string transform_bytes;
    if (persist) {
        fs::create_directories(fs::path(out_dir) / "subjects");
        const auto tpath = (fs::path(out_dir) / "transform.json").string();
        summary::save_transform(transform, tpath);
        transform_bytes = io::read_file(tpath);
    }

    InferenceOutcome outcome;
    std::atomic<long> sims{0};
    std::atomic<int> resumed{0};
    std::vector<std::string> failures(cohort.records.size());

    const auto distance = abc::make_summary_distance(transform);

    parallel_for(cohort.records.size(), workers, [&](std::size_t idx) {
        auto& rec = cohort.records[idx];
        const std::uint64_t subject_seed =
            rng::derive_key(master_seed, rng::Tag::cohort_subject, 0x5AB5ull, idx);
        const std::string hash = subject_hash(rec, prior_txt, abc_txt, sim_txt, transform_bytes,
                                              subject_seed, kde_bandwidth);
        const fs::path sdir = persist ? fs::path(out_dir) / "subjects" / rec.id : fs::path();

        if (persist && fs::exists(sdir / "manifest.json")) {
            try {
                const auto manifest = nlohmann::json::parse(io::read_file((sdir / "manifest.json").string()));
                if (manifest.at("hash").get<std::string>() == hash) {
                    rec.posterior = abc::read_posterior_csv((sdir / "posterior.csv").string());
                    rec.has_posterior = true;
                    map_from_json(nlohmann::json::parse(io::read_file((sdir / "map.json").string())), rec);
                    resumed.fetch_add(1);
                    return;
                }
            } catch (const std::exception&) {
                // stale or unreadable artifacts: fall through and recompute
            }
        }

        try {
            abc::AbcConfig cfg = abc_config;
            cfg.seed = subject_seed;
            cfg.workers = 1;  // subjects are the unit of parallelism here
            const auto x_obs = rec.trace.flatten();
            auto simulate_fn = [&](const std::vector<double>& theta, std::uint64_t s) {
                sims.fetch_add(1, std::memory_order_relaxed);
                return sim::simulate(params_from_vector(theta), sim, s).flatten();
            };
            rec.posterior = abc::sabc(simulate_fn, prior, distance, x_obs, cfg);
            rec.posterior.provenance.observed_id = rec.id;
            rec.has_posterior = true;

            std::vector<std::vector<double>> internal;
            internal.reserve(rec.posterior.size());
            for (const auto& s : rec.posterior.samples) internal.push_back(prior.to_internal(s));
            rec.map_detail = stats::map_estimate(internal, kde_bandwidth);
            rec.map_value = prior.to_natural(rec.map_detail.value);
            rec.posterior_sd = rec.map_detail.posterior_sd;
            rec.has_map = true;

            if (persist) {
                fs::create_directories(sdir);
                abc::write_posterior_csv(rec.posterior, prior, (sdir / "posterior.csv").string());
                abc::write_provenance_json(rec.posterior.provenance,
                                           (sdir / "provenance.json").string());
                io::write_file((sdir / "map.json").string(), map_to_json(rec).dump(2) + "\n");
                nlohmann::json manifest;
                manifest["hash"] = hash;
                manifest["id"] = rec.id;
                io::write_file((sdir / "manifest.json").string(), manifest.dump(2) + "\n");
            }
        } catch (const std::exception& e) {
            failures[idx] = rec.id + ": " + e.what();
        }
    });

    outcome.new_simulations = sims.load();
    outcome.subjects_resumed = resumed.load();
    for (auto& f : failures)
        if (!f.empty()) {
            outcome.failures.push_back(std::move(f));
            ++outcome.subjects_failed;
        }
    return outcome;
}

namespace {

summary::SummaryTransform train_transform(const PipelineConfig& config, const Cohort& cohort,
                                          long& sims) {
    std::vector<std::vector<double>> traces;
    traces.reserve(cohort.records.size());
    for (const auto& r : cohort.records) traces.push_back(r.trace.flatten());

    if (config.summary_method == "identity") return summary::identity_transform(traces);

    if (config.summary_method == "dssl") {
        std::vector<int> labels;
        labels.reserve(cohort.records.size());
        for (const auto& r : cohort.records)
            labels.push_back(label_index(cohort.label_set, r.group));
        return summary::train_dssl(traces, labels, config.dssl);
    }

    // sasl / tlsl: simulate a pilot set from the prior
    summary::PilotSet pilot;
    const auto n = static_cast<std::size_t>(config.pilot_size);
    pilot.thetas.resize(n);
    pilot.xs.resize(n);
    pilot.seeds.resize(n);
    parallel_for(n, config.workers, [&](std::size_t i) {
        rng::Stream draw(config.master_seed, rng::Tag::pilot, i, 0);
        const auto theta = config.prior.sample(draw);
        const auto seed = rng::derive_key(config.master_seed, rng::Tag::pilot, i, 1);
        pilot.xs[i] = sim::simulate(params_from_vector(theta), config.sim, seed).flatten();
        pilot.thetas[i] = theta;
        pilot.seeds[i] = seed;
    });
    sims += static_cast<long>(n);

    summary::NetOptions net = config.net;
    net.seed = config.master_seed;
    return config.summary_method == "sasl" ? summary::train_sasl(pilot, net)
                                           : summary::train_tlsl(pilot, net);
}

std::string predictive_json(const PredictiveBands& bands,
                            const std::array<double, 3>& energy) {
    nlohmann::json j;
    j["times"] = bands.times;
    j["lo"] = bands.lo;
    j["med"] = bands.med;
    j["hi"] = bands.hi;
    j["energy_scores"] = energy;
    return j.dump(2) + "\n";
}

void predictive_from_json(const std::string& text, PredictiveBands& bands,
                          std::array<double, 3>& energy) {
    const auto j = nlohmann::json::parse(text);
    bands.times = j.at("times").get<std::vector<double>>();
    bands.lo = j.at("lo").get<std::vector<std::vector<double>>>();
    bands.med = j.at("med").get<std::vector<std::vector<double>>>();
    bands.hi = j.at("hi").get<std::vector<std::vector<double>>>();
    const auto e = j.at("energy_scores").get<std::vector<double>>();
    std::copy(e.begin(), e.end(), energy.begin());
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, const std::string& cohort_csv,
                            const std::string& out_dir) {
    config.validate();
    if (out_dir.empty()) throw std::invalid_argument("pipeline: output directory required");
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "report");

    PipelineResult result;
    result.out_dir = out_dir;
    long extra_sims = 0;

    // cohort: load from file, or synthesize (resumable via manifest)
    const fs::path cohort_path = fs::path(out_dir) / "cohort.csv";
    const fs::path cohort_manifest = fs::path(out_dir) / "cohort.manifest";
    if (!cohort_csv.empty()) {
        result.cohort = load_cohort(cohort_csv);
        write_cohort_csv(result.cohort, cohort_path.string());
        io::write_file(cohort_manifest.string(),
                       io::hash_hex(io::content_hash(io::read_file(cohort_csv))) + "\n");
    } else {
        CohortSpec spec = config.synthetic;
        spec.sim = config.sim;
        spec.prior = config.prior;
        spec.seed = config.master_seed;
        std::string spec_id = pipeline_config_to_text(config) + "synthetic\n";
        const std::string hash = io::hash_hex(io::content_hash(spec_id));
        bool resumed_cohort = false;
        if (fs::exists(cohort_manifest) && fs::exists(cohort_path)) {
            if (io::trim(io::read_file(cohort_manifest.string())) == hash) {
                result.cohort = load_cohort(cohort_path.string());
                const fs::path truth = fs::path(out_dir) / "truth.csv";
                if (fs::exists(truth)) {
                    for (const auto& [id, theta] : read_truth_csv(truth.string()))
                        for (auto& r : result.cohort.records)
                            if (r.id == id) r.true_theta = theta;
                }
                resumed_cohort = true;
            }
        }
        if (!resumed_cohort) {
            result.cohort = generate_synthetic_cohort(spec);
            extra_sims += static_cast<long>(result.cohort.records.size());
            write_cohort_csv(result.cohort, cohort_path.string());
            write_truth_csv(result.cohort, (fs::path(out_dir) / "truth.csv").string());
            io::write_file(cohort_manifest.string(), hash + "\n");
        }
    }

    // summary transform (resumable: retrain only when the recipe changed)
    const fs::path tpath = fs::path(out_dir) / "transform.json";
    const fs::path tmanifest = fs::path(out_dir) / "transform.manifest";
    const std::string recipe =
        config.summary_method + "\n" + std::to_string(config.master_seed) + "\n" +
        io::hash_hex(io::content_hash(io::read_file(cohort_path.string())));
    const std::string recipe_hash = io::hash_hex(io::content_hash(recipe));
    summary::SummaryTransform transform;
    bool transform_loaded = false;
    if (fs::exists(tmanifest) && fs::exists(tpath) &&
        io::trim(io::read_file(tmanifest.string())) == recipe_hash) {
        transform = summary::load_transform(tpath.string());
        transform_loaded = true;
    }
    if (!transform_loaded) {
        transform = train_transform(config, result.cohort, extra_sims);
        summary::save_transform(transform, tpath.string());
        io::write_file(tmanifest.string(), recipe_hash + "\n");
    }

    // per-subject inference + MAP
    result.inference =
        run_inference_all(result.cohort, transform, config.prior, config.abc, config.sim,
                          config.kde_bandwidth, config.workers, config.master_seed, out_dir);
    result.inference.new_simulations += extra_sims;

    // analysis over MAP estimates
    result.test_report = analyze_maps(result.cohort);
    result.pathology = pathology_test(result.cohort, config.pathology_parameter,
                                      config.healthy_group, config.disease_group);

    // posterior predictive checks + energy scores (resumable per subject)
    result.energy_scores.assign(result.cohort.records.size(), {0.0, 0.0, 0.0});
    result.bands.resize(result.cohort.records.size());
    if (config.predictive_draws > 0) {
        std::atomic<long> pred_sims{0};
        parallel_for(result.cohort.records.size(), config.workers, [&](std::size_t i) {
            auto& rec = result.cohort.records[i];
            if (!rec.has_posterior) return;
            const fs::path pfile = fs::path(out_dir) / "subjects" / rec.id / "predictive.json";
            if (fs::exists(pfile)) {
                try {
                    predictive_from_json(io::read_file(pfile.string()), result.bands[i],
                                         result.energy_scores[i]);
                    return;
                } catch (const std::exception&) {
                }
            }
            const auto seed = rng::derive_key(config.master_seed, rng::Tag::generic, 300, i);
            const TraceSimulate sim_fn = [&](const std::vector<double>& theta, std::uint64_t s) {
                return sim::simulate(params_from_vector(theta), config.sim, s);
            };
            auto bands = posterior_predictive(rec.posterior, sim_fn, config.predictive_draws,
                                              config.predictive_level, seed, 1);
            pred_sims.fetch_add(config.predictive_draws, std::memory_order_relaxed);
            for (std::size_t obs = 0; obs < 3; ++obs) {
                std::vector<std::vector<double>> preds;
                preds.reserve(bands.draws.size());
                for (const auto& tr : bands.draws) preds.push_back(tr.series(obs));
                result.energy_scores[i][obs] =
                    stats::energy_score(preds, rec.trace.series(obs), 1.0, false);
            }
            bands.draws.clear();  // not persisted; bands and scores suffice
            io::write_file(pfile.string(), predictive_json(bands, result.energy_scores[i]));
            result.bands[i] = std::move(bands);
        });
        result.inference.new_simulations += pred_sims.load();
    }

    result.complete = result.inference.subjects_failed == 0;
    emit_report(result, config, out_dir);
    return result;
}

void emit_report(const PipelineResult& result, const PipelineConfig& config,
                 const std::string& out_dir) {
    const fs::path rdir = fs::path(out_dir) / "report";
    fs::create_directories(rdir);
    const auto& cohort = result.cohort;

    // 1. MAP table
    io::write_file((rdir / "map_table.csv").string(), map_table_to_csv(cohort));

    // 2. Kruskal-Wallis test report
    io::write_file((rdir / "test_report.csv").string(), test_report_to_csv(result.test_report));

    // 3. pathology test
    {
        nlohmann::json j;
        j["parameter"] = result.pathology.parameter;
        j["healthy_group"] = config.healthy_group;
        j["disease_group"] = config.disease_group;
        j["median_healthy"] = result.pathology.median_healthy;
        j["median_disease"] = result.pathology.median_disease;
        j["confusion"] = {{"tp", result.pathology.tp},
                          {"fp", result.pathology.fp},
                          {"tn", result.pathology.tn},
                          {"fn", result.pathology.fn}};
        j["sensitivity"] = result.pathology.sensitivity;
        j["specificity"] = result.pathology.specificity;
        io::write_file((rdir / "pathology.json").string(), j.dump(2) + "\n");
    }

    // 4. energy scores
    {
        std::ostringstream out;
        out << "id,observable,energy_score\n";
        static const char* kObs[3] = {"n_agg_clust", "s_agg_clust", "n_platelet"};
        for (std::size_t i = 0; i < cohort.records.size(); ++i) {
            if (!cohort.records[i].has_posterior || config.predictive_draws == 0) continue;
            for (std::size_t obs = 0; obs < 3; ++obs)
                out << cohort.records[i].id << ',' << kObs[obs] << ','
                    << io::fmt(result.energy_scores[i][obs]) << "\n";
        }
        io::write_file((rdir / "energy_scores.csv").string(), out.str());
    }

    // 5. predictive bands
    {
        std::ostringstream out;
        out << "id,observable,t,lo,median,hi\n";
        static const char* kObs[3] = {"n_agg_clust", "s_agg_clust", "n_platelet"};
        for (std::size_t i = 0; i < cohort.records.size(); ++i) {
            const auto& b = result.bands[i];
            if (b.times.empty()) continue;
            for (std::size_t obs = 0; obs < 3; ++obs)
                for (std::size_t t = 0; t < b.times.size(); ++t)
                    out << cohort.records[i].id << ',' << kObs[obs] << ',' << io::fmt(b.times[t])
                        << ',' << io::fmt(b.lo[obs][t]) << ',' << io::fmt(b.med[obs][t]) << ','
                        << io::fmt(b.hi[obs][t]) << "\n";
        }
        io::write_file((rdir / "predictive_bands.csv").string(), out.str());
    }

    // 6. boxplot statistics of MAP estimates per group and parameter
    {
        std::ostringstream out;
        out << "group,parameter,q1,median,q3,whisker_lo,whisker_hi,outliers\n";
        for (const auto& g : cohort.label_set) {
            const auto idx = cohort.indices_of(g);
            for (std::size_t p = 0; p < ModelParams::dim; ++p) {
                std::vector<double> vals;
                for (const auto i : idx)
                    if (cohort.records[i].has_map) vals.push_back(cohort.records[i].map_value[p]);
                if (vals.empty()) continue;
                const auto b = stats::boxplot_stats(vals);
                out << g << ',' << ModelParams::names()[p] << ',' << io::fmt(b.q1) << ','
                    << io::fmt(b.med) << ',' << io::fmt(b.q3) << ',' << io::fmt(b.whisker_lo)
                    << ',' << io::fmt(b.whisker_hi) << ',';
                for (std::size_t o = 0; o < b.outliers.size(); ++o) {
                    if (o) out << ';';
                    out << io::fmt(b.outliers[o]);
                }
                out << "\n";
            }
        }
        io::write_file((rdir / "boxplot_stats.csv").string(), out.str());
    }

    // provenance: the full configuration echo plus run summary (no wall-clock
    // content; timing lives in timing.json outside the determinism contract)
    {
        nlohmann::json j;
        j["config"] = pipeline_config_to_text(config);
        j["quantile_convention"] = "linear interpolation between order statistics";
        j["n_subjects"] = cohort.records.size();
        j["subjects_failed"] = result.inference.subjects_failed;
        j["failures"] = result.inference.failures;
        j["complete"] = result.complete;
        j["warnings"] = cohort.warnings;
        io::write_file((rdir / "provenance.json").string(), j.dump(2) + "\n");
    }
}

}  // namespace platelet::pipeline
