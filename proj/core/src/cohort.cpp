#include "platelet/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "platelet/io_util.hpp"
#include "platelet/simulator.hpp"

namespace platelet::pipeline {

std::vector<std::size_t> Cohort::indices_of(const std::string& group) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (records[i].group == group) idx.push_back(i);
    return idx;
}

namespace {

const char* kCohortHeader =
    "id,group,n_platelet_0,n_act_platelet_0,n_agg_20,s_agg_20,n_plt_20,"
    "n_agg_120,s_agg_120,n_plt_120,n_agg_300,s_agg_300,n_plt_300";

constexpr double kCohortTimes[3] = {20.0, 120.0, 300.0};

}  // namespace

Cohort load_cohort(const std::string& path, const std::vector<std::string>& label_set) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || io::trim(line).empty())
        throw std::runtime_error("cohort: no records in " + path);
    if (io::trim(line) != kCohortHeader)
        throw std::runtime_error("cohort: line 1: expected header '" + std::string(kCohortHeader) + "'");

    Cohort cohort;
    cohort.label_set = label_set;
    std::set<std::string> seen_ids;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 13)
            throw std::runtime_error("cohort: line " + std::to_string(lineno) +
                                     ": expected 13 columns, got " + std::to_string(f.size()));
        PatientRecord rec;
        rec.id = io::trim(f[0]);
        rec.group = io::trim(f[1]);
        if (rec.id.empty())
            throw std::runtime_error("cohort: line " + std::to_string(lineno) + ": empty id");
        if (!seen_ids.insert(rec.id).second)
            throw std::runtime_error("cohort: line " + std::to_string(lineno) +
                                     ": duplicate id '" + rec.id + "'");
        if (std::find(label_set.begin(), label_set.end(), rec.group) == label_set.end())
            throw std::runtime_error("cohort: line " + std::to_string(lineno) +
                                     ": unknown group label '" + rec.group + "'");
        double vals[11];
        for (int i = 0; i < 11; ++i) {
            try {
                vals[i] = io::parse_double(f[static_cast<std::size_t>(i) + 2]);
            } catch (const std::exception& e) {
                throw std::runtime_error("cohort: line " + std::to_string(lineno) + ": " + e.what());
            }
            if (vals[i] < 0)
                throw std::runtime_error("cohort: line " + std::to_string(lineno) +
                                         ": negative value in column " + std::to_string(i + 3));
        }
        rec.n_platelet_0 = vals[0];
        rec.n_act_platelet_0 = vals[1];
        rec.trace.n_platelet_0 = vals[0];
        rec.trace.n_act_platelet_0 = vals[1];
        for (int t = 0; t < 3; ++t) {
            ObservationRow row;
            row.t = kCohortTimes[t];
            row.n_agg_clust = vals[2 + 3 * t];
            row.s_agg_clust = vals[3 + 3 * t];
            row.n_platelet = vals[4 + 3 * t];
            rec.trace.rows.push_back(row);
        }
        double prev = rec.n_platelet_0;
        for (const auto& row : rec.trace.rows) {
            if (row.n_platelet > prev) {
                cohort.warnings.push_back("cohort: line " + std::to_string(lineno) + ": id '" +
                                          rec.id + "': n_platelet rises at t=" +
                                          io::fmt(row.t) + " (kept)");
                break;
            }
            prev = row.n_platelet;
        }
        cohort.records.push_back(std::move(rec));
    }
    if (cohort.records.empty()) throw std::runtime_error("cohort: no records in " + path);
    return cohort;
}

void write_cohort_csv(const Cohort& cohort, const std::string& path) {
    std::ostringstream out;
    out << kCohortHeader << "\n";
    for (const auto& r : cohort.records) {
        if (r.trace.rows.size() != 3)
            throw std::runtime_error("cohort: record '" + r.id +
                                     "' does not match the three-time schema");
        out << r.id << ',' << r.group << ',' << io::fmt(r.n_platelet_0) << ','
            << io::fmt(r.n_act_platelet_0);
        for (const auto& row : r.trace.rows)
            out << ',' << io::fmt(row.n_agg_clust) << ',' << io::fmt(row.s_agg_clust) << ','
                << io::fmt(row.n_platelet);
        out << "\n";
    }
    io::write_file(path, out.str());
}

void CohortSpec::validate() const {
    if (groups.empty()) throw std::invalid_argument("cohort spec: no groups");
    if (jitter_sd < 0) throw std::invalid_argument("cohort spec: jitter sd must be >= 0");
    if (subjects_per_group < 1)
        throw std::invalid_argument("cohort spec: subjects_per_group must be >= 1");
    sim.validate();
    prior.validate();
    for (const auto& g : groups) {
        g.center.validate();
        std::vector<double> c(g.center.to_array().begin(), g.center.to_array().end());
        if (!prior.contains(c))
            throw std::invalid_argument("cohort spec: group center for '" + g.label +
                                        "' lies outside the prior box");
    }
}

CohortSpec default_synthetic_spec() {
    CohortSpec spec;
    spec.prior = abc::default_model_prior();
    spec.sim = SimConfig::desk();

    ModelParams base;
    base.p_ad = 2.0;
    base.p_ag = 1.6;
    base.p_t = 0.5;
    base.p_f = 5e-3;
    base.a_t = 2.0;
    base.v_z_ap = 1.0e-4;
    base.v_z_nap = 2.0e-5;

    GroupSpec healthy{"healthy", base};
    GroupSpec dialysis{"dialysis", base};
    dialysis.center.a_t = base.a_t * 2.5;
    GroupSpec copd{"copd", base};
    copd.center.p_ag = base.p_ag * 2.5;
    copd.center.v_z_nap = base.v_z_nap * 2.5;

    spec.groups = {healthy, dialysis, copd};
    return spec;
}

Cohort generate_synthetic_cohort(const CohortSpec& spec) {
    spec.validate();
    Cohort cohort;
    cohort.label_set.clear();
    for (const auto& g : spec.groups) cohort.label_set.push_back(g.label);

    std::uint64_t subject_index = 0;
    for (const auto& g : spec.groups) {
        const auto center = g.center.to_array();
        for (int s = 0; s < spec.subjects_per_group; ++s, ++subject_index) {
            rng::Stream jitter(spec.seed, rng::Tag::cohort_subject, subject_index, 0);
            std::vector<double> theta(ModelParams::dim);
            bool inside = false;
            for (int attempt = 0; attempt < 100 && !inside; ++attempt) {
                for (std::size_t j = 0; j < ModelParams::dim; ++j)
                    theta[j] = center[j] * std::exp(spec.jitter_sd * jitter.normal());
                inside = spec.prior.contains(theta);
            }
            if (!inside)
                throw std::runtime_error("cohort: jittered parameters for group '" + g.label +
                                         "' left the prior box 100 times in a row");

            const std::uint64_t sim_seed =
                rng::derive_key(spec.seed, rng::Tag::cohort_subject, subject_index, 1);
            ModelParams p;
            std::array<double, ModelParams::dim> arr;
            std::copy(theta.begin(), theta.end(), arr.begin());
            p = ModelParams::from_array(arr);

            PatientRecord rec;
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%02d", s);
            rec.id = g.label + "-" + buf;
            rec.group = g.label;
            rec.trace = sim::simulate(p, spec.sim, sim_seed);
            rec.n_platelet_0 = rec.trace.n_platelet_0;
            rec.n_act_platelet_0 = rec.trace.n_act_platelet_0;
            rec.true_theta = theta;
            cohort.records.push_back(std::move(rec));
        }
    }
    return cohort;
}

void write_truth_csv(const Cohort& cohort, const std::string& path) {
    std::ostringstream out;
    out << "id,group";
    for (const auto& n : ModelParams::names()) out << ',' << n;
    out << "\n";
    for (const auto& r : cohort.records) {
        if (r.true_theta.empty())
            throw std::runtime_error("truth csv: record '" + r.id + "' has no true parameters");
        out << r.id << ',' << r.group;
        for (const double v : r.true_theta) out << ',' << io::fmt(v);
        out << "\n";
    }
    io::write_file(path, out.str());
}

std::vector<std::pair<std::string, std::vector<double>>> read_truth_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("truth csv: empty file");
    std::vector<std::pair<std::string, std::vector<double>>> out;
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != 2 + ModelParams::dim)
            throw std::runtime_error("truth csv: bad row '" + line + "'");
        std::vector<double> theta(ModelParams::dim);
        for (std::size_t i = 0; i < ModelParams::dim; ++i)
            theta[i] = io::parse_double(f[i + 2]);
        out.emplace_back(io::trim(f[0]), std::move(theta));
    }
    return out;
}

}  // namespace platelet::pipeline
