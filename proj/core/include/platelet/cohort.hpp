#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "platelet/abc.hpp"
#include "platelet/kde.hpp"
#include "platelet/params.hpp"
#include "platelet/sim_config.hpp"
#include "platelet/trace.hpp"

namespace platelet::pipeline {

struct PatientRecord {
    std::string id;
    std::string group;
    double n_platelet_0 = 0;
    double n_act_platelet_0 = 0;
    DepositionTrace trace;

    std::vector<double> true_theta;  // synthetic cohorts only

    // attached as the pipeline runs
    bool has_posterior = false;
    abc::PosteriorSamples posterior;
    bool has_map = false;
    std::vector<double> map_value;        // natural units
    std::vector<double> posterior_sd;     // inference coordinates
    stats::MapEstimate map_detail;
};

struct Cohort {
    std::vector<PatientRecord> records;
    std::vector<std::string> label_set = {"healthy", "dialysis", "copd"};
    std::vector<std::string> warnings;  // soft validation findings

    std::vector<std::size_t> indices_of(const std::string& group) const;
};

// CSV schema:
// id,group,n_platelet_0,n_act_platelet_0,n_agg_20,s_agg_20,n_plt_20,
// n_agg_120,s_agg_120,n_plt_120,n_agg_300,s_agg_300,n_plt_300
// Hard failures carry the offending line number; a non-increasing
// N_platelet series is only warned about.
Cohort load_cohort(const std::string& path,
                   const std::vector<std::string>& label_set = {"healthy", "dialysis", "copd"});
void write_cohort_csv(const Cohort& cohort, const std::string& path);

struct GroupSpec {
    std::string label;
    ModelParams center;
};

struct CohortSpec {
    std::vector<GroupSpec> groups;
    double jitter_sd = 0.05;  // sd of log(theta_subject / center), per component
    int subjects_per_group = 16;
    SimConfig sim;
    abc::PriorBox prior;  // jittered parameters must stay inside
    std::uint64_t seed = 0;

    void validate() const;
};

// Default three-group synthetic protocol: groups differ only in p_ag, a_t
// and v_z_nap, at separations sized for desk-scale recovery.
CohortSpec default_synthetic_spec();

// Per subject: theta = group center times componentwise exp(jitter_sd * z),
// redrawn (at most 100 times) until inside the prior box; trace simulated
// with a per-subject seed; the true theta is recorded for scoring.
Cohort generate_synthetic_cohort(const CohortSpec& spec);

// True parameters for synthetic cohorts (id,group,<params>).
void write_truth_csv(const Cohort& cohort, const std::string& path);
std::vector<std::pair<std::string, std::vector<double>>> read_truth_csv(const std::string& path);

}  // namespace platelet::pipeline
