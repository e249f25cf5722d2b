#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "platelet/abc.hpp"
#include "platelet/cohort.hpp"
#include "platelet/stats.hpp"
#include "platelet/summary_transform.hpp"

namespace platelet::pipeline {

struct PipelineConfig {
    SimConfig sim;
    abc::AbcConfig abc;
    abc::PriorBox prior;
    std::string summary_method = "dssl";  // dssl | sasl | tlsl | identity
    summary::DsslOptions dssl;
    summary::NetOptions net;
    int pilot_size = 255;  // sasl/tlsl pilot simulations
    std::uint64_t master_seed = 1;
    int workers = 1;
    int predictive_draws = 500;
    double predictive_level = 0.95;
    double kde_bandwidth = 0.45;
    std::string healthy_group = "healthy";
    std::string disease_group = "copd";
    std::string pathology_parameter = "p_ag";
    CohortSpec synthetic;

    void validate() const;
};

PipelineConfig default_pipeline_config();
PipelineConfig read_pipeline_config(const std::string& path);
std::string pipeline_config_to_text(const PipelineConfig& config);

struct TestCell {
    double h = 0;
    double p_raw = 1;
    double p_adj = 1;
    bool significant = false;
};

// Kruskal-Wallis table over per-subject MAP estimates: one omnibus column
// plus one per group pair; adjusted across the seven parameters within each
// column.
struct TestReport {
    std::vector<std::string> parameters;
    std::vector<std::string> columns;
    std::vector<std::vector<TestCell>> cells;  // [parameter][column]
    double alpha = 0.05;
};

TestReport analyze_maps(const Cohort& cohort, double alpha = 0.05);
std::string test_report_to_csv(const TestReport& report);

// MAP table (id,group,<7 parameter columns>) as written in the report set;
// loads into a cohort whose records carry only group labels and MAP values.
Cohort read_map_table(const std::string& path);
std::string map_table_to_csv(const Cohort& cohort);

stats::PathologyResult pathology_test(const Cohort& cohort, const std::string& parameter,
                                      const std::string& healthy_group,
                                      const std::string& disease_group);

struct PredictiveBands {
    std::vector<double> times;
    // [observable][time index]
    std::vector<std::vector<double>> lo, med, hi;
    // simulated predictions kept for scoring: [draw] = flattened trace
    std::vector<DepositionTrace> draws;
};

using TraceSimulate = std::function<DepositionTrace(const std::vector<double>&, std::uint64_t)>;

// Draw n_draws parameter samples from the posterior (uniform with
// replacement), simulate each, and report the central `level` band and the
// median per observable and time point.
PredictiveBands posterior_predictive(const abc::PosteriorSamples& posterior,
                                     const TraceSimulate& simulate, int n_draws, double level,
                                     std::uint64_t seed, int workers);

struct InferenceOutcome {
    long new_simulations = 0;    // simulations actually run (resume skips)
    int subjects_resumed = 0;
    int subjects_failed = 0;
    std::vector<std::string> failures;  // per-subject messages; pipeline continues
};

// Per-subject SABC + MAP, parallel over subjects, resumable through
// content-hash manifests under out_dir/subjects/<id>/ (pass an empty out_dir
// to skip persistence).
InferenceOutcome run_inference_all(Cohort& cohort, const summary::SummaryTransform& transform,
                                   const abc::PriorBox& prior, const abc::AbcConfig& abc_config,
                                   const SimConfig& sim, double kde_bandwidth, int workers,
                                   std::uint64_t master_seed, const std::string& out_dir);

struct PipelineResult {
    Cohort cohort;
    TestReport test_report;
    stats::PathologyResult pathology;
    // [subject][observable 0..2]
    std::vector<std::array<double, 3>> energy_scores;
    std::vector<PredictiveBands> bands;  // per subject (empty when draws = 0)
    InferenceOutcome inference;
    bool complete = false;
    std::string out_dir;
};

// Full workflow: load (or synthesize, when cohort_csv is empty) the cohort,
// train the summary transform, infer per subject, analyze, score, and write
// the report set under out_dir.
PipelineResult run_pipeline(const PipelineConfig& config, const std::string& cohort_csv,
                            const std::string& out_dir);

// Report writers, one file each, byte-deterministic for fixed inputs.
void emit_report(const PipelineResult& result, const PipelineConfig& config,
                 const std::string& out_dir);

}  // namespace platelet::pipeline
