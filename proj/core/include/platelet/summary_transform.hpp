#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "platelet/features.hpp"
#include "platelet/lmnn.hpp"
#include "platelet/mlp.hpp"
#include "platelet/trace.hpp"

namespace platelet::summary {

struct TrainingProvenance {
    std::string method;  // dssl | sasl | tlsl | identity
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, double>> hyper;
    std::vector<double> loss_curve;
    double final_loss = 0;
    double loo_knn_accuracy = -1;  // dssl only
};

// The learned map x -> s(x) used to define the ABC distance. Linear kind:
// L times the standardized polynomial expansion. Network kind: forward pass
// of a small MLP on standardized raw features.
struct SummaryTransform {
    enum class Kind { linear, network };

    Kind kind = Kind::linear;
    bool trained = false;

    // linear
    FeatureExpansion expansion;
    std::size_t out_dim = 0;
    std::vector<double> l_matrix;  // out_dim x expansion.output_dim row-major

    // network
    Standardization input_std;
    Mlp net;

    TrainingProvenance provenance;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::vector<double> apply(const std::vector<double>& x) const;  // throws if untrained
    std::vector<double> apply(const DepositionTrace& t) const { return apply(t.flatten()); }
};

void save_transform(const SummaryTransform& t, const std::string& path);
SummaryTransform load_transform(const std::string& path);

// Simulated (theta, x) pairs with their generation seeds.
struct PilotSet {
    std::vector<std::vector<double>> thetas;
    std::vector<std::vector<double>> xs;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const { return thetas.size(); }
};

void write_pilot_csv(const PilotSet& pilot, const std::vector<std::string>& theta_names,
                     const std::string& path);
PilotSet read_pilot_csv(const std::string& path);

struct DsslOptions {
    int k = 3;
    std::size_t out_dim = 2;
    double step = 1e-3;
    int max_iterations = 500;
    bool printed_sign = false;
};

// Metric-learned linear summary: fit the feature expansion on the labeled
// traces, run LMNN, keep L.
SummaryTransform train_dssl(const std::vector<std::vector<double>>& traces,
                            const std::vector<int>& group_labels, const DsslOptions& options);

struct NetOptions {
    std::vector<std::size_t> hidden = {14, 13, 10};
    int epochs = 1000;         // 2000 for tlsl
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    double margin = 1.0;       // tlsl
    std::size_t protect_m = 5; // tlsl negative-sampling exclusion
    std::uint64_t seed = 0;
};

// Regression summary: network fitted to E[theta | x]; s(x) = f(x).
SummaryTransform train_sasl(const PilotSet& pilot, const NetOptions& options);

// Triplet-embedding summary with parameter-space neighborhoods.
SummaryTransform train_tlsl(const PilotSet& pilot, NetOptions options);

// Euclidean-on-first-two-expanded-features baseline; also the zero-epoch /
// untrained-network helper used in tests.
SummaryTransform identity_transform(const std::vector<std::vector<double>>& traces,
                                    std::size_t out_dim = 2);

// Grid search over (step, k) maximizing the rand index between the true
// labels and agglomerative clustering on s(x); grid recorded in provenance.
struct DsslTuneResult {
    DsslOptions best;
    double best_rand_index = 0;
    std::vector<std::pair<std::string, double>> grid_scores;
    SummaryTransform transform;
};
DsslTuneResult tune_dssl(const std::vector<std::vector<double>>& traces,
                         const std::vector<int>& group_labels,
                         const std::vector<double>& steps, const std::vector<int>& ks);

}  // namespace platelet::summary
