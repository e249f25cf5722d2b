#pragma once

#include <cstdint>
#include <vector>

#include "platelet/rng.hpp"

namespace platelet::summary {

// Small fully-connected network with ReLU hidden activations and a linear
// output layer. Weights live in plain vectors; flatten/unflatten expose a
// single parameter vector for SGD and finite-difference checks.
struct Mlp {
    std::vector<std::size_t> layer_sizes;          // input, hidden..., output
    std::vector<std::vector<double>> weights;      // per layer, out x in row-major
    std::vector<std::vector<double>> biases;

    static Mlp init(const std::vector<std::size_t>& sizes, rng::Stream& stream);

    std::size_t n_layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
    std::size_t n_parameters() const;

    std::vector<double> forward(const std::vector<double>& x) const;

    std::vector<double> flatten() const;
    void unflatten(const std::vector<double>& params);
};

// Mean squared regression loss (1/N) sum ||f(x_i) - y_i||^2 over the given
// index subset, and its gradient in flattened parameter order.
double sasl_loss(const Mlp& net, const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y,
                 const std::vector<std::size_t>& index);
std::vector<double> sasl_grad(const Mlp& net, const std::vector<std::vector<double>>& x,
                              const std::vector<std::vector<double>>& y,
                              const std::vector<std::size_t>& index);

struct Triplet {
    std::size_t anchor, positive, negative;
};

// Mean hinge triplet loss (1/N) sum [d(a,p)^2 - d(a,n)^2 + margin]_+ over the
// given triplets, and its gradient.
double triplet_loss(const Mlp& net, const std::vector<std::vector<double>>& x,
                    const std::vector<Triplet>& triplets, double margin);
std::vector<double> triplet_grad(const Mlp& net, const std::vector<std::vector<double>>& x,
                                 const std::vector<Triplet>& triplets, double margin);

struct SgdOptions {
    int epochs = 1000;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
};

// Plain minibatch SGD on the regression loss; returns the per-epoch
// training-loss curve. Throws on a non-finite loss.
std::vector<double> sgd_train_regression(Mlp& net, const std::vector<std::vector<double>>& x,
                                         const std::vector<std::vector<double>>& y,
                                         const SgdOptions& opts);

// SGD on the triplet loss. Positives are fixed per anchor; negatives are
// re-drawn uniformly outside the anchor's nearest-m parameter neighborhood
// each time the anchor comes up.
struct TripletSampler {
    std::vector<std::size_t> positive;                // per anchor
    std::vector<std::vector<std::size_t>> negatives;  // allowed negatives per anchor
};
TripletSampler build_triplet_sampler(const std::vector<std::vector<double>>& thetas,
                                     std::size_t protect_m = 5);

std::vector<double> sgd_train_triplet(Mlp& net, const std::vector<std::vector<double>>& x,
                                      const TripletSampler& sampler, double margin,
                                      const SgdOptions& opts);

}  // namespace platelet::summary
