#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace platelet::summary {

struct LmnnOptions {
    int k = 3;                 // target neighbors per point
    std::size_t out_dim = 2;
    double step = 1e-3;        // gradient step; halved whenever the loss rises
    int max_iterations = 500;
    double rel_tol = 1e-8;     // relative loss-change stopping rule
    // The push term is the standard hinge [1 + ||L d_ij||^2 - ||L d_il||^2]_+
    // by default; `printed_sign` switches the impostor term to + for
    // comparison.
    bool printed_sign = false;
};

// Fixed structure of the objective: target-neighbor pairs chosen once under
// Euclidean distance on the input rows, impostor lists per anchor.
struct LmnnProblem {
    std::vector<std::vector<double>> rows;          // n x d
    std::vector<int> labels;
    std::vector<std::pair<std::size_t, std::size_t>> targets;  // (i, j) pairs
    std::vector<std::vector<std::size_t>> impostors;            // per anchor i
    std::size_t dim = 0;
    std::size_t out_dim = 2;
    bool printed_sign = false;

    // pull + hinge-push objective and its (sub)gradient on the flattened
    // out_dim x dim matrix; subgradient 0 exactly at the hinge kink
    double loss(const std::vector<double>& l_matrix) const;
    std::vector<double> grad(const std::vector<double>& l_matrix) const;
};

LmnnProblem build_lmnn_problem(const std::vector<std::vector<double>>& rows,
                               const std::vector<int>& labels, int k, std::size_t out_dim,
                               bool printed_sign);

struct LmnnModel {
    std::vector<double> l_matrix;  // out_dim x dim row-major
    std::vector<double> loss_curve;
    double final_loss = 0;
    double final_step = 0;
    int iterations = 0;
    double loo_knn_accuracy = 0;  // leave-one-out kNN under the learned metric
};

// Gradient descent on L from the identity slice; fixed step halved on any
// loss increase; stops on max_iterations or relative change < rel_tol.
LmnnModel train_lmnn(const std::vector<std::vector<double>>& rows,
                     const std::vector<int>& labels, const LmnnOptions& options);

// Leave-one-out kNN accuracy on projected rows (diagnostic recorded with the
// trained transform).
double loo_knn_accuracy(const std::vector<std::vector<double>>& rows,
                        const std::vector<int>& labels, const std::vector<double>& l_matrix,
                        std::size_t out_dim, int k);

}  // namespace platelet::summary
