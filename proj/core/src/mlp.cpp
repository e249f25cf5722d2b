#include "platelet/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace platelet::summary {

Mlp Mlp::init(const std::vector<std::size_t>& sizes, rng::Stream& stream) {
    if (sizes.size() < 2) throw std::invalid_argument("mlp: need at least input and output layer");
    Mlp net;
    net.layer_sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const std::size_t in = sizes[l], out = sizes[l + 1];
        // He-style scale for the ReLU stack
        const double scale = std::sqrt(2.0 / static_cast<double>(in));
        std::vector<double> w(out * in);
        for (auto& v : w) v = scale * stream.normal();
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(out, 0.0);
    }
    return net;
}

std::size_t Mlp::n_parameters() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < n_layers(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

std::vector<double> Mlp::forward(const std::vector<double>& x) const {
    if (x.size() != input_dim()) throw std::invalid_argument("mlp: input dimension mismatch");
    std::vector<double> a = x;
    for (std::size_t l = 0; l < n_layers(); ++l) {
        const std::size_t in = layer_sizes[l], out = layer_sizes[l + 1];
        std::vector<double> z(out);
        for (std::size_t o = 0; o < out; ++o) {
            double s = biases[l][o];
            const double* row = &weights[l][o * in];
            for (std::size_t i = 0; i < in; ++i) s += row[i] * a[i];
            z[o] = s;
        }
        if (l + 1 < n_layers())
            for (auto& v : z) v = v > 0 ? v : 0.0;
        a = std::move(z);
    }
    return a;
}

std::vector<double> Mlp::flatten() const {
    std::vector<double> p;
    p.reserve(n_parameters());
    for (std::size_t l = 0; l < n_layers(); ++l) {
        p.insert(p.end(), weights[l].begin(), weights[l].end());
        p.insert(p.end(), biases[l].begin(), biases[l].end());
    }
    return p;
}

void Mlp::unflatten(const std::vector<double>& params) {
    if (params.size() != n_parameters())
        throw std::invalid_argument("mlp: parameter vector size mismatch");
    std::size_t pos = 0;
    for (std::size_t l = 0; l < n_layers(); ++l) {
        std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), weights[l].size(),
                    weights[l].begin());
        pos += weights[l].size();
        std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos), biases[l].size(),
                    biases[l].begin());
        pos += biases[l].size();
    }
}

namespace {

// forward pass keeping pre-activations for backprop
struct Activations {
    std::vector<std::vector<double>> a;  // a[0] = input, a[L] = output
    std::vector<std::vector<double>> z;  // pre-activations per layer
};

Activations forward_full(const Mlp& net, const std::vector<double>& x) {
    Activations act;
    act.a.push_back(x);
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        const std::size_t in = net.layer_sizes[l], out = net.layer_sizes[l + 1];
        std::vector<double> z(out);
        const auto& prev = act.a.back();
        for (std::size_t o = 0; o < out; ++o) {
            double s = net.biases[l][o];
            const double* row = &net.weights[l][o * in];
            for (std::size_t i = 0; i < in; ++i) s += row[i] * prev[i];
            z[o] = s;
        }
        act.z.push_back(z);
        if (l + 1 < net.n_layers())
            for (auto& v : z) v = v > 0 ? v : 0.0;
        act.a.push_back(std::move(z));
    }
    return act;
}

// accumulate d(loss)/d(params) for one sample given d(loss)/d(output)
void backprop_into(const Mlp& net, const Activations& act, std::vector<double> delta,
                   std::vector<double>& grad) {
    // grad layout matches Mlp::flatten(): per layer weights then biases
    std::vector<std::size_t> offsets(net.n_layers());
    std::size_t pos = 0;
    for (std::size_t l = 0; l < net.n_layers(); ++l) {
        offsets[l] = pos;
        pos += net.weights[l].size() + net.biases[l].size();
    }
    for (std::size_t li = net.n_layers(); li-- > 0;) {
        const std::size_t in = net.layer_sizes[li], out = net.layer_sizes[li + 1];
        if (li + 1 < net.n_layers()) {
            // delta arriving at a hidden layer passes through the ReLU gate
            for (std::size_t o = 0; o < out; ++o)
                if (act.z[li][o] <= 0) delta[o] = 0.0;
        }
        double* gw = &grad[offsets[li]];
        double* gb = &grad[offsets[li] + net.weights[li].size()];
        const auto& prev = act.a[li];
        for (std::size_t o = 0; o < out; ++o) {
            const double d = delta[o];
            double* row = &gw[o * in];
            for (std::size_t i = 0; i < in; ++i) row[i] += d * prev[i];
            gb[o] += d;
        }
        if (li > 0) {
            std::vector<double> next(in, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                const double d = delta[o];
                const double* row = &net.weights[li][o * in];
                for (std::size_t i = 0; i < in; ++i) next[i] += row[i] * d;
            }
            delta = std::move(next);
        }
    }
}

}  // namespace

double sasl_loss(const Mlp& net, const std::vector<std::vector<double>>& x,
                 const std::vector<std::vector<double>>& y,
                 const std::vector<std::size_t>& index) {
    if (index.empty()) throw std::invalid_argument("sasl_loss: empty index set");
    double total = 0;
    for (const auto k : index) {
        const auto out = net.forward(x[k]);
        for (std::size_t j = 0; j < out.size(); ++j)
            total += (out[j] - y[k][j]) * (out[j] - y[k][j]);
    }
    return total / static_cast<double>(index.size());
}

std::vector<double> sasl_grad(const Mlp& net, const std::vector<std::vector<double>>& x,
                              const std::vector<std::vector<double>>& y,
                              const std::vector<std::size_t>& index) {
    if (index.empty()) throw std::invalid_argument("sasl_grad: empty index set");
    std::vector<double> grad(net.n_parameters(), 0.0);
    for (const auto k : index) {
        const auto act = forward_full(net, x[k]);
        const auto& out = act.a.back();
        std::vector<double> delta(out.size());
        for (std::size_t j = 0; j < out.size(); ++j) delta[j] = 2.0 * (out[j] - y[k][j]);
        backprop_into(net, act, std::move(delta), grad);
    }
    const double inv = 1.0 / static_cast<double>(index.size());
    for (auto& g : grad) g *= inv;
    return grad;
}

double triplet_loss(const Mlp& net, const std::vector<std::vector<double>>& x,
                    const std::vector<Triplet>& triplets, double margin) {
    if (triplets.empty()) throw std::invalid_argument("triplet_loss: no triplets");
    double total = 0;
    for (const auto& t : triplets) {
        const auto ga = net.forward(x[t.anchor]);
        const auto gp = net.forward(x[t.positive]);
        const auto gn = net.forward(x[t.negative]);
        double dap = 0, dan = 0;
        for (std::size_t j = 0; j < ga.size(); ++j) {
            dap += (ga[j] - gp[j]) * (ga[j] - gp[j]);
            dan += (ga[j] - gn[j]) * (ga[j] - gn[j]);
        }
        total += std::max(0.0, dap - dan + margin);
    }
    return total / static_cast<double>(triplets.size());
}

std::vector<double> triplet_grad(const Mlp& net, const std::vector<std::vector<double>>& x,
                                 const std::vector<Triplet>& triplets, double margin) {
    if (triplets.empty()) throw std::invalid_argument("triplet_grad: no triplets");
    std::vector<double> grad(net.n_parameters(), 0.0);
    for (const auto& t : triplets) {
        const auto aa = forward_full(net, x[t.anchor]);
        const auto ap = forward_full(net, x[t.positive]);
        const auto an = forward_full(net, x[t.negative]);
        const auto& ga = aa.a.back();
        const auto& gp = ap.a.back();
        const auto& gn = an.a.back();
        double dap = 0, dan = 0;
        for (std::size_t j = 0; j < ga.size(); ++j) {
            dap += (ga[j] - gp[j]) * (ga[j] - gp[j]);
            dan += (ga[j] - gn[j]) * (ga[j] - gn[j]);
        }
        if (dap - dan + margin <= 0) continue;  // hinge inactive
        std::vector<double> da(ga.size()), dp(ga.size()), dn(ga.size());
        for (std::size_t j = 0; j < ga.size(); ++j) {
            da[j] = 2.0 * (gn[j] - gp[j]);
            dp[j] = -2.0 * (ga[j] - gp[j]);
            dn[j] = 2.0 * (ga[j] - gn[j]);
        }
        backprop_into(net, aa, std::move(da), grad);
        backprop_into(net, ap, std::move(dp), grad);
        backprop_into(net, an, std::move(dn), grad);
    }
    const double inv = 1.0 / static_cast<double>(triplets.size());
    for (auto& g : grad) g *= inv;
    return grad;
}

std::vector<double> sgd_train_regression(Mlp& net, const std::vector<std::vector<double>>& x,
                                         const std::vector<std::vector<double>>& y,
                                         const SgdOptions& opts) {
    if (x.empty() || x.size() != y.size())
        throw std::invalid_argument("sgd: bad training set");
    rng::Stream shuffle_stream(opts.seed, rng::Tag::train, 0);
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> params = net.flatten();
    std::vector<double> curve;
    std::vector<std::size_t> all(order);
    curve.push_back(sasl_loss(net, x, y, all));

    for (int e = 0; e < opts.epochs; ++e) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_stream.below(i)]);
        for (std::size_t start = 0; start < order.size(); start += opts.batch_size) {
            const std::size_t stop = std::min(order.size(), start + opts.batch_size);
            const std::vector<std::size_t> batch(order.begin() + static_cast<std::ptrdiff_t>(start),
                                                 order.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto grad = sasl_grad(net, x, y, batch);
            for (std::size_t p = 0; p < params.size(); ++p)
                params[p] -= opts.learning_rate * grad[p];
            net.unflatten(params);
        }
        const double loss = sasl_loss(net, x, y, all);
        if (!std::isfinite(loss))
            throw std::runtime_error("sgd: training diverged (non-finite loss)");
        curve.push_back(loss);
    }
    return curve;
}

TripletSampler build_triplet_sampler(const std::vector<std::vector<double>>& thetas,
                                     std::size_t protect_m) {
    const std::size_t n = thetas.size();
    if (n < 3) throw std::invalid_argument("triplet sampler: need at least 3 pilot points");
    TripletSampler s;
    s.positive.resize(n);
    s.negatives.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<std::pair<double, std::size_t>> by_dist;
        by_dist.reserve(n - 1);
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a) continue;
            double d2 = 0;
            for (std::size_t j = 0; j < thetas[a].size(); ++j)
                d2 += (thetas[a][j] - thetas[b][j]) * (thetas[a][j] - thetas[b][j]);
            by_dist.emplace_back(d2, b);
        }
        std::sort(by_dist.begin(), by_dist.end());
        s.positive[a] = by_dist.front().second;
        const std::size_t skip = std::min(protect_m, by_dist.size() - 1);
        for (std::size_t k = skip; k < by_dist.size(); ++k)
            s.negatives[a].push_back(by_dist[k].second);
        if (s.negatives[a].empty()) s.negatives[a].push_back(by_dist.back().second);
    }
    return s;
}

std::vector<double> sgd_train_triplet(Mlp& net, const std::vector<std::vector<double>>& x,
                                      const TripletSampler& sampler, double margin,
                                      const SgdOptions& opts) {
    const std::size_t n = x.size();
    if (sampler.positive.size() != n)
        throw std::invalid_argument("sgd triplet: sampler does not match data");
    rng::Stream stream(opts.seed, rng::Tag::train, 1);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<double> params = net.flatten();

    auto epoch_triplets = [&](bool redraw) {
        std::vector<Triplet> ts;
        ts.reserve(n);
        for (const auto a : order) {
            const auto& negs = sampler.negatives[a];
            const std::size_t pick = redraw ? negs[stream.below(negs.size())] : negs.front();
            ts.push_back({a, sampler.positive[a], pick});
        }
        return ts;
    };

    std::vector<double> curve;
    curve.push_back(triplet_loss(net, x, epoch_triplets(false), margin));

    for (int e = 0; e < opts.epochs; ++e) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[stream.below(i)]);
        const auto ts = epoch_triplets(true);
        for (std::size_t start = 0; start < ts.size(); start += opts.batch_size) {
            const std::size_t stop = std::min(ts.size(), start + opts.batch_size);
            const std::vector<Triplet> batch(ts.begin() + static_cast<std::ptrdiff_t>(start),
                                             ts.begin() + static_cast<std::ptrdiff_t>(stop));
            const auto grad = triplet_grad(net, x, batch, margin);
            for (std::size_t p = 0; p < params.size(); ++p)
                params[p] -= opts.learning_rate * grad[p];
            net.unflatten(params);
        }
        const double loss = triplet_loss(net, x, epoch_triplets(false), margin);
        if (!std::isfinite(loss))
            throw std::runtime_error("sgd triplet: training diverged (non-finite loss)");
        curve.push_back(loss);
    }
    return curve;
}

}  // namespace platelet::summary
