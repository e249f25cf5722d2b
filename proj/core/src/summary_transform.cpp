#include "platelet/summary_transform.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "platelet/io_util.hpp"
#include "platelet/stats.hpp"

namespace platelet::summary {

std::size_t SummaryTransform::input_dim() const {
    return kind == Kind::linear ? expansion.input_dim : net.input_dim();
}

std::size_t SummaryTransform::output_dim() const {
    return kind == Kind::linear ? out_dim : net.output_dim();
}

std::vector<double> SummaryTransform::apply(const std::vector<double>& x) const {
    if (!trained) throw std::runtime_error("summary transform: not trained");
    if (kind == Kind::linear) {
        const auto e = expansion.apply(x);
        std::vector<double> s(out_dim, 0.0);
        for (std::size_t r = 0; r < out_dim; ++r) {
            double acc = 0;
            const double* row = &l_matrix[r * e.size()];
            for (std::size_t c = 0; c < e.size(); ++c) acc += row[c] * e[c];
            s[r] = acc;
        }
        return s;
    }
    return net.forward(input_std.apply(x));
}

namespace {

nlohmann::json std_to_json(const Standardization& s) {
    return {{"mean", s.mean}, {"sd", s.sd}};
}

Standardization std_from_json(const nlohmann::json& j) {
    Standardization s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.sd = j.at("sd").get<std::vector<double>>();
    return s;
}

}  // namespace

void save_transform(const SummaryTransform& t, const std::string& path) {
    nlohmann::json j;
    j["kind"] = t.kind == SummaryTransform::Kind::linear ? "linear" : "network";
    j["trained"] = t.trained;
    if (t.kind == SummaryTransform::Kind::linear) {
        j["expansion"] = {{"input_dim", t.expansion.input_dim},
                          {"input_std", std_to_json(t.expansion.input_std)},
                          {"expanded_std", std_to_json(t.expansion.expanded_std)}};
        j["out_dim"] = t.out_dim;
        j["l_matrix"] = t.l_matrix;
    } else {
        j["input_std"] = std_to_json(t.input_std);
        j["layer_sizes"] = t.net.layer_sizes;
        j["weights"] = t.net.weights;
        j["biases"] = t.net.biases;
    }
    nlohmann::json prov;
    prov["method"] = t.provenance.method;
    prov["seed"] = t.provenance.seed;
    nlohmann::json hyper = nlohmann::json::object();
    for (const auto& [k, v] : t.provenance.hyper) hyper[k] = v;
    prov["hyper"] = hyper;
    prov["loss_curve"] = t.provenance.loss_curve;
    prov["final_loss"] = t.provenance.final_loss;
    prov["loo_knn_accuracy"] = t.provenance.loo_knn_accuracy;
    j["provenance"] = prov;
    io::write_file(path, j.dump(2) + "\n");
}

SummaryTransform load_transform(const std::string& path) {
    const auto j = nlohmann::json::parse(io::read_file(path));
    SummaryTransform t;
    const std::string kind = j.at("kind").get<std::string>();
    t.trained = j.at("trained").get<bool>();
    if (kind == "linear") {
        t.kind = SummaryTransform::Kind::linear;
        const auto& je = j.at("expansion");
        t.expansion.input_dim = je.at("input_dim").get<std::size_t>();
        t.expansion.input_std = std_from_json(je.at("input_std"));
        t.expansion.expanded_std = std_from_json(je.at("expanded_std"));
        t.out_dim = j.at("out_dim").get<std::size_t>();
        t.l_matrix = j.at("l_matrix").get<std::vector<double>>();
    } else if (kind == "network") {
        t.kind = SummaryTransform::Kind::network;
        t.input_std = std_from_json(j.at("input_std"));
        t.net.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        t.net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        t.net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    } else {
        throw std::runtime_error("summary transform: unknown kind '" + kind + "'");
    }
    const auto& prov = j.at("provenance");
    t.provenance.method = prov.at("method").get<std::string>();
    t.provenance.seed = prov.at("seed").get<std::uint64_t>();
    for (const auto& [k, v] : prov.at("hyper").items())
        t.provenance.hyper.emplace_back(k, v.get<double>());
    t.provenance.loss_curve = prov.at("loss_curve").get<std::vector<double>>();
    t.provenance.final_loss = prov.at("final_loss").get<double>();
    t.provenance.loo_knn_accuracy = prov.at("loo_knn_accuracy").get<double>();
    return t;
}

void write_pilot_csv(const PilotSet& pilot, const std::vector<std::string>& theta_names,
                     const std::string& path) {
    if (pilot.size() == 0) throw std::invalid_argument("pilot: empty set");
    std::ostringstream out;
    for (std::size_t i = 0; i < pilot.thetas[0].size(); ++i)
        out << (i < theta_names.size() ? theta_names[i] : "theta_" + std::to_string(i)) << ',';
    for (std::size_t i = 0; i < pilot.xs[0].size(); ++i) out << "x_" << i << ',';
    out << "seed\n";
    for (std::size_t r = 0; r < pilot.size(); ++r) {
        for (const double v : pilot.thetas[r]) out << io::fmt(v) << ',';
        for (const double v : pilot.xs[r]) out << io::fmt(v) << ',';
        out << pilot.seeds[r] << "\n";
    }
    io::write_file(path, out.str());
}

PilotSet read_pilot_csv(const std::string& path) {
    const std::string text = io::read_file(path);
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("pilot csv: empty file");
    const auto header = io::split(io::trim(line), ',');
    if (header.size() < 3 || header.back() != "seed")
        throw std::runtime_error("pilot csv: expected '<thetas...>,<x_i...>,seed' header");
    std::size_t first_x = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i].rfind("x_", 0) == 0) {
            first_x = i;
            break;
        }
    }
    if (first_x == 0 || first_x + 1 >= header.size())
        throw std::runtime_error("pilot csv: could not locate x_ columns");
    const std::size_t n_theta = first_x;
    const std::size_t n_x = header.size() - 1 - first_x;

    PilotSet pilot;
    while (std::getline(in, line)) {
        if (io::trim(line).empty()) continue;
        const auto f = io::split(line, ',');
        if (f.size() != header.size())
            throw std::runtime_error("pilot csv: bad row '" + line + "'");
        std::vector<double> th(n_theta), x(n_x);
        for (std::size_t i = 0; i < n_theta; ++i) th[i] = io::parse_double(f[i]);
        for (std::size_t i = 0; i < n_x; ++i) x[i] = io::parse_double(f[first_x + i]);
        pilot.thetas.push_back(std::move(th));
        pilot.xs.push_back(std::move(x));
        pilot.seeds.push_back(static_cast<std::uint64_t>(io::parse_int(f.back())));
    }
    if (pilot.size() == 0) throw std::runtime_error("pilot csv: no rows");
    return pilot;
}

SummaryTransform train_dssl(const std::vector<std::vector<double>>& traces,
                            const std::vector<int>& group_labels, const DsslOptions& options) {
    SummaryTransform t;
    t.kind = SummaryTransform::Kind::linear;
    t.expansion = fit_feature_expansion(traces);
    t.out_dim = options.out_dim;

    std::vector<std::vector<double>> rows;
    rows.reserve(traces.size());
    for (const auto& x : traces) rows.push_back(t.expansion.apply(x));

    LmnnOptions lo;
    lo.k = options.k;
    lo.out_dim = options.out_dim;
    lo.step = options.step;
    lo.max_iterations = options.max_iterations;
    lo.printed_sign = options.printed_sign;
    const auto model = train_lmnn(rows, group_labels, lo);

    t.l_matrix = model.l_matrix;
    t.trained = true;
    t.provenance.method = "dssl";
    t.provenance.hyper = {{"k", static_cast<double>(options.k)},
                          {"out_dim", static_cast<double>(options.out_dim)},
                          {"step", options.step},
                          {"max_iterations", static_cast<double>(options.max_iterations)},
                          {"printed_sign", options.printed_sign ? 1.0 : 0.0}};
    t.provenance.loss_curve = model.loss_curve;
    t.provenance.final_loss = model.final_loss;
    t.provenance.loo_knn_accuracy = model.loo_knn_accuracy;
    return t;
}

namespace {

SummaryTransform make_network_transform(const PilotSet& pilot, const NetOptions& options) {
    if (pilot.size() == 0) throw std::invalid_argument("pilot: empty set");
    SummaryTransform t;
    t.kind = SummaryTransform::Kind::network;
    t.input_std = fit_standardization(pilot.xs);
    std::vector<std::size_t> sizes;
    sizes.push_back(pilot.xs[0].size());
    for (const auto h : options.hidden) sizes.push_back(h);
    sizes.push_back(pilot.thetas[0].size());
    rng::Stream init(options.seed, rng::Tag::train, 42);
    t.net = Mlp::init(sizes, init);
    return t;
}

}  // namespace

SummaryTransform train_sasl(const PilotSet& pilot, const NetOptions& options) {
    SummaryTransform t = make_network_transform(pilot, options);
    std::vector<std::vector<double>> xs;
    xs.reserve(pilot.size());
    for (const auto& x : pilot.xs) xs.push_back(t.input_std.apply(x));

    SgdOptions so{options.epochs, options.batch_size, options.learning_rate, options.seed};
    const auto curve = sgd_train_regression(t.net, xs, pilot.thetas, so);

    t.trained = true;
    t.provenance.method = "sasl";
    t.provenance.seed = options.seed;
    t.provenance.hyper = {{"epochs", static_cast<double>(options.epochs)},
                          {"batch_size", static_cast<double>(options.batch_size)},
                          {"learning_rate", options.learning_rate}};
    t.provenance.loss_curve = curve;
    t.provenance.final_loss = curve.back();
    return t;
}

SummaryTransform train_tlsl(const PilotSet& pilot, NetOptions options) {
    if (options.epochs == 1000) options.epochs = 2000;  // protocol default for tlsl
    SummaryTransform t = make_network_transform(pilot, options);
    std::vector<std::vector<double>> xs;
    xs.reserve(pilot.size());
    for (const auto& x : pilot.xs) xs.push_back(t.input_std.apply(x));

    const auto sampler = build_triplet_sampler(pilot.thetas, options.protect_m);
    SgdOptions so{options.epochs, options.batch_size, options.learning_rate, options.seed};
    const auto curve = sgd_train_triplet(t.net, xs, sampler, options.margin, so);

    t.trained = true;
    t.provenance.method = "tlsl";
    t.provenance.seed = options.seed;
    t.provenance.hyper = {{"epochs", static_cast<double>(options.epochs)},
                          {"batch_size", static_cast<double>(options.batch_size)},
                          {"learning_rate", options.learning_rate},
                          {"margin", options.margin},
                          {"protect_m", static_cast<double>(options.protect_m)}};
    t.provenance.loss_curve = curve;
    t.provenance.final_loss = curve.back();
    return t;
}

SummaryTransform identity_transform(const std::vector<std::vector<double>>& traces,
                                    std::size_t out_dim) {
    SummaryTransform t;
    t.kind = SummaryTransform::Kind::linear;
    t.expansion = fit_feature_expansion(traces);
    t.out_dim = out_dim;
    t.l_matrix.assign(out_dim * t.expansion.output_dim(), 0.0);
    for (std::size_t r = 0; r < out_dim && r < t.expansion.output_dim(); ++r)
        t.l_matrix[r * t.expansion.output_dim() + r] = 1.0;
    t.trained = true;
    t.provenance.method = "identity";
    return t;
}

DsslTuneResult tune_dssl(const std::vector<std::vector<double>>& traces,
                         const std::vector<int>& group_labels,
                         const std::vector<double>& steps, const std::vector<int>& ks) {
    if (steps.empty() || ks.empty()) throw std::invalid_argument("tune_dssl: empty grid");
    std::vector<int> distinct(group_labels);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const int n_groups = static_cast<int>(distinct.size());

    DsslTuneResult result;
    result.best_rand_index = -1;
    for (const double step : steps) {
        for (const int k : ks) {
            DsslOptions o;
            o.step = step;
            o.k = k;
            SummaryTransform t = train_dssl(traces, group_labels, o);
            std::vector<std::vector<double>> projected;
            projected.reserve(traces.size());
            for (const auto& x : traces) projected.push_back(t.apply(x));
            const auto clusters = stats::hierarchical_cluster(projected, n_groups);
            const double ri = stats::rand_index(clusters.labels, group_labels);
            result.grid_scores.emplace_back(
                "step=" + io::fmt(step) + ",k=" + std::to_string(k), ri);
            if (ri > result.best_rand_index) {
                result.best_rand_index = ri;
                result.best = o;
                result.transform = std::move(t);
            }
        }
    }
    for (const auto& [k, v] : result.grid_scores)
        result.transform.provenance.hyper.emplace_back("grid:" + k, v);
    return result;
}

}  // namespace platelet::summary
