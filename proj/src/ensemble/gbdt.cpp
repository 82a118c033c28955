#include "livseg/ensemble/gbdt.hpp"

#include <cmath>

#include "livseg/ensemble/forest.hpp"
#include "tree_json.hpp"

namespace livseg::ensemble {

namespace {

double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double mean_loss(std::span<const double> f, std::span<const int> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += softplus(f[i]) - y[i] * f[i];
    return s / static_cast<double>(f.size());
}

} // namespace

double GbdtModel::decision(std::span<const double> x) const {
    if (x.size() != n_features) throw InvalidArgument("gbdt feature length mismatch");
    double f = base_score;
    for (const auto& t : stages) f += learning_rate * t.predict(x);
    return f;
}

double GbdtModel::predict_proba(std::span<const double> x) const { return sigmoid(decision(x)); }

GbdtModel train_gbdt(const Matrix& x, std::span<const int> y, const GbdtParams& params) {
    check_binary_labels(y, x.rows());
    if (params.rounds < 0) throw InvalidArgument("gbdt rounds must be non-negative");
    const std::size_t n = x.rows();
    double pos = 0.0;
    for (int v : y) pos += v;
    const double prior = pos / static_cast<double>(n);

    GbdtModel m;
    m.n_features = x.cols();
    m.learning_rate = params.learning_rate;
    m.base_score = std::log(prior / (1.0 - prior));
    std::vector<double> f(n, m.base_score), g(n), h(n);
    m.train_loss.push_back(mean_loss(f, y));
    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(f[i]);
            g[i] = p - y[i];
            h[i] = p * (1.0 - p);
        }
        Tree t = fit_newton_tree(x, g, h, params.tree);
        for (std::size_t i = 0; i < n; ++i) f[i] += m.learning_rate * t.predict(x.row(i));
        m.stages.push_back(std::move(t));
        m.train_loss.push_back(mean_loss(f, y));
    }
    return m;
}

GbdtImportance gbdt_importances(const GbdtModel& model) {
    GbdtImportance out{std::vector<double>(model.n_features, 0.0), std::vector<double>(model.n_features, 0.0)};
    for (const auto& t : model.stages)
        for (const auto& n : t.nodes)
            if (!n.is_leaf()) {
                out.gain[n.feature] += n.gain;
                out.frequency[n.feature] += 1.0;
            }
    for (auto* v : {&out.gain, &out.frequency}) {
        double s = 0.0;
        for (double a : *v) s += a;
        if (s > 0.0)
            for (double& a : *v) a /= s;
    }
    return out;
}

std::string GbdtModel::to_json() const {
    json j;
    j["format"] = "livseg.gbdt";
    j["version"] = 1;
    j["n_features"] = n_features;
    j["base_score"] = base_score;
    j["learning_rate"] = learning_rate;
    j["train_loss"] = train_loss;
    auto& arr = j["stages"] = json::array();
    for (const auto& t : stages) arr.push_back(tree_to_json(t));
    return j.dump();
}

GbdtModel GbdtModel::from_json(const std::string& text) {
    const json j = parse_document(text, "livseg.gbdt");
    GbdtModel m;
    try {
        m.n_features = j.at("n_features").get<std::size_t>();
        m.base_score = j.at("base_score").get<double>();
        m.learning_rate = j.at("learning_rate").get<double>();
        m.train_loss = j.at("train_loss").get<std::vector<double>>();
        for (const auto& t : j.at("stages")) m.stages.push_back(tree_from_json(t));
    } catch (const json::exception& e) {
        throw FormatError(std::string("livseg.gbdt: ") + e.what());
    }
    return m;
}

} // namespace livseg::ensemble
