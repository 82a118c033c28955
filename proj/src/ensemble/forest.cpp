#include "livseg/ensemble/forest.hpp"

#include "livseg/core/parallel.hpp"
#include "tree_json.hpp"

namespace livseg::ensemble {

void check_binary_labels(std::span<const int> y, std::size_t rows) {
    if (y.size() != rows) throw InvalidArgument("labels and feature rows differ in length");
    bool seen[2] = {false, false};
    for (int v : y) {
        if (v != 0 && v != 1) throw InvalidArgument("labels must be 0 or 1");
        seen[v] = true;
    }
    if (!seen[0] || !seen[1]) throw InvalidArgument("training data must contain both classes");
}

double ForestModel::predict_proba(std::span<const double> x) const {
    if (x.size() != n_features)
        throw InvalidArgument("forest expects " + std::to_string(n_features) + " features, got " +
                              std::to_string(x.size()));
    if (trees.empty()) throw InvalidArgument("forest has no trees");
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
}

std::vector<double> ForestModel::predict_proba(const Matrix& x, int workers) const {
    std::vector<double> out(x.rows());
    parallel_for(x.rows(), workers, [&](std::size_t i) { out[i] = predict_proba(x.row(i)); });
    return out;
}

ForestModel train_forest(const Matrix& x, std::span<const int> y, const ForestParams& params) {
    check_binary_labels(y, x.rows());
    if (params.n_trees < 1) throw InvalidArgument("forest needs at least one tree");
    if (x.cols() == 0) throw InvalidArgument("forest needs at least one feature");
    const std::size_t n = x.rows();
    std::size_t count[2] = {0, 0};
    for (int v : y) ++count[v];

    ForestModel m;
    m.n_features = x.cols();
    if (params.balanced_class_weight)
        for (int c = 0; c < 2; ++c) m.class_weight[c] = static_cast<double>(n) / (2.0 * static_cast<double>(count[c]));
    m.trees.resize(params.n_trees);
    parallel_for(m.trees.size(), params.workers, [&](std::size_t t) {
        Rng rng = make_stream(params.seed, "forest.tree", {t});
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        std::vector<std::size_t> rows(n);
        for (auto& r : rows) r = pick(rng);
        m.trees[t] = fit_classification_tree(x, y, rows, m.class_weight, params.tree, rng);
    });
    return m;
}

std::vector<double> forest_importance(const ForestModel& model) {
    std::vector<double> imp(model.n_features, 0.0);
    for (const auto& t : model.trees) {
        std::vector<double> ti(model.n_features, 0.0);
        double total = 0.0;
        for (const auto& n : t.nodes)
            if (!n.is_leaf()) {
                ti[n.feature] += n.gain;
                total += n.gain;
            }
        if (total <= 0.0) continue;
        for (std::size_t f = 0; f < ti.size(); ++f) imp[f] += ti[f] / total;
    }
    double sum = 0.0;
    for (double v : imp) sum += v;
    if (sum > 0.0)
        for (double& v : imp) v /= sum;
    return imp;
}

using nlohmann::json;

std::string ForestModel::to_json() const {
    json j;
    j["format"] = "livseg.forest";
    j["version"] = 1;
    j["n_features"] = n_features;
    j["class_weight"] = {class_weight[0], class_weight[1]};
    j["feature_names"] = feature_names;
    auto& arr = j["trees"] = json::array();
    for (const auto& t : trees) arr.push_back(tree_to_json(t));
    return j.dump();
}

ForestModel ForestModel::from_json(const std::string& text) {
    const json j = parse_document(text, "livseg.forest");
    ForestModel m;
    try {
        m.n_features = j.at("n_features").get<std::size_t>();
        const auto cw = j.at("class_weight").get<std::vector<double>>();
        if (cw.size() != 2) throw FormatError("class_weight must have two entries");
        m.class_weight[0] = cw[0];
        m.class_weight[1] = cw[1];
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    } catch (const json::exception& e) {
        throw FormatError(std::string("livseg.forest: ") + e.what());
    }
    for (const auto& t : m.trees)
        for (const auto& n : t.nodes)
            if (!n.is_leaf() && n.feature >= static_cast<int>(m.n_features))
                throw FormatError("livseg.forest: split feature out of range");
    return m;
}

} // namespace livseg::ensemble
