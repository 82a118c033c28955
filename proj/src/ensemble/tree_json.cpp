#include "tree_json.hpp"

namespace livseg::ensemble {

json tree_to_json(const Tree& t) {
    json j;
    std::vector<int> feature, left, right, samples, depth;
    std::vector<double> threshold, value, gain, weight;
    for (const auto& n : t.nodes) {
        feature.push_back(n.feature);
        left.push_back(n.left);
        right.push_back(n.right);
        samples.push_back(n.samples);
        depth.push_back(n.depth);
        threshold.push_back(n.threshold);
        value.push_back(n.value);
        gain.push_back(n.gain);
        weight.push_back(n.weight);
    }
    j["feature"] = feature;
    j["threshold"] = threshold;
    j["left"] = left;
    j["right"] = right;
    j["value"] = value;
    j["gain"] = gain;
    j["weight"] = weight;
    j["samples"] = samples;
    j["depth"] = depth;
    return j;
}

Tree tree_from_json(const json& j) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const auto gain = j.at("gain").get<std::vector<double>>();
    const auto weight = j.at("weight").get<std::vector<double>>();
    const auto samples = j.at("samples").get<std::vector<int>>();
    const auto depth = j.at("depth").get<std::vector<int>>();
    const std::size_t n = feature.size();
    for (const auto* v : {&left, &right, &samples, &depth})
        if (v->size() != n) throw FormatError("tree arrays differ in length");
    for (const auto* v : {&threshold, &value, &gain, &weight})
        if (v->size() != n) throw FormatError("tree arrays differ in length");
    Tree t;
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& d = t.nodes[i];
        d = {feature[i], threshold[i], left[i], right[i], value[i], gain[i], weight[i], samples[i], depth[i]};
        if (!d.is_leaf() && (d.left <= static_cast<int>(i) || d.right <= static_cast<int>(i) ||
                             d.left >= static_cast<int>(n) || d.right >= static_cast<int>(n)))
            throw FormatError("tree child index out of range");
    }
    if (n == 0) throw FormatError("empty tree");
    return t;
}

json parse_document(const std::string& text, const char* format) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string(format) + ": " + e.what());
    }
    if (j.value("format", "") != format) throw FormatError(std::string("not a ") + format + " document");
    if (j.value("version", 0) != 1) throw FormatError(std::string(format) + ": unsupported version");
    return j;
}

} // namespace livseg::ensemble
