#include "livseg/pipeline/config.hpp"

#include <cstdio>
#include <set>

#include "json.hpp"

namespace livseg::pipeline {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

} // namespace

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void PipelineConfig::validate() const {
    if (workers < 1) throw ConfigError("workers must be at least 1");
    if (fixed_tau < 0 || fixed_tau > 254) throw ConfigError("binarize.fixed_tau must lie in [0, 254]");
    if (!(radiomics.tau_rf >= 0.0 && radiomics.tau_rf <= 1.0)) throw ConfigError("radiomics.tau_rf must lie in [0, 1]");
    if (radiomics.n_trees < 1) throw ConfigError("radiomics.n_trees must be positive");
    if (radiomics.target < 1 || radiomics.top_k < radiomics.target)
        throw ConfigError("radiomics.top_k must be at least radiomics.target > 0");
    try {
        radiomics.sampler.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("radiomics.sampler: ") + e.what());
    }
    if (cnn.patch_size < 3) throw ConfigError("cnn.patch_size must be at least 3");
    if (cnn.conv_channels.empty()) throw ConfigError("cnn.conv_channels must not be empty");
    for (int c : cnn.conv_channels)
        if (c < 1) throw ConfigError("cnn.conv_channels must be positive");
    if (cnn.fc_hidden < 1) throw ConfigError("cnn.fc_hidden must be positive");
    if (!(cnn.d_max > 0)) throw ConfigError("cnn.d_max must be positive");
    if (cnn.patches_per_case < 2) throw ConfigError("cnn.patches_per_case must be at least 2");
    if (!(cnn.val_fraction > 0 && cnn.val_fraction < 1)) throw ConfigError("cnn.val_fraction must lie in (0, 1)");
    if (cnn.adam_epochs < 0 || cnn.sgd_epochs < 0 || cnn.adam_epochs + cnn.sgd_epochs < 1)
        throw ConfigError("cnn epochs must be non-negative with a positive total");
    if (cnn.patience < 1 || cnn.batch_size < 0) throw ConfigError("cnn schedule out of range");
    if (augment.copies < 0) throw ConfigError("augment.copies must be non-negative");
    if (!(augment.noise_max_hu >= 0 && augment.noise_max_hu <= 10))
        throw ConfigError("augment.noise_max_hu must lie in [0, 10]");
    if (!(augment.scale_max >= 0 && augment.scale_max <= 0.1))
        throw ConfigError("augment.scale_max must lie in [0, 0.1]");
    if (!(denoise_sigma_vox >= 0 && denoise_sigma_vox <= 3))
        throw ConfigError("denoise_sigma_vox must lie in [0, 3]");
    if (!(intensity_ref_hu >= 0 && intensity_ref_hu <= 400))
        throw ConfigError("intensity_ref_hu must lie in [0, 400]");
}

std::string PipelineConfig::to_json() const {
    const auto& s = radiomics.sampler;
    json j = {
        {"format", "livseg.pipeline_config"},
        {"version", 1},
        {"seed", seed},
        {"workers", workers},
        {"paths",
         {{"ct", paths.ct},
          {"p_tumor", paths.p_tumor},
          {"p_liver", paths.p_liver},
          {"truth", paths.truth},
          {"liver", paths.liver},
          {"output_dir", paths.output_dir},
          {"forest_model", paths.forest_model},
          {"cnn_model", paths.cnn_model}}},
        {"stages",
         {{"morph", stages.morph},
          {"temporal", stages.temporal},
          {"radiomics_filter", stages.radiomics_filter},
          {"cnn_refine", stages.cnn_refine}}},
        {"binarize",
         {{"mode", threshold_mode == postproc::ThresholdMode::OtsuPerVolume ? "otsu" : "fixed"},
          {"fixed_tau", fixed_tau}}},
        {"temporal", {{"suppress_isolated", suppress_isolated}}},
        {"radiomics",
         {{"tau_rf", radiomics.tau_rf},
          {"n_trees", radiomics.n_trees},
          {"feature_selection", radiomics.feature_selection},
          {"top_k", radiomics.top_k},
          {"target", radiomics.target},
          {"sampler",
           {{"r_min", s.r_min},
            {"r_step", s.r_step},
            {"r_max", s.r_max},
            {"quota_total", s.quota_total},
            {"boundary_fraction", s.boundary_fraction},
            {"max_retries", s.max_retries},
            {"reject_outside_liver", s.reject_outside_liver},
            {"reject_tumor_fraction", s.reject_tumor_fraction}}}}},
        {"cnn",
         {{"patch_size", cnn.patch_size},
          {"conv_channels", cnn.conv_channels},
          {"fc_hidden", cnn.fc_hidden},
          {"d_max", cnn.d_max},
          {"patches_per_case", cnn.patches_per_case},
          {"val_fraction", cnn.val_fraction},
          {"adam_epochs", cnn.adam_epochs},
          {"sgd_epochs", cnn.sgd_epochs},
          {"patience", cnn.patience},
          {"batch_size", cnn.batch_size}}},
        {"augment",
         {{"copies", augment.copies}, {"noise_max_hu", augment.noise_max_hu}, {"scale_max", augment.scale_max}}},
        {"denoise_sigma_vox", denoise_sigma_vox},
        {"intensity_ref_hu", intensity_ref_hu}};
    return j.dump(2);
}

PipelineConfig PipelineConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    reject_unknown(j, {"format", "version", "seed", "workers", "paths", "stages", "binarize", "temporal", "radiomics", "cnn",
                        "augment", "denoise_sigma_vox", "intensity_ref_hu"},
                   "config");
    if (j.value("format", "livseg.pipeline_config") != "livseg.pipeline_config")
        throw ConfigError("config format must be livseg.pipeline_config");
    if (j.value("version", 1) != 1) throw ConfigError("unsupported config version");
    PipelineConfig c;
    read(j, "seed", c.seed, "config");
    read(j, "workers", c.workers, "config");
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        reject_unknown(p, {"ct", "p_tumor", "p_liver", "truth", "liver", "output_dir", "forest_model", "cnn_model"},
                       "paths");
        read(p, "ct", c.paths.ct, "paths");
        read(p, "p_tumor", c.paths.p_tumor, "paths");
        read(p, "p_liver", c.paths.p_liver, "paths");
        read(p, "truth", c.paths.truth, "paths");
        read(p, "liver", c.paths.liver, "paths");
        read(p, "output_dir", c.paths.output_dir, "paths");
        read(p, "forest_model", c.paths.forest_model, "paths");
        read(p, "cnn_model", c.paths.cnn_model, "paths");
    }
    if (j.contains("stages")) {
        const auto& s = j["stages"];
        reject_unknown(s, {"morph", "temporal", "radiomics_filter", "cnn_refine"}, "stages");
        read(s, "morph", c.stages.morph, "stages");
        read(s, "temporal", c.stages.temporal, "stages");
        read(s, "radiomics_filter", c.stages.radiomics_filter, "stages");
        read(s, "cnn_refine", c.stages.cnn_refine, "stages");
    }
    if (j.contains("binarize")) {
        const auto& b = j["binarize"];
        reject_unknown(b, {"mode", "fixed_tau"}, "binarize");
        std::string mode = "otsu";
        read(b, "mode", mode, "binarize");
        if (mode == "otsu")
            c.threshold_mode = postproc::ThresholdMode::OtsuPerVolume;
        else if (mode == "fixed")
            c.threshold_mode = postproc::ThresholdMode::Fixed;
        else
            throw ConfigError("binarize.mode must be 'otsu' or 'fixed'");
        read(b, "fixed_tau", c.fixed_tau, "binarize");
    }
    if (j.contains("temporal")) {
        reject_unknown(j["temporal"], {"suppress_isolated"}, "temporal");
        read(j["temporal"], "suppress_isolated", c.suppress_isolated, "temporal");
    }
    if (j.contains("radiomics")) {
        const auto& r = j["radiomics"];
        reject_unknown(r, {"tau_rf", "n_trees", "feature_selection", "top_k", "target", "sampler"}, "radiomics");
        read(r, "tau_rf", c.radiomics.tau_rf, "radiomics");
        read(r, "n_trees", c.radiomics.n_trees, "radiomics");
        read(r, "feature_selection", c.radiomics.feature_selection, "radiomics");
        read(r, "top_k", c.radiomics.top_k, "radiomics");
        read(r, "target", c.radiomics.target, "radiomics");
        if (r.contains("sampler")) {
            const auto& s = r["sampler"];
            auto& o = c.radiomics.sampler;
            reject_unknown(s, {"r_min", "r_step", "r_max", "quota_total", "boundary_fraction", "max_retries",
                               "reject_outside_liver", "reject_tumor_fraction"},
                           "radiomics.sampler");
            read(s, "r_min", o.r_min, "radiomics.sampler");
            read(s, "r_step", o.r_step, "radiomics.sampler");
            read(s, "r_max", o.r_max, "radiomics.sampler");
            read(s, "quota_total", o.quota_total, "radiomics.sampler");
            read(s, "boundary_fraction", o.boundary_fraction, "radiomics.sampler");
            read(s, "max_retries", o.max_retries, "radiomics.sampler");
            read(s, "reject_outside_liver", o.reject_outside_liver, "radiomics.sampler");
            read(s, "reject_tumor_fraction", o.reject_tumor_fraction, "radiomics.sampler");
        }
    }
    if (j.contains("cnn")) {
        const auto& n = j["cnn"];
        reject_unknown(n, {"patch_size", "conv_channels", "fc_hidden", "d_max", "patches_per_case", "val_fraction",
                           "adam_epochs", "sgd_epochs", "patience", "batch_size"},
                       "cnn");
        read(n, "patch_size", c.cnn.patch_size, "cnn");
        read(n, "conv_channels", c.cnn.conv_channels, "cnn");
        read(n, "fc_hidden", c.cnn.fc_hidden, "cnn");
        read(n, "d_max", c.cnn.d_max, "cnn");
        read(n, "patches_per_case", c.cnn.patches_per_case, "cnn");
        read(n, "val_fraction", c.cnn.val_fraction, "cnn");
        read(n, "adam_epochs", c.cnn.adam_epochs, "cnn");
        read(n, "sgd_epochs", c.cnn.sgd_epochs, "cnn");
        read(n, "patience", c.cnn.patience, "cnn");
        read(n, "batch_size", c.cnn.batch_size, "cnn");
    }
    if (j.contains("augment")) {
        const auto& a = j["augment"];
        reject_unknown(a, {"copies", "noise_max_hu", "scale_max"}, "augment");
        read(a, "copies", c.augment.copies, "augment");
        read(a, "noise_max_hu", c.augment.noise_max_hu, "augment");
        read(a, "scale_max", c.augment.scale_max, "augment");
    }
    read(j, "denoise_sigma_vox", c.denoise_sigma_vox, "config");
    read(j, "intensity_ref_hu", c.intensity_ref_hu, "config");
    c.validate();
    return c;
}

std::string PipelineConfig::hash() const {
    const std::string canonical = json::parse(to_json()).dump();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical)));
    return buf;
}

} // namespace livseg::pipeline
