#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "livseg/eval/metrics.hpp"
#include "livseg/featsel/featsel.hpp"
#include "livseg/neural/band.hpp"
#include "livseg/phantom/phantom.hpp"
#include "livseg/pipeline/pipeline.hpp"
#include "livseg/postproc/postproc.hpp"
#include "livseg/radiomics/features.hpp"
#include "livseg/radiomics/manifest.hpp"
#include "livseg/radiomics/region.hpp"
#include "livseg/radiomics/sampler.hpp"
#include "livseg/volumes/io.hpp"
#include "livseg/volumes/preprocess.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace livseg;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitStage = 3;

// One JSON object per line on stderr.
void log_event(const std::string& level, const std::string& event, json fields = json::object()) {
    fields["level"] = level;
    fields["event"] = event;
    std::cerr << fields.dump() << '\n';
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw pipeline::ConfigError("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    out << text;
}

void require_file(const std::string& p, const std::string& what) {
    if (!p.empty() && !fs::exists(p)) throw pipeline::ConfigError(what + " does not exist: " + p);
}

// Case directory layout shared by the phantom writer and the readers.
struct CaseFiles {
    static constexpr const char* ct = "ct.mhd";
    static constexpr const char* p_tumor = "p_tumor.mhd";
    static constexpr const char* p_liver = "p_liver.mhd";
    static constexpr const char* tumor = "tumor.mhd";
    static constexpr const char* liver = "liver.mhd";
    static constexpr const char* vessels = "vessels.mhd";
    static constexpr const char* spec = "spec.json";
};

pipeline::CaseData load_case_dir(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw pipeline::ConfigError("case directory does not exist: " + dir.string());
    for (const char* f : {CaseFiles::ct, CaseFiles::p_tumor})
        if (!fs::exists(dir / f)) throw pipeline::ConfigError("case " + dir.string() + " lacks " + f);
    pipeline::CaseData c;
    c.id = dir.filename().string();
    if (c.id.empty()) c.id = dir.parent_path().filename().string();
    c.ct = volumes::load_volume(dir / CaseFiles::ct);
    c.p_tumor = volumes::load_probmap(dir / CaseFiles::p_tumor);
    if (fs::exists(dir / CaseFiles::tumor)) c.truth = volumes::load_mask(dir / CaseFiles::tumor);
    if (fs::exists(dir / CaseFiles::liver)) c.liver = volumes::load_mask(dir / CaseFiles::liver);
    if (fs::exists(dir / CaseFiles::p_liver)) c.p_liver = volumes::load_probmap(dir / CaseFiles::p_liver);
    return c;
}

void write_phantom(const phantom::PhantomSpec& spec, const fs::path& dir) {
    const auto p = phantom::generate_phantom(spec);
    fs::create_directories(dir);
    volumes::save_volume(p.ct, dir / CaseFiles::ct);
    volumes::save_volume(p.p_tumor, dir / CaseFiles::p_tumor);
    volumes::save_volume(p.p_liver, dir / CaseFiles::p_liver);
    volumes::save_volume(p.tumor, dir / CaseFiles::tumor);
    volumes::save_volume(p.liver, dir / CaseFiles::liver);
    volumes::save_volume(p.vessels, dir / CaseFiles::vessels);
    write_text(dir / CaseFiles::spec, spec.to_json());
}

std::vector<pipeline::CaseData> phantom_cases(std::size_t n, std::uint64_t seed, const std::string& prefix) {
    std::vector<pipeline::CaseData> out;
    const auto specs = phantom::phantom_suite(n, seed);
    for (std::size_t i = 0; i < specs.size(); ++i)
        out.push_back(pipeline::case_from_phantom(phantom::generate_phantom(specs[i]), prefix + std::to_string(i)));
    return out;
}

std::vector<int> read_labels(const fs::path& p) {
    std::istringstream in(read_text(p));
    std::vector<int> y;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        try {
            y.push_back(std::stoi(line));
        } catch (const std::exception&) {
            throw pipeline::ConfigError("label file " + p.string() + " has a non-integer line: " + line);
        }
    }
    return y;
}

// Flags that mirror config keys; unset flags leave the file value alone.
struct ConfigFlags {
    std::string file;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> ct, p_tumor, p_liver, truth, liver, out, forest, cnn;
    std::optional<bool> morph, temporal, radiomics_filter, cnn_refine, suppress_isolated, feature_selection;
    std::optional<std::string> mode;
    std::optional<int> fixed_tau;
    std::optional<double> tau_rf;
    std::optional<int> n_trees;
    std::optional<int> patch_size, adam_epochs, sgd_epochs, patches_per_case;
    std::optional<double> d_max;
    std::optional<int> augment_copies;
    std::optional<double> denoise, ref_hu;

    void attach(CLI::App* app, bool with_paths) {
        app->add_option("--config", file, "JSON config file");
        app->add_option("--seed", seed, "master seed");
        app->add_option("--workers", workers, "worker threads");
        if (with_paths) {
            app->add_option("--ct", ct, "CT volume (HU)");
            app->add_option("--p-tumor", p_tumor, "tumor probability map");
            app->add_option("--p-liver", p_liver, "liver probability map");
            app->add_option("--truth", truth, "tumor ground truth");
            app->add_option("--liver", liver, "liver mask");
        }
        app->add_option("--out", out, "output directory");
        app->add_option("--forest", forest, "forest model (JSON)");
        app->add_option("--cnn", cnn, "CNN model");
        app->add_option("--morph", morph, "enable morphological smoothing");
        app->add_option("--temporal", temporal, "enable the temporal rule");
        app->add_option("--radiomics-filter", radiomics_filter, "enable the radiomics filter");
        app->add_option("--cnn-refine", cnn_refine, "enable CNN boundary refinement");
        app->add_option("--suppress-isolated", suppress_isolated, "temporal rule also removes isolated voxels");
        app->add_option("--feature-selection", feature_selection, "stable feature selection before the forest");
        app->add_option("--mode", mode, "binarization: otsu or fixed");
        app->add_option("--fixed-tau", fixed_tau, "fixed threshold level 0..254");
        app->add_option("--tau-rf", tau_rf, "forest probability threshold");
        app->add_option("--trees", n_trees, "forest size");
        app->add_option("--patch-size", patch_size, "CNN patch edge");
        app->add_option("--adam-epochs", adam_epochs, "CNN Adam epochs");
        app->add_option("--sgd-epochs", sgd_epochs, "CNN SGD epochs");
        app->add_option("--patches-per-case", patches_per_case, "CNN training patches per case");
        app->add_option("--d-max", d_max, "band half-width in voxels");
        app->add_option("--augment-copies", augment_copies, "perturbed copies per training case");
        app->add_option("--denoise", denoise, "Gaussian sigma in voxels before the model stages");
        app->add_option("--ref-hu", ref_hu, "target liver median in HU before windowing (0 disables)");
    }

    pipeline::PipelineConfig resolve() const {
        pipeline::PipelineConfig c;
        if (!file.empty()) c = pipeline::PipelineConfig::from_json(read_text(file));
        auto set = [](auto& dst, const auto& src) {
            if (src) dst = *src;
        };
        set(c.seed, seed);
        set(c.workers, workers);
        set(c.paths.ct, ct);
        set(c.paths.p_tumor, p_tumor);
        set(c.paths.p_liver, p_liver);
        set(c.paths.truth, truth);
        set(c.paths.liver, liver);
        set(c.paths.output_dir, out);
        set(c.paths.forest_model, forest);
        set(c.paths.cnn_model, cnn);
        set(c.stages.morph, morph);
        set(c.stages.temporal, temporal);
        set(c.stages.radiomics_filter, radiomics_filter);
        set(c.stages.cnn_refine, cnn_refine);
        set(c.suppress_isolated, suppress_isolated);
        set(c.radiomics.feature_selection, feature_selection);
        if (mode) {
            if (*mode == "otsu")
                c.threshold_mode = postproc::ThresholdMode::OtsuPerVolume;
            else if (*mode == "fixed")
                c.threshold_mode = postproc::ThresholdMode::Fixed;
            else
                throw pipeline::ConfigError("--mode must be otsu or fixed");
        }
        set(c.fixed_tau, fixed_tau);
        set(c.radiomics.tau_rf, tau_rf);
        set(c.radiomics.n_trees, n_trees);
        set(c.cnn.patch_size, patch_size);
        set(c.cnn.adam_epochs, adam_epochs);
        set(c.cnn.sgd_epochs, sgd_epochs);
        set(c.cnn.patches_per_case, patches_per_case);
        set(c.cnn.d_max, d_max);
        set(c.augment.copies, augment_copies);
        set(c.denoise_sigma_vox, denoise);
        set(c.intensity_ref_hu, ref_hu);
        c.validate();
        for (const auto& [p, what] : {std::pair{c.paths.ct, "paths.ct"},
                                      {c.paths.p_tumor, "paths.p_tumor"},
                                      {c.paths.p_liver, "paths.p_liver"},
                                      {c.paths.truth, "paths.truth"},
                                      {c.paths.liver, "paths.liver"},
                                      {c.paths.forest_model, "paths.forest_model"},
                                      {c.paths.cnn_model, "paths.cnn_model"}})
            require_file(p, what);
        return c;
    }
};

std::vector<pipeline::CaseData> load_case_dirs(const std::vector<std::string>& dirs) {
    std::vector<pipeline::CaseData> out;
    for (const auto& d : dirs) out.push_back(load_case_dir(d));
    return out;
}

json history_json(const neural::TrainResult& r) {
    return {{"epochs", r.history.size()}, {"best_epoch", r.best_epoch}, {"stop_reason", r.stop_reason}};
}

int cmd_phantom(std::uint64_t seed, std::size_t count, const std::string& spec_file, const std::string& out) {
    if (!spec_file.empty()) {
        const auto spec = phantom::PhantomSpec::from_json(read_text(spec_file));
        write_phantom(spec, out);
        log_event("info", "phantom.written", {{"dir", out}});
        return 0;
    }
    const auto specs = phantom::phantom_suite(count, seed);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "case%03zu", i);
        write_phantom(specs[i], fs::path(out) / name);
        log_event("info", "phantom.written", {{"dir", (fs::path(out) / name).string()}, {"lesions", specs[i].lesions.size()}});
    }
    return 0;
}

int cmd_pipeline(const ConfigFlags& flags, const std::vector<std::string>& case_dirs,
                 const std::vector<std::string>& train_dirs, std::size_t phantom_test, std::size_t phantom_train,
                 bool write_masks) {
    const auto config = flags.resolve();
    const auto hash = config.hash();
    log_event("info", "config.loaded", {{"hash", hash}, {"seed", config.seed}, {"workers", config.workers}});

    std::vector<pipeline::CaseData> cases;
    if (phantom_test > 0) {
        cases = phantom_cases(phantom_test, pipeline::fnv1a("test") ^ config.seed, "test");
    } else if (!case_dirs.empty()) {
        cases = load_case_dirs(case_dirs);
    } else {
        if (config.paths.ct.empty() || config.paths.p_tumor.empty())
            throw pipeline::ConfigError("pipeline needs paths.ct and paths.p_tumor, --case or --phantom-test");
        pipeline::CaseData c;
        c.id = fs::path(config.paths.ct).stem().string();
        c.ct = volumes::load_volume(config.paths.ct);
        c.p_tumor = volumes::load_probmap(config.paths.p_tumor);
        if (!config.paths.truth.empty()) c.truth = volumes::load_mask(config.paths.truth);
        if (!config.paths.liver.empty()) c.liver = volumes::load_mask(config.paths.liver);
        if (!config.paths.p_liver.empty()) c.p_liver = volumes::load_probmap(config.paths.p_liver);
        cases.push_back(std::move(c));
    }

    pipeline::Models models;
    if (!config.paths.forest_model.empty())
        models.forest = ensemble::ForestModel::from_json(read_text(config.paths.forest_model));
    if (!config.paths.cnn_model.empty()) models.cnn = neural::load_model(config.paths.cnn_model);
    const bool need_forest = config.stages.radiomics_filter && !models.forest;
    const bool need_cnn = config.stages.cnn_refine && !models.cnn;
    if (need_forest || need_cnn) {
        std::vector<pipeline::CaseData> train;
        if (phantom_train > 0)
            train = phantom_cases(phantom_train, pipeline::fnv1a("train") ^ config.seed, "train");
        else if (!train_dirs.empty())
            train = load_case_dirs(train_dirs);
        else
            throw pipeline::ConfigError("enabled stages need a model path, --train-case or --phantom-train");
        const fs::path out = config.paths.output_dir;
        if (need_forest) {
            auto t = pipeline::train_forest_stage(train, config);
            log_event("info", "train.forest", {{"positives", t.positives}, {"negatives", t.negatives}, {"features", t.selected}});
            if (!out.empty()) write_text(out / "forest.json", t.model.to_json());
            models.forest = std::move(t.model);
        }
        if (need_cnn) {
            auto t = pipeline::train_cnn_stage(train, config);
            log_event("info", "train.cnn", history_json(t));
            if (!out.empty()) {
                fs::create_directories(out);
                neural::save_model(t.model, (out / "cnn.bin").string());
                write_text(out / "cnn_history.csv", neural::history_to_csv(t.history));
            }
            models.cnn = std::move(t.model);
        }
    }

    const auto suite = pipeline::run_suite(cases, config, models);
    for (const auto& r : suite.cases) {
        json stages = json::array();
        for (const auto& s : r.stages)
            stages.push_back({{"stage", s.stage}, {"executed", s.executed}, {"foreground", s.foreground}});
        json f = {{"case", r.id}, {"stages", stages}};
        if (r.metrics) f["dice"] = r.metrics->dice;
        log_event("info", "case.done", f);
    }
    const std::string manifest = pipeline::run_manifest(config, suite.cases);
    if (!config.paths.output_dir.empty()) {
        const fs::path out = config.paths.output_dir;
        fs::create_directories(out);
        write_text(out / "manifest.json", manifest);
        write_text(out / "config.json", config.to_json());
        if (!suite.report.cases.empty()) {
            write_text(out / "metrics.csv", suite.report.to_csv());
            write_text(out / "metrics.json", suite.report.to_json());
        }
        if (write_masks)
            for (const auto& r : suite.cases) volumes::save_volume(r.mask, out / (r.id + "_mask.mhd"));
        log_event("info", "outputs.written", {{"dir", out.string()}});
    } else {
        std::cout << manifest << '\n';
    }
    if (!suite.report.cases.empty())
        log_event("info", "suite.done", {{"mean_dice", suite.report.dice.mean}, {"cases", suite.cases.size()}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Liver tumor segmentation refinement toolkit"};
    app.require_subcommand(1);

    // phantom
    auto* ph = app.add_subcommand("phantom", "write synthetic cases");
    std::uint64_t ph_seed = 0;
    std::size_t ph_count = 1;
    std::string ph_spec, ph_out;
    ph->add_option("--seed", ph_seed, "suite seed");
    ph->add_option("--count", ph_count, "number of cases");
    ph->add_option("--spec", ph_spec, "single case from a phantom spec JSON")->check(CLI::ExistingFile);
    ph->add_option("--out", ph_out, "output directory")->required();

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "liver intensity standardization, denoising, resampling and HU windowing to 0..255");
    std::string pre_in, pre_out;
    double pre_spacing = 0.0;
    pre->add_option("--in", pre_in, "HU volume")->required()->check(CLI::ExistingFile);
    pre->add_option("--out", pre_out, "output volume")->required();
    pre->add_option("--spacing", pre_spacing, "isotropic resampling in mm (0 keeps the grid)");
    std::string pre_pliver;
    const pipeline::PipelineConfig pre_defaults;
    double pre_denoise = pre_defaults.denoise_sigma_vox, pre_ref = pre_defaults.intensity_ref_hu;
    pre->add_option("--p-liver", pre_pliver, "liver probability map; its >= 0.5 region sets the intensity reference")
        ->check(CLI::ExistingFile);
    pre->add_option("--ref-hu", pre_ref, "target liver median in HU (0 disables)")->check(CLI::Range(0.0, 400.0));
    pre->add_option("--denoise", pre_denoise, "Gaussian sigma in voxels (0 disables)")->check(CLI::Range(0.0, 3.0));

    // postproc
    auto* pp = app.add_subcommand("postproc", "binarize, smooth and apply the temporal rule");
    std::string pp_prob, pp_out, pp_mode = "otsu";
    int pp_tau = 127;
    bool pp_morph = true, pp_temporal = true, pp_suppress = false;
    pp->add_option("--prob", pp_prob, "tumor probability map")->required()->check(CLI::ExistingFile);
    pp->add_option("--out", pp_out, "output mask")->required();
    pp->add_option("--mode", pp_mode, "otsu or fixed")->check(CLI::IsMember({"otsu", "fixed"}));
    pp->add_option("--fixed-tau", pp_tau, "fixed threshold level");
    pp->add_option("--morph", pp_morph, "apply morphological smoothing");
    pp->add_option("--temporal", pp_temporal, "apply the temporal rule");
    pp->add_option("--suppress-isolated", pp_suppress, "temporal rule also removes isolated voxels");

    // sample
    auto* sa = app.add_subcommand("sample", "sample negative liver regions and write their features");
    std::string sa_ct, sa_liver, sa_tumor, sa_out, sa_regions;
    radiomics::SamplerConfig sa_cfg = pipeline::default_pipeline_sampler();
    int sa_workers = 1;
    sa->add_option("--ct", sa_ct, "CT volume")->required()->check(CLI::ExistingFile);
    sa->add_option("--liver", sa_liver, "liver mask")->required()->check(CLI::ExistingFile);
    sa->add_option("--tumor", sa_tumor, "tumor mask")->required()->check(CLI::ExistingFile);
    sa->add_option("--out", sa_out, "feature CSV")->required();
    sa->add_option("--regions", sa_regions, "region summary JSON");
    sa->add_option("--seed", sa_cfg.seed, "sampler seed");
    sa->add_option("--quota", sa_cfg.quota_total, "total regions");
    sa->add_option("--r-min", sa_cfg.r_min, "smallest radius");
    sa->add_option("--r-max", sa_cfg.r_max, "largest radius");
    sa->add_option("--r-step", sa_cfg.r_step, "radius step");
    sa->add_option("--workers", sa_workers, "worker threads");

    // features
    auto* fe = app.add_subcommand("features", "radiomics features of each connected component");
    std::string fe_ct, fe_mask, fe_out;
    int fe_workers = 1;
    fe->add_option("--ct", fe_ct, "CT volume")->required()->check(CLI::ExistingFile);
    fe->add_option("--mask", fe_mask, "candidate mask")->required()->check(CLI::ExistingFile);
    fe->add_option("--out", fe_out, "feature CSV")->required();
    fe->add_option("--workers", fe_workers, "worker threads");

    // select
    auto* se = app.add_subcommand("select", "rank features with six strategies and pick a stable subset");
    std::string se_features, se_labels, se_out;
    std::size_t se_top_k = 30, se_target = 20;
    std::uint64_t se_seed = 0;
    int se_workers = 1;
    se->add_option("--features", se_features, "feature CSV")->required()->check(CLI::ExistingFile);
    se->add_option("--labels", se_labels, "one 0/1 label per row")->required()->check(CLI::ExistingFile);
    se->add_option("--out", se_out, "selection JSON")->required();
    se->add_option("--top-k", se_top_k, "per-strategy top set size");
    se->add_option("--target", se_target, "final subset size");
    se->add_option("--seed", se_seed, "seed");
    se->add_option("--workers", se_workers, "worker threads");

    // train-rf / train-cnn
    auto* trf = app.add_subcommand("train-rf", "train the candidate forest on case directories");
    ConfigFlags trf_flags;
    std::vector<std::string> trf_cases;
    std::string trf_model;
    trf_flags.attach(trf, false);
    trf->add_option("--case", trf_cases, "training case directories")->required();
    trf->add_option("--model", trf_model, "output forest JSON")->required();

    auto* tcn = app.add_subcommand("train-cnn", "train the boundary CNN on case directories");
    ConfigFlags tcn_flags;
    std::vector<std::string> tcn_cases;
    std::string tcn_model, tcn_history;
    tcn_flags.attach(tcn, false);
    tcn->add_option("--case", tcn_cases, "training case directories")->required();
    tcn->add_option("--model", tcn_model, "output CNN model")->required();
    tcn->add_option("--history", tcn_history, "epoch history CSV");

    // refine
    auto* rf = app.add_subcommand("refine", "relabel the boundary band with a CNN");
    std::string rf_ct, rf_mask, rf_model, rf_out;
    double rf_dmax = neural::kDefaultBandWidth;
    int rf_workers = 1;
    rf->add_option("--ct", rf_ct, "CT volume")->required()->check(CLI::ExistingFile);
    rf->add_option("--mask", rf_mask, "tumor mask")->required()->check(CLI::ExistingFile);
    rf->add_option("--cnn", rf_model, "CNN model")->required()->check(CLI::ExistingFile);
    rf->add_option("--out", rf_out, "refined mask")->required();
    rf->add_option("--d-max", rf_dmax, "band half-width in voxels");
    rf->add_option("--workers", rf_workers, "worker threads");

    // eval
    auto* ev = app.add_subcommand("eval", "overlap metrics against ground truth");
    std::vector<std::string> ev_pred, ev_truth;
    std::string ev_csv, ev_json;
    ev->add_option("--pred", ev_pred, "predicted masks")->required()->check(CLI::ExistingFile);
    ev->add_option("--truth", ev_truth, "ground-truth masks, same order")->required()->check(CLI::ExistingFile);
    ev->add_option("--csv", ev_csv, "metrics CSV");
    ev->add_option("--json", ev_json, "metrics JSON (stdout when omitted)");

    // pipeline
    auto* pl = app.add_subcommand("pipeline", "run all enabled stages and write a run manifest");
    ConfigFlags pl_flags;
    std::vector<std::string> pl_cases, pl_train;
    std::size_t pl_phantom_test = 0, pl_phantom_train = 0;
    bool pl_masks = true;
    pl_flags.attach(pl, true);
    pl->add_option("--case", pl_cases, "case directories to segment");
    pl->add_option("--train-case", pl_train, "case directories for training missing models");
    pl->add_option("--phantom-test", pl_phantom_test, "segment this many generated cases");
    pl->add_option("--phantom-train", pl_phantom_train, "train missing models on this many generated cases");
    pl->add_option("--write-masks", pl_masks, "write the final mask of each case");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*ph) return cmd_phantom(ph_seed, ph_count, ph_spec, ph_out);

        if (*pre) {
            auto v = volumes::load_volume(pre_in);
            if (v.kind() != volumes::ValueKind::HuFloat) throw pipeline::ConfigError("preprocess expects an HU volume");
            if (!pre_pliver.empty() && pre_ref > 0) {
                const auto p = volumes::load_probmap(pre_pliver);
                volumes::Mask3D region(p.grid());
                for (std::size_t i = 0; i < p.size(); ++i) region.set(i, p[i] >= 0.5f);
                v = volumes::standardize_intensity(v, region, pre_ref);
            }
            v = volumes::gaussian_smooth(v, pre_denoise);
            if (pre_spacing > 0) v = volumes::resample_isotropic(v, pre_spacing);
            v = volumes::clip_rescale_hu(v);
            volumes::save_volume(v, pre_out);
            log_event("info", "preprocess.done", {{"out", pre_out}});
            return 0;
        }

        if (*pp) {
            const auto p = volumes::load_probmap(pp_prob);
            const auto mode = pp_mode == "otsu" ? postproc::ThresholdMode::OtsuPerVolume : postproc::ThresholdMode::Fixed;
            auto b = postproc::binarize(p, mode, pp_tau);
            log_event("info", "binarize", {{"tau", b.threshold}});
            auto m = std::move(b.mask);
            if (pp_morph) m = postproc::morph_smooth(m);
            if (pp_temporal) m = postproc::temporal_refine(m, p, pp_suppress);
            volumes::save_volume(m, pp_out);
            log_event("info", "postproc.done", {{"out", pp_out}});
            return 0;
        }

        if (*sa) {
            const auto ct = volumes::load_volume(sa_ct);
            const auto norm = ct.kind() == volumes::ValueKind::HuFloat ? volumes::clip_rescale_hu(ct) : ct;
            const auto res = radiomics::sample_negative_regions(norm, volumes::load_mask(sa_liver),
                                                                volumes::load_mask(sa_tumor), sa_cfg);
            for (const auto& w : res.warnings)
                log_event("warning", "sampler", {{"radius", w.radius}, {"slot", w.slot}, {"message", w.message}});
            std::vector<radiomics::CandidateRegion> regions;
            json summary = json::array();
            for (std::size_t i = 0; i < res.regions.size(); ++i) {
                const auto& r = res.regions[i];
                regions.push_back(r.region);
                regions.back().id = static_cast<int>(i);
                summary.push_back({{"id", i},
                                   {"radius", r.radius},
                                   {"kind", r.kind == radiomics::SeedKind::Boundary ? "boundary" : "interior"},
                                   {"seed_voxel", r.seed_voxel},
                                   {"voxels", r.region.voxels.size()}});
            }
            const auto rows = radiomics::extract_all(regions, norm, sa_workers);
            write_text(sa_out, radiomics::features_to_csv(radiomics::FeatureManifest::standard(), rows));
            if (!sa_regions.empty()) write_text(sa_regions, summary.dump(2));
            log_event("info", "sample.done", {{"regions", regions.size()}});
            return 0;
        }

        if (*fe) {
            const auto ct = volumes::load_volume(fe_ct);
            const auto norm = ct.kind() == volumes::ValueKind::HuFloat ? volumes::clip_rescale_hu(ct) : ct;
            const auto regions = radiomics::extract_candidate_regions(volumes::load_mask(fe_mask));
            const auto rows = radiomics::extract_all(regions, norm, fe_workers);
            write_text(fe_out, radiomics::features_to_csv(radiomics::FeatureManifest::standard(), rows));
            log_event("info", "features.done", {{"regions", regions.size()}});
            return 0;
        }

        if (*se) {
            const auto& manifest = radiomics::FeatureManifest::standard();
            const auto rows = radiomics::features_from_csv(manifest, read_text(se_features));
            const auto y = read_labels(se_labels);
            if (y.size() != rows.size()) throw pipeline::ConfigError("label count does not match feature rows");
            if (se_target < 1 || se_top_k < se_target) throw pipeline::ConfigError("--top-k must be at least --target > 0");
            Matrix x(rows.size(), manifest.size());
            for (std::size_t i = 0; i < rows.size(); ++i)
                for (std::size_t j = 0; j < manifest.size(); ++j) x(i, j) = rows[i].values[j];
            auto keep = featsel::drop_near_zero_variance(x);
            Matrix xk(x.rows(), keep.size());
            for (std::size_t i = 0; i < x.rows(); ++i)
                for (std::size_t j = 0; j < keep.size(); ++j) xk(i, j) = x(i, keep[j]);
            const auto kept2 = featsel::drop_correlated(xk);
            std::vector<std::size_t> cols;
            for (auto k : kept2) cols.push_back(keep[k]);
            Matrix xs(x.rows(), cols.size());
            for (std::size_t i = 0; i < x.rows(); ++i)
                for (std::size_t j = 0; j < cols.size(); ++j) xs(i, j) = x(i, cols[j]);
            const auto z = featsel::fit_apply_standardize(xs);
            featsel::RankingOptions opt;
            opt.workers = se_workers;
            opt.keep = se_top_k;
            std::vector<featsel::FeatureRanking> rankings;
            for (auto s : {featsel::Strategy::Rfe, featsel::Strategy::Lasso, featsel::Strategy::RfImportance,
                           featsel::Strategy::XgbGain, featsel::Strategy::GbdtFrequency, featsel::Strategy::ReliefF})
                rankings.push_back(featsel::rank_features(z.train, y, s, se_seed, opt));
            const std::size_t top_k = std::min(se_top_k, cols.size());
            const auto subset = featsel::select_stable(rankings, top_k, std::min(se_target, top_k));
            json out = json::parse(featsel::to_json(rankings, subset));
            json names = json::array();
            const auto all_names = manifest.names();
            for (auto i : subset.indices) names.push_back(all_names[cols[i]]);
            out["columns"] = cols;
            out["selected_names"] = names;
            write_text(se_out, out.dump(2));
            log_event("info", "select.done", {{"candidates", cols.size()}, {"selected", subset.indices.size()}});
            return 0;
        }

        if (*trf) {
            const auto config = trf_flags.resolve();
            const auto cases = load_case_dirs(trf_cases);
            const auto t = pipeline::train_forest_stage(cases, config);
            write_text(trf_model, t.model.to_json());
            log_event("info", "train.forest", {{"positives", t.positives}, {"negatives", t.negatives}, {"features", t.selected}});
            return 0;
        }

        if (*tcn) {
            const auto config = tcn_flags.resolve();
            const auto cases = load_case_dirs(tcn_cases);
            const auto t = pipeline::train_cnn_stage(cases, config);
            if (fs::path(tcn_model).has_parent_path()) fs::create_directories(fs::path(tcn_model).parent_path());
            neural::save_model(t.model, tcn_model);
            if (!tcn_history.empty()) write_text(tcn_history, neural::history_to_csv(t.history));
            for (const auto& w : t.warnings) log_event("warning", "train.cnn", {{"message", w}});
            log_event("info", "train.cnn", history_json(t));
            return 0;
        }

        if (*rf) {
            const auto ct = volumes::load_volume(rf_ct);
            const auto norm = ct.kind() == volumes::ValueKind::HuFloat ? volumes::clip_rescale_hu(ct) : ct;
            const auto model = neural::load_model(rf_model);
            const auto m = neural::refine_labels(volumes::load_mask(rf_mask), norm, model, model.patch_size(), rf_dmax,
                                                 rf_workers);
            volumes::save_volume(m, rf_out);
            log_event("info", "refine.done", {{"out", rf_out}});
            return 0;
        }

        if (*ev) {
            if (ev_pred.size() != ev_truth.size()) throw pipeline::ConfigError("--pred and --truth counts differ");
            std::vector<eval::CaseMetrics> cases;
            for (std::size_t i = 0; i < ev_pred.size(); ++i)
                cases.push_back(eval::compute_metrics(volumes::load_mask(ev_pred[i]), volumes::load_mask(ev_truth[i]),
                                                      fs::path(ev_pred[i]).stem().string()));
            const auto report = eval::MetricsReport::from_cases(std::move(cases));
            if (!ev_csv.empty()) write_text(ev_csv, report.to_csv());
            if (!ev_json.empty())
                write_text(ev_json, report.to_json());
            else
                std::cout << report.to_json() << '\n';
            return 0;
        }

        if (*pl) return cmd_pipeline(pl_flags, pl_cases, pl_train, pl_phantom_test, pl_phantom_train, pl_masks);
    } catch (const pipeline::ConfigError& e) {
        log_event("error", "config", {{"message", e.what()}});
        return kExitConfig;
    } catch (const pipeline::StageError& e) {
        log_event("error", "stage", {{"stage", e.stage()}, {"message", e.what()}});
        return kExitStage;
    } catch (const std::exception& e) {
        log_event("error", "stage", {{"message", e.what()}});
        return kExitStage;
    }
    return 0;
}
