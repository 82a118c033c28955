#include "livseg/pipeline/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <random>

#include "json.hpp"
#include "livseg/core/parallel.hpp"
#include "livseg/core/rng.hpp"
#include "livseg/featsel/featsel.hpp"
#include "livseg/ensemble/suppress.hpp"
#include "livseg/neural/band.hpp"
#include "livseg/phantom/phantom.hpp"
#include "livseg/postproc/postproc.hpp"
#include "livseg/radiomics/features.hpp"
#include "livseg/radiomics/manifest.hpp"
#include "livseg/radiomics/region.hpp"
#include "livseg/volumes/components.hpp"
#include "livseg/volumes/preprocess.hpp"

namespace livseg::pipeline {

using volumes::Mask3D;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

StageRecord record(const std::string& name, bool executed, double secs, const Mask3D& m) {
    StageRecord r;
    r.stage = name;
    r.executed = executed;
    r.seconds = secs;
    r.foreground = m.count();
    r.components = volumes::connected_components(m, volumes::Connectivity::TwentySix).components.size();
    r.mask = m;
    return r;
}

// Runs fn, converting any library error into a StageError for `stage`.
template <class F>
auto guarded(const std::string& stage, F&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

Mask3D pre_filter_mask(const CaseData& d, const PipelineConfig& c) {
    Mask3D m = postproc::binarize(d.p_tumor, c.threshold_mode, c.fixed_tau).mask;
    if (c.stages.morph) m = postproc::morph_smooth(m);
    if (c.stages.temporal) m = postproc::temporal_refine(m, d.p_tumor, c.suppress_isolated);
    return m;
}

std::vector<std::size_t> feature_columns(const std::vector<std::string>& names) {
    const auto& manifest = radiomics::FeatureManifest::standard();
    std::vector<std::size_t> cols;
    for (const auto& n : names) cols.push_back(manifest.index_of(n));
    return cols;
}

Matrix feature_matrix(const std::vector<radiomics::FeatureVector>& rows) {
    Matrix x;
    for (const auto& r : rows) x.append_row(r.values);
    return x;
}

} // namespace

CaseData case_from_phantom(const phantom::Phantom& p, std::string id) {
    return {std::move(id), p.ct, p.p_tumor, p.tumor, p.liver, p.p_liver};
}

CaseResult run_case(const CaseData& data, const PipelineConfig& config, const Models& models, int workers) {
    CaseResult res;
    res.id = data.id;
    auto t0 = Clock::now();
    Mask3D m = guarded("binarize", [&] {
        volumes::require_same_grid(data.ct.grid(), data.p_tumor.grid(), "pipeline inputs");
        return postproc::binarize(data.p_tumor, config.threshold_mode, config.fixed_tau).mask;
    });
    res.stages.push_back(record("binarize", true, seconds_since(t0), m));

    t0 = Clock::now();
    if (config.stages.morph) m = guarded("morph", [&] { return postproc::morph_smooth(m); });
    res.stages.push_back(record("morph", config.stages.morph, seconds_since(t0), m));

    t0 = Clock::now();
    if (config.stages.temporal)
        m = guarded("temporal", [&] { return postproc::temporal_refine(m, data.p_tumor, config.suppress_isolated); });
    res.stages.push_back(record("temporal", config.stages.temporal, seconds_since(t0), m));

    const bool need_norm = config.stages.radiomics_filter || config.stages.cnn_refine;
    const volumes::Volume3D norm = need_norm ? guarded("preprocess", [&] {
        return model_input(data, config);
    })
                                             : volumes::Volume3D{};

    t0 = Clock::now();
    if (config.stages.radiomics_filter) {
        m = guarded("radiomics_filter", [&] {
            if (!models.forest) throw StageError("radiomics_filter", "no forest model loaded");
            const auto candidates = radiomics::extract_candidate_regions(m);
            if (candidates.empty()) return m;
            const auto& forest = *models.forest;
            const auto cols = feature_columns(forest.feature_names);
            const auto rows = radiomics::extract_all(candidates, norm, workers);
            const Matrix x = feature_matrix(rows).select_columns(cols);
            auto sup = ensemble::suppress_false_positives(m, candidates, x, forest.feature_names, forest,
                                                          config.radiomics.tau_rf);
            res.candidate_scores = sup.q;
            return sup.mask;
        });
    }
    res.stages.push_back(record("radiomics_filter", config.stages.radiomics_filter, seconds_since(t0), m));

    t0 = Clock::now();
    if (config.stages.cnn_refine) {
        m = guarded("cnn_refine", [&] {
            if (!models.cnn) throw StageError("cnn_refine", "no CNN model loaded");
            std::size_t seen = 0;
            const auto base = neural::cnn_classifier(*models.cnn, norm, workers);
            neural::VoxelClassifier counting = [&](const std::vector<std::size_t>& idx) {
                seen += idx.size();
                return base(idx);
            };
            if (models.cnn->patch_size() != config.cnn.patch_size)
                throw InvalidArgument("CNN patch size does not match the configuration");
            auto out = neural::refine_labels(m, counting, config.cnn.d_max);
            res.refined_voxels = seen;
            return out;
        });
    }
    res.stages.push_back(record("cnn_refine", config.stages.cnn_refine, seconds_since(t0), m));

    res.mask = m;
    if (data.truth) res.metrics = guarded("eval", [&] { return eval::compute_metrics(m, *data.truth, data.id); });
    return res;
}

SuiteResult run_suite(const std::vector<CaseData>& cases, const PipelineConfig& config, const Models& models) {
    SuiteResult out;
    out.cases.resize(cases.size());
    const bool parallel_cases = config.workers > 1 && cases.size() > 1;
    parallel_for(cases.size(), parallel_cases ? config.workers : 1, [&](std::size_t i) {
        out.cases[i] = run_case(cases[i], config, models, parallel_cases ? 1 : config.workers);
    });
    std::vector<eval::CaseMetrics> metrics;
    for (const auto& c : out.cases)
        if (c.metrics) metrics.push_back(*c.metrics);
    out.report = eval::MetricsReport::from_cases(std::move(metrics));
    return out;
}

volumes::Volume3D model_input(const CaseData& data, const PipelineConfig& config) {
    const auto& ct = data.ct;
    if (ct.kind() == volumes::ValueKind::Normalized8) return volumes::gaussian_smooth(ct, config.denoise_sigma_vox);
    std::optional<Mask3D> region;
    if (config.intensity_ref_hu > 0) {
        if (data.p_liver) {
            region.emplace(data.p_liver->grid());
            for (std::size_t i = 0; i < region->size(); ++i) region->set(i, (*data.p_liver)[i] >= 0.5f);
        } else if (data.liver) {
            region = *data.liver;
        }
    }
    const auto scaled = region ? volumes::standardize_intensity(ct, *region, config.intensity_ref_hu) : ct;
    return volumes::clip_rescale_hu(volumes::gaussian_smooth(scaled, config.denoise_sigma_vox));
}

std::vector<CaseData> augment_cases(const std::vector<CaseData>& cases, const PipelineConfig& config) {
    std::vector<CaseData> out = cases;
    const auto& a = config.augment;
    for (std::size_t c = 0; c < cases.size(); ++c)
        for (int k = 0; k < a.copies; ++k) {
            Rng rng = make_stream(config.seed, "pipeline.augment", {c, static_cast<std::uint64_t>(k)});
            std::uniform_real_distribution<double> u(0.0, 1.0);
            const double sigma = a.noise_max_hu * (0.5 + 0.5 * u(rng));
            const double stratum = (k + u(rng)) / a.copies;
            const double scale = 1.0 - a.scale_max + 2.0 * a.scale_max * stratum;
            CaseData d = cases[c];
            d.id += ".aug" + std::to_string(k);
            d.ct = phantom::perturb(d.ct, sigma, scale, rng());
            out.push_back(std::move(d));
        }
    return out;
}

ForestTraining train_forest_stage(const std::vector<CaseData>& input, const PipelineConfig& config) {
    return guarded("train_rf", [&] {
        const auto cases = augment_cases(input, config);
        std::vector<radiomics::CandidateRegion> regions;
        std::vector<int> labels;
        std::vector<std::size_t> case_of;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            const auto& d = cases[c];
            if (!d.truth || !d.liver) throw InvalidArgument("training case " + d.id + " lacks truth or liver mask");
            const auto norm = model_input(d, config);
            for (auto& r : radiomics::extract_positive_regions(*d.truth)) {
                regions.push_back(std::move(r));
                labels.push_back(1);
            }
            auto scfg = config.radiomics.sampler;
            scfg.seed = stream_seed(config.seed, "pipeline.sampler", {c});
            for (auto& s : radiomics::sample_negative_regions(norm, *d.liver, *d.truth, scfg).regions) {
                regions.push_back(std::move(s.region));
                labels.push_back(0);
            }
            for (auto& r : radiomics::extract_candidate_regions(pre_filter_mask(d, config))) {
                const bool hit = std::any_of(r.voxels.begin(), r.voxels.end(), [&](std::size_t i) { return d.truth->test(i); });
                regions.push_back(std::move(r));
                labels.push_back(hit ? 1 : 0);
            }
            while (case_of.size() < regions.size()) case_of.push_back(c);
        }
        // Features per case, since each case has its own volume.
        std::vector<radiomics::FeatureVector> rows(regions.size());
        for (std::size_t c = 0; c < cases.size(); ++c) {
            std::vector<std::size_t> idx;
            for (std::size_t i = 0; i < regions.size(); ++i)
                if (case_of[i] == c) idx.push_back(i);
            std::vector<radiomics::CandidateRegion> sub;
            for (auto i : idx) sub.push_back(regions[i]);
            const auto norm = model_input(cases[c], config);
            auto fv = radiomics::extract_all(sub, norm, config.workers);
            for (std::size_t k = 0; k < idx.size(); ++k) rows[idx[k]] = std::move(fv[k]);
        }
        const Matrix x = feature_matrix(rows);
        ensemble::check_binary_labels(labels, x.rows());

        const auto& names = radiomics::FeatureManifest::standard().names();
        std::vector<std::size_t> cols;
        if (config.radiomics.feature_selection) {
            const auto nzv = featsel::drop_near_zero_variance(x);
            const Matrix x1 = x.select_columns(nzv);
            const auto uncorrelated = featsel::drop_correlated(x1);
            std::vector<std::size_t> kept;
            for (auto k : uncorrelated) kept.push_back(nzv[k]);
            const Matrix x2 = x.select_columns(kept);
            featsel::RankingOptions ro;
            ro.keep = config.radiomics.top_k;
            ro.workers = config.workers;
            std::vector<featsel::FeatureRanking> rankings;
            for (auto s : featsel::kAllStrategies)
                rankings.push_back(featsel::rank_features(
                    x2, labels, s, stream_seed(config.seed, "pipeline.featsel", {static_cast<std::uint64_t>(s)}), ro));
            const auto subset = featsel::select_stable(rankings, std::min(config.radiomics.top_k, kept.size()),
                                                       std::min(config.radiomics.target, kept.size()));
            for (auto k : subset.indices) cols.push_back(kept[k]);
        } else {
            cols.resize(x.cols());
            std::iota(cols.begin(), cols.end(), 0);
        }

        ForestTraining out;
        for (auto c : cols) out.selected.push_back(names[c]);
        ensemble::ForestParams fp;
        fp.n_trees = config.radiomics.n_trees;
        fp.seed = stream_seed(config.seed, "pipeline.forest");
        fp.workers = config.workers;
        out.model = ensemble::train_forest(x.select_columns(cols), labels, fp);
        out.model.feature_names = out.selected;
        out.positives = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
        out.negatives = labels.size() - out.positives;
        return out;
    });
}

neural::TrainResult train_cnn_stage(const std::vector<CaseData>& input, const PipelineConfig& config) {
    return guarded("train_cnn", [&] {
        const auto cases = augment_cases(input, config);
        const auto& cc = config.cnn;
        neural::PatchSet all;
        all.patch_size = cc.patch_size;
        for (std::size_t c = 0; c < cases.size(); ++c) {
            const auto& d = cases[c];
            if (!d.truth) throw InvalidArgument("training case " + d.id + " lacks a truth mask");
            const auto norm = model_input(d, config);
            const auto band = neural::make_band_dataset(norm, *d.truth, cc.d_max);
            std::vector<neural::BandVoxel> pos, neg;
            for (const auto& b : band) (b.label ? pos : neg).push_back(b);
            Rng rng = make_stream(config.seed, "pipeline.cnn.patches", {c});
            std::shuffle(pos.begin(), pos.end(), rng);
            std::shuffle(neg.begin(), neg.end(), rng);
            const std::size_t half = static_cast<std::size_t>(cc.patches_per_case / 2);
            const std::size_t k = std::min({half, pos.size(), neg.size()});
            for (std::size_t i = 0; i < k; ++i) {
                all.add(neural::extract_patch(norm, pos[i].index, cc.patch_size), 1.0);
                all.add(neural::extract_patch(norm, neg[i].index, cc.patch_size), 0.0);
            }
        }
        if (all.size() < 4) throw InvalidArgument("too few band patches to train the CNN");
        std::vector<std::size_t> order(all.size());
        std::iota(order.begin(), order.end(), 0);
        Rng rng = make_stream(config.seed, "pipeline.cnn.split");
        std::shuffle(order.begin(), order.end(), rng);
        const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(cc.val_fraction * all.size()));
        neural::PatchSet train, val;
        train.patch_size = val.patch_size = cc.patch_size;
        const auto v = all.voxels();
        for (std::size_t i = 0; i < order.size(); ++i) {
            auto& dst = i < n_val ? val : train;
            const auto* src = all.patches.data() + order[i] * v;
            dst.patches.insert(dst.patches.end(), src, src + v);
            dst.labels.push_back(all.labels[order[i]]);
        }
        neural::CnnArchitecture arch;
        arch.patch_size = cc.patch_size;
        arch.conv_channels = cc.conv_channels;
        arch.fc_hidden = cc.fc_hidden;
        neural::TrainSchedule sch;
        sch.adam_epochs = cc.adam_epochs;
        sch.sgd_epochs = cc.sgd_epochs;
        sch.patience = cc.patience;
        sch.batch_size = cc.batch_size;
        sch.workers = config.workers;
        return neural::train_patch_cnn(train, val, arch, sch, stream_seed(config.seed, "pipeline.cnn"));
    });
}

Models train_models(const std::vector<CaseData>& cases, const PipelineConfig& config) {
    Models m;
    if (config.stages.radiomics_filter) m.forest = train_forest_stage(cases, config).model;
    if (config.stages.cnn_refine) m.cnn = train_cnn_stage(cases, config).model;
    return m;
}

std::string mask_hash(const Mask3D& m) {
    const auto d = m.data();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(std::string(reinterpret_cast<const char*>(d.data()), d.size()))));
    return buf;
}

std::string run_manifest(const PipelineConfig& config, const std::vector<CaseResult>& results) {
    using nlohmann::json;
    json j;
    j["format"] = "livseg.run_manifest";
    j["version"] = 1;
    j["config"] = json::parse(config.to_json());
    j["config_hash"] = config.hash();
    j["seed"] = config.seed;
    j["cases"] = json::array();
    for (const auto& r : results) {
        json c;
        c["id"] = r.id;
        c["output_hash"] = mask_hash(r.mask);
        c["stages"] = json::array();
        for (const auto& s : r.stages)
            c["stages"].push_back({{"stage", s.stage},
                                   {"executed", s.executed},
                                   {"seconds", s.seconds},
                                   {"foreground", s.foreground},
                                   {"components", s.components},
                                   {"mask_hash", mask_hash(s.mask)}});
        c["candidate_scores"] = r.candidate_scores;
        c["refined_voxels"] = r.refined_voxels;
        if (r.metrics)
            c["metrics"] = {{"dice", r.metrics->dice},
                            {"sensitivity", r.metrics->sensitivity},
                            {"ppv", r.metrics->ppv}};
        j["cases"].push_back(c);
    }
    return j.dump(2);
}

} // namespace livseg::pipeline
