#include "doctest.h"

#include <algorithm>

#include "livseg/phantom/phantom.hpp"
#include "livseg/pipeline/pipeline.hpp"
#include "livseg/postproc/postproc.hpp"

using namespace livseg;
using namespace livseg::pipeline;

namespace {

CaseData small_case(std::uint64_t seed) {
    auto spec = phantom::random_spec(seed);
    return case_from_phantom(phantom::generate_phantom(spec), "c" + std::to_string(seed));
}

bool same(const volumes::Mask3D& a, const volumes::Mask3D& b) { return std::ranges::equal(a.data(), b.data()); }

PipelineConfig toggles(bool morph, bool temporal) {
    PipelineConfig c;
    c.stages = {morph, temporal, false, false};
    return c;
}

} // namespace

TEST_CASE("config JSON round trip keeps every field") {
    PipelineConfig c;
    c.seed = 99;
    c.workers = 3;
    c.paths.ct = "a.mhd";
    c.stages.temporal = false;
    c.threshold_mode = postproc::ThresholdMode::Fixed;
    c.fixed_tau = 100;
    c.suppress_isolated = true;
    c.radiomics.tau_rf = 0.4;
    c.radiomics.sampler.quota_total = 12;
    c.cnn.conv_channels = {4, 4, 8, 8, 16};
    c.cnn.d_max = 4.5;
    c.augment.copies = 1;
    c.augment.noise_max_hu = 4.0;
    c.denoise_sigma_vox = 0.5;
    c.intensity_ref_hu = 0.0;
    const auto back = PipelineConfig::from_json(c.to_json());
    CHECK(back == c);
    CHECK(back.hash() == c.hash());
}

TEST_CASE("config rejects unknown keys, bad types and bad values") {
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"sed": 1})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"cnn": {"patchsize": 9}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"seed": "x"})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"radiomics": {"tau_rf": 2.0}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"binarize": {"mode": "mean"}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"version": 7})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json("{not json"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"denoise_sigma_vox": -1})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"intensity_ref_hu": 900})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"augment": {"scale_max": 0.5}})"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::from_json(R"({"augment": {"copy": 1}})"), ConfigError);
    CHECK(PipelineConfig::from_json("{}") == PipelineConfig{});
}

TEST_CASE("config hash tracks content") {
    PipelineConfig a, b;
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    b.seed = 1;
    CHECK(a.hash() != b.hash());
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("all toggles off is the binarized map") {
    const auto d = small_case(4);
    const auto r = run_case(d, toggles(false, false), Models{});
    const auto b = postproc::binarize(d.p_tumor, postproc::ThresholdMode::OtsuPerVolume);
    CHECK(same(r.mask, b.mask));
    REQUIRE(r.stages.size() == 5);
    CHECK(r.stages[0].executed);
    for (std::size_t s = 1; s < 5; ++s) CHECK_FALSE(r.stages[s].executed);
    REQUIRE(r.metrics);
}

TEST_CASE("enabling a later stage leaves earlier intermediates alone") {
    const auto d = small_case(5);
    const auto a = run_case(d, toggles(true, false), Models{});
    const auto b = run_case(d, toggles(true, true), Models{});
    CHECK(same(a.stages[0].mask, b.stages[0].mask));
    CHECK(same(a.stages[1].mask, b.stages[1].mask));
    CHECK(same(b.mask, postproc::temporal_refine(a.mask, d.p_tumor)));
}

TEST_CASE("missing models fail with a stage-tagged error") {
    const auto d = small_case(6);
    PipelineConfig c;
    c.stages.cnn_refine = false;
    try {
        (void)run_case(d, c, Models{});
        FAIL("expected StageError");
    } catch (const StageError& e) {
        CHECK(e.stage() == "radiomics_filter");
    }
}

TEST_CASE("model input undoes a global intensity scale") {
    auto d = small_case(10);
    PipelineConfig c;
    c.denoise_sigma_vox = 0.0;
    auto e = d;
    std::vector<float> scaled(d.ct.data().begin(), d.ct.data().end());
    for (auto& v : scaled) v *= 1.1f;
    e.ct = volumes::Volume3D(d.ct.grid(), volumes::ValueKind::HuFloat, std::move(scaled));
    const auto a = model_input(d, c), b = model_input(e, c);
    std::size_t off = 0;
    for (std::size_t i = 0; i < a.size(); ++i) off += std::abs(a[i] - b[i]) > 1.0f;
    CHECK(off == 0);
    c.intensity_ref_hu = 0.0;
    const auto raw = model_input(e, c);
    std::size_t moved = 0;
    for (std::size_t i = 0; i < a.size(); ++i) moved += raw[i] != a[i];
    CHECK(moved > a.size() / 4);
}

TEST_CASE("augmented copies follow the originals") {
    std::vector<CaseData> cases{small_case(12)};
    PipelineConfig c;
    c.augment.copies = 2;
    const auto out = augment_cases(cases, c);
    REQUIRE(out.size() == 3);
    CHECK(out[0].id == cases[0].id);
    CHECK(out[1].id == cases[0].id + ".aug0");
    CHECK(out[0].ct == cases[0].ct);
    CHECK_FALSE(out[1].ct == cases[0].ct);
    CHECK(augment_cases(cases, c)[2].ct == out[2].ct);
}

TEST_CASE("suite results do not depend on the worker count") {
    std::vector<CaseData> cases{small_case(7), small_case(8), small_case(9)};
    auto c = toggles(true, true);
    const auto one = run_suite(cases, c, Models{});
    c.workers = 3;
    const auto three = run_suite(cases, c, Models{});
    for (std::size_t i = 0; i < cases.size(); ++i) {
        CHECK(one.cases[i].id == three.cases[i].id);
        CHECK(mask_hash(one.cases[i].mask) == mask_hash(three.cases[i].mask));
    }
    CHECK(run_manifest(c, one.cases).find("\"config_hash\"") != std::string::npos);
}
