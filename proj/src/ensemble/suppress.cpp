#include "livseg/ensemble/suppress.hpp"

namespace livseg::ensemble {

SuppressionResult suppress_false_positives(const volumes::Mask3D& mask,
                                           std::span<const radiomics::CandidateRegion> regions,
                                           const Matrix& features, const std::vector<std::string>& feature_names,
                                           const ForestModel& model, double tau) {
    if (!model.feature_names.empty() && model.feature_names != feature_names)
        throw InvalidArgument("suppress_false_positives: feature names differ from the model's manifest");
    if (features.rows() != regions.size())
        throw InvalidArgument("suppress_false_positives: one feature row per region is required");
    if (!regions.empty() && features.cols() != model.n_features)
        throw InvalidArgument("suppress_false_positives: feature width does not match the model");

    SuppressionResult out;
    out.mask = mask;
    for (std::size_t k = 0; k < regions.size(); ++k) {
        const double q = model.predict_proba(features.row(k));
        const bool keep = q >= tau;
        out.q.push_back(q);
        out.keep.push_back(keep);
        if (keep) {
            out.kept.push_back(regions[k]);
        } else {
            for (auto v : regions[k].voxels) out.mask.set(v, false);
        }
    }
    return out;
}

} // namespace livseg::ensemble
