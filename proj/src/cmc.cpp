#include "cmc/cmc.hpp"

#include "cmc/errors.hpp"
#include "cmc/random.hpp"

namespace cmc {

std::string_view to_string(CmcLayer layer) {
    return layer == CmcLayer::binary ? "binary" : "multiclass";
}

void require_single_majority(const ClassStats& stats) {
    if (stats.majority.size() != 1) {
        throw config_error("CMC needs exactly one majority class, found " + std::to_string(stats.majority.size()) +
                           (stats.majority.size() > 1 ? "; use the cmcm model" : ""));
    }
    if (stats.minority.empty()) {
        throw config_error("CMC needs at least one minority class");
    }
}

CmcModel::CmcModel(MultistageModel binary, MultistageModel multi, ClassStats stats)
    : binary_(std::move(binary)), multi_(std::move(multi)), stats_(std::move(stats)) {
    require_single_majority(stats_);
    binary_view_ = make_view(stats_, ViewKind::binary);
    if (binary_.n_labels() != 2) {
        throw training_error("CMC binary layer must predict over 2 labels");
    }
    if (multi_.n_labels() != stats_.n_classes()) {
        throw training_error("CMC multiclass layer must predict over the original labels");
    }
    if (binary_.n_features() != multi_.n_features()) {
        throw training_error("CMC layers disagree on feature width");
    }
}

CmcPrediction cmc_dispatch(StagedPrediction binary, LabelId majority_label,
                           const std::function<StagedPrediction()>& multi) {
    CmcPrediction out;
    if (binary.dist.p.at(0) > binary.dist.p.at(1)) {
        out.label = majority_label;
        out.layer = CmcLayer::binary;
        out.binary = std::move(binary);
        return out;
    }
    out.binary = std::move(binary);
    out.multi = multi();
    out.layer = CmcLayer::multiclass;
    out.label = out.multi->dist.argmax();
    return out;
}

CmcPrediction CmcModel::predict(const RowView& x) const {
    return cmc_dispatch(binary_.predict(x), majority_label(), [&] { return multi_.predict(x); });
}

CmcModel fit_cmc(const Dataset& train, const ClassStats& stats, const StageThresholds& binary_thresholds,
                 const StageThresholds& multi_thresholds, std::uint64_t seed,
                 const std::vector<ClassifierSpec>& recipe) {
    require_single_majority(stats);
    if (stats.n_classes() != train.n_labels()) {
        throw data_error("class statistics do not match the training set's label list");
    }
    const auto view = make_view(stats, ViewKind::binary);
    auto binary = fit_multistage(recipe, binary_thresholds, apply_view(train, view), derive_seed(seed, "cmc.binary"));
    auto multi = fit_multistage(recipe, multi_thresholds, train, derive_seed(seed, "cmc.multi"));
    return CmcModel(std::move(binary), std::move(multi), stats);
}

CmcPrediction predict_cmc(const CmcModel& m, const RowView& x) {
    return m.predict(x);
}

}  // namespace cmc
