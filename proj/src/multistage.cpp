#include "cmc/multistage.hpp"

#include "cmc/errors.hpp"
#include "cmc/random.hpp"

#include <cmath>

namespace cmc {

void StageThresholds::validate() const {
    if (t.empty()) {
        throw config_error("at least one stage threshold is required");
    }
    for (const double v : t) {
        if (!(v > 0.0 && v <= 1.0)) {
            throw config_error("stage thresholds must lie in (0, 1], got " + std::to_string(v));
        }
    }
}

MultistageModel::MultistageModel(std::vector<ClassifierPtr> stages, StageThresholds thresholds)
    : stages_(std::move(stages)), thresholds_(std::move(thresholds)) {
    if (stages_.empty()) {
        throw config_error("a multistage model needs at least one stage");
    }
    if (stages_.size() != thresholds_.size()) {
        throw config_error(std::to_string(stages_.size()) + " stages but " + std::to_string(thresholds_.size()) +
                           " thresholds");
    }
    thresholds_.validate();
    for (const auto& s : stages_) {
        if (!s) {
            throw training_error("null stage classifier");
        }
        if (s->space() != stages_.front()->space() || s->n_labels() != stages_.front()->n_labels() ||
            s->n_features() != stages_.front()->n_features()) {
            throw training_error("multistage stages disagree on label space or feature width");
        }
    }
}

StagedPrediction MultistageModel::predict(const RowView& x) const {
    for (std::size_t i = 0; i + 1 < stages_.size(); ++i) {
        auto d = stages_[i]->predict_proba(x);
        if (d.max() >= thresholds_.t[i]) {
            return {std::move(d), i + 1};
        }
    }
    return {stages_.back()->predict_proba(x), stages_.size()};
}

std::vector<ClassifierSpec> default_recipe() {
    return {ClassifierSpec::random_forest(), ClassifierSpec::smo_margin(), ClassifierSpec::max_confidence_pair()};
}

MultistageModel fit_multistage(const std::vector<ClassifierSpec>& specs, const StageThresholds& thresholds,
                               const Dataset& ds, std::uint64_t seed) {
    if (specs.empty()) {
        throw config_error("a multistage model needs at least one stage");
    }
    if (specs.size() != thresholds.size()) {
        throw config_error(std::to_string(specs.size()) + " stages but " + std::to_string(thresholds.size()) +
                           " thresholds");
    }
    thresholds.validate();
    std::vector<ClassifierPtr> stages;
    stages.reserve(specs.size());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (specs[i].kind == ClassifierKind::max_confidence_pair && i >= 2) {
            stages.push_back(std::make_shared<MaxConfidencePair>(stages[0], stages[1]));
        } else {
            stages.push_back(fit(specs[i], ds, derive_seed(seed, i)));
        }
    }
    return MultistageModel(std::move(stages), thresholds);
}

StagedPrediction predict_multistage(const MultistageModel& m, const RowView& x) {
    return m.predict(x);
}

}  // namespace cmc
