#pragma once

#include "cmc/classifier.hpp"

#include <cstdint>
#include <vector>

namespace cmc {

/// Per-stage activation thresholds, each in (0, 1].
struct StageThresholds {
    std::vector<double> t;

    /// `n` thresholds of 1.0.
    static StageThresholds defaults(std::size_t n) { return {std::vector<double>(n, 1.0)}; }

    [[nodiscard]] std::size_t size() const noexcept { return t.size(); }
    void validate() const;

    friend bool operator==(const StageThresholds&, const StageThresholds&) = default;
};

struct StagedPrediction {
    ProbDist dist;
    /// 1-based index of the stage whose distribution was returned.
    std::size_t stage_used = 0;
};

/// Ordered classifiers over one label space. A prediction stops at the first
/// stage whose top probability reaches that stage's threshold; the last
/// stage always answers.
class MultistageModel {
  public:
    MultistageModel(std::vector<ClassifierPtr> stages, StageThresholds thresholds);

    [[nodiscard]] StagedPrediction predict(const RowView& x) const;

    [[nodiscard]] const std::vector<ClassifierPtr>& stages() const noexcept { return stages_; }
    [[nodiscard]] const StageThresholds& thresholds() const noexcept { return thresholds_; }
    [[nodiscard]] std::size_t n_stages() const noexcept { return stages_.size(); }
    [[nodiscard]] std::size_t n_labels() const { return stages_.front()->n_labels(); }
    [[nodiscard]] std::size_t n_features() const { return stages_.front()->n_features(); }
    [[nodiscard]] std::uint64_t space() const { return stages_.front()->space(); }

  private:
    std::vector<ClassifierPtr> stages_;
    StageThresholds thresholds_;
};

/// Random forest, then SMO, then the more confident of those two.
std::vector<ClassifierSpec> default_recipe();

/// Trains every stage on `ds`. A max_confidence_pair stage placed after two
/// or more stages combines the already trained stages 1 and 2.
MultistageModel fit_multistage(const std::vector<ClassifierSpec>& specs, const StageThresholds& thresholds,
                               const Dataset& ds, std::uint64_t seed);

StagedPrediction predict_multistage(const MultistageModel& m, const RowView& x);

}  // namespace cmc
