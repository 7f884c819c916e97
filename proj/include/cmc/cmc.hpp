#pragma once

#include "cmc/multistage.hpp"

#include <functional>
#include <optional>

namespace cmc {

enum class CmcLayer { binary, multiclass };

std::string_view to_string(CmcLayer layer);

struct CmcPrediction {
    LabelId label = 0;
    CmcLayer layer = CmcLayer::binary;
    StagedPrediction binary;
    /// Present only when the binary gate fell through.
    std::optional<StagedPrediction> multi;
};

/// Two-layer model: a binary multistage gate over [majority, minority
/// cluster] and a full multiclass multistage behind it.
class CmcModel {
  public:
    /// `binary` must predict over the binary view of `stats`, `multi` over
    /// the original labels. Requires exactly one majority class.
    CmcModel(MultistageModel binary, MultistageModel multi, ClassStats stats);

    [[nodiscard]] CmcPrediction predict(const RowView& x) const;

    [[nodiscard]] const MultistageModel& binary() const noexcept { return binary_; }
    [[nodiscard]] const MultistageModel& multi() const noexcept { return multi_; }
    [[nodiscard]] const ClassStats& stats() const noexcept { return stats_; }
    [[nodiscard]] const LabelView& binary_view() const noexcept { return binary_view_; }
    [[nodiscard]] LabelId majority_label() const noexcept { return stats_.majority.front(); }

  private:
    MultistageModel binary_;
    MultistageModel multi_;
    ClassStats stats_;
    LabelView binary_view_;
};

/// Throws config_error unless `stats` has exactly one majority class.
void require_single_majority(const ClassStats& stats);

CmcModel fit_cmc(const Dataset& train, const ClassStats& stats, const StageThresholds& binary_thresholds,
                 const StageThresholds& multi_thresholds, std::uint64_t seed,
                 const std::vector<ClassifierSpec>& recipe = default_recipe());

CmcPrediction predict_cmc(const CmcModel& m, const RowView& x);

/// The gate on its own: the majority label when binary.p[0] > binary.p[1],
/// otherwise the argmax of `multi()`, which is called only in that case.
CmcPrediction cmc_dispatch(StagedPrediction binary, LabelId majority_label,
                           const std::function<StagedPrediction()>& multi);

}  // namespace cmc
