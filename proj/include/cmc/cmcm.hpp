#pragma once

#include "cmc/multistage.hpp"

#include <functional>
#include <optional>

namespace cmc {

/// Which model's distribution produced the answer.
enum class CmcmBranch { m1, m2, m3 };

std::string_view to_string(CmcmBranch branch);

struct CmcmPrediction {
    LabelId label = 0;
    CmcmBranch branch = CmcmBranch::m3;
    /// The selected argmax was a cluster pseudo-label and was resolved
    /// through the complementary model.
    bool resolved = false;
    StagedPrediction b;
    StagedPrediction m1;
    StagedPrediction m2;
    /// Evaluated only on quorum disagreement.
    std::optional<StagedPrediction> m3;
};

struct CmcmThresholds {
    StageThresholds b;
    StageThresholds m1;
    StageThresholds m2;
    StageThresholds m3;

    static CmcmThresholds defaults(std::size_t stages) {
        const auto d = StageThresholds::defaults(stages);
        return {d, d, d, d};
    }
};

/// Views used by the dispatcher; built from class statistics.
struct CmcmViews {
    LabelView binary;
    LabelView majority_cluster;
    LabelView minority_cluster;

    static CmcmViews from(const ClassStats& stats);
};

/// Decision rule over already computed top-layer distributions.
///  - b favours majority and M1's majority cluster beats M2's minority
///    cluster: answer from M1.
///  - both favour the minority side: answer from M2.
///  - otherwise `m3()` is called and its argmax returned.
/// A cluster argmax in M1 resolves to the best majority class under M2, and
/// a cluster argmax in M2 to the best minority class under M1.
CmcmPrediction cmcm_dispatch(StagedPrediction b, StagedPrediction m1, StagedPrediction m2, const CmcmViews& views,
                             const std::function<StagedPrediction()>& m3);

/// Top layer of B, M1 and M2 over transformed label spaces, plus the full
/// space M3 for quorum disagreement.
class CmcmModel {
  public:
    CmcmModel(MultistageModel b, MultistageModel m1, MultistageModel m2, MultistageModel m3, ClassStats stats);

    [[nodiscard]] CmcmPrediction predict(const RowView& x) const;

    [[nodiscard]] const MultistageModel& b() const noexcept { return b_; }
    [[nodiscard]] const MultistageModel& m1() const noexcept { return m1_; }
    [[nodiscard]] const MultistageModel& m2() const noexcept { return m2_; }
    [[nodiscard]] const MultistageModel& m3() const noexcept { return m3_; }
    [[nodiscard]] const ClassStats& stats() const noexcept { return stats_; }
    [[nodiscard]] const CmcmViews& views() const noexcept { return views_; }

  private:
    MultistageModel b_;
    MultistageModel m1_;
    MultistageModel m2_;
    MultistageModel m3_;
    ClassStats stats_;
    CmcmViews views_;
};

/// Throws config_error unless there is at least one majority and one
/// minority class.
void require_mixed_classes(const ClassStats& stats);

CmcmModel fit_cmcm(const Dataset& train, const ClassStats& stats, const CmcmThresholds& thresholds,
                   std::uint64_t seed, const std::vector<ClassifierSpec>& recipe = default_recipe());

CmcmPrediction predict_cmcm(const CmcmModel& m, const RowView& x);

}  // namespace cmc
