#include "cmc/cmcm.hpp"

#include "cmc/errors.hpp"
#include "cmc/random.hpp"

namespace cmc {

std::string_view to_string(CmcmBranch branch) {
    switch (branch) {
        case CmcmBranch::m1:
            return "m1";
        case CmcmBranch::m2:
            return "m2";
        case CmcmBranch::m3:
            return "m3";
    }
    return "?";
}

void require_mixed_classes(const ClassStats& stats) {
    if (stats.majority.empty() || stats.minority.empty()) {
        throw config_error("CMC-M needs at least one majority and one minority class (found " +
                           std::to_string(stats.majority.size()) + " majority, " +
                           std::to_string(stats.minority.size()) + " minority)");
    }
}

CmcmViews CmcmViews::from(const ClassStats& stats) {
    return {make_view(stats, ViewKind::binary), make_view(stats, ViewKind::majority_cluster),
            make_view(stats, ViewKind::minority_cluster)};
}

namespace {

// Argmax over every view label except the cluster slot, mapped back to the
// original label id (non-cluster view labels hold exactly one member).
LabelId best_outside_cluster(const ProbDist& d, const LabelView& view) {
    const auto slot = view.cluster_slot.value();
    std::size_t best = d.size();
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (i != slot && (best == d.size() || d.p[i] > d.p[best])) {
            best = i;
        }
    }
    return view.members.at(best).front();
}

}  // namespace

CmcmPrediction cmcm_dispatch(StagedPrediction b, StagedPrediction m1, StagedPrediction m2, const CmcmViews& views,
                             const std::function<StagedPrediction()>& m3) {
    const auto& v1 = views.majority_cluster;
    const auto& v2 = views.minority_cluster;
    if (b.dist.size() != 2 || m1.dist.size() != v1.size() || m2.dist.size() != v2.size()) {
        throw training_error("CMC-M distributions do not match their label views");
    }
    const double b_maj = b.dist.p[0];
    const double b_min = b.dist.p[1];
    const double gamma = m1.dist.p[*v1.cluster_slot];
    const double omega = m2.dist.p[*v2.cluster_slot];

    CmcmPrediction out;
    if (b_maj > b_min && gamma > omega) {
        out.branch = CmcmBranch::m1;
        const auto a = m1.dist.argmax();
        if (a == *v1.cluster_slot) {
            out.resolved = true;
            out.label = best_outside_cluster(m2.dist, v2);
        } else {
            out.label = v1.members[a].front();
        }
    } else if (b_maj < b_min && gamma < omega) {
        out.branch = CmcmBranch::m2;
        const auto a = m2.dist.argmax();
        if (a == *v2.cluster_slot) {
            out.resolved = true;
            out.label = best_outside_cluster(m1.dist, v1);
        } else {
            out.label = v2.members[a].front();
        }
    } else {
        out.branch = CmcmBranch::m3;
        out.m3 = m3();
        out.label = out.m3->dist.argmax();
    }
    out.b = std::move(b);
    out.m1 = std::move(m1);
    out.m2 = std::move(m2);
    return out;
}

CmcmModel::CmcmModel(MultistageModel b, MultistageModel m1, MultistageModel m2, MultistageModel m3, ClassStats stats)
    : b_(std::move(b)), m1_(std::move(m1)), m2_(std::move(m2)), m3_(std::move(m3)), stats_(std::move(stats)) {
    require_mixed_classes(stats_);
    views_ = CmcmViews::from(stats_);
    if (b_.n_labels() != 2 || m1_.n_labels() != views_.majority_cluster.size() ||
        m2_.n_labels() != views_.minority_cluster.size() || m3_.n_labels() != stats_.n_classes()) {
        throw training_error("CMC-M layer label spaces do not match the class statistics");
    }
    const auto nf = b_.n_features();
    if (m1_.n_features() != nf || m2_.n_features() != nf || m3_.n_features() != nf) {
        throw training_error("CMC-M layers disagree on feature width");
    }
}

CmcmPrediction CmcmModel::predict(const RowView& x) const {
    return cmcm_dispatch(b_.predict(x), m1_.predict(x), m2_.predict(x), views_, [&] { return m3_.predict(x); });
}

CmcmModel fit_cmcm(const Dataset& train, const ClassStats& stats, const CmcmThresholds& thresholds,
                   std::uint64_t seed, const std::vector<ClassifierSpec>& recipe) {
    require_mixed_classes(stats);
    if (stats.n_classes() != train.n_labels()) {
        throw data_error("class statistics do not match the training set's label list");
    }
    const auto views = CmcmViews::from(stats);
    auto b = fit_multistage(recipe, thresholds.b, apply_view(train, views.binary), derive_seed(seed, "cmcm.b"));
    auto m1 = fit_multistage(recipe, thresholds.m1, apply_view(train, views.majority_cluster),
                             derive_seed(seed, "cmcm.m1"));
    auto m2 = fit_multistage(recipe, thresholds.m2, apply_view(train, views.minority_cluster),
                             derive_seed(seed, "cmcm.m2"));
    auto m3 = fit_multistage(recipe, thresholds.m3, train, derive_seed(seed, "cmcm.m3"));
    return CmcmModel(std::move(b), std::move(m1), std::move(m2), std::move(m3), stats);
}

CmcmPrediction predict_cmcm(const CmcmModel& m, const RowView& x) {
    return m.predict(x);
}

}  // namespace cmc
