#include "cmc/sampling.hpp"

#include "cmc/errors.hpp"
#include "cmc/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cmc {

void SmoteConfig::validate() const {
    if (k_neighbors < 1) {
        throw config_error("SMOTE k_neighbors must be >= 1");
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw config_error("SMOTE rate must be > 0");
    }
}

void UndersampleConfig::validate() const {
    if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
        throw config_error("undersample target_fraction must lie in (0, 1]");
    }
}

namespace {

// Interpolates seed + u*(neighbour - seed); ordinal columns snap to a code.
void interpolate(const RowView& a, const RowView& b, double u, const FeatureSchema& schema, std::vector<double>& out) {
    out.assign(a.dim(), 0.0);
    a.for_each([&](std::size_t c, double v) { out[c] = v; });
    std::vector<double> nb(a.dim(), 0.0);
    b.for_each([&](std::size_t c, double v) { nb[c] = v; });
    for (std::size_t c = 0; c < out.size(); ++c) {
        double v = out[c] + u * (nb[c] - out[c]);
        if (c < schema.size() && schema[c].kind == FeatureKind::ordinal) {
            const double hi = static_cast<double>(schema[c].categories.size() - 1);
            v = std::clamp(std::round(v), 0.0, hi);
        }
        out[c] = v;
    }
}

}  // namespace

SmoteOutput smote_detailed(const Dataset& ds, const ClassStats& stats, const SmoteConfig& cfg) {
    cfg.validate();
    if (stats.minority.empty()) {
        throw data_error("SMOTE needs at least one minority class");
    }
    if (stats.n_classes() != ds.n_labels()) {
        throw data_error("class statistics do not match the dataset's label list");
    }
    const auto distance = cfg.distance ? cfg.distance
                                       : [](const RowView& a, const RowView& b) { return a.squared_distance(b); };

    std::vector<std::vector<std::size_t>> by_class(ds.n_labels());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[ds.y[i]].push_back(i);
    }

    SmoteOutput out{ds, {}};
    Rng rng(derive_seed(cfg.seed, "smote"));
    const double whole = std::floor(cfg.rate);
    const double frac = cfg.rate - whole;
    std::vector<double> synthetic;
    std::vector<std::pair<double, std::size_t>> dist;

    for (const auto c : stats.minority) {
        const auto& members = by_class[c];
        if (members.empty()) {
            continue;
        }
        if (members.size() < 2) {
            throw data_error("SMOTE: minority class '" + ds.labels[c] + "' has a single instance");
        }
        const auto k = std::min(cfg.k_neighbors, members.size() - 1);
        for (const auto i : members) {
            const auto xi = ds.row(i);
            dist.clear();
            for (const auto j : members) {
                if (j != i) {
                    dist.emplace_back(distance(xi, ds.row(j)), j);
                }
            }
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            auto n_new = static_cast<std::size_t>(whole);
            if (frac > 0.0 && rng.uniform() < frac) {
                ++n_new;
            }
            for (std::size_t s = 0; s < n_new; ++s) {
                const auto nb = dist[rng.below(k)].second;
                const double u = rng.uniform();
                interpolate(xi, ds.row(nb), u, ds.schema, synthetic);
                out.data.x.push_dense(synthetic);
                out.data.y.push_back(c);
                out.origins.emplace_back(i, nb);
            }
        }
    }
    return out;
}

Dataset smote(const Dataset& ds, const ClassStats& stats, const SmoteConfig& cfg) {
    return smote_detailed(ds, stats, cfg).data;
}

std::vector<double> undersample_weights(const Dataset& ds) {
    const auto counts = ds.label_counts();
    const auto present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](auto n) { return n > 0; }));
    std::vector<double> w(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        w[i] = 1.0 / (present * static_cast<double>(counts[ds.y[i]]));
    }
    return w;
}

Dataset undersample(const Dataset& ds, const UndersampleConfig& cfg) {
    cfg.validate();
    if (ds.size() == 0) {
        throw data_error("cannot undersample an empty dataset");
    }
    std::vector<std::vector<std::size_t>> by_class(ds.n_labels());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[ds.y[i]].push_back(i);
    }
    std::erase_if(by_class, [](const auto& v) { return v.empty(); });

    const auto n_out = static_cast<std::size_t>(std::llround(cfg.target_fraction * static_cast<double>(ds.size())));
    Rng rng(derive_seed(cfg.seed, "undersample"));
    std::vector<std::size_t> rows;
    rows.reserve(n_out);
    // Class uniformly, then instance uniformly: P(i) = 1 / (k * count(class(i))).
    for (std::size_t s = 0; s < n_out; ++s) {
        const auto& members = by_class[rng.below(by_class.size())];
        rows.push_back(members[rng.below(members.size())]);
    }
    return ds.subset(rows);
}

}  // namespace cmc
