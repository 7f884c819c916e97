#pragma once

#include "cmc/dataset.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace cmc {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    /// Synthetic instances per minority instance; the fractional part is
    /// realised by stochastic rounding.
    double rate = 1.0;
    std::uint64_t seed = 0;
    /// Neighbour distance; empty means squared Euclidean on raw encoded features.
    std::function<double(const RowView&, const RowView&)> distance;

    void validate() const;
};

struct UndersampleConfig {
    double target_fraction = 0.9;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SmoteOutput {
    Dataset data;
    /// For each appended row (in order): (seed row, neighbour row) in the input.
    std::vector<std::pair<std::size_t, std::size_t>> origins;
};

/// Appends synthetic instances for every minority class of `stats`; existing
/// rows are kept unchanged and in place. Ordinal features are rounded to the
/// nearest valid category code.
SmoteOutput smote_detailed(const Dataset& ds, const ClassStats& stats, const SmoteConfig& cfg);
Dataset smote(const Dataset& ds, const ClassStats& stats, const SmoteConfig& cfg);

/// Per-instance draw probabilities of undersample(): uniform over the classes
/// present in `ds`, uniform within a class.
std::vector<double> undersample_weights(const Dataset& ds);

/// Draws round(target_fraction*|D|) instances with replacement, biased
/// toward a balanced class distribution.
Dataset undersample(const Dataset& ds, const UndersampleConfig& cfg);

}  // namespace cmc
