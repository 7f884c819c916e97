#pragma once

#include "cmc/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cmc {

using LabelId = std::size_t;

enum class FeatureKind { numeric, ordinal };

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::numeric;
    /// Ordered categories of an ordinal-nominal feature; encoded as their index.
    std::vector<std::string> categories;

    friend bool operator==(const Feature&, const Feature&) = default;
};

class FeatureSchema {
  public:
    FeatureSchema() = default;
    /// Throws data_error on duplicate names or ordinal features with <2 categories.
    explicit FeatureSchema(std::vector<Feature> features);

    /// `n` numeric features named f1..fn (the sparse loader's naming).
    static FeatureSchema numeric(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return features_.size(); }
    [[nodiscard]] const Feature& operator[](std::size_t i) const { return features_[i]; }
    [[nodiscard]] std::span<const Feature> features() const noexcept { return features_; }
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

  private:
    std::vector<Feature> features_;
};

/// Reads a schema file: one feature per line, `name numeric` or
/// `name ordinal c1,c2,...`. Blank lines and `#` comments are skipped.
FeatureSchema read_schema(const std::filesystem::path& path);

/// Schema from a CSV header: columns whose values all parse as numbers are
/// numeric, the rest ordinal with categories in first-appearance order.
FeatureSchema infer_schema(const std::filesystem::path& csv_path, const std::string& label_column);

/// Feature matrix plus integer-coded labels.
struct Dataset {
    FeatureSchema schema;
    FeatureMatrix x;
    std::vector<LabelId> y;
    std::vector<std::string> labels;

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }
    [[nodiscard]] std::size_t n_features() const noexcept { return x.cols(); }
    [[nodiscard]] std::size_t n_labels() const noexcept { return labels.size(); }
    [[nodiscard]] RowView row(std::size_t i) const { return x.row(i); }

    /// Per-label instance counts over the full label list.
    [[nodiscard]] std::vector<std::size_t> label_counts() const;

    /// Throws data_error when an invariant is broken (row/label mismatch,
    /// label id out of range, NaN, width mismatch with the schema).
    void validate() const;

    [[nodiscard]] Dataset subset(std::span<const std::size_t> rows) const;
};

[[nodiscard]] bool same_instances(const Dataset& a, const Dataset& b);

// ---------------------------------------------------------------- loading

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, const FeatureSchema& schema);

/// Sparse text matrix (`nrows ncols nnz` header, then per row `col value`
/// pairs with 1-based columns) plus a labels file with one label per line.
Dataset load_sparse(const std::filesystem::path& matrix_path, const std::filesystem::path& labels_path);

void save_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column = "class");
void save_sparse(const Dataset& ds, const std::filesystem::path& matrix_path, const std::filesystem::path& labels_path);

// ---------------------------------------------------------- partitioning

/// Stratified split. Per class round(fraction*count) instances go to train,
/// clamped so every class keeps at least one instance on each side. Row
/// order inside each part follows the input order.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Same partition as split(), as row indices into `ds`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset& ds, double train_fraction,
                                                                            std::uint64_t seed);

// ------------------------------------------------------------ statistics

struct ClassStats {
    std::vector<std::string> labels;
    std::vector<std::size_t> counts;
    std::size_t total = 0;
    double balance_point = 0.0;
    std::vector<LabelId> majority;
    std::vector<LabelId> minority;

    [[nodiscard]] std::size_t n_classes() const noexcept { return counts.size(); }
    [[nodiscard]] bool is_majority(LabelId id) const;
};

/// Majority = labels with count > |D|/k, unless `override_majority` is given.
ClassStats class_stats(const Dataset& ds, const std::optional<std::vector<LabelId>>& override_majority = std::nullopt);
ClassStats class_stats(const Dataset& ds, const std::vector<std::string>& override_majority_names);

/// The `n` most frequent labels (ties by lower id), for majority overrides.
std::vector<LabelId> most_frequent(const ClassStats& stats, std::size_t n);

// ------------------------------------------------------------ label views

enum class ViewKind { full, binary, majority_cluster, minority_cluster };

std::string_view to_string(ViewKind kind);

/// A relabelling of the original label space. Cluster pseudo-labels come
/// first, remaining labels follow in original order.
struct LabelView {
    ViewKind kind = ViewKind::full;
    std::vector<std::string> view_labels;
    /// original label id -> view label id
    std::vector<LabelId> mapping;
    std::optional<LabelId> cluster_slot;
    /// view label id -> original label ids merged into it
    std::vector<std::vector<LabelId>> members;

    [[nodiscard]] std::size_t size() const noexcept { return view_labels.size(); }
};

inline constexpr std::string_view majority_cluster_name = "<majority>";
inline constexpr std::string_view minority_cluster_name = "<minority>";

LabelView make_view(const ClassStats& stats, ViewKind kind);
Dataset apply_view(const Dataset& ds, const LabelView& view);

}  // namespace cmc
