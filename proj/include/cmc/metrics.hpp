#pragma once

#include "cmc/dataset.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cmc {

/// k x k counts; cell (i, j) holds instances of true class i predicted as j.
class ConfusionMatrix {
  public:
    explicit ConfusionMatrix(std::size_t k, std::vector<std::string> labels = {});

    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t at(std::size_t truth, std::size_t pred) const { return cells_[truth * k_ + pred]; }
    void add(std::size_t truth, std::size_t pred, std::size_t n = 1) { cells_[truth * k_ + pred] += n; }

    [[nodiscard]] std::size_t total() const;
    [[nodiscard]] std::size_t row_total(std::size_t truth) const;
    [[nodiscard]] std::size_t col_total(std::size_t pred) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

  private:
    std::size_t k_;
    std::vector<std::string> labels_;
    std::vector<std::size_t> cells_;
};

/// Throws data_error on length mismatch or a label >= k.
ConfusionMatrix confusion(std::span<const LabelId> truth, std::span<const LabelId> pred, std::size_t k,
                          std::vector<std::string> labels = {});

/// Per-class recall; a class without true instances gets 0.
std::vector<double> recalls(const ConfusionMatrix& cm);
std::vector<double> precisions(const ConfusionMatrix& cm);
/// Per-class F1; 0 when precision + recall is 0 or undefined.
std::vector<double> f1_scores(const ConfusionMatrix& cm);

double macro_f1(const ConfusionMatrix& cm);

/// (prod R_i)^(1/k). Throws data_error when a class has no true instances.
double g_mean(const ConfusionMatrix& cm);

enum class SgMeanVariant {
    /// (prod R_i + delta)^(1/k)
    printed,
    /// (prod (R_i + delta))^(1/k)
    per_factor,
};

std::string_view to_string(SgMeanVariant v);
SgMeanVariant sg_mean_variant_from_string(std::string_view s);

/// Smoothed G-Mean; may exceed 1. Throws config_error when delta <= 0.
double sg_mean(const ConfusionMatrix& cm, double delta, SgMeanVariant variant = SgMeanVariant::printed);

std::size_t zero_recall_count(const ConfusionMatrix& cm);

struct MetricsReport {
    ConfusionMatrix confusion{0};
    std::vector<double> recall;
    std::vector<double> f1;
    double macro_f1 = 0.0;
    double g_mean = 0.0;
    double sg_mean = 0.0;
    double delta = 0.001;
    SgMeanVariant variant = SgMeanVariant::printed;
    std::size_t zero_recall_count = 0;
};

MetricsReport evaluate(const ConfusionMatrix& cm, double delta = 0.001,
                       SgMeanVariant variant = SgMeanVariant::printed);

/// Column of a results table: a heading plus one value per metric row.
struct TableColumn {
    std::string heading;
    /// Macro-F1, G-Mean, SG-Mean, # Ri=0; an empty cell prints as "ERR".
    std::vector<std::string> cells;
};

TableColumn table_column(std::string heading, const MetricsReport& r);

/// Aligned plain text with metric rows and method columns.
std::string format_table(const std::vector<TableColumn>& columns);

/// Per-class recall / F1 listing plus the confusion matrix.
std::string format_details(const MetricsReport& r);

}  // namespace cmc
