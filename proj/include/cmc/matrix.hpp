#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cmc {

/// Read-only view of one instance. Either a dense span of `dim` values or a
/// sorted list of (column, value) pairs where absent columns are zero.
class RowView {
  public:
    RowView() = default;

    static RowView dense(std::span<const double> values) {
        RowView r;
        r.values_ = values;
        r.dim_ = values.size();
        return r;
    }

    static RowView sparse(std::span<const std::uint32_t> columns, std::span<const double> values, std::size_t dim) {
        RowView r;
        r.columns_ = columns;
        r.values_ = values;
        r.dim_ = dim;
        r.sparse_ = true;
        return r;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] bool is_sparse() const noexcept { return sparse_; }
    [[nodiscard]] std::span<const std::uint32_t> columns() const noexcept { return columns_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

    /// Value at `col`; O(1) dense, O(log nnz) sparse.
    [[nodiscard]] double at(std::size_t col) const;

    /// Calls f(col, value) for each stored entry (all columns when dense).
    template <typename F>
    void for_each(F&& f) const {
        if (sparse_) {
            for (std::size_t i = 0; i < columns_.size(); ++i) {
                f(static_cast<std::size_t>(columns_[i]), values_[i]);
            }
        } else {
            for (std::size_t i = 0; i < values_.size(); ++i) {
                f(i, values_[i]);
            }
        }
    }

    [[nodiscard]] double dot(const RowView& other) const;
    [[nodiscard]] double squared_distance(const RowView& other) const;
    [[nodiscard]] std::vector<double> to_dense() const;

  private:
    std::span<const std::uint32_t> columns_;
    std::span<const double> values_;
    std::size_t dim_ = 0;
    bool sparse_ = false;
};

/// Instance-major feature matrix, stored dense row-major or as CSR.
class FeatureMatrix {
  public:
    FeatureMatrix() = default;

    static FeatureMatrix dense(std::size_t cols) {
        FeatureMatrix m;
        m.cols_ = cols;
        return m;
    }
    static FeatureMatrix sparse(std::size_t cols) {
        FeatureMatrix m;
        m.cols_ = cols;
        m.sparse_ = true;
        m.offsets_.push_back(0);
        return m;
    }
    /// Empty matrix with the same storage kind and width as `like`.
    static FeatureMatrix empty_like(const FeatureMatrix& like) {
        return like.sparse_ ? sparse(like.cols_) : dense(like.cols_);
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool is_sparse() const noexcept { return sparse_; }
    /// Stored entries (rows*cols for dense storage).
    [[nodiscard]] std::size_t stored() const noexcept { return values_.size(); }

    [[nodiscard]] RowView row(std::size_t i) const;

    /// Appends a dense row; width must equal cols().
    void push_dense(std::span<const double> values);
    /// Appends a sparse row; columns strictly increasing and < cols(). Explicit
    /// zeros are dropped.
    void push_sparse(std::span<const std::uint32_t> columns, std::span<const double> values);
    /// Appends a row of either kind, converting to this matrix's storage.
    void push(const RowView& row);

    [[nodiscard]] FeatureMatrix select(std::span<const std::size_t> rows) const;

    void reserve(std::size_t rows, std::size_t entries);

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    bool sparse_ = false;
    std::vector<double> values_;
    std::vector<std::uint32_t> columns_;  // sparse only
    std::vector<std::size_t> offsets_;    // sparse only, rows_+1 entries
};

}  // namespace cmc
