#include "cmc/matrix.hpp"

#include <algorithm>
#include <stdexcept>

namespace cmc {

double RowView::at(std::size_t col) const {
    if (!sparse_) {
        return values_[col];
    }
    const auto it = std::lower_bound(columns_.begin(), columns_.end(), static_cast<std::uint32_t>(col));
    if (it == columns_.end() || *it != col) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - columns_.begin())];
}

double RowView::dot(const RowView& other) const {
    if (!sparse_ && !other.sparse_) {
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            s += values_[i] * other.values_[i];
        }
        return s;
    }
    if (sparse_ && other.sparse_) {
        double s = 0.0;
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < columns_.size() && j < other.columns_.size()) {
            if (columns_[i] == other.columns_[j]) {
                s += values_[i++] * other.values_[j++];
            } else if (columns_[i] < other.columns_[j]) {
                ++i;
            } else {
                ++j;
            }
        }
        return s;
    }
    const RowView& sp = sparse_ ? *this : other;
    const RowView& dn = sparse_ ? other : *this;
    double s = 0.0;
    for (std::size_t i = 0; i < sp.columns_.size(); ++i) {
        s += sp.values_[i] * dn.values_[sp.columns_[i]];
    }
    return s;
}

double RowView::squared_distance(const RowView& other) const {
    if (!sparse_ && !other.sparse_) {
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i) {
            const double d = values_[i] - other.values_[i];
            s += d * d;
        }
        return s;
    }
    if (sparse_ && other.sparse_) {
        double s = 0.0;
        std::size_t i = 0;
        std::size_t j = 0;
        while (i < columns_.size() || j < other.columns_.size()) {
            double d;
            if (j == other.columns_.size() || (i < columns_.size() && columns_[i] < other.columns_[j])) {
                d = values_[i++];
            } else if (i == columns_.size() || other.columns_[j] < columns_[i]) {
                d = other.values_[j++];
            } else {
                d = values_[i++] - other.values_[j++];
            }
            s += d * d;
        }
        return s;
    }
    const auto a = to_dense();
    const auto b = other.to_dense();
    return RowView::dense(a).squared_distance(RowView::dense(b));
}

std::vector<double> RowView::to_dense() const {
    if (!sparse_) {
        return {values_.begin(), values_.end()};
    }
    std::vector<double> out(dim_, 0.0);
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        out[columns_[i]] = values_[i];
    }
    return out;
}

RowView FeatureMatrix::row(std::size_t i) const {
    if (sparse_) {
        const auto b = offsets_[i];
        const auto e = offsets_[i + 1];
        return RowView::sparse(std::span(columns_).subspan(b, e - b), std::span(values_).subspan(b, e - b), cols_);
    }
    return RowView::dense(std::span(values_).subspan(i * cols_, cols_));
}

void FeatureMatrix::push_dense(std::span<const double> values) {
    if (values.size() != cols_) {
        throw std::invalid_argument("row width does not match matrix width");
    }
    if (sparse_) {
        for (std::size_t c = 0; c < values.size(); ++c) {
            if (values[c] != 0.0) {
                columns_.push_back(static_cast<std::uint32_t>(c));
                values_.push_back(values[c]);
            }
        }
        offsets_.push_back(values_.size());
    } else {
        values_.insert(values_.end(), values.begin(), values.end());
    }
    ++rows_;
}

void FeatureMatrix::push_sparse(std::span<const std::uint32_t> columns, std::span<const double> values) {
    if (columns.size() != values.size()) {
        throw std::invalid_argument("column/value length mismatch");
    }
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] >= cols_ || (i > 0 && columns[i] <= columns[i - 1])) {
            throw std::invalid_argument("sparse columns must be increasing and in range");
        }
    }
    if (sparse_) {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (values[i] != 0.0) {
                columns_.push_back(columns[i]);
                values_.push_back(values[i]);
            }
        }
        offsets_.push_back(values_.size());
    } else {
        const auto base = values_.size();
        values_.resize(base + cols_, 0.0);
        for (std::size_t i = 0; i < columns.size(); ++i) {
            values_[base + columns[i]] = values[i];
        }
    }
    ++rows_;
}

void FeatureMatrix::push(const RowView& row) {
    if (row.is_sparse()) {
        push_sparse(row.columns(), row.values());
    } else {
        push_dense(row.values());
    }
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
    FeatureMatrix out = empty_like(*this);
    std::size_t entries = 0;
    for (const auto r : rows) {
        entries += sparse_ ? offsets_[r + 1] - offsets_[r] : cols_;
    }
    out.reserve(rows.size(), entries);
    for (const auto r : rows) {
        if (r >= rows_) {
            throw std::out_of_range("row index out of range");
        }
        out.push(row(r));
    }
    return out;
}

void FeatureMatrix::reserve(std::size_t rows, std::size_t entries) {
    values_.reserve(entries);
    if (sparse_) {
        columns_.reserve(entries);
        offsets_.reserve(rows + 1);
    }
}

}  // namespace cmc
