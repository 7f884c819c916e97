#include "cmc/metrics.hpp"

#include "cmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace cmc {

ConfusionMatrix::ConfusionMatrix(std::size_t k, std::vector<std::string> labels)
    : k_(k), labels_(std::move(labels)), cells_(k * k, 0) {
    if (labels_.empty()) {
        for (std::size_t i = 0; i < k; ++i) {
            labels_.push_back(std::to_string(i));
        }
    }
    if (labels_.size() != k) {
        throw data_error("confusion matrix needs one label name per class");
    }
}

std::size_t ConfusionMatrix::total() const {
    std::size_t s = 0;
    for (const auto v : cells_) {
        s += v;
    }
    return s;
}

std::size_t ConfusionMatrix::row_total(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < k_; ++j) {
        s += at(truth, j);
    }
    return s;
}

std::size_t ConfusionMatrix::col_total(std::size_t pred) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < k_; ++i) {
        s += at(i, pred);
    }
    return s;
}

ConfusionMatrix confusion(std::span<const LabelId> truth, std::span<const LabelId> pred, std::size_t k,
                          std::vector<std::string> labels) {
    if (truth.size() != pred.size()) {
        throw data_error("truth and prediction vectors differ in length");
    }
    ConfusionMatrix cm(k, std::move(labels));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= k || pred[i] >= k) {
            throw data_error("label id out of range in confusion()");
        }
        cm.add(truth[i], pred[i]);
    }
    return cm;
}

std::vector<double> recalls(const ConfusionMatrix& cm) {
    std::vector<double> r(cm.k(), 0.0);
    for (std::size_t i = 0; i < cm.k(); ++i) {
        const auto n = cm.row_total(i);
        if (n > 0) {
            r[i] = static_cast<double>(cm.at(i, i)) / static_cast<double>(n);
        }
    }
    return r;
}

std::vector<double> precisions(const ConfusionMatrix& cm) {
    std::vector<double> p(cm.k(), 0.0);
    for (std::size_t j = 0; j < cm.k(); ++j) {
        const auto n = cm.col_total(j);
        if (n > 0) {
            p[j] = static_cast<double>(cm.at(j, j)) / static_cast<double>(n);
        }
    }
    return p;
}

std::vector<double> f1_scores(const ConfusionMatrix& cm) {
    const auto p = precisions(cm);
    const auto r = recalls(cm);
    std::vector<double> f(cm.k(), 0.0);
    for (std::size_t i = 0; i < cm.k(); ++i) {
        if (p[i] + r[i] > 0.0) {
            f[i] = 2.0 * p[i] * r[i] / (p[i] + r[i]);
        }
    }
    return f;
}

double macro_f1(const ConfusionMatrix& cm) {
    if (cm.k() == 0) {
        throw data_error("macro-F1 of an empty confusion matrix");
    }
    double s = 0.0;
    for (const double v : f1_scores(cm)) {
        s += v;
    }
    return s / static_cast<double>(cm.k());
}

namespace {

void require_true_instances(const ConfusionMatrix& cm) {
    if (cm.k() == 0) {
        throw data_error("G-Mean of an empty confusion matrix");
    }
    for (std::size_t i = 0; i < cm.k(); ++i) {
        if (cm.row_total(i) == 0) {
            throw data_error("class '" + cm.labels()[i] + "' has no true instances; recall undefined");
        }
    }
}

double product(const std::vector<double>& v, double add_each) {
    double p = 1.0;
    for (const double x : v) {
        p *= x + add_each;
    }
    return p;
}

}  // namespace

double g_mean(const ConfusionMatrix& cm) {
    require_true_instances(cm);
    return std::pow(product(recalls(cm), 0.0), 1.0 / static_cast<double>(cm.k()));
}

std::string_view to_string(SgMeanVariant v) {
    return v == SgMeanVariant::printed ? "printed" : "per_factor";
}

SgMeanVariant sg_mean_variant_from_string(std::string_view s) {
    if (s == "printed") {
        return SgMeanVariant::printed;
    }
    if (s == "per_factor" || s == "per_factor_delta") {
        return SgMeanVariant::per_factor;
    }
    throw config_error("unknown SG-Mean variant '" + std::string(s) + "' (printed | per_factor)");
}

double sg_mean(const ConfusionMatrix& cm, double delta, SgMeanVariant variant) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw config_error("SG-Mean delta must be > 0");
    }
    require_true_instances(cm);
    const auto r = recalls(cm);
    const double inner = variant == SgMeanVariant::printed ? product(r, 0.0) + delta : product(r, delta);
    return std::pow(inner, 1.0 / static_cast<double>(cm.k()));
}

std::size_t zero_recall_count(const ConfusionMatrix& cm) {
    const auto r = recalls(cm);
    return static_cast<std::size_t>(std::count(r.begin(), r.end(), 0.0));
}

MetricsReport evaluate(const ConfusionMatrix& cm, double delta, SgMeanVariant variant) {
    MetricsReport r;
    r.confusion = cm;
    r.recall = recalls(cm);
    r.f1 = f1_scores(cm);
    r.macro_f1 = macro_f1(cm);
    r.g_mean = g_mean(cm);
    r.sg_mean = sg_mean(cm, delta, variant);
    r.delta = delta;
    r.variant = variant;
    r.zero_recall_count = zero_recall_count(cm);
    return r;
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t w, bool left) {
    if (s.size() >= w) {
        return s;
    }
    return left ? s + std::string(w - s.size(), ' ') : std::string(w - s.size(), ' ') + s;
}

}  // namespace

TableColumn table_column(std::string heading, const MetricsReport& r) {
    return {std::move(heading),
            {fixed3(r.macro_f1), fixed3(r.g_mean), fixed3(r.sg_mean), std::to_string(r.zero_recall_count)}};
}

std::string format_table(const std::vector<TableColumn>& columns) {
    const std::vector<std::string> rows = {"Macro-F1", "G-Mean", "SG-Mean", "# Ri=0"};
    std::size_t w0 = std::string("Measure").size();
    for (const auto& r : rows) {
        w0 = std::max(w0, r.size());
    }
    std::vector<std::size_t> widths;
    for (const auto& c : columns) {
        std::size_t w = c.heading.size();
        for (const auto& cell : c.cells) {
            w = std::max(w, cell.empty() ? std::size_t{3} : cell.size());
        }
        widths.push_back(w);
    }
    std::ostringstream out;
    out << pad("Measure", w0, true);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out << "  " << pad(columns[j].heading, widths[j], false);
    }
    out << '\n';
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out << pad(rows[i], w0, true);
        for (std::size_t j = 0; j < columns.size(); ++j) {
            const auto& cells = columns[j].cells;
            const std::string cell = i < cells.size() && !cells[i].empty() ? cells[i] : "ERR";
            out << "  " << pad(cell, widths[j], false);
        }
        out << '\n';
    }
    return out.str();
}

std::string format_details(const MetricsReport& r) {
    const auto& cm = r.confusion;
    std::size_t w = 5;
    for (const auto& l : cm.labels()) {
        w = std::max(w, l.size());
    }
    std::ostringstream out;
    out << pad("class", w, true) << "  recall      f1  support\n";
    for (std::size_t i = 0; i < cm.k(); ++i) {
        out << pad(cm.labels()[i], w, true) << "  " << pad(fixed3(r.recall[i]), 6, false) << "  "
            << pad(fixed3(r.f1[i]), 6, false) << "  " << pad(std::to_string(cm.row_total(i)), 7, false) << '\n';
    }
    out << "\nconfusion (rows = true, columns = predicted)\n";
    std::size_t cw = 1;
    for (std::size_t i = 0; i < cm.k(); ++i) {
        for (std::size_t j = 0; j < cm.k(); ++j) {
            cw = std::max(cw, std::to_string(cm.at(i, j)).size());
        }
    }
    for (std::size_t i = 0; i < cm.k(); ++i) {
        out << pad(cm.labels()[i], w, true);
        for (std::size_t j = 0; j < cm.k(); ++j) {
            out << ' ' << pad(std::to_string(cm.at(i, j)), cw, false);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace cmc
