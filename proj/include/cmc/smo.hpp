#pragma once

#include "cmc/classifier.hpp"

#include <cstdint>
#include <iosfwd>
#include <list>
#include <span>
#include <unordered_map>
#include <vector>

namespace cmc {

/// k(x, z) = (x.z + 1)^degree
struct PolynomialKernel {
    int degree = 1;

    [[nodiscard]] double operator()(const RowView& a, const RowView& b) const;
};

/// Gram matrix of a training set. Held in full when it fits in the memory
/// budget, otherwise rows are computed on demand and kept in an LRU cache.
/// A returned row stays valid until two further rows have been requested.
class KernelMatrix {
  public:
    KernelMatrix(const FeatureMatrix& x, PolynomialKernel kernel, std::size_t cache_mb = 256);

    [[nodiscard]] std::size_t size() const noexcept { return n_; }
    [[nodiscard]] double diag(std::size_t i) const { return diag_[i]; }
    std::span<const double> row(std::size_t i);

  private:
    const FeatureMatrix& x_;
    PolynomialKernel kernel_;
    std::size_t n_;
    std::vector<double> diag_;
    std::vector<double> full_;
    std::size_t capacity_ = 0;
    std::list<std::size_t> lru_;
    std::unordered_map<std::size_t, std::pair<std::vector<double>, std::list<std::size_t>::iterator>> cache_;
};

struct SmoSolution {
    std::vector<double> alpha;
    double rho = 0.0;
    std::size_t iterations = 0;
    /// Final maximal violating pair gap m(alpha) - M(alpha).
    double gap = 0.0;
    bool converged = false;
    /// Gradient of the dual objective, (Q alpha)_i - 1.
    std::vector<double> gradient;
};

/// Solves the soft-margin dual  min 1/2 a'Qa - e'a,  0 <= a <= C,  y'a = 0
/// with Q_ij = y_i y_j K_ij, using second-order working-set selection. Stops
/// when the maximal violating pair gap drops below `tolerance`.
SmoSolution solve_smo(KernelMatrix& kernel, std::span<const int> y, double c, double tolerance,
                      std::size_t max_iterations);

/// Maximal violating pair gap of `alpha` (0 or negative means KKT holds).
double kkt_gap(KernelMatrix& kernel, std::span<const int> y, std::span<const double> alpha, double c);

/// P(y = +1 | f) = 1 / (1 + exp(a f + b)).
struct PlattScaling {
    double a = 0.0;
    double b = 0.0;

    [[nodiscard]] double operator()(double decision) const;

    /// Maximum-likelihood fit with smoothed targets (Newton + backtracking).
    static PlattScaling fit(std::span<const double> decision, std::span<const int> y);
};

/// One-vs-rest SMO machines with per-class Platt calibration; the
/// multiclass distribution is the normalized vector of calibrated scores.
class SmoClassifier final : public Classifier {
  public:
    struct Machine {
        std::vector<std::uint32_t> sv;  // indices into support_vectors_
        std::vector<double> coef;       // alpha_i * y_i
        double rho = 0.0;
        PlattScaling platt;
        std::size_t iterations = 0;
        bool converged = false;
    };

    static std::shared_ptr<const SmoClassifier> train(const SmoParams& params, const Dataset& ds);

    [[nodiscard]] ClassifierKind kind() const override { return ClassifierKind::smo_margin; }
    [[nodiscard]] std::size_t n_labels() const override { return n_labels_; }
    [[nodiscard]] std::size_t n_features() const override { return n_features_; }
    [[nodiscard]] std::uint64_t space() const override { return space_; }
    [[nodiscard]] ProbDist predict_proba(const RowView& x) const override;
    void save(std::ostream& out) const override;
    static std::shared_ptr<const SmoClassifier> load(std::istream& in);

    /// Uncalibrated margin of each machine.
    [[nodiscard]] std::vector<double> decision_values(const RowView& x) const;
    [[nodiscard]] const std::vector<Machine>& machines() const noexcept { return machines_; }
    [[nodiscard]] const FeatureMatrix& support_vectors() const noexcept { return support_vectors_; }

  private:
    SmoClassifier() = default;

    void transform(const RowView& x, std::vector<std::uint32_t>& cols, std::vector<double>& vals) const;

    std::size_t n_labels_ = 0;
    std::size_t n_features_ = 0;
    std::uint64_t space_ = 0;
    bool sparse_ = false;
    PolynomialKernel kernel_;
    std::vector<double> offset_;
    std::vector<double> inv_scale_;
    FeatureMatrix support_vectors_;
    std::vector<Machine> machines_;
};

}  // namespace cmc
