#pragma once

#include "cmc/dataset.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cmc {

/// Fingerprint of an ordered label list; distributions over different label
/// spaces carry different ids.
std::uint64_t label_space_id(std::span<const std::string> labels);

/// Normalized probability vector over one label space.
struct ProbDist {
    std::uint64_t space = 0;
    std::vector<double> p;

    [[nodiscard]] std::size_t size() const noexcept { return p.size(); }
    /// Index of the largest probability; ties go to the lowest index.
    [[nodiscard]] std::size_t argmax() const;
    [[nodiscard]] double max() const;
    /// Throws training_error unless non-negative and summing to 1 within 1e-9.
    void validate() const;

    friend bool operator==(const ProbDist&, const ProbDist&) = default;
};

enum class ClassifierKind { random_forest, smo_margin, max_confidence_pair };

std::string_view to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(std::string_view name);

struct ForestParams {
    std::size_t trees = 100;
    /// Candidate features per split; 0 means floor(sqrt(n_features)).
    std::size_t features_per_split = 0;
};

struct SmoParams {
    int degree = 1;
    double c = 1.0;
    double tolerance = 1e-3;
    std::size_t max_iterations = 1'000'000;
    /// Scale every attribute to [0, 1] before training.
    bool normalize = true;
    /// Kernel matrix memory budget; above it kernel rows are cached on demand.
    std::size_t cache_mb = 256;
};

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::random_forest;
    ForestParams forest;
    SmoParams smo;

    static ClassifierSpec random_forest(std::size_t trees = 100);
    static ClassifierSpec smo_margin(int degree = 1, double c = 1.0);
    static ClassifierSpec max_confidence_pair();

    void validate() const;
};

/// A trained probabilistic classifier. Immutable after construction;
/// predict_proba is reentrant.
class Classifier {
  public:
    virtual ~Classifier() = default;

    [[nodiscard]] virtual ClassifierKind kind() const = 0;
    [[nodiscard]] virtual std::size_t n_labels() const = 0;
    [[nodiscard]] virtual std::size_t n_features() const = 0;
    [[nodiscard]] virtual std::uint64_t space() const = 0;
    [[nodiscard]] virtual ProbDist predict_proba(const RowView& x) const = 0;

    /// Versioned text dump; doubles are written as hex floats so a reload
    /// predicts bit-identically.
    virtual void save(std::ostream& out) const = 0;

  protected:
    void check_dim(const RowView& x) const;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

/// Trains one classifier. max_confidence_pair trains a default forest and
/// SMO on `ds` and combines them.
ClassifierPtr fit(const ClassifierSpec& spec, const Dataset& ds, std::uint64_t seed);

ProbDist predict_proba(const Classifier& model, const RowView& x);

/// The input with the higher top probability; ties keep `a`.
ProbDist combine_max_confidence(const ProbDist& a, const ProbDist& b);

/// Picks, per instance, whichever of two classifiers is more confident.
class MaxConfidencePair final : public Classifier {
  public:
    MaxConfidencePair(ClassifierPtr first, ClassifierPtr second);

    [[nodiscard]] ClassifierKind kind() const override { return ClassifierKind::max_confidence_pair; }
    [[nodiscard]] std::size_t n_labels() const override { return first_->n_labels(); }
    [[nodiscard]] std::size_t n_features() const override { return first_->n_features(); }
    [[nodiscard]] std::uint64_t space() const override { return first_->space(); }
    [[nodiscard]] ProbDist predict_proba(const RowView& x) const override;
    void save(std::ostream& out) const override;

    [[nodiscard]] const ClassifierPtr& first() const noexcept { return first_; }
    [[nodiscard]] const ClassifierPtr& second() const noexcept { return second_; }

  private:
    ClassifierPtr first_;
    ClassifierPtr second_;
};

void save_classifier(const Classifier& model, std::ostream& out);
ClassifierPtr load_classifier(std::istream& in);

namespace detail {
/// Throws training_error when a label has no instances or fewer than 2 labels.
void check_trainable(const Dataset& ds);
}  // namespace detail

}  // namespace cmc
