#pragma once

#include "cmc/classifier.hpp"
#include "cmc/random.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace cmc {

/// CART tree with axis-aligned `x[feature] <= threshold` splits.
class DecisionTree {
  public:
    struct Node {
        std::uint32_t feature = 0;
        double threshold = 0.0;
        std::int32_t left = -1;  // -1 marks a leaf
        std::int32_t right = -1;
        std::uint32_t label = 0;  // leaf vote

        friend bool operator==(const Node&, const Node&) = default;
    };

    DecisionTree() = default;
    explicit DecisionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    static DecisionTree leaf(std::uint32_t label) { return DecisionTree({Node{0, 0.0, -1, -1, label}}); }

    /// Grows a tree on `rows` (bootstrap indices, repeats allowed) until nodes
    /// are pure or hold fewer than 2 samples. Gini impurity; per split
    /// `mtry` random candidate features, drawing more when none can split.
    static DecisionTree grow(const Dataset& ds, std::vector<std::size_t> rows, std::size_t mtry, Rng& rng);

    [[nodiscard]] std::uint32_t vote(const RowView& x) const;
    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] std::size_t depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

  private:
    std::vector<Node> nodes_;
};

/// Bagged CART ensemble; probabilities are vote fractions.
class RandomForest final : public Classifier {
  public:
    RandomForest(std::vector<DecisionTree> trees, std::size_t n_labels, std::size_t n_features, std::uint64_t space);

    static std::shared_ptr<const RandomForest> train(const ForestParams& params, const Dataset& ds, std::uint64_t seed);

    [[nodiscard]] ClassifierKind kind() const override { return ClassifierKind::random_forest; }
    [[nodiscard]] std::size_t n_labels() const override { return n_labels_; }
    [[nodiscard]] std::size_t n_features() const override { return n_features_; }
    [[nodiscard]] std::uint64_t space() const override { return space_; }
    [[nodiscard]] ProbDist predict_proba(const RowView& x) const override;
    void save(std::ostream& out) const override;
    static std::shared_ptr<const RandomForest> load(std::istream& in);

    [[nodiscard]] const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  private:
    std::vector<DecisionTree> trees_;
    std::size_t n_labels_;
    std::size_t n_features_;
    std::uint64_t space_;
};

}  // namespace cmc
