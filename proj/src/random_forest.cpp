#include "cmc/random_forest.hpp"

#include "cmc/errors.hpp"
#include "cmc/parallel.hpp"
#include "serial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace cmc {

namespace {

// Column-major copy of the training matrix so a node can gather one feature
// without a per-row binary search. Falls back to row access when too large.
class Columns {
  public:
    explicit Columns(const Dataset& ds) : ds_(ds), n_(ds.size()) {
        constexpr std::size_t max_entries = std::size_t{1} << 24;
        if (n_ * ds.n_features() <= max_entries) {
            data_.assign(n_ * ds.n_features(), 0.0);
            for (std::size_t i = 0; i < n_; ++i) {
                ds.row(i).for_each([&](std::size_t c, double v) { data_[c * n_ + i] = v; });
            }
        }
    }

    [[nodiscard]] double get(std::size_t feature, std::size_t row) const {
        return data_.empty() ? ds_.row(row).at(feature) : data_[feature * n_ + row];
    }

  private:
    const Dataset& ds_;
    std::size_t n_;
    std::vector<double> data_;
};

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = -1.0;
};

// Gini gain is monotone in sum_c L_c^2/nL + sum_c R_c^2/nR, updated in O(1)
// per moved instance.
class Sweep {
  public:
    explicit Sweep(const std::vector<std::size_t>& totals) : left_(totals.size(), 0), right_(totals) {
        for (const auto t : totals) {
            n_right_ += t;
            sq_right_ += static_cast<double>(t) * static_cast<double>(t);
        }
    }

    void move(std::size_t c) {
        sq_left_ += 2.0 * static_cast<double>(left_[c]) + 1.0;
        sq_right_ -= 2.0 * static_cast<double>(right_[c]) - 1.0;
        ++left_[c];
        --right_[c];
        ++n_left_;
        --n_right_;
    }

    [[nodiscard]] double score() const {
        return sq_left_ / static_cast<double>(n_left_) + sq_right_ / static_cast<double>(n_right_);
    }

  private:
    std::vector<std::size_t> left_;
    std::vector<std::size_t> right_;
    std::size_t n_left_ = 0;
    std::size_t n_right_ = 0;
    double sq_left_ = 0.0;
    double sq_right_ = 0.0;
};

struct Grower {
    const Dataset& ds;
    const Columns& cols;
    std::size_t mtry;
    Rng& rng;

    std::vector<std::size_t> rows;
    std::vector<DecisionTree::Node> nodes;
    std::vector<std::uint32_t> features;
    std::vector<std::pair<double, std::uint32_t>> nonzero;
    std::vector<std::uint32_t> zero_labels;
    std::vector<std::pair<double, std::uint32_t>> ordered;

    // Best split on one feature over rows[lo, hi), or score < 0 if constant.
    Split best_on(std::size_t f, std::size_t lo, std::size_t hi, const std::vector<std::size_t>& totals) {
        nonzero.clear();
        zero_labels.clear();
        for (std::size_t r = lo; r < hi; ++r) {
            const double v = cols.get(f, rows[r]);
            const auto label = static_cast<std::uint32_t>(ds.y[rows[r]]);
            if (v == 0.0) {
                zero_labels.push_back(label);
            } else {
                nonzero.emplace_back(v, label);
            }
        }
        std::sort(nonzero.begin(), nonzero.end());
        ordered.clear();
        const auto first_pos =
            std::partition_point(nonzero.begin(), nonzero.end(), [](const auto& p) { return p.first < 0.0; });
        ordered.insert(ordered.end(), nonzero.begin(), first_pos);
        for (const auto l : zero_labels) {
            ordered.emplace_back(0.0, l);
        }
        ordered.insert(ordered.end(), first_pos, nonzero.end());

        Split best;
        best.feature = f;
        if (ordered.front().first == ordered.back().first) {
            return best;
        }
        Sweep sweep(totals);
        for (std::size_t i = 0; i + 1 < ordered.size(); ++i) {
            sweep.move(ordered[i].second);
            const double a = ordered[i].first;
            const double b = ordered[i + 1].first;
            if (a == b) {
                continue;
            }
            const double s = sweep.score();
            if (s > best.score) {
                double mid = a + (b - a) / 2.0;
                if (!(mid < b)) {
                    mid = a;
                }
                best.score = s;
                best.threshold = mid;
            }
        }
        return best;
    }

    std::uint32_t leaf_label(const std::vector<std::size_t>& totals) {
        const auto top = *std::max_element(totals.begin(), totals.end());
        std::vector<std::uint32_t> tied;
        for (std::size_t c = 0; c < totals.size(); ++c) {
            if (totals[c] == top) {
                tied.push_back(static_cast<std::uint32_t>(c));
            }
        }
        return tied.size() == 1 ? tied[0] : tied[rng.below(tied.size())];
    }

    void grow() {
        const std::size_t nf = ds.n_features();
        features.resize(nf);
        struct Task {
            std::size_t node, lo, hi;
        };
        std::vector<Task> stack;
        nodes.push_back({});
        stack.push_back({0, 0, rows.size()});
        std::vector<std::size_t> totals(ds.n_labels());

        while (!stack.empty()) {
            const auto task = stack.back();
            stack.pop_back();
            std::fill(totals.begin(), totals.end(), 0);
            for (std::size_t r = task.lo; r < task.hi; ++r) {
                ++totals[ds.y[rows[r]]];
            }
            const auto present = std::count_if(totals.begin(), totals.end(), [](auto t) { return t > 0; });

            Split best;
            if (present > 1 && task.hi - task.lo >= 2) {
                // Partial Fisher-Yates: features[0..drawn) is a random sample
                // without replacement; keep drawing past mtry until a feature
                // can split this node.
                std::iota(features.begin(), features.end(), 0U);
                std::size_t drawn = 0;
                while (drawn < nf && (drawn < mtry || best.score < 0.0)) {
                    const auto j = drawn + rng.below(nf - drawn);
                    std::swap(features[drawn], features[j]);
                    const auto cand = best_on(features[drawn], task.lo, task.hi, totals);
                    if (cand.score > best.score) {
                        best = cand;
                    }
                    ++drawn;
                }
            }

            if (best.score < 0.0) {
                nodes[task.node] = {0, 0.0, -1, -1, leaf_label(totals)};
                continue;
            }
            const auto mid_it = std::partition(
                rows.begin() + static_cast<std::ptrdiff_t>(task.lo), rows.begin() + static_cast<std::ptrdiff_t>(task.hi),
                [&](std::size_t r) { return cols.get(best.feature, r) <= best.threshold; });
            const auto mid = static_cast<std::size_t>(mid_it - rows.begin());
            const auto left = static_cast<std::int32_t>(nodes.size());
            nodes.push_back({});
            nodes.push_back({});
            nodes[task.node] = {static_cast<std::uint32_t>(best.feature), best.threshold, left, left + 1, 0};
            stack.push_back({static_cast<std::size_t>(left) + 1, mid, task.hi});
            stack.push_back({static_cast<std::size_t>(left), task.lo, mid});
        }
    }
};

DecisionTree grow_with(const Dataset& ds, const Columns& cols, std::vector<std::size_t> rows, std::size_t mtry,
                       Rng& rng) {
    if (rows.empty()) {
        throw training_error("cannot grow a tree on zero instances");
    }
    Grower g{ds, cols, std::max<std::size_t>(1, mtry), rng, std::move(rows), {}, {}, {}, {}, {}};
    g.grow();
    return DecisionTree(std::move(g.nodes));
}

}  // namespace

DecisionTree DecisionTree::grow(const Dataset& ds, std::vector<std::size_t> rows, std::size_t mtry, Rng& rng) {
    const Columns cols(ds);
    return grow_with(ds, cols, std::move(rows), mtry, rng);
}

std::uint32_t DecisionTree::vote(const RowView& x) const {
    std::size_t i = 0;
    while (nodes_[i].left >= 0) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(x.at(n.feature) <= n.threshold ? n.left : n.right);
    }
    return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) {
        return 0;
    }
    std::size_t best = 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 1}};
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (nodes_[i].left >= 0) {
            stack.emplace_back(static_cast<std::size_t>(nodes_[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes_[i].right), d + 1);
        }
    }
    return best;
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t n_labels, std::size_t n_features,
                           std::uint64_t space)
    : trees_(std::move(trees)), n_labels_(n_labels), n_features_(n_features), space_(space) {
    if (trees_.empty()) {
        throw training_error("a forest needs at least one tree");
    }
}

std::shared_ptr<const RandomForest> RandomForest::train(const ForestParams& params, const Dataset& ds,
                                                        std::uint64_t seed) {
    if (params.trees < 1) {
        throw config_error("forest needs trees >= 1");
    }
    detail::check_trainable(ds);
    const auto mtry = params.features_per_split > 0
                          ? params.features_per_split
                          : std::max<std::size_t>(
                                1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(ds.n_features())))));
    const Columns cols(ds);
    std::vector<DecisionTree> trees(params.trees);
    parallel_for(params.trees, 0, [&](std::size_t t) {
        Rng rng(derive_seed(seed, t));
        std::vector<std::size_t> rows(ds.size());
        for (auto& r : rows) {
            r = rng.below(ds.size());
        }
        trees[t] = grow_with(ds, cols, std::move(rows), mtry, rng);
    });
    return std::make_shared<RandomForest>(std::move(trees), ds.n_labels(), ds.n_features(), label_space_id(ds.labels));
}

ProbDist RandomForest::predict_proba(const RowView& x) const {
    check_dim(x);
    std::vector<std::size_t> votes(n_labels_, 0);
    for (const auto& t : trees_) {
        ++votes[t.vote(x)];
    }
    ProbDist d{space_, std::vector<double>(n_labels_)};
    const auto n = static_cast<double>(trees_.size());
    for (std::size_t c = 0; c < n_labels_; ++c) {
        d.p[c] = static_cast<double>(votes[c]) / n;
    }
    return d;
}

void RandomForest::save(std::ostream& out) const {
    out << "random_forest " << n_labels_ << ' ' << n_features_ << ' ' << space_ << ' ' << trees_.size() << '\n';
    for (const auto& t : trees_) {
        out << "tree " << t.nodes().size() << '\n';
        for (const auto& n : t.nodes()) {
            out << n.feature << ' ';
            serial::write_double(out, n.threshold);
            out << ' ' << n.left << ' ' << n.right << ' ' << n.label << '\n';
        }
    }
}

std::shared_ptr<const RandomForest> RandomForest::load(std::istream& in) {
    const auto n_labels = serial::read_uint(in);
    const auto n_features = serial::read_uint(in);
    const auto space = serial::read_uint(in);
    const auto n_trees = serial::read_uint(in);
    std::vector<DecisionTree> trees;
    trees.reserve(n_trees);
    for (std::uint64_t t = 0; t < n_trees; ++t) {
        serial::expect(in, "tree");
        const auto n_nodes = serial::read_uint(in);
        std::vector<DecisionTree::Node> nodes(n_nodes);
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            auto& n = nodes[i];
            n.feature = static_cast<std::uint32_t>(serial::read_uint(in));
            n.threshold = serial::read_double(in);
            n.left = static_cast<std::int32_t>(serial::read_int(in));
            n.right = static_cast<std::int32_t>(serial::read_int(in));
            n.label = static_cast<std::uint32_t>(serial::read_uint(in));
            const bool leaf = n.left < 0;
            if ((leaf && n.label >= n_labels) || (!leaf && (n.feature >= n_features || n.left <= static_cast<std::int32_t>(i) || n.right <= n.left ||
                                                            n.right >= std::ssize(nodes)))) {
                throw data_error("model file: corrupt tree node");
            }
        }
        if (nodes.empty()) {
            throw data_error("model file: empty tree");
        }
        trees.emplace_back(std::move(nodes));
    }
    return std::make_shared<RandomForest>(std::move(trees), n_labels, n_features, space);
}

}  // namespace cmc
