#pragma once

#include "cmc/classifier.hpp"
#include "cmc/random.hpp"

#include <atomic>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <ostream>

namespace cmc::testing {

/// Classifier whose output is a fixed function of the input row. Counts calls.
class StubClassifier final : public Classifier {
  public:
    using Fn = std::function<std::vector<double>(const RowView&)>;

    StubClassifier(std::size_t n_labels, std::size_t n_features, std::uint64_t space, Fn fn)
        : n_labels_(n_labels), n_features_(n_features), space_(space), fn_(std::move(fn)) {}

    [[nodiscard]] ClassifierKind kind() const override { return ClassifierKind::random_forest; }
    [[nodiscard]] std::size_t n_labels() const override { return n_labels_; }
    [[nodiscard]] std::size_t n_features() const override { return n_features_; }
    [[nodiscard]] std::uint64_t space() const override { return space_; }
    [[nodiscard]] ProbDist predict_proba(const RowView& x) const override {
        check_dim(x);
        ++calls_;
        return {space_, fn_(x)};
    }
    void save(std::ostream& out) const override { out << "stub\n"; }

    [[nodiscard]] std::size_t calls() const { return calls_.load(); }

  private:
    std::size_t n_labels_;
    std::size_t n_features_;
    std::uint64_t space_;
    Fn fn_;
    mutable std::atomic<std::size_t> calls_{0};
};

inline std::shared_ptr<StubClassifier> constant_stub(std::vector<double> p, std::size_t n_features = 1,
                                                     std::uint64_t space = 1) {
    const auto k = p.size();
    return std::make_shared<StubClassifier>(k, n_features, space, [p](const RowView&) { return p; });
}

/// Random point on the probability simplex (normalized exponentials).
inline std::vector<double> random_simplex(Rng& rng, std::size_t k) {
    std::vector<double> p(k);
    double s = 0.0;
    for (auto& v : p) {
        v = -std::log(1.0 - rng.uniform());
        s += v;
    }
    for (auto& v : p) {
        v /= s;
    }
    return p;
}

/// Deterministic pseudo-random distribution keyed on the row content, so a
/// stub answers the same instance the same way every time.
inline std::vector<double> hashed_simplex(const RowView& x, std::uint64_t salt, std::size_t k) {
    std::uint64_t h = salt;
    x.for_each([&](std::size_t c, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = mix_seed(h ^ bits ^ (static_cast<std::uint64_t>(c) << 32));
    });
    Rng rng(h);
    return random_simplex(rng, k);
}

}  // namespace cmc::testing
