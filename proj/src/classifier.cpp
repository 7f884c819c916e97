#include "cmc/classifier.hpp"

#include "cmc/errors.hpp"
#include "cmc/random.hpp"
#include "cmc/random_forest.hpp"
#include "cmc/smo.hpp"
#include "serial.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace cmc {

std::uint64_t label_space_id(std::span<const std::string> labels) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& l : labels) {
        for (const char c : l) {
            h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
        }
        h = (h ^ 0xffU) * 0x100000001b3ULL;
    }
    return mix_seed(h ^ labels.size());
}

std::size_t ProbDist::argmax() const {
    if (p.empty()) {
        throw training_error("argmax of an empty distribution");
    }
    return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double ProbDist::max() const {
    return p[argmax()];
}

void ProbDist::validate() const {
    if (p.empty()) {
        throw training_error("empty distribution");
    }
    double sum = 0.0;
    for (const double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw training_error("distribution has a negative or non-finite entry");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw training_error("distribution sums to " + std::to_string(sum));
    }
}

std::string_view to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::random_forest:
            return "random_forest";
        case ClassifierKind::smo_margin:
            return "smo_margin";
        case ClassifierKind::max_confidence_pair:
            return "max_confidence_pair";
    }
    return "?";
}

ClassifierKind classifier_kind_from_string(std::string_view name) {
    for (const auto k : {ClassifierKind::random_forest, ClassifierKind::smo_margin, ClassifierKind::max_confidence_pair}) {
        if (to_string(k) == name) {
            return k;
        }
    }
    throw config_error("unknown classifier kind '" + std::string(name) + "'");
}

ClassifierSpec ClassifierSpec::random_forest(std::size_t trees) {
    ClassifierSpec s;
    s.kind = ClassifierKind::random_forest;
    s.forest.trees = trees;
    return s;
}

ClassifierSpec ClassifierSpec::smo_margin(int degree, double c) {
    ClassifierSpec s;
    s.kind = ClassifierKind::smo_margin;
    s.smo.degree = degree;
    s.smo.c = c;
    return s;
}

ClassifierSpec ClassifierSpec::max_confidence_pair() {
    ClassifierSpec s;
    s.kind = ClassifierKind::max_confidence_pair;
    return s;
}

void ClassifierSpec::validate() const {
    if (forest.trees < 1) {
        throw config_error("trees must be >= 1");
    }
    if (smo.degree < 1) {
        throw config_error("kernel degree must be >= 1");
    }
    if (!(smo.c > 0.0) || !std::isfinite(smo.c)) {
        throw config_error("C must be > 0");
    }
    if (!(smo.tolerance > 0.0)) {
        throw config_error("SMO tolerance must be > 0");
    }
    if (smo.max_iterations < 1) {
        throw config_error("SMO max_iterations must be >= 1");
    }
}

void Classifier::check_dim(const RowView& x) const {
    if (x.dim() != n_features()) {
        throw data_error("instance has " + std::to_string(x.dim()) + " features, model expects " +
                         std::to_string(n_features()));
    }
}

namespace detail {

void check_trainable(const Dataset& ds) {
    if (ds.n_labels() < 2) {
        throw training_error("training needs at least 2 labels");
    }
    const auto counts = ds.label_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            throw training_error("label '" + ds.labels[c] + "' has no training instances");
        }
    }
}

}  // namespace detail

ClassifierPtr fit(const ClassifierSpec& spec, const Dataset& ds, std::uint64_t seed) {
    spec.validate();
    detail::check_trainable(ds);
    switch (spec.kind) {
        case ClassifierKind::random_forest:
            return RandomForest::train(spec.forest, ds, seed);
        case ClassifierKind::smo_margin:
            return SmoClassifier::train(spec.smo, ds);
        case ClassifierKind::max_confidence_pair: {
            auto first = RandomForest::train(spec.forest, ds, derive_seed(seed, "pair.forest"));
            auto second = SmoClassifier::train(spec.smo, ds);
            return std::make_shared<MaxConfidencePair>(std::move(first), std::move(second));
        }
    }
    throw config_error("unknown classifier kind");
}

ProbDist predict_proba(const Classifier& model, const RowView& x) {
    return model.predict_proba(x);
}

ProbDist combine_max_confidence(const ProbDist& a, const ProbDist& b) {
    if (a.space != b.space || a.size() != b.size()) {
        throw training_error("cannot combine distributions over different label spaces");
    }
    return a.max() >= b.max() ? a : b;
}

MaxConfidencePair::MaxConfidencePair(ClassifierPtr first, ClassifierPtr second)
    : first_(std::move(first)), second_(std::move(second)) {
    if (!first_ || !second_) {
        throw training_error("max-confidence pair needs two classifiers");
    }
    if (first_->space() != second_->space() || first_->n_labels() != second_->n_labels() ||
        first_->n_features() != second_->n_features()) {
        throw training_error("max-confidence pair members disagree on label space or width");
    }
}

ProbDist MaxConfidencePair::predict_proba(const RowView& x) const {
    return combine_max_confidence(first_->predict_proba(x), second_->predict_proba(x));
}

void MaxConfidencePair::save(std::ostream& out) const {
    out << "max_confidence_pair\n";
    first_->save(out);
    second_->save(out);
}

namespace {

ClassifierPtr load_body(std::istream& in) {
    const auto kind = classifier_kind_from_string(serial::token(in));
    switch (kind) {
        case ClassifierKind::random_forest:
            return RandomForest::load(in);
        case ClassifierKind::smo_margin:
            return SmoClassifier::load(in);
        case ClassifierKind::max_confidence_pair: {
            auto first = load_body(in);
            auto second = load_body(in);
            return std::make_shared<MaxConfidencePair>(std::move(first), std::move(second));
        }
    }
    throw data_error("model file: unknown classifier kind");
}

}  // namespace

void save_classifier(const Classifier& model, std::ostream& out) {
    out << "cmc-classifier 1\n";
    model.save(out);
    if (!out) {
        throw data_error("failed to write model");
    }
}

ClassifierPtr load_classifier(std::istream& in) {
    serial::expect(in, "cmc-classifier");
    if (serial::read_uint(in) != 1) {
        throw data_error("unsupported model file version");
    }
    return load_body(in);
}

}  // namespace cmc
