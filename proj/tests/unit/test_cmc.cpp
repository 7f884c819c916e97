#include "cmc/cmc.hpp"
#include "cmc/errors.hpp"
#include "support/stubs.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

using namespace cmc;
using testing::constant_stub;

namespace {

const std::vector<double> origin{0.0};
const RowView x0 = RowView::dense(origin);

ClassStats three_class_stats() {
    ClassStats s;
    s.labels = {"small", "big", "mid"};
    s.counts = {10, 70, 20};
    s.total = 100;
    s.balance_point = 100.0 / 3.0;
    s.majority = {1};
    s.minority = {0, 2};
    return s;
}

MultistageModel single(ClassifierPtr c) {
    return MultistageModel({std::move(c)}, StageThresholds::defaults(1));
}

}  // namespace

TEST_CASE("majority-leaning binary layer answers the majority label without consulting the multiclass layer") {
    const auto multi = constant_stub({0.1, 0.2, 0.7}, 1, 2);
    const CmcModel m(single(constant_stub({0.8, 0.2})), single(multi), three_class_stats());
    const auto p = m.predict(x0);
    CHECK(p.label == 1);
    CHECK(p.layer == CmcLayer::binary);
    CHECK_FALSE(p.multi.has_value());
    CHECK(multi->calls() == 0);
}

TEST_CASE("minority-leaning or tied binary layer defers to the multiclass argmax") {
    for (const auto& b : {std::vector<double>{0.3, 0.7}, std::vector<double>{0.5, 0.5}}) {
        const auto multi = constant_stub({0.1, 0.2, 0.7}, 1, 2);
        const CmcModel m(single(constant_stub(b)), single(multi), three_class_stats());
        const auto p = m.predict(x0);
        CHECK(p.label == 2);
        CHECK(p.layer == CmcLayer::multiclass);
        REQUIRE(p.multi.has_value());
        CHECK(multi->calls() == 1);
    }
}

TEST_CASE("the multiclass layer may still answer the majority label") {
    const CmcModel m(single(constant_stub({0.4, 0.6})), single(constant_stub({0.1, 0.8, 0.1}, 1, 2)),
                     three_class_stats());
    CHECK(m.predict(x0).label == 1);
}

TEST_CASE("dispatch agrees with a direct restatement on random distributions") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const auto b = testing::random_simplex(rng, 2);
        const auto mc = testing::random_simplex(rng, 4);
        int called = 0;
        const auto p = cmc_dispatch({{0, b}, 1}, 3, [&] {
            ++called;
            return StagedPrediction{{0, mc}, 2};
        });
        const bool majority = b[0] > b[1];
        CHECK(p.label == (majority ? 3 : ProbDist{0, mc}.argmax()));
        CHECK(called == (majority ? 0 : 1));
    }
}

TEST_CASE("CMC needs exactly one majority class") {
    auto s = three_class_stats();
    s.majority = {1, 2};
    s.minority = {0};
    CHECK_THROWS_AS(require_single_majority(s), config_error);
    try {
        require_single_majority(s);
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("cmcm") != std::string::npos);
    }
    s.majority.clear();
    s.minority = {0, 1, 2};
    CHECK_THROWS_AS(require_single_majority(s), config_error);
}

TEST_CASE("CMC model rejects layers over the wrong label spaces") {
    CHECK_THROWS_AS(CmcModel(single(constant_stub({0.2, 0.3, 0.5})), single(constant_stub({0.1, 0.2, 0.7})),
                             three_class_stats()),
                    training_error);
    CHECK_THROWS_AS(CmcModel(single(constant_stub({0.5, 0.5})), single(constant_stub({0.5, 0.5})),
                             three_class_stats()),
                    training_error);
}

TEST_CASE("fit_cmc trains both layers and predicts well on separated blobs") {
    const auto ds = testing::blobs({120, 30, 20}, 3, 2.0, 4);
    const auto [train, test] = split(ds, 0.8, 1);
    const auto stats = class_stats(train);
    const auto m = fit_cmc(train, stats, StageThresholds::defaults(3), StageThresholds::defaults(3), 7);
    CHECK(m.binary().n_labels() == 2);
    CHECK(m.multi().n_labels() == 3);
    std::size_t ok = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        ok += predict_cmc(m, test.row(i)).label == test.y[i];
    }
    CHECK(static_cast<double>(ok) / static_cast<double>(test.size()) > 0.9);
}

TEST_CASE("worked CMC examples") {
    int called = 0;
    const auto multi = [&] {
        ++called;
        return StagedPrediction{{0, {0.1, 0.7, 0.2}}, 1};
    };
    CHECK(cmc_dispatch({{0, {0.8, 0.2}}, 1}, 0, multi).label == 0);
    CHECK(called == 0);
    CHECK(cmc_dispatch({{0, {0.2, 0.8}}, 1}, 0, multi).label == 1);
    CHECK(cmc_dispatch({{0, {0.5, 0.5}}, 1}, 0, multi).layer == CmcLayer::multiclass);
    CHECK(called == 2);
}
