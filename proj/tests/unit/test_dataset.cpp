#include "cmc/dataset.hpp"
#include "cmc/errors.hpp"
#include "support/synthetic.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

namespace fs = std::filesystem;
using namespace cmc;

namespace {

fs::path data_file(const char* name) {
    return fs::path(CMC_DATA_DIR) / name;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("cmc_ds_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

Dataset car() {
    return load_csv(data_file("car.csv"), "class", read_schema(data_file("car.schema")));
}

}  // namespace

TEST_CASE("car loads with ordinal codes in schema order") {
    const auto ds = car();
    CHECK(ds.size() == 1728);
    CHECK(ds.n_features() == 6);
    CHECK(ds.n_labels() == 4);
    ds.validate();
    // vhigh,vhigh,2,2,small,low
    CHECK(ds.row(0).to_dense() == std::vector<double>{3, 3, 0, 0, 0, 0});
    CHECK(ds.labels[ds.y[0]] == "unacc");
}

TEST_CASE("car class statistics: one majority class above the balance point") {
    const auto s = class_stats(car());
    CHECK(s.total == 1728);
    CHECK(s.balance_point == doctest::Approx(432.0));
    REQUIRE(s.majority.size() == 1);
    CHECK(s.labels[s.majority[0]] == "unacc");
    CHECK(s.counts[s.majority[0]] == 1210);
    CHECK(s.minority.size() == 3);
}

TEST_CASE("new-thyroid is numeric and has one majority class") {
    const auto ds = load_csv(data_file("new-thyroid.csv"), "class", infer_schema(data_file("new-thyroid.csv"), "class"));
    CHECK(ds.size() == 215);
    CHECK(ds.n_features() == 5);
    for (const auto& f : ds.schema.features()) {
        CHECK(f.kind == FeatureKind::numeric);
    }
    const auto s = class_stats(ds);
    CHECK(s.majority.size() == 1);
    CHECK(s.counts[s.majority[0]] == 150);
}

TEST_CASE("majority override by name and by count") {
    const auto ds = car();
    const auto s = class_stats(ds, std::vector<std::string>{"unacc", "acc"});
    CHECK(s.majority.size() == 2);
    const auto top = most_frequent(class_stats(ds), 2);
    CHECK(top == s.majority);
    CHECK_THROWS_AS(class_stats(ds, std::vector<std::string>{"nope"}), config_error);
}

TEST_CASE("stratified split partitions rows and keeps class proportions") {
    const auto ds = car();
    const auto [train, test] = split_indices(ds, 0.8, 3);
    std::set<std::size_t> all(train.begin(), train.end());
    for (const auto i : test) {
        CHECK(all.insert(i).second);
    }
    CHECK(all.size() == ds.size());
    const auto counts = ds.label_counts();
    const auto tr = ds.subset(train).label_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) {
        CHECK(tr[c] == static_cast<std::size_t>(std::llround(0.8 * static_cast<double>(counts[c]))));
    }
    CHECK(split_indices(ds, 0.8, 3) == split_indices(ds, 0.8, 3));
    CHECK(split_indices(ds, 0.8, 3) != split_indices(ds, 0.8, 4));
    CHECK_THROWS_AS(split_indices(ds, 1.0, 3), config_error);
}

TEST_CASE("sparse round trip preserves every instance") {
    TempDir tmp;
    testing::TextSpec spec;
    spec.counts = {20, 10, 5};
    spec.vocabulary = 200;
    const auto ds = testing::synthetic_text(spec);
    save_sparse(ds, tmp.path / "m.mat", tmp.path / "m.labels");
    const auto back = load_sparse(tmp.path / "m.mat", tmp.path / "m.labels");
    CHECK(back.x.is_sparse());
    CHECK(same_instances(ds, back));
}

TEST_CASE("csv round trip preserves every instance") {
    TempDir tmp;
    const auto ds = testing::blobs({10, 8}, 3, 1.0, 5);
    save_csv(ds, tmp.path / "b.csv");
    const auto back = load_csv(tmp.path / "b.csv", "class", infer_schema(tmp.path / "b.csv", "class"));
    CHECK(same_instances(ds, back));
}

TEST_CASE("malformed inputs raise data errors") {
    TempDir tmp;
    const auto p = tmp.path / "x.mat";
    const auto l = tmp.path / "x.labels";
    write(l, "a\nb\n");

    write(p, "2 3 2\n1 1.0\n4 2.0\n");
    CHECK_THROWS_AS(load_sparse(p, l), data_error);
    write(p, "2 3 3\n1 1.0\n2 2.0\n");
    CHECK_THROWS_AS(load_sparse(p, l), data_error);
    write(p, "2 3 2\n1 1.0 2\n2 2.0\n");
    CHECK_THROWS_AS(load_sparse(p, l), data_error);
    write(p, "3 3 2\n1 1.0\n2 2.0\n");
    CHECK_THROWS_AS(load_sparse(p, l), data_error);
    write(p, "2 3 2\n1 1.0\n2 2.0\n");
    CHECK_NOTHROW(load_sparse(p, l));

    const auto c = tmp.path / "x.csv";
    write(c, "a,b,class\n1,2,x\n1,q,y\n");
    CHECK_THROWS_AS(load_csv(c, "class", FeatureSchema::numeric(2)), data_error);
    write(c, "a,b,class\n1,2,x\n1,2\n");
    CHECK_THROWS_AS(load_csv(c, "class", infer_schema(c, "class")), data_error);
    CHECK_THROWS_AS(load_csv(tmp.path / "missing.csv", "class", FeatureSchema::numeric(2)), data_error);
}

TEST_CASE("views collapse labels with the cluster in slot 0") {
    ClassStats s;
    s.labels = {"a", "b", "c", "d"};
    s.counts = {50, 5, 40, 5};
    s.total = 100;
    s.balance_point = 25;
    s.majority = {0, 2};
    s.minority = {1, 3};

    const auto bin = make_view(s, ViewKind::binary);
    CHECK(bin.view_labels == std::vector<std::string>{"<majority>", "<minority>"});
    CHECK(bin.mapping == std::vector<LabelId>{0, 1, 0, 1});

    const auto m1 = make_view(s, ViewKind::majority_cluster);
    CHECK(m1.view_labels == std::vector<std::string>{"<majority>", "b", "d"});
    CHECK(m1.mapping == std::vector<LabelId>{0, 1, 0, 2});
    CHECK(m1.members[0] == std::vector<LabelId>{0, 2});
    CHECK(m1.members[2] == std::vector<LabelId>{3});

    const auto m2 = make_view(s, ViewKind::minority_cluster);
    CHECK(m2.view_labels == std::vector<std::string>{"<minority>", "a", "c"});
    CHECK(m2.mapping == std::vector<LabelId>{1, 0, 2, 0});

    s.minority.clear();
    CHECK_THROWS_AS(make_view(s, ViewKind::binary), data_error);
}

TEST_CASE("apply_view relabels without touching features") {
    const auto ds = testing::blobs({6, 3, 2}, 2, 1.0, 1);
    const auto s = class_stats(ds);
    const auto v = apply_view(ds, make_view(s, ViewKind::binary));
    CHECK(v.x == ds.x);
    CHECK(v.n_labels() == 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(v.y[i] == (s.is_majority(ds.y[i]) ? 0u : 1u));
    }
}

TEST_CASE("single-row csv with one numeric feature") {
    TempDir tmp;
    write(tmp.path / "one.csv", "f,class\n3.5,a\n");
    const auto ds = load_csv(tmp.path / "one.csv", "class", infer_schema(tmp.path / "one.csv", "class"));
    CHECK(ds.size() == 1);
    CHECK(ds.row(0).to_dense() == std::vector<double>{3.5});
    CHECK(ds.y == std::vector<LabelId>{0});
}

TEST_CASE("sparse header '1 3 1' with row '2 5.0'") {
    TempDir tmp;
    write(tmp.path / "s.mat", "1 3 1\n2 5.0\n");
    write(tmp.path / "s.labels", "x\n");
    const auto ds = load_sparse(tmp.path / "s.mat", tmp.path / "s.labels");
    CHECK(ds.n_features() == 3);
    CHECK(ds.row(0).to_dense() == std::vector<double>{0.0, 5.0, 0.0});
    CHECK(ds.labels == std::vector<std::string>{"x"});
}

TEST_CASE("ten balanced instances split 8/2 with one test instance per class") {
    const auto ds = testing::blobs({5, 5}, 1, 1.0, 2);
    const auto [train, test] = split(ds, 0.8, 1);
    CHECK(train.size() == 8);
    CHECK(test.label_counts() == std::vector<std::size_t>{1, 1});
}

TEST_CASE("car split sums per-class rounded counts") {
    const auto [train, test] = split(car(), 0.8, 17);
    CHECK((train.size() == 1382 || train.size() == 1383));
    CHECK(train.size() + test.size() == 1728);
}

TEST_CASE("exactly balanced classes have no majority") {
    const auto s = class_stats(testing::blobs({5, 5, 5}, 1, 1.0, 1));
    CHECK(s.majority.empty());
    CHECK(s.minority.size() == 3);
}

TEST_CASE("fbis-shaped counts: 4 majority classes and cluster view sizes") {
    testing::TextSpec spec;
    spec.counts = testing::fbis_like_counts();
    spec.vocabulary = 50;
    spec.min_length = 5;
    spec.max_length = 10;
    const auto ds = testing::synthetic_text(spec);
    const auto s = class_stats(ds);
    CHECK(s.majority.size() == 4);
    CHECK(s.minority.size() == 13);
    CHECK(make_view(s, ViewKind::majority_cluster).size() == 14);
    CHECK(make_view(s, ViewKind::minority_cluster).size() == 5);
    const auto full = make_view(s, ViewKind::full);
    CHECK_FALSE(full.cluster_slot.has_value());
    CHECK(full.size() == 17);

    const auto m1 = apply_view(ds, make_view(s, ViewKind::majority_cluster));
    CHECK(m1.label_counts()[0] == 506 + 387 + 358 + 190);
    const auto same = apply_view(ds, full);
    CHECK(same_instances(ds, same));
}

TEST_CASE("new-thyroid binary view keeps the 69.77 / 30.23 split") {
    const auto path = data_file("new-thyroid.csv");
    const auto ds = load_csv(path, "class", infer_schema(path, "class"));
    const auto s = class_stats(ds);
    CHECK(ds.labels[s.majority[0]] == "normal");
    const auto b = apply_view(ds, make_view(s, ViewKind::binary));
    CHECK(static_cast<double>(b.label_counts()[0]) / 215.0 == doctest::Approx(0.6977).epsilon(1e-3));
}
