#include "cmc/dataset.hpp"

#include "cmc/errors.hpp"
#include "cmc/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace cmc {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.emplace_back(trim(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.emplace_back(trim(field));
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return {buf, ptr};
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) {
        return false;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    return in;
}

std::string strip_bom(std::string line) {
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    return line;
}

}  // namespace

// ------------------------------------------------------------------ schema

FeatureSchema::FeatureSchema(std::vector<Feature> features) : features_(std::move(features)) {
    std::set<std::string> seen;
    for (const auto& f : features_) {
        if (!seen.insert(f.name).second) {
            throw data_error("duplicate feature name '" + f.name + "'");
        }
        if (f.kind == FeatureKind::ordinal) {
            if (f.categories.size() < 2) {
                throw data_error("ordinal feature '" + f.name + "' needs at least 2 categories");
            }
            std::set<std::string> cats(f.categories.begin(), f.categories.end());
            if (cats.size() != f.categories.size()) {
                throw data_error("ordinal feature '" + f.name + "' repeats a category");
            }
        }
    }
}

FeatureSchema FeatureSchema::numeric(std::size_t n) {
    std::vector<Feature> fs;
    fs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        fs.push_back({"f" + std::to_string(i + 1), FeatureKind::numeric, {}});
    }
    return FeatureSchema(std::move(fs));
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i) {
        if (features_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

FeatureSchema read_schema(const std::filesystem::path& path) {
    auto in = open_input(path);
    std::vector<Feature> fs;
    std::string line;
    std::size_t lineno = 0;
    while (read_line(in, line)) {
        ++lineno;
        const auto t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        std::istringstream ls{std::string(t)};
        std::string name;
        std::string kind;
        std::string cats;
        ls >> name >> kind >> cats;
        if (kind == "numeric") {
            fs.push_back({name, FeatureKind::numeric, {}});
        } else if (kind == "ordinal" && !cats.empty()) {
            Feature f{name, FeatureKind::ordinal, split_csv_line(cats)};
            fs.push_back(std::move(f));
        } else {
            throw data_error(path.string() + ":" + std::to_string(lineno) + ": expected 'name numeric' or 'name ordinal a,b,...'");
        }
    }
    return FeatureSchema(std::move(fs));
}

FeatureSchema infer_schema(const std::filesystem::path& csv_path, const std::string& label_column) {
    auto in = open_input(csv_path);
    std::string line;
    if (!read_line(in, line)) {
        throw data_error(csv_path.string() + ": empty file");
    }
    const auto header = split_csv_line(strip_bom(line));
    std::vector<bool> numeric(header.size(), true);
    std::vector<std::vector<std::string>> cats(header.size());
    std::vector<std::set<std::string>> seen(header.size());
    while (read_line(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        for (std::size_t c = 0; c < std::min(fields.size(), header.size()); ++c) {
            if (!parse_number(fields[c])) {
                numeric[c] = false;
            }
            if (seen[c].insert(fields[c]).second) {
                cats[c].push_back(fields[c]);
            }
        }
    }
    std::vector<Feature> fs;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == label_column) {
            continue;
        }
        if (numeric[c]) {
            fs.push_back({header[c], FeatureKind::numeric, {}});
        } else {
            fs.push_back({header[c], FeatureKind::ordinal, cats[c]});
        }
    }
    return FeatureSchema(std::move(fs));
}

// ----------------------------------------------------------------- dataset

std::vector<std::size_t> Dataset::label_counts() const {
    std::vector<std::size_t> counts(labels.size(), 0);
    for (const auto label : y) {
        ++counts.at(label);
    }
    return counts;
}

void Dataset::validate() const {
    if (x.rows() != y.size()) {
        throw data_error("row count " + std::to_string(x.rows()) + " != label count " + std::to_string(y.size()));
    }
    if (schema.size() != x.cols()) {
        throw data_error("schema has " + std::to_string(schema.size()) + " features, matrix has " + std::to_string(x.cols()));
    }
    for (const auto label : y) {
        if (label >= labels.size()) {
            throw data_error("label id " + std::to_string(label) + " out of range");
        }
    }
    for (std::size_t i = 0; i < x.rows(); ++i) {
        x.row(i).for_each([&](std::size_t, double v) {
            if (std::isnan(v)) {
                throw data_error("NaN in row " + std::to_string(i));
            }
        });
    }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    Dataset out{schema, x.select(rows), {}, labels};
    out.y.reserve(rows.size());
    for (const auto r : rows) {
        out.y.push_back(y.at(r));
    }
    return out;
}

bool same_instances(const Dataset& a, const Dataset& b) {
    if (a.size() != b.size() || a.labels != b.labels || a.n_features() != b.n_features() || a.y != b.y) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.row(i).to_dense() != b.row(i).to_dense()) {
            return false;
        }
    }
    return true;
}

// ----------------------------------------------------------------- loaders

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, const FeatureSchema& schema) {
    auto in = open_input(path);
    std::string line;
    if (!read_line(in, line) || trim(line).empty()) {
        throw data_error(path.string() + ": empty file");
    }
    const auto header = split_csv_line(strip_bom(line));

    std::optional<std::size_t> label_col;
    std::vector<std::optional<std::size_t>> feature_of(header.size());
    std::vector<bool> present(schema.size(), false);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == label_column) {
            label_col = c;
        } else if (const auto f = schema.index_of(header[c])) {
            feature_of[c] = *f;
            present[*f] = true;
        } else {
            throw data_error(path.string() + ": column '" + header[c] + "' is not in the schema");
        }
    }
    if (!label_col) {
        throw data_error(path.string() + ": missing label column '" + label_column + "'");
    }
    for (std::size_t f = 0; f < schema.size(); ++f) {
        if (!present[f]) {
            throw data_error(path.string() + ": missing column '" + schema[f].name + "'");
        }
    }

    std::vector<std::unordered_map<std::string, double>> codes(schema.size());
    for (std::size_t f = 0; f < schema.size(); ++f) {
        for (std::size_t k = 0; k < schema[f].categories.size(); ++k) {
            codes[f][schema[f].categories[k]] = static_cast<double>(k);
        }
    }

    Dataset ds{schema, FeatureMatrix::dense(schema.size()), {}, {}};
    std::unordered_map<std::string, LabelId> label_ids;
    std::vector<double> row(schema.size());
    std::size_t lineno = 1;
    while (read_line(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_csv_line(line);
        const auto where = [&] { return path.string() + ":" + std::to_string(lineno) + ": "; };
        if (fields.size() != header.size()) {
            throw data_error(where() + "expected " + std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (c == *label_col) {
                continue;
            }
            const auto f = *feature_of[c];
            if (schema[f].kind == FeatureKind::ordinal) {
                const auto it = codes[f].find(fields[c]);
                if (it == codes[f].end()) {
                    throw data_error(where() + "unknown category '" + fields[c] + "' for feature '" + schema[f].name + "'");
                }
                row[f] = it->second;
            } else {
                const auto v = parse_number(fields[c]);
                if (!v) {
                    throw data_error(where() + "non-numeric value '" + fields[c] + "' for feature '" + schema[f].name + "'");
                }
                row[f] = *v;
            }
        }
        const auto& name = fields[*label_col];
        auto [it, inserted] = label_ids.try_emplace(name, ds.labels.size());
        if (inserted) {
            ds.labels.push_back(name);
        }
        ds.x.push_dense(row);
        ds.y.push_back(it->second);
    }
    if (ds.size() == 0) {
        throw data_error(path.string() + ": no data rows");
    }
    return ds;
}

Dataset load_sparse(const std::filesystem::path& matrix_path, const std::filesystem::path& labels_path) {
    auto in = open_input(matrix_path);
    std::string line;
    std::size_t nrows = 0;
    std::size_t ncols = 0;
    std::size_t nnz = 0;
    if (!read_line(in, line)) {
        throw data_error(matrix_path.string() + ": empty file");
    }
    {
        std::istringstream hs(line);
        if (!(hs >> nrows >> ncols >> nnz)) {
            throw data_error(matrix_path.string() + ": header must be 'nrows ncols nnz'");
        }
    }

    Dataset ds{FeatureSchema::numeric(ncols), FeatureMatrix::sparse(ncols), {}, {}};
    ds.x.reserve(nrows, nnz);
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    std::size_t seen_nnz = 0;
    std::size_t lineno = 1;
    while (ds.x.rows() < nrows && read_line(in, line)) {
        ++lineno;
        const auto where = [&] { return matrix_path.string() + ":" + std::to_string(lineno) + ": "; };
        entries.clear();
        std::istringstream ls(line);
        std::string col_tok;
        std::string val_tok;
        while (ls >> col_tok) {
            if (!(ls >> val_tok)) {
                throw data_error(where() + "dangling column index without a value");
            }
            std::size_t col = 0;
            const auto [p, ec] = std::from_chars(col_tok.data(), col_tok.data() + col_tok.size(), col);
            if (ec != std::errc{} || p != col_tok.data() + col_tok.size()) {
                throw data_error(where() + "bad column index '" + col_tok + "'");
            }
            if (col < 1 || col > ncols) {
                throw data_error(where() + "column index " + col_tok + " out of range 1.." + std::to_string(ncols));
            }
            const auto v = parse_number(val_tok);
            if (!v) {
                throw data_error(where() + "bad value '" + val_tok + "'");
            }
            entries.emplace_back(static_cast<std::uint32_t>(col - 1), *v);
        }
        std::sort(entries.begin(), entries.end());
        cols.clear();
        vals.clear();
        for (const auto& [c, v] : entries) {
            if (!cols.empty() && cols.back() == c) {
                throw data_error(where() + "duplicate column " + std::to_string(c + 1));
            }
            cols.push_back(c);
            vals.push_back(v);
        }
        seen_nnz += cols.size();
        ds.x.push_sparse(cols, vals);
    }
    if (ds.x.rows() != nrows) {
        throw data_error(matrix_path.string() + ": header declares " + std::to_string(nrows) + " rows, file has " +
                         std::to_string(ds.x.rows()));
    }
    while (read_line(in, line)) {
        if (!trim(line).empty()) {
            throw data_error(matrix_path.string() + ": more rows than the header declares");
        }
    }
    if (seen_nnz != nnz) {
        throw data_error(matrix_path.string() + ": header declares " + std::to_string(nnz) + " nonzeros, file has " +
                         std::to_string(seen_nnz));
    }

    auto lin = open_input(labels_path);
    std::unordered_map<std::string, LabelId> label_ids;
    while (read_line(lin, line)) {
        const auto name = std::string(trim(line));
        if (name.empty()) {
            continue;
        }
        auto [it, inserted] = label_ids.try_emplace(name, ds.labels.size());
        if (inserted) {
            ds.labels.push_back(name);
        }
        ds.y.push_back(it->second);
    }
    if (ds.y.size() != nrows) {
        throw data_error(labels_path.string() + ": " + std::to_string(ds.y.size()) + " labels for " + std::to_string(nrows) +
                         " rows");
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path);
    if (!out) {
        throw data_error("cannot write " + path.string());
    }
    for (const auto& f : ds.schema.features()) {
        out << f.name << ',';
    }
    out << label_column << '\n';
    std::vector<double> dense;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        dense = ds.row(i).to_dense();
        for (std::size_t c = 0; c < dense.size(); ++c) {
            const auto& f = ds.schema[c];
            if (f.kind == FeatureKind::ordinal) {
                const auto code = static_cast<std::size_t>(std::llround(dense[c]));
                out << f.categories.at(code);
            } else {
                out << format_number(dense[c]);
            }
            out << ',';
        }
        out << ds.labels[ds.y[i]] << '\n';
    }
}

void save_sparse(const Dataset& ds, const std::filesystem::path& matrix_path, const std::filesystem::path& labels_path) {
    std::ofstream out(matrix_path);
    std::ofstream lout(labels_path);
    if (!out || !lout) {
        throw data_error("cannot write " + matrix_path.string() + " / " + labels_path.string());
    }
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ds.row(i).for_each([&](std::size_t, double v) { nnz += v != 0.0; });
    }
    out << ds.size() << ' ' << ds.n_features() << ' ' << nnz << '\n';
    for (std::size_t i = 0; i < ds.size(); ++i) {
        bool first = true;
        ds.row(i).for_each([&](std::size_t c, double v) {
            if (v == 0.0) {
                return;
            }
            out << (first ? "" : " ") << (c + 1) << ' ' << format_number(v);
            first = false;
        });
        out << '\n';
        lout << ds.labels[ds.y[i]] << '\n';
    }
}

// --------------------------------------------------------------- splitting

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(const Dataset& ds, double train_fraction,
                                                                            std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw config_error("train fraction must lie in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(ds.n_labels());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[ds.y[i]].push_back(i);
    }
    Rng rng(derive_seed(seed, "split"));
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) {
            continue;
        }
        if (rows.size() < 2) {
            throw data_error("class '" + ds.labels[c] + "' has fewer than 2 instances; cannot stratify");
        }
        rng.shuffle(rows.begin(), rows.end());
        auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(rows.size())));
        n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
        train.insert(train.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    const auto [train, test] = split_indices(ds, train_fraction, seed);
    return {ds.subset(train), ds.subset(test)};
}

// -------------------------------------------------------------- statistics

bool ClassStats::is_majority(LabelId id) const {
    return std::find(majority.begin(), majority.end(), id) != majority.end();
}

ClassStats class_stats(const Dataset& ds, const std::optional<std::vector<LabelId>>& override_majority) {
    if (ds.size() == 0 || ds.n_labels() == 0) {
        throw data_error("class statistics need a non-empty dataset");
    }
    ClassStats s;
    s.labels = ds.labels;
    s.counts = ds.label_counts();
    s.total = ds.size();
    s.balance_point = static_cast<double>(s.total) / static_cast<double>(s.n_classes());

    std::vector<bool> is_major(s.n_classes(), false);
    if (override_majority) {
        for (const auto id : *override_majority) {
            if (id >= s.n_classes()) {
                throw config_error("majority override references unknown label id " + std::to_string(id));
            }
            is_major[id] = true;
        }
    } else {
        for (std::size_t c = 0; c < s.n_classes(); ++c) {
            is_major[c] = static_cast<double>(s.counts[c]) > s.balance_point;
        }
    }
    for (std::size_t c = 0; c < s.n_classes(); ++c) {
        (is_major[c] ? s.majority : s.minority).push_back(c);
    }
    return s;
}

ClassStats class_stats(const Dataset& ds, const std::vector<std::string>& override_majority_names) {
    std::vector<LabelId> ids;
    for (const auto& name : override_majority_names) {
        const auto it = std::find(ds.labels.begin(), ds.labels.end(), name);
        if (it == ds.labels.end()) {
            throw config_error("majority override references unknown label '" + name + "'");
        }
        ids.push_back(static_cast<LabelId>(it - ds.labels.begin()));
    }
    return class_stats(ds, ids);
}

std::vector<LabelId> most_frequent(const ClassStats& stats, std::size_t n) {
    std::vector<LabelId> ids(stats.n_classes());
    std::iota(ids.begin(), ids.end(), LabelId{0});
    std::stable_sort(ids.begin(), ids.end(), [&](LabelId a, LabelId b) { return stats.counts[a] > stats.counts[b]; });
    ids.resize(std::min(n, ids.size()));
    std::sort(ids.begin(), ids.end());
    return ids;
}

// ------------------------------------------------------------------- views

std::string_view to_string(ViewKind kind) {
    switch (kind) {
        case ViewKind::full: return "full";
        case ViewKind::binary: return "binary";
        case ViewKind::majority_cluster: return "maj-cluster";
        case ViewKind::minority_cluster: return "min-cluster";
    }
    return "?";
}

LabelView make_view(const ClassStats& stats, ViewKind kind) {
    const auto k = stats.n_classes();
    LabelView v;
    v.kind = kind;
    v.mapping.assign(k, 0);

    const auto need = [&](const std::vector<LabelId>& set, const char* what) {
        if (set.empty()) {
            throw data_error(std::string(to_string(kind)) + " view needs at least one " + what + " class");
        }
    };

    // Cluster first, then the uncollapsed labels in original order.
    const auto clustered = [&](const std::vector<LabelId>& cluster, std::string_view cluster_name) {
        v.view_labels.emplace_back(cluster_name);
        v.members.push_back(cluster);
        v.cluster_slot = 0;
        for (std::size_t c = 0; c < k; ++c) {
            if (std::find(cluster.begin(), cluster.end(), c) != cluster.end()) {
                v.mapping[c] = 0;
            } else {
                v.mapping[c] = v.view_labels.size();
                v.view_labels.push_back(stats.labels[c]);
                v.members.push_back({c});
            }
        }
    };

    switch (kind) {
        case ViewKind::full:
            for (std::size_t c = 0; c < k; ++c) {
                v.mapping[c] = c;
                v.view_labels.push_back(stats.labels[c]);
                v.members.push_back({c});
            }
            break;
        case ViewKind::binary:
            need(stats.majority, "majority");
            need(stats.minority, "minority");
            v.view_labels = {std::string(majority_cluster_name), std::string(minority_cluster_name)};
            v.members = {stats.majority, stats.minority};
            v.cluster_slot = 0;
            for (std::size_t c = 0; c < k; ++c) {
                v.mapping[c] = stats.is_majority(c) ? 0 : 1;
            }
            break;
        case ViewKind::majority_cluster:
            need(stats.majority, "majority");
            need(stats.minority, "minority");
            clustered(stats.majority, majority_cluster_name);
            break;
        case ViewKind::minority_cluster:
            need(stats.majority, "majority");
            need(stats.minority, "minority");
            clustered(stats.minority, minority_cluster_name);
            break;
    }
    return v;
}

Dataset apply_view(const Dataset& ds, const LabelView& view) {
    if (ds.n_labels() != view.mapping.size()) {
        throw data_error("dataset has " + std::to_string(ds.n_labels()) + " labels, view maps " +
                         std::to_string(view.mapping.size()));
    }
    Dataset out{ds.schema, ds.x, {}, view.view_labels};
    out.y.reserve(ds.size());
    for (const auto label : ds.y) {
        if (label >= view.mapping.size()) {
            throw data_error("label id " + std::to_string(label) + " outside the view mapping");
        }
        out.y.push_back(view.mapping[label]);
    }
    return out;
}

}  // namespace cmc
