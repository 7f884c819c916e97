#include "cmc/bench.hpp"

#include "cmc/errors.hpp"
#include "cmc/parallel.hpp"
#include "cmc/random.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cmc {

// ------------------------------------------------------------------ names

std::string_view to_string(ModelKind m) {
    switch (m) {
        case ModelKind::cmc:
            return "cmc";
        case ModelKind::cmcm:
            return "cmcm";
        case ModelKind::automatic:
            return "auto";
        case ModelKind::baseline_rf:
            return "baseline-rf";
        case ModelKind::baseline_smo:
            return "baseline-smo";
    }
    return "?";
}

std::string_view to_string(Sampling s) {
    switch (s) {
        case Sampling::none:
            return "none";
        case Sampling::over:
            return "over";
        case Sampling::under:
            return "under";
        case Sampling::over_under:
            return "over-under";
    }
    return "?";
}

std::string_view to_string(DataFormat f) {
    return f == DataFormat::csv ? "csv" : "sparse";
}

ModelKind model_kind_from_string(std::string_view s) {
    for (const auto m : {ModelKind::cmc, ModelKind::cmcm, ModelKind::automatic, ModelKind::baseline_rf,
                         ModelKind::baseline_smo}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw config_error("unknown model '" + std::string(s) + "' (cmc | cmcm | auto | baseline-rf | baseline-smo)");
}

Sampling sampling_from_string(std::string_view s) {
    for (const auto v : {Sampling::none, Sampling::over, Sampling::under, Sampling::over_under}) {
        if (to_string(v) == s) {
            return v;
        }
    }
    throw config_error("unknown sampling '" + std::string(s) + "' (none | over | under | over-under)");
}

DataFormat data_format_from_string(std::string_view s) {
    if (s == "csv") {
        return DataFormat::csv;
    }
    if (s == "sparse") {
        return DataFormat::sparse;
    }
    throw config_error("unknown dataset format '" + std::string(s) + "' (csv | sparse)");
}

// ----------------------------------------------------------------- config

void ExperimentConfig::validate() const {
    if (dataset.path.empty()) {
        throw config_error("no dataset given");
    }
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw config_error("split fraction must lie in (0, 1)");
    }
    if (seeds < 1) {
        throw config_error("seeds must be >= 1");
    }
    if (majority && majority_top) {
        throw config_error("give the majority override either as names or as top:N, not both");
    }
    if (!(delta > 0.0)) {
        throw config_error("delta must be > 0");
    }
    smote.validate();
    undersample.validate();
    ClassifierSpec spec;
    spec.forest = forest;
    spec.smo = smo;
    spec.validate();
    for (const auto* t : {&thresholds.binary, &thresholds.multi, &thresholds.m1, &thresholds.m2, &thresholds.m3}) {
        if (*t) {
            (*t)->validate();
        }
    }
}

std::string ExperimentConfig::display_name() const {
    if (!name.empty()) {
        return name;
    }
    std::string base;
    switch (model) {
        case ModelKind::cmc:
            base = "CMC";
            break;
        case ModelKind::cmcm:
            base = "CMC-M";
            break;
        case ModelKind::automatic:
            base = "auto";
            break;
        case ModelKind::baseline_rf:
            base = "RF";
            break;
        case ModelKind::baseline_smo:
            base = "SMO";
            break;
    }
    switch (sampling) {
        case Sampling::none:
            return base;
        case Sampling::over:
            return base + " (O.)";
        case Sampling::under:
            return base + " (U.)";
        case Sampling::over_under:
            return base + " (O.U.)";
    }
    return base;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        auto item = trim(s.substr(start, end - start));
        if (!item.empty()) {
            out.push_back(std::move(item));
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T v{};
    const auto* first = value.data();
    const auto* last = value.data() + value.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        throw config_error("bad value '" + value + "' for " + key);
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") {
        return true;
    }
    if (value == "false" || value == "0" || value == "no" || value == "off") {
        return false;
    }
    throw config_error("bad value '" + value + "' for " + key + " (true | false)");
}

StageThresholds parse_thresholds(const std::string& key, const std::string& value) {
    StageThresholds t;
    for (const auto& item : split_list(value)) {
        t.t.push_back(parse_number<double>(key, item));
    }
    t.validate();
    return t;
}

std::filesystem::path resolve(const std::string& value, const std::filesystem::path& base) {
    std::filesystem::path p(value);
    if (p.is_relative() && !base.empty()) {
        return base / p;
    }
    return p;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value,
                   const std::filesystem::path& base) {
    const auto key = trim(raw_key);
    auto value = trim(raw_value);
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front()) {
        value = value.substr(1, value.size() - 2);
    }
    if (key == "name") {
        cfg.name = value;
    } else if (key == "dataset" || key == "dataset.path") {
        cfg.dataset.path = resolve(value, base);
    } else if (key == "format" || key == "dataset.format") {
        cfg.dataset.format = data_format_from_string(value);
    } else if (key == "label" || key == "dataset.label") {
        cfg.dataset.label_column = value;
    } else if (key == "labels" || key == "dataset.labels") {
        cfg.dataset.labels_path = resolve(value, base);
    } else if (key == "schema" || key == "dataset.schema") {
        cfg.dataset.schema_path = resolve(value, base);
    } else if (key == "model") {
        cfg.model = model_kind_from_string(value);
    } else if (key == "sampling") {
        cfg.sampling = sampling_from_string(value);
    } else if (key == "split") {
        cfg.split_fraction = parse_number<double>(key, value);
    } else if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(key, value);
    } else if (key == "seeds") {
        cfg.seeds = parse_number<std::size_t>(key, value);
    } else if (key == "majority") {
        cfg.majority.reset();
        cfg.majority_top.reset();
        if (value.rfind("top:", 0) == 0) {
            cfg.majority_top = parse_number<std::size_t>(key, value.substr(4));
        } else if (!value.empty()) {
            cfg.majority = split_list(value);
        }
    } else if (key == "delta") {
        cfg.delta = parse_number<double>(key, value);
    } else if (key == "sg_variant") {
        cfg.sg_variant = sg_mean_variant_from_string(value);
    } else if (key == "smote.k") {
        cfg.smote.k_neighbors = parse_number<std::size_t>(key, value);
    } else if (key == "smote.rate") {
        cfg.smote.rate = parse_number<double>(key, value);
    } else if (key == "undersample.fraction") {
        cfg.undersample.target_fraction = parse_number<double>(key, value);
    } else if (key == "forest.trees") {
        cfg.forest.trees = parse_number<std::size_t>(key, value);
    } else if (key == "forest.mtry") {
        cfg.forest.features_per_split = parse_number<std::size_t>(key, value);
    } else if (key == "smo.degree") {
        cfg.smo.degree = parse_number<int>(key, value);
    } else if (key == "smo.c") {
        cfg.smo.c = parse_number<double>(key, value);
    } else if (key == "smo.tolerance") {
        cfg.smo.tolerance = parse_number<double>(key, value);
    } else if (key == "smo.max_iterations") {
        cfg.smo.max_iterations = parse_number<std::size_t>(key, value);
    } else if (key == "smo.normalize") {
        cfg.smo.normalize = parse_bool(key, value);
    } else if (key == "smo.cache_mb") {
        cfg.smo.cache_mb = parse_number<std::size_t>(key, value);
    } else if (key == "thresholds.binary" || key == "thresholds.b") {
        cfg.thresholds.binary = parse_thresholds(key, value);
    } else if (key == "thresholds.multi") {
        cfg.thresholds.multi = parse_thresholds(key, value);
    } else if (key == "thresholds.m1") {
        cfg.thresholds.m1 = parse_thresholds(key, value);
    } else if (key == "thresholds.m2") {
        cfg.thresholds.m2 = parse_thresholds(key, value);
    } else if (key == "thresholds.m3") {
        cfg.thresholds.m3 = parse_thresholds(key, value);
    } else {
        throw config_error("unknown setting '" + key + "'");
    }
}

ConfigFile parse_config(std::istream& in, const std::filesystem::path& base) {
    ConfigFile file;
    file.base = base;
    ConfigFile::Settings* scope = &file.shared;
    std::string prefix;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        auto text = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (text.empty()) {
            continue;
        }
        if (text.front() == '[') {
            if (text.back() != ']') {
                throw config_error("config line " + std::to_string(lineno) + ": unterminated section header");
            }
            const auto section = trim(text.substr(1, text.size() - 2));
            if (section.rfind("cell", 0) == 0 && (section.size() == 4 || section[4] == ' ')) {
                auto name = trim(section.substr(4));
                if (name.size() >= 2 && name.front() == '"' && name.back() == '"') {
                    name = name.substr(1, name.size() - 2);
                }
                file.cells.emplace_back(name, ConfigFile::Settings{});
                scope = &file.cells.back().second;
                prefix.clear();
            } else {
                prefix = section.empty() ? std::string() : section + ".";
            }
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        }
        const auto key = trim(text.substr(0, eq));
        if (key.empty()) {
            throw config_error("config line " + std::to_string(lineno) + ": empty key");
        }
        scope->emplace_back(prefix + key, trim(text.substr(eq + 1)));
    }
    return file;
}

ConfigFile read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open config file " + path.string());
    }
    return parse_config(in, path.parent_path());
}

std::vector<ExperimentConfig> expand_config(const ConfigFile& file, const ExperimentConfig& defaults) {
    ExperimentConfig shared = defaults;
    for (const auto& [k, v] : file.shared) {
        apply_setting(shared, k, v, file.base);
    }
    if (file.cells.empty()) {
        return {shared};
    }
    std::vector<ExperimentConfig> out;
    for (const auto& [name, settings] : file.cells) {
        ExperimentConfig cfg = shared;
        cfg.name = name;
        for (const auto& [k, v] : settings) {
            apply_setting(cfg, k, v, file.base);
        }
        out.push_back(std::move(cfg));
    }
    return out;
}

// ------------------------------------------------------------------- data

namespace {

std::vector<std::string> csv_header(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw data_error("cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw data_error(path.string() + " is empty");
    }
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) {
        line = line.substr(3);
    }
    std::vector<std::string> cols;
    for (auto& c : split_list(line)) {
        if (c.size() >= 2 && c.front() == '"' && c.back() == '"') {
            c = c.substr(1, c.size() - 2);
        }
        cols.push_back(c);
    }
    return cols;
}

}  // namespace

Dataset load_dataset(const DatasetSource& src) {
    if (src.format == DataFormat::sparse) {
        auto labels = src.labels_path;
        if (labels.empty()) {
            labels = src.path;
            labels.replace_extension(".labels");
        }
        return load_sparse(src.path, labels);
    }
    auto label = src.label_column;
    if (label.empty()) {
        const auto header = csv_header(src.path);
        if (header.empty()) {
            throw data_error(src.path.string() + " has an empty header");
        }
        label = header.back();
    }
    auto schema_path = src.schema_path;
    if (schema_path.empty()) {
        auto sibling = src.path;
        sibling.replace_extension(".schema");
        if (std::filesystem::exists(sibling)) {
            schema_path = sibling;
        }
    }
    const auto schema = schema_path.empty() ? infer_schema(src.path, label) : read_schema(schema_path);
    return load_csv(src.path, label, schema);
}

ClassStats experiment_stats(const Dataset& ds, const ExperimentConfig& cfg) {
    if (cfg.majority) {
        return class_stats(ds, *cfg.majority);
    }
    if (cfg.majority_top) {
        const auto base = class_stats(ds);
        if (*cfg.majority_top > base.n_classes()) {
            throw config_error("majority top:" + std::to_string(*cfg.majority_top) + " exceeds the " +
                               std::to_string(base.n_classes()) + " labels");
        }
        return class_stats(ds, most_frequent(base, *cfg.majority_top));
    }
    return class_stats(ds);
}

ModelKind auto_select(const ClassStats& stats) {
    if (stats.majority.empty()) {
        throw config_error("no majority class: every label has count <= |D|/k, nothing to rebalance");
    }
    if (stats.minority.empty()) {
        throw config_error("no minority class");
    }
    return stats.majority.size() == 1 ? ModelKind::cmc : ModelKind::cmcm;
}

PreparedData prepare(const Dataset& full, const ExperimentConfig& cfg, std::uint64_t seed) {
    PreparedData p;
    p.stats = experiment_stats(full, cfg);
    auto [train_rows, test_rows] = split_indices(full, cfg.split_fraction, seed);
    p.train_rows = std::move(train_rows);
    p.test_rows = std::move(test_rows);
    p.train = full.subset(p.train_rows);
    p.test = full.subset(p.test_rows);
    p.sampled_train = p.train;
    if (cfg.sampling == Sampling::over || cfg.sampling == Sampling::over_under) {
        auto sc = cfg.smote;
        sc.seed = seed;
        p.sampled_train = smote(p.sampled_train, p.stats, sc);
    }
    if (cfg.sampling == Sampling::under || cfg.sampling == Sampling::over_under) {
        auto uc = cfg.undersample;
        uc.seed = seed;
        p.sampled_train = undersample(p.sampled_train, uc);
    }
    return p;
}

// -------------------------------------------------------------------- runs

namespace {

std::vector<ClassifierSpec> recipe_for(const ExperimentConfig& cfg) {
    auto recipe = default_recipe();
    for (auto& s : recipe) {
        s.forest = cfg.forest;
        s.smo = cfg.smo;
    }
    return recipe;
}

StageThresholds thresholds_or_default(const std::optional<StageThresholds>& t, std::size_t n) {
    return t ? *t : StageThresholds::defaults(n);
}

void count_stage(std::map<std::string, std::vector<std::size_t>>& usage, const std::string& key,
                 const StagedPrediction& s, std::size_t n_stages) {
    auto& v = usage[key];
    v.resize(n_stages, 0);
    ++v.at(s.stage_used - 1);
}

}  // namespace

Summary summarize(const std::vector<double>& values) {
    Summary s;
    if (values.empty()) {
        return s;
    }
    double sum = 0.0;
    for (const double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (const double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

RunResult run_once(const Dataset& full, const ExperimentConfig& cfg, std::uint64_t seed) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    auto data = prepare(full, cfg, seed);

    const auto counts = data.sampled_train.label_counts();
    std::vector<std::string> absent;
    for (std::size_t c = 0; c < counts.size(); ++c) {
        if (counts[c] == 0) {
            absent.push_back(data.sampled_train.labels[c]);
        }
    }
    if (!absent.empty()) {
        std::string names;
        for (const auto& a : absent) {
            names += (names.empty() ? "" : ", ") + a;
        }
        throw training_error("sampling left no training instances of: " + names);
    }

    RunResult r;
    r.seed = seed;
    r.model = cfg.model == ModelKind::automatic ? auto_select(data.stats) : cfg.model;
    r.stats = data.stats;
    r.train_size = data.train.size();
    r.sampled_train_size = data.sampled_train.size();
    r.test_size = data.test.size();

    const auto recipe = recipe_for(cfg);
    const auto n_stages = recipe.size();
    const auto fit_seed = derive_seed(seed, "model");
    const auto& test = data.test;
    std::vector<LabelId> pred(test.size());

    switch (r.model) {
        case ModelKind::cmc: {
            const auto model = fit_cmc(data.sampled_train, data.stats, thresholds_or_default(cfg.thresholds.binary, n_stages),
                                       thresholds_or_default(cfg.thresholds.multi, n_stages), fit_seed, recipe);
            std::vector<CmcPrediction> out(test.size());
            parallel_for(test.size(), 0, [&](std::size_t i) { out[i] = model.predict(test.row(i)); });
            r.routing = {{"binary", 0}, {"multiclass", 0}};
            for (std::size_t i = 0; i < out.size(); ++i) {
                pred[i] = out[i].label;
                ++r.routing[std::string(to_string(out[i].layer))];
                count_stage(r.stage_usage, "binary", out[i].binary, n_stages);
                r.stage_usage.try_emplace("multiclass", n_stages, 0);
                if (out[i].multi) {
                    count_stage(r.stage_usage, "multiclass", *out[i].multi, n_stages);
                }
            }
            break;
        }
        case ModelKind::cmcm: {
            CmcmThresholds th{thresholds_or_default(cfg.thresholds.binary, n_stages),
                              thresholds_or_default(cfg.thresholds.m1, n_stages),
                              thresholds_or_default(cfg.thresholds.m2, n_stages),
                              thresholds_or_default(cfg.thresholds.m3, n_stages)};
            const auto model = fit_cmcm(data.sampled_train, data.stats, th, fit_seed, recipe);
            std::vector<CmcmPrediction> out(test.size());
            parallel_for(test.size(), 0, [&](std::size_t i) { out[i] = model.predict(test.row(i)); });
            r.routing = {{"m1", 0}, {"m2", 0}, {"m3", 0}};
            for (const auto key : {"b", "m1", "m2", "m3"}) {
                r.stage_usage[key].assign(n_stages, 0);
            }
            for (std::size_t i = 0; i < out.size(); ++i) {
                pred[i] = out[i].label;
                ++r.routing[std::string(to_string(out[i].branch))];
                r.resolved += out[i].resolved ? 1 : 0;
                count_stage(r.stage_usage, "b", out[i].b, n_stages);
                count_stage(r.stage_usage, "m1", out[i].m1, n_stages);
                count_stage(r.stage_usage, "m2", out[i].m2, n_stages);
                if (out[i].m3) {
                    count_stage(r.stage_usage, "m3", *out[i].m3, n_stages);
                }
            }
            break;
        }
        case ModelKind::baseline_rf:
        case ModelKind::baseline_smo: {
            auto spec = r.model == ModelKind::baseline_rf ? ClassifierSpec::random_forest() : ClassifierSpec::smo_margin();
            spec.forest = cfg.forest;
            spec.smo = cfg.smo;
            const auto model = fit(spec, data.sampled_train, fit_seed);
            parallel_for(test.size(), 0, [&](std::size_t i) { pred[i] = model->predict_proba(test.row(i)).argmax(); });
            break;
        }
        case ModelKind::automatic:
            break;
    }

    const auto cm = confusion(test.y, pred, full.n_labels(), full.labels);
    r.metrics = evaluate(cm, cfg.delta, cfg.sg_variant);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

MultiRunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto full = load_dataset(cfg.dataset);
    MultiRunResult m;
    m.config = cfg;
    std::vector<double> f1, gm, sg, zr;
    for (std::size_t s = 0; s < cfg.seeds; ++s) {
        auto r = run_once(full, cfg, cfg.seed + s);
        f1.push_back(r.metrics.macro_f1);
        gm.push_back(r.metrics.g_mean);
        sg.push_back(r.metrics.sg_mean);
        zr.push_back(static_cast<double>(r.metrics.zero_recall_count));
        m.model = r.model;
        m.runs.push_back(std::move(r));
    }
    m.macro_f1 = summarize(f1);
    m.g_mean = summarize(gm);
    m.sg_mean = summarize(sg);
    m.zero_recall = summarize(zr);
    return m;
}

int error_code(const std::exception& e) {
    if (dynamic_cast<const data_error*>(&e)) {
        return 2;
    }
    if (dynamic_cast<const training_error*>(&e)) {
        return 3;
    }
    return 1;
}

GridResult run_grid(const std::vector<ExperimentConfig>& cfgs, std::size_t workers) {
    if (cfgs.empty()) {
        throw config_error("a grid needs at least one config");
    }
    GridResult g;
    g.cells.resize(cfgs.size());
    parallel_for(cfgs.size(), workers, [&](std::size_t i) {
        auto& cell = g.cells[i];
        cell.name = cfgs[i].display_name();
        try {
            cell.result = run_experiment(cfgs[i]);
        } catch (const std::exception& e) {
            cell.error = e.what();
            cell.error_code = error_code(e);
        }
    });
    return g;
}

// ----------------------------------------------------------------- output

namespace {

nlohmann::ordered_json thresholds_json(const std::optional<StageThresholds>& t) {
    return t ? nlohmann::ordered_json(t->t) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json summary_json(const Summary& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}};
}

}  // namespace

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["name"] = cfg.display_name();
    j["dataset"] = {{"path", cfg.dataset.path.string()},
                    {"format", to_string(cfg.dataset.format)},
                    {"label", cfg.dataset.label_column},
                    {"labels", cfg.dataset.labels_path.string()},
                    {"schema", cfg.dataset.schema_path.string()}};
    j["model"] = to_string(cfg.model);
    j["sampling"] = to_string(cfg.sampling);
    j["split"] = cfg.split_fraction;
    j["seed"] = cfg.seed;
    j["seeds"] = cfg.seeds;
    if (cfg.majority) {
        j["majority"] = *cfg.majority;
    } else if (cfg.majority_top) {
        j["majority"] = "top:" + std::to_string(*cfg.majority_top);
    } else {
        j["majority"] = nullptr;
    }
    j["thresholds"] = {{"binary", thresholds_json(cfg.thresholds.binary)},
                       {"multi", thresholds_json(cfg.thresholds.multi)},
                       {"m1", thresholds_json(cfg.thresholds.m1)},
                       {"m2", thresholds_json(cfg.thresholds.m2)},
                       {"m3", thresholds_json(cfg.thresholds.m3)}};
    j["delta"] = cfg.delta;
    j["sg_variant"] = to_string(cfg.sg_variant);
    j["smote"] = {{"k", cfg.smote.k_neighbors}, {"rate", cfg.smote.rate}};
    j["undersample"] = {{"fraction", cfg.undersample.target_fraction}};
    j["forest"] = {{"trees", cfg.forest.trees}, {"mtry", cfg.forest.features_per_split}};
    j["smo"] = {{"degree", cfg.smo.degree},
                {"c", cfg.smo.c},
                {"tolerance", cfg.smo.tolerance},
                {"max_iterations", cfg.smo.max_iterations},
                {"normalize", cfg.smo.normalize}};
    return j;
}

nlohmann::ordered_json to_json(const ClassStats& stats) {
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < stats.n_classes(); ++c) {
        classes.push_back({{"label", stats.labels[c]},
                           {"count", stats.counts[c]},
                           {"role", stats.is_majority(c) ? "majority" : "minority"}});
    }
    nlohmann::ordered_json maj = nlohmann::ordered_json::array();
    for (const auto c : stats.majority) {
        maj.push_back(stats.labels[c]);
    }
    nlohmann::ordered_json mino = nlohmann::ordered_json::array();
    for (const auto c : stats.minority) {
        mino.push_back(stats.labels[c]);
    }
    return {{"total", stats.total},
            {"n_classes", stats.n_classes()},
            {"balance_point", stats.balance_point},
            {"classes", classes},
            {"majority", maj},
            {"minority", mino}};
}

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json cm = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < r.confusion.k(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (std::size_t j = 0; j < r.confusion.k(); ++j) {
            row.push_back(r.confusion.at(i, j));
        }
        cm.push_back(row);
    }
    return {{"macro_f1", r.macro_f1},
            {"g_mean", r.g_mean},
            {"sg_mean", r.sg_mean},
            {"delta", r.delta},
            {"sg_variant", to_string(r.variant)},
            {"zero_recall_count", r.zero_recall_count},
            {"labels", r.confusion.labels()},
            {"recall", r.recall},
            {"f1", r.f1},
            {"confusion", cm}};
}

nlohmann::ordered_json to_json(const RunResult& r, bool timing) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    j["model"] = to_string(r.model);
    j["train_size"] = r.train_size;
    j["sampled_train_size"] = r.sampled_train_size;
    j["test_size"] = r.test_size;
    j["metrics"] = to_json(r.metrics);
    j["routing"] = r.routing;
    if (r.model == ModelKind::cmcm) {
        j["resolved"] = r.resolved;
    }
    j["stage_usage"] = r.stage_usage;
    if (timing) {
        j["seconds"] = r.seconds;
    }
    return j;
}

nlohmann::ordered_json to_json(const MultiRunResult& r, bool timing) {
    nlohmann::ordered_json j;
    j["config"] = to_json(r.config);
    j["model"] = to_string(r.model);
    if (!r.runs.empty()) {
        j["stats"] = to_json(r.runs.front().stats);
    }
    j["summary"] = {{"macro_f1", summary_json(r.macro_f1)},
                    {"g_mean", summary_json(r.g_mean)},
                    {"sg_mean", summary_json(r.sg_mean)},
                    {"zero_recall_count", summary_json(r.zero_recall)}};
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const auto& run : r.runs) {
        runs.push_back(to_json(run, timing));
    }
    j["runs"] = runs;
    return j;
}

nlohmann::ordered_json to_json(const GridResult& g, bool timing) {
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : g.cells) {
        nlohmann::ordered_json j;
        j["name"] = c.name;
        if (c.result) {
            j["result"] = to_json(*c.result, timing);
        } else {
            j["error"] = c.error;
            j["error_code"] = c.error_code;
        }
        cells.push_back(j);
    }
    return {{"cells", cells}};
}

namespace {

std::string mean_std(const Summary& s, bool integer_like = false) {
    char buf[64];
    if (integer_like) {
        std::snprintf(buf, sizeof buf, "%.1f±%.1f", s.mean, s.stddev);
    } else {
        std::snprintf(buf, sizeof buf, "%.3f±%.3f", s.mean, s.stddev);
    }
    return buf;
}

TableColumn column_for(const std::string& heading, const MultiRunResult& r) {
    if (r.runs.size() == 1) {
        return table_column(heading, r.runs.front().metrics);
    }
    return {heading, {mean_std(r.macro_f1), mean_std(r.g_mean), mean_std(r.sg_mean), mean_std(r.zero_recall, true)}};
}

std::string routing_line(const RunResult& r) {
    std::ostringstream out;
    bool first = true;
    for (const auto& [k, v] : r.routing) {
        out << (first ? "" : ", ") << k << '=' << v;
        first = false;
    }
    if (r.model == ModelKind::cmcm) {
        out << ", resolved=" << r.resolved;
    }
    return out.str();
}

}  // namespace

std::string format_run(const MultiRunResult& r, bool timing) {
    std::ostringstream out;
    out << "dataset: " << r.config.dataset.path.string() << "  model: " << to_string(r.model)
        << "  sampling: " << to_string(r.config.sampling) << "  seeds: " << r.runs.size() << "\n\n";
    out << format_table({column_for(r.config.display_name(), r)});
    if (r.runs.size() == 1) {
        const auto& run = r.runs.front();
        out << "\ntrain " << run.train_size << " (after sampling " << run.sampled_train_size << "), test "
            << run.test_size << '\n';
        if (!run.routing.empty()) {
            out << "routing: " << routing_line(run) << '\n';
        }
        for (const auto& [k, v] : run.stage_usage) {
            out << "stages " << k << ':';
            for (const auto n : v) {
                out << ' ' << n;
            }
            out << '\n';
        }
        if (timing) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f", run.seconds);
            out << "time: " << buf << " s\n";
        }
        out << '\n' << format_details(run.metrics);
    } else {
        out << "\nseed  macro_f1  g_mean  sg_mean  #Ri=0";
        out << (timing ? "  seconds\n" : "\n");
        for (const auto& run : r.runs) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%4llu  %8.3f  %6.3f  %7.3f  %5zu", static_cast<unsigned long long>(run.seed),
                          run.metrics.macro_f1, run.metrics.g_mean, run.metrics.sg_mean, run.metrics.zero_recall_count);
            out << buf;
            if (timing) {
                std::snprintf(buf, sizeof buf, "  %7.2f", run.seconds);
                out << buf;
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string format_grid(const GridResult& g) {
    std::vector<TableColumn> cols;
    std::ostringstream errors;
    for (const auto& c : g.cells) {
        if (c.result) {
            cols.push_back(column_for(c.name, *c.result));
        } else {
            cols.push_back({c.name, {}});
            errors << c.name << ": " << c.error << '\n';
        }
    }
    auto out = format_table(cols);
    if (!errors.str().empty()) {
        out += "\nerrors:\n" + errors.str();
    }
    return out;
}

std::string format_profile(const Dataset& ds, const ClassStats& stats) {
    std::ostringstream out;
    out << "instances: " << ds.size() << "  features: " << ds.n_features() << (ds.x.is_sparse() ? " (sparse)" : "")
        << "  classes: " << stats.n_classes() << '\n';
    char buf[160];
    std::snprintf(buf, sizeof buf, "balance point |D|/k: %.3f\n\n", stats.balance_point);
    out << buf;
    std::size_t w = 5;
    for (const auto& l : stats.labels) {
        w = std::max(w, l.size());
    }
    out << "label" << std::string(w - 5, ' ') << "  count   share  role\n";
    for (std::size_t c = 0; c < stats.n_classes(); ++c) {
        std::snprintf(buf, sizeof buf, "  %5zu  %5.2f%%  %s\n", stats.counts[c],
                      100.0 * static_cast<double>(stats.counts[c]) / static_cast<double>(stats.total),
                      stats.is_majority(c) ? "majority" : "minority");
        out << stats.labels[c] << std::string(w - stats.labels[c].size(), ' ') << buf;
    }
    out << "\nmajority: " << stats.majority.size() << "  minority: " << stats.minority.size() << '\n';
    try {
        out << "suggested model: " << to_string(auto_select(stats)) << '\n';
    } catch (const config_error& e) {
        out << "suggested model: none (" << e.what() << ")\n";
    }
    return out.str();
}

}  // namespace cmc
