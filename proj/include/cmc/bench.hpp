#pragma once

#include "cmc/cmc.hpp"
#include "cmc/cmcm.hpp"
#include "cmc/metrics.hpp"
#include "cmc/sampling.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cmc {

enum class ModelKind { cmc, cmcm, automatic, baseline_rf, baseline_smo };
enum class Sampling { none, over, under, over_under };
enum class DataFormat { csv, sparse };

std::string_view to_string(ModelKind m);
std::string_view to_string(Sampling s);
std::string_view to_string(DataFormat f);
ModelKind model_kind_from_string(std::string_view s);
Sampling sampling_from_string(std::string_view s);
DataFormat data_format_from_string(std::string_view s);

struct DatasetSource {
    std::filesystem::path path;
    DataFormat format = DataFormat::csv;
    /// CSV label column; empty means the last header column.
    std::string label_column;
    /// Sparse labels file; empty means `path` with extension `.labels`.
    std::filesystem::path labels_path;
    /// CSV schema file; empty means a sibling `.schema` file if present,
    /// otherwise the schema is inferred from the data.
    std::filesystem::path schema_path;
};

/// Optional per-layer thresholds. CMC reads `binary` and `multi`; CMC-M
/// reads `binary` (its B model), `m1`, `m2` and `m3`.
struct LayerThresholds {
    std::optional<StageThresholds> binary;
    std::optional<StageThresholds> multi;
    std::optional<StageThresholds> m1;
    std::optional<StageThresholds> m2;
    std::optional<StageThresholds> m3;
};

struct ExperimentConfig {
    std::string name;
    DatasetSource dataset;
    ModelKind model = ModelKind::automatic;
    Sampling sampling = Sampling::none;
    double split_fraction = 0.8;
    std::uint64_t seed = 1;
    /// Runs seeds seed, seed+1, ..., seed+seeds-1.
    std::size_t seeds = 1;
    /// Majority override by label name.
    std::optional<std::vector<std::string>> majority;
    /// Majority override as the N most frequent labels.
    std::optional<std::size_t> majority_top;
    LayerThresholds thresholds;
    double delta = 0.001;
    SgMeanVariant sg_variant = SgMeanVariant::printed;
    SmoteConfig smote;
    UndersampleConfig undersample;
    ForestParams forest;
    SmoParams smo;

    void validate() const;
    /// `name`, or a heading such as "CMC (U.)".
    [[nodiscard]] std::string display_name() const;
};

/// Sets one `key = value` setting. Relative paths resolve against `base`.
/// Throws config_error on unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value,
                   const std::filesystem::path& base = {});

/// Flat `key = value` text. `[prefix]` headers prefix following keys with
/// `prefix.`; `[cell NAME]` opens a grid cell whose settings apply on top of
/// the keys given before the first cell. `#` and `;` start comments.
struct ConfigFile {
    using Settings = std::vector<std::pair<std::string, std::string>>;
    Settings shared;
    std::vector<std::pair<std::string, Settings>> cells;
    std::filesystem::path base;
};

ConfigFile parse_config(std::istream& in, const std::filesystem::path& base = {});
ConfigFile read_config(const std::filesystem::path& path);

/// Shared settings plus each cell's settings (one config when no cells).
std::vector<ExperimentConfig> expand_config(const ConfigFile& file, const ExperimentConfig& defaults = {});

Dataset load_dataset(const DatasetSource& src);

/// Class statistics honouring the config's majority override.
ClassStats experiment_stats(const Dataset& ds, const ExperimentConfig& cfg);

/// cmc for exactly one majority class, cmcm for several; config_error when
/// there is none.
ModelKind auto_select(const ClassStats& stats);

/// Everything a run trains and tests on.
struct PreparedData {
    ClassStats stats;
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
    Dataset train;
    Dataset test;
    /// `train` after the configured sampling.
    Dataset sampled_train;
};

/// Split, then sample the training part only.
PreparedData prepare(const Dataset& full, const ExperimentConfig& cfg, std::uint64_t seed);

struct RunResult {
    std::uint64_t seed = 0;
    ModelKind model = ModelKind::automatic;
    ClassStats stats;
    std::size_t train_size = 0;
    std::size_t sampled_train_size = 0;
    std::size_t test_size = 0;
    MetricsReport metrics;
    /// Instances answered by each layer or branch.
    std::map<std::string, std::size_t> routing;
    /// Cluster argmax resolved through the complementary model (CMC-M).
    std::size_t resolved = 0;
    /// Per multistage model, how many predictions each stage returned.
    std::map<std::string, std::vector<std::size_t>> stage_usage;
    double seconds = 0.0;
};

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct MultiRunResult {
    ExperimentConfig config;
    ModelKind model = ModelKind::automatic;
    std::vector<RunResult> runs;
    Summary macro_f1;
    Summary g_mean;
    Summary sg_mean;
    Summary zero_recall;
};

/// One seed of the protocol: split, sample, fit, predict, score.
RunResult run_once(const Dataset& full, const ExperimentConfig& cfg, std::uint64_t seed);

/// Loads the dataset and runs every configured seed.
MultiRunResult run_experiment(const ExperimentConfig& cfg);

struct GridCell {
    std::string name;
    std::optional<MultiRunResult> result;
    std::string error;
    /// Exit-code class of the error: 1 config, 2 data, 3 training.
    int error_code = 0;
};

struct GridResult {
    std::vector<GridCell> cells;
};

/// Runs every config, `workers` at a time (0 = hardware threads). A failing
/// cell records its error and the grid continues.
GridResult run_grid(const std::vector<ExperimentConfig>& cfgs, std::size_t workers = 0);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);
nlohmann::ordered_json to_json(const ClassStats& stats);
nlohmann::ordered_json to_json(const MetricsReport& r);
nlohmann::ordered_json to_json(const RunResult& r, bool timing);
nlohmann::ordered_json to_json(const MultiRunResult& r, bool timing);
nlohmann::ordered_json to_json(const GridResult& g, bool timing);

std::string format_run(const MultiRunResult& r, bool timing);
std::string format_grid(const GridResult& g);
std::string format_profile(const Dataset& ds, const ClassStats& stats);

/// Exit code for an exception: 1 config, 2 data, 3 training, 1 otherwise.
int error_code(const std::exception& e);

}  // namespace cmc
