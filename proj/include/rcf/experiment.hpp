#pragma once

#include "rcf/dataops.hpp"
#include "rcf/evaluation.hpp"
#include "rcf/localization.hpp"
#include "rcf/metrics.hpp"
#include "rcf/optimizer.hpp"
#include "rcf/reservoir.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace rcf {

struct SearchSettings {
    std::vector<ParamBound> bounds = MacroSearchSpace::default_bounds();
    Index initial_samples = 20;
    Index max_evaluations = 60;
    Index batch = 1;
    Index acquisition_candidates = 2000;
    std::uint64_t seed = 0;

    bool operator==(const SearchSettings&) const = default;
};

struct LocalizationSettings {
    Index n_output = 2;
    Index n_halo = 2;

    bool operator==(const LocalizationSettings&) const = default;
};

/// Everything needed to regenerate data, build, train and evaluate a model.
/// Sizes are counted in samples of the (subsampled) series.
struct ExperimentConfig {
    std::string name = "experiment";

    // Data generation.
    std::string system = "l63";
    /// Integration step; 0 uses the system default.
    double dt = 0.0;
    Index transient = 1000;
    std::uint64_t data_seed = 1;

    // Preparation, applied in this order.
    /// Unit conversion of the measured variables (empty: none).
    std::vector<double> measurement_scale;
    /// Rescaling of the measured variables before training (empty: none).
    std::vector<double> input_scale;
    Index subsample = 1;
    NormScheme normalization = NormScheme::none;
    /// Gaussian noise on the training and validation segments only.
    double noise_percent = 0.0;
    /// test_horizon 0 derives the horizon from horizon_lyapunov.
    SplitSizes split = [] {
        SplitSizes s;
        s.test_horizon = 0;
        return s;
    }();
    std::uint64_t split_seed = 7;

    // Model.
    MacroParams params;
    std::optional<SearchSettings> search;
    std::optional<LocalizationSettings> localization;

    // Evaluation.
    double threshold = 0.3;
    /// Forecast horizon in Lyapunov times, used when split.test_horizon is 0.
    double horizon_lyapunov = 25.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Starts from the preset named by "preset" when present, otherwise requires
/// "system" and "params". Unknown keys throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

struct Preset {
    std::string id;
    std::string table;
    ExperimentConfig config;
};

/// Every preset shipped with the library, in file order.
const std::vector<Preset>& presets();
/// Accepts an optional "fig_" prefix. Throws ConfigError listing close ids.
const Preset& find_preset(const std::string& id);
/// Presets of one table (file stem), in file order.
std::vector<Preset> presets_in_table(const std::string& table);
/// Parses a preset table: '#' comment lines, then a header row.
std::vector<Preset> parse_preset_table(const std::string& table, const std::string& csv_text);

/// Data after generation and preparation.
struct PreparedData {
    SystemSpec system;
    double dt = 0.0;           ///< step of the prepared series
    Index horizon = 0;         ///< evaluation horizon in steps
    double tau_steps = 0.0;    ///< Lyapunov time in steps
    NormalizationStats normalization;
    Vector climatology_std;    ///< of the prepared training segment, before noise
    DataSplit data;
};

/// The raw (measured, before scaling) trajectory.
TimeSeries generate_series(const ExperimentConfig& config);
PreparedData prepare_data(const ExperimentConfig& config);

/// A trained single reservoir or localized ensemble.
struct TrainedModel {
    std::optional<Reservoir> single;
    std::optional<LocalizedEnsemble> ensemble;

    /// Batched forecaster that refers to this model; keep the model alive.
    std::unique_ptr<BatchForecaster> forecaster(unsigned workers = 1) const;
    /// "model.bin" or "ensemble.bin".
    std::string file_name() const;
    void save(const std::filesystem::path& path) const;
};

/// Trains the model described by the config (params, localization) on the
/// prepared training segment.
TrainedModel train_model(const ExperimentConfig& config, const DataSplit& data, unsigned workers = 1);
/// Reads either container format.
TrainedModel load_model(const std::filesystem::path& path);

EvaluationOptions evaluation_options(const ExperimentConfig& config, const PreparedData& prepared,
                                     unsigned workers = 1);
/// Forecasts every test IC of the prepared data.
std::vector<ForecastEval> evaluate_model(const TrainedModel& model, const ExperimentConfig& config,
                                         const PreparedData& prepared, unsigned workers = 1);
/// Writes evaluation.csv, vpt_summary.json, vpt_histogram.csv and
/// rmse_mean.csv into dir and returns their names.
std::vector<std::string> write_evaluation_outputs(const std::filesystem::path& dir, const PreparedData& prepared,
                                                  const std::vector<ForecastEval>& evals, const VptSummary& summary);

struct ExperimentResult {
    ExperimentConfig resolved;   ///< params replaced by the optimum when searched
    std::optional<OptimizationResult> optimization;
    std::vector<ForecastEval> evals;
    VptSummary summary;
    std::vector<std::uint64_t> member_seeds;
    double tau_steps = 0.0;
    Index horizon = 0;
};

struct RunOptions {
    unsigned workers = 1;
    /// Also writes the trained model file.
    bool save_model = true;
};

/// Prepares data, optionally searches the macro parameters, trains a single
/// reservoir or a localized ensemble and evaluates it on the test ICs. With
/// an output directory, writes config.json, manifest.json, evaluation.csv,
/// vpt_summary.json, vpt_histogram.csv, rmse_mean.csv, trace.csv (when
/// searched) and model.bin / ensemble.bin. Failures are recorded in the
/// manifest before the exception propagates.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                const RunOptions& options = {});

/// Deterministic manifest for a finished (or failed) run.
nlohmann::ordered_json make_manifest(const ExperimentConfig& config, const ExperimentResult* result,
                                     const std::vector<std::string>& outputs, const std::string& error = {});

/// Mean normalized RMSE per lead step over the forecasts that reached it.
std::vector<double> mean_rmse_curve(const std::vector<ForecastEval>& evals);

} // namespace rcf
