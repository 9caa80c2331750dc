#pragma once

#include "rcf/experiment.hpp"
#include "rcf/lyapunov.hpp"
#include "rcf/serialization.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace rcf::cli {

/// Flags shared by every subcommand.
struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
};

/// Config from --preset and/or --config (the file is applied over the
/// preset), with --seed replacing the reservoir seed.
ExperimentConfig resolve_config(const CommonOptions& opts);
/// --out, else $RCF_OUT/<name>, else runs/<name>. Created on demand.
std::filesystem::path output_dir(const CommonOptions& opts, const std::string& name);
/// Writes manifest.json for commands that do not go through run_experiment.
void write_manifest(const std::filesystem::path& dir, const ExperimentConfig& config,
                    std::vector<std::string> outputs, const nlohmann::ordered_json& extra = {});
/// The success record printed on stdout.
void print_result(const nlohmann::ordered_json& record);

int cmd_generate(const CommonOptions& opts);
int cmd_prepare(const CommonOptions& opts);
int cmd_optimize(const CommonOptions& opts);
int cmd_train(const CommonOptions& opts);

struct ForecastOptions {
    std::string model;
    Index ics = 1;
    Index horizon = 0;
};
int cmd_forecast(const CommonOptions& opts, const ForecastOptions& fopts);
int cmd_evaluate(const CommonOptions& opts, const std::string& model_path);

struct LyapunovCliOptions {
    std::string system;
    std::string model;
    double dt = 0.01;
    Index steps = 200000;
    Index count = 0;
};
int cmd_lyapunov(const CommonOptions& opts, const LyapunovCliOptions& lopts);

struct StabilityCliOptions {
    StabilitySettings settings;
    std::string method = "linearized";
    double radius_min = 0.0, radius_max = 2.0;
    Index radius_count = 201;
    double magnitude_min = 0.0, magnitude_max = 10.0;
    Index magnitude_count = 51;
};
int cmd_stability(const CommonOptions& opts, const StabilityCliOptions& sopts);

struct LocalizeOptions {
    std::optional<Index> n_output;
    std::optional<Index> n_halo;
};
int cmd_localize(const CommonOptions& opts, const LocalizeOptions& lopts);

struct ReproduceOptions {
    std::string figure;
    /// Overrides the number of test ICs of every run (0 keeps the preset).
    Index test_ics = 0;
};
int cmd_reproduce(const CommonOptions& opts, const ReproduceOptions& ropts);
int cmd_inspect(const std::string& model_path);

/// Known figure ids of the reproduce command, in listing order.
std::vector<std::string> figure_ids();

} // namespace rcf::cli
