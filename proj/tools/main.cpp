#include "cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

using ordered_json = nlohmann::ordered_json;

// Exit codes of the error record.
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int fail(const std::string& kind, const std::string& message, int code, const std::string& field = {}) {
    ordered_json err{{"kind", kind}, {"message", message}};
    if (!field.empty()) err["field"] = field;
    std::cerr << ordered_json{{"status", "error"}, {"exit_code", code}, {"error", err}}.dump() << std::endl;
    return code;
}

void add_common(CLI::App* cmd, rcf::cli::CommonOptions& opts, bool with_config = true) {
    if (with_config) {
        cmd->add_option("--config", opts.config_path, "Experiment config (JSON)");
        cmd->add_option("--preset", opts.preset, "Shipped preset id, e.g. best_l63");
    }
    cmd->add_option("--out", opts.out, "Output directory (default $RCF_OUT/<name> or runs/<name>)");
    cmd->add_option("--seed", opts.seed, "Reservoir seed override");
    cmd->add_option("--workers", opts.workers, "Worker threads")->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv) {
    using namespace rcf::cli;
    CLI::App app{"rcf: reservoir computing forecasts of chaotic systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("rcf ") + rcf::kSpecVersion);

    CommonOptions common;
    ForecastOptions forecast;
    std::string model_path;
    LyapunovCliOptions lyap;
    StabilityCliOptions stab;
    LocalizeOptions loc;
    ReproduceOptions repro;

    auto* generate = app.add_subcommand("generate", "Integrate the system and write the measured series");
    add_common(generate, common);
    auto* prepare = app.add_subcommand("prepare", "Scale, split, normalize and add noise; write the segments");
    add_common(prepare, common);
    auto* optimize = app.add_subcommand("optimize", "Bayesian search of the macro parameters");
    add_common(optimize, common);
    auto* train = app.add_subcommand("train", "Train a reservoir or localized ensemble and save it");
    add_common(train, common);

    auto* fc = app.add_subcommand("forecast", "Forecast from test ICs with a saved model");
    add_common(fc, common);
    fc->add_option("--model", forecast.model, "Model file")->required();
    fc->add_option("--ics", forecast.ics, "Number of test ICs");
    fc->add_option("--horizon", forecast.horizon, "Steps to forecast (default: evaluation horizon)");

    auto* evaluate = app.add_subcommand("evaluate", "VPT distribution over the test ICs");
    add_common(evaluate, common);
    evaluate->add_option("--model", model_path, "Evaluate this model instead of training one");

    auto* lyapunov = app.add_subcommand("lyapunov", "Lyapunov spectrum of a system or an autonomous reservoir");
    add_common(lyapunov, common, false);
    lyapunov->add_option("--system", lyap.system, "Built-in system name");
    lyapunov->add_option("--model", lyap.model, "Trained reservoir model");
    lyapunov->add_option("--dt", lyap.dt, "Time step");
    lyapunov->add_option("--steps", lyap.steps, "Steps");
    lyapunov->add_option("--count", lyap.count, "Exponents of a reservoir (default: output dimension)");

    auto* stability = app.add_subcommand("stability", "Fixed point stability map");
    add_common(stability, common, false);
    stability->add_option("--size", stab.settings.size, "Reservoir size");
    stability->add_option("--leak", stab.settings.leak, "Leak rate");
    stability->add_option("--density", stab.settings.density, "Adjacency density");
    stability->add_option("--input-bias", stab.settings.input_bias, "Input bias");
    stability->add_option("--method", stab.method, "linearized or newton");
    stability->add_option("--radius-min", stab.radius_min);
    stability->add_option("--radius-max", stab.radius_max);
    stability->add_option("--radius-count", stab.radius_count);
    stability->add_option("--magnitude-min", stab.magnitude_min);
    stability->add_option("--magnitude-max", stab.magnitude_max);
    stability->add_option("--magnitude-count", stab.magnitude_count);

    auto* localize = app.add_subcommand("localize", "Train and evaluate a localized ensemble");
    add_common(localize, common);
    localize->add_option("--n-output", loc.n_output, "Outputs per group");
    localize->add_option("--n-halo", loc.n_halo, "Halo width on each side");

    auto* reproduce = app.add_subcommand("reproduce", "Run the experiment behind a figure");
    add_common(reproduce, common, false);
    reproduce->add_option("figure", repro.figure, "Figure id")->required();
    reproduce->add_option("--ics", repro.test_ics, "Test ICs per run (default: preset)");
    reproduce->add_flag_function(
        "--list", [](std::int64_t) {
            for (const auto& id : figure_ids()) std::cout << id << '\n';
            std::exit(0);
        },
        "List the figure ids");

    auto* inspect = app.add_subcommand("inspect", "Describe a model file");
    std::string inspect_path;
    inspect->add_option("model", inspect_path, "Model file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), kExitUsage);
    }

    try {
        if (*generate) return cmd_generate(common);
        if (*prepare) return cmd_prepare(common);
        if (*optimize) return cmd_optimize(common);
        if (*train) return cmd_train(common);
        if (*fc) return cmd_forecast(common, forecast);
        if (*evaluate) return cmd_evaluate(common, model_path);
        if (*lyapunov) return cmd_lyapunov(common, lyap);
        if (*stability) return cmd_stability(common, stab);
        if (*localize) return cmd_localize(common, loc);
        if (*reproduce) return cmd_reproduce(common, repro);
        if (*inspect) return cmd_inspect(inspect_path);
    } catch (const rcf::ConfigError& e) {
        return fail("config", e.what(), kExitUsage, e.field());
    } catch (const rcf::NumericalError& e) {
        return fail("numerical", e.what(), kExitNumerical);
    } catch (const std::invalid_argument& e) {
        return fail("invalid_argument", e.what(), kExitUsage);
    } catch (const std::exception& e) {
        return fail("runtime", e.what(), kExitRuntime);
    }
    return kExitUsage;
}
