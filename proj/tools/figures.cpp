#include "cli.hpp"

#include "rcf/csv.hpp"
#include "rcf/lyapunov.hpp"
#include "rcf/parallel.hpp"
#include "rcf/reservoir.hpp"
#include "rcf/serialization.hpp"

#include <cmath>
#include <fstream>
#include <limits>

namespace rcf::cli {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

struct FigureContext {
    fs::path dir;
    const CommonOptions& opts;
    const ReproduceOptions& ropts;
    std::vector<std::string> outputs;
    ordered_json info = ordered_json::object();

    /// Applies the command line overrides to a preset config.
    ExperimentConfig adjust(ExperimentConfig c) const {
        if (opts.seed) c.params.seed = *opts.seed;
        if (ropts.test_ics > 0) c.split.test_ics = ropts.test_ics;
        return c;
    }
};

struct Figure {
    std::string id;
    std::string description;
    void (*run)(FigureContext&);
};

/// One row per run: the VPT distribution of a config, or the error that
/// stopped it.
class SummaryTable {
public:
    explicit SummaryTable(const fs::path& path)
        : csv_(path, {"run", "variant", "system", "size", "mean_vpt", "median_vpt", "q1_vpt", "q3_vpt", "min_vpt",
                      "max_vpt", "truncated", "count", "status"}) {}

    void add(const std::string& run, const std::string& variant, const ExperimentConfig& c, const VptSummary& s) {
        csv_ << run << variant << c.system << c.params.size << s.mean << s.median << s.q1 << s.q3 << s.min << s.max
             << s.truncated << s.count << "ok";
        csv_.end_row();
    }
    void add_error(const std::string& run, const std::string& variant, const ExperimentConfig& c) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        csv_ << run << variant << c.system << c.params.size << nan << nan << nan << nan << nan << nan << Index{0}
             << Index{0} << "error";
        csv_.end_row();
    }

private:
    CsvWriter csv_;
};

/// Runs each config into its own subdirectory. A failed run is recorded in
/// its manifest and the summary; the remaining runs still execute.
void run_configs(FigureContext& ctx, const std::vector<std::pair<std::string, ExperimentConfig>>& runs,
                 const std::vector<std::string>& variants = {}) {
    SummaryTable table(ctx.dir / "summary.csv");
    ctx.outputs.push_back("summary.csv");
    ordered_json failed = ordered_json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& [name, config] = runs[i];
        const std::string variant = i < variants.size() ? variants[i] : "";
        try {
            const ExperimentResult r = run_experiment(config, ctx.dir / name, {ctx.opts.workers, true});
            table.add(name, variant, r.resolved, r.summary);
        } catch (const std::exception& e) {
            table.add_error(name, variant, config);
            failed.push_back({{"run", name}, {"error", e.what()}});
        }
        ctx.outputs.push_back(name + "/");
    }
    ctx.info["runs"] = runs.size();
    if (!failed.empty()) ctx.info["failed"] = failed;
}

void run_table(FigureContext& ctx, const std::string& table) {
    std::vector<std::pair<std::string, ExperimentConfig>> runs;
    for (const auto& p : presets_in_table(table)) runs.emplace_back(p.id, ctx.adjust(p.config));
    ctx.info["table"] = table;
    run_configs(ctx, runs);
}

const std::vector<std::string> kBestSystems = {"rossler", "colpitts", "l63", "l96_5d", "l96_10d", "cl63"};

void fig_stability_map(FigureContext& ctx) {
    const StabilitySettings settings;  // N = 200, alpha = 0.5, density 0.9
    const std::uint64_t seed = ctx.opts.seed.value_or(2);
    std::vector<double> radii, mags;
    for (int i = 0; i <= 200; ++i) radii.push_back(0.01 * i);
    for (int j = 0; j <= 50; ++j) mags.push_back(0.2 * j);
    const StabilityMap map = stability_map(settings, radii, mags, seed, ctx.opts.workers);
    write_stability_csv(ctx.dir / "stability_map.csv", map);
    ctx.outputs.push_back("stability_map.csv");
    ctx.info["settings"] = {{"size", settings.size}, {"leak", settings.leak}, {"density", settings.density},
                            {"input_bias", settings.input_bias}, {"seed", seed}};
}

void fig_lyapunov_spectra(FigureContext& ctx) {
    constexpr double dt = 0.01;
    constexpr Index steps = 200000;
    std::vector<std::vector<double>> spectra(kBestSystems.size());
    parallel_for(static_cast<Index>(kBestSystems.size()), ctx.opts.workers, [&](Index i) {
        const SystemSpec sys = builtin_system(kBestSystems[static_cast<std::size_t>(i)]);
        spectra[static_cast<std::size_t>(i)] = les_ode(sys, dt, steps);
    });
    CsvWriter csv(ctx.dir / "spectra.csv", {"system", "index", "exponent", "reference"});
    for (std::size_t s = 0; s < kBestSystems.size(); ++s) {
        const auto ref = builtin_system(kBestSystems[s]).reference_les;
        for (std::size_t k = 0; k < spectra[s].size(); ++k) {
            csv << kBestSystems[s] << static_cast<Index>(k) << spectra[s][k]
                << (k < ref.size() ? ref[k] : std::numeric_limits<double>::quiet_NaN());
            csv.end_row();
        }
    }
    ctx.outputs.push_back("spectra.csv");
    ctx.info["dt"] = dt;
    ctx.info["steps"] = steps;
}

void fig_attractor_reconstruction(FigureContext& ctx) {
    const ExperimentConfig config = ctx.adjust(find_preset("best_l63").config);
    const PreparedData prepared = prepare_data(config);
    TrainedModel model = train_model(config, prepared.data);
    Reservoir& res = *model.single;
    const auto les = les_autonomous_rc(res, prepared.dt, 20000, 3);
    write_spectrum_csv(ctx.dir / "rc_exponents.csv", les);

    // Free run from the end of the training data next to the true continuation.
    const Index steps = std::min<Index>(5000, prepared.data.validation.len());
    write_series_csv(ctx.dir / "attractor_rc.csv", res.forecast(steps), prepared.dt);
    write_series_csv(ctx.dir / "attractor_truth.csv", prepared.data.validation.slice(0, steps).values(), prepared.dt);
    save_config(ctx.dir / "config.json", config);
    ctx.outputs.insert(ctx.outputs.end(), {"config.json", "rc_exponents.csv", "attractor_rc.csv", "attractor_truth.csv"});
    ctx.info["leading_exponent"] = les.front();
    ctx.info["reference_leading_exponent"] = prepared.system.lambda1;
}

void fig_training_data(FigureContext& ctx) {
    const ExperimentConfig config = ctx.adjust(find_preset("best_l63").config);
    const PreparedData prepared = prepare_data(config);
    write_series_csv(ctx.dir / "train.csv", prepared.data.train.values(), prepared.dt);
    CsvWriter csv(ctx.dir / "test_ics.csv", {"ic", "index", "u0", "u1", "u2"});
    for (std::size_t i = 0; i < prepared.data.test_ics.size(); ++i) {
        const auto& ic = prepared.data.test_ics[i];
        csv << static_cast<Index>(i) << ic.index << ic.state[0] << ic.state[1] << ic.state[2];
        csv.end_row();
    }
    save_config(ctx.dir / "config.json", config);
    ctx.outputs.insert(ctx.outputs.end(), {"config.json", "train.csv", "test_ics.csv"});
}

void fig_best(FigureContext& ctx) { run_table(ctx, "best"); }
void fig_reservoir_size(FigureContext& ctx) { run_table(ctx, "reservoir_size"); }
void fig_input_bias(FigureContext& ctx) { run_table(ctx, "input_bias"); }
void fig_training_length(FigureContext& ctx) { run_table(ctx, "training_length"); }
void fig_normalization(FigureContext& ctx) { run_table(ctx, "normalization"); }
void fig_time_step(FigureContext& ctx) { run_table(ctx, "time_step"); }
void fig_single_rc_scaling(FigureContext& ctx) { run_table(ctx, "single_rc"); }
void fig_localization(FigureContext& ctx) { run_table(ctx, "localization_halo"); }
void fig_localization_size(FigureContext& ctx) { run_table(ctx, "localization_size"); }
void fig_localization_showdown(FigureContext& ctx) { run_table(ctx, "showdown"); }

void fig_spinup(FigureContext& ctx) {
    // One trained model per system, evaluated with shorter and shorter spinup.
    const std::vector<Index> spinups = {1, 2, 5, 10, 20, 50, 100};
    SummaryTable table(ctx.dir / "summary.csv");
    for (const std::string id : {"best_l63", "best_l96_5d"}) {
        const ExperimentConfig config = ctx.adjust(find_preset(id).config);
        const PreparedData prepared = prepare_data(config);
        const TrainedModel model = train_model(config, prepared.data, ctx.opts.workers);
        for (const Index s : spinups) {
            if (s > config.split.spinup) continue;
            ExperimentConfig c = config;
            c.split.spinup = s;
            const auto evals = evaluate_model(model, c, prepared, ctx.opts.workers);
            table.add(id, "spinup=" + std::to_string(s), c, vpt_distribution(evals));
        }
    }
    ctx.outputs.push_back("summary.csv");
}

void fig_activation(FigureContext& ctx) {
    const std::vector<double> biases = {0.0, 0.5, 1.0, 1.5, 2.0};
    std::vector<std::string> header = {"x"};
    for (const double b : biases) header.push_back("bias_" + format_double(b));
    CsvWriter csv(ctx.dir / "activation.csv", header);
    for (int i = -200; i <= 200; ++i) {
        const double x = 0.025 * i;
        csv << x;
        for (const double b : biases) csv << std::tanh(x + b);
        csv.end_row();
    }
    ctx.outputs.push_back("activation.csv");
}

void fig_readout(FigureContext& ctx) {
    std::vector<std::pair<std::string, ExperimentConfig>> runs;
    std::vector<std::string> variants;
    for (const auto& sys : kBestSystems)
        for (const auto kind : {ReadoutKind::linear, ReadoutKind::biased, ReadoutKind::quadratic}) {
            ExperimentConfig c = ctx.adjust(find_preset("best_" + sys).config);
            c.params.readout = kind;
            runs.emplace_back("best_" + sys + "_" + std::string(to_string(kind)), c);
            variants.emplace_back(to_string(kind));
        }
    run_configs(ctx, runs, variants);
}

void fig_noise(FigureContext& ctx) {
    std::vector<std::pair<std::string, ExperimentConfig>> runs;
    std::vector<std::string> variants;
    for (const auto& sys : kBestSystems)
        for (const double noise : {0.0, 1.0, 2.0, 5.0, 10.0}) {
            ExperimentConfig c = ctx.adjust(find_preset("best_" + sys).config);
            c.noise_percent = noise;
            runs.emplace_back("best_" + sys + "_noise" + format_double(noise), c);
            variants.push_back("noise_percent=" + format_double(noise));
        }
    run_configs(ctx, runs, variants);
}

void fig_malkus_units(FigureContext& ctx) {
    // The same reservoir fed centre-of-mass positions in micrometres, and fed
    // the same measurements after scaling omega by 1/lambda and lengths by R.
    ExperimentConfig base;
    base.system = "malkus";
    base.measurement_scale = {1.0, 1e6, 1e6};
    base.params.size = 1000;
    base.params.density = 0.02;
    base.params.spectral_radius = 0.8;
    base.params.leak = 0.6;
    base.params.input_strength = 0.1;
    base.params.input_bias = 1.0;
    base.params.tikhonov = 1e-8;
    base.split.train_length = 50000;
    base.split.test_ics = 100;
    base.horizon_lyapunov = 10.0;

    ExperimentConfig micron = base;
    micron.name = "malkus_units_micron";
    ExperimentConfig scaled = base;
    scaled.name = "malkus_units_scaled";
    scaled.input_scale = {10.0, 1e-6, 1e-6};
    run_configs(ctx, {{micron.name, ctx.adjust(micron)}, {scaled.name, ctx.adjust(scaled)}},
                {"micrometres", "nondimensional"});
}

const std::vector<Figure>& figures() {
    static const std::vector<Figure> all = {
        {"stability_map", "fixed point stability over spectral radius and input magnitude", fig_stability_map},
        {"lyapunov_spectra", "Lyapunov spectra of the benchmark systems", fig_lyapunov_spectra},
        {"attractor_reconstruction", "autonomous exponents and free run of the L63 reservoir",
         fig_attractor_reconstruction},
        {"training_data", "L63 training data and test initial conditions", fig_training_data},
        {"best", "VPT of the best parameters, N = 2000", fig_best},
        {"reservoir_size", "VPT at N = 250 and after scaling up to N = 2000", fig_reservoir_size},
        {"spinup", "VPT against spinup length for L63 and L96-5D", fig_spinup},
        {"input_bias", "VPT with and without input bias", fig_input_bias},
        {"activation", "tanh activation shifted by the input bias", fig_activation},
        {"readout", "linear, biased and quadratic readouts", fig_readout},
        {"training_length", "VPT against training length", fig_training_length},
        {"normalization", "per-variable against joint normalization", fig_normalization},
        {"noise", "VPT against additive training noise", fig_noise},
        {"time_step", "VPT against sampling step", fig_time_step},
        {"single_rc_scaling", "single reservoir on L96-40 against reservoir size", fig_single_rc_scaling},
        {"localization", "localized ensembles against output and halo size", fig_localization},
        {"localization_size", "localized ensembles against reservoir size", fig_localization_size},
        {"localization_showdown", "localized, single and unbiased baseline reservoirs on L96-40",
         fig_localization_showdown},
        {"malkus_units", "water wheel in mixed units, raw against nondimensionalized", fig_malkus_units},
    };
    return all;
}

} // namespace

std::vector<std::string> figure_ids() {
    std::vector<std::string> ids;
    for (const auto& f : figures()) ids.push_back(f.id);
    return ids;
}

int cmd_reproduce(const CommonOptions& opts, const ReproduceOptions& ropts) {
    std::string id = ropts.figure;
    if (id.rfind("fig_", 0) == 0) id = id.substr(4);
    const Figure* figure = nullptr;
    for (const auto& f : figures())
        if (f.id == id) figure = &f;
    if (!figure) {
        std::string known;
        for (const auto& f : figures()) known += (known.empty() ? "" : ", ") + f.id;
        throw ConfigError("figure", "unknown figure id '" + ropts.figure + "'; known ids: " + known);
    }

    FigureContext ctx{output_dir(opts, figure->id), opts, ropts, {}, {}};
    figure->run(ctx);
    ctx.outputs.push_back("manifest.json");
    ordered_json manifest{{"tool", "rcf"},
                          {"spec_version", kSpecVersion},
                          {"model_format_version", kModelFormatVersion},
                          {"figure", figure->id},
                          {"description", figure->description}};
    for (const auto& [key, value] : ctx.info.items()) manifest[key] = value;
    manifest["outputs"] = ctx.outputs;
    manifest["status"] = ctx.info.contains("failed") ? "partial" : "ok";
    std::ofstream(ctx.dir / "manifest.json") << manifest.dump(2) << '\n';

    ordered_json record{{"figure", figure->id}, {"out", ctx.dir.string()}};
    for (const auto& [key, value] : ctx.info.items()) record[key] = value;
    print_result(record);
    return 0;
}

} // namespace rcf::cli
