#include "cli.hpp"

#include "rcf/csv.hpp"
#include "rcf/serialization.hpp"
#include "rcf/spectral.hpp"
#include "rcf/training.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>

namespace rcf::cli {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

ExperimentConfig resolve_config(const CommonOptions& opts) {
    if (opts.config_path.empty() && opts.preset.empty())
        throw ConfigError("config", "give --config <file> or --preset <id>");
    ExperimentConfig config;
    if (opts.config_path.empty()) {
        config = find_preset(opts.preset).config;
    } else {
        std::ifstream in(opts.config_path);
        if (!in) throw ConfigError("config", "cannot open " + opts.config_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("config", opts.config_path + ": " + e.what());
        }
        if (!opts.preset.empty()) {
            if (!j.is_object()) throw ConfigError("config", "expected an object");
            j["preset"] = opts.preset;
        }
        config = config_from_json(j);
    }
    if (opts.seed) config.params.seed = *opts.seed;
    config.validate();
    return config;
}

fs::path output_dir(const CommonOptions& opts, const std::string& name) {
    fs::path dir;
    if (!opts.out.empty()) dir = opts.out;
    else if (const char* env = std::getenv("RCF_OUT"); env && *env) dir = fs::path(env) / name;
    else dir = fs::path("runs") / name;
    fs::create_directories(dir);
    return dir;
}

void write_manifest(const fs::path& dir, const ExperimentConfig& config, std::vector<std::string> outputs,
                    const ordered_json& extra) {
    outputs.push_back("manifest.json");
    ordered_json m = make_manifest(config, nullptr, outputs);
    if (extra.is_object())
        for (const auto& [key, value] : extra.items()) m[key] = value;
    std::ofstream out(dir / "manifest.json");
    out << m.dump(2) << '\n';
}

void print_result(const ordered_json& record) {
    ordered_json r;
    r["status"] = "ok";
    for (const auto& [key, value] : record.items()) r[key] = value;
    std::cout << r.dump(2) << std::endl;
}

namespace {

ordered_json summary_record(const VptSummary& s) { return ordered_json::parse(summary_json(s)); }

void write_vector_csv(const fs::path& path, const std::string& column, const Vector& v) {
    CsvWriter csv(path, {"variable", column});
    for (Index i = 0; i < v.size(); ++i) {
        csv << i << v[i];
        csv.end_row();
    }
}

} // namespace

int cmd_generate(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    const fs::path dir = output_dir(opts, config.name);
    const TimeSeries series = generate_series(config);
    write_series_csv(dir / "series.csv", series.values(), series.dt());
    save_config(dir / "config.json", config);
    write_manifest(dir, config, {"config.json", "series.csv"});
    print_result({{"out", dir.string()}, {"samples", series.len()}, {"dim", series.dim()}, {"dt", series.dt()}});
    return 0;
}

int cmd_prepare(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    const fs::path dir = output_dir(opts, config.name);
    const PreparedData prepared = prepare_data(config);
    const DataSplit& data = prepared.data;
    std::vector<std::string> outputs = {"config.json", "train.csv", "validation.csv", "climatology.csv",
                                        "normalization.json"};
    save_config(dir / "config.json", config);
    write_series_csv(dir / "train.csv", data.train.values(), prepared.dt);
    write_series_csv(dir / "validation.csv", data.validation.values(), prepared.dt);
    write_vector_csv(dir / "climatology.csv", "std", prepared.climatology_std);
    {
        const auto& n = prepared.normalization;
        ordered_json j{{"scheme", std::string(to_string(n.scheme))}};
        if (n.scheme == NormScheme::per_variable) {
            j["mean"] = std::vector<double>(n.mean.data(), n.mean.data() + n.mean.size());
            j["std"] = std::vector<double>(n.std.data(), n.std.data() + n.std.size());
        } else if (n.scheme == NormScheme::joint) {
            j["mean"] = n.joint_mean;
            j["max"] = n.joint_max;
            j["min"] = n.joint_min;
        }
        std::ofstream(dir / "normalization.json") << j.dump(2) << '\n';
    }
    if (data.test) {
        write_series_csv(dir / "test.csv", data.test->values(), prepared.dt);
        std::vector<std::string> header = {"ic", "index"};
        for (Index i = 0; i < prepared.system.dim; ++i) header.push_back("u" + std::to_string(i));
        CsvWriter csv(dir / "test_ics.csv", header);
        for (std::size_t i = 0; i < data.test_ics.size(); ++i) {
            csv << static_cast<Index>(i) << data.test_ics[i].index;
            for (Index k = 0; k < data.test_ics[i].state.size(); ++k) csv << data.test_ics[i].state[k];
            csv.end_row();
        }
        outputs.insert(outputs.end(), {"test.csv", "test_ics.csv"});
    }
    write_manifest(dir, config, outputs,
                   {{"derived", {{"tau_lambda_steps", prepared.tau_steps}, {"horizon_steps", prepared.horizon}}}});
    print_result({{"out", dir.string()},
                  {"train_samples", data.train.len()},
                  {"validation_samples", data.validation.len()},
                  {"test_ics", data.test_ics.size()},
                  {"horizon_steps", prepared.horizon}});
    return 0;
}

int cmd_optimize(const CommonOptions& opts) {
    ExperimentConfig config = resolve_config(opts);
    if (!config.search) config.search = SearchSettings{};
    config.validate();
    const fs::path dir = output_dir(opts, config.name);
    save_config(dir / "config.json", config);

    const PreparedData prepared = prepare_data(config);
    MacroSearchSpace space{config.params,          config.search->bounds, config.search->initial_samples,
                           config.search->max_evaluations, config.search->batch,
                           config.search->acquisition_candidates};
    MacroLossOptions loss;
    loss.spinup = config.split.spinup;
    const OptimizationResult result = optimize_macro(space, prepared.data, default_factory(prepared.system.dim), loss,
                                                     config.search->seed, opts.workers);
    write_trace_csv(dir / "trace.csv", space, result);

    // The optimum as a ready-to-train config.
    ExperimentConfig resolved = config;
    resolved.params = result.best;
    resolved.search.reset();
    save_config(dir / "best_config.json", resolved);
    std::ofstream(dir / "best_params.json") << to_json(result.best).dump(2) << '\n';

    const ordered_json info{{"best_eval", result.best_eval},
                            {"best_loss", result.best_loss},
                            {"evaluations", result.trace.size()},
                            {"divergence_penalty", result.divergence_penalty}};
    write_manifest(dir, config, {"config.json", "trace.csv", "best_config.json", "best_params.json"},
                   {{"optimization", info}});
    print_result({{"out", dir.string()}, {"optimization", info}, {"best_params", to_json(result.best)}});
    return 0;
}

int cmd_train(const CommonOptions& opts) {
    const ExperimentConfig config = resolve_config(opts);
    if (config.search)
        throw ConfigError("search", "train uses fixed params; run optimize and train its best_config.json");
    const fs::path dir = output_dir(opts, config.name);
    save_config(dir / "config.json", config);
    const PreparedData prepared = prepare_data(config);
    const TrainedModel model = train_model(config, prepared.data, opts.workers);
    model.save(dir / model.file_name());
    ordered_json extra;
    if (model.ensemble) extra["seeds_members"] = model.ensemble->member_seeds();
    write_manifest(dir, config, {"config.json", model.file_name()}, extra);
    print_result({{"out", dir.string()}, {"model", (dir / model.file_name()).string()}});
    return 0;
}

int cmd_forecast(const CommonOptions& opts, const ForecastOptions& fopts) {
    const ExperimentConfig config = resolve_config(opts);
    const fs::path dir = output_dir(opts, config.name);
    const PreparedData prepared = prepare_data(config);
    const TrainedModel model = load_model(fopts.model);
    const auto forecaster = model.forecaster(opts.workers);
    const DataSplit& data = prepared.data;
    if (!data.test || data.test_ics.empty()) throw ConfigError("evaluation.test_ics", "no test ICs to forecast from");
    if (forecaster->dim() != prepared.system.dim)
        throw ConfigError("model", "model dimension does not match the data");

    const Index horizon = fopts.horizon > 0 ? std::min(fopts.horizon, prepared.horizon) : prepared.horizon;
    const Index count = std::min<Index>(std::max<Index>(fopts.ics, 1), static_cast<Index>(data.test_ics.size()));
    std::vector<std::string> header = {"ic", "step", "lyapunov_time"};
    for (Index i = 0; i < prepared.system.dim; ++i) header.push_back("forecast_" + std::to_string(i));
    for (Index i = 0; i < prepared.system.dim; ++i) header.push_back("truth_" + std::to_string(i));
    CsvWriter csv(dir / "forecast.csv", header);
    for (Index n = 0; n < count; ++n) {
        const Index start = data.test_ics[static_cast<std::size_t>(n)].index;
        const Matrix f = forecast_from(*forecaster, *data.test, start, config.split.spinup, horizon);
        for (Index k = 0; k < horizon; ++k) {
            csv << n << k << static_cast<double>(k) / prepared.tau_steps;
            for (Index i = 0; i < f.rows(); ++i) csv << f(i, k);
            for (Index i = 0; i < f.rows(); ++i) csv << data.test->values()(i, start + k);
            csv.end_row();
        }
    }
    write_manifest(dir, config, {"forecast.csv"}, {{"model", fopts.model}, {"horizon_steps", horizon}});
    print_result({{"out", dir.string()}, {"ics", count}, {"horizon_steps", horizon}});
    return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& model_path) {
    const ExperimentConfig config = resolve_config(opts);
    const fs::path dir = output_dir(opts, config.name);
    if (model_path.empty()) {
        const ExperimentResult r = run_experiment(config, dir, {opts.workers, true});
        print_result({{"out", dir.string()}, {"summary", summary_record(r.summary)}});
        return 0;
    }
    const PreparedData prepared = prepare_data(config);
    const TrainedModel model = load_model(model_path);
    ExperimentResult r;
    r.resolved = config;
    if (model.single) r.resolved.params = model.single->params();
    if (model.ensemble) r.member_seeds = model.ensemble->member_seeds();
    r.tau_steps = prepared.tau_steps;
    r.horizon = prepared.horizon;
    r.evals = evaluate_model(model, config, prepared, opts.workers);
    r.summary = vpt_distribution(r.evals);
    save_config(dir / "config.json", config);
    std::vector<std::string> outputs = {"config.json"};
    const auto written = write_evaluation_outputs(dir, prepared, r.evals, r.summary);
    outputs.insert(outputs.end(), written.begin(), written.end());
    outputs.push_back("manifest.json");
    ordered_json m = make_manifest(config, &r, outputs);
    m["model"] = model_path;
    std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';
    print_result({{"out", dir.string()}, {"summary", summary_record(r.summary)}});
    return 0;
}

int cmd_lyapunov(const CommonOptions& opts, const LyapunovCliOptions& lopts) {
    if (lopts.system.empty() == lopts.model.empty())
        throw ConfigError("lyapunov", "give exactly one of --system and --model");
    if (lopts.steps < 1) throw ConfigError("steps", "must be >= 1");
    LyapunovOptions le_opts;
    if (opts.seed) le_opts.seed = *opts.seed;
    ordered_json record;
    std::vector<double> exponents;
    std::string name;
    if (!lopts.system.empty()) {
        const SystemSpec sys = builtin_system(lopts.system);
        name = sys.name;
        exponents = les_ode(sys, lopts.dt, lopts.steps, le_opts);
        record["system"] = sys.name;
        if (!sys.reference_les.empty()) record["reference"] = sys.reference_les;
    } else {
        const TrainedModel model = load_model(lopts.model);
        if (!model.single) throw ConfigError("model", "autonomous exponents need a single reservoir model");
        const Reservoir& res = *model.single;
        const Index count = lopts.count > 0 ? lopts.count : res.output_dim();
        name = fs::path(lopts.model).stem().string() + "_autonomous";
        exponents = les_autonomous_rc(res, lopts.dt, lopts.steps, count, le_opts);
        record["model"] = lopts.model;
    }
    const fs::path dir = output_dir(opts, name);
    write_spectrum_csv(dir / "spectrum.csv", exponents);
    record["dt"] = lopts.dt;
    record["steps"] = lopts.steps;
    record["exponents"] = exponents;
    ordered_json manifest = record;
    manifest["tool"] = "rcf";
    manifest["spec_version"] = kSpecVersion;
    manifest["seeds"] = {{"tangent_basis", le_opts.seed}};
    manifest["outputs"] = {"spectrum.csv", "manifest.json"};
    manifest["status"] = "ok";
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
    record["out"] = dir.string();
    print_result(record);
    return 0;
}

namespace {

std::vector<double> linspace(double lo, double hi, Index count) {
    if (count < 1) throw ConfigError("grid", "needs at least one point");
    std::vector<double> v(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i)
        v[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return v;
}

} // namespace

int cmd_stability(const CommonOptions& opts, const StabilityCliOptions& sopts) {
    StabilitySettings settings = sopts.settings;
    if (sopts.method == "linearized") settings.method = FixedPointMethod::linearized;
    else if (sopts.method == "newton") settings.method = FixedPointMethod::newton;
    else throw ConfigError("method", "expected linearized or newton, got '" + sopts.method + "'");
    const std::uint64_t seed = opts.seed.value_or(2);
    const auto radii = linspace(sopts.radius_min, sopts.radius_max, sopts.radius_count);
    const auto mags = linspace(sopts.magnitude_min, sopts.magnitude_max, sopts.magnitude_count);
    const StabilityMap map = stability_map(settings, radii, mags, seed, opts.workers);
    const fs::path dir = output_dir(opts, "stability");
    write_stability_csv(dir / "stability.csv", map);
    const ordered_json info{{"size", settings.size},
                            {"leak", settings.leak},
                            {"density", settings.density},
                            {"input_bias", settings.input_bias},
                            {"method", sopts.method},
                            {"seed", seed}};
    ordered_json manifest{{"tool", "rcf"}, {"spec_version", kSpecVersion}, {"settings", info},
                          {"outputs", {"stability.csv", "manifest.json"}}, {"status", "ok"}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
    print_result({{"out", dir.string()}, {"settings", info}, {"cells", radii.size() * mags.size()}});
    return 0;
}

int cmd_localize(const CommonOptions& opts, const LocalizeOptions& lopts) {
    ExperimentConfig config = resolve_config(opts);
    LocalizationSettings loc = config.localization.value_or(LocalizationSettings{});
    if (lopts.n_output) loc.n_output = *lopts.n_output;
    if (lopts.n_halo) loc.n_halo = *lopts.n_halo;
    config.localization = loc;
    config.validate();
    const fs::path dir = output_dir(opts, config.name);
    const ExperimentResult r = run_experiment(config, dir, {opts.workers, true});
    print_result({{"out", dir.string()},
                  {"groups", r.member_seeds.size()},
                  {"summary", summary_record(r.summary)}});
    return 0;
}

int cmd_inspect(const std::string& model_path) {
    const TrainedModel model = load_model(model_path);
    auto describe = [](const Reservoir& res) {
        const double measured = spectral_radius(res.adjacency());
        const double target = res.params().spectral_radius;
        return ordered_json{{"params", to_json(res.params())},
                            {"size", res.size()},
                            {"input_dim", res.input_dim()},
                            {"output_dim", res.output_dim()},
                            {"feature_dim", res.feature_dim()},
                            {"nonzeros", res.adjacency().nonZeros()},
                            {"trained", res.trained()},
                            {"spectral_radius",
                             {{"target", target},
                              {"measured", measured},
                              {"abs_error", std::abs(measured - target)},
                              {"ok", std::abs(measured - target) <= 1e-6}}}};
    };
    ordered_json record{{"file", model_path}};
    if (model.single) {
        record["kind"] = "reservoir";
        record["model"] = describe(*model.single);
    } else {
        const auto& e = *model.ensemble;
        record["kind"] = "ensemble";
        record["layout"] = {{"system_dim", e.layout.system_dim},
                            {"n_output", e.layout.group_output},
                            {"n_halo", e.layout.halo},
                            {"groups", e.layout.num_groups()}};
        record["members"] = ordered_json::array();
        for (const auto& m : e.members) record["members"].push_back(describe(m));
    }
    print_result(record);
    return 0;
}

} // namespace rcf::cli
