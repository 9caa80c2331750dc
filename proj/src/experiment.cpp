#include "rcf/experiment.hpp"

#include "rcf/csv.hpp"
#include "rcf/serialization.hpp"
#include "rcf/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rcf {

namespace detail {
// Defined in the source generated from presets/*.csv: (table, csv text) pairs.
const std::vector<std::pair<std::string, std::string>>& embedded_preset_files();
} // namespace detail

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Walks one JSON object, rejecting keys that no reader asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    /// Throws for any key no reader asked for.
    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
    }

    template <typename T>
    void read(const char* key, T& target) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            target = j_.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(field(key), e.what());
        }
    }
    const json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }
    bool has(const char* key) const { return j_.contains(key); }
    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        out.push_back(cell);
    }
    return out;
}

double parse_number(const std::string& text, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where, "'" + text + "' is not a number");
    }
}

// Data used by the time-step table is integrated at this step and subsampled.
constexpr double kFineStep = 0.005;
// Training span, in model time, of presets that vary the sampling step.
constexpr double kTrainingSpan = 1000.0;
// Training length of the localized ensembles on the 40-dimensional Lorenz 96
// system, whose twenty members would otherwise each accumulate 10^5 states.
constexpr Index kEnsembleTrainLength = 20000;

} // namespace

void ExperimentConfig::validate() const {
    try {
        builtin_system(system);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("system", e.what());
    }
    if (dt < 0.0 || !std::isfinite(dt)) throw ConfigError("generation.dt", "must be >= 0 (0 selects the default)");
    if (transient < 0) throw ConfigError("generation.transient", "must be >= 0");
    if (subsample < 1) throw ConfigError("preparation.subsample", "must be >= 1");
    if (!(noise_percent >= 0.0)) throw ConfigError("preparation.noise_percent", "must be >= 0");
    const Index dim = builtin_system(system).dim;
    if (!measurement_scale.empty() && static_cast<Index>(measurement_scale.size()) != dim)
        throw ConfigError("preparation.measurement_scale", "needs one entry per state variable");
    if (!input_scale.empty() && static_cast<Index>(input_scale.size()) != dim)
        throw ConfigError("preparation.input_scale", "needs one entry per state variable");
    if (split.train_length < 2) throw ConfigError("preparation.train_length", "must be >= 2");
    if (split.spinup < 0 || split.spinup + 1 >= split.train_length)
        throw ConfigError("preparation.spinup", "must be >= 0 and shorter than the training data");
    if (split.macro_windows < 1) throw ConfigError("preparation.macro_windows", "must be >= 1");
    if (split.window_length < 1) throw ConfigError("preparation.window_length", "must be >= 1");
    if (split.test_ics < 1) throw ConfigError("evaluation.test_ics", "must be >= 1");
    if (split.test_horizon < 0) throw ConfigError("evaluation.test_horizon", "must be >= 0 (0 derives it)");
    if (!(threshold > 0.0)) throw ConfigError("evaluation.threshold", "must be positive");
    if (!(horizon_lyapunov > 0.0)) throw ConfigError("evaluation.horizon_lyapunov", "must be positive");
    try {
        params.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("params", e.what());
    }
    if (search) {
        MacroSearchSpace space{params, search->bounds, search->initial_samples, search->max_evaluations,
                               search->batch, search->acquisition_candidates};
        space.validate();
        if (localization) throw ConfigError("search", "macro search of localized ensembles is not supported");
    }
    if (localization) {
        try {
            make_layout(dim, localization->n_output, localization->n_halo);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("localization", e.what());
        }
    }
}

ordered_json to_json(const ExperimentConfig& c) {
    ordered_json j;
    j["name"] = c.name;
    j["system"] = c.system;
    j["generation"] = {{"dt", c.dt}, {"transient", c.transient}, {"seed", c.data_seed}};
    ordered_json prep;
    prep["measurement_scale"] = c.measurement_scale;
    prep["input_scale"] = c.input_scale;
    prep["subsample"] = c.subsample;
    prep["normalization"] = std::string(to_string(c.normalization));
    prep["noise_percent"] = c.noise_percent;
    prep["train_length"] = c.split.train_length;
    prep["macro_windows"] = c.split.macro_windows;
    prep["window_length"] = c.split.window_length;
    prep["spinup"] = c.split.spinup;
    prep["split_seed"] = c.split_seed;
    j["preparation"] = prep;
    j["params"] = to_json(c.params);
    if (c.search) {
        ordered_json s;
        ordered_json bounds = ordered_json::array();
        for (const auto& b : c.search->bounds)
            bounds.push_back({{"name", b.name}, {"lower", b.lower}, {"upper", b.upper}, {"log_scale", b.log_scale}});
        s["bounds"] = bounds;
        s["initial_samples"] = c.search->initial_samples;
        s["max_evaluations"] = c.search->max_evaluations;
        s["batch"] = c.search->batch;
        s["acquisition_candidates"] = c.search->acquisition_candidates;
        s["seed"] = c.search->seed;
        j["search"] = s;
    }
    if (c.localization) j["localization"] = {{"n_output", c.localization->n_output}, {"n_halo", c.localization->n_halo}};
    j["evaluation"] = {{"threshold", c.threshold},
                       {"test_ics", c.split.test_ics},
                       {"test_horizon", c.split.test_horizon},
                       {"horizon_lyapunov", c.horizon_lyapunov}};
    return j;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
    ExperimentConfig c;
    Section root(j, "");
    std::string preset;
    root.read("preset", preset);
    if (!preset.empty()) {
        c = find_preset(preset).config;
    } else {
        std::vector<std::string> missing;
        if (!root.has("system")) missing.push_back("system");
        if (!root.has("params")) missing.push_back("params");
        if (!missing.empty()) {
            std::string list;
            for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
            throw ConfigError("config", "missing required fields: " + list + " (or give a preset)");
        }
    }
    root.read("name", c.name);
    root.read("system", c.system);
    if (const json* g = root.child("generation")) {
        Section s(*g, "generation");
        s.read("dt", c.dt);
        s.read("transient", c.transient);
        s.read("seed", c.data_seed);
        s.finish();
    }
    if (const json* p = root.child("preparation")) {
        Section s(*p, "preparation");
        s.read("measurement_scale", c.measurement_scale);
        s.read("input_scale", c.input_scale);
        s.read("subsample", c.subsample);
        std::string norm = std::string(to_string(c.normalization));
        s.read("normalization", norm);
        try {
            c.normalization = parse_norm_scheme(norm);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("preparation.normalization", e.what());
        }
        s.read("noise_percent", c.noise_percent);
        s.read("train_length", c.split.train_length);
        s.read("macro_windows", c.split.macro_windows);
        s.read("window_length", c.split.window_length);
        s.read("spinup", c.split.spinup);
        s.read("split_seed", c.split_seed);
        s.finish();
    }
    if (const json* p = root.child("params")) {
        // Keys present in the file override the preset's values.
        ordered_json merged = to_json(c.params);
        if (!p->is_object()) throw ConfigError("params", "expected an object");
        for (const auto& [key, value] : p->items()) merged[key] = value;
        c.params = macro_params_from_json(merged, "params");
    }
    if (const json* p = root.child("search")) {
        if (!p->is_null()) {
            Section s(*p, "search");
            SearchSettings search;
            if (const json* b = s.child("bounds")) {
                if (!b->is_array()) throw ConfigError("search.bounds", "expected an array");
                search.bounds.clear();
                for (const auto& item : *b) {
                    Section bs(item, "search.bounds");
                    ParamBound bound;
                    bs.read("name", bound.name);
                    bs.read("lower", bound.lower);
                    bs.read("upper", bound.upper);
                    bs.read("log_scale", bound.log_scale);
                    bs.finish();
                    search.bounds.push_back(bound);
                }
            }
            s.read("initial_samples", search.initial_samples);
            s.read("max_evaluations", search.max_evaluations);
            s.read("batch", search.batch);
            s.read("acquisition_candidates", search.acquisition_candidates);
            s.read("seed", search.seed);
            s.finish();
            c.search = search;
        } else {
            c.search.reset();
        }
    }
    if (const json* p = root.child("localization")) {
        if (!p->is_null()) {
            Section s(*p, "localization");
            LocalizationSettings loc = c.localization.value_or(LocalizationSettings{});
            s.read("n_output", loc.n_output);
            s.read("n_halo", loc.n_halo);
            s.finish();
            c.localization = loc;
        } else {
            c.localization.reset();
        }
    }
    if (const json* p = root.child("evaluation")) {
        Section s(*p, "evaluation");
        s.read("threshold", c.threshold);
        s.read("test_ics", c.split.test_ics);
        s.read("test_horizon", c.split.test_horizon);
        s.read("horizon_lyapunov", c.horizon_lyapunov);
        s.finish();
    }
    root.finish();
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& config) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << to_json(config).dump(2) << '\n';
}

std::vector<Preset> parse_preset_table(const std::string& table, const std::string& csv_text) {
    std::vector<Preset> out;
    std::stringstream in(csv_text);
    std::string line;
    std::vector<std::string> header;
    Index row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_fields(line);
        if (header.empty()) {
            header = cells;
            continue;
        }
        ++row;
        const std::string where = "preset table " + table + " row " + std::to_string(row);
        if (cells.size() != header.size()) throw ConfigError(where, "wrong number of fields");
        Preset p;
        p.table = table;
        ExperimentConfig& c = p.config;
        std::optional<Index> n_output, n_halo;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const std::string& key = header[i];
            const std::string& v = cells[i];
            const std::string field = where + " " + key;
            if (key == "id") p.id = v;
            else if (key == "system") c.system = v;
            else if (key == "input_strength") c.params.input_strength = parse_number(v, field);
            else if (key == "leak") c.params.leak = parse_number(v, field);
            else if (key == "spectral_radius") c.params.spectral_radius = parse_number(v, field);
            else if (key == "tikhonov") c.params.tikhonov = parse_number(v, field);
            else if (key == "size") c.params.size = static_cast<Index>(std::llround(parse_number(v, field)));
            else if (key == "input_bias") c.params.input_bias = parse_number(v, field);
            else if (key == "readout") c.params.readout = parse_readout(v);
            else if (key == "sparsity") c.params.density = std::round((1.0 - parse_number(v, field)) * 1e12) / 1e12;
            else if (key == "train_length") c.split.train_length = static_cast<Index>(std::llround(parse_number(v, field)));
            else if (key == "normalization") c.normalization = parse_norm_scheme(v);
            else if (key == "dt") {
                const double step = parse_number(v, field);
                c.dt = kFineStep;
                c.subsample = static_cast<Index>(std::llround(step / kFineStep));
                c.split.train_length = static_cast<Index>(std::llround(kTrainingSpan / step));
            } else if (key == "n_output") n_output = static_cast<Index>(std::llround(parse_number(v, field)));
            else if (key == "n_halo") n_halo = static_cast<Index>(std::llround(parse_number(v, field)));
            else throw ConfigError(field, "unknown column");
        }
        if (p.id.empty()) throw ConfigError(where, "missing id");
        c.name = p.id;
        if (n_output || n_halo) c.localization = LocalizationSettings{n_output.value_or(1), n_halo.value_or(0)};
        const bool many_groups = c.localization && c.localization->n_output < builtin_system(c.system).dim;
        if (many_groups && !std::count(header.begin(), header.end(), "train_length"))
            c.split.train_length = kEnsembleTrainLength;
        // Very short training sets cannot afford the default washout.
        c.split.spinup = std::min(c.split.spinup, c.split.train_length / 10);
        c.validate();
        out.push_back(std::move(p));
    }
    return out;
}

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = [] {
        std::vector<Preset> v;
        for (const auto& [table, text] : detail::embedded_preset_files()) {
            auto rows = parse_preset_table(table, text);
            v.insert(v.end(), rows.begin(), rows.end());
        }
        return v;
    }();
    return all;
}

const Preset& find_preset(const std::string& id) {
    std::string key = id;
    if (key.rfind("fig_", 0) == 0) key = key.substr(4);
    for (const auto& p : presets())
        if (p.id == key) return p;
    std::string close;
    const std::string stem = key.substr(0, key.find('_'));
    for (const auto& p : presets())
        if (p.id.rfind(stem, 0) == 0) close += " " + p.id;
    throw ConfigError("preset", "unknown preset '" + id + "'" + (close.empty() ? "" : "; similar:" + close));
}

std::vector<Preset> presets_in_table(const std::string& table) {
    std::vector<Preset> out;
    for (const auto& p : presets())
        if (p.table == table) out.push_back(p);
    return out;
}

TimeSeries generate_series(const ExperimentConfig& c) {
    const SystemSpec sys = builtin_system(c.system);
    const double dt = c.dt > 0.0 ? c.dt : sys.default_dt;
    SplitSizes sizes = c.split;
    if (sizes.test_horizon == 0)
        sizes.test_horizon = static_cast<Index>(
            std::ceil(c.horizon_lyapunov * sys.tau_lambda() / (dt * static_cast<double>(c.subsample))));
    const Index samples = required_length(sizes);
    TimeSeries raw = integrate(sys, seeded_initial_state(sys, c.data_seed), dt, (samples - 1) * c.subsample + 1,
                               c.transient);
    if (!c.measurement_scale.empty())
        raw = rescale(raw, Eigen::Map<const Vector>(c.measurement_scale.data(), sys.dim));
    return raw;
}

PreparedData prepare_data(const ExperimentConfig& c) {
    c.validate();
    SystemSpec system = builtin_system(c.system);
    const double base_dt = c.dt > 0.0 ? c.dt : system.default_dt;
    const double dt = base_dt * static_cast<double>(c.subsample);
    const double tau_steps = system.tau_lambda() / dt;
    const Index horizon = c.split.test_horizon > 0 ? c.split.test_horizon
                                                   : static_cast<Index>(std::ceil(c.horizon_lyapunov * tau_steps));

    TimeSeries series = generate_series(c);
    if (!c.input_scale.empty())
        series = rescale(series, Eigen::Map<const Vector>(c.input_scale.data(), system.dim));
    series = subsample(series, c.subsample);

    SplitSizes sizes = c.split;
    sizes.test_horizon = horizon;
    DataSplit split = split_series(series, sizes, c.split_seed);

    // Statistics come from the training segment only.
    NormalizationStats norm = fit_normalization(split.train, c.normalization);
    split.train = norm.apply(split.train);
    split.validation = norm.apply(split.validation);
    if (split.test) {
        split.test = norm.apply(*split.test);
        for (auto& ic : split.test_ics) ic.state = split.test->column(ic.index);
    }
    Vector clim = split.train.stddev();
    if (c.noise_percent > 0.0) {
        split.train = add_noise(split.train, c.noise_percent, c.data_seed + 1000);
        split.validation = add_noise(split.validation, c.noise_percent, c.data_seed + 1001);
    }
    return PreparedData{std::move(system), dt, horizon, tau_steps, std::move(norm), std::move(clim), std::move(split)};
}

std::vector<double> mean_rmse_curve(const std::vector<ForecastEval>& evals) {
    Index longest = 0;
    for (const auto& e : evals) longest = std::max(longest, e.rmse_series.size());
    std::vector<double> sum(static_cast<std::size_t>(longest), 0.0);
    std::vector<Index> count(static_cast<std::size_t>(longest), 0);
    for (const auto& e : evals)
        for (Index k = 0; k < e.rmse_series.size(); ++k) {
            if (!std::isfinite(e.rmse_series[k])) continue;
            sum[static_cast<std::size_t>(k)] += e.rmse_series[k];
            ++count[static_cast<std::size_t>(k)];
        }
    std::vector<double> mean(sum.size());
    for (std::size_t k = 0; k < sum.size(); ++k)
        mean[k] = count[k] > 0 ? sum[k] / static_cast<double>(count[k]) : std::numeric_limits<double>::quiet_NaN();
    return mean;
}

ordered_json make_manifest(const ExperimentConfig& config, const ExperimentResult* result,
                           const std::vector<std::string>& outputs, const std::string& error) {
    ordered_json m;
    m["tool"] = "rcf";
    m["spec_version"] = kSpecVersion;
    m["model_format_version"] = kModelFormatVersion;
    m["config"] = to_json(result ? result->resolved : config);
    ordered_json seeds;
    seeds["data"] = config.data_seed;
    seeds["split"] = config.split_seed;
    seeds["reservoir"] = (result ? result->resolved : config).params.seed;
    if (config.search) seeds["search"] = config.search->seed;
    if (config.noise_percent > 0.0) seeds["noise"] = {config.data_seed + 1000, config.data_seed + 1001};
    if (result && !result->member_seeds.empty()) seeds["members"] = result->member_seeds;
    m["seeds"] = seeds;
    if (result) {
        m["derived"] = {{"tau_lambda_steps", result->tau_steps}, {"horizon_steps", result->horizon}};
        m["summary"] = json::parse(summary_json(result->summary));
        if (result->optimization) {
            m["optimization"] = {{"best_eval", result->optimization->best_eval},
                                 {"best_loss", result->optimization->best_loss},
                                 {"evaluations", result->optimization->trace.size()},
                                 {"divergence_penalty", result->optimization->divergence_penalty}};
        }
    }
    m["outputs"] = outputs;
    m["status"] = error.empty() ? "ok" : "error";
    if (!error.empty()) m["error"] = error;
    return m;
}

std::unique_ptr<BatchForecaster> TrainedModel::forecaster(unsigned workers) const {
    if (ensemble) return std::make_unique<LocalizedForecaster>(*ensemble, workers);
    if (single) return std::make_unique<ReservoirForecaster>(*single);
    throw std::logic_error("TrainedModel: no model");
}

std::string TrainedModel::file_name() const { return ensemble ? "ensemble.bin" : "model.bin"; }

void TrainedModel::save(const std::filesystem::path& path) const {
    if (ensemble) save_ensemble(path, *ensemble);
    else if (single) save_reservoir(path, *single);
    else throw std::logic_error("TrainedModel: no model");
}

TrainedModel train_model(const ExperimentConfig& config, const DataSplit& data, unsigned workers) {
    TrainedModel model;
    const Index dim = data.train.dim();
    if (config.localization) {
        const auto layout = make_layout(dim, config.localization->n_output, config.localization->n_halo);
        model.ensemble = train_localized(layout, config.params, data.train, config.split.spinup, workers);
    } else {
        model.single = Reservoir::build(config.params, dim);
        train_readout(*model.single, data.train, config.split.spinup);
    }
    return model;
}

TrainedModel load_model(const std::filesystem::path& path) {
    TrainedModel model;
    if (is_ensemble_file(path)) model.ensemble = load_ensemble(path);
    else model.single = load_reservoir(path);
    return model;
}

EvaluationOptions evaluation_options(const ExperimentConfig& config, const PreparedData& prepared, unsigned workers) {
    EvaluationOptions eval;
    eval.spinup = config.split.spinup;
    eval.horizon = prepared.horizon;
    eval.threshold = config.threshold;
    eval.tau_lambda = prepared.system.tau_lambda();
    eval.workers = workers;
    return eval;
}

std::vector<ForecastEval> evaluate_model(const TrainedModel& model, const ExperimentConfig& config,
                                         const PreparedData& prepared, unsigned workers) {
    const DataSplit& data = prepared.data;
    // Workers go to the batches of ICs, not to the ensemble members.
    const auto forecaster = model.forecaster(1);
    if (forecaster->dim() != prepared.system.dim)
        throw std::invalid_argument("evaluate_model: model predicts " + std::to_string(forecaster->dim()) +
                                    " variables, the data has " + std::to_string(prepared.system.dim));
    return evaluate_forecasts(*forecaster, *data.test, data.test_ics, prepared.climatology_std,
                              evaluation_options(config, prepared, workers));
}

std::vector<std::string> write_evaluation_outputs(const std::filesystem::path& dir, const PreparedData& prepared,
                                                  const std::vector<ForecastEval>& evals, const VptSummary& summary) {
    std::vector<Index> ic_index;
    for (const auto& ic : prepared.data.test_ics) ic_index.push_back(ic.index);
    write_evaluation_csv(dir / "evaluation.csv", ic_index, evals);
    {
        std::ofstream out(dir / "vpt_summary.json");
        out << summary_json(summary) << '\n';
    }
    {
        CsvWriter csv(dir / "vpt_histogram.csv", {"bin_lower", "bin_upper", "count"});
        for (std::size_t b = 0; b < summary.histogram.size(); ++b) {
            csv << summary.bin_edges[b] << summary.bin_edges[b + 1] << summary.histogram[b];
            csv.end_row();
        }
    }
    {
        CsvWriter csv(dir / "rmse_mean.csv", {"step", "lyapunov_time", "mean_nrmse"});
        const auto curve = mean_rmse_curve(evals);
        for (std::size_t k = 0; k < curve.size(); ++k) {
            csv << static_cast<Index>(k) << static_cast<double>(k) / prepared.tau_steps << curve[k];
            csv.end_row();
        }
    }
    return {"evaluation.csv", "vpt_summary.json", "vpt_histogram.csv", "rmse_mean.csv"};
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::optional<std::filesystem::path>& out_dir,
                                const RunOptions& options) {
    std::vector<std::string> outputs;
    ExperimentResult result;
    result.resolved = config;
    auto write_manifest = [&](const std::string& error, const ExperimentResult* r) {
        if (!out_dir) return;
        std::ofstream out(*out_dir / "manifest.json");
        out << make_manifest(config, r, outputs, error).dump(2) << '\n';
    };
    try {
        if (out_dir) {
            std::filesystem::create_directories(*out_dir);
            save_config(*out_dir / "config.json", config);
            outputs.push_back("config.json");
        }
        const PreparedData prepared = prepare_data(config);
        const DataSplit& data = prepared.data;
        result.tau_steps = prepared.tau_steps;
        result.horizon = prepared.horizon;

        if (config.search) {
            MacroSearchSpace space{config.params, config.search->bounds, config.search->initial_samples,
                                   config.search->max_evaluations, config.search->batch,
                                   config.search->acquisition_candidates};
            MacroLossOptions loss_opts;
            loss_opts.spinup = config.split.spinup;
            result.optimization = optimize_macro(space, data, default_factory(prepared.system.dim), loss_opts,
                                                 config.search->seed, options.workers);
            result.resolved.params = result.optimization->best;
            if (out_dir) {
                write_trace_csv(*out_dir / "trace.csv", space, *result.optimization);
                outputs.push_back("trace.csv");
            }
        }

        const TrainedModel model = train_model(result.resolved, data, options.workers);
        if (model.ensemble) result.member_seeds = model.ensemble->member_seeds();
        if (out_dir && options.save_model) {
            model.save(*out_dir / model.file_name());
            outputs.push_back(model.file_name());
        }
        result.evals = evaluate_model(model, result.resolved, prepared, options.workers);
        result.summary = vpt_distribution(result.evals);

        if (out_dir) {
            const auto written = write_evaluation_outputs(*out_dir, prepared, result.evals, result.summary);
            outputs.insert(outputs.end(), written.begin(), written.end());
            outputs.push_back("manifest.json");
            write_manifest({}, &result);
        }
    } catch (const std::exception& e) {
        outputs.push_back("manifest.json");
        write_manifest(e.what(), nullptr);
        throw;
    }
    return result;
}

} // namespace rcf
