#include "rcf/experiment.hpp"
#include "rcf/serialization.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rcf;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config_json() {
    return nlohmann::json::parse(R"({
      "name": "unit_small",
      "system": "l63",
      "preparation": {"train_length": 3000, "macro_windows": 2, "window_length": 100},
      "params": {"size": 120, "spectral_radius": 0.8, "input_strength": 0.084, "leak": 0.6,
                 "input_bias": 1.6, "tikhonov": 1e-7, "seed": 1},
      "evaluation": {"test_ics": 4}
    })");
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("rcf_unit_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST(Config, JsonRoundTrip) {
    ExperimentConfig c = config_from_json(small_config_json());
    c.localization = LocalizationSettings{};
    c.system = "l96_10d";
    c.noise_percent = 2.0;
    c.normalization = NormScheme::joint;
    EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(Config, EmptyConfigNamesTheMissingFields) {
    try {
        config_from_json(nlohmann::json::object());
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("missing required fields: system, params"), std::string::npos);
    }
}

TEST(Config, UnknownKeysAreRejected) {
    nlohmann::json j = small_config_json();
    j["params"]["spectral_raduis"] = 0.5;
    try {
        config_from_json(j);
        FAIL() << "expected a ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("spectral_raduis"), std::string::npos);
    }
}

TEST(Config, InvalidValuesNameTheField) {
    nlohmann::json j = small_config_json();
    j["params"]["leak"] = 1.5;
    EXPECT_THROW(config_from_json(j), std::exception);
}

TEST(Presets, LoadAndResolve) {
    ASSERT_FALSE(presets().empty());
    const Preset& best = find_preset("best_l63");
    EXPECT_EQ(best.config.system, "l63");
    EXPECT_NEAR(best.config.params.density, 0.02, 1e-12);
    EXPECT_EQ(best.config.params.size, 2000);
    EXPECT_EQ(&find_preset("fig_best_l63"), &best);
    EXPECT_THROW(find_preset("best_lorenz"), ConfigError);
    for (const auto& p : presets_in_table("localization_halo")) EXPECT_TRUE(p.config.localization.has_value()) << p.id;
}

TEST(Presets, ConfigOverridesPreset) {
    nlohmann::json j = {{"preset", "best_l63"}, {"params", {{"size", 300}}}};
    const ExperimentConfig c = config_from_json(j);
    EXPECT_EQ(c.params.size, 300);
    EXPECT_DOUBLE_EQ(c.params.leak, 0.6);
}

TEST(Serialization, ReservoirRoundTripIsBitExact) {
    MacroParams p;
    p.size = 80;
    p.readout = ReadoutKind::biased;
    p.seed = 9;
    Reservoir res = Reservoir::build(p, 3);
    res.set_readout_map(Matrix::Random(3, res.feature_dim()));
    std::stringstream buffer;
    write_reservoir(buffer, res);
    const std::string first = buffer.str();
    const Reservoir back = read_reservoir(buffer);
    EXPECT_EQ(back.params(), res.params());
    EXPECT_TRUE(Matrix(back.adjacency()) == Matrix(res.adjacency()));
    EXPECT_EQ(back.input_map(), res.input_map());
    EXPECT_EQ(back.readout_map(), res.readout_map());
    std::stringstream again;
    write_reservoir(again, back);
    EXPECT_EQ(again.str(), first);
}

TEST(Serialization, EnsembleRoundTripIsBitExact) {
    const SystemSpec l96 = builtin_system("l96_10d");
    const TimeSeries train = integrate(l96, seeded_initial_state(l96, 1), 0.01, 1500, 200);
    MacroParams p;
    p.size = 60;
    p.density = 0.05;
    p.seed = 4;
    const LocalizedEnsemble ensemble = train_localized(make_layout(10, 2, 1), p, train, 50);
    const fs::path dir = scratch_dir("ensemble");
    save_ensemble(dir / "ensemble.bin", ensemble);
    EXPECT_TRUE(is_ensemble_file(dir / "ensemble.bin"));
    const LocalizedEnsemble back = load_ensemble(dir / "ensemble.bin");
    EXPECT_EQ(back.layout, ensemble.layout);
    EXPECT_EQ(back.climatology_std, ensemble.climatology_std);
    EXPECT_EQ(back.member_seeds(), ensemble.member_seeds());
    for (std::size_t g = 0; g < ensemble.members.size(); ++g)
        EXPECT_EQ(back.members[g].readout_map(), ensemble.members[g].readout_map());
    save_ensemble(dir / "again.bin", back);
    EXPECT_EQ(read_file(dir / "again.bin"), read_file(dir / "ensemble.bin"));
}

TEST(Serialization, CorruptFileIsRejected) {
    const fs::path dir = scratch_dir("corrupt");
    std::ofstream(dir / "bad.bin") << "not a model";
    EXPECT_THROW(load_reservoir(dir / "bad.bin"), std::exception);
}

TEST(Experiment, RunIsReproducible) {
    const ExperimentConfig c = config_from_json(small_config_json());
    const fs::path a = scratch_dir("run_a"), b = scratch_dir("run_b");
    const ExperimentResult ra = run_experiment(c, a);
    const ExperimentResult rb = run_experiment(c, b);
    EXPECT_EQ(read_file(a / "model.bin"), read_file(b / "model.bin"));
    EXPECT_EQ(read_file(a / "evaluation.csv"), read_file(b / "evaluation.csv"));
    EXPECT_EQ(read_file(a / "manifest.json"), read_file(b / "manifest.json"));
    ASSERT_EQ(ra.evals.size(), 4u);
    EXPECT_EQ(ra.summary.mean, rb.summary.mean);
    EXPECT_GT(ra.summary.mean, 0.0);
}

TEST(Experiment, ManifestRecordsSeedsAndOutputs) {
    const ExperimentConfig c = config_from_json(small_config_json());
    const fs::path dir = scratch_dir("manifest");
    run_experiment(c, dir);
    const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["seeds"]["reservoir"], 1);
    EXPECT_EQ(m["seeds"]["data"], c.data_seed);
    EXPECT_TRUE(m.contains("summary"));
    for (const auto& name : m["outputs"]) EXPECT_TRUE(fs::exists(dir / name.get<std::string>())) << name;
}

TEST(Experiment, SavedModelEvaluatesLikeTheTrainedOne) {
    const ExperimentConfig c = config_from_json(small_config_json());
    const PreparedData prepared = prepare_data(c);
    const TrainedModel model = train_model(c, prepared.data);
    const fs::path dir = scratch_dir("saved");
    model.save(dir / model.file_name());
    const TrainedModel loaded = load_model(dir / "model.bin");
    const auto a = evaluate_model(model, c, prepared);
    const auto b = evaluate_model(loaded, c, prepared);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].vpt_steps, b[i].vpt_steps);
}
