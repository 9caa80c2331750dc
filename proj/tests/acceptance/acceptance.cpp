// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Usage: rcf_acceptance [criterion numbers...]; with no arguments all run.

#include "reference_esn.hpp"

#include "rcf/dataops.hpp"
#include "rcf/dynamics.hpp"
#include "rcf/experiment.hpp"
#include "rcf/lyapunov.hpp"
#include "rcf/metrics.hpp"
#include "rcf/reservoir.hpp"
#include "rcf/training.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace rcf;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

std::string format_list(const std::vector<double>& v) {
    std::ostringstream s;
    s.precision(4);
    s << '[';
    for (std::size_t i = 0; i < v.size(); ++i) s << (i ? ", " : "") << v[i];
    s << ']';
    return s.str();
}

struct RunSummary {
    VptSummary summary;
    double seconds = 0.0;
};

RunSummary run_preset(const std::string& id, const std::function<void(ExperimentConfig&)>& adjust = {}) {
    ExperimentConfig c = find_preset(id).config;
    if (adjust) adjust(c);
    const auto start = Clock::now();
    const ExperimentResult r = run_experiment(c, std::nullopt);
    return {r.summary, seconds_since(start)};
}

// Lyapunov spectra of the generating systems.
void criterion_1(Outcome& o) {
    for (const std::string name : {"l63", "rossler", "colpitts", "l96_5d", "l96_10d", "cl63"}) {
        const SystemSpec sys = builtin_system(name);
        const auto start = Clock::now();
        const auto le = les_ode(sys, 0.01, 200000);
        const double secs = seconds_since(start);
        o.detail << ' ' << name << '=' << format_list(le) << " (" << static_cast<int>(secs) << "s)";
        const auto& ref = sys.reference_les;
        if (le.size() != ref.size()) {
            o.check(false, name + " spectrum size");
            continue;
        }
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const bool ok = ref[i] == 0.0 ? std::abs(le[i]) <= 0.02 : std::abs(le[i] - ref[i]) <= 0.1 * std::abs(ref[i]);
            o.check(ok, name + " exponent " + std::to_string(i + 1));
        }
        o.check(secs <= 120.0, name + " runtime");
    }
}

// Single-reservoir skill of the best presets, checked against the plain
// reference implementation trained and evaluated on the same data.
void criterion_2(Outcome& o) {
    const std::vector<std::pair<std::string, double>> cases = {
        {"best_l63", 4.0}, {"best_l96_5d", 4.0}, {"best_l96_10d", 2.0}, {"best_cl63", 2.0}};
    for (const auto& [id, threshold] : cases) {
        const ExperimentConfig c = find_preset(id).config;
        const PreparedData prepared = prepare_data(c);
        const TrainedModel model = train_model(c, prepared.data);
        const auto evals = evaluate_model(model, c, prepared);
        const double library = vpt_distribution(evals).mean;

        acceptance::ReferenceEsn ref;
        ref.adjacency = model.single->adjacency();
        ref.input_map = model.single->input_map();
        ref.leak = c.params.leak;
        ref.input_bias = c.params.input_bias;
        ref.tikhonov = c.params.tikhonov;
        ref.train(prepared.data.train, c.split.spinup);
        std::vector<Index> indices;
        for (const auto& ic : prepared.data.test_ics) indices.push_back(ic.index);
        const auto ref_vpt = ref.vpt(*prepared.data.test, indices, c.split.spinup, prepared.horizon,
                                     prepared.climatology_std, c.threshold, prepared.system.tau_lambda());
        double oracle = 0.0;
        for (double v : ref_vpt) oracle += v;
        oracle /= static_cast<double>(ref_vpt.size());

        o.detail << ' ' << id << " library=" << library << " reference=" << oracle << " (" << evals.size()
                 << " ICs, need > " << threshold << ')';
        o.check(evals.size() >= 200, id + " IC count");
        o.check(library > threshold, id + " library mean VPT");
        o.check(oracle > threshold, id + " reference mean VPT");
    }
}

// The trained L63 reservoir reproduces the leading exponent of the system.
void criterion_3(Outcome& o) {
    const ExperimentConfig c = find_preset("best_l63").config;
    const PreparedData prepared = prepare_data(c);
    TrainedModel model = train_model(c, prepared.data);
    Reservoir& res = *model.single;
    res.spinup(prepared.data.train, prepared.data.train.len());
    const auto le = les_autonomous_rc(res, prepared.dt, 20000, 3);
    o.detail << " reservoir spectrum " << format_list(le);
    o.check(std::abs(le[0] - 0.9) <= 0.2 * 0.9, "leading exponent within 20% of 0.9");
}

// Input bias ablation.
void criterion_4(Outcome& o) {
    for (const std::string system : {"colpitts", "rossler", "l96_5d", "l96_10d", "cl63"}) {
        const double with_bias = run_preset("input_bias_" + system + "_bias").summary.mean;
        const double without = run_preset("input_bias_" + system + "_nobias").summary.mean;
        o.detail << ' ' << system << ' ' << with_bias << '/' << without;
        o.check(with_bias >= 2.0 * without, system + " bias at least doubles the mean VPT");
    }
}

// Readout equivalence on L63.
void criterion_5(Outcome& o) {
    std::vector<double> means;
    for (const auto kind : {ReadoutKind::linear, ReadoutKind::biased, ReadoutKind::quadratic}) {
        means.push_back(run_preset("best_l63", [kind](ExperimentConfig& c) { c.params.readout = kind; }).summary.mean);
        o.detail << ' ' << to_string(kind) << '=' << means.back();
    }
    const auto [lo, hi] = std::minmax_element(means.begin(), means.end());
    o.check(*hi - *lo <= 0.25 * *lo, "readout means within 25%");
}

// Normalization scheme 2 against scheme 1.
void criterion_6(Outcome& o) {
    int wins = 0;
    for (const std::string system : {"l63", "rossler", "colpitts", "l96_5d", "l96_10d", "cl63"}) {
        const double s1 = run_preset("normalization_" + system + "_scheme1").summary.mean;
        const double s2 = run_preset("normalization_" + system + "_scheme2").summary.mean;
        o.detail << ' ' << system << ' ' << s2 << '/' << s1;
        if (s2 >= 2.0 * s1) ++wins;
    }
    o.detail << " (" << wins << "/6)";
    o.check(wins >= 4, "scheme 2 doubles scheme 1 on at least 4 systems");
}

// Localized ensemble against the large baseline ensemble and the halo-free layout.
void criterion_7(Outcome& o) {
    const RunSummary local = run_preset("showdown_local");
    const RunSummary baseline = run_preset("showdown_baseline");
    const RunSummary no_halo = run_preset("localization_o2_h0");
    o.detail << " local median=" << local.summary.median << " (" << static_cast<int>(local.seconds)
             << "s) baseline median=" << baseline.summary.median << " halo-0 median=" << no_halo.summary.median;
    o.check(local.summary.count >= 200, "at least 200 ICs");
    o.check(local.summary.median >= 2.0 * baseline.summary.median, "local ensemble doubles the baseline");
    o.check(no_halo.summary.median < 0.5, "halo 0 has no skill");
    o.check(local.seconds <= 1800.0, "local ensemble runtime");
}

// Single reservoirs on the 40-dimensional system need a minimum size.
void criterion_8(Outcome& o) {
    for (const int n : {1200, 2400, 3600, 6000}) {
        const double median = run_preset("single_rc_n" + std::to_string(n)).summary.median;
        o.detail << " N=" << n << ':' << median;
        if (n <= 3600) o.check(median < 1.0, "N = " + std::to_string(n) + " below one Lyapunov time");
        else o.check(median > 2.0, "N = 6000 above two Lyapunov times");
    }
}

// Stability map.
void criterion_9(Outcome& o) {
    StabilitySettings trivial;
    trivial.leak = 1.0;
    const std::vector<double> radii_check = {0.3, 0.9, 1.4};
    const StabilityMap zero = stability_map(trivial, radii_check, {0.0}, 2);
    double worst = 0.0;
    for (std::size_t i = 0; i < radii_check.size(); ++i)
        worst = std::max(worst, std::abs(zero.values(static_cast<Index>(i), 0) - radii_check[i]));
    o.detail << " |value - rho| at u = 0: " << worst;
    o.check(worst <= 1e-10, "map equals the spectral radius at u = 0");

    std::vector<double> radii, mags;
    for (int i = 0; i <= 40; ++i) radii.push_back(0.05 * i);
    for (int i = 90; i < 100; ++i) radii.push_back(0.01 * i);
    for (int j = 0; j <= 50; ++j) mags.push_back(0.2 * j);
    const StabilityMap map = stability_map(StabilitySettings{}, radii, mags, 2);
    int stable_above = 0, unstable_below = 0;
    for (std::size_t i = 0; i < radii.size(); ++i)
        for (std::size_t j = 0; j < mags.size(); ++j) {
            if (map.flagged[i][j]) continue;
            const double v = map.values(static_cast<Index>(i), static_cast<Index>(j));
            if (radii[i] > 1.0 && v < 1.0) ++stable_above;
            if (radii[i] < 1.0 && v > 1.0) ++unstable_below;
        }
    o.detail << " stable cells with rho > 1: " << stable_above << ", unstable with rho < 1: " << unstable_below;
    o.check(stable_above > 0, "stable cells above rho = 1");
    o.check(unstable_below > 0, "unstable cells below rho = 1");
}

// Condensed oracle suite.
void criterion_10(Outcome& o) {
    const auto start = Clock::now();

    {  // Ridge against the explicit normal-equations inverse.
        const Matrix x = Matrix::Random(150, 800), y = Matrix::Random(3, 800);
        const double beta = 1e-2;
        const Matrix g = x * x.transpose() + beta * Matrix::Identity(150, 150);
        const Matrix brute = (y * x.transpose()) * g.fullPivLu().inverse();
        const double err = (ridge_solve({x, y, beta}) - brute).cwiseAbs().maxCoeff();
        o.detail << " ridge=" << err;
        o.check(err < 1e-8, "ridge solve");
    }

    MacroParams p;
    p.size = 200;
    p.spectral_radius = 0.8;
    p.input_strength = 0.5;
    p.input_bias = 0.3;
    const SystemSpec l63 = builtin_system("l63");
    const TimeSeries drive = integrate(l63, seeded_initial_state(l63, 2), 0.01, 500, 100);

    {  // Mapping form against an Euler step of the differential form.
        const double gamma = 4.0, dt = 0.1;
        p.leak = gamma * dt;
        Reservoir res = Reservoir::build(p, 3);
        Vector r = Vector::Zero(p.size);
        bool exact = true;
        for (Index t = 0; t < drive.len(); ++t) {
            Vector pre = res.adjacency() * r;
            pre.noalias() += res.input_map() * drive.column(t);
            pre.array() += p.input_bias;
            r = r + (gamma * dt) * (activation(pre.array()).matrix() - r);
            exact = exact && res.drive_step(drive.column(t)) == r;
        }
        o.check(exact, "map equals Euler form");
    }

    {  // Driven Jacobian against central differences.
        p.leak = 0.7;
        const Reservoir res = Reservoir::build(p, 3);
        const Vector r = 0.5 * Vector::Random(p.size);
        const Vector u = drive.column(10);
        const Matrix j = driven_jacobian(res, r, u);
        Matrix fd(p.size, p.size);
        for (Index c = 0; c < p.size; ++c) {
            Vector rp = r, rm = r;
            rp[c] += 1e-6;
            rm[c] -= 1e-6;
            fd.col(c) = (leaky_tanh_update(res.adjacency(), res.input_map(), rp, u, p.leak, p.input_bias) -
                         leaky_tanh_update(res.adjacency(), res.input_map(), rm, u, p.leak, p.input_bias)) /
                        2e-6;
        }
        const double rel = (fd - j).norm() / j.norm();
        o.detail << " jacobian=" << rel;
        o.check(rel < 1e-5, "driven Jacobian");
    }

    {  // Spectral radius contract.
        double worst = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            p.seed = seed;
            const Reservoir res = Reservoir::build(p, 3);
            Eigen::EigenSolver<Matrix> es(Matrix(res.adjacency()), false);
            worst = std::max(worst, std::abs(es.eigenvalues().cwiseAbs().maxCoeff() - p.spectral_radius));
        }
        o.detail << " spectral=" << worst;
        o.check(worst < 1e-6, "spectral radius contract");
    }

    {  // Normalization round trips.
        double worst = 0.0;
        for (const auto scheme : {NormScheme::per_variable, NormScheme::joint}) {
            const NormalizationStats stats = fit_normalization(drive, scheme);
            const Matrix back = stats.invert(stats.apply(drive.values()));
            worst = std::max(worst, ((back - drive.values()).array().abs() /
                                     drive.values().array().abs().max(1e-300)).maxCoeff());
        }
        o.detail << " normalization=" << worst;
        o.check(worst < 1e-12, "normalization round trip");
    }

    {  // VPT of an exponentially growing error.
        const double lambda = 0.9, dt = 0.01;
        Vector rmse(3000);
        for (Index k = 0; k < rmse.size(); ++k) rmse[k] = 0.01 * std::exp(lambda * dt * static_cast<double>(k));
        const ForecastEval e = vpt(rmse, 0.3, dt, 1.0 / lambda);
        const double expected_steps = std::log(30.0) / lambda / dt;
        o.check(std::abs(static_cast<double>(e.vpt_steps) - expected_steps) <= 1.0, "VPT crossing");
    }

    const double secs = seconds_since(start);
    o.detail << " (" << secs << "s)";
    o.check(secs <= 300.0, "suite runtime");
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, void (*)(Outcome&)>> criteria = {
        {"Lyapunov spectra", criterion_1},         {"single reservoir skill", criterion_2},
        {"attractor reconstruction", criterion_3}, {"input bias ablation", criterion_4},
        {"readout equivalence", criterion_5},      {"normalization", criterion_6},
        {"localization", criterion_7},             {"single reservoir scaling", criterion_8},
        {"stability map", criterion_9},            {"oracle suite", criterion_10},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int number = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(number)) continue;
        Outcome o;
        const auto start = Clock::now();
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failures;
        std::cout << "CRITERION " << number << ' ' << (o.pass ? "PASS" : "FAIL") << ": " << criteria[i].first << " ("
                  << static_cast<int>(seconds_since(start)) << "s)" << o.detail.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
