#pragma once

#include "rcf/reservoir.hpp"
#include "rcf/training.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace rcf {

/// Names of the scalar MacroParams fields the optimizer can search.
const std::vector<std::string>& searchable_params();
double get_param(const MacroParams& p, const std::string& name);
void set_param(MacroParams& p, const std::string& name, double value);

struct ParamBound {
    std::string name;
    double lower = 0.0;
    double upper = 1.0;
    bool log_scale = false;

    bool operator==(const ParamBound&) const = default;
};

/// Box-constrained search over a subset of MacroParams. Parameters without a
/// bound keep their value from `base`.
struct MacroSearchSpace {
    MacroParams base;
    std::vector<ParamBound> bounds;
    Index initial_samples = 20;
    Index max_evaluations = 60;
    /// Points chosen per surrogate refit (kriging believer).
    Index batch = 1;
    Index acquisition_candidates = 2000;

    /// Default bounds: spectral_radius [0.01, 2], leak [0.1, 1], input_strength
    /// [1e-3, 10] (log), input_bias [0, 4], tikhonov [1e-10, 1] (log).
    static std::vector<ParamBound> default_bounds();
    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Maps a point of the unit cube to parameters.
    MacroParams decode(const Vector& unit) const;
};

struct TraceEntry {
    Index eval_id = 0;
    MacroParams params;
    double loss = 0.0;       ///< value seen by the surrogate (penalty applied)
    double raw_loss = 0.0;   ///< objective value, possibly non-finite
    bool diverged = false;
    double wall_ms = 0.0;
};

struct OptimizationResult {
    MacroParams best;
    double best_loss = 0.0;
    Index best_eval = 0;
    std::vector<TraceEntry> trace;
    /// Best-so-far loss after each evaluation; non-increasing.
    std::vector<double> incumbent;
    double divergence_penalty = 0.0;
};

/// Objective returning a loss; non-finite values or a reported divergence are
/// replaced by 1e6 x (median finite loss of the initial design).
using MacroObjective = std::function<MacroLossResult(const MacroParams&)>;

/// Efficient global optimization: Latin-hypercube initial design, GP
/// surrogate on log-loss, expected-improvement acquisition. Throws
/// std::runtime_error when no evaluation is finite.
OptimizationResult optimize_macro(const MacroSearchSpace& space, const MacroObjective& objective,
                                  std::uint64_t seed, unsigned workers = 1);

/// Optimizes the macro loss on `data` with reservoirs from `factory`.
OptimizationResult optimize_macro(const MacroSearchSpace& space, const DataSplit& data,
                                  const ReservoirFactory& factory, const MacroLossOptions& loss_opts,
                                  std::uint64_t seed, unsigned workers = 1);

/// CSV with eval_id, each searched parameter, loss, wall_ms.
void write_trace_csv(const std::filesystem::path& path, const MacroSearchSpace& space,
                     const OptimizationResult& result);

} // namespace rcf
