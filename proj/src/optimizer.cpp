#include "rcf/optimizer.hpp"

#include "rcf/csv.hpp"
#include "rcf/gaussian_process.hpp"
#include "rcf/parallel.hpp"
#include "rcf/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace rcf {

const std::vector<std::string>& searchable_params() {
    static const std::vector<std::string> names{"spectral_radius", "density",    "size",    "leak",
                                                "input_strength",  "input_bias", "tikhonov"};
    return names;
}

double get_param(const MacroParams& p, const std::string& name) {
    if (name == "spectral_radius") return p.spectral_radius;
    if (name == "density") return p.density;
    if (name == "size") return static_cast<double>(p.size);
    if (name == "leak") return p.leak;
    if (name == "input_strength") return p.input_strength;
    if (name == "input_bias") return p.input_bias;
    if (name == "tikhonov") return p.tikhonov;
    throw ConfigError("search.bounds", "unknown parameter '" + name + "'");
}

void set_param(MacroParams& p, const std::string& name, double value) {
    if (name == "spectral_radius") p.spectral_radius = value;
    else if (name == "density") p.density = value;
    else if (name == "size") p.size = static_cast<Index>(std::llround(value));
    else if (name == "leak") p.leak = value;
    else if (name == "input_strength") p.input_strength = value;
    else if (name == "input_bias") p.input_bias = value;
    else if (name == "tikhonov") p.tikhonov = value;
    else throw ConfigError("search.bounds", "unknown parameter '" + name + "'");
}

std::vector<ParamBound> MacroSearchSpace::default_bounds() {
    return {{"spectral_radius", 0.01, 2.0, false},
            {"leak", 0.1, 1.0, false},
            {"input_strength", 1e-3, 10.0, true},
            {"input_bias", 0.0, 4.0, false},
            {"tikhonov", 1e-10, 1.0, true}};
}

void MacroSearchSpace::validate() const {
    if (bounds.empty()) throw ConfigError("search.bounds", "at least one parameter must be searched");
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const ParamBound& b = bounds[i];
        get_param(base, b.name);
        for (std::size_t j = 0; j < i; ++j)
            if (bounds[j].name == b.name) throw ConfigError("search.bounds", "parameter '" + b.name + "' listed twice");
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper))
            throw ConfigError("search.bounds." + b.name, "bounds must be finite with lower < upper");
        if (b.log_scale && !(b.lower > 0.0))
            throw ConfigError("search.bounds." + b.name, "log-scale bounds must be positive");
    }
    if (initial_samples < 2) throw ConfigError("search.initial_samples", "must be >= 2");
    if (!(initial_samples < max_evaluations))
        throw ConfigError("search.max_evaluations", "must exceed initial_samples");
    if (batch < 1) throw ConfigError("search.batch", "must be >= 1");
    if (acquisition_candidates < 1) throw ConfigError("search.acquisition_candidates", "must be >= 1");
}

MacroParams MacroSearchSpace::decode(const Vector& unit) const {
    MacroParams p = base;
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        const ParamBound& b = bounds[i];
        const double u = std::clamp(unit[static_cast<Index>(i)], 0.0, 1.0);
        const double v = b.log_scale
                             ? std::pow(10.0, std::log10(b.lower) + u * (std::log10(b.upper) - std::log10(b.lower)))
                             : b.lower + u * (b.upper - b.lower);
        set_param(p, b.name, std::clamp(v, b.lower, b.upper));
    }
    return p;
}

namespace {

struct Evaluation {
    MacroLossResult result;
    double wall_ms = 0.0;
    bool diverged = false;
};

std::vector<Evaluation> evaluate_all(const MacroSearchSpace& space, const MacroObjective& objective,
                                     const std::vector<Vector>& points, unsigned workers) {
    std::vector<Evaluation> out(points.size());
    parallel_for(static_cast<Index>(points.size()), workers, [&](Index i) {
        const auto start = std::chrono::steady_clock::now();
        Evaluation& e = out[static_cast<std::size_t>(i)];
        try {
            e.result = objective(space.decode(points[static_cast<std::size_t>(i)]));
        } catch (const std::exception&) {
            // Unbuildable or unstable parameters are divergent points, not fatal.
            e.result.training_failed = true;
            e.result.loss = std::numeric_limits<double>::quiet_NaN();
        }
        e.diverged = !e.result.finite() || !std::isfinite(e.result.loss);
        e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    });
    return out;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

OptimizationResult optimize_macro(const MacroSearchSpace& space, const MacroObjective& objective,
                                  std::uint64_t seed, unsigned workers) {
    space.validate();
    const Index d = static_cast<Index>(space.bounds.size());
    Rng rng(derive_seed(seed, 1));

    std::vector<Vector> points;
    std::vector<Evaluation> evals;
    auto run = [&](const std::vector<Vector>& batch) {
        auto results = evaluate_all(space, objective, batch, workers);
        points.insert(points.end(), batch.begin(), batch.end());
        evals.insert(evals.end(), results.begin(), results.end());
    };

    const Matrix design = latin_hypercube(space.initial_samples, d, derive_seed(seed, 0));
    std::vector<Vector> initial;
    for (Index i = 0; i < design.cols(); ++i) initial.emplace_back(design.col(i));
    run(initial);

    auto finite_losses = [&](std::size_t upto) {
        std::vector<double> v;
        for (std::size_t i = 0; i < upto; ++i)
            if (!evals[i].diverged) v.push_back(evals[i].result.loss);
        return v;
    };
    // Penalty from the initial design; if that design never produced a finite
    // loss, from the first finite losses found afterwards.
    auto penalty = [&]() {
        auto v = finite_losses(static_cast<std::size_t>(space.initial_samples));
        if (v.empty()) v = finite_losses(evals.size());
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        return 1e6 * std::max(median_of(v), std::numeric_limits<double>::min());
    };
    auto surrogate_loss = [&](std::size_t i, double pen) { return evals[i].diverged ? pen : evals[i].result.loss; };

    while (static_cast<Index>(points.size()) < space.max_evaluations) {
        const Index q = std::min<Index>(space.batch, space.max_evaluations - static_cast<Index>(points.size()));
        const double pen = penalty();
        std::vector<Vector> batch;
        if (!std::isfinite(pen)) {
            // Nothing finite yet: keep exploring uniformly.
            for (Index k = 0; k < q; ++k) {
                Vector u(d);
                for (Index j = 0; j < d; ++j) u[j] = rng.uniform();
                batch.push_back(u);
            }
            run(batch);
            continue;
        }

        const std::size_t n = points.size();
        const double offset = 1e-12 * pen / 1e6;
        Matrix x(d, static_cast<Index>(n));
        Vector y(static_cast<Index>(n));
        Index best_i = 0;
        double worst_finite = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            x.col(static_cast<Index>(i)) = points[i];
            y[static_cast<Index>(i)] = std::log(surrogate_loss(i, pen) + offset);
            if (y[static_cast<Index>(i)] < y[best_i]) best_i = static_cast<Index>(i);
            if (!evals[i].diverged) worst_finite = std::max(worst_finite, y[static_cast<Index>(i)]);
        }
        // The penalty sits ~14 log units above typical losses; such a cliff
        // wrecks a smooth kernel's length scales. The surrogate sees diverged
        // points just above the worst finite loss, which still repels EI.
        for (std::size_t i = 0; i < n; ++i)
            if (evals[i].diverged) y[static_cast<Index>(i)] = std::min(y[static_cast<Index>(i)], worst_finite + 1.0);
        GaussianProcess gp;
        gp.fit(x, y);
        const GaussianProcess::Hyper hyper = gp.hyper();
        const double best_y = y[best_i];

        for (Index k = 0; k < q; ++k) {
            auto neg_ei = [&](const Vector& u) {
                if ((u.array() < 0.0).any() || (u.array() > 1.0).any()) return 1.0;
                double m = 0.0, s = 0.0;
                gp.predict(u, m, s);
                return -expected_improvement(m, s, best_y);
            };
            // Global random candidates plus a local cloud around the incumbent.
            Vector best_u = x.col(best_i);
            double best_val = neg_ei(best_u);
            for (Index c = 0; c < space.acquisition_candidates; ++c) {
                Vector u(d);
                if (c % 4 == 3) {
                    for (Index j = 0; j < d; ++j)
                        u[j] = std::clamp(x(j, best_i) + 0.05 * rng.normal(), 0.0, 1.0);
                } else {
                    for (Index j = 0; j < d; ++j) u[j] = rng.uniform();
                }
                const double v = neg_ei(u);
                if (v < best_val) {
                    best_val = v;
                    best_u = u;
                }
            }
            const NelderMeadResult polished = nelder_mead(neg_ei, best_u, 0.02, 100 * d, 1e-12);
            if (polished.value < best_val) {
                best_val = polished.value;
                best_u = polished.x;
            }
            // An exhausted acquisition or a repeated point wastes an evaluation.
            double nearest = std::numeric_limits<double>::infinity();
            for (Index i = 0; i < x.cols(); ++i) nearest = std::min(nearest, (x.col(i) - best_u).norm());
            if (!(best_val < 0.0) || nearest < 1e-9) {
                for (Index j = 0; j < d; ++j) best_u[j] = rng.uniform();
            }
            batch.push_back(best_u);

            if (k + 1 < q) {
                // Kriging believer: pretend the posterior mean was observed.
                double m = 0.0, s = 0.0;
                gp.predict(best_u, m, s);
                x.conservativeResize(Eigen::NoChange, x.cols() + 1);
                x.col(x.cols() - 1) = best_u;
                y.conservativeResize(y.size() + 1);
                y[y.size() - 1] = m;
                gp.condition(x, y, hyper);
            }
        }
        run(batch);
    }

    OptimizationResult out;
    out.divergence_penalty = penalty();
    if (!std::isfinite(out.divergence_penalty))
        throw std::runtime_error("optimize_macro: every evaluation diverged; use more data or wider bounds");
    out.best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < points.size(); ++i) {
        TraceEntry t;
        t.eval_id = static_cast<Index>(i);
        t.params = space.decode(points[i]);
        t.raw_loss = evals[i].result.loss;
        t.diverged = evals[i].diverged;
        t.loss = surrogate_loss(i, out.divergence_penalty);
        t.wall_ms = evals[i].wall_ms;
        if (t.loss < out.best_loss) {
            out.best_loss = t.loss;
            out.best = t.params;
            out.best_eval = t.eval_id;
        }
        out.incumbent.push_back(out.best_loss);
        out.trace.push_back(std::move(t));
    }
    return out;
}

OptimizationResult optimize_macro(const MacroSearchSpace& space, const DataSplit& data,
                                  const ReservoirFactory& factory, const MacroLossOptions& loss_opts,
                                  std::uint64_t seed, unsigned workers) {
    return optimize_macro(
        space, [&](const MacroParams& p) { return evaluate_macro_loss(p, factory, data, loss_opts); }, seed,
        workers);
}

void write_trace_csv(const std::filesystem::path& path, const MacroSearchSpace& space,
                     const OptimizationResult& result) {
    std::vector<std::string> header{"eval_id"};
    for (const auto& b : space.bounds) header.push_back(b.name);
    header.insert(header.end(), {"loss", "wall_ms"});
    CsvWriter csv(path, header);
    for (const auto& t : result.trace) {
        csv << t.eval_id;
        for (const auto& b : space.bounds) csv << get_param(t.params, b.name);
        csv << t.loss << t.wall_ms;
        csv.end_row();
    }
}

} // namespace rcf
