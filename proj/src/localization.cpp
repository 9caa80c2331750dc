#include "rcf/localization.hpp"

#include "rcf/parallel.hpp"
#include "rcf/training.hpp"

#include <stdexcept>
#include <string>

namespace rcf {

Matrix LocalizationLayout::gather(Index g, const Eigen::Ref<const Matrix>& global) const {
    const auto& idx = input_indices.at(static_cast<std::size_t>(g));
    Matrix out(static_cast<Index>(idx.size()), global.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = global.row(idx[i]);
    return out;
}

void LocalizationLayout::scatter(Index g, const Eigen::Ref<const Matrix>& local, Matrix& global) const {
    const auto& idx = output_indices.at(static_cast<std::size_t>(g));
    for (std::size_t i = 0; i < idx.size(); ++i) global.row(idx[i]) = local.row(static_cast<Index>(i));
}

LocalizationLayout make_layout(Index system_dim, Index n_output, Index n_halo) {
    if (system_dim < 1 || n_output < 1 || n_halo < 0)
        throw std::invalid_argument("make_layout: need D >= 1, n_output >= 1 and n_halo >= 0");
    if (system_dim % n_output != 0)
        throw std::invalid_argument("make_layout: D = " + std::to_string(system_dim) +
                                    " is not divisible by n_output = " + std::to_string(n_output));
    if (2 * n_halo + n_output > system_dim)
        throw std::invalid_argument("make_layout: 2 * n_halo + n_output = " + std::to_string(2 * n_halo + n_output) +
                                    " exceeds D = " + std::to_string(system_dim));
    LocalizationLayout layout;
    layout.system_dim = system_dim;
    layout.group_output = n_output;
    layout.halo = n_halo;
    const Index groups = system_dim / n_output;
    for (Index g = 0; g < groups; ++g) {
        std::vector<Index> out, in;
        for (Index i = 0; i < n_output; ++i) out.push_back(g * n_output + i);
        for (Index i = -n_halo; i < n_output + n_halo; ++i)
            in.push_back(((g * n_output + i) % system_dim + system_dim) % system_dim);
        layout.output_indices.push_back(std::move(out));
        layout.input_indices.push_back(std::move(in));
    }
    return layout;
}

std::vector<std::uint64_t> LocalizedEnsemble::member_seeds() const {
    std::vector<std::uint64_t> seeds;
    for (const auto& m : members) seeds.push_back(m.params().seed);
    return seeds;
}

std::vector<std::uint64_t> derive_member_seeds(const LocalizationLayout& layout, const MacroParams& params,
                                               const std::optional<std::vector<std::uint64_t>>& member_seeds) {
    const auto groups = static_cast<std::size_t>(layout.num_groups());
    if (member_seeds) {
        if (member_seeds->size() != groups)
            throw std::invalid_argument("train_localized: expected " + std::to_string(groups) + " member seeds, got " +
                                        std::to_string(member_seeds->size()));
        return *member_seeds;
    }
    std::vector<std::uint64_t> seeds(groups);
    for (std::size_t g = 0; g < groups; ++g) seeds[g] = params.seed + g;
    return seeds;
}

LocalizedEnsemble train_localized(const LocalizationLayout& layout, const MacroParams& params,
                                  const TimeSeries& train, Index spinup_steps, unsigned workers,
                                  const std::optional<std::vector<std::uint64_t>>& member_seeds) {
    if (train.dim() != layout.system_dim)
        throw std::invalid_argument("train_localized: training data has dimension " + std::to_string(train.dim()) +
                                    ", layout expects " + std::to_string(layout.system_dim));
    params.validate();
    const auto seeds = derive_member_seeds(layout, params, member_seeds);
    const Index groups = layout.num_groups();

    std::vector<std::optional<Reservoir>> trained(static_cast<std::size_t>(groups));
    parallel_for(groups, workers, [&](Index g) {
        const auto gi = static_cast<std::size_t>(g);
        MacroParams p = params;
        p.seed = seeds[gi];
        Reservoir res = Reservoir::build(p, layout.input_dim(), layout.group_output);
        train_readout(res, train.select_rows(layout.input_indices[gi]), train.select_rows(layout.output_indices[gi]),
                      spinup_steps);
        trained[gi] = std::move(res);
    });

    LocalizedEnsemble ensemble;
    ensemble.layout = layout;
    ensemble.climatology_std = train.stddev();
    for (auto& r : trained) ensemble.members.push_back(std::move(*r));
    return ensemble;
}

LocalizedForecaster::LocalizedForecaster(const LocalizedEnsemble& ensemble, unsigned workers)
    : ensemble_(ensemble), workers_(workers) {
    if (static_cast<Index>(ensemble.members.size()) != ensemble.layout.num_groups())
        throw std::invalid_argument("LocalizedForecaster: one member per group required");
}

void LocalizedForecaster::reset(Index batch) {
    batches_.clear();
    for (const auto& m : ensemble_.members) batches_.push_back(make_batch(m, batch));
}

void LocalizedForecaster::drive(const Matrix& inputs) {
    const auto& layout = ensemble_.layout;
    parallel_for(layout.num_groups(), workers_, [&](Index g) {
        const auto gi = static_cast<std::size_t>(g);
        drive_batch(ensemble_.members[gi], batches_[gi], layout.gather(g, inputs));
    });
}

Matrix LocalizedForecaster::predict() const {
    const auto& layout = ensemble_.layout;
    const Index b = batches_.empty() ? 0 : batches_.front().states.cols();
    Matrix out(layout.system_dim, b);
    parallel_for(layout.num_groups(), workers_, [&](Index g) {
        const auto gi = static_cast<std::size_t>(g);
        // Groups write disjoint rows, so no synchronization is needed.
        layout.scatter(g, predict_batch(ensemble_.members[gi], batches_[gi]), out);
    });
    return out;
}

std::unique_ptr<BatchForecaster> LocalizedForecaster::clone() const {
    return std::make_unique<LocalizedForecaster>(ensemble_, workers_);
}

LocalizedForecast forecast_localized(const LocalizedEnsemble& ensemble, const TimeSeries& spinup, Index horizon,
                                     unsigned workers) {
    if (spinup.dim() != ensemble.layout.system_dim)
        throw std::invalid_argument("forecast_localized: spinup dimension does not match the layout");
    if (horizon < 1) throw std::invalid_argument("forecast_localized: horizon must be >= 1");
    LocalizedForecaster model(ensemble, workers);
    model.reset(1);
    for (Index k = 0; k < spinup.len(); ++k) model.drive(spinup.column(k));

    LocalizedForecast result;
    result.forecast.resize(ensemble.layout.system_dim, horizon);
    for (Index k = 0; k < horizon; ++k) {
        const Matrix pred = model.predict();
        if (!pred.allFinite()) {
            result.truncated = true;
            result.forecast.conservativeResize(Eigen::NoChange, k);
            break;
        }
        result.forecast.col(k) = pred.col(0);
        if (k + 1 < horizon) model.drive(pred);
    }
    return result;
}

} // namespace rcf
