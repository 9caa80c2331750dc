#pragma once

#include "rcf/evaluation.hpp"
#include "rcf/reservoir.hpp"
#include "rcf/time_series.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace rcf {

/// Partition of a periodic 1-D state into contiguous output groups, each read
/// together with `halo` neighbors on either side.
struct LocalizationLayout {
    Index system_dim = 0;
    Index group_output = 0;
    Index halo = 0;
    /// output_indices[g]: the group's own components, in order.
    std::vector<std::vector<Index>> output_indices;
    /// input_indices[g]: halo left, outputs, halo right, wrapped modulo D.
    std::vector<std::vector<Index>> input_indices;

    Index num_groups() const noexcept { return static_cast<Index>(output_indices.size()); }
    Index input_dim() const noexcept { return 2 * halo + group_output; }

    /// Rows of `global` selected by group g's inputs.
    Matrix gather(Index g, const Eigen::Ref<const Matrix>& global) const;
    /// Writes `local` (group_output rows) into group g's rows of `global`.
    void scatter(Index g, const Eigen::Ref<const Matrix>& local, Matrix& global) const;

    bool operator==(const LocalizationLayout&) const = default;
};

/// Throws std::invalid_argument when D is not a multiple of n_output or
/// 2 n_halo + n_output exceeds D.
LocalizationLayout make_layout(Index system_dim, Index n_output, Index n_halo);

struct LocalizedEnsemble {
    LocalizationLayout layout;
    std::vector<Reservoir> members;
    Vector climatology_std;

    /// members[g].params().seed, in group order.
    std::vector<std::uint64_t> member_seeds() const;
};

/// Seeds params.seed + g unless `member_seeds` gives one per group.
std::vector<std::uint64_t> derive_member_seeds(const LocalizationLayout& layout, const MacroParams& params,
                                               const std::optional<std::vector<std::uint64_t>>& member_seeds);

/// Trains one reservoir per group on its input slice of `train` with its
/// output slice as target. Members run on up to `workers` threads.
LocalizedEnsemble train_localized(const LocalizationLayout& layout, const MacroParams& params,
                                  const TimeSeries& train, Index spinup_steps, unsigned workers = 1,
                                  const std::optional<std::vector<std::uint64_t>>& member_seeds = std::nullopt);

/// The ensemble as one D-dimensional forecaster. Every driven step first
/// completes the global input, so in autonomous mode each member reads the
/// assembled prediction of the previous step.
class LocalizedForecaster final : public BatchForecaster {
public:
    explicit LocalizedForecaster(const LocalizedEnsemble& ensemble, unsigned workers = 1);

    Index dim() const override { return ensemble_.layout.system_dim; }
    void reset(Index batch) override;
    void drive(const Matrix& inputs) override;
    Matrix predict() const override;
    std::unique_ptr<BatchForecaster> clone() const override;

private:
    const LocalizedEnsemble& ensemble_;
    unsigned workers_;
    std::vector<BatchState> batches_;
};

struct LocalizedForecast {
    Matrix forecast;         ///< D x steps; fewer than horizon columns when truncated
    bool truncated = false;
};

/// Spins every member up on the whole of `spinup` (the truth), then forecasts
/// `horizon` steps past its last column. Stops at the first non-finite column.
LocalizedForecast forecast_localized(const LocalizedEnsemble& ensemble, const TimeSeries& spinup, Index horizon,
                                     unsigned workers = 1);

} // namespace rcf
