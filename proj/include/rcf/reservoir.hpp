#pragma once

#include "rcf/time_series.hpp"
#include "rcf/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rcf {

enum class ReadoutKind { linear, biased, quadratic };

std::string_view to_string(ReadoutKind kind);
/// Throws std::invalid_argument for anything but linear/biased/quadratic.
ReadoutKind parse_readout(std::string_view text);

/// The global scalar parameters of a reservoir; the point searched by the
/// macro optimizer.
struct MacroParams {
    double spectral_radius = 0.8;
    double density = 0.02;
    Index size = 500;
    double leak = 1.0;
    double input_strength = 0.1;
    /// Mixed-unit inputs: the unit class of each input dimension and one
    /// input strength per class. Empty means the scalar input_strength.
    std::vector<int> input_unit_class;
    std::vector<double> class_input_strength;
    double input_bias = 0.0;
    double tikhonov = 1e-8;
    ReadoutKind readout = ReadoutKind::linear;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    /// Input strength applied to input column j.
    double input_strength_for(Index j) const;

    bool operator==(const MacroParams&) const = default;
};

/// Width of the readout feature vector Q(r) for a reservoir of `size` nodes.
Index feature_dim(ReadoutKind kind, Index size, Index input_dim);

/// Q(r): r, [r, u_prev] or [r, r^2].
Vector readout_features(ReadoutKind kind, const Eigen::Ref<const Vector>& r,
                        const Eigen::Ref<const Vector>& u_prev);

/// Elementwise tanh written as 1 - 2 / (exp(2x) + 1) so that it vectorizes;
/// the absolute difference from std::tanh stays below 1e-15 and the limits
/// +-1 are reached without overflow.
template <typename Derived>
auto activation(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

/// The leaky tanh map r + alpha * (tanh(A r + W_in u + sigma_b) - r), which is
/// alpha * tanh(...) + (1 - alpha) * r in exact arithmetic.
Vector leaky_tanh_update(const SparseMatrix& adjacency, const Matrix& input_map,
                         const Eigen::Ref<const Vector>& r, const Eigen::Ref<const Vector>& u,
                         double leak, double input_bias);

/// Scale `a` so that its largest eigenvalue magnitude equals `target`.
/// Throws std::invalid_argument when the unscaled spectral radius is ~0.
SparseMatrix scale_to_spectral_radius(SparseMatrix a, double target);

/// Echo state network: frozen sparse adjacency and input map, trained readout
/// and a mutable state. Copies share the frozen matrices, so copying a trained
/// reservoir to forecast from several states at once is cheap.
class Reservoir {
public:
    /// Deterministic in params.seed. Draw order: adjacency nonzero pattern
    /// (row-major geometric skips), then its values U(-1,1), then W_in row-major.
    static Reservoir build(const MacroParams& params, Index input_dim,
                           std::optional<Index> output_dim = std::nullopt);

    /// Reservoir from explicit matrices. The adjacency is rescaled to
    /// params.spectral_radius unless `rescale` is false.
    static Reservoir from_matrices(const MacroParams& params, SparseMatrix adjacency,
                                   Matrix input_map, std::optional<Index> output_dim = std::nullopt,
                                   bool rescale = true);

    const MacroParams& params() const noexcept { return params_; }
    Index size() const noexcept { return params_.size; }
    Index input_dim() const noexcept { return input_map_->cols(); }
    Index output_dim() const noexcept { return output_dim_; }
    Index feature_dim() const noexcept;

    const SparseMatrix& adjacency() const noexcept { return *adjacency_; }
    const Matrix& input_map() const noexcept { return *input_map_; }

    bool trained() const noexcept { return readout_map_.size() > 0; }
    /// output_dim x feature_dim. Throws std::logic_error when untrained.
    const Matrix& readout_map() const;
    void set_readout_map(Matrix w_out);

    const Vector& state() const noexcept { return state_; }
    const Vector& last_input() const noexcept { return last_input_; }
    void set_state(Vector r, std::optional<Vector> last_input = std::nullopt);
    /// Zero state and zero lagged input.
    void reset();

    /// Driven update with input u; the new state replaces the old one.
    /// Throws NumericalError if the state stops being finite.
    const Vector& drive_step(const Eigen::Ref<const Vector>& u);

    /// Resets, drives through the first `steps` columns and returns the state.
    const Vector& spinup(const TimeSeries& series, Index steps);

    /// Applies W_out to Q(r). `u_prev` is required for the biased readout and
    /// ignored otherwise.
    Vector readout(const Eigen::Ref<const Vector>& r, const Vector* u_prev = nullptr) const;

    /// Readout of the current state (the lagged input is the last driven input).
    Vector predict() const;

    /// Autonomous step: feed predict() back as the input, then return the new
    /// state and its prediction. Requires output_dim == input_dim.
    std::pair<Vector, Vector> forecast_step();

    /// output_dim x horizon matrix: column 0 is predict() of the current state,
    /// each following column one forecast_step later.
    Matrix forecast(Index horizon);

private:
    Reservoir(MacroParams params, std::shared_ptr<const SparseMatrix> adjacency,
              std::shared_ptr<const Matrix> input_map, Index output_dim);

    MacroParams params_;
    std::shared_ptr<const SparseMatrix> adjacency_;
    std::shared_ptr<const Matrix> input_map_;
    Index output_dim_;
    Matrix readout_map_;
    Vector state_;
    Vector last_input_;
};

/// Many reservoir states advanced together (one column per trajectory).
struct BatchState {
    RowMatrix states;    ///< N x B
    Matrix last_inputs;  ///< input_dim x B
};

BatchState make_batch(const Reservoir& res, Index count);
/// Driven update of every column; inputs is input_dim x B. Non-finite values
/// are propagated, not thrown, so one bad trajectory cannot abort a batch.
void drive_batch(const Reservoir& res, BatchState& batch, const Eigen::Ref<const Matrix>& inputs);
/// output_dim x B readouts of the batch.
Matrix predict_batch(const Reservoir& res, const BatchState& batch);

} // namespace rcf
