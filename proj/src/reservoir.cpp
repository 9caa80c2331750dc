#include "rcf/reservoir.hpp"

#include "rcf/random.hpp"
#include "rcf/spectral.hpp"

#include <cmath>
#include <string>

namespace rcf {

std::string_view to_string(ReadoutKind kind) {
    switch (kind) {
    case ReadoutKind::linear: return "linear";
    case ReadoutKind::biased: return "biased";
    case ReadoutKind::quadratic: return "quadratic";
    }
    return "linear";
}

ReadoutKind parse_readout(std::string_view text) {
    if (text == "linear") return ReadoutKind::linear;
    if (text == "biased") return ReadoutKind::biased;
    if (text == "quadratic") return ReadoutKind::quadratic;
    throw std::invalid_argument("unknown readout '" + std::string(text) +
                                "'; expected linear, biased or quadratic");
}

void MacroParams::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw std::invalid_argument("MacroParams." + field + ": " + why);
    };
    if (!(spectral_radius > 0.0) || !std::isfinite(spectral_radius)) fail("spectral_radius", "must be positive");
    if (!(density > 0.0 && density <= 1.0)) fail("density", "must lie in (0, 1]");
    if (size < 1) fail("size", "must be >= 1");
    if (!(leak > 0.0 && leak <= 1.0)) fail("leak", "must lie in (0, 1]");
    if (!(input_strength > 0.0) || !std::isfinite(input_strength)) fail("input_strength", "must be positive");
    if (!(input_bias >= 0.0) || !std::isfinite(input_bias)) fail("input_bias", "must be nonnegative");
    if (!(tikhonov >= 0.0) || !std::isfinite(tikhonov)) fail("tikhonov", "must be nonnegative");
    if (!input_unit_class.empty() || !class_input_strength.empty()) {
        for (int c : input_unit_class)
            if (c < 0 || static_cast<std::size_t>(c) >= class_input_strength.size())
                fail("input_unit_class", "class index without a matching class_input_strength");
        for (double s : class_input_strength)
            if (!(s > 0.0) || !std::isfinite(s)) fail("class_input_strength", "must be positive");
    }
}

double MacroParams::input_strength_for(Index j) const {
    if (input_unit_class.empty()) return input_strength;
    if (j < 0 || static_cast<std::size_t>(j) >= input_unit_class.size())
        throw std::invalid_argument("MacroParams.input_unit_class: no class for input " + std::to_string(j));
    return class_input_strength[static_cast<std::size_t>(input_unit_class[static_cast<std::size_t>(j)])];
}

Index feature_dim(ReadoutKind kind, Index size, Index input_dim) {
    switch (kind) {
    case ReadoutKind::linear: return size;
    case ReadoutKind::biased: return size + input_dim;
    case ReadoutKind::quadratic: return 2 * size;
    }
    return size;
}

Vector readout_features(ReadoutKind kind, const Eigen::Ref<const Vector>& r,
                        const Eigen::Ref<const Vector>& u_prev) {
    switch (kind) {
    case ReadoutKind::linear: return r;
    case ReadoutKind::biased: {
        Vector q(r.size() + u_prev.size());
        q << r, u_prev;
        return q;
    }
    case ReadoutKind::quadratic: {
        Vector q(2 * r.size());
        q << r, r.cwiseAbs2();
        return q;
    }
    }
    return r;
}

Vector leaky_tanh_update(const SparseMatrix& adjacency, const Matrix& input_map,
                         const Eigen::Ref<const Vector>& r, const Eigen::Ref<const Vector>& u,
                         double leak, double input_bias) {
    Vector pre = adjacency * r;
    pre.noalias() += input_map * u;
    pre.array() += input_bias;
    return r + leak * (activation(pre.array()).matrix() - r);
}

SparseMatrix scale_to_spectral_radius(SparseMatrix a, double target) {
    const double current = spectral_radius(a);
    if (!(current > 1e-10))
        throw std::invalid_argument(
            "adjacency matrix is degenerate (spectral radius ~0 before scaling); "
            "increase the density so the matrix is full rank");
    a *= target / current;
    return a;
}

Reservoir::Reservoir(MacroParams params, std::shared_ptr<const SparseMatrix> adjacency,
                     std::shared_ptr<const Matrix> input_map, Index output_dim)
    : params_(std::move(params)), adjacency_(std::move(adjacency)), input_map_(std::move(input_map)),
      output_dim_(output_dim), state_(Vector::Zero(params_.size)),
      last_input_(Vector::Zero(input_map_->cols())) {}

Reservoir Reservoir::build(const MacroParams& params, Index input_dim, std::optional<Index> output_dim) {
    params.validate();
    if (input_dim < 1) throw std::invalid_argument("Reservoir::build: input_dim must be >= 1");
    const Index n = params.size;
    Rng rng(params.seed);

    // Nonzero pattern: geometric gaps over the n*n row-major positions.
    std::vector<std::pair<Index, Index>> pattern;
    pattern.reserve(static_cast<std::size_t>(params.density * static_cast<double>(n) * static_cast<double>(n) * 1.1) + 16);
    const std::uint64_t total = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
    std::uint64_t pos = 0;
    while (true) {
        const std::uint64_t gap = rng.geometric(params.density);
        if (gap >= total - pos) break;
        pos += gap;
        pattern.emplace_back(static_cast<Index>(pos / static_cast<std::uint64_t>(n)),
                             static_cast<Index>(pos % static_cast<std::uint64_t>(n)));
        ++pos;
        if (pos >= total) break;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(pattern.size());
    for (const auto& [i, j] : pattern) triplets.emplace_back(i, j, rng.uniform(-1.0, 1.0));
    SparseMatrix a(n, n);
    a.setFromTriplets(triplets.begin(), triplets.end());
    a.makeCompressed();

    Matrix w_in(n, input_dim);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < input_dim; ++j) w_in(i, j) = params.input_strength_for(j) * rng.uniform(-1.0, 1.0);

    return from_matrices(params, std::move(a), std::move(w_in), output_dim, true);
}

Reservoir Reservoir::from_matrices(const MacroParams& params, SparseMatrix adjacency, Matrix input_map,
                                   std::optional<Index> output_dim, bool rescale) {
    params.validate();
    if (adjacency.rows() != params.size || adjacency.cols() != params.size)
        throw std::invalid_argument("Reservoir: adjacency must be size x size");
    if (input_map.rows() != params.size || input_map.cols() < 1)
        throw std::invalid_argument("Reservoir: input map must be size x input_dim");
    const Index out = output_dim.value_or(input_map.cols());
    if (out < 1) throw std::invalid_argument("Reservoir: output_dim must be >= 1");
    if (rescale) adjacency = scale_to_spectral_radius(std::move(adjacency), params.spectral_radius);
    adjacency.makeCompressed();
    return Reservoir(params, std::make_shared<const SparseMatrix>(std::move(adjacency)),
                     std::make_shared<const Matrix>(std::move(input_map)), out);
}

Index Reservoir::feature_dim() const noexcept {
    return rcf::feature_dim(params_.readout, params_.size, input_dim());
}

const Matrix& Reservoir::readout_map() const {
    if (!trained()) throw std::logic_error("Reservoir: readout map is not trained");
    return readout_map_;
}

void Reservoir::set_readout_map(Matrix w_out) {
    if (w_out.rows() != output_dim_ || w_out.cols() != feature_dim())
        throw std::invalid_argument("Reservoir: readout map must be " + std::to_string(output_dim_) + " x " +
                                    std::to_string(feature_dim()));
    readout_map_ = std::move(w_out);
}

void Reservoir::set_state(Vector r, std::optional<Vector> last_input) {
    if (r.size() != size()) throw std::invalid_argument("Reservoir: state has wrong size");
    state_ = std::move(r);
    if (last_input) {
        if (last_input->size() != input_dim()) throw std::invalid_argument("Reservoir: lagged input has wrong size");
        last_input_ = std::move(*last_input);
    }
}

void Reservoir::reset() {
    state_.setZero();
    last_input_.setZero();
}

const Vector& Reservoir::drive_step(const Eigen::Ref<const Vector>& u) {
    if (u.size() != input_dim())
        throw std::invalid_argument("Reservoir::drive_step: input has dimension " + std::to_string(u.size()) +
                                    ", expected " + std::to_string(input_dim()));
    Vector next = leaky_tanh_update(*adjacency_, *input_map_, state_, u, params_.leak, params_.input_bias);
    if (!next.allFinite()) throw NumericalError("Reservoir::drive_step: state became non-finite");
    state_ = std::move(next);
    last_input_ = u;
    return state_;
}

const Vector& Reservoir::spinup(const TimeSeries& series, Index steps) {
    if (steps < 0 || steps > series.len())
        throw std::invalid_argument("Reservoir::spinup: steps outside the series");
    reset();
    for (Index t = 0; t < steps; ++t) drive_step(series.column(t));
    return state_;
}

Vector Reservoir::readout(const Eigen::Ref<const Vector>& r, const Vector* u_prev) const {
    const Matrix& w = readout_map();
    const Index n = size();
    switch (params_.readout) {
    case ReadoutKind::linear: return w * r;
    case ReadoutKind::quadratic: return w.leftCols(n) * r + w.rightCols(n) * r.cwiseAbs2();
    case ReadoutKind::biased:
        if (u_prev == nullptr) throw std::invalid_argument("Reservoir::readout: biased readout needs u(t-1)");
        return w.leftCols(n) * r + w.rightCols(input_dim()) * (*u_prev);
    }
    return w * r;
}

Vector Reservoir::predict() const { return readout(state_, &last_input_); }

std::pair<Vector, Vector> Reservoir::forecast_step() {
    if (output_dim_ != input_dim())
        throw std::logic_error("Reservoir::forecast_step: autonomous mode needs output_dim == input_dim");
    const Vector feedback = predict();
    if (!feedback.allFinite()) throw NumericalError("Reservoir::forecast_step: prediction became non-finite");
    drive_step(feedback);
    return {state_, predict()};
}

Matrix Reservoir::forecast(Index horizon) {
    if (horizon < 1) throw std::invalid_argument("Reservoir::forecast: horizon must be >= 1");
    Matrix out(output_dim_, horizon);
    out.col(0) = predict();
    for (Index k = 1; k < horizon; ++k) out.col(k) = forecast_step().second;
    return out;
}

BatchState make_batch(const Reservoir& res, Index count) {
    return {RowMatrix::Zero(res.size(), count), Matrix::Zero(res.input_dim(), count)};
}

void drive_batch(const Reservoir& res, BatchState& batch, const Eigen::Ref<const Matrix>& inputs) {
    if (inputs.rows() != res.input_dim() || inputs.cols() != batch.states.cols())
        throw std::invalid_argument("drive_batch: inputs must be input_dim x batch");
    RowMatrix pre = res.adjacency() * batch.states;
    pre.noalias() += res.input_map() * inputs;
    pre.array() += res.params().input_bias;
    const double leak = res.params().leak;
    batch.states += leak * (activation(pre.array()).matrix() - batch.states);
    batch.last_inputs = inputs;
}

Matrix predict_batch(const Reservoir& res, const BatchState& batch) {
    const Matrix& w = res.readout_map();
    const Index n = res.size();
    switch (res.params().readout) {
    case ReadoutKind::linear: return w * batch.states;
    case ReadoutKind::quadratic: return w.leftCols(n) * batch.states + w.rightCols(n) * batch.states.cwiseAbs2();
    case ReadoutKind::biased:
        return w.leftCols(n) * batch.states + w.rightCols(res.input_dim()) * batch.last_inputs;
    }
    return w * batch.states;
}

} // namespace rcf
