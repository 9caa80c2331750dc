#include "rcf/gaussian_process.hpp"

#include "rcf/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rcf {

NelderMeadResult nelder_mead(const std::function<double(const Vector&)>& f, const Vector& start, double step,
                             Index max_iterations, double tolerance) {
    const Index n = start.size();
    std::vector<Vector> simplex(static_cast<std::size_t>(n + 1), start);
    std::vector<double> values(static_cast<std::size_t>(n + 1));
    for (Index i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i + 1)][i] += step;
    for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = f(simplex[i]);

    std::vector<std::size_t> order(simplex.size());
    Index iter = 0;
    for (; iter < max_iterations; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        if (std::abs(values[worst] - values[best]) <= tolerance * (std::abs(values[best]) + tolerance)) break;

        Vector centroid = Vector::Zero(n);
        for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += simplex[order[i]];
        centroid /= static_cast<double>(n);

        const Vector reflected = centroid + (centroid - simplex[worst]);
        const double fr = f(reflected);
        if (fr < values[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = reflected;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        const Vector contracted =
            outside ? Vector(centroid + 0.5 * (reflected - centroid)) : Vector(centroid + 0.5 * (simplex[worst] - centroid));
        const double fc = f(contracted);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = contracted;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 1; i < order.size(); ++i) {
            Vector& v = simplex[order[i]];
            v = simplex[best] + 0.5 * (v - simplex[best]);
            values[order[i]] = f(v);
        }
    }
    const auto it = std::min_element(values.begin(), values.end());
    const auto idx = static_cast<std::size_t>(it - values.begin());
    return {simplex[idx], *it, iter};
}

double GaussianProcess::kernel(const Vector& a, const Vector& b, const Vector& inv_len2, double signal) const {
    return signal * std::exp(-0.5 * ((a - b).array().square() * inv_len2.array()).sum());
}

Matrix GaussianProcess::gram(const Hyper& h) const {
    const Index n = x_.cols();
    const Vector inv_len2 = (-2.0 * h.log_length).array().exp();
    const double signal = std::exp(h.log_signal);
    Matrix k(n, n);
    for (Index i = 0; i < n; ++i) {
        k(i, i) = signal + std::exp(h.log_nugget);
        for (Index j = 0; j < i; ++j) k(i, j) = k(j, i) = kernel(x_.col(i), x_.col(j), inv_len2, signal);
    }
    return k;
}

double GaussianProcess::log_marginal_likelihood(const Hyper& h) const {
    Eigen::LLT<Matrix> llt(gram(h));
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    const Vector a = llt.solve(y_);
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * y_.dot(a) - 0.5 * logdet - 0.5 * static_cast<double>(y_.size()) * std::log(2.0 * M_PI);
}

void GaussianProcess::condition(const Matrix& x, const Vector& y, const Hyper& hyper) {
    if (x.cols() != y.size() || y.size() < 1) throw std::invalid_argument("GaussianProcess: need matching x and y");
    x_ = x;
    y_mean_ = y.mean();
    const double var = (y.array() - y_mean_).square().mean();
    y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    y_ = (y.array() - y_mean_) / y_scale_;
    hyper_ = hyper;
    llt_.compute(gram(hyper_));
    if (llt_.info() != Eigen::Success) {
        // Raise the nugget until the kernel matrix factors.
        for (int k = 0; k < 20 && llt_.info() != Eigen::Success; ++k) {
            hyper_.log_nugget += std::log(10.0);
            llt_.compute(gram(hyper_));
        }
        if (llt_.info() != Eigen::Success) throw NumericalError("GaussianProcess: kernel matrix is not positive definite");
    }
    alpha_ = llt_.solve(y_);
}

void GaussianProcess::fit(const Matrix& x, const Vector& y) {
    const Index d = x.rows();
    Hyper start;
    start.log_length = Vector::Constant(d, std::log(0.3));
    condition(x, y, start);

    // Parameter vector: log lengths, log signal, log nugget; box-limited by a
    // penalty so the simplex cannot wander into degenerate kernels.
    const double lo_len = std::log(1e-2), hi_len = std::log(1e1);
    const double lo_sig = std::log(1e-2), hi_sig = std::log(1e2);
    const double lo_nug = std::log(1e-8), hi_nug = std::log(1e-1);
    auto unpack = [&](const Vector& p) {
        Hyper h;
        h.log_length = p.head(d);
        h.log_signal = p[d];
        h.log_nugget = p[d + 1];
        return h;
    };
    auto objective = [&](const Vector& p) {
        double penalty = 0.0;
        auto excess = [&](double v, double lo, double hi) {
            if (v < lo) penalty += (lo - v) * (lo - v);
            if (v > hi) penalty += (v - hi) * (v - hi);
        };
        for (Index i = 0; i < d; ++i) excess(p[i], lo_len, hi_len);
        excess(p[d], lo_sig, hi_sig);
        excess(p[d + 1], lo_nug, hi_nug);
        if (penalty > 0.0) return 1e6 * (1.0 + penalty);
        const double lml = log_marginal_likelihood(unpack(p));
        return std::isfinite(lml) ? -lml : 1e6;
    };

    NelderMeadResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (double len : {0.1, 0.3, 1.0}) {
        Vector p(d + 2);
        p.head(d).setConstant(std::log(len));
        p[d] = 0.0;
        p[d + 1] = std::log(1e-4);
        NelderMeadResult r = nelder_mead(objective, p, 0.5, 200 * (d + 2), 1e-8);
        if (r.value < best.value) best = r;
    }
    condition(x, y, unpack(best.x));
}

void GaussianProcess::predict(const Vector& x, double& mean, double& stddev) const {
    const Index n = x_.cols();
    const Vector inv_len2 = (-2.0 * hyper_.log_length).array().exp();
    const double signal = std::exp(hyper_.log_signal);
    Vector k(n);
    for (Index i = 0; i < n; ++i) k[i] = kernel(x, x_.col(i), inv_len2, signal);
    const double mu = k.dot(alpha_);
    const Vector v = llt_.matrixL().solve(k);
    const double var = std::max(signal - v.squaredNorm(), 0.0);
    mean = y_mean_ + y_scale_ * mu;
    stddev = y_scale_ * std::sqrt(var);
}

double expected_improvement(double mean, double stddev, double best) {
    if (!(stddev > 1e-300)) return std::max(best - mean, 0.0);
    const double z = (best - mean) / stddev;
    const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
    return (best - mean) * cdf + stddev * pdf;
}

Matrix latin_hypercube(Index count, Index dim, std::uint64_t seed) {
    if (count < 1 || dim < 1) throw std::invalid_argument("latin_hypercube: count and dim must be >= 1");
    Rng rng(seed);
    Matrix pts(dim, count);
    std::vector<Index> perm(static_cast<std::size_t>(count));
    for (Index j = 0; j < dim; ++j) {
        std::iota(perm.begin(), perm.end(), 0);
        // Fisher-Yates with the portable generator.
        for (std::size_t i = perm.size() - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.below(i + 1)]);
        for (Index i = 0; i < count; ++i)
            pts(j, i) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform()) /
                        static_cast<double>(count);
    }
    return pts;
}

} // namespace rcf
