#pragma once

// Dense numeric kernel: fully-connected layers, activations, classification
// losses and Adam, each with exact analytic gradients.
//
// Matrices are row-major with one sample per row. Everything is templated on
// the scalar type; the library itself instantiates double.

#include <Eigen/Dense>

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jmlh/errors.hpp"
#include "jmlh/rng.hpp"

namespace jmlh {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& values) {
    return values.derived().array().isFinite().all();
}

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw DimensionError(what);
}

/// y = x W^T + b, row-wise.
template <typename Scalar>
struct LinearLayer {
    MatrixX<Scalar> weight;  // out x in
    VectorX<Scalar> bias;    // out

    LinearLayer() = default;
    LinearLayer(Index in, Index out) : weight(MatrixX<Scalar>::Zero(out, in)), bias(VectorX<Scalar>::Zero(out)) {}

    Index in() const { return weight.cols(); }
    Index out() const { return weight.rows(); }

    bool operator==(const LinearLayer&) const = default;
};

template <typename Scalar>
struct LinearGrad {
    MatrixX<Scalar> weight;
    VectorX<Scalar> bias;
    MatrixX<Scalar> input;
};

/// Centered uniform weights in [-1/sqrt(in), 1/sqrt(in)], zero bias.
template <typename Scalar>
void init_uniform(LinearLayer<Scalar>& layer, RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(layer.in(), 1)));
    for (Index r = 0; r < layer.weight.rows(); ++r) {
        for (Index c = 0; c < layer.weight.cols(); ++c) {
            layer.weight(r, c) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
        }
    }
    layer.bias.setZero();
}

template <typename Scalar, typename Derived>
MatrixX<Scalar> linear_forward(const LinearLayer<Scalar>& layer, const Eigen::MatrixBase<Derived>& input) {
    require_shape(input.cols() == layer.in(), "linear_forward: input has " + std::to_string(input.cols()) +
                                                  " columns, layer expects " + std::to_string(layer.in()));
    MatrixX<Scalar> out = input * layer.weight.transpose();
    out.rowwise() += layer.bias.transpose();
    return out;
}

template <typename Scalar, typename DerivedIn, typename DerivedUp>
LinearGrad<Scalar> linear_backward(const LinearLayer<Scalar>& layer, const Eigen::MatrixBase<DerivedIn>& input,
                                   const Eigen::MatrixBase<DerivedUp>& upstream) {
    require_shape(input.cols() == layer.in(), "linear_backward: input width mismatch");
    require_shape(upstream.cols() == layer.out() && upstream.rows() == input.rows(),
                  "linear_backward: upstream gradient shape mismatch");
    LinearGrad<Scalar> g;
    g.weight = upstream.transpose() * input;
    g.bias = upstream.colwise().sum().transpose();
    g.input = upstream * layer.weight;
    return g;
}

template <std::floating_point Scalar>
Scalar sigmoid(Scalar z) {
    if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
}

template <typename Derived>
MatrixX<typename Derived::Scalar> sigmoid(const Eigen::MatrixBase<Derived>& z) {
    using Scalar = typename Derived::Scalar;
    return z.unaryExpr([](Scalar v) { return sigmoid(v); });
}

template <typename Derived>
MatrixX<typename Derived::Scalar> relu(const Eigen::MatrixBase<Derived>& input) {
    return input.cwiseMax(typename Derived::Scalar(0));
}

/// Subgradient 0 at the kink.
template <typename DerivedIn, typename DerivedUp>
MatrixX<typename DerivedIn::Scalar> relu_backward(const Eigen::MatrixBase<DerivedIn>& input,
                                                  const Eigen::MatrixBase<DerivedUp>& upstream) {
    using Scalar = typename DerivedIn::Scalar;
    require_shape(input.rows() == upstream.rows() && input.cols() == upstream.cols(), "relu_backward: shape mismatch");
    return (input.array() > Scalar(0)).select(upstream, Scalar(0));
}

template <typename Scalar>
struct LossAndGrad {
    Scalar loss;
    MatrixX<Scalar> grad;
};

/// Mean over rows of -log softmax(logits)[label], log-sum-exp stabilized.
template <typename Derived>
LossAndGrad<typename Derived::Scalar> softmax_cross_entropy(const Eigen::MatrixBase<Derived>& logits,
                                                            std::span<const int> labels) {
    using Scalar = typename Derived::Scalar;
    const Index batch = logits.rows();
    const Index classes = logits.cols();
    require_shape(static_cast<Index>(labels.size()) == batch, "softmax_cross_entropy: label count != batch");
    LossAndGrad<Scalar> r{Scalar(0), MatrixX<Scalar>(batch, classes)};
    if (batch == 0) return r;
    const Scalar inv_batch = Scalar(1) / static_cast<Scalar>(batch);
    for (Index i = 0; i < batch; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= classes) {
            throw LabelError("softmax_cross_entropy: label " + std::to_string(label) + " outside [0, " +
                             std::to_string(classes) + ")");
        }
        const Scalar peak = logits.row(i).maxCoeff();
        auto shifted = (logits.row(i).array() - peak).exp();
        const Scalar total = shifted.sum();
        r.loss += peak + std::log(total) - logits(i, label);
        r.grad.row(i) = shifted / total;
        r.grad(i, label) -= Scalar(1);
    }
    r.loss *= inv_batch;
    r.grad *= inv_batch;
    return r;
}

/// Mean per-element binary cross-entropy on sigmoid(logits), computed in logit space.
template <typename DerivedL, typename DerivedT>
LossAndGrad<typename DerivedL::Scalar> sigmoid_bce(const Eigen::MatrixBase<DerivedL>& logits,
                                                   const Eigen::MatrixBase<DerivedT>& targets) {
    using Scalar = typename DerivedL::Scalar;
    require_shape(logits.rows() == targets.rows() && logits.cols() == targets.cols(), "sigmoid_bce: shape mismatch");
    LossAndGrad<Scalar> r{Scalar(0), MatrixX<Scalar>(logits.rows(), logits.cols())};
    const Index count = logits.size();
    if (count == 0) return r;
    const Scalar inv_count = Scalar(1) / static_cast<Scalar>(count);
    for (Index i = 0; i < logits.rows(); ++i) {
        for (Index j = 0; j < logits.cols(); ++j) {
            const Scalar z = logits(i, j);
            const Scalar t = targets(i, j);
            r.loss += std::max(z, Scalar(0)) - z * t + std::log1p(std::exp(-std::abs(z)));
            r.grad(i, j) = (sigmoid(z) - t) * inv_count;
        }
    }
    r.loss *= inv_count;
    return r;
}

/// Adam with bias-corrected moments. One moment pair per parameter block.
struct AdamState {
    std::uint64_t step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-4;
    std::vector<Eigen::ArrayXd> first;
    std::vector<Eigen::ArrayXd> second;

    AdamState() = default;
    AdamState(std::span<const Index> block_sizes, double lr) : learning_rate(lr) {
        for (Index n : block_sizes) {
            first.push_back(Eigen::ArrayXd::Zero(n));
            second.push_back(Eigen::ArrayXd::Zero(n));
        }
    }
};

/// A contiguous parameter block and its gradient.
struct ParamView {
    std::span<double> value;
    std::span<const double> grad;
};

inline void adam_step(AdamState& state, std::span<const ParamView> params) {
    require_shape(params.size() == state.first.size(), "adam_step: parameter block count mismatch");
    for (std::size_t b = 0; b < params.size(); ++b) {
        require_shape(params[b].value.size() == params[b].grad.size() &&
                          static_cast<Index>(params[b].value.size()) == state.first[b].size(),
                      "adam_step: block " + std::to_string(b) + " shape mismatch");
        for (double g : params[b].grad) {
            if (!std::isfinite(g)) {
                throw DivergenceError("adam_step: non-finite gradient in parameter block " + std::to_string(b));
            }
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        Eigen::Map<Eigen::ArrayXd> value(params[b].value.data(), static_cast<Index>(params[b].value.size()));
        Eigen::Map<const Eigen::ArrayXd> grad(params[b].grad.data(), static_cast<Index>(params[b].grad.size()));
        auto& m = state.first[b];
        auto& v = state.second[b];
        m = state.beta1 * m + (1.0 - state.beta1) * grad;
        v = state.beta2 * v + (1.0 - state.beta2) * grad.square();
        value -= state.learning_rate * (m / correction1) / ((v / correction2).sqrt() + state.epsilon);
    }
}

}  // namespace jmlh
