#pragma once

// Stochastic binary bottleneck.
//
// Each row of a probability matrix holds the Bernoulli parameters kappa of one
// sample's m code bits. Realized codes are stored as uint8 matrices so a code
// can never carry a relaxed value.

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "jmlh/core_math.hpp"

namespace jmlh {

using BitMatrix = MatrixX<std::uint8_t>;

/// kappa is kept inside [kKappaFloor, 1 - kKappaFloor] so logs and the KL stay finite.
inline constexpr double kKappaFloor = 1e-6;

enum class EstimatorKind { DistributionalDerivative, StraightThrough };

inline std::string_view to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::DistributionalDerivative: return "dd";
        case EstimatorKind::StraightThrough: return "st";
    }
    throw ConfigError("unknown estimator kind");
}

inline EstimatorKind parse_estimator(std::string_view name) {
    if (name == "dd" || name == "distributional") return EstimatorKind::DistributionalDerivative;
    if (name == "st" || name == "straight-through") return EstimatorKind::StraightThrough;
    throw ConfigError("unknown estimator '" + std::string(name) + "' (expected dd or st)");
}

/// Binomial code prior B(m, p). Only p = 0.5 is supported.
struct PriorSpec {
    Index m = 0;
    double p = 0.5;
};

template <typename Derived>
MatrixX<typename Derived::Scalar> clamp_probabilities(const Eigen::MatrixBase<Derived>& kappa) {
    using Scalar = typename Derived::Scalar;
    return kappa.cwiseMax(Scalar(kKappaFloor)).cwiseMin(Scalar(1.0 - kKappaFloor));
}

/// Sigmoid followed by clamping.
template <typename Derived>
MatrixX<typename Derived::Scalar> code_probabilities(const Eigen::MatrixBase<Derived>& logits) {
    return clamp_probabilities(sigmoid(logits));
}

/// One uniform [0,1) draw per code bit.
inline Matrix draw_noise(RngStream& rng, Index rows, Index m) {
    Matrix eps(rows, m);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < m; ++j) eps(i, j) = rng.uniform();
    return eps;
}

/// bit = 1 iff kappa >= eps.
template <typename DerivedK, typename DerivedE>
BitMatrix sample_code(const Eigen::MatrixBase<DerivedK>& kappa, const Eigen::MatrixBase<DerivedE>& eps) {
    require_shape(kappa.rows() == eps.rows() && kappa.cols() == eps.cols(), "sample_code: noise shape mismatch");
    return (kappa.array() >= eps.array()).template cast<std::uint8_t>();
}

/// Deterministic code: bit = 1 iff kappa >= 0.5.
template <typename Derived>
BitMatrix binarize(const Eigen::MatrixBase<Derived>& kappa) {
    return (kappa.array() >= typename Derived::Scalar(0.5)).template cast<std::uint8_t>();
}

template <typename Scalar = double>
MatrixX<Scalar> bits_to_real(const BitMatrix& code) {
    return code.cast<Scalar>();
}

/// Per-row log q(b | x) for a product of independent Bernoullis.
template <typename Derived>
VectorX<typename Derived::Scalar> code_log_prob(const Eigen::MatrixBase<Derived>& kappa, const BitMatrix& code) {
    using Scalar = typename Derived::Scalar;
    require_shape(kappa.rows() == code.rows() && kappa.cols() == code.cols(), "code_log_prob: shape mismatch");
    VectorX<Scalar> out(kappa.rows());
    for (Index i = 0; i < kappa.rows(); ++i) {
        Scalar acc = 0;
        for (Index j = 0; j < kappa.cols(); ++j) {
            acc += code(i, j) ? std::log(kappa(i, j)) : std::log1p(-kappa(i, j));
        }
        out(i) = acc;
    }
    return out;
}

/// A per-row penalty value and its gradient with respect to kappa.
template <typename Scalar>
struct PenaltyTerm {
    VectorX<Scalar> value;
    MatrixX<Scalar> grad;
};

/// KL(Bern(kappa) || Bern(0.5)) summed over bits, per row.
template <typename Derived>
PenaltyTerm<typename Derived::Scalar> kl_to_uniform_prior(const Eigen::MatrixBase<Derived>& kappa,
                                                          const PriorSpec& prior) {
    using Scalar = typename Derived::Scalar;
    if (prior.p != 0.5) throw ConfigError("kl_to_uniform_prior: only the p = 0.5 prior is supported");
    require_shape(prior.m == kappa.cols(), "kl_to_uniform_prior: prior length != code length");
    const Scalar ln2 = std::numbers::ln2_v<Scalar>;
    PenaltyTerm<Scalar> r{VectorX<Scalar>(kappa.rows()), MatrixX<Scalar>(kappa.rows(), kappa.cols())};
    for (Index i = 0; i < kappa.rows(); ++i) {
        Scalar acc = 0;
        for (Index j = 0; j < kappa.cols(); ++j) {
            const Scalar k = kappa(i, j);
            const Scalar log_k = std::log(k);
            const Scalar log_1mk = std::log1p(-k);
            acc += k * (log_k + ln2) + (Scalar(1) - k) * (log_1mk + ln2);
            r.grad(i, j) = log_k - log_1mk;
        }
        r.value(i) = acc;
    }
    return r;
}

/// (1/m) * sum_i (kappa_i - b_i)^2 per row; gradient flows to kappa only.
template <typename Derived>
PenaltyTerm<typename Derived::Scalar> quantization_penalty(const Eigen::MatrixBase<Derived>& kappa,
                                                           const BitMatrix& code) {
    using Scalar = typename Derived::Scalar;
    require_shape(kappa.rows() == code.rows() && kappa.cols() == code.cols(), "quantization_penalty: shape mismatch");
    const Scalar inv_m = kappa.cols() > 0 ? Scalar(1) / static_cast<Scalar>(kappa.cols()) : Scalar(0);
    const MatrixX<Scalar> diff = kappa - code.cast<Scalar>();
    return {diff.rowwise().squaredNorm() * inv_m, Scalar(2) * inv_m * diff};
}

/// Maps a gradient with respect to the sampled bits onto the pre-sigmoid logits.
///
/// DistributionalDerivative treats d(bit)/d(kappa) as identity and chains
/// through the sigmoid; StraightThrough copies the bit gradient to the logits.
template <typename DerivedU, typename DerivedK, typename DerivedZ>
MatrixX<typename DerivedU::Scalar> bottleneck_backward(EstimatorKind kind, const Eigen::MatrixBase<DerivedU>& upstream,
                                                       const Eigen::MatrixBase<DerivedK>& kappa,
                                                       const Eigen::MatrixBase<DerivedZ>& logits) {
    using Scalar = typename DerivedU::Scalar;
    require_shape(upstream.rows() == kappa.rows() && upstream.cols() == kappa.cols() &&
                      logits.rows() == kappa.rows() && logits.cols() == kappa.cols(),
                  "bottleneck_backward: shape mismatch");
    switch (kind) {
        case EstimatorKind::DistributionalDerivative:
            return (upstream.array() * kappa.array() * (Scalar(1) - kappa.array())).matrix();
        case EstimatorKind::StraightThrough:
            return upstream;
    }
    throw ConfigError("bottleneck_backward: unknown estimator kind");
}

}  // namespace jmlh
