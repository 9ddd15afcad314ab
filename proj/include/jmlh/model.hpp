#pragma once

// Hashing network: encoder -> stochastic binary layer -> classifier head.
//
// The encoder is a stack of fully-connected layers with relu between them; its
// last layer is m wide and feeds the sigmoid that produces code probabilities.
// The head is a single fully-connected layer from the m code bits to the label
// width (softmax or per-tag sigmoid), or to the feature width for the VAE
// ablation.

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "jmlh/bottleneck.hpp"
#include "jmlh/core_math.hpp"
#include "jmlh/data.hpp"

namespace jmlh {

using Layer = LinearLayer<double>;
using LayerGrad = LinearGrad<double>;

/// Training objective. Full is the method itself; the others are ablations.
///   Cont: sigmoid relaxation fed to the classifier, KL kept.
///   QR:   KL replaced by the quantization penalty.
///   NR:   classification only.
///   VAE:  classifier replaced by a decoder, L2 reconstruction plus unit-weight KL.
enum class Variant : std::uint8_t { Full = 0, Cont = 1, QR = 2, NR = 3, VAE = 4 };

inline constexpr Variant kAllVariants[] = {Variant::Full, Variant::Cont, Variant::QR, Variant::NR, Variant::VAE};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
std::string_view to_string(LabelMode mode);

struct ModelSpec {
    Index input_dim = 0;
    /// 0 means the encoder is a single input -> m layer.
    Index hidden_width = 512;
    Index code_length = 16;
    /// Number of classes / tags. Ignored by the VAE variant, whose head is input_dim wide.
    Index label_width = 0;
    LabelMode label_mode = LabelMode::Single;
    EstimatorKind estimator = EstimatorKind::DistributionalDerivative;
    Variant variant = Variant::Full;
};

struct JmlhModel {
    std::vector<Layer> encoder;
    Layer head;
    LabelMode label_mode = LabelMode::Single;
    EstimatorKind estimator = EstimatorKind::DistributionalDerivative;
    Variant variant = Variant::Full;

    Index input_dim() const { return encoder.front().in(); }
    Index code_length() const { return encoder.back().out(); }

    bool operator==(const JmlhModel&) const = default;
};

/// Builds a model with centered-uniform weights (scale 1/sqrt(fan_in)) and zero biases.
JmlhModel make_model(const ModelSpec& spec, RngStream& rng);

/// Same shapes as make_model, all parameters zero.
JmlhModel make_zero_model(const ModelSpec& spec);

struct TrainConfig {
    double lambda = 0.1;
    double learning_rate = 1e-4;
    Index batch_size = 256;
    Index epochs = 200;
    /// Total optimizer steps allowed; 0 means no limit beyond the epoch budget.
    Index max_iters = 0;
    std::uint64_t seed = 0;
    Index mc_samples = 1;
    /// Stop after this many epochs without a relative loss improvement of min_delta; 0 disables.
    Index patience = 0;
    double min_delta = 1e-4;
};

struct LossBreakdown {
    double total = 0.0;
    double classification = 0.0;
    double regularizer = 0.0;
};

struct ModelGradients {
    std::vector<LayerGrad> encoder;
    LayerGrad head;
};

struct LossResult {
    LossBreakdown loss;
    ModelGradients grads;
};

/// Intermediate values of one encoder pass, kept for the backward pass.
struct EncoderPass {
    std::vector<Matrix> layer_inputs;  // input to each encoder layer (post-relu for hidden layers)
    std::vector<Matrix> pre_activations;
    Matrix logits;  // last layer output, pre-sigmoid
    Matrix kappa;   // clamped sigmoid(logits)
};

EncoderPass encoder_forward(const JmlhModel& model, const Matrix& batch);
std::vector<LayerGrad> encoder_backward(const JmlhModel& model, const EncoderPass& pass, const Matrix& grad_logits);

/// Code probabilities, one row per sample.
Matrix encode_probabilities(const JmlhModel& model, const Matrix& batch);

/// Deterministic out-of-sample codes.
BitMatrix encode_dataset(const JmlhModel& model, const Matrix& features);

/// Classification NLL of the head for the given (binary or relaxed) bottleneck values,
/// averaged over rows, and its gradient with respect to the head logits.
LossAndGrad<double> head_loss(const JmlhModel& model, const Matrix& head_logits, const Labels& labels);

/// Objective and gradients for one batch and one noise draw (eps: batch x m).
/// Dispatches to vae_loss for the VAE variant.
LossResult compute_loss(const JmlhModel& model, const Matrix& batch, const Labels& labels, const Matrix& eps,
                        double lambda);

/// Negative ELBO: mean of ||x - decode(b)||^2 / 2 plus the KL with weight 1.
LossResult vae_loss(const JmlhModel& model, const Matrix& batch, const Matrix& eps);

/// Largest code length the enumeration oracles accept.
inline constexpr Index kMaxEnumerationBits = 12;

/// Batch mean of sum_b q(b|x) * loss(b) by enumerating all 2^m codes.
/// loss(b) is the classification NLL, or the reconstruction error for the VAE variant.
double exact_expected_loss(const JmlhModel& model, const Matrix& batch, const Labels& labels);

/// Plug-in estimate of I(code; label) in nats from the empirical joint histogram.
double mutual_information_estimate(const BitMatrix& codes, std::span<const int> labels);

/// Parameter blocks in a fixed order: encoder layers (weight, bias), then head (weight, bias).
std::vector<Index> parameter_block_sizes(const JmlhModel& model);
std::vector<ParamView> parameter_views(JmlhModel& model, const ModelGradients& grads);

struct EpochStats {
    LossBreakdown mean;
    Index batches = 0;
};

using StepCallback = std::function<void(std::uint64_t step, const LossBreakdown&)>;

/// One shuffled pass over the training rows. Each batch draws fresh noise,
/// computes the objective, and applies one joint Adam step to encoder and head.
/// step_budget < 0 means unlimited; otherwise at most that many batches run.
EpochStats train_epoch(JmlhModel& model, AdamState& optimizer, const Matrix& features, const Labels& labels,
                       const TrainConfig& config, RngStream& rng, const StepCallback& on_step = {},
                       Index step_budget = -1);

AdamState make_optimizer(const JmlhModel& model, const TrainConfig& config);

struct TrainSummary {
    std::vector<EpochStats> epochs;
    std::uint64_t steps = 0;
    bool stopped_early = false;
};

/// Runs train_epoch until the epoch budget, max_iters, or the patience rule stops it.
TrainSummary train(JmlhModel& model, const Matrix& features, const Labels& labels, const TrainConfig& config,
                   const StepCallback& on_step = {});

}  // namespace jmlh
