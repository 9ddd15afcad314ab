#include "jmlh/model.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

namespace jmlh {

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::Cont: return "cont";
        case Variant::QR: return "qr";
        case Variant::NR: return "nr";
        case Variant::VAE: return "vae";
    }
    throw ConfigError("unknown variant");
}

Variant parse_variant(std::string_view name) {
    for (Variant v : kAllVariants)
        if (to_string(v) == name) return v;
    throw ConfigError("unknown variant '" + std::string(name) + "' (expected full, cont, qr, nr or vae)");
}

std::string_view to_string(LabelMode mode) { return mode == LabelMode::Single ? "single" : "multi"; }

JmlhModel make_zero_model(const ModelSpec& spec) {
    if (spec.input_dim < 1 || spec.code_length < 1) throw ConfigError("model needs input_dim >= 1 and m >= 1");
    if (spec.hidden_width < 0) throw ConfigError("hidden_width must be >= 0");
    JmlhModel model;
    model.label_mode = spec.label_mode;
    model.estimator = spec.estimator;
    model.variant = spec.variant;
    if (spec.hidden_width > 0) {
        model.encoder.emplace_back(spec.input_dim, spec.hidden_width);
        model.encoder.emplace_back(spec.hidden_width, spec.code_length);
    } else {
        model.encoder.emplace_back(spec.input_dim, spec.code_length);
    }
    if (spec.variant == Variant::VAE) {
        model.head = Layer(spec.code_length, spec.input_dim);
    } else {
        if (spec.label_width < 1) throw ConfigError("classifier needs label_width >= 1");
        model.head = Layer(spec.code_length, spec.label_width);
    }
    return model;
}

JmlhModel make_model(const ModelSpec& spec, RngStream& rng) {
    JmlhModel model = make_zero_model(spec);
    for (auto& layer : model.encoder) init_uniform(layer, rng);
    init_uniform(model.head, rng);
    return model;
}

EncoderPass encoder_forward(const JmlhModel& model, const Matrix& batch) {
    EncoderPass pass;
    const std::size_t depth = model.encoder.size();
    pass.layer_inputs.reserve(depth);
    pass.pre_activations.reserve(depth);
    pass.layer_inputs.push_back(batch);
    for (std::size_t l = 0; l < depth; ++l) {
        pass.pre_activations.push_back(linear_forward(model.encoder[l], pass.layer_inputs[l]));
        if (l + 1 < depth) pass.layer_inputs.push_back(relu(pass.pre_activations[l]));
    }
    pass.logits = pass.pre_activations.back();
    pass.kappa = code_probabilities(pass.logits);
    return pass;
}

std::vector<LayerGrad> encoder_backward(const JmlhModel& model, const EncoderPass& pass, const Matrix& grad_logits) {
    const std::size_t depth = model.encoder.size();
    std::vector<LayerGrad> grads(depth);
    Matrix upstream = grad_logits;
    for (std::size_t l = depth; l-- > 0;) {
        grads[l] = linear_backward(model.encoder[l], pass.layer_inputs[l], upstream);
        if (l > 0) upstream = relu_backward(pass.pre_activations[l - 1], grads[l].input);
    }
    return grads;
}

Matrix encode_probabilities(const JmlhModel& model, const Matrix& batch) { return encoder_forward(model, batch).kappa; }

BitMatrix encode_dataset(const JmlhModel& model, const Matrix& features) {
    return binarize(encode_probabilities(model, features));
}

namespace {

void check_labels(const JmlhModel& model, const Labels& labels, Index rows) {
    if (model.variant == Variant::VAE) throw ConfigError("the VAE variant has no classifier head");
    if (labels.mode != model.label_mode) {
        throw ConfigError("labels are " + std::string(to_string(labels.mode)) + "-label but the model head is " +
                          std::string(to_string(model.label_mode)) + "-label");
    }
    if (labels.num_classes != model.head.out()) {
        throw ConfigError("label width " + std::to_string(labels.num_classes) + " != classifier width " +
                          std::to_string(model.head.out()));
    }
    require_shape(labels.size() == rows, "label count != batch rows");
}

}  // namespace

LossAndGrad<double> head_loss(const JmlhModel& model, const Matrix& head_logits, const Labels& labels) {
    if (labels.mode == LabelMode::Single) return softmax_cross_entropy(head_logits, labels.classes);
    // Sum of per-tag BCE, mean over rows.
    auto r = sigmoid_bce(head_logits, labels.multi_hot.cast<double>());
    const auto width = static_cast<double>(model.head.out());
    r.loss *= width;
    r.grad *= width;
    return r;
}

LossResult compute_loss(const JmlhModel& model, const Matrix& batch, const Labels& labels, const Matrix& eps,
                        double lambda) {
    if (model.variant == Variant::VAE) return vae_loss(model, batch, eps);
    check_labels(model, labels, batch.rows());
    const Index rows = batch.rows();
    const Index m = model.code_length();

    const EncoderPass pass = encoder_forward(model, batch);
    const Matrix sigmoid_slope = (pass.kappa.array() * (1.0 - pass.kappa.array())).matrix();

    // Bottleneck values seen by the classifier.
    BitMatrix code;
    Matrix head_input;
    if (model.variant == Variant::Cont) {
        head_input = pass.kappa;
    } else {
        require_shape(eps.rows() == rows && eps.cols() == m, "compute_loss: noise must be batch x m");
        code = sample_code(pass.kappa, eps);
        head_input = bits_to_real(code);
    }

    const Matrix head_logits = linear_forward(model.head, head_input);
    const auto cls = head_loss(model, head_logits, labels);
    LayerGrad head_grad = linear_backward(model.head, head_input, cls.grad);

    Matrix grad_logits;
    if (model.variant == Variant::Cont) {
        grad_logits = (head_grad.input.array() * sigmoid_slope.array()).matrix();
    } else {
        grad_logits = bottleneck_backward(model.estimator, head_grad.input, pass.kappa, pass.logits);
    }

    LossResult result;
    result.loss.classification = cls.loss;
    const double inv_rows = rows > 0 ? 1.0 / static_cast<double>(rows) : 0.0;
    if (model.variant == Variant::Full || model.variant == Variant::Cont) {
        const auto kl = kl_to_uniform_prior(pass.kappa, PriorSpec{m, 0.5});
        result.loss.regularizer = kl.value.sum() * inv_rows;
        grad_logits += (lambda * inv_rows) * (kl.grad.array() * sigmoid_slope.array()).matrix();
    } else if (model.variant == Variant::QR) {
        const auto qr = quantization_penalty(pass.kappa, code);
        result.loss.regularizer = qr.value.sum() * inv_rows;
        grad_logits += (lambda * inv_rows) * (qr.grad.array() * sigmoid_slope.array()).matrix();
    }
    result.loss.total = result.loss.classification + lambda * result.loss.regularizer;

    result.grads.encoder = encoder_backward(model, pass, grad_logits);
    head_grad.input.resize(0, 0);
    result.grads.head = std::move(head_grad);
    return result;
}

LossResult vae_loss(const JmlhModel& model, const Matrix& batch, const Matrix& eps) {
    if (model.variant != Variant::VAE) throw ConfigError("vae_loss requires the VAE variant");
    require_shape(model.head.out() == batch.cols(), "vae_loss: decoder width != feature width");
    const Index rows = batch.rows();
    const Index m = model.code_length();
    require_shape(eps.rows() == rows && eps.cols() == m, "vae_loss: noise must be batch x m");

    const EncoderPass pass = encoder_forward(model, batch);
    const BitMatrix code = sample_code(pass.kappa, eps);
    const Matrix head_input = bits_to_real(code);
    const Matrix reconstruction = linear_forward(model.head, head_input);
    const Matrix residual = reconstruction - batch;
    const double inv_rows = rows > 0 ? 1.0 / static_cast<double>(rows) : 0.0;

    LossResult result;
    result.loss.classification = 0.5 * residual.squaredNorm() * inv_rows;
    LayerGrad head_grad = linear_backward(model.head, head_input, residual * inv_rows);
    Matrix grad_logits = bottleneck_backward(model.estimator, head_grad.input, pass.kappa, pass.logits);

    const auto kl = kl_to_uniform_prior(pass.kappa, PriorSpec{m, 0.5});
    result.loss.regularizer = kl.value.sum() * inv_rows;
    grad_logits += inv_rows * (kl.grad.array() * pass.kappa.array() * (1.0 - pass.kappa.array())).matrix();
    result.loss.total = result.loss.classification + result.loss.regularizer;

    result.grads.encoder = encoder_backward(model, pass, grad_logits);
    head_grad.input.resize(0, 0);
    result.grads.head = std::move(head_grad);
    return result;
}

double exact_expected_loss(const JmlhModel& model, const Matrix& batch, const Labels& labels) {
    const Index m = model.code_length();
    if (m > kMaxEnumerationBits) {
        throw CapacityError("exact_expected_loss enumerates 2^m codes; m = " + std::to_string(m) + " exceeds " +
                            std::to_string(kMaxEnumerationBits));
    }
    const bool vae = model.variant == Variant::VAE;
    if (!vae) check_labels(model, labels, batch.rows());

    const Index count = Index(1) << m;
    BitMatrix all_codes(count, m);
    for (Index c = 0; c < count; ++c)
        for (Index j = 0; j < m; ++j) all_codes(c, j) = static_cast<std::uint8_t>((c >> j) & 1);
    const Matrix head_out = linear_forward(model.head, bits_to_real(all_codes));
    const Matrix kappa = encode_probabilities(model, batch);

    double total = 0.0;
    for (Index i = 0; i < batch.rows(); ++i) {
        // Per-code loss for this row's target.
        Vector code_loss(count);
        for (Index c = 0; c < count; ++c) {
            const Matrix out_row = head_out.row(c);
            if (vae) {
                code_loss(c) = 0.5 * (out_row - batch.row(i)).squaredNorm();
            } else {
                code_loss(c) = head_loss(model, out_row, labels.select(std::vector<Index>{i})).loss;
            }
        }
        const Matrix kappa_rows = kappa.row(i).replicate(count, 1);
        const Vector log_q = code_log_prob(kappa_rows, all_codes);
        total += (log_q.array().exp() * code_loss.array()).sum();
    }
    return batch.rows() > 0 ? total / static_cast<double>(batch.rows()) : 0.0;
}

double mutual_information_estimate(const BitMatrix& codes, std::span<const int> labels) {
    if (codes.cols() > 64) {
        throw CapacityError("mutual_information_estimate keys codes by a 64-bit word; m = " +
                            std::to_string(codes.cols()));
    }
    require_shape(static_cast<Index>(labels.size()) == codes.rows(), "mutual_information_estimate: label count");
    if (codes.rows() == 0) return 0.0;
    std::map<std::uint64_t, std::uint64_t> code_counts;
    std::map<int, std::uint64_t> label_counts;
    std::map<std::pair<std::uint64_t, int>, std::uint64_t> joint;
    for (Index i = 0; i < codes.rows(); ++i) {
        std::uint64_t key = 0;
        for (Index j = 0; j < codes.cols(); ++j) key |= static_cast<std::uint64_t>(codes(i, j) & 1) << j;
        const int y = labels[static_cast<std::size_t>(i)];
        ++code_counts[key];
        ++label_counts[y];
        ++joint[{key, y}];
    }
    const auto n = static_cast<double>(codes.rows());
    double mi = 0.0;
    for (const auto& [key, count] : joint) {
        const auto c = static_cast<double>(count);
        const auto cb = static_cast<double>(code_counts[key.first]);
        const auto cy = static_cast<double>(label_counts[key.second]);
        mi += (c / n) * std::log(c * n / (cb * cy));
    }
    return std::max(mi, 0.0);
}

std::vector<Index> parameter_block_sizes(const JmlhModel& model) {
    std::vector<Index> sizes;
    for (const auto& layer : model.encoder) {
        sizes.push_back(layer.weight.size());
        sizes.push_back(layer.bias.size());
    }
    sizes.push_back(model.head.weight.size());
    sizes.push_back(model.head.bias.size());
    return sizes;
}

namespace {

template <typename Dense>
std::span<double> values_of(Dense& d) {
    return {d.data(), static_cast<std::size_t>(d.size())};
}

template <typename Dense>
std::span<const double> values_of(const Dense& d) {
    return {d.data(), static_cast<std::size_t>(d.size())};
}

void add_into(ModelGradients& acc, const ModelGradients& g) {
    for (std::size_t l = 0; l < acc.encoder.size(); ++l) {
        acc.encoder[l].weight += g.encoder[l].weight;
        acc.encoder[l].bias += g.encoder[l].bias;
    }
    acc.head.weight += g.head.weight;
    acc.head.bias += g.head.bias;
}

void scale(ModelGradients& g, double factor) {
    for (auto& lg : g.encoder) {
        lg.weight *= factor;
        lg.bias *= factor;
    }
    g.head.weight *= factor;
    g.head.bias *= factor;
}

}  // namespace

std::vector<ParamView> parameter_views(JmlhModel& model, const ModelGradients& grads) {
    require_shape(grads.encoder.size() == model.encoder.size(), "parameter_views: encoder depth mismatch");
    std::vector<ParamView> views;
    for (std::size_t l = 0; l < model.encoder.size(); ++l) {
        views.push_back({values_of(model.encoder[l].weight), values_of(grads.encoder[l].weight)});
        views.push_back({values_of(model.encoder[l].bias), values_of(grads.encoder[l].bias)});
    }
    views.push_back({values_of(model.head.weight), values_of(grads.head.weight)});
    views.push_back({values_of(model.head.bias), values_of(grads.head.bias)});
    return views;
}

AdamState make_optimizer(const JmlhModel& model, const TrainConfig& config) {
    const auto sizes = parameter_block_sizes(model);
    return AdamState(sizes, config.learning_rate);
}

EpochStats train_epoch(JmlhModel& model, AdamState& optimizer, const Matrix& features, const Labels& labels,
                       const TrainConfig& config, RngStream& rng, const StepCallback& on_step, Index step_budget) {
    if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (config.mc_samples < 1) throw ConfigError("mc_samples must be >= 1");
    if (config.lambda < 0) throw ConfigError("lambda must be >= 0");
    if (model.variant != Variant::VAE) {
        require_shape(labels.size() == features.rows(), "train_epoch: label count != row count");
    }
    const Index n = features.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
    }

    EpochStats stats;
    double weight = 0.0;
    const double inv_mc = 1.0 / static_cast<double>(config.mc_samples);
    for (Index start = 0; start < n; start += config.batch_size) {
        if (step_budget >= 0 && stats.batches >= step_budget) break;
        const Index stop = std::min(n, start + config.batch_size);
        const std::span<const Index> rows(order.data() + start, static_cast<std::size_t>(stop - start));
        const Matrix batch = select_rows(features, rows);
        const Labels batch_labels = model.variant == Variant::VAE ? Labels{} : labels.select(rows);

        LossResult step;
        for (Index s = 0; s < config.mc_samples; ++s) {
            const Matrix eps = draw_noise(rng, batch.rows(), model.code_length());
            LossResult r = compute_loss(model, batch, batch_labels, eps, config.lambda);
            if (s == 0) {
                step = std::move(r);
            } else {
                step.loss.total += r.loss.total;
                step.loss.classification += r.loss.classification;
                step.loss.regularizer += r.loss.regularizer;
                add_into(step.grads, r.grads);
            }
        }
        if (config.mc_samples > 1) {
            step.loss.total *= inv_mc;
            step.loss.classification *= inv_mc;
            step.loss.regularizer *= inv_mc;
            scale(step.grads, inv_mc);
        }
        if (!std::isfinite(step.loss.total)) {
            throw DivergenceError("training diverged: non-finite loss at batch " + std::to_string(stats.batches));
        }
        try {
            const auto views = parameter_views(model, step.grads);
            adam_step(optimizer, views);
        } catch (const DivergenceError& e) {
            throw DivergenceError("training diverged at batch " + std::to_string(stats.batches) + ": " + e.what());
        }
        if (on_step) on_step(optimizer.step, step.loss);

        const auto w = static_cast<double>(stop - start);
        stats.mean.total += w * step.loss.total;
        stats.mean.classification += w * step.loss.classification;
        stats.mean.regularizer += w * step.loss.regularizer;
        weight += w;
        ++stats.batches;
    }
    if (weight > 0) {
        stats.mean.total /= weight;
        stats.mean.classification /= weight;
        stats.mean.regularizer /= weight;
    }
    return stats;
}

TrainSummary train(JmlhModel& model, const Matrix& features, const Labels& labels, const TrainConfig& config,
                   const StepCallback& on_step) {
    TrainSummary summary;
    AdamState optimizer = make_optimizer(model, config);
    RngStream rng(config.seed);
    double best = std::numeric_limits<double>::infinity();
    Index since_best = 0;
    for (Index epoch = 0; epoch < config.epochs; ++epoch) {
        Index budget = -1;
        if (config.max_iters > 0) {
            budget = config.max_iters - static_cast<Index>(optimizer.step);
            if (budget <= 0) break;
        }
        summary.epochs.push_back(train_epoch(model, optimizer, features, labels, config, rng, on_step, budget));
        if (config.patience > 0) {
            const double loss = summary.epochs.back().mean.total;
            if (loss < best - config.min_delta * std::abs(best) || !std::isfinite(best)) {
                best = loss;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                summary.stopped_early = true;
                break;
            }
        }
    }
    summary.steps = optimizer.step;
    return summary;
}

}  // namespace jmlh
