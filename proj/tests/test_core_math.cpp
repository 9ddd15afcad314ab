#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "jmlh/core_math.hpp"
#include "oracles.hpp"

using namespace jmlh;

TEST_CASE("linear_forward: identity and hand sum") {
    LinearLayer<double> id(2, 2);
    id.weight = Matrix::Identity(2, 2);
    Matrix x(1, 2);
    x << 3, 4;
    CHECK(linear_forward(id, x) == x);

    LinearLayer<double> sum(2, 1);
    sum.weight << 1, 1;
    sum.bias << 1;
    Matrix y(1, 2);
    y << 2, 3;
    CHECK(linear_forward(sum, y)(0, 0) == 6.0);
}

TEST_CASE("linear_forward matches a naive triple loop") {
    RngStream rng(7);
    LinearLayer<double> layer(3, 4);
    init_uniform(layer, rng);
    layer.bias = oracle::random_matrix(rng, 4, 1);
    const Matrix x = oracle::random_matrix(rng, 5, 3);
    const Matrix expected = oracle::naive_linear(layer.weight, layer.bias, x);
    CHECK((linear_forward(layer, x) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("linear_forward rejects a width mismatch") {
    LinearLayer<double> layer(3, 2);
    CHECK_THROWS_AS(linear_forward(layer, Matrix::Zero(1, 4)), DimensionError);
    CHECK_THROWS_AS(linear_backward(layer, Matrix::Zero(1, 3), Matrix::Zero(1, 3)), DimensionError);
}

TEST_CASE("linear_backward: zero upstream and scalar chain rule") {
    RngStream rng(1);
    LinearLayer<double> layer(3, 2);
    init_uniform(layer, rng);
    const auto g0 = linear_backward(layer, oracle::random_matrix(rng, 4, 3), Matrix::Zero(4, 2));
    CHECK(g0.weight.isZero(0));
    CHECK(g0.bias.isZero(0));
    CHECK(g0.input.isZero(0));

    LinearLayer<double> s(1, 1);
    s.weight(0, 0) = 2.0;
    const auto g = linear_backward(s, Matrix::Constant(1, 1, 3.0), Matrix::Constant(1, 1, 1.0));
    CHECK(g.weight(0, 0) == 3.0);
    CHECK(g.bias(0) == 1.0);
    CHECK(g.input(0, 0) == 2.0);
}

TEST_CASE("linear_backward with one-hot upstream recovers weight rows exactly") {
    RngStream rng(3);
    LinearLayer<double> layer(4, 3);
    init_uniform(layer, rng);
    for (Index o = 0; o < 3; ++o) {
        Matrix up = Matrix::Zero(1, 3);
        up(0, o) = 1.0;
        const auto g = linear_backward(layer, Matrix::Zero(1, 4), up);
        CHECK(g.input.row(0) == layer.weight.row(o));
    }
}

TEST_CASE("linear_backward matches finite differences") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RngStream rng(seed);
        const Index in = 2 + static_cast<Index>(rng.below(4));
        const Index out = 1 + static_cast<Index>(rng.below(4));
        const Index batch = 1 + static_cast<Index>(rng.below(5));
        LinearLayer<double> layer(in, out);
        init_uniform(layer, rng);
        layer.bias = oracle::random_matrix(rng, out, 1);
        Matrix x = oracle::random_matrix(rng, batch, in);
        const Matrix up = oracle::random_matrix(rng, batch, out);
        auto f = [&] { return (linear_forward(layer, x).array() * up.array()).sum(); };
        const auto g = linear_backward(layer, x, up);
        CHECK(oracle::max_relative_error(g.weight, oracle::finite_difference(f, layer.weight.data(), out, in)) <= 1e-6);
        CHECK(oracle::max_relative_error(g.bias, oracle::finite_difference(f, layer.bias.data(), out, 1)) <= 1e-6);
        CHECK(oracle::max_relative_error(g.input, oracle::finite_difference(f, x.data(), batch, in)) <= 1e-6);
    }
}

TEST_CASE("softmax_cross_entropy: uniform, saturated and label errors") {
    const std::vector<int> zero{0};
    const auto uniform = softmax_cross_entropy(Matrix::Zero(1, 2), zero);
    CHECK(uniform.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Matrix sat(1, 2);
    sat << 1000, -1000;
    const auto s = softmax_cross_entropy(sat, zero);
    CHECK(std::isfinite(s.loss));
    CHECK(s.loss == doctest::Approx(0.0));
    CHECK(all_finite(s.grad));

    const std::vector<int> bad{2};
    CHECK_THROWS_AS(softmax_cross_entropy(Matrix::Zero(1, 2), bad), LabelError);
}

TEST_CASE("softmax_cross_entropy gradient matches finite differences") {
    RngStream rng(11);
    Matrix logits = oracle::random_matrix(rng, 4, 5, 3.0);
    const std::vector<int> labels{0, 4, 2, 2};
    auto f = [&] { return softmax_cross_entropy(logits, labels).loss; };
    const auto r = softmax_cross_entropy(logits, labels);
    CHECK(oracle::max_relative_error(r.grad, oracle::finite_difference(f, logits.data(), 4, 5)) <= 1e-6);
}

TEST_CASE("sigmoid_bce: hand values, saturation, gradient") {
    CHECK(sigmoid_bce(Matrix::Zero(1, 1), Matrix::Ones(1, 1)).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    const auto sat = sigmoid_bce(Matrix::Constant(1, 1, 1000.0), Matrix::Ones(1, 1));
    CHECK(sat.loss == doctest::Approx(0.0));
    CHECK(all_finite(sat.grad));
    CHECK_THROWS_AS(sigmoid_bce(Matrix::Zero(1, 2), Matrix::Zero(2, 1)), DimensionError);

    RngStream rng(5);
    Matrix logits = oracle::random_matrix(rng, 3, 4, 4.0);
    Matrix targets(3, 4);
    for (Index k = 0; k < targets.size(); ++k) targets.data()[k] = static_cast<double>(rng.below(2));
    auto f = [&] { return sigmoid_bce(logits, targets).loss; };
    const auto r = sigmoid_bce(logits, targets);
    CHECK(oracle::max_relative_error(r.grad, oracle::finite_difference(f, logits.data(), 3, 4)) <= 1e-6);
}

TEST_CASE("relu forward/backward") {
    Matrix x(1, 3);
    x << -1, 0, 2;
    Matrix expected(1, 3);
    expected << 0, 0, 2;
    CHECK(relu(x) == expected);

    const Matrix neg = -Matrix::Ones(2, 3);
    CHECK(relu(neg).isZero(0));
    CHECK(relu_backward(neg, Matrix::Ones(2, 3)).isZero(0));

    RngStream rng(9);
    Matrix in = oracle::random_matrix(rng, 3, 4);
    for (Index k = 0; k < in.size(); ++k)
        if (std::abs(in.data()[k]) < 1e-3) in.data()[k] = 0.5;  // keep away from the kink
    const Matrix up = oracle::random_matrix(rng, 3, 4);
    auto f = [&] { return (relu(in).array() * up.array()).sum(); };
    CHECK(oracle::max_relative_error(relu_backward(in, up), oracle::finite_difference(f, in.data(), 3, 4)) <= 1e-6);
}

TEST_CASE("adam_step: zero gradient on zero moments is the identity") {
    for (std::uint64_t steps : {0ULL, 1ULL, 37ULL}) {
        std::vector<Index> sizes{3};
        AdamState st(sizes, 0.1);
        st.step = steps;
        std::vector<double> w{1.0, -2.0, 0.5};
        const auto before = w;
        const std::vector<double> g(3, 0.0);
        const ParamView view{w, g};
        adam_step(st, std::span<const ParamView>(&view, 1));
        CHECK(w == before);
    }
}

TEST_CASE("adam_step: first step moves by the learning rate") {
    std::vector<Index> sizes{1};
    AdamState st(sizes, 0.01);
    std::vector<double> w{0.0};
    const std::vector<double> g{1.0};
    const ParamView view{w, g};
    adam_step(st, std::span<const ParamView>(&view, 1));
    CHECK(st.step == 1);
    CHECK(w[0] == doctest::Approx(-0.01).epsilon(1e-6));
}

TEST_CASE("adam_step rejects non-finite gradients and shape mismatch") {
    std::vector<Index> sizes{2};
    AdamState st(sizes, 0.01);
    std::vector<double> w{0.0, 0.0};
    const std::vector<double> g{1.0, std::nan("")};
    const ParamView view{w, g};
    CHECK_THROWS_AS(adam_step(st, std::span<const ParamView>(&view, 1)), DivergenceError);
    CHECK(st.step == 0);

    std::vector<double> w3{0.0, 0.0, 0.0};
    const std::vector<double> g3{0.0, 0.0, 0.0};
    const ParamView bad{w3, g3};
    CHECK_THROWS_AS(adam_step(st, std::span<const ParamView>(&bad, 1)), DimensionError);
}

TEST_CASE("adam on w^2 follows the scalar recurrence") {
    // Independent scalar recurrence.
    std::vector<double> expected;
    {
        double w = 1.0, m = 0.0, v = 0.0;
        for (int t = 1; t <= 100; ++t) {
            const double g = 2.0 * w;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            w -= 0.1 * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.999, t))) + 1e-8);
            expected.push_back(w);
        }
    }
    std::vector<Index> sizes{1};
    AdamState st(sizes, 0.1);
    std::vector<double> w{1.0};
    std::vector<double> trace;
    for (int t = 0; t < 100; ++t) {
        const std::vector<double> g{2.0 * w[0]};
        const ParamView view{w, g};
        adam_step(st, std::span<const ParamView>(&view, 1));
        trace.push_back(w[0]);
    }
    for (std::size_t t = 0; t < trace.size(); ++t) CHECK(trace[t] == doctest::Approx(expected[t]).epsilon(1e-12));

    // Straight descent until the first overshoot, then an oscillation whose envelope shrinks.
    for (std::size_t t = 1; t < 10; ++t) CHECK(std::abs(trace[t]) < std::abs(trace[t - 1]));
    CHECK(std::abs(trace[9]) < 0.1);
    auto envelope = [&](std::size_t from, std::size_t to) {
        double e = 0.0;
        for (std::size_t t = from; t < to; ++t) e = std::max(e, std::abs(trace[t]));
        return e;
    };
    CHECK(envelope(10, 40) > envelope(40, 70));
    CHECK(envelope(40, 70) > envelope(70, 100));
    CHECK(std::abs(trace.back()) < 0.01);
}

TEST_CASE("rng stream is reproducible and uniform draws lie in [0,1)") {
    RngStream a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.uniform();
        CHECK(x == b.uniform());
        differs |= x != c.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
    }
    CHECK(differs);
    for (int i = 0; i < 1000; ++i) CHECK(a.below(7) < 7);
}
