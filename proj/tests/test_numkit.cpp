#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "hlt/errors.hpp"
#include "hlt/numkit/adam.hpp"
#include "hlt/numkit/mlp.hpp"
#include "hlt/numkit/ppo.hpp"
#include "hlt/numkit/sampling.hpp"
#include "hlt/numkit/tensor_io.hpp"
#include "support/dual_clip_oracle.hpp"
#include "support/finite_diff.hpp"

using namespace hlt;
using namespace hlt::num;

namespace {

Mlp random_mlp(std::vector<std::size_t> dims, Activation act, Rng& rng) {
    std::vector<Activation> acts(dims.size() - 1, act);
    acts.back() = Activation::identity;
    return Mlp::random(dims, acts, rng);
}

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng) {
    Tensor t(std::move(shape));
    for (double& x : t.data()) x = 2.0 * uniform01(rng) - 1.0;
    return t;
}

// Straight-line forward pass: per-row dot products, no shared code with mlp.cpp.
std::vector<double> naive_forward(const Mlp& mlp, std::vector<double> x) {
    for (const auto& layer : mlp.layers()) {
        std::vector<double> y(layer.out_dim());
        for (std::size_t o = 0; o < layer.out_dim(); ++o) {
            double z = layer.bias[o];
            for (std::size_t i = 0; i < layer.in_dim(); ++i) z += layer.weight.at(o, i) * x[i];
            if (layer.activation == Activation::relu) z = std::max(0.0, z);
            if (layer.activation == Activation::tanh) z = std::tanh(z);
            y[o] = z;
        }
        x = std::move(y);
    }
    return x;
}

// Scalar objective sum_k c_k * y_k so grad_output == c.
double weighted_output(const Mlp& mlp, const Tensor& input, std::span<const double> c) {
    const auto y = mlp_predict(mlp, input);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += c[i] * y[i];
    return s;
}

}  // namespace

TEST_SUITE("tensor") {
    TEST_CASE("shape product must match data length") {
        CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
        Tensor t({2, 3});
        CHECK(t.size() == 6);
        CHECK(t.dim(1) == 3);
        CHECK_THROWS_AS(t.dim(2), DimensionError);
    }

    TEST_CASE("non-finite values are reported") {
        Tensor t = Tensor::vector({1.0, std::nan("")});
        CHECK_FALSE(t.all_finite());
        CHECK_THROWS_AS(t.require_finite("t"), NumericError);
    }

    TEST_CASE("binary layout header") {
        std::ostringstream out;
        write_tensor(out, Tensor::matrix(2, 1, {1.0, -2.5}), DType::f64);
        const std::string bytes = out.str();
        REQUIRE(bytes.size() == 4 + 1 + 1 + 2 * 4 + 2 * 8);
        CHECK(bytes.substr(0, 4) == "HLTT");
        CHECK(bytes[4] == 1);
        CHECK(bytes[5] == 2);
        CHECK(static_cast<unsigned char>(bytes[6]) == 2);
        CHECK(static_cast<unsigned char>(bytes[10]) == 1);
    }

    TEST_CASE("f64 round-trips bit-exactly, f32 rounds to float") {
        Rng rng = derive_rng({7});
        for (int trial = 0; trial < 20; ++trial) {
            const auto t = random_tensor({1 + rng() % 4, 1 + rng() % 5}, rng);
            std::stringstream s64;
            write_tensor(s64, t, DType::f64);
            CHECK(read_tensor(s64) == t);
            std::stringstream s32;
            write_tensor(s32, t, DType::f32);
            const auto back = read_tensor(s32);
            REQUIRE(back.shape() == t.shape());
            for (std::size_t i = 0; i < t.size(); ++i) CHECK(back[i] == static_cast<double>(static_cast<float>(t[i])));
        }
    }

    TEST_CASE("corrupt headers are rejected") {
        std::stringstream bad("XLTT\x01\x00");
        CHECK_THROWS_AS(read_tensor(bad), CorruptArtifactError);
        std::ostringstream out;
        write_tensor(out, Tensor::vector({1.0, 2.0}), DType::f64);
        std::stringstream truncated(out.str().substr(0, out.str().size() - 3));
        CHECK_THROWS_AS(read_tensor(truncated), CorruptArtifactError);
        std::string wrong_dtype = out.str();
        wrong_dtype[4] = 9;
        std::stringstream wd(wrong_dtype);
        CHECK_THROWS_AS(read_tensor(wd), CorruptArtifactError);
    }
}

TEST_SUITE("mlp_forward") {
    TEST_CASE("identity weights pass the input through") {
        Mlp mlp({DenseLayer{Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor({2}), Activation::identity}});
        const auto out = mlp_forward(mlp, Tensor::vector({1.0, 2.0})).output;
        CHECK(out == Tensor::vector({1.0, 2.0}));
    }

    TEST_CASE("zero weights return the bias") {
        Mlp mlp({DenseLayer{Tensor({1, 4}), Tensor::vector({3.0}), Activation::identity}});
        CHECK(mlp_predict(mlp, Tensor::vector({5, -1, 2, 9}))[0] == 3.0);
    }

    TEST_CASE("random two-layer net matches a straight-line reimplementation") {
        Rng rng = derive_rng({11});
        for (int trial = 0; trial < 25; ++trial) {
            const auto mlp = random_mlp({5, 7, 3}, trial % 2 ? Activation::relu : Activation::tanh, rng);
            const auto x = random_tensor({5}, rng);
            const auto expected = naive_forward(mlp, {x.data().begin(), x.data().end()});
            const auto got = mlp_forward(mlp, x).output;
            for (std::size_t i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        }
    }

    TEST_CASE("batched rows equal single-row evaluation") {
        Rng rng = derive_rng({12});
        const auto mlp = random_mlp({4, 6, 2}, Activation::tanh, rng);
        const auto batch = random_tensor({3, 4}, rng);
        const auto out = mlp_predict(mlp, batch);
        for (std::size_t b = 0; b < 3; ++b) {
            Tensor row = Tensor::vector({batch.at(b, 0), batch.at(b, 1), batch.at(b, 2), batch.at(b, 3)});
            const auto single = mlp_predict(mlp, row);
            CHECK(single[0] == out.at(b, 0));
            CHECK(single[1] == out.at(b, 1));
        }
    }

    TEST_CASE("dimension and chaining errors") {
        Rng rng = derive_rng({13});
        const auto mlp = random_mlp({3, 4, 2}, Activation::tanh, rng);
        CHECK_THROWS_AS(mlp_forward(mlp, Tensor({4})), DimensionError);
        CHECK_THROWS_AS(Mlp({DenseLayer{Tensor({4, 3}), Tensor({4}), Activation::tanh},
                             DenseLayer{Tensor({2, 5}), Tensor({2}), Activation::identity}}),
                        DimensionError);
        CHECK_THROWS_AS(mlp_forward(mlp, Tensor::vector({1.0, std::nan(""), 0.0})), NumericError);
    }
}

TEST_SUITE("mlp_backward") {
    TEST_CASE("linear layer closed form") {
        Mlp mlp({DenseLayer{Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6}), Tensor::vector({0.5, -0.5}),
                            Activation::identity}});
        const auto x = Tensor::vector({1.0, -1.0, 2.0});
        const auto fwd = mlp_forward(mlp, x);
        const auto g = Tensor::vector({0.3, -2.0});
        const auto back = mlp_backward(mlp, fwd.cache, g);
        for (std::size_t o = 0; o < 2; ++o) {
            for (std::size_t i = 0; i < 3; ++i) CHECK(back.grads.weight[0].at(o, i) == doctest::Approx(g[o] * x[i]));
            CHECK(back.grads.bias[0][o] == doctest::Approx(g[o]));
        }
        // grad_input = W^T g
        CHECK(back.grad_input[0] == doctest::Approx(1 * 0.3 + 4 * -2.0));
        CHECK(back.grad_input[2] == doctest::Approx(3 * 0.3 + 6 * -2.0));
    }

    TEST_CASE("dead relu passes no gradient") {
        Mlp mlp({DenseLayer{Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({-10.0, -10.0}), Activation::relu}});
        const auto fwd = mlp_forward(mlp, Tensor::vector({1.0, 2.0}));
        const auto back = mlp_backward(mlp, fwd.cache, Tensor::vector({1.0, 1.0}));
        CHECK(back.grad_input == Tensor::vector({0.0, 0.0}));
    }

    TEST_CASE("stale cache is rejected") {
        Rng rng = derive_rng({14});
        auto mlp = random_mlp({3, 4, 2}, Activation::tanh, rng);
        const auto fwd = mlp_forward(mlp, random_tensor({3}, rng));
        mlp.mutable_layers()[0].bias[0] += 1.0;
        CHECK_THROWS_AS(mlp_backward(mlp, fwd.cache, Tensor::vector({1.0, 1.0})), ConsistencyError);
    }

    TEST_CASE("random three-layer nets pass central differences") {
        Rng rng = derive_rng({15});
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            auto mlp = random_mlp({4, 6, 5, 3}, Activation::tanh, rng);
            const std::size_t batch = 1 + trial % 3;
            const auto x = random_tensor({batch, 4}, rng);
            auto c = random_tensor({batch, 3}, rng);
            const auto fwd = mlp_forward(mlp, x);
            const auto back = mlp_backward(mlp, fwd.cache, c);
            auto params = mlp.parameters();
            const auto grads = back.grads.spans();
            for (std::size_t k = 0; k < params.size(); ++k) {
                const auto fd = testing::central_difference(params[k], [&] { return weighted_output(mlp, x, c.data()); });
                worst = std::max(worst, testing::relative_error(fd, grads[k]));
            }
            auto xin = x;
            const auto fd_in =
                testing::central_difference(xin.data(), [&] { return weighted_output(mlp, xin, c.data()); });
            worst = std::max(worst, testing::relative_error(fd_in, back.grad_input.data()));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_SUITE("adam") {
    TEST_CASE("zero gradient leaves parameters and advances t") {
        std::vector<double> p{1.0, -2.0};
        std::vector<double> g{0.0, 0.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        auto state = AdamState::for_parameters(ps);
        adam_step(state, ps, gs);
        CHECK(state.t == 1);
        CHECK(p == std::vector<double>{1.0, -2.0});
    }

    TEST_CASE("first step moves by lr against the gradient sign") {
        std::vector<double> p{0.0, 0.0, 0.0};
        std::vector<double> g{0.5, -3.0, 1e-3};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        auto state = AdamState::for_parameters(ps, {.lr = 0.01});
        adam_step(state, ps, gs);
        CHECK(p[0] == doctest::Approx(-0.01).epsilon(1e-6));
        CHECK(p[1] == doctest::Approx(0.01).epsilon(1e-6));
        CHECK(p[2] == doctest::Approx(-0.01).epsilon(1e-4));
    }

    TEST_CASE("x squared from 5 follows the scalar reference run") {
        // Reference trajectory from an independent scalar Adam script: |x|
        // shrinks monotonically through step 87, then oscillates around 0.
        std::vector<double> x{5.0};
        std::vector<double> g{0.0};
        std::vector<std::span<double>> ps{x};
        std::vector<std::span<const double>> gs{g};
        auto state = AdamState::for_parameters(ps, {.lr = 0.1});
        double previous = std::abs(x[0]);
        for (int step = 1; step <= 100; ++step) {
            g[0] = 2.0 * x[0];
            adam_step(state, ps, gs);
            if (step <= 87) {
                CHECK(std::abs(x[0]) < previous);
            }
            previous = std::abs(x[0]);
            if (step == 10) CHECK(x[0] == doctest::Approx(4.007601621083933).epsilon(1e-12));
            if (step == 50) CHECK(x[0] == doctest::Approx(0.9011191043660974).epsilon(1e-12));
        }
        CHECK(state.t == 100);
        CHECK(x[0] == doctest::Approx(-0.03900403122391936).epsilon(1e-9));
    }

    TEST_CASE("shape mismatch") {
        std::vector<double> p{1.0};
        std::vector<double> g{1.0, 2.0};
        std::vector<std::span<double>> ps{p};
        std::vector<std::span<const double>> gs{g};
        auto state = AdamState::for_parameters(ps);
        CHECK_THROWS_AS(adam_step(state, ps, gs), DimensionError);
    }

    TEST_CASE("global norm clipping") {
        std::vector<double> a{3.0}, b{4.0};
        std::vector<std::span<double>> gs{a, b};
        CHECK(clip_global_norm(gs, 1.0) == doctest::Approx(5.0));
        CHECK(a[0] == doctest::Approx(0.6));
        CHECK(b[0] == doctest::Approx(0.8));
    }
}

TEST_SUITE("dual_clip_ppo_loss") {
    TEST_CASE("stated examples") {
        for (double a : {-2.0, -0.5, 0.0, 0.7, 3.0}) {
            const auto t = dual_clip_ppo_loss(1.0, a, 0.2, 3.0);
            CHECK(t.loss == doctest::Approx(-a));
            CHECK(t.grad_ratio == doctest::Approx(-a));
        }
        auto upper = dual_clip_ppo_loss(2.0, 1.0, 0.2, 3.0);
        CHECK(upper.loss == doctest::Approx(-1.2));
        CHECK(upper.grad_ratio == 0.0);
        auto dual = dual_clip_ppo_loss(5.0, -1.0, 0.2, 3.0);
        CHECK(dual.loss == doctest::Approx(3.0));
        CHECK(dual.grad_ratio == 0.0);
    }

    TEST_CASE("matches the piecewise oracle on a grid covering all five pieces") {
        const auto grid = testing::dual_clip_grid();
        CHECK(grid.points > 1000);
        CHECK(grid.loss_mismatches == 0);
        CHECK(grid.grad_mismatches == 0);
        for (int k = 0; k < 5; ++k) CHECK(grid.pieces[k] > 0);
    }

    TEST_CASE("reduces to clipped PPO as dual_c grows") {
        for (double r = 0.0; r <= 4.0; r += 0.05) {
            for (double a : {-1.5, -0.2}) {
                const double standard = -std::min(r * a, std::clamp(r, 0.8, 1.2) * a);
                CHECK(dual_clip_ppo_loss(r, a, 0.2, 1e9).loss == doctest::Approx(standard));
            }
        }
    }

    TEST_CASE("invalid inputs") {
        CHECK_THROWS_AS(dual_clip_ppo_loss(std::nan(""), 1.0, 0.2, 3.0), NumericError);
        CHECK_THROWS_AS(dual_clip_ppo_loss(1.0, 1.0, 1.2, 3.0), std::invalid_argument);
        CHECK_THROWS_AS(dual_clip_ppo_loss(1.0, 1.0, 0.2, 0.5), std::invalid_argument);
    }
}

TEST_SUITE("gae_advantages") {
    TEST_CASE("lambda zero with zero values returns rewards") {
        const std::vector<double> r{1.0, -2.0, 0.5};
        const std::vector<double> v(3, 0.0);
        const auto est = gae_advantages(r, v, 0.0, 0.9, 0.0);
        CHECK(est.advantages == r);
    }

    TEST_CASE("lambda one, gamma one, zero values gives suffix sums") {
        const std::vector<double> r{1.0, -2.0, 0.5, 4.0};
        const std::vector<double> v(4, 0.0);
        const auto est = gae_advantages(r, v, 0.0, 1.0, 1.0);
        CHECK(est.advantages == std::vector<double>{3.5, 2.5, 4.5, 4.0});
    }

    TEST_CASE("five-step episode matches the explicit discounted-delta sum") {
        // Frozen from sum_k (gamma*lambda)^k delta_{t+k}, evaluated independently.
        const std::vector<double> r{1.0, 0.0, -0.5, 2.0, 1.0};
        const std::vector<double> v{0.5, 0.2, 0.1, 0.7, 0.3};
        const auto est = gae_advantages(r, v, 0.0, 0.99, 0.95);
        const double expected_adv[] = {2.5615201988436693, 1.9814143528375001, 2.214156675, 2.25535, 0.7};
        const double expected_ret[] = {3.0615201988436693, 2.1814143528375003, 2.314156675, 2.95535, 1.0};
        for (std::size_t t = 0; t < 5; ++t) {
            CHECK(est.advantages[t] == doctest::Approx(expected_adv[t]).epsilon(1e-12));
            CHECK(est.returns[t] == doctest::Approx(expected_ret[t]).epsilon(1e-12));
        }
    }

    TEST_CASE("length mismatch") {
        const std::vector<double> r{1.0};
        const std::vector<double> v{0.0, 0.0};
        CHECK_THROWS_AS(gae_advantages(r, v, 0.0, 0.9, 0.9), DimensionError);
    }
}

TEST_SUITE("categorical_sample") {
    TEST_CASE("uniform logits over four unmasked entries") {
        Rng rng = derive_rng({21});
        const std::vector<double> logits(6, 0.5);
        const ActionMask mask{1, 0, 1, 1, 0, 1};
        int counts[6] = {};
        const int n = 100000;
        for (int i = 0; i < n; ++i) ++counts[categorical_sample(logits, mask, rng).action];
        CHECK(counts[1] == 0);
        CHECK(counts[4] == 0);
        for (int k : {0, 2, 3, 5}) CHECK(std::abs(counts[k] / double(n) - 0.25) < 0.01);
    }

    TEST_CASE("single unmasked entry has log-prob zero") {
        Rng rng = derive_rng({22});
        const auto draw = categorical_sample(std::vector<double>{3.0, -1.0, 2.0}, ActionMask{0, 1, 0}, rng);
        CHECK(draw.action == 1);
        CHECK(draw.log_prob == 0.0);
    }

    TEST_CASE("softmax of [0, ln 3]") {
        Rng rng = derive_rng({23});
        const std::vector<double> logits{0.0, std::log(3.0)};
        const ActionMask mask{1, 1};
        int ones = 0;
        const int n = 100000;
        for (int i = 0; i < n; ++i) {
            const auto d = categorical_sample(logits, mask, rng);
            ones += static_cast<int>(d.action);
            CHECK(d.log_prob == doctest::Approx(std::log(d.action ? 0.75 : 0.25)));
        }
        CHECK(std::abs(ones / double(n) - 0.75) < 0.01);
    }

    TEST_CASE("all masked") {
        Rng rng = derive_rng({24});
        CHECK_THROWS_AS(categorical_sample(std::vector<double>{1.0, 2.0}, ActionMask{0, 0}, rng), NoLegalActionError);
    }

    TEST_CASE("same seed gives identical draws") {
        Rng a = derive_rng({5, 9});
        Rng b = derive_rng({5, 9});
        Rng c = derive_rng({5, 10});
        const std::vector<double> logits{0.1, 0.7, -0.2, 1.3};
        const ActionMask mask{1, 1, 1, 1};
        bool differs = false;
        for (int i = 0; i < 200; ++i) {
            const auto da = categorical_sample(logits, mask, a);
            const auto db = categorical_sample(logits, mask, b);
            const auto dc = categorical_sample(logits, mask, c);
            CHECK(da.action == db.action);
            CHECK(da.log_prob == db.log_prob);
            differs = differs || dc.action != da.action;
        }
        CHECK(differs);
    }
}

TEST_SUITE("ppo_sample_loss") {
    TEST_CASE("logit gradient matches central differences") {
        Rng rng = derive_rng({31});
        const PpoCoefficients coeff{.clip_eps = 0.2, .dual_c = 3.0, .entropy_coef = 0.05};
        double worst = 0.0;
        for (int trial = 0; trial < 200; ++trial) {
            auto logits = random_tensor({6}, rng);
            ActionMask mask(6, 1);
            mask[rng() % 6] = 0;
            std::size_t action = rng() % 6;
            while (!mask[action]) action = (action + 1) % 6;
            const double old_lp = std::log(0.05 + 0.9 * uniform01(rng));
            const double adv = 4.0 * uniform01(rng) - 2.0;
            const auto out = ppo_sample_loss(logits.data(), mask, action, old_lp, adv, coeff);
            // Skip instances sitting within FD reach of a clip boundary.
            const double r = out.ratio;
            if (std::abs(r - 0.8) < 1e-3 || std::abs(r - 1.2) < 1e-3 || std::abs(r - 3.0) < 1e-3) continue;
            const auto fd = testing::central_difference(logits.data(), [&] {
                return ppo_sample_loss(logits.data(), mask, action, old_lp, adv, coeff).loss;
            });
            worst = std::max(worst, testing::relative_error(fd, out.grad_logits));
        }
        CHECK(worst < 1e-4);
    }
}
