#include <cmath>
#include <vector>

#include "doctest.h"
#include "senca/adam.hpp"
#include "senca/autograd.hpp"
#include "senca/error.hpp"
#include "senca/rng.hpp"
#include "test_util.hpp"

using namespace senca;
using testutil::check_gradient;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, double lo = -2.0, double hi = 2.0) {
    Tensor t(r, c);
    for (size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// Keeps values away from the ELU kink so finite differences stay clean.
Tensor random_tensor_off_kink(Rng& rng, int r, int c) {
    Tensor t(r, c);
    for (size_t i = 0; i < t.size(); ++i) {
        double v = rng.uniform(0.05, 2.0);
        t[i] = rng.uniform() < 0.5 ? v : -v;
    }
    return t;
}

}  // namespace

TEST_CASE("matmul identity and hand product") {
    Tape tape;
    Value eye = tape.constant(Tensor::from_rows({{1, 0}, {0, 1}}));
    Value m = tape.constant(Tensor::from_rows({{1, 2}, {3, 4}}));
    const Tensor& out = tape.value(tape.matmul(eye, m));
    CHECK(out.at(0, 0) == 1);
    CHECK(out.at(0, 1) == 2);
    CHECK(out.at(1, 0) == 3);
    CHECK(out.at(1, 1) == 4);

    Value row = tape.constant(Tensor::from_rows({{1, 2}}));
    Value col = tape.constant(Tensor::from_rows({{3}, {4}}));
    CHECK(tape.value(tape.matmul(row, col)).scalar_value() == 11);
}

TEST_CASE("matmul rejects mismatched shapes naming both") {
    Tape tape;
    Value a = tape.constant(Tensor(2, 3));
    Value b = tape.constant(Tensor(2, 3));
    CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("2x3"), ShapeError);
}

TEST_CASE("matmul gradient matches finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed);
        Tensor a0 = random_tensor(rng, 3, 4);
        Tensor b0 = random_tensor(rng, 4, 2);

        auto loss_of_a = [&](const Tensor& a) {
            Tape t;
            return t.value(t.sum(t.matmul(t.constant(a), t.constant(b0)))).scalar_value();
        };
        Tape tape;
        Value a = tape.param(a0);
        Value b = tape.param(b0);
        Value loss = tape.sum(tape.matmul(a, b));
        tape.backward(loss);
        check_gradient(loss_of_a, a0, tape.grad(a));

        auto loss_of_b = [&](const Tensor& b2) {
            Tape t;
            return t.value(t.sum(t.matmul(t.constant(a0), t.constant(b2)))).scalar_value();
        };
        check_gradient(loss_of_b, b0, tape.grad(b));
    }
}

TEST_CASE("softmax_rows basics") {
    Tape tape;
    const Tensor& uniform = tape.value(tape.softmax_rows(tape.constant(Tensor(1, 2))));
    CHECK(uniform.at(0, 0) == doctest::Approx(0.5));
    CHECK(uniform.at(0, 1) == doctest::Approx(0.5));

    // Max subtraction keeps huge logits finite.
    Tensor big(1, 3);
    big[0] = big[1] = big[2] = 1000.0;
    const Tensor& sat = tape.value(tape.softmax_rows(tape.constant(big)));
    for (int j = 0; j < 3; ++j) CHECK(sat.at(0, j) == doctest::Approx(1.0 / 3));

    const Tensor& pair =
        tape.value(tape.softmax_rows(tape.constant(Tensor::from_rows({{0.0, std::log(3.0)}}))));
    CHECK(pair.at(0, 0) == doctest::Approx(0.25));
    CHECK(pair.at(0, 1) == doctest::Approx(0.75));
}

TEST_CASE("softmax_rows sums to one for extreme magnitudes") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        Tensor x = random_tensor(rng, 4, 6, -1e4, 1e4);
        Tape tape;
        const Tensor& y = tape.value(tape.softmax_rows(tape.constant(x)));
        CHECK(y.all_finite());
        for (int i = 0; i < y.rows(); ++i) {
            double s = 0.0;
            for (int j = 0; j < y.cols(); ++j) {
                s += y.at(i, j);
                CHECK(y.at(i, j) > 0.0);
                CHECK(y.at(i, j) < 1.0 + 1e-12);
            }
            CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("softmax_rows gradient matches finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 100);
        Tensor x0 = random_tensor(rng, 3, 5);
        Tensor w = random_tensor(rng, 3, 5);  // fixed weights make the loss non-trivial
        auto loss_fn = [&](const Tensor& x) {
            Tape t;
            return t.value(t.sum(t.mul(t.softmax_rows(t.constant(x)), t.constant(w))))
                .scalar_value();
        };
        Tape tape;
        Value x = tape.param(x0);
        tape.backward(tape.sum(tape.mul(tape.softmax_rows(x), tape.constant(w))));
        check_gradient(loss_fn, x0, tape.grad(x));
    }
}

TEST_CASE("layer_norm normalizes rows") {
    Tape tape;
    Value gain = tape.constant(Tensor::from_rows({{1, 1}}));
    Value bias = tape.constant(Tensor(1, 2));

    // Constant row: zero variance guard yields zeros.
    const Tensor& flat =
        tape.value(tape.layer_norm(tape.constant(Tensor::from_rows({{3, 3}})), gain, bias));
    CHECK(flat.at(0, 0) == doctest::Approx(0.0));
    CHECK(flat.at(0, 1) == doctest::Approx(0.0));

    const Tensor& two =
        tape.value(tape.layer_norm(tape.constant(Tensor::from_rows({{1, 3}})), gain, bias));
    CHECK(two.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-3));
    CHECK(two.at(0, 1) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("layer_norm row statistics hold for random input") {
    Rng rng(17);
    Tensor x = random_tensor(rng, 6, 32);
    Tape tape;
    Value gain = tape.constant([&] {
        Tensor g(1, 32);
        for (size_t i = 0; i < g.size(); ++i) g[i] = 1.0;
        return g;
    }());
    Value bias = tape.constant(Tensor(1, 32));
    const Tensor& y = tape.value(tape.layer_norm(tape.constant(x), gain, bias));
    for (int i = 0; i < y.rows(); ++i) {
        double mean = 0.0, var = 0.0;
        for (int j = 0; j < y.cols(); ++j) mean += y.at(i, j);
        mean /= y.cols();
        for (int j = 0; j < y.cols(); ++j) var += (y.at(i, j) - mean) * (y.at(i, j) - mean);
        var /= y.cols();
        CHECK(std::fabs(mean) < 1e-5);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    }
}

TEST_CASE("layer_norm gradients match finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 200);
        Tensor x0 = random_tensor(rng, 4, 6);
        Tensor g0 = random_tensor(rng, 1, 6, 0.5, 1.5);
        Tensor b0 = random_tensor(rng, 1, 6, -0.5, 0.5);
        Tensor w = random_tensor(rng, 4, 6);

        auto build = [&](const Tensor& x, const Tensor& g, const Tensor& b) {
            Tape t;
            return t
                .value(t.sum(t.mul(
                    t.layer_norm(t.constant(x), t.constant(g), t.constant(b)), t.constant(w))))
                .scalar_value();
        };
        Tape tape;
        Value x = tape.param(x0);
        Value g = tape.param(g0);
        Value b = tape.param(b0);
        tape.backward(tape.sum(tape.mul(tape.layer_norm(x, g, b), tape.constant(w))));

        check_gradient([&](const Tensor& t) { return build(t, g0, b0); }, x0, tape.grad(x));
        check_gradient([&](const Tensor& t) { return build(x0, t, b0); }, g0, tape.grad(g));
        check_gradient([&](const Tensor& t) { return build(x0, g0, t); }, b0, tape.grad(b));
    }
}

TEST_CASE("dropout identity cases") {
    Rng rng(3);
    Tensor x = random_tensor(rng, 5, 7);
    Tape tape;
    Value in = tape.constant(x);

    Value train_p0 = tape.dropout(in, 0.0, 123, true);
    CHECK(tape.value(train_p0).data() == tape.value(in).data());  // exact identity

    Value eval = tape.dropout(in, 0.2, 123, false);
    CHECK(tape.value(eval).data() == tape.value(in).data());

    CHECK_THROWS_AS(tape.dropout(in, 1.0, 1, true), ParamError);
    CHECK_THROWS_AS(tape.dropout(in, -0.1, 1, true), ParamError);
}

TEST_CASE("dropout preserves expectation and reproduces masks from the seed") {
    Tensor ones(100, 100);
    for (size_t i = 0; i < ones.size(); ++i) ones[i] = 1.0;

    Tape tape;
    Value in = tape.constant(ones);
    const Tensor& a = tape.value(tape.dropout(in, 0.5, 77, true));
    double mean = 0.0;
    for (size_t i = 0; i < a.size(); ++i) mean += a[i];
    mean /= static_cast<double>(a.size());
    CHECK(std::fabs(mean - 1.0) < 0.05);

    // Same seed, same mask; output = input .* mask / (1-p).
    const Tensor& b = tape.value(tape.dropout(in, 0.5, 77, true));
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK((a[i] == 0.0 || a[i] == 2.0));
    }
}

TEST_CASE("dropout gradient with a fixed mask matches finite differences") {
    Rng rng(5);
    Tensor x0 = random_tensor(rng, 4, 5);
    auto loss_fn = [&](const Tensor& x) {
        Tape t;
        return t.value(t.sum(t.dropout(t.constant(x), 0.3, 99, true))).scalar_value();
    };
    Tape tape;
    Value x = tape.param(x0);
    tape.backward(tape.sum(tape.dropout(x, 0.3, 99, true)));
    check_gradient(loss_fn, x0, tape.grad(x));
}

TEST_CASE("elu values and gradient") {
    Tape tape;
    Tensor in = Tensor::from_rows({{0.0, 1.0, -1.0}});
    const Tensor& out = tape.value(tape.elu(tape.constant(in)));
    CHECK(out.at(0, 0) == 0.0);
    CHECK(out.at(0, 1) == 1.0);
    CHECK(out.at(0, 2) == doctest::Approx(std::expm1(-1.0)));

    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 300);
        Tensor x0 = random_tensor_off_kink(rng, 3, 4);
        auto loss_fn = [](const Tensor& x) {
            Tape t;
            return t.value(t.sum(t.elu(t.constant(x)))).scalar_value();
        };
        Tape tape2;
        Value x = tape2.param(x0);
        tape2.backward(tape2.sum(tape2.elu(x)));
        check_gradient(loss_fn, x0, tape2.grad(x));
    }
}

TEST_CASE("mse basics and gradient") {
    Rng rng(6);
    Tensor x = random_tensor(rng, 3, 3);
    Tape tape;
    CHECK(tape.value(tape.mse(tape.constant(x), tape.constant(x))).scalar_value() == 0.0);

    Value bad = tape.constant(Tensor(2, 2));
    CHECK_THROWS_AS(tape.mse(tape.constant(x), bad), ShapeError);

    Tensor a0 = random_tensor(rng, 4, 3);
    Tensor b0 = random_tensor(rng, 4, 3);
    auto loss_a = [&](const Tensor& a) {
        Tape t;
        return t.value(t.mse(t.constant(a), t.constant(b0))).scalar_value();
    };
    auto loss_b = [&](const Tensor& b) {
        Tape t;
        return t.value(t.mse(t.constant(a0), t.constant(b))).scalar_value();
    };
    Tape tape2;
    Value a = tape2.param(a0);
    Value b = tape2.param(b0);
    tape2.backward(tape2.mse(a, b));
    check_gradient(loss_a, a0, tape2.grad(a));
    check_gradient(loss_b, b0, tape2.grad(b));
}

TEST_CASE("structural ops gradients match finite differences") {
    for (uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 400);
        Tensor x0 = random_tensor(rng, 5, 4);
        Tensor w5 = random_tensor(rng, 5, 4);
        Tensor w3 = random_tensor(rng, 3, 4);
        Tensor w1 = random_tensor(rng, 5, 1);

        struct NamedCase {
            const char* name;
            std::function<Value(Tape&, Value)> apply;
            const Tensor* weights;
        };
        RowMix mix;
        mix.entries = {{{0, 0.5}, {1, 0.5}},
                       {{1, 1.0}},
                       {{2, 0.25}, {3, 0.25}, {4, 0.5}},
                       {{0, 0.2}, {4, 0.8}},
                       {{3, 1.0}}};
        std::vector<NamedCase> cases = {
            {"gather", [](Tape& t, Value v) { return t.gather_rows(v, {4, 0, 2}); }, &w3},
            {"pool",
             [](Tape& t, Value v) {
                 return t.mean_rows_by_group(v, {{0, 1}, {2, 3, 4}, {1}});
             },
             &w3},
            {"row_mix", [&mix](Tape& t, Value v) { return t.row_mix(v, mix); }, &w5},
            {"l2norm", [](Tape& t, Value v) { return t.l2_normalize_rows(v); }, &w5},
            {"logsumexp", [](Tape& t, Value v) { return t.logsumexp_rows(v); }, &w1},
            {"row_sums", [](Tape& t, Value v) { return t.row_sums(v); }, &w1},
        };
        for (auto& c : cases) {
            INFO("op: ", c.name);
            const Tensor* w = c.weights;
            auto loss_fn = [&](const Tensor& x) {
                Tape t;
                Value out = c.apply(t, t.constant(x));
                // Weighted sum keeps per-entry gradients distinct.
                return t.value(t.sum(t.mul(out, t.constant(*w)))).scalar_value();
            };
            Tape tape;
            Value x = tape.param(x0);
            Value out = c.apply(tape, x);
            tape.backward(tape.sum(tape.mul(out, tape.constant(*w))));
            check_gradient(loss_fn, x0, tape.grad(x));
        }
    }
}

TEST_CASE("concat and add_row gradients") {
    Rng rng(8);
    Tensor a0 = random_tensor(rng, 2, 3);
    Tensor b0 = random_tensor(rng, 4, 3);
    Tensor w = random_tensor(rng, 6, 3);
    auto loss_a = [&](const Tensor& a) {
        Tape t;
        Value out = t.concat_rows({t.constant(a), t.constant(b0)});
        return t.value(t.sum(t.mul(out, t.constant(w)))).scalar_value();
    };
    Tape tape;
    Value a = tape.param(a0);
    Value b = tape.param(b0);
    tape.backward(tape.sum(tape.mul(tape.concat_rows({a, b}), tape.constant(w))));
    check_gradient(loss_a, a0, tape.grad(a));

    Tensor c0 = random_tensor(rng, 4, 2);
    Tensor w2 = random_tensor(rng, 4, 5);
    auto loss_cc = [&](const Tensor& c) {
        Tape t;
        Value out = t.concat_cols(t.constant(b0), t.constant(c));
        return t.value(t.sum(t.mul(out, t.constant(w2)))).scalar_value();
    };
    Tape tape2;
    Value b2 = tape2.param(b0);
    Value c = tape2.param(c0);
    tape2.backward(tape2.sum(tape2.mul(tape2.concat_cols(b2, c), tape2.constant(w2))));
    check_gradient(loss_cc, c0, tape2.grad(c));

    Tensor bias0 = random_tensor(rng, 1, 3);
    Tensor w3 = random_tensor(rng, 4, 3);
    auto loss_bias = [&](const Tensor& bias) {
        Tape t;
        Value out = t.add_row(t.constant(b0), t.constant(bias));
        return t.value(t.sum(t.mul(out, t.constant(w3)))).scalar_value();
    };
    Tape tape3;
    Value b3 = tape3.param(b0);
    Value bias = tape3.param(bias0);
    tape3.backward(tape3.sum(tape3.mul(tape3.add_row(b3, bias), tape3.constant(w3))));
    check_gradient(loss_bias, bias0, tape3.grad(bias));
}

TEST_CASE("non-participating tensors keep zero gradients") {
    Tape tape;
    Value used = tape.param(Tensor::from_rows({{1, 2}}));
    Value unused = tape.param(Tensor::from_rows({{5, 6}}));
    tape.backward(tape.sum(used));
    Tensor g = tape.grad(unused);
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(0, 1) == 0.0);
    Tensor gu = tape.grad(used);
    CHECK(gu.at(0, 0) == 1.0);
}

TEST_CASE("forward ops keep finite inputs finite") {
    Rng rng(21);
    Tensor x = random_tensor(rng, 6, 6, -1e4, 1e4);
    Tape tape;
    Value v = tape.constant(x);
    CHECK(tape.value(tape.softmax_rows(v)).all_finite());
    CHECK(tape.value(tape.elu(v)).all_finite());
    CHECK(tape.value(tape.l2_normalize_rows(v)).all_finite());
    CHECK(tape.value(tape.logsumexp_rows(v)).all_finite());
    Value gain = tape.constant([&] {
        Tensor g(1, 6);
        for (size_t i = 0; i < g.size(); ++i) g[i] = 1.0;
        return g;
    }());
    CHECK(tape.value(tape.layer_norm(v, gain, tape.constant(Tensor(1, 6)))).all_finite());
}

TEST_CASE("adam first step moves by lr against the gradient sign") {
    for (double g : {0.5, -1.25}) {
        Tensor p = Tensor::scalar(1.0);
        std::vector<Tensor*> params = {&p};
        AdamState adam(params, AdamConfig{});
        std::vector<Tensor> grads = {Tensor::scalar(g)};
        adam.step(params, grads);
        double delta = p[0] - 1.0;
        // First bias-corrected step: lr * g / (|g| + eps)
        double expected = -5e-4 * g / (std::fabs(g) + 1e-8);
        CHECK(delta == doctest::Approx(expected).epsilon(1e-9));
        CHECK(adam.step_count() == 1);
    }
}

TEST_CASE("adam moments track the configured decay") {
    Tensor p = Tensor::scalar(0.0);
    std::vector<Tensor*> params = {&p};
    AdamState adam(params, AdamConfig{});
    adam.step(params, {Tensor::scalar(1.0)});
    adam.step(params, {Tensor::scalar(1.0)});
    CHECK(adam.step_count() == 2);
    CHECK(adam.first_moment(0)[0] == doctest::Approx(0.1 * 0.9 + 0.1));
}
