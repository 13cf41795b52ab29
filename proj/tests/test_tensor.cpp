#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msaf/ops.hpp"
#include "msaf/tensor.hpp"

using namespace msaf;

TEST_CASE("factories and basic accessors") {
    TensorF z = TensorF::zeros({2, 3});
    CHECK(z.rank() == 2);
    CHECK(z.numel() == 6);
    CHECK(z.dim(1) == 3);
    for (float v : z.values()) CHECK(v == 0.0f);

    TensorF f = TensorF::full({4}, 2.5f);
    for (float v : f.values()) CHECK(v == 2.5f);

    CHECK_THROWS_WITH_AS(TensorF::from({2, 2}, {1.0f, 2.0f}), doctest::Contains("value count"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS((void)z.item(), doctest::Contains("not a scalar"),
                         std::invalid_argument);

    Rng rng{42};
    TensorF r = TensorF::randu({100}, rng, -1.0f, 1.0f);
    for (float v : r.values()) {
        CHECK(v >= -1.0f);
        CHECK(v < 1.0f);
    }
}

TEST_CASE("tensor consumed twice accumulates both contributions") {
    TensorD x = TensorD::from({3}, {1.0, -2.0, 3.0}, true);
    TensorD l = sum(add(x, x));
    backward(l);
    for (double g : x.grad()) CHECK(g == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("same tensor on both sides of hadamard") {
    TensorD x = TensorD::from({3}, {1.5, -0.5, 2.0}, true);
    TensorD l = sum(hadamard(x, x));
    backward(l);
    CHECK(x.grad()[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(x.grad()[1] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(x.grad()[2] == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("diamond graph sums both branch gradients") {
    TensorD x = TensorD::from({2}, {0.5, -0.75}, true);
    TensorD l = sum(add(relu(x), sigmoid(x)));
    backward(l);
    for (int i = 0; i < 2; ++i) {
        double v = x.values()[(size_t)i];
        double s = 1.0 / (1.0 + std::exp(-v));
        double expect = (v > 0 ? 1.0 : 0.0) + s * (1.0 - s);
        CHECK(x.grad()[(size_t)i] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("backward twice on one graph is an error") {
    TensorD x = TensorD::from({2}, {1.0, 2.0}, true);
    TensorD l = sum(x);
    backward(l);
    CHECK_THROWS_WITH_AS(backward(l), doctest::Contains("already ran"), std::invalid_argument);
}

TEST_CASE("backward requires a scalar root") {
    TensorD x = TensorD::from({2}, {1.0, 2.0}, true);
    TensorD y = add(x, x);
    CHECK_THROWS_WITH_AS(backward(y), doctest::Contains("scalar"), std::invalid_argument);
}

TEST_CASE("backward on a detached value is an error") {
    TensorD x = TensorD::from({1}, {1.0});
    TensorD l = sum(x); // nothing requires grad, so no node is recorded
    CHECK_THROWS_WITH_AS(backward(l), doctest::Contains("does not require grad"),
                         std::invalid_argument);
}

TEST_CASE("leaf gradients accumulate across graphs until zero_grad") {
    TensorD x = TensorD::from({2}, {1.0, 2.0}, true);
    backward(sum(x));
    backward(sum(scalar_mul(x, 2.0)));
    for (double g : x.grad()) CHECK(g == doctest::Approx(3.0).epsilon(1e-12));
    x.zero_grad();
    for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("NoGradGuard suppresses graph recording") {
    TensorD x = TensorD::from({2}, {1.0, -1.0}, true);
    TensorD y;
    {
        NoGradGuard ng;
        y = relu(x);
    }
    CHECK(y.is_leaf());
    CHECK(!y.requires_grad());
    TensorD z = relu(x); // recording is restored after the guard
    CHECK(!z.is_leaf());
}

TEST_CASE("detach copies values and severs the graph") {
    TensorD x = TensorD::from({2}, {3.0, 4.0}, true);
    TensorD y = scalar_mul(x, 2.0);
    TensorD d = y.detach();
    CHECK(d.is_leaf());
    CHECK(!d.requires_grad());
    CHECK(d.values()[0] == 6.0);
    d.values()[0] = 99.0;
    CHECK(y.values()[0] == 6.0);
}

TEST_CASE("branches that do not reach the root get no gradient") {
    TensorD x = TensorD::from({2}, {1.0, 2.0}, true);
    TensorD unused = sigmoid(x);
    (void)unused;
    backward(sum(x));
    for (double g : x.grad()) CHECK(g == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("grad access before any backward is an error") {
    TensorD x = TensorD::from({2}, {1.0, 2.0}, true);
    CHECK(!x.has_grad());
    CHECK_THROWS_WITH_AS((void)x.grad(), doctest::Contains("no gradient"),
                         std::invalid_argument);
}

TEST_CASE("requires_grad can only be set on leaves") {
    TensorD x = TensorD::from({2}, {1.0, 2.0}, true);
    TensorD y = relu(x);
    CHECK_THROWS_WITH_AS(y.set_requires_grad(true), doctest::Contains("leaf"),
                         std::invalid_argument);
}

TEST_CASE("long chain keeps one gradient per edge") {
    // f(x) = 2*(2*(2*x)) -> df/dx = 8
    TensorD x = TensorD::from({1}, {5.0}, true);
    TensorD y = scalar_mul(scalar_mul(scalar_mul(x, 2.0), 2.0), 2.0);
    backward(y);
    CHECK(x.grad()[0] == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("rng is reproducible and splitmix64 reference values hold") {
    // first outputs of splitmix64 seeded with 1234567
    Rng a{1234567};
    Rng b{1234567};
    for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng c{0};
    CHECK(c.next_u64() == 0xe220a8397b1dcdafull);
    CHECK(c.next_u64() == 0x6e789e6aa1b965f4ull);
    CHECK(c.next_u64() == 0x06c45d188009454full);
}

TEST_CASE("fnv1a64 reference values") {
    const char* s = "hello";
    CHECK(fnv1a64(s, 5) == 0xa430d84680aabd0bull);
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ull);
}
