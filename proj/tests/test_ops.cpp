#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <cstring>

#include "msaf/kernels.hpp"
#include "msaf/ops.hpp"
#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace msaf;
using support::gradcheck;

namespace {

template <typename T>
bool bitwise_equal(const std::vector<T>& a, const std::vector<T>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0;
}

struct BackendGuard {
    kern::Backend prev;
    explicit BackendGuard(kern::Backend b) : prev(kern::backend()) { kern::set_backend(b); }
    ~BackendGuard() { kern::set_backend(prev); }
};

template <typename T>
std::vector<T> random_vec(size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = (T)rng.uniform(lo, hi);
    return v;
}

} // namespace

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

TEST_CASE("conv3d hand-computed 1d case") {
    // x = [1,2,3], w = [4,5,6], bias 0.5, pad 1 on W only
    TensorD x = TensorD::from({1, 1, 1, 1, 3}, {1, 2, 3});
    TensorD w = TensorD::from({1, 1, 1, 1, 3}, {4, 5, 6});
    TensorD b = TensorD::from({1}, {0.5});
    TensorD y = conv3d(x, w, b, {1, 1, 1}, {0, 0, 1});
    REQUIRE(y.shape() == Shape{1, 1, 1, 1, 3});
    CHECK(y.values()[0] == doctest::Approx(17.5).epsilon(1e-12));
    CHECK(y.values()[1] == doctest::Approx(32.5).epsilon(1e-12));
    CHECK(y.values()[2] == doctest::Approx(23.5).epsilon(1e-12));
}

TEST_CASE("conv3d matches the naive oracle over assorted configs") {
    struct Cfg {
        int64_t n, cin, ti, hi, wi, cout, kt, kh, kw, st, sh, sw, pt, ph, pw;
    };
    const Cfg cfgs[] = {
        {1, 1, 3, 5, 5, 2, 3, 3, 3, 1, 1, 1, 1, 1, 1},
        {2, 3, 4, 6, 5, 4, 3, 3, 3, 1, 2, 2, 1, 1, 1},
        {1, 2, 5, 7, 7, 3, 1, 3, 3, 1, 1, 1, 0, 1, 1},
        {2, 4, 1, 8, 8, 2, 1, 5, 5, 1, 3, 3, 0, 2, 2},
        {1, 1, 6, 4, 4, 1, 3, 1, 1, 2, 1, 1, 1, 0, 0},
    };
    Rng rng{7};
    for (const auto& c : cfgs) {
        CAPTURE(c.n); CAPTURE(c.cin); CAPTURE(c.kt); CAPTURE(c.st);
        auto xv = random_vec<double>((size_t)(c.n * c.cin * c.ti * c.hi * c.wi), rng);
        auto wv = random_vec<double>((size_t)(c.cout * c.cin * c.kt * c.kh * c.kw), rng);
        auto bv = random_vec<double>((size_t)c.cout, rng);
        TensorD x = TensorD::from({c.n, c.cin, c.ti, c.hi, c.wi}, xv);
        TensorD w = TensorD::from({c.cout, c.cin, c.kt, c.kh, c.kw}, wv);
        TensorD b = TensorD::from({c.cout}, bv);
        TensorD y = conv3d(x, w, b, {c.st, c.sh, c.sw}, {c.pt, c.ph, c.pw});
        auto want = oracle::conv3d(xv, wv, bv, c.n, c.cin, c.ti, c.hi, c.wi, c.cout, c.kt, c.kh,
                                   c.kw, c.st, c.sh, c.sw, c.pt, c.ph, c.pw);
        REQUIRE((size_t)y.numel() == want.size());
        for (size_t i = 0; i < want.size(); ++i)
            CHECK(y.values()[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv3d serial and openmp backends are bit-identical") {
    Rng rng{11};
    kern::Conv3dDims d;
    d.n = 2; d.cin = 3; d.ti = 4; d.hi = 7; d.wi = 6;
    d.cout = 5; d.kt = 3; d.kh = 3; d.kw = 3;
    d.st = 1; d.sh = 2; d.sw = 1;
    d.pt = 1; d.ph = 1; d.pw = 1;
    d.to = (d.ti + 2 * d.pt - d.kt) / d.st + 1;
    d.ho = (d.hi + 2 * d.ph - d.kh) / d.sh + 1;
    d.wo = (d.wi + 2 * d.pw - d.kw) / d.sw + 1;

    auto x = random_vec<float>((size_t)(d.n * d.cin * d.ti * d.hi * d.wi), rng);
    auto w = random_vec<float>((size_t)(d.cout * d.cin * d.kt * d.kh * d.kw), rng);
    auto b = random_vec<float>((size_t)d.cout, rng);
    size_t on = (size_t)(d.n * d.cout * d.to * d.ho * d.wo);
    auto gy = random_vec<float>(on, rng);

    std::vector<float> ys(on), gxs(x.size(), 0), gws(w.size(), 0), gbs(b.size(), 0);
    {
        BackendGuard g(kern::Backend::serial);
        kern::conv3d_fwd(x.data(), w.data(), b.data(), ys.data(), d);
        kern::conv3d_bwd_data(gy.data(), w.data(), gxs.data(), d);
        kern::conv3d_bwd_filter(gy.data(), x.data(), gws.data(), gbs.data(), d);
    }
    for (int threads : {1, 2, 4}) {
        CAPTURE(threads);
        omp_set_num_threads(threads);
        std::vector<float> yo(on), gxo(x.size(), 0), gwo(w.size(), 0), gbo(b.size(), 0);
        BackendGuard g(kern::Backend::openmp);
        kern::conv3d_fwd(x.data(), w.data(), b.data(), yo.data(), d);
        kern::conv3d_bwd_data(gy.data(), w.data(), gxo.data(), d);
        kern::conv3d_bwd_filter(gy.data(), x.data(), gwo.data(), gbo.data(), d);
        CHECK(bitwise_equal(ys, yo));
        CHECK(bitwise_equal(gxs, gxo));
        CHECK(bitwise_equal(gws, gwo));
        CHECK(bitwise_equal(gbs, gbo));
    }
}

TEST_CASE("conv3d gradients pass a finite-difference check") {
    Rng rng{13};
    auto xv = random_vec<double>(1 * 2 * 2 * 4 * 4, rng);
    auto wv = random_vec<double>(3 * 2 * 2 * 3 * 3, rng);
    auto bv = random_vec<double>(3, rng);
    TensorD x = TensorD::from({1, 2, 2, 4, 4}, xv);
    TensorD w = TensorD::from({3, 2, 2, 3, 3}, wv);
    TensorD b = TensorD::from({3}, bv);
    auto res = gradcheck([&] { return sum(conv3d(x, w, b, {1, 2, 2}, {1, 1, 1})); }, {x, w, b});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("conv2d agrees with a single-frame conv3d bitwise") {
    Rng rng{17};
    auto xv = random_vec<float>(2 * 3 * 5 * 5, rng);
    auto wv = random_vec<float>(4 * 3 * 3 * 3, rng);
    auto bv = random_vec<float>(4, rng);
    TensorF x2 = TensorF::from({2, 3, 5, 5}, xv);
    TensorF w2 = TensorF::from({4, 3, 3, 3}, wv);
    TensorF x3 = TensorF::from({2, 3, 1, 5, 5}, xv);
    TensorF w3 = TensorF::from({4, 3, 1, 3, 3}, wv);
    TensorF b = TensorF::from({4}, bv);
    TensorF y2 = conv2d(x2, w2, b, 1);
    TensorF y3 = conv3d(x3, w3, b, {1, 1, 1}, {0, 1, 1});
    REQUIRE(y2.numel() == y3.numel());
    CHECK(bitwise_equal(y2.values(), y3.values()));
}

TEST_CASE("conv2d gradients pass a finite-difference check") {
    Rng rng{19};
    auto xv = random_vec<double>(2 * 2 * 4 * 4, rng);
    auto wv = random_vec<double>(3 * 2 * 3 * 3, rng);
    auto bv = random_vec<double>(3, rng);
    TensorD x = TensorD::from({2, 2, 4, 4}, xv);
    TensorD w = TensorD::from({3, 2, 3, 3}, wv);
    TensorD b = TensorD::from({3}, bv);
    auto res = gradcheck([&] { return sum(sigmoid(conv2d(x, w, b, 1))); }, {x, w, b});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("conv3d rejects malformed inputs") {
    TensorF x = TensorF::zeros({1, 3, 2, 4, 4});
    TensorF w = TensorF::zeros({2, 4, 1, 3, 3}); // 4 != 3 input channels
    TensorF b = TensorF::zeros({2});
    CHECK_THROWS_WITH_AS(conv3d(x, w, b), doctest::Contains("input channels"),
                         std::invalid_argument);
    TensorF w2 = TensorF::zeros({2, 3, 1, 3, 3});
    TensorF b2 = TensorF::zeros({3});
    CHECK_THROWS_WITH_AS(conv3d(x, w2, b2), doctest::Contains("bias"), std::invalid_argument);
    TensorF xs = TensorF::zeros({1, 3, 2, 1, 1});
    CHECK_THROWS_WITH_AS(conv3d(xs, w2, b, {1, 1, 1}, {0, 0, 0}),
                         doctest::Contains("empty output"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// pooling / upsampling
// ---------------------------------------------------------------------------

TEST_CASE("maxpool3d hand case with backward scatter") {
    TensorD x = TensorD::from({1, 1, 1, 2, 4}, {1, 5, 2, 8, 3, 3, 9, 0}, true);
    TensorD y = maxpool3d(x, {1, 2, 2}, {1, 2, 2});
    REQUIRE(y.shape() == Shape{1, 1, 1, 1, 2});
    CHECK(y.values()[0] == 5.0);
    CHECK(y.values()[1] == 9.0);

    TensorD w = TensorD::from({1, 1, 1, 1, 2}, {10, 20});
    backward(sum(hadamard(y, w)));
    const std::vector<double> want = {0, 10, 0, 0, 0, 0, 20, 0};
    for (size_t i = 0; i < want.size(); ++i) CHECK(x.grad()[i] == want[i]);
}

TEST_CASE("maxpool3d ties go to the first element in scan order") {
    TensorD x = TensorD::from({1, 1, 1, 2, 2}, {7, 7, 7, 7}, true);
    TensorD y = maxpool3d(x, {1, 2, 2}, {1, 2, 2});
    CHECK(y.values()[0] == 7.0);
    backward(sum(y));
    CHECK(x.grad()[0] == 1.0);
    CHECK(x.grad()[1] == 0.0);
    CHECK(x.grad()[2] == 0.0);
    CHECK(x.grad()[3] == 0.0);
}

TEST_CASE("maxpool3d matches the naive oracle") {
    Rng rng{23};
    int64_t n = 2, c = 3, ti = 4, hi = 6, wi = 6;
    auto xv = random_vec<double>((size_t)(n * c * ti * hi * wi), rng);
    TensorD x = TensorD::from({n, c, ti, hi, wi}, xv);
    TensorD y = maxpool3d(x, {1, 2, 2}, {1, 2, 2});
    auto want = oracle::maxpool3d(xv, n, c, ti, hi, wi, 1, 2, 2, 1, 2, 2);
    REQUIRE((size_t)y.numel() == want.size());
    for (size_t i = 0; i < want.size(); ++i) CHECK(y.values()[i] == want[i]);

    // a temporal window too
    TensorD y2 = maxpool3d(x, {2, 2, 2}, {2, 2, 2});
    auto want2 = oracle::maxpool3d(xv, n, c, ti, hi, wi, 2, 2, 2, 2, 2, 2);
    REQUIRE((size_t)y2.numel() == want2.size());
    for (size_t i = 0; i < want2.size(); ++i) CHECK(y2.values()[i] == want2[i]);
}

TEST_CASE("maxpool3d gradients pass a finite-difference check") {
    // values spaced well apart so the argmax never flips under the probe step
    std::vector<double> xv(1 * 2 * 2 * 4 * 4);
    Rng rng{29};
    std::vector<int> order(xv.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = (int)i;
    rng.shuffle(order.begin(), order.end());
    for (size_t i = 0; i < xv.size(); ++i) xv[i] = 0.05 * order[i];
    TensorD x = TensorD::from({1, 2, 2, 4, 4}, xv);
    auto res = gradcheck([&] { return sum(maxpool3d(x, {1, 2, 2}, {1, 2, 2})); }, {x});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("maxpool3d serial and openmp are bit-identical") {
    Rng rng{31};
    kern::Pool3dDims d;
    d.n = 2; d.c = 2; d.ti = 4; d.hi = 6; d.wi = 6;
    d.kt = 1; d.kh = 2; d.kw = 2;
    d.st = 1; d.sh = 2; d.sw = 2;
    d.to = (d.ti - d.kt) / d.st + 1;
    d.ho = (d.hi - d.kh) / d.sh + 1;
    d.wo = (d.wi - d.kw) / d.sw + 1;
    auto x = random_vec<float>((size_t)(d.n * d.c * d.ti * d.hi * d.wi), rng);
    size_t on = (size_t)(d.n * d.c * d.to * d.ho * d.wo);

    std::vector<float> ys(on), yo(on);
    std::vector<int64_t> is(on), io(on);
    {
        BackendGuard g(kern::Backend::serial);
        kern::maxpool3d_fwd(x.data(), ys.data(), is.data(), d);
    }
    omp_set_num_threads(3);
    {
        BackendGuard g(kern::Backend::openmp);
        kern::maxpool3d_fwd(x.data(), yo.data(), io.data(), d);
    }
    CHECK(bitwise_equal(ys, yo));
    CHECK(is == io);
}

TEST_CASE("upsample2x hand case and oracle") {
    TensorD x = TensorD::from({1, 1, 1, 2}, {3, 7}, true);
    TensorD y = upsample2x(x);
    REQUIRE(y.shape() == Shape{1, 1, 2, 4});
    const std::vector<double> want = {3, 3, 7, 7, 3, 3, 7, 7};
    CHECK(y.values() == want);
    backward(sum(y));
    CHECK(x.grad()[0] == 4.0);
    CHECK(x.grad()[1] == 4.0);

    Rng rng{37};
    auto xv = random_vec<double>(2 * 3 * 4 * 5, rng);
    TensorD x2 = TensorD::from({2, 3, 4, 5}, xv);
    TensorD y2 = upsample2x(x2);
    auto want2 = oracle::upsample2x(xv, 2 * 3, 4, 5);
    CHECK(y2.values() == want2);
}

TEST_CASE("upsample2x gradients pass a finite-difference check") {
    Rng rng{41};
    auto xv = random_vec<double>(1 * 2 * 3 * 3, rng);
    TensorD x = TensorD::from({1, 2, 3, 3}, xv);
    auto res = gradcheck([&] { return sum(tanh(upsample2x(x))); }, {x});
    CHECK_MESSAGE(res.ok, res.where);
}

// ---------------------------------------------------------------------------
// batch norm
// ---------------------------------------------------------------------------

TEST_CASE("batchnorm2d hand case in training mode") {
    TensorD x = TensorD::from({2, 1, 1, 1}, {1, 3});
    TensorD gamma = TensorD::from({1}, {2});
    TensorD beta = TensorD::from({1}, {10});
    TensorD rm = TensorD::zeros({1});
    TensorD rv = TensorD::full({1}, 1.0);
    double eps = 1e-5;
    TensorD y = batchnorm2d(x, gamma, beta, rm, rv, true, 0.1, eps);
    // mean 2, biased var 1
    double istd = 1.0 / std::sqrt(1.0 + eps);
    CHECK(y.values()[0] == doctest::Approx(10.0 - 2.0 * istd).epsilon(1e-12));
    CHECK(y.values()[1] == doctest::Approx(10.0 + 2.0 * istd).epsilon(1e-12));
    CHECK(rm.values()[0] == doctest::Approx(0.9 * 0.0 + 0.1 * 2.0).epsilon(1e-12));
    CHECK(rv.values()[0] == doctest::Approx(0.9 * 1.0 + 0.1 * 1.0).epsilon(1e-12));
}

TEST_CASE("batchnorm3d matches the naive oracle in training mode") {
    Rng rng{43};
    int64_t n = 2, c = 4, t = 3, h = 4, w = 4;
    auto xv = random_vec<double>((size_t)(n * c * t * h * w), rng);
    auto gv = random_vec<double>((size_t)c, rng, 0.5, 1.5);
    auto bv = random_vec<double>((size_t)c, rng);
    TensorD x = TensorD::from({n, c, t, h, w}, xv);
    TensorD gamma = TensorD::from({c}, gv);
    TensorD beta = TensorD::from({c}, bv);
    TensorD rm = TensorD::zeros({c});
    TensorD rv = TensorD::full({c}, 1.0);
    TensorD y = batchnorm3d(x, gamma, beta, rm, rv, true);
    auto want = oracle::bn_train(xv, gv, bv, n, c, t * h * w, 1e-5);
    for (size_t i = 0; i < want.size(); ++i)
        CHECK(y.values()[i] == doctest::Approx(want[i]).epsilon(1e-10));
}

TEST_CASE("batchnorm eval mode uses running statistics and is stateless") {
    Rng rng{47};
    int64_t n = 2, c = 3, h = 4, w = 4;
    auto xv = random_vec<double>((size_t)(n * c * h * w), rng);
    TensorD x = TensorD::from({n, c, h, w}, xv);
    TensorD gamma = TensorD::from({c}, {1.0, 2.0, 0.5});
    TensorD beta = TensorD::from({c}, {0.0, -1.0, 3.0});
    TensorD rm = TensorD::from({c}, {0.1, -0.2, 0.3});
    TensorD rv = TensorD::from({c}, {1.0, 0.5, 2.0});
    auto rm0 = rm.values();
    auto rv0 = rv.values();
    TensorD y = batchnorm2d(x, gamma, beta, rm, rv, false);
    CHECK(rm.values() == rm0);
    CHECK(rv.values() == rv0);
    for (int64_t in = 0; in < n; ++in)
        for (int64_t ch = 0; ch < c; ++ch)
            for (int64_t j = 0; j < h * w; ++j) {
                size_t at = (size_t)((in * c + ch) * h * w + j);
                double want = (xv[at] - rm0[(size_t)ch]) / std::sqrt(rv0[(size_t)ch] + 1e-5) *
                                  gamma.values()[(size_t)ch] +
                              beta.values()[(size_t)ch];
                CHECK(y.values()[at] == doctest::Approx(want).epsilon(1e-10));
            }
}

TEST_CASE("batchnorm train-mode gradients pass a finite-difference check") {
    Rng rng{53};
    int64_t n = 2, c = 2, t = 2, h = 3, w = 3;
    auto xv = random_vec<double>((size_t)(n * c * t * h * w), rng);
    TensorD x = TensorD::from({n, c, t, h, w}, xv);
    TensorD gamma = TensorD::from({c}, {1.3, 0.7});
    TensorD beta = TensorD::from({c}, {0.2, -0.4});
    auto res = gradcheck(
        [&] {
            // fresh running stats per evaluation: the loss must not depend on
            // state mutated by previous finite-difference probes
            TensorD rm = TensorD::zeros({c});
            TensorD rv = TensorD::full({c}, 1.0);
            return sum(sigmoid(batchnorm3d(x, gamma, beta, rm, rv, true)));
        },
        {x, gamma, beta});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("batchnorm eval-mode gradients pass a finite-difference check") {
    Rng rng{59};
    int64_t n = 2, c = 2, h = 3, w = 3;
    auto xv = random_vec<double>((size_t)(n * c * h * w), rng);
    TensorD x = TensorD::from({n, c, h, w}, xv);
    TensorD gamma = TensorD::from({c}, {1.1, 0.9});
    TensorD beta = TensorD::from({c}, {0.5, -0.5});
    TensorD rm = TensorD::from({c}, {0.2, -0.1});
    TensorD rv = TensorD::from({c}, {1.5, 0.8});
    auto res = gradcheck(
        [&] { return sum(tanh(batchnorm2d(x, gamma, beta, rm, rv, false))); }, {x, gamma, beta});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("batchnorm rejects training on a single element per channel") {
    TensorF x = TensorF::zeros({1, 2, 1, 1});
    TensorF gamma = TensorF::full({2}, 1.0f);
    TensorF beta = TensorF::zeros({2});
    TensorF rm = TensorF::zeros({2});
    TensorF rv = TensorF::full({2}, 1.0f);
    CHECK_THROWS_WITH_AS(batchnorm2d(x, gamma, beta, rm, rv, true),
                         doctest::Contains("more than one element"), std::invalid_argument);
}

TEST_CASE("batchnorm backends are bit-identical") {
    Rng rng{61};
    int64_t n = 2, c = 3, m = 25;
    auto x = random_vec<float>((size_t)(n * c * m), rng);
    auto gamma = random_vec<float>((size_t)c, rng, 0.5, 1.5);
    auto beta = random_vec<float>((size_t)c, rng);
    auto gy = random_vec<float>((size_t)(n * c * m), rng);

    auto run = [&](kern::Backend be, std::vector<float>& y, std::vector<float>& gx,
                   std::vector<float>& gg, std::vector<float>& gb) {
        BackendGuard g(be);
        std::vector<float> rm((size_t)c, 0), rv((size_t)c, 1), mean((size_t)c), istd((size_t)c);
        y.assign((size_t)(n * c * m), 0);
        gx.assign((size_t)(n * c * m), 0);
        gg.assign((size_t)c, 0);
        gb.assign((size_t)c, 0);
        kern::bn_train_fwd(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                           istd.data(), rm.data(), rv.data(), 0.1f, 1e-5f, n, c, m);
        kern::bn_train_bwd(gy.data(), x.data(), gamma.data(), mean.data(), istd.data(), gx.data(),
                           gg.data(), gb.data(), n, c, m);
    };
    std::vector<float> ys, gxs, ggs, gbs, yo, gxo, ggo, gbo;
    run(kern::Backend::serial, ys, gxs, ggs, gbs);
    omp_set_num_threads(4);
    run(kern::Backend::openmp, yo, gxo, ggo, gbo);
    CHECK(bitwise_equal(ys, yo));
    CHECK(bitwise_equal(gxs, gxo));
    CHECK(bitwise_equal(ggs, ggo));
    CHECK(bitwise_equal(gbs, gbo));
}

// ---------------------------------------------------------------------------
// elementwise and layout ops
// ---------------------------------------------------------------------------

TEST_CASE("elementwise gradients pass finite-difference checks") {
    Rng rng{67};
    auto av = random_vec<double>(24, rng);
    auto bv = random_vec<double>(24, rng);
    TensorD a = TensorD::from({2, 3, 4}, av);
    TensorD b = TensorD::from({2, 3, 4}, bv);

    SUBCASE("add") {
        auto res = gradcheck([&] { return sum(hadamard(add(a, b), add(a, b))); }, {a, b});
        CHECK_MESSAGE(res.ok, res.where);
    }
    SUBCASE("hadamard") {
        auto res = gradcheck([&] { return sum(hadamard(a, b)); }, {a, b});
        CHECK_MESSAGE(res.ok, res.where);
    }
    SUBCASE("scalar ops") {
        auto res = gradcheck(
            [&] { return sum(hadamard(scalar_mul(a, 3.0), scalar_add(a, 0.5))); }, {a});
        CHECK_MESSAGE(res.ok, res.where);
    }
    SUBCASE("sigmoid") {
        auto res = gradcheck([&] { return sum(sigmoid(a)); }, {a});
        CHECK_MESSAGE(res.ok, res.where);
    }
    SUBCASE("tanh") {
        auto res = gradcheck([&] { return sum(tanh(a)); }, {a});
        CHECK_MESSAGE(res.ok, res.where);
    }
    SUBCASE("relu away from the kink") {
        std::vector<double> rv(24);
        for (size_t i = 0; i < rv.size(); ++i) {
            double mag = rng.uniform(0.1, 1.0);
            rv[i] = (rng.next_u64() & 1) ? mag : -mag;
        }
        TensorD r = TensorD::from({24}, rv);
        auto res = gradcheck([&] { return sum(relu(r)); }, {r});
        CHECK_MESSAGE(res.ok, res.where);
    }
}

TEST_CASE("sigmoid is stable at extreme inputs") {
    TensorF x = TensorF::from({4}, {-100.0f, -30.0f, 30.0f, 100.0f});
    TensorF y = sigmoid(x);
    CHECK(y.values()[0] < 1e-40f); // exp(-100) underflows to a denormal, not inf/nan
    CHECK(y.values()[1] == doctest::Approx(0.0f).epsilon(1e-12));
    CHECK(y.values()[2] == doctest::Approx(1.0f).epsilon(1e-12));
    CHECK(y.values()[3] == 1.0f);
    for (float v : y.values()) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("add and hadamard reject shape mismatches") {
    TensorF a = TensorF::zeros({2, 3});
    TensorF b = TensorF::zeros({3, 2});
    CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("shape mismatch"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(hadamard(a, b), doctest::Contains("shape mismatch"),
                         std::invalid_argument);
}

TEST_CASE("select0 and time_slice index the expected blocks") {
    // x[n][t] = 100n + t over [2,3,1,1,2] with the pair duplicated on W
    std::vector<double> xv;
    for (int n = 0; n < 2; ++n)
        for (int t = 0; t < 3; ++t) {
            xv.push_back(100.0 * n + t);
            xv.push_back(100.0 * n + t + 0.5);
        }
    TensorD x = TensorD::from({2, 3, 1, 1, 2}, xv, true);

    TensorD s = select0(x, 1);
    REQUIRE(s.shape() == Shape{3, 1, 1, 2});
    CHECK(s.values()[0] == 100.0);
    CHECK(s.values()[5] == 102.5);

    TensorD t1 = time_slice(x, 1);
    REQUIRE(t1.shape() == Shape{2, 1, 1, 2});
    CHECK(t1.values()[0] == 1.0);
    CHECK(t1.values()[1] == 1.5);
    CHECK(t1.values()[2] == 101.0);
    CHECK(t1.values()[3] == 101.5);

    backward(sum(t1));
    // only the t = 1 blocks of each batch entry received gradient
    std::vector<double> want(xv.size(), 0.0);
    want[2] = want[3] = want[8] = want[9] = 1.0;
    CHECK(x.grad() == want);

    CHECK_THROWS_WITH_AS(select0(x, 2), doctest::Contains("out of range"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(time_slice(x, 3), doctest::Contains("out of range"),
                         std::invalid_argument);
}

TEST_CASE("permute_tc swaps the channel and time axes") {
    // x[n][c][t] distinct values, H=W=1
    std::vector<double> xv;
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 3; ++c)
            for (int t = 0; t < 4; ++t) xv.push_back(n * 100.0 + c * 10.0 + t);
    TensorD x = TensorD::from({2, 3, 4, 1, 1}, xv, true);
    TensorD y = permute_tc(x);
    REQUIRE(y.shape() == Shape{2, 4, 3, 1, 1});
    for (int n = 0; n < 2; ++n)
        for (int t = 0; t < 4; ++t)
            for (int c = 0; c < 3; ++c)
                CHECK(y.values()[(size_t)((n * 4 + t) * 3 + c)] == n * 100.0 + c * 10.0 + t);

    auto res = gradcheck(
        [&] {
            TensorD p = permute_tc(x);
            return sum(hadamard(p, p));
        },
        {x});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("select0 gradients pass a finite-difference check") {
    Rng rng{71};
    auto xv = random_vec<double>(3 * 2 * 2, rng);
    TensorD x = TensorD::from({3, 2, 2}, xv);
    auto res = gradcheck(
        [&] {
            TensorD s = select0(x, 1);
            return sum(hadamard(s, s));
        },
        {x});
    CHECK_MESSAGE(res.ok, res.where);
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

TEST_CASE("kl_loss is near zero for identical maps and log(2) for the hand case") {
    TensorD same = TensorD::from({2, 2}, {0.1, 0.2, 0.3, 0.4});
    TensorD l0 = kl_loss(same, same);
    CHECK(std::fabs(l0.item()) < 1e-5);

    TensorD y = TensorD::from({2}, {1.0, 0.0});
    TensorD p = TensorD::from({2}, {0.5, 0.5});
    TensorD l = kl_loss(y, p);
    CHECK(l.item() == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("kl_loss decreases as the prediction approaches the target") {
    TensorD y = TensorD::from({3}, {0.2, 0.5, 0.3});
    TensorD far = TensorD::from({3}, {0.8, 0.1, 0.1});
    TensorD near = TensorD::from({3}, {0.25, 0.45, 0.3});
    CHECK(kl_loss(y, near).item() < kl_loss(y, far).item());
}

TEST_CASE("kl_loss gradients pass a finite-difference check") {
    Rng rng{73};
    std::vector<double> yv(12), hv(12);
    for (auto& v : yv) v = rng.uniform(0.01, 1.0);
    for (auto& v : hv) v = rng.uniform(0.05, 0.95);
    TensorD y = TensorD::from({3, 4}, yv);
    TensorD yhat = TensorD::from({3, 4}, hv);
    auto res = gradcheck([&] { return kl_loss(y, yhat); }, {yhat}, 1e-5, 1e-4, 1e-9);
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("kl_loss rejects all-zero maps") {
    TensorD z = TensorD::zeros({4});
    TensorD p = TensorD::full({4}, 0.25);
    CHECK_THROWS_WITH_AS(kl_loss(z, p), doctest::Contains("ground-truth"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(kl_loss(p, z), doctest::Contains("predicted"), std::invalid_argument);
}

TEST_CASE("cc_loss is -1 for perfect correlation and +1 for anti-correlation") {
    TensorD y = TensorD::from({3}, {1.0, 2.0, 3.0});
    TensorD up = TensorD::from({3}, {2.0, 4.0, 6.0});
    TensorD dn = TensorD::from({3}, {3.0, 2.0, 1.0});
    CHECK(cc_loss(y, up).item() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(cc_loss(y, dn).item() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("cc_loss is invariant to affine rescaling of the prediction") {
    Rng rng{79};
    auto yv = random_vec<double>(16, rng, 0.0, 1.0);
    auto hv = random_vec<double>(16, rng, 0.0, 1.0);
    TensorD y = TensorD::from({16}, yv);
    TensorD h1 = TensorD::from({16}, hv);
    std::vector<double> hv2(16);
    for (size_t i = 0; i < 16; ++i) hv2[i] = 3.0 * hv[i] + 0.7;
    TensorD h2 = TensorD::from({16}, hv2);
    CHECK(cc_loss(y, h1).item() == doctest::Approx(cc_loss(y, h2).item()).epsilon(1e-10));
}

TEST_CASE("cc_loss gradients pass a finite-difference check") {
    Rng rng{83};
    auto yv = random_vec<double>(12, rng, 0.0, 1.0);
    auto hv = random_vec<double>(12, rng, 0.05, 0.95);
    TensorD y = TensorD::from({12}, yv);
    TensorD yhat = TensorD::from({12}, hv);
    auto res = gradcheck([&] { return cc_loss(y, yhat); }, {yhat});
    CHECK_MESSAGE(res.ok, res.where);
}

TEST_CASE("cc_loss rejects constant maps") {
    TensorD c = TensorD::full({4}, 0.5);
    TensorD v = TensorD::from({4}, {0.1, 0.2, 0.3, 0.4});
    CHECK_THROWS_WITH_AS(cc_loss(c, v), doctest::Contains("zero variance"),
                         std::invalid_argument);
    CHECK_THROWS_WITH_AS(cc_loss(v, c), doctest::Contains("zero variance"),
                         std::invalid_argument);
}

// ---------------------------------------------------------------------------
// op-level backend agreement
// ---------------------------------------------------------------------------

TEST_CASE("a full op pipeline is bit-identical across backends") {
    Rng rng{89};
    auto xv = random_vec<float>(2 * 3 * 4 * 8 * 8, rng);
    auto wv = random_vec<float>(4 * 3 * 3 * 3 * 3, rng, -0.2, 0.2);
    auto bv = random_vec<float>(4, rng);

    auto run = [&](kern::Backend be) {
        BackendGuard g(be);
        TensorF x = TensorF::from({2, 3, 4, 8, 8}, xv);
        TensorF w = TensorF::from({4, 3, 3, 3, 3}, wv, true);
        TensorF b = TensorF::from({4}, bv, true);
        TensorF y = maxpool3d(relu(conv3d(x, w, b)), {1, 2, 2}, {1, 2, 2});
        TensorF l = sum(sigmoid(y));
        backward(l);
        return std::make_tuple(y.values(), w.grad(), b.grad());
    };
    omp_set_num_threads(4);
    auto [ys, gws, gbs] = run(kern::Backend::serial);
    auto [yo, gwo, gbo] = run(kern::Backend::openmp);
    CHECK(bitwise_equal(ys, yo));
    CHECK(bitwise_equal(gws, gwo));
    CHECK(bitwise_equal(gbs, gbo));
}
