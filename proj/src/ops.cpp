#include "msaf/ops.hpp"

#include <cmath>

#include "msaf/kernels.hpp"

namespace msaf {

namespace {

template <typename T>
void axpy(std::vector<T>& dst, const std::vector<T>& src) {
    for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

} // namespace

// ---------------------------------------------------------------------------
// convolution
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 Dims3 stride, Dims3 pad) {
    check(x.rank() == 5, "conv3d: input must be [N,C,T,H,W], got " + shape_str(x.shape()));
    check(w.rank() == 5, "conv3d: filter must be [K,C,kT,kH,kW], got " + shape_str(w.shape()));
    check(b.rank() == 1 && b.dim(0) == w.dim(0),
          "conv3d: bias " + shape_str(b.shape()) + " does not match filter count " +
              std::to_string(w.dim(0)));
    check(w.dim(1) == x.dim(1),
          "conv3d: filter expects " + std::to_string(w.dim(1)) + " input channels, input has " +
              std::to_string(x.dim(1)));
    check(stride[0] > 0 && stride[1] > 0 && stride[2] > 0, "conv3d: strides must be positive");
    check(pad[0] >= 0 && pad[1] >= 0 && pad[2] >= 0, "conv3d: padding must be non-negative");

    kern::Conv3dDims d;
    d.n = x.dim(0); d.cin = x.dim(1); d.ti = x.dim(2); d.hi = x.dim(3); d.wi = x.dim(4);
    d.cout = w.dim(0); d.kt = w.dim(2); d.kh = w.dim(3); d.kw = w.dim(4);
    d.st = stride[0]; d.sh = stride[1]; d.sw = stride[2];
    d.pt = pad[0]; d.ph = pad[1]; d.pw = pad[2];
    d.to = (d.ti + 2 * d.pt - d.kt) / d.st + 1;
    d.ho = (d.hi + 2 * d.ph - d.kh) / d.sh + 1;
    d.wo = (d.wi + 2 * d.pw - d.kw) / d.sw + 1;
    check(d.to > 0 && d.ho > 0 && d.wo > 0,
          "conv3d: empty output for input " + shape_str(x.shape()) + " and filter " +
              shape_str(w.shape()));

    Tensor<T> y = Tensor<T>::zeros({d.n, d.cout, d.to, d.ho, d.wo});
    kern::conv3d_fwd(x.data(), w.data(), b.data(), y.data(), d);

    detail::attach<T>("conv3d", y, {x, w, b},
                      [x, w, d](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (gin[0]) kern::conv3d_bwd_data(gy.data(), w.data(), gin[0]->data(), d);
                          if (gin[1] || gin[2])
                              kern::conv3d_bwd_filter(gy.data(), x.data(),
                                                      gin[1] ? gin[1]->data() : nullptr,
                                                      gin[2] ? gin[2]->data() : nullptr, d);
                      });
    return y;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int64_t pad) {
    check(x.rank() == 4, "conv2d: input must be [N,C,H,W], got " + shape_str(x.shape()));
    check(w.rank() == 4, "conv2d: filter must be [K,C,kH,kW], got " + shape_str(w.shape()));
    check(b.rank() == 1 && b.dim(0) == w.dim(0),
          "conv2d: bias " + shape_str(b.shape()) + " does not match filter count " +
              std::to_string(w.dim(0)));
    check(w.dim(1) == x.dim(1),
          "conv2d: filter expects " + std::to_string(w.dim(1)) + " input channels, input has " +
              std::to_string(x.dim(1)));
    check(pad >= 0, "conv2d: padding must be non-negative");

    // a 2d convolution is a 3d convolution over a single frame
    kern::Conv3dDims d;
    d.n = x.dim(0); d.cin = x.dim(1); d.ti = 1; d.hi = x.dim(2); d.wi = x.dim(3);
    d.cout = w.dim(0); d.kt = 1; d.kh = w.dim(2); d.kw = w.dim(3);
    d.st = 1; d.sh = 1; d.sw = 1;
    d.pt = 0; d.ph = pad; d.pw = pad;
    d.to = 1;
    d.ho = d.hi + 2 * d.ph - d.kh + 1;
    d.wo = d.wi + 2 * d.pw - d.kw + 1;
    check(d.ho > 0 && d.wo > 0,
          "conv2d: empty output for input " + shape_str(x.shape()) + " and filter " +
              shape_str(w.shape()));

    Tensor<T> y = Tensor<T>::zeros({d.n, d.cout, d.ho, d.wo});
    kern::conv3d_fwd(x.data(), w.data(), b.data(), y.data(), d);

    detail::attach<T>("conv2d", y, {x, w, b},
                      [x, w, d](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (gin[0]) kern::conv3d_bwd_data(gy.data(), w.data(), gin[0]->data(), d);
                          if (gin[1] || gin[2])
                              kern::conv3d_bwd_filter(gy.data(), x.data(),
                                                      gin[1] ? gin[1]->data() : nullptr,
                                                      gin[2] ? gin[2]->data() : nullptr, d);
                      });
    return y;
}

// ---------------------------------------------------------------------------
// batch norm
// ---------------------------------------------------------------------------

namespace {

template <typename T>
Tensor<T> batchnorm_impl(const char* op, const Tensor<T>& x, const Tensor<T>& gamma,
                         const Tensor<T>& beta, Tensor<T>& running_mean, Tensor<T>& running_var,
                         bool training, T momentum, T eps) {
    int64_t n = x.dim(0), c = x.dim(1);
    int64_t m = x.numel() / (n * c);
    const Tensor<T>* per_channel[] = {&gamma, &beta, &running_mean, &running_var};
    for (const Tensor<T>* p : per_channel)
        check(p->rank() == 1 && p->dim(0) == c,
              std::string(op) + ": per-channel parameter " + shape_str(p->shape()) +
                  " does not match " + std::to_string(c) + " channels");

    Tensor<T> y = Tensor<T>::zeros(x.shape());
    if (training) {
        check(n * m > 1, std::string(op) + ": training mode needs more than one element per "
                         "channel, got 1 (variance is undefined up to epsilon)");
        std::vector<T> mean((size_t)c), invstd((size_t)c);
        kern::bn_train_fwd(x.data(), gamma.data(), beta.data(), y.data(), mean.data(),
                           invstd.data(), running_mean.data(), running_var.data(), momentum, eps,
                           n, c, m);
        detail::attach<T>(op, y, {x, gamma, beta},
                          [x, gamma, mean = std::move(mean), invstd = std::move(invstd), n, c,
                           m](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                              kern::bn_train_bwd(gy.data(), x.data(), gamma.data(), mean.data(),
                                                 invstd.data(),
                                                 gin[0] ? gin[0]->data() : nullptr,
                                                 gin[1] ? gin[1]->data() : nullptr,
                                                 gin[2] ? gin[2]->data() : nullptr, n, c, m);
                          });
    } else {
        kern::bn_eval_fwd(x.data(), gamma.data(), beta.data(), running_mean.data(),
                          running_var.data(), y.data(), eps, n, c, m);
        // freeze the running statistics as of the forward pass
        std::vector<T> rm = running_mean.values(), rv = running_var.values();
        detail::attach<T>(op, y, {x, gamma, beta},
                          [x, gamma, rm = std::move(rm), rv = std::move(rv), eps, n, c,
                           m](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                              kern::bn_eval_bwd(gy.data(), x.data(), gamma.data(), rm.data(),
                                                rv.data(), gin[0] ? gin[0]->data() : nullptr,
                                                gin[1] ? gin[1]->data() : nullptr,
                                                gin[2] ? gin[2]->data() : nullptr, eps, n, c, m);
                          });
    }
    return y;
}

} // namespace

template <typename T>
Tensor<T> batchnorm3d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                      T eps) {
    check(x.rank() == 5, "batchnorm3d: input must be [N,C,T,H,W], got " + shape_str(x.shape()));
    return batchnorm_impl("batchnorm3d", x, gamma, beta, running_mean, running_var, training,
                          momentum, eps);
}

template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var, bool training, T momentum,
                      T eps) {
    check(x.rank() == 4, "batchnorm2d: input must be [N,C,H,W], got " + shape_str(x.shape()));
    return batchnorm_impl("batchnorm2d", x, gamma, beta, running_mean, running_var, training,
                          momentum, eps);
}

// ---------------------------------------------------------------------------
// pooling / resampling
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> maxpool3d(const Tensor<T>& x, Dims3 kernel, Dims3 stride) {
    check(x.rank() == 5, "maxpool3d: input must be [N,C,T,H,W], got " + shape_str(x.shape()));
    check(kernel[0] > 0 && kernel[1] > 0 && kernel[2] > 0, "maxpool3d: window must be positive");
    check(stride[0] > 0 && stride[1] > 0 && stride[2] > 0, "maxpool3d: strides must be positive");

    kern::Pool3dDims d;
    d.n = x.dim(0); d.c = x.dim(1); d.ti = x.dim(2); d.hi = x.dim(3); d.wi = x.dim(4);
    d.kt = kernel[0]; d.kh = kernel[1]; d.kw = kernel[2];
    d.st = stride[0]; d.sh = stride[1]; d.sw = stride[2];
    d.to = (d.ti - d.kt) / d.st + 1;
    d.ho = (d.hi - d.kh) / d.sh + 1;
    d.wo = (d.wi - d.kw) / d.sw + 1;
    check(d.to > 0 && d.ho > 0 && d.wo > 0,
          "maxpool3d: window larger than input " + shape_str(x.shape()));

    Tensor<T> y = Tensor<T>::zeros({d.n, d.c, d.to, d.ho, d.wo});
    auto idx = std::make_shared<std::vector<int64_t>>((size_t)y.numel());
    kern::maxpool3d_fwd(x.data(), y.data(), idx->data(), d);

    int64_t out_elems = y.numel();
    detail::attach<T>("maxpool3d", y, {x},
                      [idx, out_elems](const std::vector<T>& gy,
                                       const std::vector<std::vector<T>*>& gin) {
                          if (gin[0]) kern::maxpool3d_bwd(gy.data(), idx->data(),
                                                          gin[0]->data(), out_elems);
                      });
    return y;
}

template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x) {
    check(x.rank() == 4, "upsample2x: input must be [N,C,H,W], got " + shape_str(x.shape()));
    int64_t rows = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor<T> y = Tensor<T>::zeros({x.dim(0), x.dim(1), 2 * h, 2 * w});
    kern::upsample2x_fwd(x.data(), y.data(), rows, h, w);
    detail::attach<T>("upsample2x", y, {x},
                      [rows, h, w](const std::vector<T>& gy,
                                   const std::vector<std::vector<T>*>& gin) {
                          if (gin[0]) kern::upsample2x_bwd(gy.data(), gin[0]->data(), rows, h, w);
                      });
    return y;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void check_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
    check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                      " vs " + shape_str(b.shape()));
}

} // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape("add", a, b);
    Tensor<T> y = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) py[i] = pa[i] + pb[i];
    detail::attach<T>("add", y, {a, b},
                      [](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (gin[0]) axpy(*gin[0], gy);
                          if (gin[1]) axpy(*gin[1], gy);
                      });
    return y;
}

template <typename T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
    check_same_shape("hadamard", a, b);
    Tensor<T> y = Tensor<T>::zeros(a.shape());
    const T* pa = a.data();
    const T* pb = b.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) py[i] = pa[i] * pb[i];
    detail::attach<T>("hadamard", y, {a, b},
                      [a, b](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          const T* va = a.data();
                          const T* vb = b.data();
                          if (gin[0])
                              for (size_t i = 0; i < gy.size(); ++i) (*gin[0])[i] += gy[i] * vb[i];
                          if (gin[1])
                              for (size_t i = 0; i < gy.size(); ++i) (*gin[1])[i] += gy[i] * va[i];
                      });
    return y;
}

template <typename T>
Tensor<T> scalar_add(const Tensor<T>& x, T s) {
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    const T* px = x.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) py[i] = px[i] + s;
    detail::attach<T>("scalar_add", y, {x},
                      [](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (gin[0]) axpy(*gin[0], gy);
                      });
    return y;
}

template <typename T>
Tensor<T> scalar_mul(const Tensor<T>& x, T s) {
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    const T* px = x.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) py[i] = px[i] * s;
    detail::attach<T>("scalar_mul", y, {x},
                      [s](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (gin[0])
                              for (size_t i = 0; i < gy.size(); ++i) (*gin[0])[i] += gy[i] * s;
                      });
    return y;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    const T* px = x.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) py[i] = px[i] > (T)0 ? px[i] : (T)0;
    detail::attach<T>("relu", y, {x},
                      [x](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          const T* v = x.data();
                          for (size_t i = 0; i < gy.size(); ++i)
                              if (v[i] > (T)0) (*gin[0])[i] += gy[i];
                      });
    return y;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    const T* px = x.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) {
        T v = px[i];
        if (v >= 0) {
            py[i] = (T)1 / ((T)1 + std::exp(-v));
        } else {
            T e = std::exp(v);
            py[i] = e / ((T)1 + e);
        }
    }
    detail::TensorData<T>* out = y.impl().get();
    detail::attach<T>("sigmoid", y, {x},
                      [out](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          const T* v = out->v.data();
                          for (size_t i = 0; i < gy.size(); ++i)
                              (*gin[0])[i] += gy[i] * v[i] * ((T)1 - v[i]);
                      });
    return y;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& x) {
    Tensor<T> y = Tensor<T>::zeros(x.shape());
    const T* px = x.data();
    T* py = y.data();
    int64_t n = y.numel();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n; ++i) py[i] = std::tanh(px[i]);
    detail::TensorData<T>* out = y.impl().get();
    detail::attach<T>("tanh", y, {x},
                      [out](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          const T* v = out->v.data();
                          for (size_t i = 0; i < gy.size(); ++i)
                              (*gin[0])[i] += gy[i] * ((T)1 - v[i] * v[i]);
                      });
    return y;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
    Tensor<T> y = Tensor<T>::zeros({1});
    const T* px = x.data();
    T acc = 0;
    for (int64_t i = 0, n = x.numel(); i < n; ++i) acc += px[i];
    y.data()[0] = acc;
    detail::attach<T>("sum", y, {x},
                      [](const std::vector<T>& gy, const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          for (auto& g : *gin[0]) g += gy[0];
                      });
    return y;
}

// ---------------------------------------------------------------------------
// indexing / layout
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> select0(const Tensor<T>& x, int64_t i) {
    check(x.rank() >= 1, "select0: scalar input");
    check(i >= 0 && i < x.dim(0),
          "select0: index " + std::to_string(i) + " out of range [0," +
              std::to_string(x.dim(0)) + ")");
    Shape s(x.shape().begin() + 1, x.shape().end());
    Tensor<T> y = Tensor<T>::zeros(s);
    int64_t block = y.numel();
    std::copy(x.data() + i * block, x.data() + (i + 1) * block, y.data());
    detail::attach<T>("select0", y, {x},
                      [i, block](const std::vector<T>& gy,
                                 const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          T* g = gin[0]->data() + i * block;
                          for (int64_t j = 0; j < block; ++j) g[j] += gy[(size_t)j];
                      });
    return y;
}

template <typename T>
Tensor<T> time_slice(const Tensor<T>& x, int64_t t) {
    check(x.rank() == 5, "time_slice: input must be [N,T,C,H,W], got " + shape_str(x.shape()));
    int64_t n = x.dim(0), tt = x.dim(1);
    check(t >= 0 && t < tt,
          "time_slice: t " + std::to_string(t) + " out of range [0," + std::to_string(tt) + ")");
    int64_t block = x.dim(2) * x.dim(3) * x.dim(4);
    Tensor<T> y = Tensor<T>::zeros({n, x.dim(2), x.dim(3), x.dim(4)});
    for (int64_t i = 0; i < n; ++i)
        std::copy(x.data() + (i * tt + t) * block, x.data() + (i * tt + t + 1) * block,
                  y.data() + i * block);
    detail::attach<T>("time_slice", y, {x},
                      [n, tt, t, block](const std::vector<T>& gy,
                                        const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          for (int64_t i = 0; i < n; ++i) {
                              T* g = gin[0]->data() + (i * tt + t) * block;
                              const T* s = gy.data() + i * block;
                              for (int64_t j = 0; j < block; ++j) g[j] += s[j];
                          }
                      });
    return y;
}

template <typename T>
Tensor<T> permute_tc(const Tensor<T>& x) {
    check(x.rank() == 5, "permute_tc: input must be [N,C,T,H,W], got " + shape_str(x.shape()));
    int64_t n = x.dim(0), c = x.dim(1), t = x.dim(2), hw = x.dim(3) * x.dim(4);
    Tensor<T> y = Tensor<T>::zeros({n, t, c, x.dim(3), x.dim(4)});
    const T* px = x.data();
    T* py = y.data();
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < n * c; ++i) {
        int64_t nn = i / c, cc = i % c;
        for (int64_t ti = 0; ti < t; ++ti)
            std::copy(px + ((nn * c + cc) * t + ti) * hw, px + ((nn * c + cc) * t + ti + 1) * hw,
                      py + ((nn * t + ti) * c + cc) * hw);
    }
    detail::attach<T>("permute_tc", y, {x},
                      [n, c, t, hw](const std::vector<T>& gy,
                                    const std::vector<std::vector<T>*>& gin) {
                          if (!gin[0]) return;
                          T* g = gin[0]->data();
                          for (int64_t nn = 0; nn < n; ++nn)
                              for (int64_t cc = 0; cc < c; ++cc)
                                  for (int64_t ti = 0; ti < t; ++ti) {
                                      const T* s = gy.data() + ((nn * t + ti) * c + cc) * hw;
                                      T* dp = g + ((nn * c + cc) * t + ti) * hw;
                                      for (int64_t j = 0; j < hw; ++j) dp[j] += s[j];
                                  }
                      });
    return y;
}

// ---------------------------------------------------------------------------
// losses
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> kl_loss(const Tensor<T>& y, const Tensor<T>& yhat, T eps) {
    check_same_shape("kl_loss", y, yhat);
    int64_t n = y.numel();
    check(n > 0, "kl_loss: empty maps");

    const T* py = y.data();
    const T* ph = yhat.data();
    T sy = 0, sh = 0;
    for (int64_t i = 0; i < n; ++i) sy += py[i];
    for (int64_t i = 0; i < n; ++i) sh += ph[i];
    check(sy > 0, "kl_loss: ground-truth map sums to zero");
    check(sh > 0, "kl_loss: predicted map sums to zero");

    // loss and the partials w.r.t. yhat in one pass over normalized maps
    T loss = 0, dot = 0;
    std::vector<T> dldp((size_t)n);
    for (int64_t i = 0; i < n; ++i) {
        T yn = py[i] / sy;
        T p = ph[i] / sh;
        T r = yn / (eps + p);
        loss += yn * std::log(eps + r);
        T dp = -yn * r / ((eps + r) * (eps + p));
        dldp[(size_t)i] = dp;
        dot += dp * ph[i];
    }
    std::vector<T> gvec((size_t)n);
    for (int64_t i = 0; i < n; ++i) gvec[(size_t)i] = dldp[(size_t)i] / sh - dot / (sh * sh);

    Tensor<T> out = Tensor<T>::from({1}, {loss});
    detail::attach<T>("kl_loss", out, {y, yhat},
                      [gvec = std::move(gvec)](const std::vector<T>& gy,
                                               const std::vector<std::vector<T>*>& gin) {
                          // the ground-truth input is a constant of the loss
                          if (!gin[1]) return;
                          for (size_t i = 0; i < gvec.size(); ++i)
                              (*gin[1])[i] += gy[0] * gvec[i];
                      });
    return out;
}

template <typename T>
Tensor<T> cc_loss(const Tensor<T>& y, const Tensor<T>& yhat) {
    check_same_shape("cc_loss", y, yhat);
    int64_t n = y.numel();
    check(n > 1, "cc_loss: need at least two elements");

    const T* py = y.data();
    const T* ph = yhat.data();
    T my = 0, mh = 0;
    for (int64_t i = 0; i < n; ++i) my += py[i];
    for (int64_t i = 0; i < n; ++i) mh += ph[i];
    my /= (T)n;
    mh /= (T)n;
    T saa = 0, sbb = 0, sab = 0;
    for (int64_t i = 0; i < n; ++i) {
        T a = py[i] - my;
        T b = ph[i] - mh;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    check(saa > 0, "cc_loss: ground-truth map is constant (zero variance)");
    check(sbb > 0, "cc_loss: predicted map is constant (zero variance)");

    T denom = std::sqrt(saa * sbb);
    T r = sab / denom;

    std::vector<T> gvec((size_t)n);
    for (int64_t i = 0; i < n; ++i) {
        T a = py[i] - my;
        T b = ph[i] - mh;
        gvec[(size_t)i] = -(a - (sab / sbb) * b) / denom;
    }

    Tensor<T> out = Tensor<T>::from({1}, {-r});
    detail::attach<T>("cc_loss", out, {y, yhat},
                      [gvec = std::move(gvec)](const std::vector<T>& gy,
                                               const std::vector<std::vector<T>*>& gin) {
                          if (!gin[1]) return;
                          for (size_t i = 0; i < gvec.size(); ++i)
                              (*gin[1])[i] += gy[0] * gvec[i];
                      });
    return out;
}

template <typename T>
Tensor<T> total_loss(const Tensor<T>& y, const Tensor<T>& yhat, T eps) {
    return add(kl_loss(y, yhat, eps), cc_loss(y, yhat));
}

// ---------------------------------------------------------------------------

#define MSAF_INSTANTIATE_OPS(T)                                                                 \
    template Tensor<T> conv3d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Dims3,  \
                                 Dims3);                                                        \
    template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,         \
                                 int64_t);                                                      \
    template Tensor<T> batchnorm3d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                      Tensor<T>&, Tensor<T>&, bool, T, T);                      \
    template Tensor<T> batchnorm2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                      Tensor<T>&, Tensor<T>&, bool, T, T);                      \
    template Tensor<T> maxpool3d<T>(const Tensor<T>&, Dims3, Dims3);                           \
    template Tensor<T> upsample2x<T>(const Tensor<T>&);                                        \
    template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> hadamard<T>(const Tensor<T>&, const Tensor<T>&);                        \
    template Tensor<T> scalar_add<T>(const Tensor<T>&, T);                                     \
    template Tensor<T> scalar_mul<T>(const Tensor<T>&, T);                                     \
    template Tensor<T> relu<T>(const Tensor<T>&);                                              \
    template Tensor<T> sigmoid<T>(const Tensor<T>&);                                           \
    template Tensor<T> tanh<T>(const Tensor<T>&);                                              \
    template Tensor<T> sum<T>(const Tensor<T>&);                                               \
    template Tensor<T> select0<T>(const Tensor<T>&, int64_t);                                  \
    template Tensor<T> time_slice<T>(const Tensor<T>&, int64_t);                               \
    template Tensor<T> permute_tc<T>(const Tensor<T>&);                                        \
    template Tensor<T> kl_loss<T>(const Tensor<T>&, const Tensor<T>&, T);                      \
    template Tensor<T> cc_loss<T>(const Tensor<T>&, const Tensor<T>&);                         \
    template Tensor<T> total_loss<T>(const Tensor<T>&, const Tensor<T>&, T);

MSAF_INSTANTIATE_OPS(float)
MSAF_INSTANTIATE_OPS(double)

#undef MSAF_INSTANTIATE_OPS

} // namespace msaf
