#include "msaf/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

namespace msaf {
namespace kern {

namespace {
std::atomic<Backend> g_backend{Backend::openmp};
}

Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }

// ---------------------------------------------------------------------------
// Slab helpers.
//
// All floating-point work is done in these functions; the serial and OpenMP
// drivers below differ only in how they iterate over slabs. The helpers are
// noinline+noclone so both drivers execute the same machine code — relying on
// the optimizer to compile two structurally identical loops identically is
// not safe (contraction and vectorization decisions are per call site). A
// slab is owned by exactly one loop iteration, so the thread count cannot
// matter either.
//
// Per-element accumulation order (part of the kernel contract):
//   conv fwd: (ci, kt, kh, kw)   bwd data: (co, kt, kh, kw)
//   bwd filter: (n, to, ho, wo)  bias and bn reductions: flat scan order
// Batch-norm statistics and reductions accumulate in double.
// ---------------------------------------------------------------------------

#define MSAF_SLAB __attribute__((noinline, noclone))

namespace {

// one output slab (n, co, to): rows initialized to the bias, then taps
// accumulated in (ci, kt, kh, kw) order
template <typename T>
MSAF_SLAB void conv3d_fwd_slab(const T* x, const T* w, const T* b, T* y, const Conv3dDims& d,
                               int64_t n, int64_t co, int64_t to) {
    T* yslab = y + ((n * d.cout + co) * d.to + to) * d.ho * d.wo;
    T bias = b ? b[co] : (T)0;
    for (int64_t i = 0; i < d.ho * d.wo; ++i) yslab[i] = bias;

    for (int64_t ci = 0; ci < d.cin; ++ci)
        for (int64_t kt = 0; kt < d.kt; ++kt) {
            int64_t ti = to * d.st + kt - d.pt;
            if (ti < 0 || ti >= d.ti) continue;
            const T* xplane = x + ((n * d.cin + ci) * d.ti + ti) * d.hi * d.wi;
            const T* wtap = w + ((co * d.cin + ci) * d.kt + kt) * d.kh * d.kw;
            for (int64_t ho = 0; ho < d.ho; ++ho) {
                T* yrow = yslab + ho * d.wo;
                for (int64_t kh = 0; kh < d.kh; ++kh) {
                    int64_t hi = ho * d.sh + kh - d.ph;
                    if (hi < 0 || hi >= d.hi) continue;
                    const T* xrow = xplane + hi * d.wi;
                    if (d.sw == 1) {
                        for (int64_t kw = 0; kw < d.kw; ++kw) {
                            int64_t off = kw - d.pw;  // wi = wo + off
                            int64_t lo = std::max<int64_t>(0, -off);
                            int64_t hi_w = std::min(d.wo, d.wi - off);
                            T wv = wtap[kh * d.kw + kw];
                            const T* xs = xrow + off;
                            for (int64_t wo = lo; wo < hi_w; ++wo) yrow[wo] += xs[wo] * wv;
                        }
                    } else {
                        for (int64_t kw = 0; kw < d.kw; ++kw) {
                            T wv = wtap[kh * d.kw + kw];
                            for (int64_t wo = 0; wo < d.wo; ++wo) {
                                int64_t wi = wo * d.sw + kw - d.pw;
                                if (wi < 0 || wi >= d.wi) continue;
                                yrow[wo] += xrow[wi] * wv;
                            }
                        }
                    }
                }
            }
        }
}

// one input-gradient slab (n, ci, ti): gathered in (co, kt, kh, kw) order;
// gx is accumulated into (callers zero it)
template <typename T>
MSAF_SLAB void conv3d_bwd_data_slab(const T* gy, const T* w, T* gx, const Conv3dDims& d,
                                    int64_t n, int64_t ci, int64_t ti) {
    T* gslab = gx + ((n * d.cin + ci) * d.ti + ti) * d.hi * d.wi;
    for (int64_t co = 0; co < d.cout; ++co)
        for (int64_t kt = 0; kt < d.kt; ++kt) {
            int64_t tn = ti + d.pt - kt;
            if (tn < 0 || tn % d.st) continue;
            int64_t to = tn / d.st;
            if (to >= d.to) continue;
            const T* gyplane = gy + ((n * d.cout + co) * d.to + to) * d.ho * d.wo;
            const T* wtap = w + ((co * d.cin + ci) * d.kt + kt) * d.kh * d.kw;
            for (int64_t hi = 0; hi < d.hi; ++hi) {
                T* grow = gslab + hi * d.wi;
                for (int64_t kh = 0; kh < d.kh; ++kh) {
                    int64_t hn = hi + d.ph - kh;
                    if (hn < 0 || hn % d.sh) continue;
                    int64_t ho = hn / d.sh;
                    if (ho >= d.ho) continue;
                    const T* gyrow = gyplane + ho * d.wo;
                    if (d.sw == 1) {
                        for (int64_t kw = 0; kw < d.kw; ++kw) {
                            int64_t off = d.pw - kw;  // wo = wi + off
                            int64_t lo = std::max<int64_t>(0, -off);
                            int64_t hi_w = std::min(d.wi, d.wo - off);
                            T wv = wtap[kh * d.kw + kw];
                            const T* gys = gyrow + off;
                            for (int64_t wi = lo; wi < hi_w; ++wi) grow[wi] += gys[wi] * wv;
                        }
                    } else {
                        for (int64_t kw = 0; kw < d.kw; ++kw) {
                            T wv = wtap[kh * d.kw + kw];
                            for (int64_t wi = 0; wi < d.wi; ++wi) {
                                int64_t wn = wi + d.pw - kw;
                                if (wn < 0 || wn % d.sw) continue;
                                int64_t wo = wn / d.sw;
                                if (wo >= d.wo) continue;
                                grow[wi] += gyrow[wo] * wv;
                            }
                        }
                    }
                }
            }
        }
}

// every filter gradient of one (co, ci) pair, each accumulated over
// (n, to, ho, wo)
template <typename T>
MSAF_SLAB void conv3d_bwd_filter_slab(const T* gy, const T* x, T* gw, const Conv3dDims& d,
                                      int64_t co, int64_t ci) {
    for (int64_t kt = 0; kt < d.kt; ++kt)
        for (int64_t kh = 0; kh < d.kh; ++kh)
            for (int64_t kw = 0; kw < d.kw; ++kw) {
                T acc = 0;
                for (int64_t n = 0; n < d.n; ++n)
                    for (int64_t to = 0; to < d.to; ++to) {
                        int64_t ti = to * d.st + kt - d.pt;
                        if (ti < 0 || ti >= d.ti) continue;
                        for (int64_t ho = 0; ho < d.ho; ++ho) {
                            int64_t hi = ho * d.sh + kh - d.ph;
                            if (hi < 0 || hi >= d.hi) continue;
                            const T* gyrow =
                                gy + (((n * d.cout + co) * d.to + to) * d.ho + ho) * d.wo;
                            const T* xrow =
                                x + (((n * d.cin + ci) * d.ti + ti) * d.hi + hi) * d.wi;
                            if (d.sw == 1) {
                                int64_t off = kw - d.pw;
                                int64_t lo = std::max<int64_t>(0, -off);
                                int64_t hi_w = std::min(d.wo, d.wi - off);
                                const T* xs = xrow + off;
                                for (int64_t wo = lo; wo < hi_w; ++wo) acc += gyrow[wo] * xs[wo];
                            } else {
                                for (int64_t wo = 0; wo < d.wo; ++wo) {
                                    int64_t wi = wo * d.sw + kw - d.pw;
                                    if (wi < 0 || wi >= d.wi) continue;
                                    acc += gyrow[wo] * xrow[wi];
                                }
                            }
                        }
                    }
                gw[(((co * d.cin + ci) * d.kt + kt) * d.kh + kh) * d.kw + kw] += acc;
            }
}

// bias gradient of one output channel
template <typename T>
MSAF_SLAB void conv3d_bwd_bias_slab(const T* gy, T* gb, const Conv3dDims& d, int64_t co) {
    T acc = 0;
    for (int64_t n = 0; n < d.n; ++n) {
        const T* gyplane = gy + (n * d.cout + co) * d.to * d.ho * d.wo;
        for (int64_t i = 0; i < d.to * d.ho * d.wo; ++i) acc += gyplane[i];
    }
    gb[co] += acc;
}

// one pooled slab (n, c, to); window scanned in (dt, dh, dw) order, first
// maximum wins, out-of-range taps skipped
template <typename T>
MSAF_SLAB void maxpool3d_fwd_slab(const T* x, T* y, int64_t* idx, const Pool3dDims& d, int64_t n,
                                  int64_t c, int64_t to) {
    int64_t base = ((n * d.c + c) * d.to + to) * d.ho * d.wo;
    for (int64_t ho = 0; ho < d.ho; ++ho)
        for (int64_t wo = 0; wo < d.wo; ++wo) {
            T best = 0;
            int64_t best_at = -1;
            for (int64_t dt = 0; dt < d.kt; ++dt) {
                int64_t ti = to * d.st + dt;
                if (ti >= d.ti) continue;
                for (int64_t dh = 0; dh < d.kh; ++dh) {
                    int64_t hi = ho * d.sh + dh;
                    if (hi >= d.hi) continue;
                    for (int64_t dw = 0; dw < d.kw; ++dw) {
                        int64_t wi = wo * d.sw + dw;
                        if (wi >= d.wi) continue;
                        int64_t at = (((n * d.c + c) * d.ti + ti) * d.hi + hi) * d.wi + wi;
                        if (best_at < 0 || x[at] > best) {
                            best = x[at];
                            best_at = at;
                        }
                    }
                }
            }
            y[base + ho * d.wo + wo] = best;
            idx[base + ho * d.wo + wo] = best_at;
        }
}

// one image of the batch*channel stack
template <typename T>
MSAF_SLAB void upsample2x_fwd_slab(const T* x, T* y, int64_t hi, int64_t wi, int64_t r) {
    const T* xi = x + r * hi * wi;
    T* yo = y + r * 4 * hi * wi;
    for (int64_t i = 0; i < 2 * hi; ++i) {
        const T* xrow = xi + (i / 2) * wi;
        T* yrow = yo + i * 2 * wi;
        for (int64_t j = 0; j < wi; ++j) {
            yrow[2 * j] = xrow[j];
            yrow[2 * j + 1] = xrow[j];
        }
    }
}

template <typename T>
MSAF_SLAB void upsample2x_bwd_slab(const T* gy, T* gx, int64_t hi, int64_t wi, int64_t r) {
    const T* gi = gy + r * 4 * hi * wi;
    T* go = gx + r * hi * wi;
    for (int64_t i = 0; i < hi; ++i) {
        const T* top = gi + (2 * i) * 2 * wi;
        const T* bot = gi + (2 * i + 1) * 2 * wi;
        T* grow = go + i * wi;
        for (int64_t j = 0; j < wi; ++j)
            grow[j] += top[2 * j] + top[2 * j + 1] + bot[2 * j] + bot[2 * j + 1];
    }
}

// statistics, running update and normalization of one channel (training)
template <typename T>
MSAF_SLAB void bn_train_channel(const T* x, const T* gamma, const T* beta, T* y, T* save_mean,
                                T* save_invstd, T* running_mean, T* running_var, T momentum,
                                T eps, int64_t n, int64_t c, int64_t m, int64_t ch) {
    int64_t cnt = n * m;
    double sum = 0;
    for (int64_t in = 0; in < n; ++in) {
        const T* row = x + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) sum += (double)row[j];
    }
    double mean = sum / (double)cnt;
    double var = 0;
    for (int64_t in = 0; in < n; ++in) {
        const T* row = x + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) {
            double df = (double)row[j] - mean;
            var += df * df;
        }
    }
    var /= (double)cnt;  // biased; used both to normalize and for the running estimate

    T istd = (T)(1.0 / std::sqrt(var + (double)eps));
    save_mean[ch] = (T)mean;
    save_invstd[ch] = istd;
    if (running_mean)
        running_mean[ch] = ((T)1 - momentum) * running_mean[ch] + momentum * (T)mean;
    if (running_var) running_var[ch] = ((T)1 - momentum) * running_var[ch] + momentum * (T)var;

    T g = gamma[ch], bt = beta[ch], mu = (T)mean;
    for (int64_t in = 0; in < n; ++in) {
        const T* row = x + (in * c + ch) * m;
        T* yrow = y + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) yrow[j] = (row[j] - mu) * istd * g + bt;
    }
}

// training-mode gradients of one channel
template <typename T>
MSAF_SLAB void bn_train_bwd_channel(const T* gy, const T* x, const T* gamma, const T* save_mean,
                                    const T* save_invstd, T* gx, T* ggamma, T* gbeta, int64_t n,
                                    int64_t c, int64_t m, int64_t ch) {
    int64_t cnt = n * m;
    T mu = save_mean[ch], istd = save_invstd[ch];
    double s1 = 0, s2 = 0;  // sum gy, sum gy * xhat
    for (int64_t in = 0; in < n; ++in) {
        const T* gyrow = gy + (in * c + ch) * m;
        const T* xrow = x + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) {
            s1 += (double)gyrow[j];
            s2 += (double)gyrow[j] * (double)((xrow[j] - mu) * istd);
        }
    }
    if (gbeta) gbeta[ch] += (T)s1;
    if (ggamma) ggamma[ch] += (T)s2;
    if (!gx) return;
    T a = (T)(s1 / (double)cnt);
    T b = (T)(s2 / (double)cnt);
    T g = gamma[ch];
    for (int64_t in = 0; in < n; ++in) {
        const T* gyrow = gy + (in * c + ch) * m;
        const T* xrow = x + (in * c + ch) * m;
        T* grow = gx + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) {
            T xhat = (xrow[j] - mu) * istd;
            grow[j] += g * istd * (gyrow[j] - a - xhat * b);
        }
    }
}

// eval-mode normalization of one channel with frozen running statistics
template <typename T>
MSAF_SLAB void bn_eval_channel(const T* x, const T* gamma, const T* beta, const T* running_mean,
                               const T* running_var, T* y, T eps, int64_t n, int64_t c, int64_t m,
                               int64_t ch) {
    T istd = (T)(1.0 / std::sqrt((double)running_var[ch] + (double)eps));
    T mu = running_mean[ch], g = gamma[ch], bt = beta[ch];
    for (int64_t in = 0; in < n; ++in) {
        const T* row = x + (in * c + ch) * m;
        T* yrow = y + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) yrow[j] = (row[j] - mu) * istd * g + bt;
    }
}

// eval-mode gradients of one channel
template <typename T>
MSAF_SLAB void bn_eval_bwd_channel(const T* gy, const T* x, const T* gamma,
                                   const T* running_mean, const T* running_var, T* gx, T* ggamma,
                                   T* gbeta, T eps, int64_t n, int64_t c, int64_t m, int64_t ch) {
    T istd = (T)(1.0 / std::sqrt((double)running_var[ch] + (double)eps));
    T mu = running_mean[ch], g = gamma[ch];
    double s1 = 0, s2 = 0;
    for (int64_t in = 0; in < n; ++in) {
        const T* gyrow = gy + (in * c + ch) * m;
        const T* xrow = x + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) {
            s1 += (double)gyrow[j];
            s2 += (double)gyrow[j] * (double)((xrow[j] - mu) * istd);
        }
    }
    if (gbeta) gbeta[ch] += (T)s1;
    if (ggamma) ggamma[ch] += (T)s2;
    if (!gx) return;
    for (int64_t in = 0; in < n; ++in) {
        const T* gyrow = gy + (in * c + ch) * m;
        T* grow = gx + (in * c + ch) * m;
        for (int64_t j = 0; j < m; ++j) grow[j] += g * istd * gyrow[j];
    }
}

} // namespace

// ---------------------------------------------------------------------------
// drivers
// ---------------------------------------------------------------------------

template <typename T>
void conv3d_fwd(const T* x, const T* w, const T* b, T* y, const Conv3dDims& d) {
    if (backend() == Backend::serial) {
        for (int64_t n = 0; n < d.n; ++n)
            for (int64_t co = 0; co < d.cout; ++co)
                for (int64_t to = 0; to < d.to; ++to) conv3d_fwd_slab(x, w, b, y, d, n, co, to);
    } else {
        int64_t jobs = d.n * d.cout * d.to;
#pragma omp parallel for schedule(static)
        for (int64_t j = 0; j < jobs; ++j)
            conv3d_fwd_slab(x, w, b, y, d, j / (d.cout * d.to), (j / d.to) % d.cout, j % d.to);
    }
}

template <typename T>
void conv3d_bwd_data(const T* gy, const T* w, T* gx, const Conv3dDims& d) {
    if (backend() == Backend::serial) {
        for (int64_t n = 0; n < d.n; ++n)
            for (int64_t ci = 0; ci < d.cin; ++ci)
                for (int64_t ti = 0; ti < d.ti; ++ti)
                    conv3d_bwd_data_slab(gy, w, gx, d, n, ci, ti);
    } else {
        int64_t jobs = d.n * d.cin * d.ti;
#pragma omp parallel for schedule(static)
        for (int64_t j = 0; j < jobs; ++j)
            conv3d_bwd_data_slab(gy, w, gx, d, j / (d.cin * d.ti), (j / d.ti) % d.cin, j % d.ti);
    }
}

template <typename T>
void conv3d_bwd_filter(const T* gy, const T* x, T* gw, T* gb, const Conv3dDims& d) {
    if (backend() == Backend::serial) {
        if (gw)
            for (int64_t co = 0; co < d.cout; ++co)
                for (int64_t ci = 0; ci < d.cin; ++ci) conv3d_bwd_filter_slab(gy, x, gw, d, co, ci);
        if (gb)
            for (int64_t co = 0; co < d.cout; ++co) conv3d_bwd_bias_slab(gy, gb, d, co);
    } else {
        if (gw) {
            int64_t jobs = d.cout * d.cin;
#pragma omp parallel for schedule(static)
            for (int64_t j = 0; j < jobs; ++j)
                conv3d_bwd_filter_slab(gy, x, gw, d, j / d.cin, j % d.cin);
        }
        if (gb) {
#pragma omp parallel for schedule(static)
            for (int64_t co = 0; co < d.cout; ++co) conv3d_bwd_bias_slab(gy, gb, d, co);
        }
    }
}

template <typename T>
void maxpool3d_fwd(const T* x, T* y, int64_t* idx, const Pool3dDims& d) {
    if (backend() == Backend::serial) {
        for (int64_t n = 0; n < d.n; ++n)
            for (int64_t c = 0; c < d.c; ++c)
                for (int64_t to = 0; to < d.to; ++to) maxpool3d_fwd_slab(x, y, idx, d, n, c, to);
    } else {
        int64_t jobs = d.n * d.c * d.to;
#pragma omp parallel for schedule(static)
        for (int64_t j = 0; j < jobs; ++j)
            maxpool3d_fwd_slab(x, y, idx, d, j / (d.c * d.to), (j / d.to) % d.c, j % d.to);
    }
}

// scatter into possibly overlapping positions: kept serial on every backend
// so the accumulation order never depends on the thread count
template <typename T>
void maxpool3d_bwd(const T* gy, const int64_t* idx, T* gx, int64_t out_elems) {
    for (int64_t o = 0; o < out_elems; ++o)
        if (idx[o] >= 0) gx[idx[o]] += gy[o];
}

template <typename T>
void upsample2x_fwd(const T* x, T* y, int64_t rows, int64_t hi, int64_t wi) {
    if (backend() == Backend::serial) {
        for (int64_t r = 0; r < rows; ++r) upsample2x_fwd_slab(x, y, hi, wi, r);
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) upsample2x_fwd_slab(x, y, hi, wi, r);
    }
}

template <typename T>
void upsample2x_bwd(const T* gy, T* gx, int64_t rows, int64_t hi, int64_t wi) {
    if (backend() == Backend::serial) {
        for (int64_t r = 0; r < rows; ++r) upsample2x_bwd_slab(gy, gx, hi, wi, r);
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t r = 0; r < rows; ++r) upsample2x_bwd_slab(gy, gx, hi, wi, r);
    }
}

template <typename T>
void bn_train_fwd(const T* x, const T* gamma, const T* beta, T* y, T* save_mean, T* save_invstd,
                  T* running_mean, T* running_var, T momentum, T eps, int64_t n, int64_t c,
                  int64_t m) {
    if (backend() == Backend::serial) {
        for (int64_t ch = 0; ch < c; ++ch)
            bn_train_channel(x, gamma, beta, y, save_mean, save_invstd, running_mean, running_var,
                             momentum, eps, n, c, m, ch);
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t ch = 0; ch < c; ++ch)
            bn_train_channel(x, gamma, beta, y, save_mean, save_invstd, running_mean, running_var,
                             momentum, eps, n, c, m, ch);
    }
}

template <typename T>
void bn_train_bwd(const T* gy, const T* x, const T* gamma, const T* save_mean,
                  const T* save_invstd, T* gx, T* ggamma, T* gbeta, int64_t n, int64_t c,
                  int64_t m) {
    if (backend() == Backend::serial) {
        for (int64_t ch = 0; ch < c; ++ch)
            bn_train_bwd_channel(gy, x, gamma, save_mean, save_invstd, gx, ggamma, gbeta, n, c, m,
                                 ch);
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t ch = 0; ch < c; ++ch)
            bn_train_bwd_channel(gy, x, gamma, save_mean, save_invstd, gx, ggamma, gbeta, n, c, m,
                                 ch);
    }
}

template <typename T>
void bn_eval_fwd(const T* x, const T* gamma, const T* beta, const T* running_mean,
                 const T* running_var, T* y, T eps, int64_t n, int64_t c, int64_t m) {
    if (backend() == Backend::serial) {
        for (int64_t ch = 0; ch < c; ++ch)
            bn_eval_channel(x, gamma, beta, running_mean, running_var, y, eps, n, c, m, ch);
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t ch = 0; ch < c; ++ch)
            bn_eval_channel(x, gamma, beta, running_mean, running_var, y, eps, n, c, m, ch);
    }
}

template <typename T>
void bn_eval_bwd(const T* gy, const T* x, const T* gamma, const T* running_mean,
                 const T* running_var, T* gx, T* ggamma, T* gbeta, T eps, int64_t n, int64_t c,
                 int64_t m) {
    if (backend() == Backend::serial) {
        for (int64_t ch = 0; ch < c; ++ch)
            bn_eval_bwd_channel(gy, x, gamma, running_mean, running_var, gx, ggamma, gbeta, eps,
                                n, c, m, ch);
    } else {
#pragma omp parallel for schedule(static)
        for (int64_t ch = 0; ch < c; ++ch)
            bn_eval_bwd_channel(gy, x, gamma, running_mean, running_var, gx, ggamma, gbeta, eps,
                                n, c, m, ch);
    }
}

// ---------------------------------------------------------------------------

#define MSAF_INSTANTIATE(T)                                                                     \
    template void conv3d_fwd<T>(const T*, const T*, const T*, T*, const Conv3dDims&);           \
    template void conv3d_bwd_data<T>(const T*, const T*, T*, const Conv3dDims&);                \
    template void conv3d_bwd_filter<T>(const T*, const T*, T*, T*, const Conv3dDims&);          \
    template void maxpool3d_fwd<T>(const T*, T*, int64_t*, const Pool3dDims&);                  \
    template void maxpool3d_bwd<T>(const T*, const int64_t*, T*, int64_t);                      \
    template void upsample2x_fwd<T>(const T*, T*, int64_t, int64_t, int64_t);                   \
    template void upsample2x_bwd<T>(const T*, T*, int64_t, int64_t, int64_t);                   \
    template void bn_train_fwd<T>(const T*, const T*, const T*, T*, T*, T*, T*, T*, T, T,       \
                                  int64_t, int64_t, int64_t);                                   \
    template void bn_train_bwd<T>(const T*, const T*, const T*, const T*, const T*, T*, T*, T*, \
                                  int64_t, int64_t, int64_t);                                   \
    template void bn_eval_fwd<T>(const T*, const T*, const T*, const T*, const T*, T*, T,       \
                                 int64_t, int64_t, int64_t);                                    \
    template void bn_eval_bwd<T>(const T*, const T*, const T*, const T*, const T*, T*, T*, T*,  \
                                 T, int64_t, int64_t, int64_t);

MSAF_INSTANTIATE(float)
MSAF_INSTANTIATE(double)

#undef MSAF_INSTANTIATE

} // namespace kern
} // namespace msaf
