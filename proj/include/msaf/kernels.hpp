#pragma once

#include <cstdint>

// Low-level dense kernels. Every kernel has a serial driver (kept as the
// reference and benchmark baseline) and an OpenMP driver parallelized over
// independent output slabs. Both drivers call the same noinline slab
// helpers, which hold all the floating-point work, so results are
// bit-identical regardless of backend or thread count.

namespace msaf {
namespace kern {

enum class Backend { serial, openmp };

Backend backend();
void set_backend(Backend b);

struct Conv3dDims {
    int64_t n, cin, ti, hi, wi;  // input
    int64_t cout, kt, kh, kw;    // filter
    int64_t st, sh, sw;          // stride
    int64_t pt, ph, pw;          // zero padding
    int64_t to, ho, wo;          // output
};

// y[n,co,to,ho,wo] = b[co] + sum_{ci,kt,kh,kw} x * w
template <typename T>
void conv3d_fwd(const T* x, const T* w, const T* b, T* y, const Conv3dDims& d);

// gx[n,ci,ti,hi,wi] += gather of gy * w (gx must be zeroed by the caller)
template <typename T>
void conv3d_bwd_data(const T* gy, const T* w, T* gx, const Conv3dDims& d);

// gw / gb accumulated in place; either may be null
template <typename T>
void conv3d_bwd_filter(const T* gy, const T* x, T* gw, T* gb, const Conv3dDims& d);

struct Pool3dDims {
    int64_t n, c, ti, hi, wi;  // input
    int64_t kt, kh, kw;        // window
    int64_t st, sh, sw;        // stride
    int64_t to, ho, wo;        // output
};

// idx records the flat input offset of the selected element (first maximum
// in (dt,dh,dw) scan order).
template <typename T>
void maxpool3d_fwd(const T* x, T* y, int64_t* idx, const Pool3dDims& d);

template <typename T>
void maxpool3d_bwd(const T* gy, const int64_t* idx, T* gx, int64_t out_elems);

// nearest neighbour, factor 2, layout [rows, hi, wi] -> [rows, 2hi, 2wi]
template <typename T>
void upsample2x_fwd(const T* x, T* y, int64_t rows, int64_t hi, int64_t wi);

template <typename T>
void upsample2x_bwd(const T* gy, T* gx, int64_t rows, int64_t hi, int64_t wi);

// Batch norm over layout [n, c, m] (m = product of the remaining axes).
// Statistics and reductions are single chains per channel accumulated in
// double, so results do not depend on the thread count.
template <typename T>
void bn_train_fwd(const T* x, const T* gamma, const T* beta, T* y,
                  T* save_mean, T* save_invstd, T* running_mean, T* running_var,
                  T momentum, T eps, int64_t n, int64_t c, int64_t m);

template <typename T>
void bn_train_bwd(const T* gy, const T* x, const T* gamma,
                  const T* save_mean, const T* save_invstd,
                  T* gx, T* ggamma, T* gbeta,
                  int64_t n, int64_t c, int64_t m);

template <typename T>
void bn_eval_fwd(const T* x, const T* gamma, const T* beta,
                 const T* running_mean, const T* running_var, T* y,
                 T eps, int64_t n, int64_t c, int64_t m);

template <typename T>
void bn_eval_bwd(const T* gy, const T* x, const T* gamma,
                 const T* running_mean, const T* running_var,
                 T* gx, T* ggamma, T* gbeta,
                 T eps, int64_t n, int64_t c, int64_t m);

} // namespace kern
} // namespace msaf
