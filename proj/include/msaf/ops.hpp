#pragma once

#include <array>

#include "msaf/tensor.hpp"

// Differentiable tensor ops. Forward results are computed eagerly; when
// gradient recording is on, each op attaches a node so backward() can reach
// it. Shapes are validated up front and violations throw with the offending
// extents in the message.

namespace msaf {

using Dims3 = std::array<int64_t, 3>;

// x [N,Cin,T,H,W], w [Cout,Cin,kT,kH,kW], b [Cout]
template <typename T>
Tensor<T> conv3d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 Dims3 stride = {1, 1, 1}, Dims3 pad = {1, 1, 1});

// x [N,Cin,H,W], w [Cout,Cin,kH,kW], b [Cout], stride 1
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int64_t pad = 1);

// x [N,C,T,H,W]; normalizes per channel over N,T,H,W
template <typename T>
Tensor<T> batchnorm3d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var,
                      bool training, T momentum = (T)0.1, T eps = (T)1e-5);

// x [N,C,H,W]; normalizes per channel over N,H,W
template <typename T>
Tensor<T> batchnorm2d(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                      Tensor<T>& running_mean, Tensor<T>& running_var,
                      bool training, T momentum = (T)0.1, T eps = (T)1e-5);

// x [N,C,T,H,W]; spatial-only window by default
template <typename T>
Tensor<T> maxpool3d(const Tensor<T>& x, Dims3 kernel = {1, 2, 2}, Dims3 stride = {1, 2, 2});

// x [N,C,H,W] -> [N,C,2H,2W], nearest neighbour
template <typename T>
Tensor<T> upsample2x(const Tensor<T>& x);

template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scalar_add(const Tensor<T>& x, T s);
template <typename T> Tensor<T> scalar_mul(const Tensor<T>& x, T s);
template <typename T> Tensor<T> relu(const Tensor<T>& x);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& x);
template <typename T> Tensor<T> tanh(const Tensor<T>& x);

// reduce to a scalar tensor
template <typename T> Tensor<T> sum(const Tensor<T>& x);

// drop the leading axis: [B, ...] -> [...]
template <typename T> Tensor<T> select0(const Tensor<T>& x, int64_t i);

// pick one timestep: [N,T,C,H,W] -> [N,C,H,W]
template <typename T> Tensor<T> time_slice(const Tensor<T>& x, int64_t t);

// swap channel and time axes: [N,C,T,H,W] -> [N,T,C,H,W]
template <typename T> Tensor<T> permute_tc(const Tensor<T>& x);

// Kullback-Leibler divergence between sum-normalized maps; differentiable
// w.r.t. yhat only (y is treated as ground truth).
template <typename T> Tensor<T> kl_loss(const Tensor<T>& y, const Tensor<T>& yhat, T eps = (T)1e-7);

// negative Pearson correlation on the raw (unnormalized) maps
template <typename T> Tensor<T> cc_loss(const Tensor<T>& y, const Tensor<T>& yhat);

// the training objective: kl_loss + cc_loss
template <typename T>
Tensor<T> total_loss(const Tensor<T>& y, const Tensor<T>& yhat, T eps = (T)1e-7);

} // namespace msaf
