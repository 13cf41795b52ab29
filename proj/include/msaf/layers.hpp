// Network building blocks: the M3DE 3D-conv encoder path, the convLSTM cell,
// and the DAMD upsampling decoder, plus parameter init and enumeration.
//
// All blocks are plain structs of tensors; forward functions build the
// autodiff graph through the ops layer. Layers are templated so the composed
// model can be gradient-checked in double precision.
#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "msaf/ops.hpp"
#include "msaf/rng.hpp"

namespace msaf {

// A parameter handle for optimizers and checkpoints. The tensor shares
// storage with the owning layer, so in-place updates through `value`
// are updates to the layer. Running statistics are enumerated with
// trainable=false: they are saved/restored but never touched by the
// optimizer.
template <typename T>
struct NamedParam {
    std::string name;
    Tensor<T> value;
    bool trainable = true;
};

template <typename T>
using ParamList = std::vector<NamedParam<T>>;

// ---------------------------------------------------------------------------
// M3DE encoder path
//
// Four integrations over a clip [N,C,T,H,W]:
//   integrations 1-3: conv3d + BN + conv3d + BN + maxpool(1,2,2)
//   integration 4:    conv3d + BN + conv3d            (no BN on the last conv)
// Every conv is 3x3x3, stride 1, pad 1, followed by ReLU (after the BN where
// one exists). 8 convs + 7 BNs + 3 pools = 18 blocks; spatial size shrinks
// by 8x, the temporal extent is preserved.
// ---------------------------------------------------------------------------
template <typename T>
struct M3DEPath {
    int64_t in_channels = 3;
    // One width per integration; both convs of an integration share it.
    // Reference plan: 64 / 128 / 256 / 512.
    std::array<int64_t, 4> stage_widths{64, 128, 256, 512};

    // Blocks flattened in execution order: conv k feeds bn k (k < 7);
    // pools sit after blocks 1, 3 and 5.
    std::array<Tensor<T>, 8> conv_w;
    std::array<Tensor<T>, 8> conv_b;
    std::array<Tensor<T>, 7> bn_gamma;
    std::array<Tensor<T>, 7> bn_beta;
    std::array<Tensor<T>, 7> bn_rm;
    std::array<Tensor<T>, 7> bn_rv;

    M3DEPath() = default;
    M3DEPath(int64_t in_ch, const std::array<int64_t, 4>& widths, Rng& rng);

    // Output channels of conv k under the stage plan.
    int64_t conv_out(int k) const { return stage_widths[(size_t)(k / 2)]; }
    int64_t conv_in(int k) const { return k == 0 ? in_channels : conv_out(k - 1); }
    int64_t out_channels() const { return stage_widths[3]; }

    void collect(const std::string& prefix, ParamList<T>& out);
};

// Trainable parameter count (conv weights+biases, BN gamma+beta) of one
// M3DE path under a channel plan. The reference plan with 3 input channels
// is pinned as a regression constant.
int64_t m3de_parameter_count(int64_t in_channels, const std::array<int64_t, 4>& stage_widths);
inline constexpr int64_t kM3DEReferenceParamCount = 14055104;

// Encode a clip [N,C,T,H,W] -> per-frame feature maps [N,T,C_out,H/8,W/8].
// Spatial size must be square and a multiple of 8 (256 at paper scale,
// 64 in the reduced configuration). `training` selects the BN mode.
template <typename T>
Tensor<T> m3de_forward(M3DEPath<T>& path, const Tensor<T>& clip, bool training = false);

// ---------------------------------------------------------------------------
// convLSTM cell
//
// Gates are 3x3 convolutions (pad 1) over the input Z_t and the previous
// hidden map H_{t-1}, each with its own bias:
//   i = sigmoid(Wzi*Z + bzi + Whi*H + bhi)
//   f = sigmoid(Wzf*Z + bzf + Whf*H + bhf)
//   g = tanh   (Wzg*Z + bzg + Whg*H + bhg)
//   o = sigmoid(Wzo*Z + bzo + Who*H + bho)
//   C_t = f . C_{t-1} + i . g
//   H_t = o . tanh(C_t)
// ---------------------------------------------------------------------------
template <typename T>
struct ConvLSTMCell {
    int64_t in_channels = 512;
    int64_t hidden_channels = 256;

    Tensor<T> w_zi, w_hi, w_zf, w_hf, w_zg, w_hg, w_zo, w_ho;
    Tensor<T> b_zi, b_hi, b_zf, b_hf, b_zg, b_hg, b_zo, b_ho;

    ConvLSTMCell() = default;
    ConvLSTMCell(int64_t in_ch, int64_t hidden_ch, Rng& rng);

    void collect(const std::string& prefix, ParamList<T>& out);
};

// One recurrence step: (Z_t [N,Cin,h,w], H_{t-1}, C_{t-1}) -> (H_t, C_t).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> convlstm_step(ConvLSTMCell<T>& cell, const Tensor<T>& z,
                                              const Tensor<T>& h_prev, const Tensor<T>& c_prev);

// Run the cell over a feature sequence [N,T,Cin,h,w] from H_0 = C_0 = 0 and
// return the final hidden map H_T [N,hidden,h,w]. T must be at least 1.
template <typename T>
Tensor<T> convlstm_unroll(ConvLSTMCell<T>& cell, const Tensor<T>& zseq);

// ---------------------------------------------------------------------------
// DAMD decoder
//
// Three x2 upsampling stages mapping the fused hidden map to a
// full-resolution attention map in (0,1):
//   up -> conv3x3(w0) -> ReLU -> BN
//   up -> conv3x3(w1) -> ReLU -> BN
//   up -> conv3x3(1)  -> sigmoid
// ---------------------------------------------------------------------------
template <typename T>
struct DAMDDecoder {
    int64_t in_channels = 256;
    // Widths of the two intermediate convs; the last conv always has one
    // output channel. Reference plan: 128 / 64.
    std::array<int64_t, 2> widths{128, 64};

    std::array<Tensor<T>, 3> conv_w;
    std::array<Tensor<T>, 3> conv_b;
    std::array<Tensor<T>, 2> bn_gamma;
    std::array<Tensor<T>, 2> bn_beta;
    std::array<Tensor<T>, 2> bn_rm;
    std::array<Tensor<T>, 2> bn_rv;

    DAMDDecoder() = default;
    DAMDDecoder(int64_t in_ch, const std::array<int64_t, 2>& w, Rng& rng);

    void collect(const std::string& prefix, ParamList<T>& out);
};

// Decode a hidden map [N,Cin,h,w] -> attention map [N,1,8h,8w].
template <typename T>
Tensor<T> damd_forward(DAMDDecoder<T>& dec, const Tensor<T>& a, bool training = false);

// ---------------------------------------------------------------------------
// Checkpoint I/O
//
// Binary little-endian container: magic "MSAF", format version (u32), entry
// count (u32); each entry = name length (u32), name bytes, dtype code (u32,
// 0 = f32), rank (u32), extents (u32 each), raw values. Round-trips are
// bit-exact; entry order is preserved.
// ---------------------------------------------------------------------------
inline constexpr uint32_t kCheckpointVersion = 1;

void checkpoint_save(const std::string& path,
                     const std::vector<std::pair<std::string, TensorF>>& entries);
std::vector<std::pair<std::string, TensorF>> checkpoint_load(const std::string& path);

}  // namespace msaf
