#include "msaf/layers.hpp"

#include <cmath>

namespace msaf {

namespace {

// Zero-mean uniform init with bound 1/sqrt(fan-in); fan-in is the product of
// every weight dim except the output channel.
template <typename T>
Tensor<T> conv_init(const Shape& shape, Rng& rng) {
    int64_t fan_in = 1;
    for (size_t i = 1; i < shape.size(); ++i) fan_in *= shape[i];
    T bound = (T)(1.0 / std::sqrt((double)fan_in));
    return Tensor<T>::randu(shape, rng, -bound, bound);
}

std::string join(const std::string& prefix, const std::string& leaf) {
    return prefix.empty() ? leaf : prefix + "." + leaf;
}

template <typename T>
void collect_bn(const std::string& prefix, Tensor<T>& gamma, Tensor<T>& beta, Tensor<T>& rm,
                Tensor<T>& rv, ParamList<T>& out) {
    out.push_back({join(prefix, "gamma"), gamma, true});
    out.push_back({join(prefix, "beta"), beta, true});
    out.push_back({join(prefix, "rm"), rm, false});
    out.push_back({join(prefix, "rv"), rv, false});
}

}  // namespace

// ---------------------------------------------------------------------------
// M3DE
// ---------------------------------------------------------------------------

template <typename T>
M3DEPath<T>::M3DEPath(int64_t in_ch, const std::array<int64_t, 4>& widths, Rng& rng)
    : in_channels(in_ch), stage_widths(widths) {
    check(in_ch >= 1, "M3DEPath needs at least one input channel, got " + std::to_string(in_ch));
    for (int64_t w : widths)
        check(w >= 1, "M3DEPath stage widths must be positive, got " + std::to_string(w));
    for (int k = 0; k < 8; ++k) {
        int64_t ci = conv_in(k), co = conv_out(k);
        conv_w[(size_t)k] = conv_init<T>({co, ci, 3, 3, 3}, rng);
        conv_b[(size_t)k] = Tensor<T>::zeros({co});
        if (k < 7) {
            bn_gamma[(size_t)k] = Tensor<T>::full({co}, (T)1);
            bn_beta[(size_t)k] = Tensor<T>::zeros({co});
            bn_rm[(size_t)k] = Tensor<T>::zeros({co});
            bn_rv[(size_t)k] = Tensor<T>::full({co}, (T)1);
        }
    }
}

template <typename T>
void M3DEPath<T>::collect(const std::string& prefix, ParamList<T>& out) {
    for (int k = 0; k < 8; ++k) {
        std::string conv = join(prefix, "conv" + std::to_string(k));
        out.push_back({join(conv, "w"), conv_w[(size_t)k], true});
        out.push_back({join(conv, "b"), conv_b[(size_t)k], true});
        if (k < 7) {
            std::string bn = join(prefix, "bn" + std::to_string(k));
            collect_bn(bn, bn_gamma[(size_t)k], bn_beta[(size_t)k], bn_rm[(size_t)k],
                       bn_rv[(size_t)k], out);
        }
    }
}

int64_t m3de_parameter_count(int64_t in_channels, const std::array<int64_t, 4>& stage_widths) {
    int64_t total = 0;
    for (int k = 0; k < 8; ++k) {
        int64_t co = stage_widths[(size_t)(k / 2)];
        int64_t ci = k == 0 ? in_channels : stage_widths[(size_t)((k - 1) / 2)];
        total += co * ci * 27 + co;       // conv weight + bias
        if (k < 7) total += 2 * co;       // BN gamma + beta
    }
    return total;
}

template <typename T>
Tensor<T> m3de_forward(M3DEPath<T>& path, const Tensor<T>& clip, bool training) {
    check(clip.rank() == 5,
          "m3de_forward expects a clip [N,C,T,H,W], got " + shape_str(clip.shape()));
    check(clip.dim(1) == path.in_channels,
          "m3de_forward expects " + std::to_string(path.in_channels) + " input channels, got " +
              std::to_string(clip.dim(1)));
    int64_t h = clip.dim(3), w = clip.dim(4);
    check(h == w && h % 8 == 0 && h > 0,
          "m3de_forward expects a square spatial size divisible by 8 (256 at paper scale, 64 "
          "reduced), got " +
              std::to_string(h) + "x" + std::to_string(w));

    Tensor<T> x = clip;
    for (int k = 0; k < 8; ++k) {
        x = conv3d(x, path.conv_w[(size_t)k], path.conv_b[(size_t)k]);
        if (k < 7)
            x = batchnorm3d(x, path.bn_gamma[(size_t)k], path.bn_beta[(size_t)k],
                            path.bn_rm[(size_t)k], path.bn_rv[(size_t)k], training);
        x = relu(x);
        if (k == 1 || k == 3 || k == 5) x = maxpool3d(x);
    }
    return permute_tc(x);  // [N,C,T,h,w] -> [N,T,C,h,w]
}

// ---------------------------------------------------------------------------
// convLSTM
// ---------------------------------------------------------------------------

template <typename T>
ConvLSTMCell<T>::ConvLSTMCell(int64_t in_ch, int64_t hidden_ch, Rng& rng)
    : in_channels(in_ch), hidden_channels(hidden_ch) {
    check(in_ch >= 1 && hidden_ch >= 1, "ConvLSTMCell channel counts must be positive");
    Tensor<T>* wz[] = {&w_zi, &w_zf, &w_zg, &w_zo};
    Tensor<T>* wh[] = {&w_hi, &w_hf, &w_hg, &w_ho};
    Tensor<T>* bz[] = {&b_zi, &b_zf, &b_zg, &b_zo};
    Tensor<T>* bh[] = {&b_hi, &b_hf, &b_hg, &b_ho};
    for (int g = 0; g < 4; ++g) {
        *wz[g] = conv_init<T>({hidden_ch, in_ch, 3, 3}, rng);
        *wh[g] = conv_init<T>({hidden_ch, hidden_ch, 3, 3}, rng);
        *bz[g] = Tensor<T>::zeros({hidden_ch});
        *bh[g] = Tensor<T>::zeros({hidden_ch});
    }
}

template <typename T>
void ConvLSTMCell<T>::collect(const std::string& prefix, ParamList<T>& out) {
    const char* gate = "ifgo";
    Tensor<T>* wz[] = {&w_zi, &w_zf, &w_zg, &w_zo};
    Tensor<T>* wh[] = {&w_hi, &w_hf, &w_hg, &w_ho};
    Tensor<T>* bz[] = {&b_zi, &b_zf, &b_zg, &b_zo};
    Tensor<T>* bh[] = {&b_hi, &b_hf, &b_hg, &b_ho};
    for (int g = 0; g < 4; ++g) {
        std::string s(1, gate[g]);
        out.push_back({join(prefix, "w_z" + s), *wz[g], true});
        out.push_back({join(prefix, "b_z" + s), *bz[g], true});
        out.push_back({join(prefix, "w_h" + s), *wh[g], true});
        out.push_back({join(prefix, "b_h" + s), *bh[g], true});
    }
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> convlstm_step(ConvLSTMCell<T>& cell, const Tensor<T>& z,
                                              const Tensor<T>& h_prev, const Tensor<T>& c_prev) {
    check(z.rank() == 4 && z.dim(1) == cell.in_channels,
          "convlstm_step expects Z [N," + std::to_string(cell.in_channels) + ",h,w], got " +
              shape_str(z.shape()));
    for (const Tensor<T>* s : {&h_prev, &c_prev})
        check(s->rank() == 4 && s->dim(0) == z.dim(0) && s->dim(1) == cell.hidden_channels &&
                  s->dim(2) == z.dim(2) && s->dim(3) == z.dim(3),
              "convlstm_step expects state [N," + std::to_string(cell.hidden_channels) +
                  ",h,w] matching Z, got " + shape_str(s->shape()));

    auto gate = [&](const Tensor<T>& wz, const Tensor<T>& bz, const Tensor<T>& wh,
                    const Tensor<T>& bh) {
        return add(conv2d(z, wz, bz), conv2d(h_prev, wh, bh));
    };
    Tensor<T> i = sigmoid(gate(cell.w_zi, cell.b_zi, cell.w_hi, cell.b_hi));
    Tensor<T> f = sigmoid(gate(cell.w_zf, cell.b_zf, cell.w_hf, cell.b_hf));
    Tensor<T> g = tanh(gate(cell.w_zg, cell.b_zg, cell.w_hg, cell.b_hg));
    Tensor<T> o = sigmoid(gate(cell.w_zo, cell.b_zo, cell.w_ho, cell.b_ho));
    Tensor<T> c = add(hadamard(f, c_prev), hadamard(i, g));
    Tensor<T> h = hadamard(o, tanh(c));
    return {h, c};
}

template <typename T>
Tensor<T> convlstm_unroll(ConvLSTMCell<T>& cell, const Tensor<T>& zseq) {
    check(zseq.rank() == 5,
          "convlstm_unroll expects a sequence [N,T,C,h,w], got " + shape_str(zseq.shape()));
    int64_t steps = zseq.dim(1);
    check(steps >= 1, "convlstm_unroll needs at least one time step");

    Shape state{zseq.dim(0), cell.hidden_channels, zseq.dim(3), zseq.dim(4)};
    Tensor<T> h = Tensor<T>::zeros(state);
    Tensor<T> c = Tensor<T>::zeros(state);
    for (int64_t t = 0; t < steps; ++t) {
        auto [hn, cn] = convlstm_step(cell, time_slice(zseq, t), h, c);
        h = hn;
        c = cn;
    }
    return h;
}

// ---------------------------------------------------------------------------
// DAMD
// ---------------------------------------------------------------------------

template <typename T>
DAMDDecoder<T>::DAMDDecoder(int64_t in_ch, const std::array<int64_t, 2>& w, Rng& rng)
    : in_channels(in_ch), widths(w) {
    check(in_ch >= 1, "DAMDDecoder needs at least one input channel");
    check(w[0] >= 1 && w[1] >= 1, "DAMDDecoder widths must be positive");
    int64_t plan[4] = {in_ch, w[0], w[1], 1};
    for (int k = 0; k < 3; ++k) {
        conv_w[(size_t)k] = conv_init<T>({plan[k + 1], plan[k], 3, 3}, rng);
        conv_b[(size_t)k] = Tensor<T>::zeros({plan[k + 1]});
        if (k < 2) {
            bn_gamma[(size_t)k] = Tensor<T>::full({plan[k + 1]}, (T)1);
            bn_beta[(size_t)k] = Tensor<T>::zeros({plan[k + 1]});
            bn_rm[(size_t)k] = Tensor<T>::zeros({plan[k + 1]});
            bn_rv[(size_t)k] = Tensor<T>::full({plan[k + 1]}, (T)1);
        }
    }
}

template <typename T>
void DAMDDecoder<T>::collect(const std::string& prefix, ParamList<T>& out) {
    for (int k = 0; k < 3; ++k) {
        std::string conv = join(prefix, "conv" + std::to_string(k));
        out.push_back({join(conv, "w"), conv_w[(size_t)k], true});
        out.push_back({join(conv, "b"), conv_b[(size_t)k], true});
        if (k < 2) {
            std::string bn = join(prefix, "bn" + std::to_string(k));
            collect_bn(bn, bn_gamma[(size_t)k], bn_beta[(size_t)k], bn_rm[(size_t)k],
                       bn_rv[(size_t)k], out);
        }
    }
}

template <typename T>
Tensor<T> damd_forward(DAMDDecoder<T>& dec, const Tensor<T>& a, bool training) {
    check(a.rank() == 4 && a.dim(1) == dec.in_channels,
          "damd_forward expects [N," + std::to_string(dec.in_channels) + ",h,w], got " +
              shape_str(a.shape()));
    Tensor<T> x = a;
    for (int k = 0; k < 3; ++k) {
        x = upsample2x(x);
        x = conv2d(x, dec.conv_w[(size_t)k], dec.conv_b[(size_t)k]);
        if (k < 2) {
            x = relu(x);
            x = batchnorm2d(x, dec.bn_gamma[(size_t)k], dec.bn_beta[(size_t)k],
                            dec.bn_rm[(size_t)k], dec.bn_rv[(size_t)k], training);
        }
    }
    return sigmoid(x);
}

#define MSAF_INSTANTIATE_LAYERS(T)                                                               \
    template struct M3DEPath<T>;                                                                 \
    template struct ConvLSTMCell<T>;                                                             \
    template struct DAMDDecoder<T>;                                                              \
    template Tensor<T> m3de_forward(M3DEPath<T>&, const Tensor<T>&, bool);                       \
    template std::pair<Tensor<T>, Tensor<T>> convlstm_step(ConvLSTMCell<T>&, const Tensor<T>&,   \
                                                           const Tensor<T>&, const Tensor<T>&);  \
    template Tensor<T> convlstm_unroll(ConvLSTMCell<T>&, const Tensor<T>&);                      \
    template Tensor<T> damd_forward(DAMDDecoder<T>&, const Tensor<T>&, bool);

MSAF_INSTANTIATE_LAYERS(float)
MSAF_INSTANTIATE_LAYERS(double)

}  // namespace msaf
