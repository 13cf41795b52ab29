// The assembled attention predictor: two M3DE encoder paths (RGB and
// semantic), convLSTM temporal aggregation, SAF fusion, and the DAMD
// decoder, in one of three fusion modes:
//
//   vision_only  RGB path only; no semantic parameters exist at all
//   early        Z_v ∘ (1 + Z_s) fused per timestep, one shared cell
//   late         one cell per path, H_v ∘ (1 + H_s) fused after unrolling
#pragma once

#include <optional>

#include "msaf/layers.hpp"

namespace msaf {

enum class FusionMode { vision_only, early, late };

std::string fusion_name(FusionMode mode);
std::optional<FusionMode> fusion_from_name(const std::string& s);

// Channel plan for one model instance. The defaults are the reference
// (paper-scale) widths; reduced_model_dims() is the desk-scale plan used
// where training speed matters.
struct ModelDims {
    std::array<int64_t, 4> stage_widths{64, 128, 256, 512};
    int64_t hidden = 256;
    std::array<int64_t, 2> decoder_widths{128, 64};
};

ModelDims reduced_model_dims();

template <typename T>
struct MSAFNetModel {
    FusionMode mode = FusionMode::late;
    ModelDims dims;

    M3DEPath<T> vision;                      // RGB, 3 input channels
    std::optional<M3DEPath<T>> semantic;     // class maps, 1 channel; fusion modes only
    ConvLSTMCell<T> cell;                    // the vision cell (late) or the only cell
    std::optional<ConvLSTMCell<T>> cell_s;   // semantic cell, late fusion only
    DAMDDecoder<T> decoder;

    MSAFNetModel() = default;
    // Draw order: vision path, semantic path, cell, semantic cell, decoder.
    // All trainable parameters come out with requires_grad set.
    MSAFNetModel(FusionMode mode, const ModelDims& dims, Rng& rng);
};

// Every parameter of the active mode, prefixed vision. / semantic. /
// lstm. (or lstm_v. / lstm_s. in late mode) / decoder.
template <typename T>
ParamList<T> model_params(MSAFNetModel<T>& model);

// Late fusion: Â = H_v ∘ (1 + H_s). Exact residual identity at H_s = 0.
template <typename T>
Tensor<T> saf_late(const Tensor<T>& h_v, const Tensor<T>& h_s);

// Early fusion: unroll the cell over Z_v ∘ (1 + Z_s).
template <typename T>
Tensor<T> saf_early(ConvLSTMCell<T>& cell, const Tensor<T>& z_v, const Tensor<T>& z_s);

// Predict the last frame's attention map, [N,3,T,R,R] -> [N,1,R,R] in (0,1).
// The first overload is vision_only, the second the fusion modes; calling
// either on a model of the wrong mode is an error rather than silent misuse.
template <typename T>
Tensor<T> model_forward(MSAFNetModel<T>& model, const Tensor<T>& rgb, bool training = false);
template <typename T>
Tensor<T> model_forward(MSAFNetModel<T>& model, const Tensor<T>& rgb, const Tensor<T>& sem,
                        bool training = false);

// Checkpoint the model (meta entries describing mode and dims, then every
// parameter by name) and restore it; shapes and the exact entry set are
// validated on load.
void model_save(const std::string& path, MSAFNetModel<float>& model);
MSAFNetModel<float> model_load(const std::string& path);

}  // namespace msaf
