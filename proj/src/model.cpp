#include "msaf/model.hpp"

#include <map>

namespace msaf {

std::string fusion_name(FusionMode mode) {
    switch (mode) {
        case FusionMode::vision_only: return "vision_only";
        case FusionMode::early: return "early";
        case FusionMode::late: return "late";
    }
    fail("unreachable fusion mode value");
}

std::optional<FusionMode> fusion_from_name(const std::string& s) {
    if (s == "vision_only") return FusionMode::vision_only;
    if (s == "early") return FusionMode::early;
    if (s == "late") return FusionMode::late;
    return std::nullopt;
}

ModelDims reduced_model_dims() {
    ModelDims dims;
    dims.stage_widths = {4, 8, 12, 16};
    dims.hidden = 8;
    dims.decoder_widths = {16, 8};
    return dims;
}

template <typename T>
MSAFNetModel<T>::MSAFNetModel(FusionMode mode_, const ModelDims& dims_, Rng& rng)
    : mode(mode_), dims(dims_) {
    vision = M3DEPath<T>(3, dims.stage_widths, rng);
    if (mode != FusionMode::vision_only) semantic.emplace(1, dims.stage_widths, rng);
    cell = ConvLSTMCell<T>(dims.stage_widths[3], dims.hidden, rng);
    if (mode == FusionMode::late) cell_s.emplace(dims.stage_widths[3], dims.hidden, rng);
    decoder = DAMDDecoder<T>(dims.hidden, dims.decoder_widths, rng);

    ParamList<T> params = model_params(*this);
    for (NamedParam<T>& p : params)
        if (p.trainable) p.value.set_requires_grad(true);
}

template <typename T>
ParamList<T> model_params(MSAFNetModel<T>& model) {
    ParamList<T> out;
    model.vision.collect("vision", out);
    if (model.semantic) model.semantic->collect("semantic", out);
    if (model.mode == FusionMode::late) {
        model.cell.collect("lstm_v", out);
        model.cell_s->collect("lstm_s", out);
    } else {
        model.cell.collect("lstm", out);
    }
    model.decoder.collect("decoder", out);
    return out;
}

template <typename T>
Tensor<T> saf_late(const Tensor<T>& h_v, const Tensor<T>& h_s) {
    check(h_v.shape() == h_s.shape(), "saf_late: hidden maps differ, " + shape_str(h_v.shape()) +
                                          " vs " + shape_str(h_s.shape()));
    return hadamard(h_v, scalar_add(h_s, (T)1));
}

template <typename T>
Tensor<T> saf_early(ConvLSTMCell<T>& cell, const Tensor<T>& z_v, const Tensor<T>& z_s) {
    check(z_v.shape() == z_s.shape(), "saf_early: feature sequences differ, " +
                                          shape_str(z_v.shape()) + " vs " +
                                          shape_str(z_s.shape()));
    return convlstm_unroll(cell, hadamard(z_v, scalar_add(z_s, (T)1)));
}

template <typename T>
Tensor<T> model_forward(MSAFNetModel<T>& model, const Tensor<T>& rgb, bool training) {
    check(model.mode == FusionMode::vision_only,
          "model in " + fusion_name(model.mode) + " fusion mode requires a semantic clip");
    Tensor<T> z = m3de_forward(model.vision, rgb, training);
    Tensor<T> h = convlstm_unroll(model.cell, z);
    return damd_forward(model.decoder, h, training);
}

template <typename T>
Tensor<T> model_forward(MSAFNetModel<T>& model, const Tensor<T>& rgb, const Tensor<T>& sem,
                        bool training) {
    check(model.mode != FusionMode::vision_only,
          "semantic clip supplied in vision_only mode");
    Tensor<T> z_v = m3de_forward(model.vision, rgb, training);
    Tensor<T> z_s = m3de_forward(*model.semantic, sem, training);
    Tensor<T> fused;
    if (model.mode == FusionMode::early) {
        fused = saf_early(model.cell, z_v, z_s);
    } else {
        Tensor<T> h_v = convlstm_unroll(model.cell, z_v);
        Tensor<T> h_s = convlstm_unroll(*model.cell_s, z_s);
        fused = saf_late(h_v, h_s);
    }
    return damd_forward(model.decoder, fused, training);
}

namespace {

TensorF meta_scalar(float v) { return TensorF::full({}, v); }

TensorF meta_vector(const int64_t* v, int64_t n) {
    TensorF t = TensorF::zeros({n});
    for (int64_t i = 0; i < n; ++i) t.values()[(size_t)i] = (float)v[i];
    return t;
}

int64_t meta_int(const std::map<std::string, TensorF>& entries, const std::string& name) {
    auto it = entries.find(name);
    check(it != entries.end(), "checkpoint is missing " + name);
    check(it->second.numel() == 1, "checkpoint " + name + " must hold one value");
    float v = it->second.values()[0];
    check(v == (float)(int64_t)v && v >= 0, "checkpoint " + name + " is not a valid size");
    return (int64_t)v;
}

}  // namespace

void model_save(const std::string& path, MSAFNetModel<float>& model) {
    std::vector<std::pair<std::string, TensorF>> entries;
    entries.emplace_back("meta.fusion_mode", meta_scalar((float)(int)model.mode));
    entries.emplace_back("meta.stage_widths", meta_vector(model.dims.stage_widths.data(), 4));
    entries.emplace_back("meta.hidden", meta_scalar((float)model.dims.hidden));
    entries.emplace_back("meta.decoder_widths",
                         meta_vector(model.dims.decoder_widths.data(), 2));
    for (NamedParam<float>& p : model_params(model)) entries.emplace_back(p.name, p.value);
    checkpoint_save(path, entries);
}

MSAFNetModel<float> model_load(const std::string& path) {
    std::map<std::string, TensorF> entries;
    for (auto& [name, tensor] : checkpoint_load(path))
        check(entries.emplace(name, tensor).second,
              "checkpoint has duplicate entry " + name + " in " + path);

    int64_t mode_code = meta_int(entries, "meta.fusion_mode");
    check(mode_code <= 2, "checkpoint fusion mode code " + std::to_string(mode_code) +
                              " is not one of vision_only/early/late");
    ModelDims dims;
    auto widths = entries.find("meta.stage_widths");
    check(widths != entries.end() && widths->second.shape() == Shape{4},
          "checkpoint is missing meta.stage_widths[4]");
    for (int i = 0; i < 4; ++i) dims.stage_widths[(size_t)i] = (int64_t)widths->second.values()[(size_t)i];
    dims.hidden = meta_int(entries, "meta.hidden");
    auto dwidths = entries.find("meta.decoder_widths");
    check(dwidths != entries.end() && dwidths->second.shape() == Shape{2},
          "checkpoint is missing meta.decoder_widths[2]");
    for (int i = 0; i < 2; ++i)
        dims.decoder_widths[(size_t)i] = (int64_t)dwidths->second.values()[(size_t)i];

    Rng rng(0);  // placeholder draws, overwritten below
    MSAFNetModel<float> model((FusionMode)mode_code, dims, rng);

    size_t used = 4;  // the meta entries
    for (NamedParam<float>& p : model_params(model)) {
        auto it = entries.find(p.name);
        check(it != entries.end(), "checkpoint is missing parameter " + p.name);
        check(it->second.shape() == p.value.shape(),
              "checkpoint parameter " + p.name + " has shape " + shape_str(it->second.shape()) +
                  ", the model expects " + shape_str(p.value.shape()));
        p.value.values() = it->second.values();
        ++used;
    }
    check(used == entries.size(),
          "checkpoint holds entries that match no parameter of a " +
              fusion_name((FusionMode)mode_code) + " model");
    return model;
}

#define MSAF_INSTANTIATE_MODEL(T)                                                                \
    template struct MSAFNetModel<T>;                                                             \
    template ParamList<T> model_params(MSAFNetModel<T>&);                                        \
    template Tensor<T> saf_late(const Tensor<T>&, const Tensor<T>&);                             \
    template Tensor<T> saf_early(ConvLSTMCell<T>&, const Tensor<T>&, const Tensor<T>&);          \
    template Tensor<T> model_forward(MSAFNetModel<T>&, const Tensor<T>&, bool);                  \
    template Tensor<T> model_forward(MSAFNetModel<T>&, const Tensor<T>&, const Tensor<T>&, bool);

MSAF_INSTANTIATE_MODEL(float)
MSAF_INSTANTIATE_MODEL(double)

}  // namespace msaf
