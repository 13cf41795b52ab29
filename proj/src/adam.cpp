#include "msaf/adam.hpp"

#include <cmath>

namespace msaf {

template <typename T>
AdamState<T> make_adam_state(const ParamList<T>& params) {
    AdamState<T> state;
    state.m.reserve(params.size());
    state.v.reserve(params.size());
    for (const NamedParam<T>& p : params) {
        state.m.push_back(Tensor<T>::zeros(p.value.shape()));
        state.v.push_back(Tensor<T>::zeros(p.value.shape()));
    }
    return state;
}

template <typename T>
void adam_step(ParamList<T>& params, AdamState<T>& state, const TrainConfig& cfg) {
    check(state.m.size() == params.size() && state.v.size() == params.size(),
          "adam_step: state holds " + std::to_string(state.m.size()) + " moment buffers for " +
              std::to_string(params.size()) + " parameters");
    ++state.step;

    const T b1 = (T)cfg.beta1, b2 = (T)cfg.beta2;
    const T lr = (T)cfg.learning_rate, eps = (T)cfg.adam_eps;
    const T c1 = (T)(1.0 - std::pow(cfg.beta1, (double)state.step));
    const T c2 = (T)(1.0 - std::pow(cfg.beta2, (double)state.step));

    for (size_t i = 0; i < params.size(); ++i) {
        if (!params[i].trainable) continue;
        Tensor<T>& p = params[i].value;
        check(state.m[i].shape() == p.shape(),
              "adam_step: moment shape " + shape_str(state.m[i].shape()) + " does not match " +
                  params[i].name + " " + shape_str(p.shape()));

        std::vector<T>& pv = p.values();
        std::vector<T>& mv = state.m[i].values();
        std::vector<T>& vv = state.v[i].values();
        const T* g = p.has_grad() ? p.grad().data() : nullptr;
        for (size_t k = 0; k < pv.size(); ++k) {
            T gk = g ? g[k] : (T)0;
            mv[k] = b1 * mv[k] + ((T)1 - b1) * gk;
            vv[k] = b2 * vv[k] + ((T)1 - b2) * gk * gk;
            T mhat = mv[k] / c1;
            T vhat = vv[k] / c2;
            pv[k] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

#define MSAF_INSTANTIATE_ADAM(T)                                  \
    template AdamState<T> make_adam_state(const ParamList<T>&);   \
    template void adam_step(ParamList<T>&, AdamState<T>&, const TrainConfig&);

MSAF_INSTANTIATE_ADAM(float)
MSAF_INSTANTIATE_ADAM(double)

}  // namespace msaf
