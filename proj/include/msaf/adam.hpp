// Bias-corrected Adam over a ParamList. Moment buffers sit outside the
// layers so optimizer state never leaks into checkpoints.
#pragma once

#include "msaf/layers.hpp"
#include "msaf/train.hpp"

namespace msaf {

template <typename T>
struct AdamState {
    int64_t step = 0;                // completed updates
    std::vector<Tensor<T>> m, v;     // aligned with the ParamList order
};

template <typename T>
AdamState<T> make_adam_state(const ParamList<T>& params);

// One update of every trainable parameter:
//   m = β1 m + (1−β1) g;  v = β2 v + (1−β2) g²
//   p −= lr · (m / (1−β1^t)) / (sqrt(v / (1−β2^t)) + ε)
// A parameter whose gradient was never populated is treated as having
// gradient zero. Non-trainable entries (running statistics) are skipped.
template <typename T>
void adam_step(ParamList<T>& params, AdamState<T>& state, const TrainConfig& cfg);

}  // namespace msaf
