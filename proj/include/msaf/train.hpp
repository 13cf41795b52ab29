// Training: hyperparameters, the Adam-driven clip loop, and the loss trace.
#pragma once

#include <string>
#include <vector>

#include "msaf/data.hpp"
#include "msaf/model.hpp"

namespace msaf {

struct TrainConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int64_t batch_clips = 12;
    int64_t clip_len = 5;  // T
    int64_t epochs = 3;
    uint64_t seed = 0;
    int64_t resolution = 256;  // 256 (reference) or 64 (reduced)
};

void validate_config(const TrainConfig& cfg);

struct StepLoss {
    int64_t step = 0;  // 1-based
    double loss = 0, kl = 0, cc = 0;
};

struct TrainResult {
    std::vector<StepLoss> trace;
};

// Optimize the model in place over a pool of pre-sampled clips: per step,
// batch_clips clips drawn uniformly with replacement, loss = mean over the
// batch of kl_loss + cc_loss per clip, one Adam update. An epoch is
// ceil(|pool| / batch_clips) steps; bit-reproducible given the seed.
TrainResult train(MSAFNetModel<float>& model, const std::vector<ClipSample>& clips,
                  const TrainConfig& cfg);

// "step,loss,kl,cc" CSV, one row per step.
std::string loss_trace_csv(const std::vector<StepLoss>& trace);

}  // namespace msaf
