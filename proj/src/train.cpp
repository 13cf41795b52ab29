#include "msaf/train.hpp"

#include <cstdio>
#include <cstring>

#include "msaf/adam.hpp"
#include "msaf/rng.hpp"

namespace msaf {

void validate_config(const TrainConfig& cfg) {
    check(cfg.learning_rate > 0, "train config: learning_rate must be positive");
    check(cfg.beta1 > 0 && cfg.beta1 < 1, "train config: beta1 must be in (0,1)");
    check(cfg.beta2 > 0 && cfg.beta2 < 1, "train config: beta2 must be in (0,1)");
    check(cfg.adam_eps > 0, "train config: adam_eps must be positive");
    check(cfg.batch_clips >= 1, "train config: batch_clips must be at least 1");
    check(cfg.clip_len >= 1, "train config: clip_len must be at least 1");
    check(cfg.epochs >= 1, "train config: epochs must be at least 1");
    check(cfg.resolution == 256 || cfg.resolution == 64,
          "train config: resolution must be 256 or 64");
}

namespace {

// Copy clip `src` into row `b` of a batch leaf shaped [B, ...]; clip shapes
// were validated against the config up front.
void place(TensorF& batch, int64_t b, const TensorF& src) {
    int64_t stride = src.numel();
    std::memcpy(batch.values().data() + b * stride, src.values().data(),
                (size_t)stride * sizeof(float));
}

}  // namespace

TrainResult train(MSAFNetModel<float>& model, const std::vector<ClipSample>& clips,
                  const TrainConfig& cfg) {
    validate_config(cfg);
    check(!clips.empty(), "train: empty clip pool");

    const int64_t T = cfg.clip_len, R = cfg.resolution, B = cfg.batch_clips;
    const Shape rgb_shape{3, T, R, R}, sem_shape{1, T, R, R}, label_shape{1, R, R};
    for (size_t i = 0; i < clips.size(); ++i) {
        check(clips[i].rgb.shape() == rgb_shape,
              "train: clip " + std::to_string(i) + " rgb is " + shape_str(clips[i].rgb.shape()) +
                  ", config wants " + shape_str(rgb_shape));
        check(clips[i].sem.shape() == sem_shape,
              "train: clip " + std::to_string(i) + " semantic is " +
                  shape_str(clips[i].sem.shape()) + ", config wants " + shape_str(sem_shape));
        check(clips[i].label.shape() == label_shape,
              "train: clip " + std::to_string(i) + " label is " +
                  shape_str(clips[i].label.shape()) + ", config wants " + shape_str(label_shape));
    }

    const bool needs_semantic = model.mode != FusionMode::vision_only;
    const int64_t steps_per_epoch = ((int64_t)clips.size() + B - 1) / B;
    const int64_t total_steps = cfg.epochs * steps_per_epoch;

    ParamList<float> params = model_params(model);
    AdamState<float> state = make_adam_state(params);
    Rng rng(cfg.seed);

    TrainResult result;
    result.trace.reserve((size_t)total_steps);
    for (int64_t step = 1; step <= total_steps; ++step) {
        TensorF rgb = TensorF::zeros({B, 3, T, R, R});
        TensorF sem = TensorF::zeros({B, 1, T, R, R});
        TensorF label = TensorF::zeros({B, 1, R, R});
        for (int64_t b = 0; b < B; ++b) {
            const ClipSample& clip = clips[rng.below((uint64_t)clips.size())];
            place(rgb, b, clip.rgb);
            if (needs_semantic) place(sem, b, clip.sem);
            place(label, b, clip.label);
        }

        TensorF yhat = needs_semantic ? model_forward(model, rgb, sem, true)
                                      : model_forward(model, rgb, true);

        // Mean over the batch of the per-clip losses.
        TensorF kl_sum, cc_sum;
        for (int64_t b = 0; b < B; ++b) {
            TensorF y_b = select0(label, b);
            TensorF yhat_b = select0(yhat, b);
            TensorF kl_b = kl_loss(y_b, yhat_b);
            TensorF cc_b = cc_loss(y_b, yhat_b);
            kl_sum = b == 0 ? kl_b : add(kl_sum, kl_b);
            cc_sum = b == 0 ? cc_b : add(cc_sum, cc_b);
        }
        TensorF kl_mean = scalar_mul(kl_sum, 1.0f / (float)B);
        TensorF cc_mean = scalar_mul(cc_sum, 1.0f / (float)B);
        TensorF loss = add(kl_mean, cc_mean);

        backward(loss);
        adam_step(params, state, cfg);
        for (NamedParam<float>& p : params)
            if (p.trainable && p.value.has_grad()) p.value.zero_grad();

        result.trace.push_back({step, (double)loss.values()[0], (double)kl_mean.values()[0],
                                (double)cc_mean.values()[0]});
    }
    return result;
}

std::string loss_trace_csv(const std::vector<StepLoss>& trace) {
    std::string out = "step,loss,kl,cc\n";
    char line[160];
    for (const StepLoss& s : trace) {
        std::snprintf(line, sizeof line, "%lld,%.9g,%.9g,%.9g\n", (long long)s.step, s.loss, s.kl,
                      s.cc);
        out += line;
    }
    return out;
}

}  // namespace msaf
