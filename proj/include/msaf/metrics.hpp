// The six saliency metrics plus FTA peak extraction. All metrics are pure
// double-precision functions over rank-2 [h,w] maps; batch evaluation pairs
// prediction and ground-truth directories frame by frame.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "msaf/data.hpp"
#include "msaf/tensor.hpp"

namespace msaf {

struct Fixation {
    int64_t x = 0, y = 0;
};

struct FixationSet {
    int64_t width = 0, height = 0;
    std::vector<Fixation> points;  // ranked by map value desc, raster asc
};

// u8 attention map -> [h,w] doubles in [0,1].
TensorD gray_to_map(const GrayImage& img);

// Peak picking: strict 8-neighbor local maxima (raster order breaks ties),
// candidates at value >= threshold, greedy NMS with radius w/16 px, ranked by
// value, capped at 10. The threshold starts at half the max and halves until
// at least 5 points survive or every positive maximum is already a candidate.
FixationSet extract_fixations(const TensorD& map);

// Trapezoidal area under (0,0) -> (fp[k], tp[k]) -> (1,1), fp nondecreasing.
// Exported so reference implementations integrate identically rounded areas:
// FP contraction may otherwise fuse the accumulation differently per TU.
double roc_area(const std::vector<double>& fp, const std::vector<double>& tp);

double metric_kldiv(const TensorD& gt, const TensorD& pred);
double metric_nss(const FixationSet& fix, const TensorD& pred);
double metric_sim(const TensorD& gt, const TensorD& pred);
double metric_cc(const TensorD& gt, const TensorD& pred);
double metric_auc_judd(const FixationSet& fix, const TensorD& pred);

// Mean AUC over `splits` draws of |fix| negatives sampled without
// replacement from the pooled points of other videos' fixation sets.
double metric_auc_shuffled(const FixationSet& fix, const TensorD& pred,
                           const std::vector<FixationSet>& negatives_pool, int64_t splits,
                           uint64_t seed);

// ---------------------------------------------------------------------------
// batch evaluation
// ---------------------------------------------------------------------------

inline constexpr int64_t kMetricCount = 6;
extern const std::array<const char*, kMetricCount> kMetricNames;  // csv column order

struct FrameMetrics {
    std::string video_id;
    int64_t frame = 0;
    // kldiv, nss, sim, cc, auc_j, auc_s; NaN marks a metric undefined on this
    // frame (degenerate inputs), excluded from aggregates and never imputed.
    std::array<double, kMetricCount> values{};
};

struct MetricAggregate {
    int64_t frames = 0;                            // rows aggregated over
    std::array<int64_t, kMetricCount> defined{};   // non-NaN count per metric
    std::array<double, kMetricCount> mean{};       // over defined rows; NaN if none
};

MetricAggregate aggregate_frames(const std::vector<FrameMetrics>& rows);

struct MetricReport {
    std::vector<FrameMetrics> frames;            // sorted by (video_id, frame)
    std::vector<std::string> missing;            // "<video_id>/<frame>" without a prediction
    MetricAggregate global;
    std::map<std::string, MetricAggregate> per_video;
};

// Pair every ground-truth FTA frame of `videos` with pred_dir/<id>/%06d.pgm.
// NSS and the AUCs run on fixations extracted from the ground truth; AUC-S
// negatives pool the fixations of all other videos. Missing predictions are
// listed and skipped; errors only on an empty pairing or malformed files.
MetricReport evaluate_run(const std::string& pred_dir, const std::vector<VideoRecord>& videos,
                          uint64_t seed);

// "video_id,frame,kldiv,nss,sim,cc,auc_j,auc_s" rows; undefined cells as nan.
std::string report_csv(const MetricReport& report);
// key=value lines: row/missing counts plus global means and undefined counts.
std::string report_summary(const MetricReport& report);

}  // namespace msaf
