// Accident analysis: attention-delay statistics (ADF), behavior-averaged
// attention maps, and temporal structure of the annotated accident windows.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msaf/data.hpp"
#include "msaf/tensor.hpp"

namespace msaf {

// Whose attention produced the maps a record was computed from.
enum class AdfSource { human_gt, model };

std::string adf_source_name(AdfSource s);

// Attention delay for one video: the first frame whose global attention peak
// lands inside that frame's crash box, relative to the accident-window start.
// Negative values mean anticipation; an absent value is a miss.
struct ADFRecord {
    std::string video_id;
    std::optional<int64_t> first_hit_frame;
    std::optional<int64_t> adf;  // first_hit_frame - aw_start
    int64_t category_id = 0;
    AdfSource source = AdfSource::human_gt;
};

// maps holds one [h,w] attention map per frame, maps.size() == ann.num_frames.
// The peak is the raster-order-first global argmax; a hit requires it inside
// the frame's crash box, first and last covered pixels included.
ADFRecord compute_adf(const std::vector<TensorD>& maps, const AccidentAnnotation& ann,
                      AdfSource source);

struct ADFSummaryRow {
    int64_t category_id = 0;
    AdfSource source = AdfSource::human_gt;
    double mean_adf = 0.0;  // over hits only; NaN when the group has no hits
    int64_t hits = 0;
    int64_t misses = 0;
};

// Group records by (source, category). Rows are ordered ascending by mean
// with all-miss groups last; misses are counted, never averaged.
std::vector<ADFSummaryRow> summarize_adf(const std::vector<ADFRecord>& records);

// CSV with header "category_id,source,mean_adf,hits,misses"; an undefined
// mean prints as "nan".
std::string adf_csv(const std::vector<ADFSummaryRow>& rows);

// Pixel-wise mean of every attention map of every video with the given
// behavior, renormalized to peak 1 for display.
TensorD average_attention_map(const std::vector<VideoRecord>& videos, Behavior behavior);

// Aggregate temporal structure of the accident windows. Totals, exact means,
// and exact percentage shares of the pooled frame counts are reported
// directly; the avg_* and avg_pct_* fields follow the benchmark's published
// reporting convention, which truncates the means to whole frames first and
// derives the percentage shares from those whole-frame means.
struct TemporalStats {
    int64_t videos = 0;
    int64_t total_frames = 0, before_frames = 0, window_frames = 0, after_frames = 0;
    double mean_total = 0, mean_before = 0, mean_window = 0, mean_after = 0;
    double pct_before = 0, pct_window = 0, pct_after = 0;  // pooled shares, percent
    int64_t avg_total = 0, avg_before = 0, avg_window = 0, avg_after = 0;
    double avg_pct_before = 0, avg_pct_window = 0, avg_pct_after = 0;
};

TemporalStats temporal_stats(const std::vector<AccidentAnnotation>& anns);

// Plain-text key=value report, one key per line.
std::string temporal_summary(const TemporalStats& s);

// Deterministic 1995-video annotation set reproducing the benchmark's
// published aggregate temporal statistics: frame totals 658476, split
// 315154 before / 131679 inside / 211643 after the accident window.
std::vector<AccidentAnnotation> reference_stats_fixture();

}  // namespace msaf
