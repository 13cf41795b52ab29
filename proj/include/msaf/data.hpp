// Dataset model: accident annotations, train/val/test splits, clip sampling,
// and the deterministic synthetic scenario generator that stands in for the
// real benchmark at desk scale.
//
// On-disk layout per video: <id>/frames/%06d.ppm, <id>/semantic/%06d.pgm,
// <id>/attention/%06d.pgm, <id>/annotation.json.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "msaf/image.hpp"
#include "msaf/tensor.hpp"

namespace msaf {

// ---------------------------------------------------------------------------
// annotations
// ---------------------------------------------------------------------------

struct CrashBox {
    int64_t frame = 0;
    int64_t x = 0, y = 0, w = 0, h = 0;
};

enum class Behavior { crossing, hitting, out_of_control, other };

std::string behavior_name(Behavior b);
std::optional<Behavior> behavior_from_name(const std::string& s);

struct AccidentAnnotation {
    std::string video_id;
    int64_t category_id = 0;  // 1..54
    bool ego_involved = false;
    int64_t num_frames = 0;
    int64_t fps = 30;
    int64_t aw_start = 0;  // accident window [aw_start, aw_end], inclusive
    int64_t aw_end = 0;
    Behavior behavior_type = Behavior::other;
    std::vector<CrashBox> crash_boxes;

    int64_t before_len() const { return aw_start; }
    int64_t window_len() const { return aw_end - aw_start + 1; }
    int64_t after_len() const { return num_frames - aw_end - 1; }
};

inline constexpr int64_t kCategoryCount = 54;

// Strict JSON interchange with the canonical key order documented in
// serialize_annotation; parse errors list every violated invariant.
AccidentAnnotation parse_annotation(const std::string& bytes);
std::string serialize_annotation(const AccidentAnnotation& ann);

// ---------------------------------------------------------------------------
// video records and clips
// ---------------------------------------------------------------------------

struct VideoRecord {
    AccidentAnnotation ann;
    std::vector<std::string> frame_paths;
    std::vector<std::string> semantic_paths;
    std::vector<std::string> fta_paths;
    int64_t width = 0, height = 0;
};

// Scan a dataset directory (one subdirectory per video) into records,
// validating sequence lengths and crash-box bounds against the frame size.
std::vector<VideoRecord> scan_dataset(const std::string& dir);

struct ClipSample {
    TensorF rgb;    // [3,T,R,R]
    TensorF sem;    // [1,T,R,R]
    TensorF label;  // [1,R,R], the FTA map of the target frame
    std::string video_id;
    int64_t target_frame = 0;
};

// Frames [target-T+1, target], front-padded by repeating frame 0 when the
// clip would start before the video does.
ClipSample sample_clip(const VideoRecord& video, int64_t target_frame, int64_t T = 5);

// ---------------------------------------------------------------------------
// splits
// ---------------------------------------------------------------------------

struct SplitItem {
    std::string video_id;
    int64_t category_id = 0;
};

struct SplitCatalog {
    std::vector<std::string> train, val, test;
};

// Stratified 3:1:1 by category: per category of n videos, test gets
// max(1, round(n/5)), val gets round(n/5), train the rest; single-video
// categories go entirely to test. Deterministic given the seed.
SplitCatalog make_splits(const std::vector<SplitItem>& catalog, uint64_t seed);

// ---------------------------------------------------------------------------
// synthetic scenarios
// ---------------------------------------------------------------------------

struct SynthConfig {
    uint64_t seed = 1;
    int64_t num_videos = 12;
    int64_t num_frames = 40;
    int64_t resolution = 64;       // square frames, multiple of 8
    int64_t object_speed = 3;      // px/frame
    int64_t aw_start = 10;         // first frame with >= 50% of the box visible
    int64_t attention_delay = 3;   // d: frames between entry and FTA lock-on
    double sigma = 4.0;            // FTA Gaussian radius, px
    double noise = 0.05;           // RGB background jitter amplitude in [0,1)
};

// Generate num_videos scenario videos under out_dir and return their
// records. Even-indexed videos are "crossing" (the object traverses the
// frame), odd ones "hitting" (it stops at the center). The FTA map tracks a
// distractor until frame aw_start + attention_delay and the crash object
// afterwards, so the ground-truth ADF is exactly attention_delay.
std::vector<VideoRecord> synth_generate(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace msaf
