#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "msaf/data.hpp"
#include "msaf/rng.hpp"

namespace msaf {

namespace fs = std::filesystem;

namespace {

std::string frame_name(int64_t i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld.%s", (long long)i, ext);
    return buf;
}

uint8_t clamp_u8(double v) { return (uint8_t)std::clamp(v, 0.0, 255.0); }

void validate(const SynthConfig& c) {
    check(c.num_videos >= 1, "synth config: num_videos must be at least 1");
    check(c.num_frames >= 1, "synth config: num_frames must be at least 1");
    check(c.resolution >= 16 && c.resolution % 8 == 0,
          "synth config: resolution must be a multiple of 8, at least 16");
    check(c.object_speed >= 1, "synth config: object_speed must be at least 1 px/frame");
    check(c.aw_start >= 0, "synth config: aw_start must be non-negative");
    check(c.attention_delay >= 0, "synth config: attention_delay must be non-negative");
    check(c.aw_start + c.attention_delay < c.num_frames,
          "synth config: aw_start + attention_delay must be below num_frames");
    check(c.sigma > 0, "synth config: sigma must be positive");
    // The FTA argmax must be a unique pixel after u8 quantization.
    check(std::exp(-1.0 / (2.0 * c.sigma * c.sigma)) < 254.5 / 255.0,
          "synth config: sigma too large for a unique attention peak");
    check(c.noise >= 0 && c.noise < 1, "synth config: noise must be in [0,1)");
}

// Gaussian FTA map with peak value 255 at the integer center.
GrayImage fta_map(int64_t R, int64_t cx, int64_t cy, double sigma) {
    GrayImage img{R, R, std::vector<uint8_t>((size_t)(R * R))};
    double inv = 1.0 / (2.0 * sigma * sigma);
    for (int64_t y = 0; y < R; ++y)
        for (int64_t x = 0; x < R; ++x) {
            double d2 = (double)((x - cx) * (x - cx) + (y - cy) * (y - cy));
            img.px[(size_t)(y * R + x)] = (uint8_t)std::lround(255.0 * std::exp(-d2 * inv));
        }
    return img;
}

}  // namespace

std::vector<VideoRecord> synth_generate(const SynthConfig& cfg, const std::string& out_dir) {
    validate(cfg);

    const int64_t R = cfg.resolution;
    const int64_t nf = cfg.num_frames;
    const int64_t obj = std::max<int64_t>(6, R / 8) & ~1;  // even box edge
    const int64_t dx = 3 * R / 4, dy = 3 * R / 4;          // distractor center

    std::vector<VideoRecord> records;
    for (int64_t vi = 0; vi < cfg.num_videos; ++vi) {
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "synth_%03lld", (long long)vi);
        std::string id = idbuf;
        Rng rng(fnv1a64(id.data(), id.size(), cfg.seed));

        Behavior behavior = vi % 2 == 0 ? Behavior::crossing : Behavior::hitting;
        int64_t y_obj = behavior == Behavior::crossing ? R / 4 : R / 2 - obj / 2;
        int64_t x0 = -obj / 2 - cfg.object_speed * cfg.aw_start;

        // Per-frame clipped box; hitting objects freeze at the frame center.
        auto box_at = [&](int64_t t) -> std::pair<int64_t, int64_t> {  // {lo, width}
            int64_t x = x0 + cfg.object_speed * t;
            if (behavior == Behavior::hitting) x = std::min(x, R / 2 - obj / 2);
            int64_t lo = std::clamp<int64_t>(x, 0, R);
            int64_t hi = std::clamp<int64_t>(x + obj, 0, R);
            return {lo, hi - lo};
        };
        auto half_visible = [&](int64_t t) { return 2 * box_at(t).second >= obj; };

        // The 50%-visibility rule must reproduce the configured aw_start.
        int64_t first_half = -1;
        for (int64_t t = 0; t < nf && first_half < 0; ++t)
            if (half_visible(t)) first_half = t;
        check(first_half == cfg.aw_start,
              "synth geometry: 50%-visibility frame " + std::to_string(first_half) +
                  " does not match configured aw_start " + std::to_string(cfg.aw_start));

        int64_t aw_end = cfg.aw_start;
        while (aw_end + 1 < nf && half_visible(aw_end + 1)) ++aw_end;

        AccidentAnnotation ann;
        ann.video_id = id;
        ann.category_id = vi % kCategoryCount + 1;
        ann.ego_involved = behavior == Behavior::hitting;
        ann.num_frames = nf;
        ann.fps = 30;
        ann.aw_start = cfg.aw_start;
        ann.aw_end = aw_end;
        ann.behavior_type = behavior;
        for (int64_t t = cfg.aw_start; t <= aw_end; ++t) {
            auto [lo, bw] = box_at(t);
            if (bw >= 1) ann.crash_boxes.push_back({t, lo, y_obj, bw, obj});
        }

        std::string vdir = out_dir + "/" + id;
        for (const char* sub : {"/frames", "/semantic", "/attention"})
            fs::create_directories(vdir + sub);

        VideoRecord rec;
        rec.ann = ann;
        rec.width = R;
        rec.height = R;
        for (int64_t t = 0; t < nf; ++t) {
            auto [lo, bw] = box_at(t);
            bool visible = bw >= 1;

            // RGB: vertical gradient plus jitter, the object as a warm
            // rectangle, the distractor as a small cool marker.
            RgbImage frame{R, R, std::vector<uint8_t>((size_t)(R * R * 3))};
            for (int64_t y = 0; y < R; ++y)
                for (int64_t x = 0; x < R; ++x) {
                    double base = 40.0 + 140.0 * (double)y / (double)R;
                    double jitter = rng.uniform(-1.0, 1.0) * cfg.noise * 255.0;
                    size_t at = (size_t)((y * R + x) * 3);
                    frame.px[at + 0] = clamp_u8(base + jitter);
                    frame.px[at + 1] = clamp_u8(base + 10 + jitter);
                    frame.px[at + 2] = clamp_u8(base + 20 + jitter);
                }
            auto paint = [&](int64_t px, int64_t py, uint8_t r, uint8_t g, uint8_t b) {
                size_t at = (size_t)((py * R + px) * 3);
                frame.px[at] = r;
                frame.px[at + 1] = g;
                frame.px[at + 2] = b;
            };
            for (int64_t y = dy - 1; y <= dy + 1; ++y)
                for (int64_t x = dx - 1; x <= dx + 1; ++x) paint(x, y, 40, 90, 220);
            if (visible)
                for (int64_t y = y_obj; y < y_obj + obj; ++y)
                    for (int64_t x = lo; x < lo + bw; ++x) paint(x, y, 220, 60, 50);
            write_ppm(vdir + "/frames/" + frame_name(t, "ppm"), frame);

            // Semantic: class 13 over background 0 wherever the object shows.
            GrayImage sem{R, R, std::vector<uint8_t>((size_t)(R * R), 0)};
            if (visible)
                for (int64_t y = y_obj; y < y_obj + obj; ++y)
                    for (int64_t x = lo; x < lo + bw; ++x) sem.px[(size_t)(y * R + x)] = 13;
            write_pgm(vdir + "/semantic/" + frame_name(t, "pgm"), sem);

            // FTA: distractor until lock-on at aw_start + delay, then the
            // visible box center; back to the distractor once the object
            // has left the scene.
            bool locked = t >= cfg.aw_start + cfg.attention_delay && visible;
            int64_t cx = locked ? lo + bw / 2 : dx;
            int64_t cy = locked ? y_obj + obj / 2 : dy;
            write_pgm(vdir + "/attention/" + frame_name(t, "pgm"), fta_map(R, cx, cy, cfg.sigma));

            rec.frame_paths.push_back(vdir + "/frames/" + frame_name(t, "ppm"));
            rec.semantic_paths.push_back(vdir + "/semantic/" + frame_name(t, "pgm"));
            rec.fta_paths.push_back(vdir + "/attention/" + frame_name(t, "pgm"));
        }

        std::string ser = serialize_annotation(ann);
        std::ofstream af(vdir + "/annotation.json", std::ios::binary | std::ios::trunc);
        check(af.good(), "cannot write " + vdir + "/annotation.json");
        af.write(ser.data(), (std::streamsize)ser.size());
        af.flush();
        check(af.good(), "write to " + vdir + "/annotation.json failed");

        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace msaf
