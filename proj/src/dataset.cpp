#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "msaf/data.hpp"

namespace msaf {

namespace fs = std::filesystem;

namespace {

std::string frame_name(int64_t i, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld.%s", (long long)i, ext);
    return buf;
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    check(f.good(), "cannot open " + path);
    return std::string(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

std::vector<VideoRecord> scan_dataset(const std::string& dir) {
    check(fs::is_directory(dir), "dataset directory " + dir + " does not exist");

    std::vector<std::string> video_dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && fs::exists(e.path() / "annotation.json"))
            video_dirs.push_back(e.path().string());
    std::sort(video_dirs.begin(), video_dirs.end());
    check(!video_dirs.empty(), "no videos (subdirectories with annotation.json) under " + dir);

    std::vector<VideoRecord> records;
    for (const std::string& vdir : video_dirs) {
        VideoRecord rec;
        rec.ann = parse_annotation(slurp(vdir + "/annotation.json"));

        RgbImage first = read_ppm(vdir + "/frames/" + frame_name(0, "ppm"));
        rec.width = first.w;
        rec.height = first.h;
        for (const CrashBox& b : rec.ann.crash_boxes)
            check(b.x + b.w <= rec.width && b.y + b.h <= rec.height,
                  "crash box at frame " + std::to_string(b.frame) + " of " + rec.ann.video_id +
                      " exceeds the " + std::to_string(rec.width) + "x" +
                      std::to_string(rec.height) + " frame");

        for (int64_t i = 0; i < rec.ann.num_frames; ++i) {
            rec.frame_paths.push_back(vdir + "/frames/" + frame_name(i, "ppm"));
            rec.semantic_paths.push_back(vdir + "/semantic/" + frame_name(i, "pgm"));
            rec.fta_paths.push_back(vdir + "/attention/" + frame_name(i, "pgm"));
        }
        for (const auto* seq : {&rec.frame_paths, &rec.semantic_paths, &rec.fta_paths})
            for (const std::string& p : *seq)
                check(fs::exists(p), "missing file " + p + " (annotation promises " +
                                         std::to_string(rec.ann.num_frames) + " frames)");
        records.push_back(std::move(rec));
    }
    return records;
}

ClipSample sample_clip(const VideoRecord& video, int64_t target_frame, int64_t T) {
    check(T >= 1, "sample_clip: clip length must be at least 1");
    check(target_frame >= 0 && target_frame < video.ann.num_frames,
          "sample_clip: target frame " + std::to_string(target_frame) + " outside [0," +
              std::to_string(video.ann.num_frames) + ") of " + video.ann.video_id);

    int64_t h = video.height, w = video.width;
    ClipSample clip;
    clip.video_id = video.ann.video_id;
    clip.target_frame = target_frame;
    clip.rgb = TensorF::zeros({3, T, h, w});
    clip.sem = TensorF::zeros({1, T, h, w});

    int64_t plane = h * w;
    for (int64_t i = 0; i < T; ++i) {
        int64_t idx = std::max<int64_t>(0, target_frame - (T - 1) + i);  // front padding

        RgbImage fr = read_ppm(video.frame_paths[(size_t)idx]);
        check(fr.w == w && fr.h == h, "frame size mismatch in " + video.frame_paths[(size_t)idx]);
        std::vector<float> planar = load_rgb_planar(fr);
        for (int64_t c = 0; c < 3; ++c)
            std::memcpy(clip.rgb.values().data() + c * T * plane + i * plane,
                        planar.data() + c * plane, (size_t)plane * sizeof(float));

        GrayImage sm = read_pgm(video.semantic_paths[(size_t)idx]);
        check(sm.w == w && sm.h == h,
              "semantic size mismatch in " + video.semantic_paths[(size_t)idx]);
        std::vector<float> sem = load_semantic(sm);
        std::memcpy(clip.sem.values().data() + i * plane, sem.data(),
                    (size_t)plane * sizeof(float));
    }

    GrayImage ft = read_pgm(video.fta_paths[(size_t)target_frame]);
    check(ft.w == w && ft.h == h,
          "attention size mismatch in " + video.fta_paths[(size_t)target_frame]);
    clip.label = TensorF::zeros({1, h, w});
    clip.label.values() = load_fta(ft);
    return clip;
}

}  // namespace msaf
