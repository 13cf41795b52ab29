#include "msaf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <utility>

#include "msaf/image.hpp"
#include "msaf/metrics.hpp"

namespace msaf {

namespace {

std::string dims(int64_t h, int64_t w) {
    return std::to_string(h) + "x" + std::to_string(w);
}

}  // namespace

std::string adf_source_name(AdfSource s) {
    return s == AdfSource::human_gt ? "human_gt" : "model";
}

ADFRecord compute_adf(const std::vector<TensorD>& maps, const AccidentAnnotation& ann,
                      AdfSource source) {
    check(!ann.crash_boxes.empty(),
          "compute_adf: annotation '" + ann.video_id + "' has no crash boxes");
    check((int64_t)maps.size() == ann.num_frames,
          "compute_adf: " + std::to_string(maps.size()) + " maps for " +
              std::to_string(ann.num_frames) + " frames");

    int64_t h = -1, w = -1;
    for (const TensorD& m : maps) {
        check(m.shape().size() == 2, "compute_adf: attention maps must be [h,w]");
        if (h < 0) {
            h = m.shape()[0];
            w = m.shape()[1];
        }
        check(m.shape()[0] == h && m.shape()[1] == w,
              "compute_adf: map size mismatch, " + dims(m.shape()[0], m.shape()[1]) + " vs " +
                  dims(h, w));
    }
    for (const CrashBox& b : ann.crash_boxes)
        check(b.frame >= 0 && b.frame < ann.num_frames && b.x >= 0 && b.y >= 0 && b.w >= 1 &&
                  b.h >= 1 && b.x + b.w <= w && b.y + b.h <= h,
              "compute_adf: crash box at frame " + std::to_string(b.frame) +
                  " does not fit a " + dims(h, w) + " map");

    ADFRecord rec;
    rec.video_id = ann.video_id;
    rec.category_id = ann.category_id;
    rec.source = source;
    for (int64_t t = 0; t < ann.num_frames && !rec.first_hit_frame; ++t) {
        bool boxed = false;
        for (const CrashBox& b : ann.crash_boxes) boxed = boxed || b.frame == t;
        if (!boxed) continue;

        const double* v = maps[t].data();
        int64_t best = 0;
        for (int64_t i = 1; i < h * w; ++i)
            if (v[i] > v[best]) best = i;
        int64_t px = best % w, py = best / w;

        for (const CrashBox& b : ann.crash_boxes)
            if (b.frame == t && px >= b.x && px <= b.x + b.w - 1 && py >= b.y &&
                py <= b.y + b.h - 1) {
                rec.first_hit_frame = t;
                rec.adf = t - ann.aw_start;
                break;
            }
    }
    return rec;
}

std::vector<ADFSummaryRow> summarize_adf(const std::vector<ADFRecord>& records) {
    std::map<std::pair<int, int64_t>, ADFSummaryRow> groups;
    for (const ADFRecord& r : records) {
        ADFSummaryRow& row = groups[{(int)r.source, r.category_id}];
        row.category_id = r.category_id;
        row.source = r.source;
        if (r.adf) {
            row.mean_adf += (double)*r.adf;  // sum for now, divided below
            ++row.hits;
        } else {
            ++row.misses;
        }
    }

    std::vector<ADFSummaryRow> rows;
    rows.reserve(groups.size());
    for (auto& [key, row] : groups) {
        row.mean_adf = row.hits > 0 ? row.mean_adf / (double)row.hits
                                    : std::numeric_limits<double>::quiet_NaN();
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [](const ADFSummaryRow& a, const ADFSummaryRow& b) {
        bool ha = a.hits > 0, hb = b.hits > 0;
        if (ha != hb) return ha;
        if (ha && a.mean_adf != b.mean_adf) return a.mean_adf < b.mean_adf;
        if (a.category_id != b.category_id) return a.category_id < b.category_id;
        return (int)a.source < (int)b.source;
    });
    return rows;
}

std::string adf_csv(const std::vector<ADFSummaryRow>& rows) {
    std::string out = "category_id,source,mean_adf,hits,misses\n";
    char buf[128];
    for (const ADFSummaryRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%lld,%s,%.9g,%lld,%lld\n", (long long)r.category_id,
                      adf_source_name(r.source).c_str(), r.mean_adf, (long long)r.hits,
                      (long long)r.misses);
        out += buf;
    }
    return out;
}

TensorD average_attention_map(const std::vector<VideoRecord>& videos, Behavior behavior) {
    TensorD acc;
    int64_t count = 0;
    for (const VideoRecord& v : videos) {
        if (v.ann.behavior_type != behavior) continue;
        for (const std::string& path : v.fta_paths) {
            TensorD m = gray_to_map(read_pgm(path));
            if (count == 0) {
                acc = m;
            } else {
                check(m.shape() == acc.shape(),
                      "average_attention_map: map size mismatch, " +
                          dims(m.shape()[0], m.shape()[1]) + " vs " +
                          dims(acc.shape()[0], acc.shape()[1]));
                double* a = acc.values().data();
                const double* b = m.data();
                for (int64_t i = 0; i < acc.numel(); ++i) a[i] += b[i];
            }
            ++count;
        }
    }
    check(count > 0,
          "average_attention_map: no maps for behavior '" + behavior_name(behavior) + "'");

    double* a = acc.values().data();
    double peak = 0.0;
    for (int64_t i = 0; i < acc.numel(); ++i) {
        a[i] /= (double)count;
        peak = std::max(peak, a[i]);
    }
    check(peak > 0.0, "average_attention_map: zero attention mass");
    for (int64_t i = 0; i < acc.numel(); ++i) a[i] /= peak;
    return acc;
}

TemporalStats temporal_stats(const std::vector<AccidentAnnotation>& anns) {
    check(!anns.empty(), "temporal_stats: no annotations");

    TemporalStats s;
    s.videos = (int64_t)anns.size();
    for (const AccidentAnnotation& a : anns) {
        check(a.num_frames >= 1 && a.aw_start >= 0 && a.aw_start <= a.aw_end &&
                  a.aw_end < a.num_frames,
              "temporal_stats: invalid accident window for '" + a.video_id + "'");
        s.total_frames += a.num_frames;
        s.before_frames += a.before_len();
        s.window_frames += a.window_len();
        s.after_frames += a.after_len();
    }

    double n = (double)s.videos;
    s.mean_total = (double)s.total_frames / n;
    s.mean_before = (double)s.before_frames / n;
    s.mean_window = (double)s.window_frames / n;
    s.mean_after = (double)s.after_frames / n;
    s.pct_before = 100.0 * (double)s.before_frames / (double)s.total_frames;
    s.pct_window = 100.0 * (double)s.window_frames / (double)s.total_frames;
    s.pct_after = 100.0 * (double)s.after_frames / (double)s.total_frames;

    s.avg_total = s.total_frames / s.videos;
    s.avg_before = s.before_frames / s.videos;
    s.avg_window = s.window_frames / s.videos;
    s.avg_after = s.after_frames / s.videos;
    s.avg_pct_before = 100.0 * (double)s.avg_before / (double)s.avg_total;
    s.avg_pct_window = 100.0 * (double)s.avg_window / (double)s.avg_total;
    s.avg_pct_after = 100.0 * (double)s.avg_after / (double)s.avg_total;
    return s;
}

std::string temporal_summary(const TemporalStats& s) {
    char buf[512];
    std::string out;
    std::snprintf(buf, sizeof buf, "videos=%lld\n", (long long)s.videos);
    out += buf;
    std::snprintf(buf, sizeof buf, "total_frames=%lld\nbefore_frames=%lld\nwindow_frames=%lld\nafter_frames=%lld\n",
                  (long long)s.total_frames, (long long)s.before_frames,
                  (long long)s.window_frames, (long long)s.after_frames);
    out += buf;
    std::snprintf(buf, sizeof buf, "mean_total=%.9g\nmean_before=%.9g\nmean_window=%.9g\nmean_after=%.9g\n",
                  s.mean_total, s.mean_before, s.mean_window, s.mean_after);
    out += buf;
    std::snprintf(buf, sizeof buf, "pct_before=%.9g\npct_window=%.9g\npct_after=%.9g\n",
                  s.pct_before, s.pct_window, s.pct_after);
    out += buf;
    std::snprintf(buf, sizeof buf, "avg_frames=%lld/%lld/%lld/%lld\n", (long long)s.avg_total,
                  (long long)s.avg_before, (long long)s.avg_window, (long long)s.avg_after);
    out += buf;
    std::snprintf(buf, sizeof buf, "avg_shares=%.1f/%.1f/%.1f\n", s.avg_pct_before,
                  s.avg_pct_window, s.avg_pct_after);
    out += buf;
    return out;
}

std::vector<AccidentAnnotation> reference_stats_fixture() {
    // 1995 videos around base lengths 157/66/106, with the remainders of the
    // published totals (315154/131679/211643) spread one frame at a time over
    // the leading videos. Integer-division means then land on 330/157/66/106.
    std::vector<AccidentAnnotation> anns;
    anns.reserve(1995);
    for (int64_t i = 0; i < 1995; ++i) {
        int64_t before = 157 + (i < 1939 ? 1 : 0);
        int64_t window = 66 + (i < 9 ? 1 : 0);
        int64_t after = 106 + (i < 173 ? 1 : 0);

        AccidentAnnotation a;
        char id[16];
        std::snprintf(id, sizeof id, "ref_%04lld", (long long)i);
        a.video_id = id;
        a.category_id = i % kCategoryCount + 1;
        a.ego_involved = i % 2 == 0;
        a.num_frames = before + window + after;
        a.fps = 30;
        a.aw_start = before;
        a.aw_end = before + window - 1;
        a.behavior_type = (Behavior)(i % 4);
        anns.push_back(std::move(a));
    }
    return anns;
}

}  // namespace msaf
