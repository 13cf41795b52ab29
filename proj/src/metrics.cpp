#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>

#include <msaf/metrics.hpp>
#include <msaf/ops.hpp>
#include <msaf/rng.hpp>

namespace msaf {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const double* map_checked(const char* who, const TensorD& m) {
    check(m.rank() == 2 && m.dim(0) >= 1 && m.dim(1) >= 1,
          std::string(who) + ": map must be [h,w], got " + shape_str(m.shape()));
    const double* v = m.data();
    for (int64_t i = 0; i < m.numel(); ++i)
        check(std::isfinite(v[i]), std::string(who) + ": non-finite map value");
    return v;
}

void check_pair(const char* who, const TensorD& gt, const TensorD& pred) {
    check(gt.shape() == pred.shape(), std::string(who) + ": maps differ, " +
                                          shape_str(gt.shape()) + " vs " +
                                          shape_str(pred.shape()));
}

void check_fixations(const char* who, const FixationSet& fix, const TensorD& map) {
    check(!fix.points.empty(), std::string(who) + ": empty fixation set");
    int64_t h = map.dim(0), w = map.dim(1);
    std::vector<int64_t> seen;
    seen.reserve(fix.points.size());
    for (const Fixation& p : fix.points) {
        check(p.x >= 0 && p.x < w && p.y >= 0 && p.y < h,
              std::string(who) + ": fixation (" + std::to_string(p.x) + "," +
                  std::to_string(p.y) + ") outside a " + std::to_string(w) + "x" +
                  std::to_string(h) + " map");
        seen.push_back(p.y * w + p.x);
    }
    std::sort(seen.begin(), seen.end());
    check(std::adjacent_find(seen.begin(), seen.end()) == seen.end(),
          std::string(who) + ": duplicate fixation point");
}

// Thresholds for the ROC sweep: distinct pred values at the fixations,
// descending, with the true-positive rate at each.
struct RocBase {
    std::vector<double> thr;
    std::vector<double> tp;
};

RocBase roc_base(const FixationSet& fix, const double* v, int64_t w) {
    std::vector<double> fv;
    fv.reserve(fix.points.size());
    for (const Fixation& p : fix.points) fv.push_back(v[p.y * w + p.x]);
    std::sort(fv.begin(), fv.end(), std::greater<double>());
    RocBase rb;
    int64_t nf = (int64_t)fv.size();
    for (int64_t i = 0; i < nf;) {
        int64_t j = i;
        while (j < nf && fv[(size_t)j] == fv[(size_t)i]) ++j;
        rb.thr.push_back(fv[(size_t)i]);
        rb.tp.push_back((double)j / (double)nf);
        i = j;
    }
    return rb;
}

}  // namespace

double roc_area(const std::vector<double>& fp, const std::vector<double>& tp) {
    double area = 0, x0 = 0, y0 = 0;
    for (size_t k = 0; k < fp.size(); ++k) {
        area += 0.5 * (fp[k] - x0) * (tp[k] + y0);
        x0 = fp[k];
        y0 = tp[k];
    }
    return area + 0.5 * (1.0 - x0) * (1.0 + y0);
}

TensorD gray_to_map(const GrayImage& img) {
    check(img.w >= 1 && img.h >= 1 && (int64_t)img.px.size() == img.w * img.h,
          "gray_to_map: empty or inconsistent image");
    TensorD out = TensorD::zeros({img.h, img.w});
    double* v = out.values().data();
    for (size_t i = 0; i < img.px.size(); ++i) v[i] = img.px[i] / 255.0;
    return out;
}

FixationSet extract_fixations(const TensorD& map) {
    const double* v = map_checked("extract_fixations", map);
    int64_t h = map.dim(0), w = map.dim(1);
    double vmax = 0;
    for (int64_t i = 0; i < h * w; ++i) vmax = std::max(vmax, v[i]);
    check(vmax > 0, "extract_fixations: map has no positive values");

    // Strict local maxima; on plateaus the raster-first pixel wins.
    std::vector<int64_t> maxima;
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x) {
            int64_t i = y * w + x;
            double c = v[i];
            if (c <= 0) continue;
            bool is_max = true;
            for (int64_t dy = -1; dy <= 1 && is_max; ++dy)
                for (int64_t dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    int64_t ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    int64_t j = ny * w + nx;
                    if (v[j] > c || (v[j] == c && j < i)) {
                        is_max = false;
                        break;
                    }
                }
            if (is_max) maxima.push_back(i);
        }
    std::sort(maxima.begin(), maxima.end(), [&](int64_t a, int64_t b) {
        return v[a] != v[b] ? v[a] > v[b] : a < b;
    });

    double radius = (double)w / 16.0;  // 16 px on a 256-wide map
    double r2 = radius * radius;
    double th = 0.5 * vmax;
    std::vector<int64_t> picked;
    for (;;) {
        size_t cand = 0;
        while (cand < maxima.size() && v[maxima[cand]] >= th) ++cand;
        picked.clear();
        for (size_t i = 0; i < cand && picked.size() < 10; ++i) {
            int64_t my = maxima[i] / w, mx = maxima[i] % w;
            bool keep = true;
            for (int64_t q : picked) {
                double dy = (double)(my - q / w), dx = (double)(mx - q % w);
                if (dx * dx + dy * dy <= r2) {
                    keep = false;
                    break;
                }
            }
            if (keep) picked.push_back(maxima[i]);
        }
        if (picked.size() >= 5 || cand == maxima.size()) break;
        th *= 0.5;
    }

    FixationSet out{w, h, {}};
    for (int64_t i : picked) out.points.push_back({i % w, i / w});
    return out;
}

double metric_kldiv(const TensorD& gt, const TensorD& pred) {
    map_checked("metric_kldiv", gt);
    map_checked("metric_kldiv", pred);
    check_pair("metric_kldiv", gt, pred);
    NoGradGuard ng;
    return kl_loss(gt, pred).item();
}

double metric_nss(const FixationSet& fix, const TensorD& pred) {
    const double* v = map_checked("metric_nss", pred);
    check_fixations("metric_nss", fix, pred);
    int64_t n = pred.numel(), w = pred.dim(1);
    double vmin = v[0], vmax = v[0];
    for (int64_t i = 1; i < n; ++i) {
        vmin = std::min(vmin, v[i]);
        vmax = std::max(vmax, v[i]);
    }
    if (vmin == vmax) return 0.0;  // no ranking information
    double mean = 0;
    for (int64_t i = 0; i < n; ++i) mean += v[i];
    mean /= (double)n;
    double var = 0;
    for (int64_t i = 0; i < n; ++i) var += (v[i] - mean) * (v[i] - mean);
    double sd = std::sqrt(var / (double)n);
    double acc = 0;
    for (const Fixation& p : fix.points) acc += (v[p.y * w + p.x] - mean) / sd;
    return acc / (double)fix.points.size();
}

double metric_sim(const TensorD& gt, const TensorD& pred) {
    const double* g = map_checked("metric_sim", gt);
    const double* p = map_checked("metric_sim", pred);
    check_pair("metric_sim", gt, pred);
    int64_t n = gt.numel();
    double sg = 0, sp = 0;
    for (int64_t i = 0; i < n; ++i) {
        check(g[i] >= 0 && p[i] >= 0, "metric_sim: negative map value");
        sg += g[i];
        sp += p[i];
    }
    check(sg > 0, "metric_sim: ground-truth map sums to zero");
    check(sp > 0, "metric_sim: predicted map sums to zero");
    double s = 0;
    for (int64_t i = 0; i < n; ++i) s += std::min(g[i] / sg, p[i] / sp);
    return s;
}

double metric_cc(const TensorD& gt, const TensorD& pred) {
    const double* g = map_checked("metric_cc", gt);
    const double* p = map_checked("metric_cc", pred);
    check_pair("metric_cc", gt, pred);
    int64_t n = gt.numel();
    double gmin = g[0], gmax = g[0], pmin = p[0], pmax = p[0];
    for (int64_t i = 1; i < n; ++i) {
        gmin = std::min(gmin, g[i]);
        gmax = std::max(gmax, g[i]);
        pmin = std::min(pmin, p[i]);
        pmax = std::max(pmax, p[i]);
    }
    check(gmin < gmax && pmin < pmax, "metric_cc: zero variance");
    double mg = 0, mp = 0;
    for (int64_t i = 0; i < n; ++i) {
        mg += g[i];
        mp += p[i];
    }
    mg /= (double)n;
    mp /= (double)n;
    double num = 0, vg = 0, vp = 0;
    for (int64_t i = 0; i < n; ++i) {
        double dg = g[i] - mg, dp = p[i] - mp;
        num += dg * dp;
        vg += dg * dg;
        vp += dp * dp;
    }
    check(vg > 0 && vp > 0, "metric_cc: zero variance");
    return num / (std::sqrt(vg) * std::sqrt(vp));
}

double metric_auc_judd(const FixationSet& fix, const TensorD& pred) {
    const double* v = map_checked("metric_auc_judd", pred);
    check_fixations("metric_auc_judd", fix, pred);
    int64_t h = pred.dim(0), w = pred.dim(1), n = h * w;
    int64_t nf = (int64_t)fix.points.size();
    check(n > nf, "metric_auc_judd: no non-fixation pixels");

    std::vector<char> isfix((size_t)n, 0);
    for (const Fixation& p : fix.points) isfix[(size_t)(p.y * w + p.x)] = 1;
    std::vector<double> nonfix;
    nonfix.reserve((size_t)(n - nf));
    for (int64_t i = 0; i < n; ++i)
        if (!isfix[(size_t)i]) nonfix.push_back(v[i]);
    std::sort(nonfix.begin(), nonfix.end(), std::greater<double>());

    RocBase rb = roc_base(fix, v, w);
    std::vector<double> fp(rb.thr.size());
    size_t j = 0;
    for (size_t k = 0; k < rb.thr.size(); ++k) {
        while (j < nonfix.size() && nonfix[j] >= rb.thr[k]) ++j;
        fp[k] = (double)j / (double)nonfix.size();
    }
    return roc_area(fp, rb.tp);
}

double metric_auc_shuffled(const FixationSet& fix, const TensorD& pred,
                           const std::vector<FixationSet>& negatives_pool, int64_t splits,
                           uint64_t seed) {
    const double* v = map_checked("metric_auc_shuffled", pred);
    check_fixations("metric_auc_shuffled", fix, pred);
    check(splits >= 1, "metric_auc_shuffled: splits must be positive");
    int64_t h = pred.dim(0), w = pred.dim(1);
    std::vector<double> negvals;
    for (const FixationSet& s : negatives_pool)
        for (const Fixation& p : s.points) {
            check(p.x >= 0 && p.x < w && p.y >= 0 && p.y < h,
                  "metric_auc_shuffled: pool fixation (" + std::to_string(p.x) + "," +
                      std::to_string(p.y) + ") outside a " + std::to_string(w) + "x" +
                      std::to_string(h) + " map");
            negvals.push_back(v[p.y * w + p.x]);
        }
    check(!negvals.empty(), "metric_auc_shuffled: empty negatives pool");
    int64_t nf = (int64_t)fix.points.size();
    check((int64_t)negvals.size() >= nf, "metric_auc_shuffled: negatives pool holds " +
                                             std::to_string(negvals.size()) +
                                             " points, fewer than the " + std::to_string(nf) +
                                             " fixations");

    RocBase rb = roc_base(fix, v, w);
    Rng rng(seed);
    std::vector<double> sample((size_t)nf), fp(rb.thr.size());
    double acc = 0;
    for (int64_t s = 0; s < splits; ++s) {
        // |fix| negatives without replacement: partial Fisher-Yates.
        std::vector<double> tmp = negvals;
        for (int64_t i = 0; i < nf; ++i) {
            int64_t j = i + (int64_t)rng.below((uint64_t)((int64_t)tmp.size() - i));
            std::swap(tmp[(size_t)i], tmp[(size_t)j]);
            sample[(size_t)i] = tmp[(size_t)i];
        }
        std::sort(sample.begin(), sample.end(), std::greater<double>());
        size_t j = 0;
        for (size_t k = 0; k < rb.thr.size(); ++k) {
            while (j < sample.size() && sample[j] >= rb.thr[k]) ++j;
            fp[k] = (double)j / (double)nf;
        }
        acc += roc_area(fp, rb.tp);
    }
    return acc / (double)splits;
}

// ---------------------------------------------------------------------------
// batch evaluation
// ---------------------------------------------------------------------------

const std::array<const char*, kMetricCount> kMetricNames = {"kldiv", "nss",   "sim",
                                                            "cc",    "auc_j", "auc_s"};

namespace {

std::string frame_name(int64_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld.pgm", (long long)i);
    return buf;
}

}  // namespace

MetricAggregate aggregate_frames(const std::vector<FrameMetrics>& rows) {
    MetricAggregate agg;
    agg.frames = (int64_t)rows.size();
    std::array<double, kMetricCount> sum{};
    for (const FrameMetrics& r : rows)
        for (int64_t m = 0; m < kMetricCount; ++m)
            if (!std::isnan(r.values[(size_t)m])) {
                sum[(size_t)m] += r.values[(size_t)m];
                ++agg.defined[(size_t)m];
            }
    for (int64_t m = 0; m < kMetricCount; ++m)
        agg.mean[(size_t)m] =
            agg.defined[(size_t)m] ? sum[(size_t)m] / (double)agg.defined[(size_t)m] : kNaN;
    return agg;
}

MetricReport evaluate_run(const std::string& pred_dir, const std::vector<VideoRecord>& videos,
                          uint64_t seed) {
    check(!videos.empty(), "evaluate_run: no videos");
    std::vector<size_t> order(videos.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return videos[a].ann.video_id < videos[b].ann.video_id;
    });

    // Ground-truth fixations per frame; frames whose FTA map is all zero
    // simply have no set and fall out as undefined NSS/AUC cells later.
    std::vector<std::vector<FixationSet>> gt_fix(videos.size());
    std::vector<std::vector<char>> gt_has(videos.size());
    for (size_t vi : order) {
        const VideoRecord& rec = videos[vi];
        gt_fix[vi].resize(rec.fta_paths.size());
        gt_has[vi].assign(rec.fta_paths.size(), 0);
        for (size_t t = 0; t < rec.fta_paths.size(); ++t) {
            TensorD gm = gray_to_map(read_pgm(rec.fta_paths[t]));
            try {
                gt_fix[vi][t] = extract_fixations(gm);
                gt_has[vi][t] = 1;
            } catch (const std::invalid_argument&) {
            }
        }
    }

    MetricReport report;
    for (size_t vi : order) {
        const VideoRecord& rec = videos[vi];
        std::vector<FixationSet> pool;
        for (size_t vj = 0; vj < videos.size(); ++vj) {
            if (vj == vi) continue;
            for (size_t t = 0; t < gt_fix[vj].size(); ++t)
                if (gt_has[vj][t]) pool.push_back(gt_fix[vj][t]);
        }

        std::vector<FrameMetrics> rows;
        for (size_t t = 0; t < rec.fta_paths.size(); ++t) {
            std::string ppath = pred_dir + "/" + rec.ann.video_id + "/" + frame_name((int64_t)t);
            if (!std::filesystem::exists(ppath)) {
                report.missing.push_back(rec.ann.video_id + "/" + std::to_string(t));
                continue;
            }
            TensorD pm = gray_to_map(read_pgm(ppath));
            TensorD gm = gray_to_map(read_pgm(rec.fta_paths[t]));
            check(pm.shape() == gm.shape(), "evaluate_run: " + ppath + " is " +
                                                shape_str(pm.shape()) + ", ground truth is " +
                                                shape_str(gm.shape()));

            FrameMetrics fm;
            fm.video_id = rec.ann.video_id;
            fm.frame = (int64_t)t;
            fm.values.fill(kNaN);
            auto guard = [&](int64_t slot, auto&& f) {
                try {
                    fm.values[(size_t)slot] = f();
                } catch (const std::invalid_argument&) {
                }
            };
            guard(0, [&] { return metric_kldiv(gm, pm); });
            guard(2, [&] { return metric_sim(gm, pm); });
            guard(3, [&] { return metric_cc(gm, pm); });
            if (gt_has[vi][t]) {
                const FixationSet& fx = gt_fix[vi][t];
                guard(1, [&] { return metric_nss(fx, pm); });
                guard(4, [&] { return metric_auc_judd(fx, pm); });
                guard(5, [&] { return metric_auc_shuffled(fx, pm, pool, 100, seed); });
            }
            rows.push_back(std::move(fm));
        }
        if (!rows.empty()) report.per_video[rec.ann.video_id] = aggregate_frames(rows);
        for (FrameMetrics& r : rows) report.frames.push_back(std::move(r));
    }
    check(!report.frames.empty(), "evaluate_run: no prediction matched a ground-truth frame");
    report.global = aggregate_frames(report.frames);
    return report;
}

std::string report_csv(const MetricReport& report) {
    std::string out = "video_id,frame,kldiv,nss,sim,cc,auc_j,auc_s\n";
    char buf[64];
    for (const FrameMetrics& r : report.frames) {
        out += r.video_id;
        std::snprintf(buf, sizeof buf, ",%lld", (long long)r.frame);
        out += buf;
        for (double v : r.values) {
            std::snprintf(buf, sizeof buf, ",%.9g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::string report_summary(const MetricReport& report) {
    char buf[96];
    std::string out;
    std::snprintf(buf, sizeof buf, "frames=%lld\n", (long long)report.global.frames);
    out += buf;
    std::snprintf(buf, sizeof buf, "pred_missing=%lld\n", (long long)report.missing.size());
    out += buf;
    for (int64_t m = 0; m < kMetricCount; ++m) {
        std::snprintf(buf, sizeof buf, "%s=%.9g\n", kMetricNames[(size_t)m],
                      report.global.mean[(size_t)m]);
        out += buf;
        std::snprintf(buf, sizeof buf, "%s_undefined=%lld\n", kMetricNames[(size_t)m],
                      (long long)(report.global.frames - report.global.defined[(size_t)m]));
        out += buf;
    }
    return out;
}

}  // namespace msaf
