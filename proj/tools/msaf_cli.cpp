// Batch entry points: synth / train / predict / eval / adf / stats.
//
// Exit codes: 0 success, 1 computational failure mid-run, 2 usage or config
// error. Every command accepts --config (plain key=value, '#' comments; flags
// override the file) and writes its resolved settings plus a MANIFEST of
// output hashes next to its outputs, so a run can be reproduced bit-exactly.
#include <CLI11.hpp>
#include <omp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "msaf/analysis.hpp"
#include "msaf/data.hpp"
#include "msaf/image.hpp"
#include "msaf/metrics.hpp"
#include "msaf/model.hpp"
#include "msaf/rng.hpp"
#include "msaf/train.hpp"

using namespace msaf;
namespace fs = std::filesystem;

namespace {

// Thrown while a command vets its inputs and settings; mapped to exit 2.
// Anything thrown after planning is a computational failure, mapped to 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename F>
auto plan(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

void apply_threads(int threads) {
    if (threads < 0) throw UsageError("--threads must be non-negative");
    if (threads > 0) omp_set_num_threads(threads);
}

fs::path prepare_out(const std::string& out) {
    fs::create_directories(out);
    return fs::path(out);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), "cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    check(!in.bad(), "read from " + path.string() + " failed");
    return bytes;
}

void spill(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    check(out.good(), "cannot write " + path.string());
    out.write(bytes.data(), (std::streamsize)bytes.size());
    out.flush();
    check(out.good(), "write to " + path.string() + " failed");
}

// Hash every output file (sorted relative paths, MANIFEST itself excluded)
// so identical runs are comparable by a single file.
void write_manifest(const fs::path& out) {
    std::vector<std::string> rels;
    for (const auto& e : fs::recursive_directory_iterator(out))
        if (e.is_regular_file() && e.path().filename() != "MANIFEST")
            rels.push_back(fs::relative(e.path(), out).generic_string());
    std::sort(rels.begin(), rels.end());

    std::string text;
    char line[64];
    for (const std::string& rel : rels) {
        std::string bytes = slurp(out / rel);
        std::snprintf(line, sizeof line, "%016llx  ",
                      (unsigned long long)fnv1a64(bytes.data(), bytes.size()));
        text += line;
        text += rel;
        text += "\n";
    }
    spill(out / "MANIFEST", text);
}

void write_resolved(CLI::App* cmd, const fs::path& out) {
    spill(out / "config.resolved", cmd->config_to_str(true, false));
}

std::string frame_file(int64_t t, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06lld.%s", (long long)t, ext);
    return buf;
}

uint8_t to_u8(double v) { return (uint8_t)std::lround(std::clamp(v, 0.0, 1.0) * 255.0); }

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out;
    int threads = 0;
    SynthConfig cfg;
};

int run_synth(CLI::App* cmd, const SynthArgs& a) {
    fs::path out = plan([&] {
        apply_threads(a.threads);
        return prepare_out(a.out);
    });

    std::vector<VideoRecord> recs;
    try {
        recs = synth_generate(a.cfg, out.string());
    } catch (const std::invalid_argument& e) {
        // The generator validates its config before touching the disk.
        if (std::string(e.what()).rfind("synth config:", 0) == 0) throw UsageError(e.what());
        throw;
    }

    write_resolved(cmd, out);
    write_manifest(out);
    std::printf("videos=%zu frames=%lld resolution=%lld\n", recs.size(),
                (long long)a.cfg.num_frames, (long long)a.cfg.resolution);
    return 0;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data, out;
    std::string mode = "late";
    std::string dims = "auto";
    int64_t clip_cap = 0;
    int threads = 0;
    TrainConfig cfg;
};

int run_train(CLI::App* cmd, const TrainArgs& a) {
    struct Plan {
        fs::path out;
        FusionMode mode;
        ModelDims dims;
        std::vector<ClipSample> clips;
    };
    Plan p = plan([&]() -> Plan {
        apply_threads(a.threads);
        validate_config(a.cfg);
        if (a.clip_cap < 0) throw UsageError("--clips must be non-negative");

        Plan pl;
        pl.out = prepare_out(a.out);
        pl.mode = a.mode == "vision" ? FusionMode::vision_only
                                     : *fusion_from_name(a.mode);  // choices pre-checked
        pl.dims = a.dims == "reference"
                      ? ModelDims{}
                      : a.dims == "reduced"
                            ? reduced_model_dims()
                            : (a.cfg.resolution == 64 ? reduced_model_dims() : ModelDims{});

        std::vector<VideoRecord> records = scan_dataset(a.data);
        for (const VideoRecord& r : records)
            check(r.width == a.cfg.resolution && r.height == a.cfg.resolution,
                  "train: video '" + r.ann.video_id + "' is " + std::to_string(r.width) + "x" +
                      std::to_string(r.height) + ", config wants " +
                      std::to_string(a.cfg.resolution));

        // The pool is every (video, target frame) pair in catalog order,
        // optionally capped to the leading N clips.
        for (const VideoRecord& r : records) {
            for (int64_t t = 0; t < r.ann.num_frames; ++t) {
                if (a.clip_cap > 0 && (int64_t)pl.clips.size() == a.clip_cap) break;
                pl.clips.push_back(sample_clip(r, t, a.cfg.clip_len));
            }
        }
        return pl;
    });

    Rng rng(a.cfg.seed);
    MSAFNetModel<float> model(p.mode, p.dims, rng);
    TrainResult res = train(model, p.clips, a.cfg);

    model_save((p.out / "model.ckpt").string(), model);
    spill(p.out / "loss.csv", loss_trace_csv(res.trace));
    write_resolved(cmd, p.out);
    write_manifest(p.out);
    std::printf("clips=%zu steps=%zu loss %.9g -> %.9g\n", p.clips.size(), res.trace.size(),
                res.trace.front().loss, res.trace.back().loss);
    return 0;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string checkpoint, data, out;
    int64_t clip_len = 5;
    bool overlay = false;
    int threads = 0;
};

// Fixed blue-to-red ramp blended over the frame at alpha 0.5.
RgbImage overlay_image(const RgbImage& frame, const float* attn) {
    RgbImage img = frame;
    for (int64_t i = 0; i < frame.w * frame.h; ++i) {
        double v = (double)attn[i];
        double ramp[3] = {255.0 * v, 0.0, 255.0 * (1.0 - v)};
        for (int c = 0; c < 3; ++c) {
            double mixed = 0.5 * (double)frame.px[(size_t)(i * 3 + c)] + 0.5 * ramp[c];
            img.px[(size_t)(i * 3 + c)] = (uint8_t)std::lround(std::clamp(mixed, 0.0, 255.0));
        }
    }
    return img;
}

int run_predict(CLI::App* cmd, const PredictArgs& a) {
    struct Plan {
        fs::path out;
        MSAFNetModel<float> model;
        std::vector<VideoRecord> records;
    };
    Plan p = plan([&]() -> Plan {
        apply_threads(a.threads);
        check(a.clip_len >= 1, "--clip-len must be at least 1");
        Plan pl;
        pl.out = prepare_out(a.out);
        pl.model = model_load(a.checkpoint);
        pl.records = scan_dataset(a.data);
        for (const VideoRecord& r : pl.records)
            check(r.width == r.height && r.width % 8 == 0,
                  "predict: video '" + r.ann.video_id + "' is " + std::to_string(r.width) + "x" +
                      std::to_string(r.height) + ", frames must be square with side a multiple "
                      "of 8");
        return pl;
    });

    NoGradGuard ng;
    const bool fused = p.model.mode != FusionMode::vision_only;
    int64_t maps = 0;
    for (const VideoRecord& rec : p.records) {
        fs::create_directories(p.out / rec.ann.video_id);
        if (a.overlay) fs::create_directories(p.out / "overlay" / rec.ann.video_id);
        const int64_t R = rec.width;
        for (int64_t t = 0; t < rec.ann.num_frames; ++t) {
            ClipSample clip = sample_clip(rec, t, a.clip_len);
            TensorF rgb = TensorF::from({1, 3, a.clip_len, R, R}, clip.rgb.values());
            TensorF yhat;
            if (fused) {
                TensorF sem = TensorF::from({1, 1, a.clip_len, R, R}, clip.sem.values());
                yhat = model_forward(p.model, rgb, sem, false);
            } else {
                yhat = model_forward(p.model, rgb, false);
            }

            GrayImage img{R, R, std::vector<uint8_t>((size_t)(R * R))};
            const float* v = yhat.data();
            for (int64_t i = 0; i < R * R; ++i) img.px[(size_t)i] = to_u8((double)v[i]);
            write_pgm((p.out / rec.ann.video_id / frame_file(t, "pgm")).string(), img);
            if (a.overlay) {
                RgbImage frame = read_ppm(rec.frame_paths[(size_t)t]);
                write_ppm((p.out / "overlay" / rec.ann.video_id / frame_file(t, "ppm")).string(),
                          overlay_image(frame, v));
            }
            ++maps;
        }
    }

    write_resolved(cmd, p.out);
    write_manifest(p.out);
    std::printf("videos=%zu maps=%lld\n", p.records.size(), (long long)maps);
    return 0;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string pred, gt, out;
    uint64_t seed = 0;
    int threads = 0;
};

int run_eval(CLI::App* cmd, const EvalArgs& a) {
    struct Plan {
        fs::path out;
        std::vector<VideoRecord> records;
    };
    Plan p = plan([&]() -> Plan {
        apply_threads(a.threads);
        check(fs::is_directory(a.pred), "prediction directory " + a.pred + " does not exist");
        Plan pl;
        pl.out = prepare_out(a.out);
        pl.records = scan_dataset(a.gt);
        return pl;
    });

    MetricReport rep = evaluate_run(a.pred, p.records, a.seed);
    std::string summary = report_summary(rep);
    spill(p.out / "report.csv", report_csv(rep));
    spill(p.out / "summary.txt", summary);
    write_resolved(cmd, p.out);
    write_manifest(p.out);
    std::fputs(summary.c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------------------
// adf
// ---------------------------------------------------------------------------

struct AdfArgs {
    std::string ann, maps, out;
    std::string source = "human_gt";
    int threads = 0;
};

int run_adf(CLI::App* cmd, const AdfArgs& a) {
    struct Plan {
        fs::path out;
        std::vector<VideoRecord> records;
    };
    Plan p = plan([&]() -> Plan {
        apply_threads(a.threads);
        if (!a.maps.empty())
            check(fs::is_directory(a.maps), "map directory " + a.maps + " does not exist");
        Plan pl;
        pl.out = prepare_out(a.out);
        pl.records = scan_dataset(a.ann);
        return pl;
    });
    AdfSource source = a.source == "model" ? AdfSource::model : AdfSource::human_gt;

    std::vector<ADFRecord> records;
    int64_t excluded = 0;
    for (const VideoRecord& rec : p.records) {
        if (rec.ann.crash_boxes.empty()) {
            ++excluded;  // crash object never boxed: excluded, still counted
            continue;
        }
        std::vector<TensorD> maps;
        maps.reserve((size_t)rec.ann.num_frames);
        for (int64_t t = 0; t < rec.ann.num_frames; ++t) {
            std::string path = a.maps.empty()
                                   ? rec.fta_paths[(size_t)t]
                                   : (fs::path(a.maps) / rec.ann.video_id / frame_file(t, "pgm")).string();
            maps.push_back(gray_to_map(read_pgm(path)));
        }
        records.push_back(compute_adf(maps, rec.ann, source));
    }

    std::string rows = "video_id,category_id,source,first_hit_frame,adf\n";
    int64_t hits = 0, misses = 0;
    for (const ADFRecord& r : records) {
        rows += r.video_id + "," + std::to_string(r.category_id) + "," +
                adf_source_name(r.source) + ",";
        if (r.adf) {
            rows += std::to_string(*r.first_hit_frame) + "," + std::to_string(*r.adf);
            ++hits;
        } else {
            rows += ",";
            ++misses;
        }
        rows += "\n";
    }

    spill(p.out / "records.csv", rows);
    spill(p.out / "adf.csv", adf_csv(summarize_adf(records)));
    write_resolved(cmd, p.out);
    write_manifest(p.out);
    std::printf("videos=%zu excluded=%lld hits=%lld misses=%lld\n", records.size(),
                (long long)excluded, (long long)hits, (long long)misses);
    return 0;
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

struct StatsArgs {
    std::string ann, out;
    bool fixture = false;
    int threads = 0;
};

int run_stats(CLI::App* cmd, const StatsArgs& a) {
    struct Plan {
        fs::path out;
        std::vector<AccidentAnnotation> anns;
    };
    Plan p = plan([&]() -> Plan {
        apply_threads(a.threads);
        if (a.fixture != a.ann.empty())
            throw UsageError("pass exactly one of --ann and --fixture");
        Plan pl;
        pl.out = prepare_out(a.out);
        if (a.fixture) {
            pl.anns = reference_stats_fixture();
        } else {
            for (const VideoRecord& r : scan_dataset(a.ann)) pl.anns.push_back(r.ann);
        }
        return pl;
    });

    TemporalStats s = temporal_stats(p.anns);
    char row[512];
    std::snprintf(row, sizeof row,
                  "videos,total_frames,before_frames,window_frames,after_frames,"
                  "mean_total,mean_before,mean_window,mean_after,"
                  "pct_before,pct_window,pct_after,"
                  "avg_total,avg_before,avg_window,avg_after,"
                  "avg_pct_before,avg_pct_window,avg_pct_after\n"
                  "%lld,%lld,%lld,%lld,%lld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%lld,%lld,%lld,%lld,%.1f,%.1f,%.1f\n",
                  (long long)s.videos, (long long)s.total_frames, (long long)s.before_frames,
                  (long long)s.window_frames, (long long)s.after_frames, s.mean_total,
                  s.mean_before, s.mean_window, s.mean_after, s.pct_before, s.pct_window,
                  s.pct_after, (long long)s.avg_total, (long long)s.avg_before,
                  (long long)s.avg_window, (long long)s.avg_after, s.avg_pct_before,
                  s.avg_pct_window, s.avg_pct_after);

    std::string summary = temporal_summary(s);
    spill(p.out / "stats.csv", row);
    spill(p.out / "summary.txt", summary);
    write_resolved(cmd, p.out);
    write_manifest(p.out);
    std::fputs(summary.c_str(), stdout);
    return 0;
}

// ---------------------------------------------------------------------------
// wiring
// ---------------------------------------------------------------------------

void add_common(CLI::App* cmd, std::string& out, int& threads) {
    // Defaults must land in config.resolved, not just explicitly-set values.
    cmd->option_defaults()->always_capture_default(true);
    cmd->add_option("--out", out, "output directory")->required()->configurable(false);
    cmd->add_option("--threads", threads, "cap OpenMP workers (0 = library default)")
        ->configurable(false);
    cmd->add_option("--config", "plain key=value settings; flags override the file")
        ->check(CLI::ExistingFile)
        ->configurable(false);
}

// Turns config keys into trailing command-line tokens so they pass through the
// same parsing and validation as explicit flags. Keys the user already set are
// dropped, which is what makes explicit flags override the file.
std::vector<std::string> config_args(CLI::App* cmd, const std::string& path) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML{}.from_file(path);
    } catch (const CLI::Error& e) {
        throw UsageError(e.what());
    }
    std::vector<std::string> args;
    for (const CLI::ConfigItem& item : items) {
        if (!item.parents.empty())
            throw UsageError("config: no sections allowed, got '" + item.fullname() + "'");
        CLI::Option* op = cmd->get_option_no_throw("--" + item.name);
        if (op == nullptr) throw UsageError("config: unknown key '" + item.name + "'");
        if (!op->get_configurable())
            throw UsageError("config: '" + item.name + "' must be given on the command line");
        if (op->count() > 0) continue;
        if (item.inputs.size() > 1) throw UsageError("config: '" + item.name + "' takes one value");
        args.push_back(item.inputs.empty() ? "--" + item.name
                                           : "--" + item.name + "=" + item.inputs.front());
    }
    return args;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driver attention prediction toolkit"};
    app.require_subcommand(1);

    SynthArgs sy;
    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic scenario dataset");
    add_common(synth, sy.out, sy.threads);
    synth->add_option("--seed", sy.cfg.seed, "generator seed");
    synth->add_option("--videos", sy.cfg.num_videos, "number of videos");
    synth->add_option("--frames", sy.cfg.num_frames, "frames per video");
    synth->add_option("--resolution", sy.cfg.resolution, "square frame side, multiple of 8");
    synth->add_option("--speed", sy.cfg.object_speed, "object speed, px/frame");
    synth->add_option("--aw-start", sy.cfg.aw_start, "first frame with half the object visible");
    synth->add_option("--delay", sy.cfg.attention_delay, "frames between entry and lock-on");
    synth->add_option("--sigma", sy.cfg.sigma, "attention Gaussian radius, px");
    synth->add_option("--noise", sy.cfg.noise, "background jitter amplitude in [0,1)");

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "train a model on a dataset");
    add_common(train_cmd, tr.out, tr.threads);
    train_cmd->add_option("--data", tr.data, "dataset directory")
        ->required()
        ->configurable(false);
    train_cmd->add_option("--mode", tr.mode, "fusion mode")
        ->check(CLI::IsMember({"vision", "early", "late"}));
    train_cmd->add_option("--resolution", tr.cfg.resolution, "frame side the model trains at")
        ->check(CLI::IsMember({64, 256}));
    train_cmd->add_option("--dims", tr.dims, "channel plan (auto: reduced at 64)")
        ->check(CLI::IsMember({"auto", "reference", "reduced"}));
    train_cmd->add_option("--epochs", tr.cfg.epochs, "passes over the clip pool");
    train_cmd->add_option("--batch", tr.cfg.batch_clips, "clips per step");
    train_cmd->add_option("--clip-len", tr.cfg.clip_len, "frames per clip");
    train_cmd->add_option("--clips", tr.clip_cap, "cap the pool to the leading N clips");
    train_cmd->add_option("--lr", tr.cfg.learning_rate, "Adam learning rate");
    train_cmd->add_option("--beta1", tr.cfg.beta1, "Adam beta1");
    train_cmd->add_option("--beta2", tr.cfg.beta2, "Adam beta2");
    train_cmd->add_option("--adam-eps", tr.cfg.adam_eps, "Adam epsilon");
    train_cmd->add_option("--seed", tr.cfg.seed, "init and sampling seed");

    PredictArgs pr;
    CLI::App* predict = app.add_subcommand("predict", "write per-frame attention maps");
    add_common(predict, pr.out, pr.threads);
    predict->add_option("--checkpoint", pr.checkpoint, "model checkpoint")
        ->required()
        ->configurable(false);
    predict->add_option("--data", pr.data, "dataset directory")->required()->configurable(false);
    predict->add_option("--clip-len", pr.clip_len, "frames per clip");
    predict->add_flag("--overlay", pr.overlay, "also write heatmap overlays (P6)");

    EvalArgs ev;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
    add_common(eval_cmd, ev.out, ev.threads);
    eval_cmd->add_option("--pred", ev.pred, "prediction directory")
        ->required()
        ->configurable(false);
    eval_cmd->add_option("--gt", ev.gt, "dataset directory with attention maps and annotations")
        ->required()
        ->configurable(false);
    eval_cmd->add_option("--seed", ev.seed, "shuffled-AUC sampling seed");

    AdfArgs ad;
    CLI::App* adf = app.add_subcommand("adf", "attention-delay statistics");
    add_common(adf, ad.out, ad.threads);
    adf->add_option("--ann", ad.ann, "dataset directory with annotations")
        ->required()
        ->configurable(false);
    adf->add_option("--maps", ad.maps,
                    "prediction directory to analyze (omit for ground-truth attention)")
        ->configurable(false);
    adf->add_option("--source", ad.source, "label for the records")
        ->check(CLI::IsMember({"human_gt", "model"}));

    StatsArgs st;
    CLI::App* stats = app.add_subcommand("stats", "temporal window statistics");
    add_common(stats, st.out, st.threads);
    stats->add_option("--ann", st.ann, "dataset directory with annotations")
        ->configurable(false);
    stats->add_flag("--fixture", st.fixture, "use the built-in reference annotation set")
        ->configurable(false);

    std::vector<std::string> raw(argv + 1, argv + argc);
    auto parse_all = [&app](std::vector<std::string> args) {
        std::reverse(args.begin(), args.end());  // CLI11 consumes back-to-front
        app.parse(args);
    };

    try {
        parse_all(raw);
        for (CLI::App* cmd : app.get_subcommands()) {  // exactly one, per require_subcommand
            CLI::Option* copt = cmd->get_option("--config");
            if (copt->count() == 0) continue;
            std::vector<std::string> extra = config_args(cmd, copt->as<std::string>());
            if (extra.empty()) continue;
            std::vector<std::string> merged = raw;
            merged.insert(merged.end(), extra.begin(), extra.end());
            parse_all(merged);
        }
        if (synth->parsed()) return run_synth(synth, sy);
        if (train_cmd->parsed()) return run_train(train_cmd, tr);
        if (predict->parsed()) return run_predict(predict, pr);
        if (eval_cmd->parsed()) return run_eval(eval_cmd, ev);
        if (adf->parsed()) return run_adf(adf, ad);
        return run_stats(stats, st);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
