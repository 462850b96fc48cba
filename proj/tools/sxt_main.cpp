// Command-line experiment runner: dataset generation, pipeline stages, and
// evaluation, all driven by one JSON config. Every subcommand writes a
// manifest listing its artifacts with FNV-1a checksums so reruns can be
// compared byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sxt/config.hpp"
#include "sxt/features.hpp"
#include "sxt/interp.hpp"
#include "sxt/io.hpp"
#include "sxt/metrics.hpp"
#include "sxt/phantom.hpp"
#include "sxt/projector.hpp"
#include "sxt/rasterize.hpp"
#include "sxt/registration.hpp"
#include "sxt/tracking.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_dir_name(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%03zu", i);
    return buf;
}

// Collects output paths relative to the run root; checksums are taken when
// the manifest is written, after all files exist.
class ArtifactLog {
public:
    explicit ArtifactLog(fs::path root) : root_(std::move(root)) {}

    void note(const fs::path& p) {
        paths_.push_back(p.lexically_relative(root_).generic_string());
    }

    json checksum_entries() const {
        std::vector<std::string> sorted = paths_;
        std::sort(sorted.begin(), sorted.end());
        json arr = json::array();
        for (const std::string& rel : sorted)
            arr.push_back({{"path", rel}, {"fnv1a64", sxt::hex64(sxt::file_checksum(root_ / rel))}});
        return arr;
    }

    const fs::path& root() const { return root_; }

private:
    fs::path root_;
    std::vector<std::string> paths_;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << text;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

void put_image(ArtifactLog& log, const fs::path& base, const sxt::ScalarImage& img) {
    sxt::write_image(base, img);
    log.note(fs::path(base.string() + ".json"));
    log.note(fs::path(base.string() + ".raw"));
}

void put_volume(ArtifactLog& log, const fs::path& base, const sxt::ScalarVolume& vol) {
    sxt::write_volume(base, vol);
    log.note(fs::path(base.string() + ".json"));
    log.note(fs::path(base.string() + ".raw"));
}

void put_pgm(ArtifactLog& log, const fs::path& path, const sxt::ScalarImage& img) {
    sxt::write_pgm(path, img);
    log.note(path);
}

void put_text(ArtifactLog& log, const fs::path& path, const std::string& text) {
    write_text(path, text);
    log.note(path);
}

void put_json(ArtifactLog& log, const fs::path& path, const json& j) {
    put_text(log, path, j.dump(2) + "\n");
}

// Manifest with config hash, seeds, and the checksummed artifact list.
// Timing files are deliberately left out of the log: their bytes vary run to
// run while every listed artifact must reproduce exactly.
void write_manifest(const ArtifactLog& log, const std::string& kind,
                    const sxt::ExperimentConfig& cfg, json extra = json::object()) {
    json j;
    j["kind"] = kind;
    j["config_hash"] = sxt::hex64(sxt::config_hash(cfg));
    j["master_seed"] = cfg.master_seed;
    j["seeds"] = {{"phantom", cfg.phantom.seed}, {"deformation", cfg.deformation.seed}};
    j["artifacts"] = log.checksum_entries();
    for (auto& [key, value] : extra.items()) j[key] = value;
    write_text(log.root() / "manifest.json", j.dump(2) + "\n");
}

std::string sanitize_csv_field(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

sxt::ScalarImage mid_slice(const sxt::ScalarVolume& vol) {
    sxt::ScalarImage img(vol.nx, vol.ny);
    const int z = vol.nz / 2;
    for (int y = 0; y < vol.ny; ++y)
        for (int x = 0; x < vol.nx; ++x) img.at(x, y) = vol.at(x, y, z);
    return img;
}

// Noisy projection rescaled to [0, 0.8] with the mask burned in at full white.
sxt::ScalarImage overlay_image(const sxt::ScalarImage& base, const sxt::ScalarImage& mask) {
    double lo = base.data.empty() ? 0.0 : base.data[0];
    double hi = lo;
    for (double v : base.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    sxt::ScalarImage out(base.width, base.height);
    for (size_t i = 0; i < base.data.size(); ++i)
        out.data[i] = span > 0.0 ? 0.8 * (base.data[i] - lo) / span : 0.0;
    for (size_t i = 0; i < mask.data.size() && i < out.data.size(); ++i)
        if (mask.data[i] > 0.0) out.data[i] = 1.0;
    return out;
}

struct DatasetFrames {
    std::vector<fs::path> dirs;  // frame_000, frame_001, ...
};

DatasetFrames list_dataset_frames(const fs::path& dataset) {
    DatasetFrames out;
    for (size_t i = 0;; ++i) {
        const fs::path dir = dataset / frame_dir_name(i);
        if (!fs::exists(dir)) break;
        out.dirs.push_back(dir);
    }
    if (out.dirs.size() < 2)
        throw std::runtime_error("dataset needs at least 2 frames under " + dataset.string());
    return out;
}

void check_frame_index(const DatasetFrames& frames, int frame) {
    if (frame < 1 || static_cast<size_t>(frame) >= frames.dirs.size())
        throw std::runtime_error("frame index " + std::to_string(frame) +
                                 " out of range; dataset has frames 1.." +
                                 std::to_string(frames.dirs.size() - 1));
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const sxt::ExperimentConfig& cfg) {
    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);

    const sxt::Phantom start = sxt::gen_start_volume(cfg.phantom);
    const std::vector<sxt::Frame> frames = sxt::apply_deformation_sequence(start, cfg.deformation);

    for (size_t i = 0; i < frames.size(); ++i) {
        const fs::path dir = out / frame_dir_name(i);
        fs::create_directories(dir);
        put_volume(log, dir / "volume", frames[i].volume);
        sxt::write_polylines_csv(dir / "lines.csv", frames[i].lines);
        log.note(dir / "lines.csv");
        for (int view = 0; view < 2; ++view) {
            const sxt::ScalarImage clean = sxt::forward_project(frames[i].volume, cfg.geometry, view);
            put_image(log, dir / ("proj_clean_v" + std::to_string(view)), clean);
            const double scale = i == 0 ? cfg.noise.clean_scale : cfg.noise.noisy_scale;
            const sxt::ScalarImage noisy = sxt::add_poisson_noise(
                clean, scale, cfg.master_seed, static_cast<uint64_t>(i) * 2 + view);
            put_image(log, dir / ("proj_noisy_v" + std::to_string(view)), noisy);
            put_pgm(log, dir / ("preview_noisy_v" + std::to_string(view) + ".pgm"), noisy);
        }
    }

    sxt::save_config_file(out / "config.json", cfg);
    log.note(out / "config.json");
    write_manifest(log, "dataset", cfg, {{"n_frames", frames.size()}});
    std::cout << "dataset with " << frames.size() << " frames written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// project

int cmd_project(const sxt::ExperimentConfig& cfg, const std::string& dataset,
                const std::string& volume_base, int frame) {
    sxt::ScalarVolume vol;
    if (!volume_base.empty()) {
        vol = sxt::read_volume(volume_base);
    } else {
        const DatasetFrames frames = list_dataset_frames(dataset);
        if (frame < 0 || static_cast<size_t>(frame) >= frames.dirs.size())
            throw std::runtime_error("frame index out of range");
        vol = sxt::read_volume(frames.dirs[frame] / "volume");
    }

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);
    for (int view = 0; view < 2; ++view) {
        const sxt::ScalarImage img = sxt::forward_project(vol, cfg.geometry, view);
        put_image(log, out / ("proj_v" + std::to_string(view)), img);
        put_pgm(log, out / ("preview_v" + std::to_string(view) + ".pgm"), img);
    }
    write_manifest(log, "projection", cfg);
    std::cout << "projections written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// register2d

int cmd_register2d(const sxt::ExperimentConfig& cfg, const std::string& dataset, int frame) {
    const DatasetFrames frames = list_dataset_frames(dataset);
    check_frame_index(frames, frame);

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);

    json results;
    for (int view = 0; view < 2; ++view) {
        const std::string v = std::to_string(view);
        const sxt::ScalarImage moving = sxt::read_image(frames.dirs[0] / ("proj_clean_v" + v));
        const sxt::ScalarImage fixed =
            sxt::read_image(frames.dirs[frame] / ("proj_noisy_v" + v));
        const sxt::RegResult2 res = sxt::register_2d(moving, fixed, cfg.reg2d);

        const sxt::ScalarImage moved = sxt::warp_image(moving, res.field);
        put_image(log, out / ("moved_v" + v), moved);
        put_pgm(log, out / ("moved_v" + v + ".pgm"), moved);

        sxt::ScalarImage dx(res.field.width, res.field.height);
        sxt::ScalarImage dy(res.field.width, res.field.height);
        dx.data = res.field.dx;
        dy.data = res.field.dy;
        put_image(log, out / ("field_v" + v + "_dx"), dx);
        put_image(log, out / ("field_v" + v + "_dy"), dy);

        std::ostringstream trace;
        trace << std::setprecision(17) << "level,iteration,objective\n";
        for (const sxt::TraceRow& row : res.trace)
            trace << row.level << "," << row.iteration << "," << row.objective << "\n";
        put_text(log, out / ("trace_v" + v + ".csv"), trace.str());

        results["view_" + v] = {{"objective", res.objective}, {"converged", res.converged}};
    }
    put_json(log, out / "results.json", results);
    write_manifest(log, "register2d", cfg, {{"frame", frame}});
    std::cout << "registration results written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// detect

int cmd_detect(const sxt::ExperimentConfig& cfg, const std::string& dataset, int frame) {
    const DatasetFrames frames = list_dataset_frames(dataset);
    if (frame < 0 || static_cast<size_t>(frame) >= frames.dirs.size())
        throw std::runtime_error("frame index out of range");

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);

    json results;
    for (int view = 0; view < 2; ++view) {
        const std::string v = std::to_string(view);
        const sxt::ScalarImage img =
            sxt::read_image(frames.dirs[frame] / ("proj_noisy_v" + v));
        const sxt::FeatureMap2 fm =
            sxt::detect_features_2d(img, cfg.marker_radius_px, cfg.detector_orientations);
        put_image(log, out / ("score_v" + v), fm.score);
        put_pgm(log, out / ("binary_v" + v + ".pgm"), fm.binary());
        results["view_" + v] = {{"threshold", fm.threshold}};
    }
    put_json(log, out / "results.json", results);
    write_manifest(log, "detect", cfg, {{"frame", frame}});
    std::cout << "feature maps written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// backproject

int cmd_backproject(const sxt::ExperimentConfig& cfg, const std::string& dataset, int frame,
                    bool filtered) {
    const DatasetFrames frames = list_dataset_frames(dataset);
    if (frame < 0 || static_cast<size_t>(frame) >= frames.dirs.size())
        throw std::runtime_error("frame index out of range");

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);

    const int nx = cfg.phantom.nx, ny = cfg.phantom.ny, nz = cfg.phantom.nz;
    for (int view = 0; view < 2; ++view) {
        const std::string v = std::to_string(view);
        const sxt::ScalarImage img =
            sxt::read_image(frames.dirs[frame] / ("proj_noisy_v" + v));
        const sxt::ScalarVolume bp =
            sxt::back_project(img, cfg.geometry, view, nx, ny, nz, filtered);
        put_volume(log, out / ("bp_v" + v), bp);
        put_pgm(log, out / ("bp_v" + v + "_midslice.pgm"), mid_slice(bp));
    }
    write_manifest(log, "backproject", cfg, {{"frame", frame}, {"filtered", filtered}});
    std::cout << "back-projections written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// map3d (no-prior mapping of one frame)

int cmd_map3d(const sxt::ExperimentConfig& cfg, const std::string& dataset, int frame) {
    const DatasetFrames frames = list_dataset_frames(dataset);
    check_frame_index(frames, frame);

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);

    std::array<sxt::FeatureMap2, 2> feats;
    for (int view = 0; view < 2; ++view) {
        const std::string v = std::to_string(view);
        const sxt::ScalarImage moving = sxt::read_image(frames.dirs[0] / ("proj_clean_v" + v));
        const sxt::ScalarImage fixed =
            sxt::read_image(frames.dirs[frame] / ("proj_noisy_v" + v));
        const sxt::RegResult2 res = sxt::register_2d(moving, fixed, cfg.reg2d);
        const sxt::ScalarImage moved = sxt::warp_image(moving, res.field);
        put_pgm(log, out / ("moved_v" + v + ".pgm"), moved);
        feats[view] = sxt::detect_features_2d(moved, cfg.marker_radius_px,
                                              cfg.detector_orientations);
        put_pgm(log, out / ("binary_v" + v + ".pgm"), feats[view].binary());
    }

    const int nx = cfg.phantom.nx, ny = cfg.phantom.ny, nz = cfg.phantom.nz;
    const sxt::FeatureVolume fv =
        sxt::map_3d_no_prior(feats[0], feats[1], cfg.geometry, nx, ny, nz);
    put_volume(log, out / "evidence", fv.score);
    sxt::write_polylines_csv(out / "est_lines.csv", fv.polylines);
    log.note(out / "est_lines.csv");

    json results = {{"n_lines", fv.polylines.size()}, {"threshold", fv.threshold}};
    const fs::path truth_path = frames.dirs[frame] / "lines.csv";
    if (fs::exists(truth_path)) {
        const auto truth = sxt::read_polylines_csv(truth_path, cfg.phantom.line_radius);
        const auto est_pts = sxt::dense_points(fv.polylines, 0.5);
        const auto truth_pts = sxt::dense_points(truth, 0.5);
        results["chamfer"] = sxt::chamfer_distance(est_pts, truth_pts);
    }
    put_json(log, out / "results.json", results);
    write_manifest(log, "map3d", cfg, {{"frame", frame}});
    std::cout << "no-prior mapping written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// track

std::vector<sxt::Strategy> strategies_from_config(const sxt::ExperimentConfig& cfg) {
    if (cfg.strategy == "both")
        return {sxt::Strategy::StartFramePrior, sxt::Strategy::ChainedPrior};
    return {sxt::strategy_from_string(cfg.strategy)};
}

int cmd_track(const sxt::ExperimentConfig& cfg, const std::string& dataset) {
    const DatasetFrames frames = list_dataset_frames(dataset);

    sxt::ScalarVolume start_volume = sxt::read_volume(frames.dirs[0] / "volume");
    std::vector<sxt::Polyline3> start_lines =
        sxt::read_polylines_csv(frames.dirs[0] / "lines.csv", cfg.phantom.line_radius);

    std::vector<std::array<sxt::ScalarImage, 2>> noisy;
    std::vector<std::vector<sxt::Polyline3>> truth;
    for (size_t k = 1; k < frames.dirs.size(); ++k) {
        noisy.push_back({sxt::read_image(frames.dirs[k] / "proj_noisy_v0"),
                         sxt::read_image(frames.dirs[k] / "proj_noisy_v1")});
        truth.push_back(sxt::read_polylines_csv(frames.dirs[k] / "lines.csv",
                                                cfg.phantom.line_radius));
    }

    const fs::path out = cfg.output_dir;
    fs::create_directories(out);
    ArtifactLog log(out);
    const sxt::TrackingConfigs tcfgs = cfg.tracking_configs();

    json strategy_names = json::array();
    for (const sxt::Strategy strategy : strategies_from_config(cfg)) {
        sxt::TrackingRun run;
        run.strategy = strategy;
        run.start_volume = start_volume;
        run.start_lines = start_lines;
        run.noisy_frames = noisy;
        run.truth_lines = truth;
        run = sxt::track_sequence(std::move(run), cfg.geometry, tcfgs);

        const std::string name = sxt::to_string(strategy);
        strategy_names.push_back(name);
        const fs::path sdir = out / name;
        fs::create_directories(sdir);

        std::ostringstream metrics, stages, timings;
        metrics << std::setprecision(17) << "frame,ok,chamfer,auc,err2d_px,error\n";
        stages << "frame,stage,checksum\n";
        timings << std::setprecision(6) << "frame,stage,seconds\n";
        for (const sxt::FrameRecord& rec : run.records) {
            metrics << rec.frame_index << "," << (rec.ok ? 1 : 0) << "," << rec.metrics.chamfer
                    << "," << rec.metrics.auc << "," << rec.metrics.err2d_px << ","
                    << sanitize_csv_field(rec.error) << "\n";
            for (const sxt::StageRecord& st : rec.result.stages) {
                stages << rec.frame_index << "," << st.name << "," << sxt::hex64(st.checksum)
                       << "\n";
                timings << rec.frame_index << "," << st.name << "," << st.seconds << "\n";
            }
            if (!rec.ok) continue;
            const std::string fr = frame_dir_name(static_cast<size_t>(rec.frame_index));
            sxt::write_polylines_csv(sdir / ("est_lines_" + fr + ".csv"), rec.result.lines);
            log.note(sdir / ("est_lines_" + fr + ".csv"));
            for (int view = 0; view < 2; ++view) {
                const sxt::ScalarImage& base = noisy[rec.frame_index - 1][view];
                put_pgm(log,
                        sdir / ("overlay_" + fr + "_v" + std::to_string(view) + ".pgm"),
                        overlay_image(base, rec.result.features[view].binary()));
            }
        }
        put_text(log, sdir / "metrics.csv", metrics.str());
        put_text(log, sdir / "stages.csv", stages.str());
        // Timings hold wall-clock values and are excluded from the manifest.
        write_text(sdir / "timings.csv", timings.str());
    }

    sxt::save_config_file(out / "config.json", cfg);
    log.note(out / "config.json");
    write_manifest(log, "run", cfg, {{"strategies", strategy_names}});
    std::cout << "tracking run written to " << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct MetricsRow {
    int frame = 0;
    bool ok = false;
    double chamfer = -1.0;
    double auc = -1.0;
    double err2d_px = -1.0;
    std::string error;
};

std::vector<MetricsRow> read_metrics_csv(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(is, line) || line.rfind("frame,ok,chamfer,auc,err2d_px,error", 0) != 0)
        throw std::runtime_error("unexpected metrics header in " + path.string());
    std::vector<MetricsRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        MetricsRow row;
        char comma = 0;
        int ok_int = 0;
        ls >> row.frame >> comma >> ok_int >> comma >> row.chamfer >> comma >> row.auc >>
            comma >> row.err2d_px >> comma;
        if (ls.fail()) throw std::runtime_error("malformed metrics row in " + path.string());
        row.ok = ok_int != 0;
        std::getline(ls, row.error);
        rows.push_back(row);
    }
    return rows;
}

std::map<int, double> read_frame_seconds(const fs::path& path) {
    std::map<int, double> totals;
    std::ifstream is(path);
    if (!is) return totals;  // timings are optional
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const size_t c1 = line.find(',');
        const size_t c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) continue;
        totals[std::stoi(line.substr(0, c1))] += std::stod(line.substr(c2 + 1));
    }
    return totals;
}

int cmd_eval(const sxt::ExperimentConfig& cfg, const std::string& run_dir_arg) {
    const fs::path run_dir = run_dir_arg.empty() ? fs::path(cfg.output_dir) : fs::path(run_dir_arg);

    std::vector<std::string> expected;
    for (const sxt::Strategy s : strategies_from_config(cfg)) expected.push_back(sxt::to_string(s));

    std::vector<std::string> missing;
    for (const std::string& name : expected)
        if (!fs::exists(run_dir / name / "metrics.csv"))
            missing.push_back((run_dir / name / "metrics.csv").string());
    if (!missing.empty()) {
        std::string msg = "missing run artifacts:";
        for (const std::string& m : missing) msg += "\n  " + m;
        throw std::runtime_error(msg);
    }

    std::ostringstream report_csv, report_txt;
    report_csv << std::setprecision(17) << "strategy,frame,ok,chamfer,auc,err2d_px,seconds\n";
    std::vector<std::string> violations;

    for (const std::string& name : expected) {
        const std::vector<MetricsRow> rows = read_metrics_csv(run_dir / name / "metrics.csv");
        const std::map<int, double> seconds = read_frame_seconds(run_dir / name / "timings.csv");
        std::vector<double> chamfers;
        for (const MetricsRow& row : rows) {
            double secs = 0.0;
            if (auto it = seconds.find(row.frame); it != seconds.end()) secs = it->second;
            report_csv << name << "," << row.frame << "," << (row.ok ? 1 : 0) << ","
                       << row.chamfer << "," << row.auc << "," << row.err2d_px << "," << secs
                       << "\n";
            const std::string where = name + " frame " + std::to_string(row.frame);
            if (!row.ok) {
                violations.push_back(where + ": failed (" + row.error + ")");
                continue;
            }
            chamfers.push_back(row.chamfer);
            if (row.chamfer > cfg.eval.max_chamfer)
                violations.push_back(where + ": chamfer " + std::to_string(row.chamfer) +
                                     " > max_chamfer " + std::to_string(cfg.eval.max_chamfer));
            if (row.auc >= 0.0 && row.auc < cfg.eval.min_auc)
                violations.push_back(where + ": auc " + std::to_string(row.auc) +
                                     " < min_auc " + std::to_string(cfg.eval.min_auc));
            if (row.err2d_px > cfg.eval.max_err2d_px)
                violations.push_back(where + ": err2d_px " + std::to_string(row.err2d_px) +
                                     " > max_err2d_px " + std::to_string(cfg.eval.max_err2d_px));
        }
        std::sort(chamfers.begin(), chamfers.end());
        const double median =
            chamfers.empty() ? -1.0
                             : (chamfers.size() % 2 ? chamfers[chamfers.size() / 2]
                                                    : 0.5 * (chamfers[chamfers.size() / 2 - 1] +
                                                             chamfers[chamfers.size() / 2]));
        report_txt << name << ": " << rows.size() << " frames, median chamfer " << median
                   << " voxels\n";
    }

    for (const std::string& v : violations) report_txt << "violation: " << v << "\n";
    if (violations.empty()) report_txt << "all thresholds met\n";

    write_text(run_dir / "report.csv", report_csv.str());
    write_text(run_dir / "report.txt", report_txt.str());
    std::cout << report_txt.str();
    return violations.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stereo x-ray tomography simulation and line-fiducial tracking"};
    app.require_subcommand(1);

    std::string config_path, out_dir, scale, dataset, run_dir, volume_base;
    uint64_t seed = 0;
    int frame = 1;
    bool filtered = false;

    auto* opt_config = app.add_option("--config", config_path, "experiment config (json)")
                           ->check(CLI::ExistingFile);
    auto* opt_out = app.add_option("--out", out_dir, "output directory (overrides the config)");
    auto* opt_seed = app.add_option("--seed", seed, "master seed override");
    auto* opt_scale = app.add_option("--scale", scale, "preset scale")
                          ->check(CLI::IsMember({"desk", "paper"}));

    CLI::App* sub_gen = app.add_subcommand("gen", "generate a simulated dataset");
    CLI::App* sub_project = app.add_subcommand("project", "forward-project a volume");
    CLI::App* sub_register2d =
        app.add_subcommand("register2d", "register start projections to a frame's noisy pair");
    CLI::App* sub_detect = app.add_subcommand("detect", "detect line features on projections");
    CLI::App* sub_backproject =
        app.add_subcommand("backproject", "back-project a frame's noisy pair");
    CLI::App* sub_map3d = app.add_subcommand("map3d", "map one frame's lines without a prior");
    CLI::App* sub_track = app.add_subcommand("track", "track the full sequence");
    CLI::App* sub_eval = app.add_subcommand("eval", "aggregate a run and check thresholds");

    for (CLI::App* sub : {sub_gen, sub_project, sub_register2d, sub_detect, sub_backproject,
                          sub_map3d, sub_track, sub_eval})
        sub->fallthrough();

    for (CLI::App* sub : {sub_project, sub_register2d, sub_detect, sub_backproject, sub_map3d,
                          sub_track})
        sub->add_option("--dataset", dataset, "dataset directory produced by gen");
    for (CLI::App* sub : {sub_project, sub_register2d, sub_detect, sub_backproject, sub_map3d})
        sub->add_option("--frame", frame, "frame index within the dataset");
    sub_project->add_option("--volume", volume_base, "volume base path (instead of --dataset)");
    sub_backproject->add_flag("--filtered", filtered, "apply the ramp filter first");
    sub_eval->add_option("--run", run_dir, "run directory (defaults to the output directory)");

    try {
        app.parse(argc, argv);

        sxt::ExperimentConfig cfg =
            opt_config->count() ? sxt::load_config_file(config_path) : sxt::desk_scale_config();
        if (opt_scale->count()) cfg = sxt::apply_scale(cfg, scale);
        if (opt_seed->count()) {
            cfg.master_seed = seed;
            sxt::derive_seeds(cfg);
        }
        if (opt_out->count()) cfg.output_dir = out_dir;
        cfg.validate();

        auto need_dataset = [&]() -> const std::string& {
            if (dataset.empty())
                throw std::runtime_error("--dataset is required for this subcommand");
            return dataset;
        };

        if (sub_gen->parsed()) return cmd_gen(cfg);
        if (sub_project->parsed())
            return cmd_project(cfg, volume_base.empty() ? need_dataset() : dataset, volume_base,
                               frame);
        if (sub_register2d->parsed()) return cmd_register2d(cfg, need_dataset(), frame);
        if (sub_detect->parsed()) return cmd_detect(cfg, need_dataset(), frame);
        if (sub_backproject->parsed()) return cmd_backproject(cfg, need_dataset(), frame, filtered);
        if (sub_map3d->parsed()) return cmd_map3d(cfg, need_dataset(), frame);
        if (sub_track->parsed()) return cmd_track(cfg, need_dataset());
        if (sub_eval->parsed()) return cmd_eval(cfg, run_dir);
        throw std::runtime_error("no subcommand given");
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
