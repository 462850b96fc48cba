#include "sxt/tracking.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "sxt/interp.hpp"
#include "sxt/io.hpp"
#include "sxt/metrics.hpp"
#include "sxt/rasterize.hpp"
#include "sxt/smooth.hpp"

namespace sxt {

std::string to_string(Strategy s) {
    return s == Strategy::StartFramePrior ? "start_frame_prior" : "chained_prior";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "start_frame_prior") return Strategy::StartFramePrior;
    if (s == "chained_prior") return Strategy::ChainedPrior;
    throw std::invalid_argument("unknown strategy: " + s);
}

uint64_t checksum(const ScalarImage& img) { return fnv1a64(std::span<const double>(img.data)); }
uint64_t checksum(const ScalarVolume& vol) { return fnv1a64(std::span<const double>(vol.data)); }

uint64_t checksum(const DisplacementField2& f) {
    std::vector<double> all;
    all.reserve(f.dx.size() * 2);
    all.insert(all.end(), f.dx.begin(), f.dx.end());
    all.insert(all.end(), f.dy.begin(), f.dy.end());
    return fnv1a64(std::span<const double>(all));
}

uint64_t checksum(const DisplacementField3& f) {
    std::vector<double> all;
    all.reserve(f.dx.size() * 3);
    all.insert(all.end(), f.dx.begin(), f.dx.end());
    all.insert(all.end(), f.dy.begin(), f.dy.end());
    all.insert(all.end(), f.dz.begin(), f.dz.end());
    return fnv1a64(std::span<const double>(all));
}

uint64_t checksum(const std::vector<Polyline3>& lines) {
    std::vector<double> all;
    for (const Polyline3& l : lines) {
        all.push_back(l.radius);
        for (const Vec3& p : l.points) {
            all.push_back(p.x);
            all.push_back(p.y);
            all.push_back(p.z);
        }
    }
    return fnv1a64(std::span<const double>(all));
}

namespace {

uint64_t combine_checksums(uint64_t a, uint64_t b) {
    const double packed[2] = {static_cast<double>(a & 0xFFFFFFFFu),
                              static_cast<double>((a >> 32) ^ (b & 0xFFFFFFFFu)) + b};
    return fnv1a64(std::span<const double>(packed, 2));
}

class StageTimer {
public:
    explicit StageTimer(std::vector<StageRecord>& records) : records_(records) {}

    void record(const std::string& name, uint64_t chk) {
        const auto now = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(now - last_).count();
        records_.push_back({name, chk, secs});
        last_ = now;
    }

private:
    std::vector<StageRecord>& records_;
    std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

[[noreturn]] void stage_error(const std::string& stage, const std::exception& e) {
    throw std::runtime_error(stage + ": " + e.what());
}

}  // namespace

FrameResult track_frame_with_projections(const std::array<ScalarImage, 2>& moving,
                                         const std::vector<Polyline3>& prior_lines,
                                         const std::array<ScalarImage, 2>& noisy_pair,
                                         const StereoGeometry& geom, int nx, int ny, int nz,
                                         const TrackingConfigs& cfgs) {
    if (prior_lines.empty())
        throw std::invalid_argument("track_frame: prior_lines must not be empty");
    for (int v = 0; v < 2; ++v)
        if (!moving[v].same_shape(noisy_pair[v]))
            throw std::invalid_argument("track_frame: moving/noisy shape mismatch");

    FrameResult res;
    StageTimer timer(res.stages);

    res.moving = moving;
    timer.record("project_prior", combine_checksums(checksum(res.moving[0]), checksum(res.moving[1])));

    try {
        for (int v = 0; v < 2; ++v)
            res.reg2d[v] = register_2d(res.moving[v], noisy_pair[v], cfgs.reg2d);
    } catch (const std::exception& e) {
        stage_error("register_2d", e);
    }
    timer.record("register_2d",
                 combine_checksums(checksum(res.reg2d[0].field), checksum(res.reg2d[1].field)));

    try {
        for (int v = 0; v < 2; ++v)
            res.moved[v] = warp_image(res.moving[v], res.reg2d[v].field);
    } catch (const std::exception& e) {
        stage_error("warp_moved", e);
    }
    timer.record("warp_moved", combine_checksums(checksum(res.moved[0]), checksum(res.moved[1])));

    try {
        for (int v = 0; v < 2; ++v)
            res.features[v] =
                detect_features_2d(res.moved[v], cfgs.marker_radius_px, cfgs.detector_orientations);
    } catch (const std::exception& e) {
        stage_error("detect_features", e);
    }
    timer.record("detect_features", combine_checksums(checksum(res.features[0].score),
                                                      checksum(res.features[1].score)));

    try {
        const BpEvidence ev =
            make_bp_evidence(res.features[0].binary(), res.features[1].binary(), geom, nx, ny, nz);
        if (!ev.has_evidence) throw std::runtime_error("no evidence at ray intersections");
        res.evidence = ev.volume;
    } catch (const std::exception& e) {
        stage_error("bp_evidence", e);
    }
    timer.record("bp_evidence", checksum(res.evidence));

    try {
        res.prior_raster = rasterize_polylines(prior_lines, nx, ny, nz);
    } catch (const std::exception& e) {
        stage_error("prior_raster", e);
    }
    timer.record("prior_raster", checksum(res.prior_raster));

    try {
        RegConfig cfg3 = cfgs.reg3d;
        cfg3.prefilter_sigma = std::max(cfg3.prefilter_sigma, cfgs.prior_smooth_sigma);
        res.reg3d = register_3d_prior(res.prior_raster, res.evidence, cfg3);
    } catch (const std::exception& e) {
        stage_error("register_3d", e);
    }
    timer.record("register_3d", checksum(res.reg3d.field));

    try {
        res.feature_volume = warp_volume(res.prior_raster, res.reg3d.field);
    } catch (const std::exception& e) {
        stage_error("warp_prior", e);
    }
    timer.record("warp_prior", checksum(res.feature_volume));

    try {
        const double thr = cfgs.extract_threshold_frac * res.feature_volume.max_value();
        const PolylineExtraction ex =
            extract_polylines(res.feature_volume, thr, static_cast<int>(prior_lines.size()),
                              prior_lines.front().radius);
        res.lines = ex.lines;
        if (res.lines.empty()) throw std::runtime_error("no polylines recovered");
    } catch (const std::exception& e) {
        stage_error("extract_lines", e);
    }
    timer.record("extract_lines", checksum(res.lines));

    return res;
}

FrameResult track_frame(const ScalarVolume& prior_volume,
                        const std::vector<Polyline3>& prior_lines,
                        const std::array<ScalarImage, 2>& noisy_pair,
                        const StereoGeometry& geom, const TrackingConfigs& cfgs) {
    std::array<ScalarImage, 2> moving;
    try {
        moving = {forward_project(prior_volume, geom, 0), forward_project(prior_volume, geom, 1)};
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("project_prior: ") + e.what());
    }
    return track_frame_with_projections(moving, prior_lines, noisy_pair, geom, prior_volume.nx,
                                        prior_volume.ny, prior_volume.nz, cfgs);
}

// Points along the polylines at spacing <= `spacing`, for Chamfer evaluation.
std::vector<Vec3> dense_points(const std::vector<Polyline3>& lines, double spacing) {
    std::vector<Vec3> pts;
    for (const Polyline3& line : lines) {
        if (line.points.empty()) continue;
        pts.push_back(line.points.front());
        for (size_t i = 1; i < line.points.size(); ++i) {
            const Vec3 a = line.points[i - 1];
            const Vec3 b = line.points[i];
            const double len = norm(b - a);
            const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
            for (int k = 1; k <= n; ++k) pts.push_back(a + (static_cast<double>(k) / n) * (b - a));
        }
    }
    return pts;
}

namespace {

// Binary detector-plane mask of the projected line centerlines, dilated to
// `radius_px`; ground truth for detection ROC and 2D position error.
ScalarImage project_lines_mask(const std::vector<Polyline3>& lines, const StereoGeometry& geom,
                               int view, int nx, int ny, int nz, double radius_px) {
    const double theta = geom.view_angles_deg[static_cast<size_t>(view)] * 3.14159265358979323846 / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double cx = (nx - 1) / 2.0, cy = (ny - 1) / 2.0, cz = (nz - 1) / 2.0;
    const double sod = geom.source_object_distance;
    const double sdd = sod + geom.object_detector_distance;

    ScalarImage mask(geom.detector_width, geom.detector_height);
    const int r = std::max(0, static_cast<int>(std::ceil(radius_px)));
    for (const Vec3& p : dense_points(lines, 0.25)) {
        const double wx = p.x - cx, wy = p.y - cy, wz = p.z - cz;
        const double vx = c * wx + s * wy;
        const double vy = -s * wx + c * wy;
        const double dist = sod + vy;
        if (dist < 1e-6) continue;
        const double mag = sdd / dist;
        const double pi = vx * mag / geom.detector_pitch + (geom.detector_width - 1) / 2.0;
        const double pj = wz * mag / geom.detector_pitch + (geom.detector_height - 1) / 2.0;
        for (int dj = -r; dj <= r; ++dj)
            for (int di = -r; di <= r; ++di) {
                const int i = static_cast<int>(std::round(pi)) + di;
                const int j = static_cast<int>(std::round(pj)) + dj;
                if (i < 0 || i >= mask.width || j < 0 || j >= mask.height) continue;
                const double dx = i - pi, dy = j - pj;
                if (dx * dx + dy * dy <= radius_px * radius_px) mask.at(i, j) = 1.0;
            }
    }
    return mask;
}

FrameMetrics score_frame(const FrameResult& res, const std::vector<Polyline3>& truth,
                         const StereoGeometry& geom, int nx, int ny, int nz,
                         const TrackingConfigs& cfgs) {
    FrameMetrics m;
    if (truth.empty()) return m;

    const std::vector<Vec3> est_pts = dense_points(res.lines, 0.5);
    const std::vector<Vec3> truth_pts = dense_points(truth, 0.5);
    if (!est_pts.empty() && !truth_pts.empty())
        m.chamfer = chamfer_distance(est_pts, truth_pts);

    double auc_sum = 0.0, err_sum = 0.0;
    int auc_n = 0, err_n = 0;
    for (int v = 0; v < 2; ++v) {
        const ScalarImage mask =
            project_lines_mask(truth, geom, v, nx, ny, nz, cfgs.marker_radius_px);
        try {
            auc_sum += roc_curve(res.features[v].score, mask).auc;
            ++auc_n;
        } catch (const std::exception&) {
            // degenerate mask (all positive/negative): AUC undefined for this view
        }
        try {
            err_sum += line_position_error_2d(res.features[v].binary(), mask);
            ++err_n;
        } catch (const std::exception&) {
        }
    }
    if (auc_n > 0) m.auc = auc_sum / auc_n;
    if (err_n > 0) m.err2d_px = err_sum / err_n;
    return m;
}

}  // namespace

TrackingRun track_sequence(TrackingRun run, const StereoGeometry& geom,
                           const TrackingConfigs& cfgs) {
    if (run.noisy_frames.empty())
        throw std::invalid_argument("track_sequence: no frames to track");
    if (run.start_volume.data.empty() || run.start_lines.empty())
        throw std::invalid_argument("track_sequence: missing start volume or lines");
    if (!run.truth_lines.empty() && run.truth_lines.size() != run.noisy_frames.size())
        throw std::invalid_argument("track_sequence: truth_lines size mismatch");

    const int nx = run.start_volume.nx, ny = run.start_volume.ny, nz = run.start_volume.nz;
    run.records.clear();
    run.records.reserve(run.noisy_frames.size());

    const std::array<ScalarImage, 2> start_proj{forward_project(run.start_volume, geom, 0),
                                                forward_project(run.start_volume, geom, 1)};
    std::array<ScalarImage, 2> prior_moving = start_proj;
    std::vector<Polyline3> prior_lines = run.start_lines;

    for (size_t k = 0; k < run.noisy_frames.size(); ++k) {
        FrameRecord rec;
        rec.frame_index = static_cast<int>(k) + 1;
        try {
            rec.result = track_frame_with_projections(prior_moving, prior_lines,
                                                      run.noisy_frames[k], geom, nx, ny, nz, cfgs);
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        if (rec.ok && !run.truth_lines.empty())
            rec.metrics = score_frame(rec.result, run.truth_lines[k], geom, nx, ny, nz, cfgs);
        run.records.push_back(std::move(rec));

        if (run.strategy == Strategy::ChainedPrior && run.records.back().ok) {
            prior_moving = run.records.back().result.moved;
            prior_lines = run.records.back().result.lines;
        }
        // StartFramePrior keeps the initial prior; a failed chained frame also
        // falls back to the last good prior by leaving it unchanged.
    }
    return run;
}

}  // namespace sxt
