#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sxt/features.hpp"
#include "sxt/grid.hpp"
#include "sxt/projector.hpp"
#include "sxt/registration.hpp"

namespace sxt {

enum class Strategy { StartFramePrior, ChainedPrior };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct TrackingConfigs {
    RegConfig reg2d;
    RegConfig reg3d;
    double marker_radius_px = 1.2;   // projected marker radius on the detector
    int detector_orientations = 8;
    double prior_smooth_sigma = 1.0; // applied to prior raster and evidence before 3D registration
    double extract_threshold_frac = 0.5;

    TrackingConfigs() {
        reg3d.similarity = Similarity::NCC;
        reg3d.lambda = 0.05;
        reg3d.max_iterations = 80;
    }
};

// Checksums of the nine stage outputs, for reproducibility audits.
struct StageRecord {
    std::string name;
    uint64_t checksum = 0;
    double seconds = 0.0;
};

struct FrameResult {
    std::array<ScalarImage, 2> moving;     // stage 1
    std::array<RegResult2, 2> reg2d;       // stage 2
    std::array<ScalarImage, 2> moved;      // stage 3
    std::array<FeatureMap2, 2> features;   // stage 4
    ScalarVolume evidence;                 // stage 5
    ScalarVolume prior_raster;             // stage 6
    RegResult3 reg3d;                      // stage 7
    ScalarVolume feature_volume;           // stage 8
    std::vector<Polyline3> lines;          // stage 9
    std::vector<StageRecord> stages;
};

// Full per-frame pipeline with the prior given as explicit moving images
// (the chained strategy feeds the previous frame's moved images here).
FrameResult track_frame_with_projections(const std::array<ScalarImage, 2>& moving,
                                         const std::vector<Polyline3>& prior_lines,
                                         const std::array<ScalarImage, 2>& noisy_pair,
                                         const StereoGeometry& geom, int nx, int ny, int nz,
                                         const TrackingConfigs& cfgs);

// Spec-shaped entry: moving images are forward projections of the prior volume.
FrameResult track_frame(const ScalarVolume& prior_volume,
                        const std::vector<Polyline3>& prior_lines,
                        const std::array<ScalarImage, 2>& noisy_pair,
                        const StereoGeometry& geom, const TrackingConfigs& cfgs);

struct FrameMetrics {
    double chamfer = -1.0;       // voxels, vs ground-truth lines (when provided)
    double auc = -1.0;           // mean detection AUC over the two views
    double err2d_px = -1.0;      // mean 2D line-position error over the two views
};

struct FrameRecord {
    int frame_index = 0;          // 1-based position in the deforming sequence
    bool ok = false;
    std::string error;            // annotated with the failing stage
    FrameResult result;
    FrameMetrics metrics;
};

struct TrackingRun {
    Strategy strategy = Strategy::StartFramePrior;
    ScalarVolume start_volume;
    std::vector<Polyline3> start_lines;
    // noisy stereo pairs for frames 1..N-1 of the sequence (frame 0 is the start)
    std::vector<std::array<ScalarImage, 2>> noisy_frames;
    // optional ground truth per tracked frame, same indexing as noisy_frames
    std::vector<std::vector<Polyline3>> truth_lines;

    std::vector<FrameRecord> records;  // filled by track_sequence
};

// Runs the per-frame pipeline over the sequence. StartFramePrior keeps the
// starting frame as prior for every frame; ChainedPrior feeds frame k-1's
// estimates (moved images + extracted lines) into frame k. Per-frame failures
// are recorded and the run continues.
TrackingRun track_sequence(TrackingRun run, const StereoGeometry& geom,
                           const TrackingConfigs& cfgs);

// Uniform arc-length resampling of every line; turns polyline estimates into
// point sets for Chamfer evaluation.
std::vector<Vec3> dense_points(const std::vector<Polyline3>& lines, double spacing);

uint64_t checksum(const ScalarImage& img);
uint64_t checksum(const ScalarVolume& vol);
uint64_t checksum(const DisplacementField2& f);
uint64_t checksum(const DisplacementField3& f);
uint64_t checksum(const std::vector<Polyline3>& lines);

}  // namespace sxt
