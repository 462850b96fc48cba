#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sxt/phantom.hpp"
#include "sxt/projector.hpp"
#include "sxt/tracking.hpp"

namespace sxt {

struct NoiseConfig {
    double clean_scale = 10.0;   // mild noise on the start frame's projections
    double noisy_scale = 0.24;   // heavy noise on deformed-frame projections
};

struct EvalThresholds {
    double max_chamfer = 1.0;    // voxels
    double min_auc = 0.95;
    double max_err2d_px = 3.0;
};

struct ExperimentConfig {
    PhantomSpec phantom;
    DeformationSpec deformation;
    StereoGeometry geometry;
    NoiseConfig noise;
    RegConfig reg2d;
    RegConfig reg3d;
    double marker_radius_px = 1.2;
    int detector_orientations = 8;
    double prior_smooth_sigma = 1.0;
    std::string strategy = "both";  // StartFramePrior | ChainedPrior | both
    EvalThresholds eval;
    std::string output_dir = "out";
    uint64_t master_seed = 1;

    TrackingConfigs tracking_configs() const;
    void validate() const;
};

// Desk scale is the default; paper scale switches to 256^3 volumes and
// 256^2 projections with the same magnification-2 proportions.
ExperimentConfig desk_scale_config();
ExperimentConfig paper_scale_config();
ExperimentConfig apply_scale(ExperimentConfig cfg, const std::string& scale);

// Per-section seeds derived from the master seed; call after changing it.
void derive_seeds(ExperimentConfig& cfg);

// JSON round trip; parsing rejects unknown keys.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config_file(const std::filesystem::path& path);
void save_config_file(const std::filesystem::path& path, const ExperimentConfig& cfg);

// Stable hash of the serialized config, recorded in manifests.
uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace sxt
