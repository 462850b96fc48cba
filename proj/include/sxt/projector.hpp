#pragma once

#include <array>

#include "sxt/grid.hpp"

namespace sxt {

// Two fixed source-detector pairs rotated about the volume's vertical (z)
// axis; the volume center sits at the rotation isocenter. Distances are in
// voxel units: source->isocenter and isocenter->detector.
struct StereoGeometry {
    double source_object_distance = 128.0;
    double object_detector_distance = 128.0;
    int detector_width = 256;
    int detector_height = 256;
    double detector_pitch = 1.0;  // physical units per detector pixel
    std::array<double, 2> view_angles_deg{-30.0, 30.0};

    double magnification() const {
        return (source_object_distance + object_detector_distance) / source_object_distance;
    }
    void validate() const;
};

// Ray-driven line integral: march each source->pixel ray with step <= `step`
// voxels (midpoint rule), accumulating trilinear samples x step length.
// Output units: value * voxels.
ScalarImage forward_project(const ScalarVolume& vol, const StereoGeometry& geom, int view,
                            double step = 0.5);

// Back-projection into a nx*ny*nz volume.
//   weighted=true  (default): voxel-driven; each voxel accumulates the
//     bilinearly sampled detector value (zero outside the detector) times the
//     FDK inverse-square distance weight.
//   weighted=false: exact adjoint of forward_project (ray-driven trilinear
//     splatting over the same sample points); used by the adjoint identity.
//   filtered=true: rows are cosine-weighted and convolved with a spatial
//     Ram-Lak kernel first.
ScalarVolume back_project(const ScalarImage& img, const StereoGeometry& geom, int view,
                          int nx, int ny, int nz, bool filtered = false, bool weighted = true,
                          double step = 0.5);

// Spatial-domain Ram-Lak taps for offsets -half..half, pixel pitch tau.
std::vector<double> ramp_kernel(int half_width, double tau);

struct BpEvidence {
    ScalarVolume volume;       // max-normalized to [0, 1]
    bool has_evidence = false; // false when either feature map was all zero
};

// Pointwise product of the per-view max-normalized back-projections,
// re-normalized to [0, 1]: evidence concentrates where the two ray cones agree.
BpEvidence make_bp_evidence(const ScalarImage& feat0, const ScalarImage& feat1,
                            const StereoGeometry& geom, int nx, int ny, int nz);

}  // namespace sxt
