#pragma once

#include <cstdint>
#include <vector>

#include "sxt/grid.hpp"

namespace sxt {

struct PhantomSpec {
    int nx = 64;
    int ny = 64;
    int nz = 64;
    int n_lines = 5;
    int n_ellipsoids = 10;
    double line_radius = 1.2;           // voxels
    // Markers must stay prominent in projections: a ray crosses a marker tube
    // for ~2 voxels but soft background for tens, and the Poisson noise floor
    // at low dose sits near the tube's path integral unless lines are bright.
    double line_intensity = 8.0;
    double ellipsoid_intensity_min = 0.2;
    double ellipsoid_intensity_max = 0.5;
    // Content is kept inside centered spheres so that every frame of a
    // deforming sequence stays inside both views' field of view.
    double line_region_frac = 0.42;      // line endpoints within this fraction of min(dims)
    double ellipsoid_center_frac = 0.20;
    // Minimum pairwise separation of the line shadows in each stereo view
    // (voxel units at the isocenter; 0 disables). Markers are placed so that
    // both views resolve every marker, as in a physical stereo setup.
    double min_projected_separation = 6.5;
    uint64_t seed = 0;

    void validate() const;
};

struct DeformationSpec {
    double sigma = 6.0;                  // smoothing of the background field, pixels
    double amplitude = 3.0;              // max background displacement, voxels
    double line_magnitude_min = 3.0;     // per-frame line distortion, voxels
    double line_magnitude_max = 6.0;
    // Deformed lines must keep this much pairwise shadow separation per view
    // (voxel units at the isocenter; 0 disables); candidates violating it are
    // redrawn like out-of-bounds ones.
    double min_projected_separation = 4.0;
    int n_frames = 2;
    uint64_t seed = 0;

    void validate(int min_dim) const;
};

struct Phantom {
    ScalarVolume volume;      // background + rasterized lines
    ScalarVolume background;  // ellipsoids only
    std::vector<Polyline3> lines;
    double line_intensity = 1.0;
};

struct Frame {
    ScalarVolume volume;
    ScalarVolume background;
    std::vector<Polyline3> lines;
    double line_intensity = 1.0;
};

// Random solid ellipsoids plus straight line fiducials; lines pairwise
// separated by >= 4 x radius (rejection sampling, error past 10000 attempts).
Phantom gen_start_volume(const PhantomSpec& spec);

// I.i.d. standard normal per component, Gaussian-smoothed, rescaled so the
// maximum displacement magnitude equals `amplitude`. Regenerates (bounded)
// if any per-axis component gradient reaches 1 (folding guard).
DisplacementField3 gen_smooth_field(int nx, int ny, int nz, double sigma, double amplitude,
                                    uint64_t master_seed, uint64_t stream_index = 0);

// Densifies the line (spacing <= 0.5 voxel) and displaces interior points
// perpendicular to the chord with sin(k*pi*t) modes, k in {1,2}, in a randomly
// rotated transverse frame; endpoints stay exactly fixed; peak displacement
// equals `magnitude`.
Polyline3 gen_line_trig_deformation(const Polyline3& line, double magnitude,
                                    uint64_t master_seed, uint64_t stream_index = 0);

// Frame i warps frame i-1's background with a fresh smooth field and re-deforms
// each line; frame 0 is the start itself. Deformed lines leaving the safe
// region are regenerated (bounded retries).
std::vector<Frame> apply_deformation_sequence(const Phantom& start, const DeformationSpec& dspec);

// Each output pixel = Poisson(value * scale) / scale, sampled independently.
ScalarImage add_poisson_noise(const ScalarImage& img, double scale,
                              uint64_t master_seed, uint64_t stream_index = 0);

}  // namespace sxt
