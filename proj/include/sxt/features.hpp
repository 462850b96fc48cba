#pragma once

#include <vector>

#include "sxt/grid.hpp"
#include "sxt/projector.hpp"

namespace sxt {

struct FeatureMap2 {
    ScalarImage score;        // values in [0, 1]
    double threshold = 0.5;   // binarization threshold (absolute)

    ScalarImage binary() const;
};

struct FeatureVolume {
    ScalarVolume score;       // values in [0, 1]
    double threshold = 0.5;
    std::vector<Polyline3> polylines;
};

// Multi-orientation matched filter: second-derivative-of-Gaussian line kernels
// (sigma = marker radius at detector scale), per-pixel max response over
// orientations, normalized to [0, 1]; threshold by Otsu's criterion.
FeatureMap2 detect_features_2d(const ScalarImage& img, double marker_radius_px,
                               int n_orientations = 8);

// Otsu's criterion over a 256-bin histogram of values in [0, 1].
double otsu_threshold(const ScalarImage& scores);

struct PolylineExtraction {
    std::vector<Polyline3> lines;
    int n_components = 0;       // connected components above the size cutoff
    bool short_of_expected = false;
};

// Connected-component labeling (26-connectivity) on the binarized volume;
// per component, voxels ordered by projection onto the principal axis and
// smoothed with a window-3 moving average. Components under 5 voxels dropped.
// expected_count < 0 disables the count check.
PolylineExtraction extract_polylines(const ScalarVolume& score, double threshold,
                                     int expected_count = -1, double point_radius = 1.0);

// Method A: back-projected evidence from the two binarized maps, thresholded
// at 0.5 of max, polylines extracted. No prior information. Throws
// "no intersection" when the evidence is empty.
FeatureVolume map_3d_no_prior(const FeatureMap2& feat0, const FeatureMap2& feat1,
                              const StereoGeometry& geom, int nx, int ny, int nz);

}  // namespace sxt
