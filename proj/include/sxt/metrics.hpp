#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sxt/grid.hpp"

namespace sxt {

struct RocPoint {
    double threshold;
    double tpr;
    double fpr;
};

struct RocCurve {
    std::vector<RocPoint> points;  // ordered from strictest threshold to loosest
    double auc = 0.0;
};

// Sweep all distinct score thresholds; AUC by trapezoidal rule. Truth must
// contain at least one positive and one negative.
RocCurve roc_curve(std::span<const double> scores, std::span<const uint8_t> truth);

// Convenience: grids of equal shape, truth positive where > 0.5.
RocCurve roc_curve(const ScalarImage& scores, const ScalarImage& truth);
RocCurve roc_curve(const ScalarVolume& scores, const ScalarVolume& truth);

// Symmetric mean-of-means Chamfer distance between nonempty point sets,
// exact nearest neighbors via a uniform grid index.
double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b);

// Voxel centers with value above the threshold.
std::vector<Vec3> points_above(const ScalarVolume& vol, double threshold);
std::vector<Vec3> points_above(const ScalarImage& img, double threshold);

// Symmetric mean nearest-pixel distance between two binary masks (2D Chamfer).
double line_position_error_2d(const ScalarImage& detected_mask, const ScalarImage& truth_mask);

}  // namespace sxt
