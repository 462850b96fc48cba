#pragma once

#include "sxt/grid.hpp"

namespace sxt {

// Bilinear interpolation of the 4 surrounding pixel centers; coordinates
// outside the grid clamp to the border.
double sample_bilinear(const ScalarImage& img, double px, double py);

// Value plus derivative of the interpolant w.r.t. the continuous coordinate.
// The derivative is zero in a clamped direction.
struct Sample2 {
    double value;
    double ddx;
    double ddy;
};
Sample2 sample_bilinear_grad(const ScalarImage& img, double px, double py);

// 8-neighbor trilinear interpolation, clamp-to-edge.
double sample_trilinear(const ScalarVolume& vol, double px, double py, double pz);

struct Sample3 {
    double value;
    double ddx;
    double ddy;
    double ddz;
};
Sample3 sample_trilinear_grad(const ScalarVolume& vol, double px, double py, double pz);

// Pull-back warp: output(x) = sample(m, x + phi(x)) for every node x of the fixed grid.
ScalarImage warp_image(const ScalarImage& m, const DisplacementField2& phi);
ScalarVolume warp_volume(const ScalarVolume& v, const DisplacementField3& phi);

}  // namespace sxt
