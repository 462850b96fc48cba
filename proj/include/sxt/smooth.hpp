#pragma once

#include <vector>

#include "sxt/grid.hpp"

namespace sxt {

// Normalized Gaussian taps, truncated at radius ceil(3*sigma). Center tap at index radius.
std::vector<double> gaussian_kernel(double sigma);

// Separable Gaussian convolution per axis, clamp-to-edge borders. sigma = 0 is the identity.
ScalarImage gaussian_smooth(const ScalarImage& img, double sigma);
ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma);
DisplacementField2 gaussian_smooth(const DisplacementField2& field, double sigma);
DisplacementField3 gaussian_smooth(const DisplacementField3& field, double sigma);

// Same convolution with zero-padded borders. Unlike the clamped variant this
// operator is self-adjoint, which analytic gradients through it rely on;
// windows near the border simply see less mass.
ScalarImage gaussian_smooth_zero_pad(const ScalarImage& img, double sigma);
ScalarVolume gaussian_smooth_zero_pad(const ScalarVolume& vol, double sigma);

}  // namespace sxt
