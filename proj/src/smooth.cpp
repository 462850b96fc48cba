#include "sxt/smooth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sxt {

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    if (sigma == 0.0) return {1.0};
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (i / sigma) * (i / sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace {

// 1D convolution along a strided axis; borders clamp to the edge sample or,
// with zero_pad, contribute nothing.
void convolve_axis(const std::vector<double>& src, std::vector<double>& dst, int n_along,
                   size_t stride, size_t n_lines, size_t line_stride,
                   const std::vector<double>& kernel, bool zero_pad) {
    const int radius = static_cast<int>(kernel.size() / 2);
#pragma omp parallel for schedule(static)
    for (long long line = 0; line < static_cast<long long>(n_lines); ++line) {
        const size_t base = static_cast<size_t>(line) * line_stride;
        for (int i = 0; i < n_along; ++i) {
            double acc = 0.0;
            for (int t = -radius; t <= radius; ++t) {
                int j = i + t;
                if (j < 0 || j >= n_along) {
                    if (zero_pad) continue;
                    j = std::clamp(j, 0, n_along - 1);
                }
                acc += kernel[t + radius] * src[base + static_cast<size_t>(j) * stride];
            }
            dst[base + static_cast<size_t>(i) * stride] = acc;
        }
    }
}

// The image/volume axes are separable but strides are not uniform per line;
// walk explicit index math per axis instead.
void smooth_buffer_2d(std::vector<double>& buf, int w, int h, const std::vector<double>& kernel,
                      bool zero_pad) {
    std::vector<double> tmp(buf.size());
    // along x: one line per row
    convolve_axis(buf, tmp, w, 1, static_cast<size_t>(h), static_cast<size_t>(w), kernel, zero_pad);
    // along y: one line per column
    convolve_axis(tmp, buf, h, static_cast<size_t>(w), static_cast<size_t>(w), 1, kernel, zero_pad);
}

void smooth_buffer_3d(std::vector<double>& buf, int nx, int ny, int nz,
                      const std::vector<double>& kernel, bool zero_pad) {
    std::vector<double> tmp(buf.size());
    const size_t sx = 1;
    const size_t sy = static_cast<size_t>(nx);
    const size_t sz = static_cast<size_t>(nx) * ny;
    // x axis: lines are (y, z) pairs, contiguous along x
    convolve_axis(buf, tmp, nx, sx, static_cast<size_t>(ny) * nz, sy, kernel, zero_pad);
    // y axis: iterate lines as z * nx + x; base = z*sz + x
    {
        const int radius = static_cast<int>(kernel.size() / 2);
#pragma omp parallel for schedule(static)
        for (long long zi = 0; zi < static_cast<long long>(nz); ++zi) {
            for (int x = 0; x < nx; ++x) {
                const size_t base = static_cast<size_t>(zi) * sz + x;
                for (int y = 0; y < ny; ++y) {
                    double acc = 0.0;
                    for (int t = -radius; t <= radius; ++t) {
                        int j = y + t;
                        if (j < 0 || j >= ny) {
                            if (zero_pad) continue;
                            j = std::clamp(j, 0, ny - 1);
                        }
                        acc += kernel[t + radius] * tmp[base + static_cast<size_t>(j) * sy];
                    }
                    buf[base + static_cast<size_t>(y) * sy] = acc;
                }
            }
        }
    }
    // z axis: lines are (x, y) pairs
    tmp = buf;
    convolve_axis(tmp, buf, nz, sz, static_cast<size_t>(nx) * ny, 1, kernel, zero_pad);
}

}  // namespace

ScalarImage gaussian_smooth(const ScalarImage& img, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    ScalarImage out = img;
    if (sigma == 0.0 || img.size() == 0) return out;
    smooth_buffer_2d(out.data, img.width, img.height, gaussian_kernel(sigma), false);
    return out;
}

ScalarVolume gaussian_smooth(const ScalarVolume& vol, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    ScalarVolume out = vol;
    if (sigma == 0.0 || vol.size() == 0) return out;
    smooth_buffer_3d(out.data, vol.nx, vol.ny, vol.nz, gaussian_kernel(sigma), false);
    return out;
}

ScalarImage gaussian_smooth_zero_pad(const ScalarImage& img, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    ScalarImage out = img;
    if (sigma == 0.0 || img.size() == 0) return out;
    smooth_buffer_2d(out.data, img.width, img.height, gaussian_kernel(sigma), true);
    return out;
}

ScalarVolume gaussian_smooth_zero_pad(const ScalarVolume& vol, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    ScalarVolume out = vol;
    if (sigma == 0.0 || vol.size() == 0) return out;
    smooth_buffer_3d(out.data, vol.nx, vol.ny, vol.nz, gaussian_kernel(sigma), true);
    return out;
}

DisplacementField2 gaussian_smooth(const DisplacementField2& field, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    DisplacementField2 out = field;
    if (sigma == 0.0 || field.size() == 0) return out;
    const auto kernel = gaussian_kernel(sigma);
    smooth_buffer_2d(out.dx, field.width, field.height, kernel, false);
    smooth_buffer_2d(out.dy, field.width, field.height, kernel, false);
    return out;
}

DisplacementField3 gaussian_smooth(const DisplacementField3& field, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("sigma must be non-negative");
    DisplacementField3 out = field;
    if (sigma == 0.0 || field.size() == 0) return out;
    const auto kernel = gaussian_kernel(sigma);
    smooth_buffer_3d(out.dx, field.nx, field.ny, field.nz, kernel, false);
    smooth_buffer_3d(out.dy, field.nx, field.ny, field.nz, kernel, false);
    smooth_buffer_3d(out.dz, field.nx, field.ny, field.nz, kernel, false);
    return out;
}

}  // namespace sxt
