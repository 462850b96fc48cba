#include "sxt/interp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sxt {

namespace {

inline double clampd(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

inline void check_finite2(double px, double py) {
    if (!std::isfinite(px) || !std::isfinite(py))
        throw std::invalid_argument("sample point must be finite");
}

inline void check_finite3(double px, double py, double pz) {
    if (!std::isfinite(px) || !std::isfinite(py) || !std::isfinite(pz))
        throw std::invalid_argument("sample point must be finite");
}

}  // namespace

double sample_bilinear(const ScalarImage& img, double px, double py) {
    check_finite2(px, py);
    const double cx = clampd(px, 0.0, img.width - 1.0);
    const double cy = clampd(py, 0.0, img.height - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const double v00 = img.at(x0, y0), v10 = img.at(x1, y0);
    const double v01 = img.at(x0, y1), v11 = img.at(x1, y1);
    return (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
}

Sample2 sample_bilinear_grad(const ScalarImage& img, double px, double py) {
    check_finite2(px, py);
    const bool inx = px > 0.0 && px < img.width - 1.0;
    const bool iny = py > 0.0 && py < img.height - 1.0;
    const double cx = clampd(px, 0.0, img.width - 1.0);
    const double cy = clampd(py, 0.0, img.height - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = cx - x0;
    const double fy = cy - y0;
    const double v00 = img.at(x0, y0), v10 = img.at(x1, y0);
    const double v01 = img.at(x0, y1), v11 = img.at(x1, y1);
    Sample2 s;
    s.value = (1.0 - fy) * ((1.0 - fx) * v00 + fx * v10) + fy * ((1.0 - fx) * v01 + fx * v11);
    s.ddx = inx ? (1.0 - fy) * (v10 - v00) + fy * (v11 - v01) : 0.0;
    s.ddy = iny ? (1.0 - fx) * (v01 - v00) + fx * (v11 - v10) : 0.0;
    return s;
}

double sample_trilinear(const ScalarVolume& vol, double px, double py, double pz) {
    check_finite3(px, py, pz);
    const double cx = clampd(px, 0.0, vol.nx - 1.0);
    const double cy = clampd(py, 0.0, vol.ny - 1.0);
    const double cz = clampd(pz, 0.0, vol.nz - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int z0 = static_cast<int>(cz);
    const int x1 = std::min(x0 + 1, vol.nx - 1);
    const int y1 = std::min(y0 + 1, vol.ny - 1);
    const int z1 = std::min(z0 + 1, vol.nz - 1);
    const double fx = cx - x0, fy = cy - y0, fz = cz - z0;
    const double v000 = vol.at(x0, y0, z0), v100 = vol.at(x1, y0, z0);
    const double v010 = vol.at(x0, y1, z0), v110 = vol.at(x1, y1, z0);
    const double v001 = vol.at(x0, y0, z1), v101 = vol.at(x1, y0, z1);
    const double v011 = vol.at(x0, y1, z1), v111 = vol.at(x1, y1, z1);
    const double c00 = (1.0 - fx) * v000 + fx * v100;
    const double c10 = (1.0 - fx) * v010 + fx * v110;
    const double c01 = (1.0 - fx) * v001 + fx * v101;
    const double c11 = (1.0 - fx) * v011 + fx * v111;
    const double c0 = (1.0 - fy) * c00 + fy * c10;
    const double c1 = (1.0 - fy) * c01 + fy * c11;
    return (1.0 - fz) * c0 + fz * c1;
}

Sample3 sample_trilinear_grad(const ScalarVolume& vol, double px, double py, double pz) {
    check_finite3(px, py, pz);
    const bool inx = px > 0.0 && px < vol.nx - 1.0;
    const bool iny = py > 0.0 && py < vol.ny - 1.0;
    const bool inz = pz > 0.0 && pz < vol.nz - 1.0;
    const double cx = clampd(px, 0.0, vol.nx - 1.0);
    const double cy = clampd(py, 0.0, vol.ny - 1.0);
    const double cz = clampd(pz, 0.0, vol.nz - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int z0 = static_cast<int>(cz);
    const int x1 = std::min(x0 + 1, vol.nx - 1);
    const int y1 = std::min(y0 + 1, vol.ny - 1);
    const int z1 = std::min(z0 + 1, vol.nz - 1);
    const double fx = cx - x0, fy = cy - y0, fz = cz - z0;
    const double v000 = vol.at(x0, y0, z0), v100 = vol.at(x1, y0, z0);
    const double v010 = vol.at(x0, y1, z0), v110 = vol.at(x1, y1, z0);
    const double v001 = vol.at(x0, y0, z1), v101 = vol.at(x1, y0, z1);
    const double v011 = vol.at(x0, y1, z1), v111 = vol.at(x1, y1, z1);

    const double c00 = (1.0 - fx) * v000 + fx * v100;
    const double c10 = (1.0 - fx) * v010 + fx * v110;
    const double c01 = (1.0 - fx) * v001 + fx * v101;
    const double c11 = (1.0 - fx) * v011 + fx * v111;
    const double c0 = (1.0 - fy) * c00 + fy * c10;
    const double c1 = (1.0 - fy) * c01 + fy * c11;

    Sample3 s;
    s.value = (1.0 - fz) * c0 + fz * c1;

    const double dx00 = v100 - v000, dx10 = v110 - v010;
    const double dx01 = v101 - v001, dx11 = v111 - v011;
    s.ddx = inx ? (1.0 - fz) * ((1.0 - fy) * dx00 + fy * dx10) + fz * ((1.0 - fy) * dx01 + fy * dx11)
                : 0.0;
    s.ddy = iny ? (1.0 - fz) * (c10 - c00) + fz * (c11 - c01) : 0.0;
    s.ddz = inz ? c1 - c0 : 0.0;
    return s;
}

ScalarImage warp_image(const ScalarImage& m, const DisplacementField2& phi) {
    if (phi.width != m.width || phi.height != m.height)
        throw std::invalid_argument("warp_image: field dimensions must match the image");
    ScalarImage out(m.width, m.height);
    out.pixel_pitch = m.pixel_pitch;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            const size_t i = phi.index(x, y);
            out.data[i] = sample_bilinear(m, x + phi.dx[i], y + phi.dy[i]);
        }
    }
    return out;
}

ScalarVolume warp_volume(const ScalarVolume& v, const DisplacementField3& phi) {
    if (phi.nx != v.nx || phi.ny != v.ny || phi.nz != v.nz)
        throw std::invalid_argument("warp_volume: field dimensions must match the volume");
    ScalarVolume out(v.nx, v.ny, v.nz);
    out.voxel_pitch = v.voxel_pitch;
#pragma omp parallel for schedule(static)
    for (int z = 0; z < v.nz; ++z) {
        for (int y = 0; y < v.ny; ++y) {
            for (int x = 0; x < v.nx; ++x) {
                const size_t i = phi.index(x, y, z);
                out.data[i] = sample_trilinear(v, x + phi.dx[i], y + phi.dy[i], z + phi.dz[i]);
            }
        }
    }
    return out;
}

}  // namespace sxt
