#include "sxt/rasterize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sxt {

double point_segment_distance(Vec3 p, Vec3 a, Vec3 b) {
    const Vec3 ab = b - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) return norm(p - a);
    const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

ScalarVolume rasterize_polyline(const Polyline3& line, int nx, int ny, int nz) {
    if (line.points.empty()) throw std::invalid_argument("rasterize_polyline: empty point list");
    if (line.points.size() < 2) throw std::invalid_argument("rasterize_polyline: need at least 2 points");
    if (line.radius < 0.0) throw std::invalid_argument("rasterize_polyline: negative radius");
    for (const Vec3& p : line.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw std::invalid_argument("rasterize_polyline: non-finite point");
        if (p.x < 0.0 || p.x > nx - 1.0 || p.y < 0.0 || p.y > ny - 1.0 || p.z < 0.0 ||
            p.z > nz - 1.0)
            throw std::invalid_argument("rasterize_polyline: point outside volume bounds");
    }

    ScalarVolume out(nx, ny, nz, 0.0);
    const double r = line.radius;
    for (size_t s = 0; s + 1 < line.points.size(); ++s) {
        const Vec3 a = line.points[s];
        const Vec3 b = line.points[s + 1];
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - r)));
        const int x1 = std::min(nx - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + r)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - r)));
        const int y1 = std::min(ny - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + r)));
        const int z0 = std::max(0, static_cast<int>(std::floor(std::min(a.z, b.z) - r)));
        const int z1 = std::min(nz - 1, static_cast<int>(std::ceil(std::max(a.z, b.z) + r)));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const Vec3 c{static_cast<double>(x), static_cast<double>(y),
                                 static_cast<double>(z)};
                    if (point_segment_distance(c, a, b) <= r) out.at(x, y, z) = 1.0;
                }
    }
    return out;
}

ScalarVolume rasterize_polylines(const std::vector<Polyline3>& lines, int nx, int ny, int nz) {
    ScalarVolume out(nx, ny, nz, 0.0);
    for (const Polyline3& line : lines) {
        const ScalarVolume one = rasterize_polyline(line, nx, ny, nz);
        for (size_t i = 0; i < out.size(); ++i) out.data[i] = std::max(out.data[i], one.data[i]);
    }
    return out;
}

}  // namespace sxt
