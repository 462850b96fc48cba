#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace sxt {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 v) { return {s * v.x, s * v.y, s * v.z}; }
inline Vec3 operator*(Vec3 v, double s) { return s * v; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(Vec3 v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(Vec3 v) {
    const double n = norm(v);
    if (n == 0.0) throw std::invalid_argument("cannot normalize zero vector");
    return (1.0 / n) * v;
}

// Dense 2D grid, row-major. Pixel centers sit at integer coordinates starting at 0.
struct ScalarImage {
    int width = 0;
    int height = 0;
    double pixel_pitch = 1.0;
    std::vector<double> data;

    ScalarImage() = default;
    ScalarImage(int w, int h, double fill = 0.0) : width(w), height(h) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("image dims must be positive");
        data.assign(static_cast<size_t>(w) * h, fill);
    }

    size_t size() const { return data.size(); }
    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    double& at(int x, int y) { return data[index(x, y)]; }
    double at(int x, int y) const { return data[index(x, y)]; }

    bool same_shape(const ScalarImage& o) const { return width == o.width && height == o.height; }
    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
    double max_value() const {
        double m = 0.0;
        for (double v : data) m = std::max(m, v);
        return m;
    }
};

// Dense 3D grid, x-fastest. Voxel centers at integer coordinates starting at 0.
struct ScalarVolume {
    int nx = 0;
    int ny = 0;
    int nz = 0;
    double voxel_pitch = 1.0;
    std::vector<double> data;

    ScalarVolume() = default;
    ScalarVolume(int nx_, int ny_, int nz_, double fill = 0.0) : nx(nx_), ny(ny_), nz(nz_) {
        if (nx_ <= 0 || ny_ <= 0 || nz_ <= 0) throw std::invalid_argument("volume dims must be positive");
        data.assign(static_cast<size_t>(nx_) * ny_ * nz_, fill);
    }

    size_t size() const { return data.size(); }
    size_t index(int x, int y, int z) const {
        return (static_cast<size_t>(z) * ny + y) * nx + x;
    }
    double& at(int x, int y, int z) { return data[index(x, y, z)]; }
    double at(int x, int y, int z) const { return data[index(x, y, z)]; }

    bool same_shape(const ScalarVolume& o) const { return nx == o.nx && ny == o.ny && nz == o.nz; }
    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
    double max_value() const {
        double m = 0.0;
        for (double v : data) m = std::max(m, v);
        return m;
    }
};

// Per-node displacement vectors (pixels), defined on the fixed-image grid.
struct DisplacementField2 {
    int width = 0;
    int height = 0;
    std::vector<double> dx;
    std::vector<double> dy;

    DisplacementField2() = default;
    DisplacementField2(int w, int h) : width(w), height(h) {
        if (w <= 0 || h <= 0) throw std::invalid_argument("field dims must be positive");
        const size_t n = static_cast<size_t>(w) * h;
        dx.assign(n, 0.0);
        dy.assign(n, 0.0);
    }

    size_t size() const { return dx.size(); }
    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// Per-node displacement vectors (voxels), defined on the target-volume grid.
struct DisplacementField3 {
    int nx = 0;
    int ny = 0;
    int nz = 0;
    std::vector<double> dx;
    std::vector<double> dy;
    std::vector<double> dz;

    DisplacementField3() = default;
    DisplacementField3(int nx_, int ny_, int nz_) : nx(nx_), ny(ny_), nz(nz_) {
        if (nx_ <= 0 || ny_ <= 0 || nz_ <= 0) throw std::invalid_argument("field dims must be positive");
        const size_t n = static_cast<size_t>(nx_) * ny_ * nz_;
        dx.assign(n, 0.0);
        dy.assign(n, 0.0);
        dz.assign(n, 0.0);
    }

    size_t size() const { return dx.size(); }
    size_t index(int x, int y, int z) const {
        return (static_cast<size_t>(z) * ny + y) * nx + x;
    }
};

// Ordered 3D point sequence representing one line fiducial; coordinates in voxels.
struct Polyline3 {
    std::vector<Vec3> points;
    double radius = 1.0;

    void validate() const {
        if (points.size() < 2) throw std::invalid_argument("polyline needs at least 2 points");
        for (size_t i = 1; i < points.size(); ++i) {
            const Vec3 d = points[i] - points[i - 1];
            if (dot(d, d) == 0.0) throw std::invalid_argument("polyline has duplicate consecutive points");
        }
    }

    double length() const {
        double len = 0.0;
        for (size_t i = 1; i < points.size(); ++i) len += norm(points[i] - points[i - 1]);
        return len;
    }
};

}  // namespace sxt
