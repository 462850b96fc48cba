#include "sxt/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sxt/interp.hpp"

namespace sxt {

void StereoGeometry::validate() const {
    if (!(source_object_distance > 0.0) || !(object_detector_distance > 0.0))
        throw std::invalid_argument("StereoGeometry: distances must be > 0");
    if (detector_width < 2 || detector_height < 2)
        throw std::invalid_argument("StereoGeometry: detector must be at least 2x2");
    if (!(detector_pitch > 0.0))
        throw std::invalid_argument("StereoGeometry: detector_pitch must be > 0");
    for (double a : view_angles_deg)
        if (!std::isfinite(a)) throw std::invalid_argument("StereoGeometry: bad view angle");
}

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ViewFrame {
    Vec3 source;        // voxel coordinates
    Vec3 det_center;    // voxel coordinates of the detector center
    Vec3 det_u;         // in-plane detector axis, unit, voxel coords
    Vec3 det_v;         // detector column axis, unit (volume z)
    Vec3 axis_in;       // unit vector from source toward isocenter
    Vec3 vol_center;
};

// Detector pixel (i, j) centers the image; the source-detector pair is the
// (0, -SOD) / (0, +ODD) arrangement rotated about the volume's z axis.
ViewFrame make_view_frame(const StereoGeometry& geom, int view, int nx, int ny, int nz) {
    if (view < 0 || view > 1) throw std::invalid_argument("view index must be 0 or 1");
    const double theta = geom.view_angles_deg[static_cast<size_t>(view)] * kPi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const auto rot = [&](double x, double y, double z) { return Vec3{c * x - s * y, s * x + c * y, z}; };

    ViewFrame fr;
    fr.vol_center = {(nx - 1) / 2.0, (ny - 1) / 2.0, (nz - 1) / 2.0};
    fr.source = fr.vol_center + rot(0.0, -geom.source_object_distance, 0.0);
    fr.det_center = fr.vol_center + rot(0.0, geom.object_detector_distance, 0.0);
    fr.det_u = rot(1.0, 0.0, 0.0);
    fr.det_v = Vec3{0.0, 0.0, 1.0};
    fr.axis_in = rot(0.0, 1.0, 0.0);
    return fr;
}

Vec3 detector_pixel_world(const ViewFrame& fr, const StereoGeometry& geom, double i, double j) {
    const double u = (i - (geom.detector_width - 1) / 2.0) * geom.detector_pitch;
    const double v = (j - (geom.detector_height - 1) / 2.0) * geom.detector_pitch;
    return fr.det_center + u * fr.det_u + v * fr.det_v;
}

void check_source_outside(const ViewFrame& fr, int nx, int ny, int nz) {
    const Vec3 s = fr.source;
    if (s.x >= -0.5 && s.x <= nx - 0.5 && s.y >= -0.5 && s.y <= ny - 0.5 && s.z >= -0.5 &&
        s.z <= nz - 0.5)
        throw std::invalid_argument("degenerate geometry: source lies inside the volume");
}

// Clip ray origin + t*dir against the voxel bounding box [-0.5, n-0.5]^3.
bool clip_ray(Vec3 origin, Vec3 dir, int nx, int ny, int nz, double& tmin, double& tmax) {
    tmin = 0.0;
    tmax = std::numeric_limits<double>::infinity();
    const double lo[3] = {-0.5, -0.5, -0.5};
    const double hi[3] = {nx - 0.5, ny - 0.5, nz - 0.5};
    const double o[3] = {origin.x, origin.y, origin.z};
    const double d[3] = {dir.x, dir.y, dir.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(d[a]) < 1e-12) {
            if (o[a] < lo[a] || o[a] > hi[a]) return false;
            continue;
        }
        double t0 = (lo[a] - o[a]) / d[a];
        double t1 = (hi[a] - o[a]) / d[a];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
    }
    return tmin < tmax;
}

// Bilinear detector sample that returns 0 outside the detector (rays that
// miss the detector contribute nothing, unlike clamp-to-edge grid sampling).
double detector_sample(const ScalarImage& img, double px, double py) {
    if (px < 0.0 || px > img.width - 1.0 || py < 0.0 || py > img.height - 1.0) return 0.0;
    const int x0 = static_cast<int>(px);
    const int y0 = static_cast<int>(py);
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = px - x0;
    const double fy = py - y0;
    return (1.0 - fy) * ((1.0 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) +
           fy * ((1.0 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

// Transpose of sample_trilinear's clamped gather: add w * value at the same
// eight nodes with the same weights.
void splat_trilinear(ScalarVolume& vol, double px, double py, double pz, double value) {
    const double cx = std::clamp(px, 0.0, vol.nx - 1.0);
    const double cy = std::clamp(py, 0.0, vol.ny - 1.0);
    const double cz = std::clamp(pz, 0.0, vol.nz - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int z0 = static_cast<int>(cz);
    const int x1 = std::min(x0 + 1, vol.nx - 1);
    const int y1 = std::min(y0 + 1, vol.ny - 1);
    const int z1 = std::min(z0 + 1, vol.nz - 1);
    const double fx = cx - x0, fy = cy - y0, fz = cz - z0;
    vol.at(x0, y0, z0) += (1 - fx) * (1 - fy) * (1 - fz) * value;
    vol.at(x1, y0, z0) += fx * (1 - fy) * (1 - fz) * value;
    vol.at(x0, y1, z0) += (1 - fx) * fy * (1 - fz) * value;
    vol.at(x1, y1, z0) += fx * fy * (1 - fz) * value;
    vol.at(x0, y0, z1) += (1 - fx) * (1 - fy) * fz * value;
    vol.at(x1, y0, z1) += fx * (1 - fy) * fz * value;
    vol.at(x0, y1, z1) += (1 - fx) * fy * fz * value;
    vol.at(x1, y1, z1) += fx * fy * fz * value;
}

ScalarImage filter_rows(const ScalarImage& img, const StereoGeometry& geom) {
    const int w = img.width, h = img.height;
    const double tau = geom.detector_pitch;
    const double sdd = geom.source_object_distance + geom.object_detector_distance;

    // cosine pre-weight, then spatial-domain ramp convolution per row
    ScalarImage weighted(w, h);
    weighted.pixel_pitch = img.pixel_pitch;
    for (int j = 0; j < h; ++j) {
        const double v = (j - (h - 1) / 2.0) * tau;
        for (int i = 0; i < w; ++i) {
            const double u = (i - (w - 1) / 2.0) * tau;
            weighted.at(i, j) = img.at(i, j) * sdd / std::sqrt(sdd * sdd + u * u + v * v);
        }
    }
    const std::vector<double> kernel = ramp_kernel(w - 1, tau);
    const int half = w - 1;
    ScalarImage out(w, h);
    out.pixel_pitch = img.pixel_pitch;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < h; ++j)
        for (int i = 0; i < w; ++i) {
            double acc = 0.0;
            for (int k = 0; k < w; ++k) acc += kernel[half + i - k] * weighted.at(k, j);
            out.at(i, j) = acc * tau;
        }
    return out;
}

}  // namespace

std::vector<double> ramp_kernel(int half_width, double tau) {
    if (half_width < 0) throw std::invalid_argument("ramp_kernel: half_width must be >= 0");
    if (!(tau > 0.0)) throw std::invalid_argument("ramp_kernel: tau must be > 0");
    std::vector<double> h(2 * half_width + 1, 0.0);
    h[half_width] = 1.0 / (4.0 * tau * tau);
    for (int n = 1; n <= half_width; n += 2) {
        const double v = -1.0 / (kPi * kPi * n * n * tau * tau);
        h[half_width + n] = v;
        h[half_width - n] = v;
    }
    return h;
}

ScalarImage forward_project(const ScalarVolume& vol, const StereoGeometry& geom, int view,
                            double step) {
    geom.validate();
    if (vol.data.empty()) throw std::invalid_argument("forward_project: empty volume");
    if (!(step > 0.0)) throw std::invalid_argument("forward_project: step must be > 0");

    const ViewFrame fr = make_view_frame(geom, view, vol.nx, vol.ny, vol.nz);
    check_source_outside(fr, vol.nx, vol.ny, vol.nz);

    ScalarImage img(geom.detector_width, geom.detector_height);
    img.pixel_pitch = geom.detector_pitch;
#pragma omp parallel for schedule(static)
    for (int j = 0; j < geom.detector_height; ++j)
        for (int i = 0; i < geom.detector_width; ++i) {
            const Vec3 pixel = detector_pixel_world(fr, geom, i, j);
            const Vec3 dir = normalized(pixel - fr.source);
            double tmin, tmax;
            if (!clip_ray(fr.source, dir, vol.nx, vol.ny, vol.nz, tmin, tmax)) continue;
            const int n_steps = std::max(1, static_cast<int>(std::ceil((tmax - tmin) / step)));
            const double dt = (tmax - tmin) / n_steps;
            double acc = 0.0;
            for (int k = 0; k < n_steps; ++k) {
                const double t = tmin + (k + 0.5) * dt;
                const Vec3 p = fr.source + t * dir;
                acc += sample_trilinear(vol, p.x, p.y, p.z);
            }
            img.at(i, j) = acc * dt;
        }
    return img;
}

namespace {

// Voxel-driven back-projection: each voxel takes the bilinear detector sample
// at its cone-beam projection, optionally scaled by the FDK inverse-square
// distance weight. Without the weight the response is flat along each ray.
ScalarVolume voxel_driven_bp(const ScalarImage& img, const StereoGeometry& geom, int view,
                             const ViewFrame& fr, int nx, int ny, int nz, bool fdk_weight) {
    const double theta = geom.view_angles_deg[static_cast<size_t>(view)] * kPi / 180.0;
    const double c = std::cos(theta), s = std::sin(theta);
    const double sod = geom.source_object_distance;
    const double sdd = sod + geom.object_detector_distance;
    ScalarVolume vol(nx, ny, nz);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const double wx = x - fr.vol_center.x;
                const double wy = y - fr.vol_center.y;
                const double wz = z - fr.vol_center.z;
                // rotate world into the view frame (inverse rotation)
                const double vx = c * wx + s * wy;
                const double vy = -s * wx + c * wy;
                const double dist = sod + vy;
                if (dist < 1e-6) continue;
                const double mag = sdd / dist;
                const double pi = vx * mag / geom.detector_pitch + (geom.detector_width - 1) / 2.0;
                const double pj = wz * mag / geom.detector_pitch + (geom.detector_height - 1) / 2.0;
                const double w2 = fdk_weight ? (sod / dist) * (sod / dist) : 1.0;
                vol.at(x, y, z) += w2 * detector_sample(img, pi, pj);
            }
    return vol;
}

}  // namespace

ScalarVolume back_project(const ScalarImage& img, const StereoGeometry& geom, int view,
                          int nx, int ny, int nz, bool filtered, bool weighted, double step) {
    geom.validate();
    if (img.width != geom.detector_width || img.height != geom.detector_height)
        throw std::invalid_argument("back_project: image does not match detector dims");
    if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("back_project: bad volume dims");

    const ViewFrame fr = make_view_frame(geom, view, nx, ny, nz);
    check_source_outside(fr, nx, ny, nz);
    ScalarImage filtered_storage;
    const ScalarImage* image = &img;
    if (filtered) {
        filtered_storage = filter_rows(img, geom);
        image = &filtered_storage;
    }

    if (weighted) return voxel_driven_bp(*image, geom, view, fr, nx, ny, nz, true);

    ScalarVolume vol(nx, ny, nz);

    // exact adjoint of forward_project: same rays, same sample points, splat
    // instead of gather; serial accumulation keeps the result deterministic
    if (!(step > 0.0)) throw std::invalid_argument("back_project: step must be > 0");
    for (int j = 0; j < geom.detector_height; ++j)
        for (int i = 0; i < geom.detector_width; ++i) {
            const double value = image->at(i, j);
            if (value == 0.0) continue;
            const Vec3 pixel = detector_pixel_world(fr, geom, i, j);
            const Vec3 dir = normalized(pixel - fr.source);
            double tmin, tmax;
            if (!clip_ray(fr.source, dir, nx, ny, nz, tmin, tmax)) continue;
            const int n_steps = std::max(1, static_cast<int>(std::ceil((tmax - tmin) / step)));
            const double dt = (tmax - tmin) / n_steps;
            for (int k = 0; k < n_steps; ++k) {
                const double t = tmin + (k + 0.5) * dt;
                const Vec3 p = fr.source + t * dir;
                splat_trilinear(vol, p.x, p.y, p.z, value * dt);
            }
        }
    return vol;
}

BpEvidence make_bp_evidence(const ScalarImage& feat0, const ScalarImage& feat1,
                            const StereoGeometry& geom, int nx, int ny, int nz) {
    BpEvidence ev;
    ev.volume = ScalarVolume(nx, ny, nz);
    geom.validate();
    if (feat0.width != geom.detector_width || feat0.height != geom.detector_height ||
        feat1.width != geom.detector_width || feat1.height != geom.detector_height)
        throw std::invalid_argument("make_bp_evidence: feature map does not match detector dims");

    // Evidence uses the unweighted voxel-driven sampler: the FDK distance
    // weight is a reconstruction factor and would tilt the product toward the
    // source, biasing the extracted feature positions along the depth axis.
    const ViewFrame fr0 = make_view_frame(geom, 0, nx, ny, nz);
    const ViewFrame fr1 = make_view_frame(geom, 1, nx, ny, nz);
    check_source_outside(fr0, nx, ny, nz);
    ScalarVolume bp0 = voxel_driven_bp(feat0, geom, 0, fr0, nx, ny, nz, false);
    ScalarVolume bp1 = voxel_driven_bp(feat1, geom, 1, fr1, nx, ny, nz, false);
    const double m0 = bp0.max_value();
    const double m1 = bp1.max_value();
    if (m0 <= 0.0 || m1 <= 0.0) {
        ev.has_evidence = false;
        return ev;
    }
    for (size_t i = 0; i < ev.volume.data.size(); ++i)
        ev.volume.data[i] = (bp0.data[i] / m0) * (bp1.data[i] / m1);
    const double m = ev.volume.max_value();
    if (m <= 0.0) {
        ev.has_evidence = false;
        std::fill(ev.volume.data.begin(), ev.volume.data.end(), 0.0);
        return ev;
    }
    for (double& v : ev.volume.data) v /= m;
    ev.has_evidence = true;
    return ev;
}

}  // namespace sxt
