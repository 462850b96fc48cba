#include "sxt/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sxt/interp.hpp"
#include "sxt/rasterize.hpp"
#include "sxt/rng.hpp"
#include "sxt/smooth.hpp"

namespace sxt {

void PhantomSpec::validate() const {
    if (nx < 16 || ny < 16 || nz < 16)
        throw std::invalid_argument("PhantomSpec: dims must be >= 16");
    if (n_lines < 0 || n_ellipsoids < 0)
        throw std::invalid_argument("PhantomSpec: counts must be >= 0");
    if (!(line_radius > 0.0))
        throw std::invalid_argument("PhantomSpec: line_radius must be > 0");
    if (!(ellipsoid_intensity_min > 0.0) || ellipsoid_intensity_min > ellipsoid_intensity_max)
        throw std::invalid_argument("PhantomSpec: bad ellipsoid intensity range");
    if (ellipsoid_intensity_max >= line_intensity)
        throw std::invalid_argument("PhantomSpec: lines must be brighter than ellipsoids");
    if (!(line_region_frac > 0.0) || line_region_frac > 0.45 ||
        !(ellipsoid_center_frac > 0.0) || ellipsoid_center_frac > 0.45)
        throw std::invalid_argument("PhantomSpec: region fractions must lie in (0, 0.45]");
    if (min_projected_separation < 0.0)
        throw std::invalid_argument("PhantomSpec: min_projected_separation must be >= 0");
}

void DeformationSpec::validate(int min_dim) const {
    if (!(sigma > 0.0)) throw std::invalid_argument("DeformationSpec: sigma must be > 0");
    const double bound = static_cast<double>(min_dim) / 4.0;
    if (line_magnitude_min < 0.0 || line_magnitude_min > line_magnitude_max ||
        line_magnitude_max > bound)
        throw std::invalid_argument("DeformationSpec: magnitude range must lie in [0, dims/4]");
    if (amplitude < 0.0 || amplitude > bound)
        throw std::invalid_argument("DeformationSpec: amplitude must lie in [0, dims/4]");
    if (n_frames < 2) throw std::invalid_argument("DeformationSpec: n_frames must be >= 2");
    if (min_projected_separation < 0.0)
        throw std::invalid_argument("DeformationSpec: min_projected_separation must be >= 0");
}

namespace {

// Uniform point in the ball of radius r around c.
Vec3 uniform_in_ball(StreamRng& rng, Vec3 c, double r) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        const Vec3 p{rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
        if (dot(p, p) <= r * r) return c + p;
    }
    throw std::runtime_error("uniform_in_ball: rejection sampling failed");
}

// Uniform random rotation from a normalized 4-normal quaternion.
std::array<Vec3, 3> random_rotation(StreamRng& rng) {
    double q[4];
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (double& v : q) {
            v = rng.normal();
            n2 += v * v;
        }
    } while (n2 < 1e-12);
    const double inv = 1.0 / std::sqrt(n2);
    const double w = q[0] * inv, x = q[1] * inv, y = q[2] * inv, z = q[3] * inv;
    return {Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
            Vec3{2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
            Vec3{2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

// Minimum distance between segments [a0,a1] and [b0,b1] (closest-point pairs
// with clamped parameters).
double segment_segment_distance(Vec3 a0, Vec3 a1, Vec3 b0, Vec3 b1) {
    const Vec3 d1 = a1 - a0;
    const Vec3 d2 = b1 - b0;
    const Vec3 r = a0 - b0;
    const double a = dot(d1, d1);
    const double e = dot(d2, d2);
    const double f = dot(d2, r);
    double s = 0.0, t = 0.0;
    if (a <= 1e-12 && e <= 1e-12) {
        // both degenerate
    } else if (a <= 1e-12) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = dot(d1, r);
        if (e <= 1e-12) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = dot(d1, d2);
            const double denom = a * e - b * b;
            if (denom > 1e-12) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    return norm((a0 + s * d1) - (b0 + t * d2));
}

// Parallel-beam approximation of the two stereo shadows (rotation about z by
// -30/+30 degrees), used only to keep marker shadows resolvable per view.
// Cone-beam magnification rescales shadows but barely changes separations.
constexpr double kViewAngles[2] = {-0.5235987755982988, 0.5235987755982988};

Vec3 shadow_point(const Vec3& p, const Vec3& center, int view) {
    const double c = std::cos(kViewAngles[view]);
    const double s = std::sin(kViewAngles[view]);
    return {c * (p.x - center.x) + s * (p.y - center.y), p.z - center.z, 0.0};
}

bool shadows_separated(const Vec3& a0, const Vec3& b0, const Vec3& a1, const Vec3& b1,
                       const Vec3& center, double min_sep) {
    for (int v = 0; v < 2; ++v)
        if (segment_segment_distance(shadow_point(a0, center, v), shadow_point(b0, center, v),
                                     shadow_point(a1, center, v),
                                     shadow_point(b1, center, v)) < min_sep)
            return false;
    return true;
}

// Same check for curved (densified) lines via sampled points; spacing <= 0.5
// bounds the underestimate of the true clearance.
bool shadows_separated_poly(const std::vector<Vec3>& p, const std::vector<Vec3>& q,
                            const Vec3& center, double min_sep) {
    const double lim = min_sep * min_sep;
    for (int v = 0; v < 2; ++v) {
        std::vector<Vec3> sp(p.size()), sq(q.size());
        for (size_t i = 0; i < p.size(); ++i) sp[i] = shadow_point(p[i], center, v);
        for (size_t j = 0; j < q.size(); ++j) sq[j] = shadow_point(q[j], center, v);
        for (const Vec3& a : sp)
            for (const Vec3& b : sq) {
                const double dx = a.x - b.x, dy = a.y - b.y;
                if (dx * dx + dy * dy < lim) return false;
            }
    }
    return true;
}

void add_ellipsoid(ScalarVolume& vol, Vec3 center, Vec3 semi_axes,
                   const std::array<Vec3, 3>& rot, double intensity) {
    const double reach = std::max({semi_axes.x, semi_axes.y, semi_axes.z});
    const int x0 = std::max(0, static_cast<int>(std::floor(center.x - reach)));
    const int x1 = std::min(vol.nx - 1, static_cast<int>(std::ceil(center.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(center.y - reach)));
    const int y1 = std::min(vol.ny - 1, static_cast<int>(std::ceil(center.y + reach)));
    const int z0 = std::max(0, static_cast<int>(std::floor(center.z - reach)));
    const int z1 = std::min(vol.nz - 1, static_cast<int>(std::ceil(center.z + reach)));
#pragma omp parallel for schedule(static)
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const Vec3 d = Vec3{static_cast<double>(x), static_cast<double>(y),
                                    static_cast<double>(z)} - center;
                // rows of `rot` are the rotated frame axes; project onto them
                const Vec3 local{dot(rot[0], d), dot(rot[1], d), dot(rot[2], d)};
                const double q = local.x * local.x / (semi_axes.x * semi_axes.x) +
                                 local.y * local.y / (semi_axes.y * semi_axes.y) +
                                 local.z * local.z / (semi_axes.z * semi_axes.z);
                if (q <= 1.0) vol.at(x, y, z) += intensity;
            }
}

ScalarVolume compose_volume(const ScalarVolume& background, const std::vector<Polyline3>& lines,
                            double line_intensity) {
    ScalarVolume vol = background;
    if (!lines.empty()) {
        const ScalarVolume raster =
            rasterize_polylines(lines, background.nx, background.ny, background.nz);
        for (size_t i = 0; i < vol.data.size(); ++i)
            vol.data[i] += line_intensity * raster.data[i];
    }
    return vol;
}

}  // namespace

Phantom gen_start_volume(const PhantomSpec& spec) {
    spec.validate();
    const int min_dim = std::min({spec.nx, spec.ny, spec.nz});
    const Vec3 center{(spec.nx - 1) / 2.0, (spec.ny - 1) / 2.0, (spec.nz - 1) / 2.0};

    Phantom ph;
    ph.line_intensity = spec.line_intensity;
    ph.background = ScalarVolume{};
    ph.background.nx = spec.nx;
    ph.background.ny = spec.ny;
    ph.background.nz = spec.nz;
    ph.background.data.assign(static_cast<size_t>(spec.nx) * spec.ny * spec.nz, 0.0);

    StreamRng erng(spec.seed, "phantom/ellipsoids");
    for (int e = 0; e < spec.n_ellipsoids; ++e) {
        const Vec3 c = uniform_in_ball(erng, center, spec.ellipsoid_center_frac * min_dim);
        const double lo = min_dim / 16.0, hi = min_dim / 4.0;
        const Vec3 axes{erng.uniform(lo, hi), erng.uniform(lo, hi), erng.uniform(lo, hi)};
        const std::array<Vec3, 3> rot = random_rotation(erng);
        const double intensity =
            erng.uniform(spec.ellipsoid_intensity_min, spec.ellipsoid_intensity_max);
        add_ellipsoid(ph.background, c, axes, rot, intensity);
    }

    StreamRng lrng(spec.seed, "phantom/lines");
    const double region = spec.line_region_frac * min_dim;
    const double min_sep = 4.0 * spec.line_radius;
    // Markers are tilted strands spanning the region vertically, the
    // arrangement a stereo rig can resolve: every pair of shadows stays
    // separated in both views. Each strand is a jittered vertical through a
    // random base position; greedy placement can wedge itself, so the whole
    // set restarts when a strand cannot be placed, within one attempt budget.
    const double base_radius = 0.95 * region;
    const double tilt_radius = 0.10 * region;
    int attempts = 0;
    while (true) {
        ph.lines.clear();
        bool wedged = false;
        while (static_cast<int>(ph.lines.size()) < spec.n_lines && !wedged) {
            bool placed = false;
            for (int tries = 0; tries < 200; ++tries) {
                if (++attempts > 10000)
                    throw std::runtime_error(
                        "gen_start_volume: line placement exceeded 10000 attempts; spec "
                        "over-constrained");
                const Vec3 base = uniform_in_ball(lrng, center, base_radius);
                const Vec3 ta = uniform_in_ball(lrng, center, tilt_radius) - center;
                const Vec3 tb = uniform_in_ball(lrng, center, tilt_radius) - center;
                const double half_span = lrng.uniform(0.75, 1.0) * region;
                const Vec3 a{base.x + ta.x, base.y + ta.y, center.z - half_span};
                const Vec3 b{base.x + tb.x, base.y + tb.y, center.z + half_span};
                bool clear = true;
                for (const Polyline3& prev : ph.lines) {
                    if (segment_segment_distance(a, b, prev.points.front(),
                                                 prev.points.back()) < min_sep ||
                        (spec.min_projected_separation > 0.0 &&
                         !shadows_separated(a, b, prev.points.front(), prev.points.back(),
                                            center, spec.min_projected_separation))) {
                        clear = false;
                        break;
                    }
                }
                if (!clear) continue;
                Polyline3 line;
                line.points = {a, b};
                line.radius = spec.line_radius;
                ph.lines.push_back(std::move(line));
                placed = true;
                break;
            }
            if (!placed) wedged = true;
        }
        if (!wedged) break;
    }

    ph.volume = compose_volume(ph.background, ph.lines, spec.line_intensity);
    return ph;
}

DisplacementField3 gen_smooth_field(int nx, int ny, int nz, double sigma, double amplitude,
                                    uint64_t master_seed, uint64_t stream_index) {
    if (nx < 2 || ny < 2 || nz < 2) throw std::invalid_argument("gen_smooth_field: dims too small");
    if (!(sigma > 0.0)) throw std::invalid_argument("gen_smooth_field: sigma must be > 0");
    if (amplitude < 0.0) throw std::invalid_argument("gen_smooth_field: amplitude must be >= 0");

    DisplacementField3 field;
    field.nx = nx;
    field.ny = ny;
    field.nz = nz;
    const size_t n = static_cast<size_t>(nx) * ny * nz;
    field.dx.assign(n, 0.0);
    field.dy.assign(n, 0.0);
    field.dz.assign(n, 0.0);
    if (amplitude == 0.0) return field;

    constexpr int kMaxAttempts = 32;
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
        StreamRng rng(master_seed, "phantom/field",
                      stream_index * kMaxAttempts + static_cast<uint64_t>(attempt));
        for (size_t i = 0; i < n; ++i) field.dx[i] = rng.normal();
        for (size_t i = 0; i < n; ++i) field.dy[i] = rng.normal();
        for (size_t i = 0; i < n; ++i) field.dz[i] = rng.normal();
        field = gaussian_smooth(field, sigma);

        double max_mag = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double m2 = field.dx[i] * field.dx[i] + field.dy[i] * field.dy[i] +
                              field.dz[i] * field.dz[i];
            max_mag = std::max(max_mag, m2);
        }
        max_mag = std::sqrt(max_mag);
        if (max_mag < 1e-9) continue;
        const double scale = amplitude / max_mag;
        for (size_t i = 0; i < n; ++i) {
            field.dx[i] *= scale;
            field.dy[i] *= scale;
            field.dz[i] *= scale;
        }

        // folding guard: every per-axis forward difference of every component
        // must stay below 1 in magnitude
        const auto idx = [&](int x, int y, int z) {
            return (static_cast<size_t>(z) * ny + y) * nx + x;
        };
        double max_grad = 0.0;
        for (const std::vector<double>* comp : {&field.dx, &field.dy, &field.dz})
            for (int z = 0; z < nz; ++z)
                for (int y = 0; y < ny; ++y)
                    for (int x = 0; x < nx; ++x) {
                        const double v = (*comp)[idx(x, y, z)];
                        if (x + 1 < nx)
                            max_grad = std::max(max_grad, std::abs((*comp)[idx(x + 1, y, z)] - v));
                        if (y + 1 < ny)
                            max_grad = std::max(max_grad, std::abs((*comp)[idx(x, y + 1, z)] - v));
                        if (z + 1 < nz)
                            max_grad = std::max(max_grad, std::abs((*comp)[idx(x, y, z + 1)] - v));
                    }
        if (max_grad < 1.0) return field;
    }
    throw std::runtime_error("gen_smooth_field: could not generate a fold-free field");
}

namespace {

struct DensifiedLine {
    std::vector<Vec3> points;
    std::vector<double> t;  // arc-length parameter in [0, 1]
};

DensifiedLine densify(const Polyline3& line, double max_spacing) {
    std::vector<double> cum(line.points.size(), 0.0);
    for (size_t i = 1; i < line.points.size(); ++i)
        cum[i] = cum[i - 1] + norm(line.points[i] - line.points[i - 1]);
    const double total = cum.back();
    if (!(total > 0.0)) throw std::invalid_argument("densify: zero-length line");

    const int n_seg = std::max(1, static_cast<int>(std::ceil(total / max_spacing)));
    DensifiedLine out;
    out.points.reserve(n_seg + 1);
    out.t.reserve(n_seg + 1);
    size_t seg = 1;
    for (int i = 0; i <= n_seg; ++i) {
        const double s = total * i / n_seg;
        while (seg + 1 < cum.size() && cum[seg] < s) ++seg;
        const double seg_len = cum[seg] - cum[seg - 1];
        const double u = seg_len > 0.0 ? (s - cum[seg - 1]) / seg_len : 0.0;
        out.points.push_back(line.points[seg - 1] +
                             std::clamp(u, 0.0, 1.0) * (line.points[seg] - line.points[seg - 1]));
        out.t.push_back(s / total);
    }
    out.points.front() = line.points.front();
    out.points.back() = line.points.back();
    return out;
}

}  // namespace

Polyline3 gen_line_trig_deformation(const Polyline3& line, double magnitude,
                                    uint64_t master_seed, uint64_t stream_index) {
    line.validate();
    if (magnitude < 0.0)
        throw std::invalid_argument("gen_line_trig_deformation: magnitude must be >= 0");

    const DensifiedLine dense = densify(line, 0.5);
    Polyline3 out;
    out.radius = line.radius;
    out.points = dense.points;
    if (magnitude == 0.0) return out;

    const Vec3 chord = line.points.back() - line.points.front();
    const double chord_len = norm(chord);
    if (chord_len < 1e-9)
        throw std::invalid_argument("gen_line_trig_deformation: endpoints coincide");
    const Vec3 d = (1.0 / chord_len) * chord;
    // transverse orthonormal frame perpendicular to the chord
    Vec3 helper{1.0, 0.0, 0.0};
    if (std::abs(d.x) > 0.9) helper = Vec3{0.0, 1.0, 0.0};
    const Vec3 e1 = normalized(cross(d, helper));
    const Vec3 e2 = cross(d, e1);

    StreamRng rng(master_seed, "phantom/line-deform", stream_index);
    const double psi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const Vec3 n1 = std::cos(psi) * e1 + std::sin(psi) * e2;
    const Vec3 n2 = -std::sin(psi) * e1 + std::cos(psi) * e2;

    // sin(k*pi*t) modes vanish at both endpoints; amplitudes per axis and mode
    double amp[2][2];
    double peak = 0.0;
    for (int redraws = 0; redraws < 100 && peak < 1e-9; ++redraws) {
        for (auto& row : amp)
            for (double& a : row) a = rng.uniform(-1.0, 1.0);
        peak = 0.0;
        for (double t : dense.t) {
            const double s1 = std::sin(3.14159265358979323846 * t);
            const double s2 = std::sin(2.0 * 3.14159265358979323846 * t);
            const double c1 = amp[0][0] * s1 + amp[0][1] * s2;
            const double c2 = amp[1][0] * s1 + amp[1][1] * s2;
            peak = std::max(peak, std::sqrt(c1 * c1 + c2 * c2));
        }
    }
    if (peak < 1e-9)
        throw std::runtime_error("gen_line_trig_deformation: degenerate amplitude draw");
    const double scale = magnitude / peak;

    for (size_t i = 1; i + 1 < out.points.size(); ++i) {
        const double t = dense.t[i];
        const double s1 = std::sin(3.14159265358979323846 * t);
        const double s2 = std::sin(2.0 * 3.14159265358979323846 * t);
        const double c1 = scale * (amp[0][0] * s1 + amp[0][1] * s2);
        const double c2 = scale * (amp[1][0] * s1 + amp[1][1] * s2);
        out.points[i] = out.points[i] + c1 * n1 + c2 * n2;
    }
    return out;
}

std::vector<Frame> apply_deformation_sequence(const Phantom& start, const DeformationSpec& dspec) {
    if (start.volume.data.empty()) throw std::invalid_argument("apply_deformation_sequence: empty start");
    const int min_dim = std::min({start.volume.nx, start.volume.ny, start.volume.nz});
    dspec.validate(min_dim);

    std::vector<Frame> frames;
    frames.reserve(dspec.n_frames);
    frames.push_back({start.volume, start.background, start.lines, start.line_intensity});

    const double margin = 1.0;
    const double xhi = start.volume.nx - 1 - margin;
    const double yhi = start.volume.ny - 1 - margin;
    const double zhi = start.volume.nz - 1 - margin;
    const Vec3 vol_center{(start.volume.nx - 1) / 2.0, (start.volume.ny - 1) / 2.0,
                          (start.volume.nz - 1) / 2.0};

    for (int f = 1; f < dspec.n_frames; ++f) {
        const Frame& prev = frames.back();
        Frame cur;
        cur.line_intensity = prev.line_intensity;

        const DisplacementField3 field =
            gen_smooth_field(start.volume.nx, start.volume.ny, start.volume.nz, dspec.sigma,
                             dspec.amplitude, dspec.seed, static_cast<uint64_t>(f));
        cur.background = warp_volume(prev.background, field);

        // Greedy per-line placement can box in a later line, so a failed line
        // discards the whole frame's draw and the round starts over.
        constexpr int kMaxRetries = 64;
        constexpr int kMaxRounds = 16;
        bool frame_done = false;
        for (int round = 0; round < kMaxRounds && !frame_done; ++round) {
            cur.lines.clear();
            bool wedged = false;
            for (size_t j = 0; j < prev.lines.size() && !wedged; ++j) {
                const uint64_t artifact =
                    ((static_cast<uint64_t>(f) * kMaxRounds + round) * 256 + j);
                StreamRng mag_rng(dspec.seed, "phantom/line-magnitude", artifact);
                const double magnitude =
                    mag_rng.uniform(dspec.line_magnitude_min, dspec.line_magnitude_max);
                bool placed = false;
                for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
                    Polyline3 cand = gen_line_trig_deformation(
                        prev.lines[j], magnitude, dspec.seed,
                        artifact * kMaxRetries + static_cast<uint64_t>(attempt));
                    bool ok = true;
                    for (const Vec3& p : cand.points)
                        if (p.x < margin || p.x > xhi || p.y < margin || p.y > yhi ||
                            p.z < margin || p.z > zhi) {
                            ok = false;
                            break;
                        }
                    if (ok && dspec.min_projected_separation > 0.0)
                        for (const Polyline3& other : cur.lines)
                            if (!shadows_separated_poly(cand.points, other.points, vol_center,
                                                        dspec.min_projected_separation)) {
                                ok = false;
                                break;
                            }
                    if (ok) {
                        cur.lines.push_back(std::move(cand));
                        placed = true;
                        break;
                    }
                }
                if (!placed) wedged = true;
            }
            frame_done = !wedged;
        }
        if (!frame_done)
            throw std::runtime_error(
                "apply_deformation_sequence: deformed line kept leaving volume bounds "
                "or crossing another shadow");

        cur.volume = compose_volume(cur.background, cur.lines, cur.line_intensity);
        frames.push_back(std::move(cur));
    }
    return frames;
}

ScalarImage add_poisson_noise(const ScalarImage& img, double scale,
                              uint64_t master_seed, uint64_t stream_index) {
    if (!(scale > 0.0)) throw std::invalid_argument("add_poisson_noise: scale must be > 0");
    for (double v : img.data)
        if (!(v >= 0.0)) throw std::invalid_argument("add_poisson_noise: negative or non-finite pixel");

    ScalarImage out = img;
    StreamRng rng(master_seed, "phantom/noise", stream_index);
    for (double& v : out.data) v = static_cast<double>(rng.poisson(v * scale)) / scale;
    return out;
}

}  // namespace sxt
