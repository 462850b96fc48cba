#include "sxt/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace sxt {

ScalarImage FeatureMap2::binary() const {
    ScalarImage out(score.width, score.height);
    out.pixel_pitch = score.pixel_pitch;
    for (size_t i = 0; i < score.data.size(); ++i)
        out.data[i] = score.data[i] > threshold ? 1.0 : 0.0;
    return out;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Oriented ridge kernel: negated second derivative across the line direction
// of an elongated Gaussian (sigma_par along, sigma_perp across), zero-meaned
// and L2-normalized so responses are comparable across orientations.
struct Kernel2 {
    int radius = 0;
    std::vector<double> taps;  // (2r+1)^2, row-major
};

Kernel2 make_ridge_kernel(double sigma_perp, double angle) {
    const double sigma_par = 2.0 * sigma_perp;
    const int r = static_cast<int>(std::ceil(3.0 * sigma_par));
    Kernel2 k;
    k.radius = r;
    k.taps.assign(static_cast<size_t>(2 * r + 1) * (2 * r + 1), 0.0);
    const double ca = std::cos(angle), sa = std::sin(angle);
    double sum = 0.0;
    for (int y = -r; y <= r; ++y)
        for (int x = -r; x <= r; ++x) {
            const double u = ca * x + sa * y;   // along the line
            const double v = -sa * x + ca * y;  // across the line
            const double g = std::exp(-0.5 * (u * u / (sigma_par * sigma_par) +
                                              v * v / (sigma_perp * sigma_perp)));
            const double val = g * (1.0 - v * v / (sigma_perp * sigma_perp));
            k.taps[static_cast<size_t>(y + r) * (2 * r + 1) + (x + r)] = val;
            sum += val;
        }
    const double mean = sum / static_cast<double>(k.taps.size());
    double norm2 = 0.0;
    for (double& t : k.taps) {
        t -= mean;
        norm2 += t * t;
    }
    if (norm2 > 0.0)
        for (double& t : k.taps) t /= std::sqrt(norm2);
    return k;
}

}  // namespace

double otsu_threshold(const ScalarImage& scores) {
    if (scores.data.empty()) throw std::invalid_argument("otsu_threshold: empty image");
    constexpr int kBins = 256;
    std::vector<double> hist(kBins, 0.0);
    for (double v : scores.data) {
        const int b = std::clamp(static_cast<int>(v * kBins), 0, kBins - 1);
        hist[static_cast<size_t>(b)] += 1.0;
    }
    const double total = static_cast<double>(scores.data.size());
    double total_mean = 0.0;
    for (int b = 0; b < kBins; ++b) total_mean += (b + 0.5) / kBins * hist[b];
    total_mean /= total;

    double best_var = -1.0;
    int best_bin = kBins / 2;
    double w0 = 0.0, sum0 = 0.0;
    for (int b = 0; b < kBins - 1; ++b) {
        w0 += hist[b] / total;
        sum0 += (b + 0.5) / kBins * hist[b] / total;
        const double w1 = 1.0 - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (total_mean - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_bin = b;
        }
    }
    if (best_var <= 0.0) return 0.5;  // constant image: no separation exists
    return (best_bin + 0.5) / kBins;
}

FeatureMap2 detect_features_2d(const ScalarImage& img, double marker_radius_px,
                               int n_orientations) {
    if (!img.all_finite()) throw std::invalid_argument("detect_features_2d: non-finite input");
    if (!(marker_radius_px > 0.0))
        throw std::invalid_argument("detect_features_2d: marker_radius_px must be > 0");
    if (n_orientations < 8)
        throw std::invalid_argument("detect_features_2d: need at least 8 orientations");

    std::vector<Kernel2> bank;
    bank.reserve(static_cast<size_t>(n_orientations));
    for (int o = 0; o < n_orientations; ++o)
        bank.push_back(make_ridge_kernel(marker_radius_px, kPi * o / n_orientations));

    const int w = img.width, h = img.height;
    ScalarImage response(w, h);
    response.pixel_pitch = img.pixel_pitch;
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double best = 0.0;
            for (const Kernel2& k : bank) {
                const int r = k.radius;
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int sy = std::clamp(y + dy, 0, h - 1);
                    const size_t krow = static_cast<size_t>(dy + r) * (2 * r + 1);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int sx = std::clamp(x + dx, 0, w - 1);
                        acc += k.taps[krow + static_cast<size_t>(dx + r)] * img.at(sx, sy);
                    }
                }
                best = std::max(best, acc);
            }
            response.at(x, y) = best;  // already clamped at 0 via the init
        }

    const double peak = response.max_value();
    if (peak > 0.0)
        for (double& v : response.data) v /= peak;

    FeatureMap2 fm;
    fm.score = std::move(response);
    fm.threshold = peak > 0.0 ? otsu_threshold(fm.score) : 0.5;
    return fm;
}

namespace {

// Power iteration on the component's 3x3 covariance; deterministic start.
Vec3 principal_axis(const std::vector<Vec3>& pts, Vec3 centroid) {
    double c[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    for (const Vec3& p : pts) {
        const double d[3] = {p.x - centroid.x, p.y - centroid.y, p.z - centroid.z};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) c[i][j] += d[i] * d[j];
    }
    double v[3] = {1.0, 1.0, 1.0};
    for (int it = 0; it < 128; ++it) {
        double nv[3];
        for (int i = 0; i < 3; ++i) nv[i] = c[i][0] * v[0] + c[i][1] * v[1] + c[i][2] * v[2];
        const double n = std::sqrt(nv[0] * nv[0] + nv[1] * nv[1] + nv[2] * nv[2]);
        if (n < 1e-12) break;  // isotropic or single point: keep current direction
        for (int i = 0; i < 3; ++i) v[i] = nv[i] / n;
    }
    const double n = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    return {v[0] / n, v[1] / n, v[2] / n};
}

}  // namespace

PolylineExtraction extract_polylines(const ScalarVolume& score, double threshold,
                                     int expected_count, double point_radius) {
    if (score.data.empty()) throw std::invalid_argument("extract_polylines: empty volume");
    if (!(point_radius > 0.0))
        throw std::invalid_argument("extract_polylines: point_radius must be > 0");
    const int nx = score.nx, ny = score.ny, nz = score.nz;
    const size_t n = score.data.size();

    std::vector<uint8_t> mask(n, 0);
    for (size_t i = 0; i < n; ++i) mask[i] = score.data[i] > threshold ? 1 : 0;

    PolylineExtraction out;
    std::vector<uint8_t> visited(n, 0);
    std::vector<size_t> stack;
    for (size_t seed = 0; seed < n; ++seed) {
        if (!mask[seed] || visited[seed]) continue;
        // flood fill 26-connected component
        std::vector<Vec3> comp;
        stack.clear();
        stack.push_back(seed);
        visited[seed] = 1;
        while (!stack.empty()) {
            const size_t cur = stack.back();
            stack.pop_back();
            const int cx = static_cast<int>(cur % nx);
            const int cy = static_cast<int>((cur / nx) % ny);
            const int cz = static_cast<int>(cur / (static_cast<size_t>(nx) * ny));
            comp.push_back({static_cast<double>(cx), static_cast<double>(cy),
                            static_cast<double>(cz)});
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0 && dz == 0) continue;
                        const int x = cx + dx, y = cy + dy, z = cz + dz;
                        if (x < 0 || x >= nx || y < 0 || y >= ny || z < 0 || z >= nz) continue;
                        const size_t idx = score.index(x, y, z);
                        if (mask[idx] && !visited[idx]) {
                            visited[idx] = 1;
                            stack.push_back(idx);
                        }
                    }
        }
        if (comp.size() < 5) continue;
        out.n_components++;

        Vec3 centroid{0, 0, 0};
        for (const Vec3& p : comp) centroid = centroid + p;
        centroid = (1.0 / static_cast<double>(comp.size())) * centroid;
        const Vec3 axis = principal_axis(comp, centroid);

        // order along the axis; stable tie-break on grid index
        std::vector<std::pair<double, size_t>> order(comp.size());
        for (size_t i = 0; i < comp.size(); ++i) order[i] = {dot(comp[i] - centroid, axis), i};
        std::sort(order.begin(), order.end());

        // centroid per unit-length slab along the axis, then window-3 smoothing
        const double s_min = order.front().first;
        const double s_max = order.back().first;
        const int n_bins = std::max(1, static_cast<int>(std::ceil(s_max - s_min)));
        std::vector<Vec3> sums(static_cast<size_t>(n_bins), Vec3{0, 0, 0});
        std::vector<int> counts(static_cast<size_t>(n_bins), 0);
        for (const auto& [s, i] : order) {
            int b = static_cast<int>((s - s_min) / (s_max - s_min + 1e-12) * n_bins);
            b = std::clamp(b, 0, n_bins - 1);
            sums[static_cast<size_t>(b)] = sums[static_cast<size_t>(b)] + comp[i];
            counts[static_cast<size_t>(b)]++;
        }
        std::vector<Vec3> centers;
        for (int b = 0; b < n_bins; ++b)
            if (counts[static_cast<size_t>(b)] > 0)
                centers.push_back((1.0 / counts[static_cast<size_t>(b)]) * sums[static_cast<size_t>(b)]);
        if (centers.size() < 2) continue;  // blob, not a line

        Polyline3 line;
        line.radius = point_radius;
        line.points.reserve(centers.size());
        for (size_t i = 0; i < centers.size(); ++i) {
            Vec3 acc{0, 0, 0};
            int cnt = 0;
            for (size_t k = (i > 0 ? i - 1 : i); k <= std::min(i + 1, centers.size() - 1); ++k) {
                acc = acc + centers[k];
                ++cnt;
            }
            line.points.push_back((1.0 / cnt) * acc);
        }
        // drop consecutive duplicates so the polyline stays valid
        std::vector<Vec3> dedup;
        for (const Vec3& p : line.points)
            if (dedup.empty() || norm(p - dedup.back()) > 1e-12) dedup.push_back(p);
        if (dedup.size() < 2) continue;
        line.points = std::move(dedup);
        out.lines.push_back(std::move(line));
    }

    out.short_of_expected =
        expected_count >= 0 && static_cast<int>(out.lines.size()) < expected_count;
    return out;
}

FeatureVolume map_3d_no_prior(const FeatureMap2& feat0, const FeatureMap2& feat1,
                              const StereoGeometry& geom, int nx, int ny, int nz) {
    const BpEvidence ev = make_bp_evidence(feat0.binary(), feat1.binary(), geom, nx, ny, nz);
    if (!ev.has_evidence) throw std::runtime_error("map_3d_no_prior: no intersection");
    FeatureVolume fv;
    fv.score = ev.volume;
    fv.threshold = 0.5;
    fv.polylines = extract_polylines(fv.score, fv.threshold).lines;
    return fv;
}

}  // namespace sxt
