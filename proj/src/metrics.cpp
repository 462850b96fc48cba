#include "sxt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>

namespace sxt {

RocCurve roc_curve(std::span<const double> scores, std::span<const uint8_t> truth) {
    if (scores.size() != truth.size())
        throw std::invalid_argument("roc_curve: scores and truth must have equal size");
    size_t n_pos = 0, n_neg = 0;
    for (uint8_t t : truth) (t ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_curve: truth needs at least one positive and one negative");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    size_t tp = 0, fp = 0;
    size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // consume the whole tie group before emitting a point
        while (i < order.size() && scores[order[i]] == s) {
            (truth[order[i]] ? tp : fp)++;
            ++i;
        }
        curve.points.push_back({s, static_cast<double>(tp) / n_pos, static_cast<double>(fp) / n_neg});
    }
    // trapezoidal rule over FPR
    double auc = 0.0;
    for (size_t k = 1; k < curve.points.size(); ++k) {
        const auto& p0 = curve.points[k - 1];
        const auto& p1 = curve.points[k];
        auc += 0.5 * (p1.fpr - p0.fpr) * (p1.tpr + p0.tpr);
    }
    curve.auc = auc;
    return curve;
}

namespace {

std::vector<uint8_t> binarize_half(const std::vector<double>& v) {
    std::vector<uint8_t> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.5 ? 1 : 0;
    return out;
}

}  // namespace

RocCurve roc_curve(const ScalarImage& scores, const ScalarImage& truth) {
    if (!scores.same_shape(truth)) throw std::invalid_argument("roc_curve: shape mismatch");
    return roc_curve(std::span<const double>(scores.data),
                     std::span<const uint8_t>(binarize_half(truth.data)));
}

RocCurve roc_curve(const ScalarVolume& scores, const ScalarVolume& truth) {
    if (!scores.same_shape(truth)) throw std::invalid_argument("roc_curve: shape mismatch");
    return roc_curve(std::span<const double>(scores.data),
                     std::span<const uint8_t>(binarize_half(truth.data)));
}

namespace {

// Uniform hash grid over 3D points; exact nearest distance by expanding
// Chebyshev rings. Any point in ring k is at least (k-1)*cell away, which
// bounds the search once a candidate is found.
class PointGridIndex {
public:
    explicit PointGridIndex(std::span<const Vec3> pts) : pts_(pts) {
        Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
        for (const Vec3& p : pts) {
            lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y); lo.z = std::min(lo.z, p.z);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y); hi.z = std::max(hi.z, p.z);
        }
        origin_ = lo;
        const double diag = norm(hi - lo);
        cell_ = std::max(1e-9, diag / (std::cbrt(static_cast<double>(pts.size())) + 1.0));
        for (size_t i = 0; i < pts.size(); ++i) cells_[key_of(pts[i])].push_back(static_cast<int>(i));
        max_ring_ = static_cast<long long>(diag / cell_) + 2;
    }

    double nearest_distance(Vec3 q) const {
        const long long cx = coord(q.x - origin_.x);
        const long long cy = coord(q.y - origin_.y);
        const long long cz = coord(q.z - origin_.z);
        double best = std::numeric_limits<double>::infinity();
        for (long long ring = 0; ring <= max_ring_; ++ring) {
            if (std::isfinite(best) && static_cast<double>(ring - 1) * cell_ > best) break;
            scan_ring(cx, cy, cz, ring, q, best);
        }
        return best;
    }

private:
    static uint64_t hash_key(long long x, long long y, long long z) {
        uint64_t h = 1469598103934665603ULL;
        for (long long v : {x, y, z}) {
            h ^= static_cast<uint64_t>(v);
            h *= 1099511628211ULL;
        }
        return h;
    }

    long long coord(double v) const { return static_cast<long long>(std::floor(v / cell_)); }

    uint64_t key_of(Vec3 p) const {
        return hash_key(coord(p.x - origin_.x), coord(p.y - origin_.y), coord(p.z - origin_.z));
    }

    void visit_cell(long long x, long long y, long long z, Vec3 q, double& best) const {
        const auto it = cells_.find(hash_key(x, y, z));
        if (it == cells_.end()) return;
        for (int i : it->second) best = std::min(best, norm(q - pts_[i]));
    }

    void scan_ring(long long cx, long long cy, long long cz, long long ring, Vec3 q,
                   double& best) const {
        if (ring == 0) {
            visit_cell(cx, cy, cz, q, best);
            return;
        }
        for (long long dz = -ring; dz <= ring; ++dz)
            for (long long dy = -ring; dy <= ring; ++dy)
                for (long long dx = -ring; dx <= ring; ++dx) {
                    const long long cheb =
                        std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)});
                    if (cheb != ring) continue;
                    visit_cell(cx + dx, cy + dy, cz + dz, q, best);
                }
    }

    std::span<const Vec3> pts_;
    Vec3 origin_;
    double cell_ = 1.0;
    long long max_ring_ = 0;
    std::unordered_map<uint64_t, std::vector<int>> cells_;
};

double mean_nearest(std::span<const Vec3> from, const PointGridIndex& to_index) {
    double sum = 0.0;
    for (const Vec3& p : from) sum += to_index.nearest_distance(p);
    return sum / static_cast<double>(from.size());
}

}  // namespace

double chamfer_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("chamfer_distance: empty point set");
    const PointGridIndex ia(a);
    const PointGridIndex ib(b);
    return 0.5 * (mean_nearest(a, ib) + mean_nearest(b, ia));
}

std::vector<Vec3> points_above(const ScalarVolume& vol, double threshold) {
    std::vector<Vec3> pts;
    for (int z = 0; z < vol.nz; ++z)
        for (int y = 0; y < vol.ny; ++y)
            for (int x = 0; x < vol.nx; ++x)
                if (vol.at(x, y, z) > threshold)
                    pts.push_back({static_cast<double>(x), static_cast<double>(y),
                                   static_cast<double>(z)});
    return pts;
}

std::vector<Vec3> points_above(const ScalarImage& img, double threshold) {
    std::vector<Vec3> pts;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (img.at(x, y) > threshold)
                pts.push_back({static_cast<double>(x), static_cast<double>(y), 0.0});
    return pts;
}

double line_position_error_2d(const ScalarImage& detected_mask, const ScalarImage& truth_mask) {
    if (!detected_mask.same_shape(truth_mask))
        throw std::invalid_argument("line_position_error_2d: shape mismatch");
    const std::vector<Vec3> det = points_above(detected_mask, 0.5);
    const std::vector<Vec3> tru = points_above(truth_mask, 0.5);
    if (det.empty() || tru.empty())
        throw std::invalid_argument("line_position_error_2d: empty mask after binarization");
    return chamfer_distance(det, tru);
}

}  // namespace sxt
