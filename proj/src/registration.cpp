#include "sxt/registration.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "sxt/interp.hpp"
#include "sxt/smooth.hpp"

namespace sxt {

void RegConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("RegConfig: lambda must be >= 0");
    if (pyramid_levels < 1) throw std::invalid_argument("RegConfig: pyramid_levels must be >= 1");
    if (max_iterations < 1) throw std::invalid_argument("RegConfig: max_iterations must be >= 1");
    if (!(step_size > 0.0)) throw std::invalid_argument("RegConfig: step_size must be > 0");
    if (!(backtrack_factor > 0.0) || !(backtrack_factor < 1.0))
        throw std::invalid_argument("RegConfig: backtrack_factor must lie in (0, 1)");
    if (tolerance < 0.0) throw std::invalid_argument("RegConfig: tolerance must be >= 0");
    if (prefilter_sigma < 0.0) throw std::invalid_argument("RegConfig: prefilter_sigma must be >= 0");
}

namespace {

// SSD similarity value and, when requested, d(sim)/d(warped value) per node.
// Serial sums keep results independent of the thread count.
double ssd_term(const std::vector<double>& warped, const std::vector<double>& fixed,
                std::vector<double>* dsim) {
    const size_t n = warped.size();
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = warped[i] - fixed[i];
        acc += d * d;
    }
    if (dsim) {
        dsim->resize(n);
        const double s = 2.0 / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) (*dsim)[i] = s * (warped[i] - fixed[i]);
    }
    return acc / static_cast<double>(n);
}

// Window scale and variance floor for the local-correlation similarity.
constexpr double kNccWindowSigma = 2.0;
constexpr double kNccEps = 1e-8;

// NCC similarity, windowed form: squared Pearson correlation between the two
// inputs inside a Gaussian window centered at every grid point, averaged over
// the grid and negated so lower is better. Scale invariance holds only per
// window; the global form is invariant to rescaling the warped image as a
// whole, which on sparse line volumes rewards degenerate fields that smear the
// moving image into a faint copy of the fixed one. The window operator G must
// be self-adjoint for the gradient below to be exact, hence zero padding.
double local_ncc(const std::vector<double>& I, const std::vector<double>& J,
                 const std::function<std::vector<double>(const std::vector<double>&)>& G,
                 std::vector<double>* dsim) {
    const size_t n = I.size();
    std::vector<double> mI = G(I);
    std::vector<double> mJ = G(J);
    std::vector<double> sII(n), sJJ(n), sIJ(n);
    for (size_t i = 0; i < n; ++i) {
        sII[i] = I[i] * I[i];
        sJJ[i] = J[i] * J[i];
        sIJ[i] = I[i] * J[i];
    }
    sII = G(sII);
    sJJ = G(sJJ);
    sIJ = G(sIJ);

    // cc = a^2 / (b*c + eps) with a = cov, b = var(I), c = var(J) per window
    double acc = 0.0;
    std::vector<double> P, Q;
    if (dsim) {
        P.resize(n);
        Q.resize(n);
    }
    for (size_t i = 0; i < n; ++i) {
        const double a = sIJ[i] - mI[i] * mJ[i];
        const double b = sII[i] - mI[i] * mI[i];
        const double c = sJJ[i] - mJ[i] * mJ[i];
        const double den = b * c + kNccEps;
        acc += a * a / den;
        if (dsim) {
            P[i] = a / den;
            Q[i] = a * a * c / (den * den);
        }
    }

    if (dsim) {
        // d(-mean cc)/dI(y) = -(2/n) [J.G(P) - G(P.mJ) - I.G(Q) + G(Q.mI)](y)
        std::vector<double> PmJ(n), QmI(n);
        for (size_t i = 0; i < n; ++i) {
            PmJ[i] = P[i] * mJ[i];
            QmI[i] = Q[i] * mI[i];
        }
        P = G(P);
        Q = G(Q);
        PmJ = G(PmJ);
        QmI = G(QmI);
        dsim->resize(n);
        const double s = 2.0 / static_cast<double>(n);
        for (size_t i = 0; i < n; ++i)
            (*dsim)[i] = -s * (J[i] * P[i] - PmJ[i] - I[i] * Q[i] + QmI[i]);
    }
    return -acc / static_cast<double>(n);
}

double similarity_2d(const std::vector<double>& warped, const std::vector<double>& fixed, int w,
                     int h, Similarity sim, std::vector<double>* dsim) {
    if (sim == Similarity::SSD) return ssd_term(warped, fixed, dsim);
    const auto G = [w, h](const std::vector<double>& v) {
        ScalarImage img(w, h);
        img.data = v;
        return gaussian_smooth_zero_pad(img, kNccWindowSigma).data;
    };
    return local_ncc(warped, fixed, G, dsim);
}

double similarity_3d(const std::vector<double>& warped, const std::vector<double>& fixed, int nx,
                     int ny, int nz, Similarity sim, std::vector<double>* dsim) {
    if (sim == Similarity::SSD) return ssd_term(warped, fixed, dsim);
    const auto G = [nx, ny, nz](const std::vector<double>& v) {
        ScalarVolume vol(nx, ny, nz);
        vol.data = v;
        return gaussian_smooth_zero_pad(vol, kNccWindowSigma).data;
    };
    return local_ncc(warped, fixed, G, dsim);
}

struct LevelOutcome {
    double objective = 0.0;
    bool converged = false;
};

// Gradient descent with Armijo backtracking on a flat parameter vector. The
// step is expressed as a max node displacement (trust) divided by the
// gradient's max-norm; trust shrinks on rejection and regrows on acceptance.
template <class ValueFn, class ValueGradFn>
LevelOutcome optimize_level(std::vector<double>& phi, ValueFn&& value, ValueGradFn&& value_grad,
                            const RegConfig& cfg, int level, std::vector<TraceRow>& trace) {
    std::vector<double> grad(phi.size(), 0.0);
    double obj = value_grad(phi, grad);
    if (!std::isfinite(obj))
        throw std::runtime_error("registration: non-finite objective at level start");
    trace.push_back({level, 0, obj});

    LevelOutcome out;
    out.objective = obj;
    double trust = cfg.step_size;
    std::vector<double> cand(phi.size());

    for (int it = 1; it <= cfg.max_iterations; ++it) {
        double gmax = 0.0, gnorm2 = 0.0;
        for (double g : grad) {
            gmax = std::max(gmax, std::abs(g));
            gnorm2 += g * g;
        }
        if (gmax < 1e-14) {
            out.converged = true;
            break;
        }

        double s = trust / gmax;
        bool accepted = false;
        double cobj = 0.0;
        for (int bt = 0; bt < 40; ++bt) {
            for (size_t i = 0; i < phi.size(); ++i) cand[i] = phi[i] - s * grad[i];
            cobj = value(cand);
            if (std::isfinite(cobj) && cobj <= obj - 1e-4 * s * gnorm2) {
                accepted = true;
                break;
            }
            s *= cfg.backtrack_factor;
        }
        if (!accepted) {
            // no descent at any scale: numerically at a minimum
            out.converged = true;
            break;
        }

        phi.swap(cand);
        const double drop = (obj - cobj) / std::max(std::abs(obj), 1e-30);
        obj = cobj;
        out.objective = obj;
        trace.push_back({level, it, obj});
        trust = std::min(s * gmax / cfg.backtrack_factor, cfg.step_size * 8.0);
        if (drop < cfg.tolerance) {
            out.converged = true;
            break;
        }
        value_grad(phi, grad);  // gradient for the next iteration; obj stays the accepted value
    }
    return out;
}

// E(phi) for 2D: similarity + lambda/N * sum of squared forward differences.
// phi is packed [dx..., dy...]; grad_out, when non-null, receives dE/dphi in
// the same layout.
double eval2(const ScalarImage& m, const ScalarImage& f, const RegConfig& cfg,
             const std::vector<double>& phi, std::vector<double>* grad_out) {
    const int w = m.width, h = m.height;
    const size_t n = static_cast<size_t>(w) * h;
    const double* dx = phi.data();
    const double* dy = phi.data() + n;
    const bool want_grad = grad_out != nullptr;

    std::vector<double> warped(n);
    std::vector<double> mx, my;
    if (want_grad) {
        mx.assign(n, 0.0);
        my.assign(n, 0.0);
    }
#pragma omp parallel for schedule(static)
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            const double px = x + dx[i], py = y + dy[i];
            if (want_grad) {
                const Sample2 s = sample_bilinear_grad(m, px, py);
                warped[i] = s.value;
                mx[i] = s.ddx;
                my[i] = s.ddy;
            } else {
                warped[i] = sample_bilinear(m, px, py);
            }
        }

    std::vector<double> dsim;
    const double sim = similarity_2d(warped, f.data, w, h, cfg.similarity,
                                     want_grad ? &dsim : nullptr);

    const double lam = cfg.lambda / static_cast<double>(n);
    double reg = 0.0;
    for (const double* a : {dx, dy})
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                if (x + 1 < w) {
                    const double d = a[i + 1] - a[i];
                    reg += d * d;
                }
                if (y + 1 < h) {
                    const double d = a[i + w] - a[i];
                    reg += d * d;
                }
            }
    reg *= lam;

    if (want_grad) {
        grad_out->assign(2 * n, 0.0);
        double* gx = grad_out->data();
        double* gy = grad_out->data() + n;
        const double two_lam = 2.0 * lam;
#pragma omp parallel for schedule(static)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const size_t i = static_cast<size_t>(y) * w + x;
                for (int comp = 0; comp < 2; ++comp) {
                    const double* a = comp == 0 ? dx : dy;
                    double r = 0.0;
                    if (x >= 1) r += a[i] - a[i - 1];
                    if (x + 1 < w) r -= a[i + 1] - a[i];
                    if (y >= 1) r += a[i] - a[i - w];
                    if (y + 1 < h) r -= a[i + w] - a[i];
                    const double sim_part = dsim[i] * (comp == 0 ? mx[i] : my[i]);
                    (comp == 0 ? gx : gy)[i] = sim_part + two_lam * r;
                }
            }
    }
    return sim + reg;
}

// 3D analogue; phi packed [dx..., dy..., dz...].
double eval3(const ScalarVolume& m, const ScalarVolume& f, const RegConfig& cfg,
             const std::vector<double>& phi, std::vector<double>* grad_out) {
    const int nx = m.nx, ny = m.ny, nz = m.nz;
    const size_t n = static_cast<size_t>(nx) * ny * nz;
    const double* dx = phi.data();
    const double* dy = phi.data() + n;
    const double* dz = phi.data() + 2 * n;
    const bool want_grad = grad_out != nullptr;

    std::vector<double> warped(n);
    std::vector<double> mx, my, mz;
    if (want_grad) {
        mx.assign(n, 0.0);
        my.assign(n, 0.0);
        mz.assign(n, 0.0);
    }
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const size_t i = (static_cast<size_t>(z) * ny + y) * nx + x;
                const double px = x + dx[i], py = y + dy[i], pz = z + dz[i];
                if (want_grad) {
                    const Sample3 s = sample_trilinear_grad(m, px, py, pz);
                    warped[i] = s.value;
                    mx[i] = s.ddx;
                    my[i] = s.ddy;
                    mz[i] = s.ddz;
                } else {
                    warped[i] = sample_trilinear(m, px, py, pz);
                }
            }

    std::vector<double> dsim;
    const double sim = similarity_3d(warped, f.data, nx, ny, nz, cfg.similarity,
                                     want_grad ? &dsim : nullptr);

    const double lam = cfg.lambda / static_cast<double>(n);
    const size_t sx = 1, sy = static_cast<size_t>(nx), sz = static_cast<size_t>(nx) * ny;
    double reg = 0.0;
    for (const double* a : {dx, dy, dz})
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x < nx; ++x) {
                    const size_t i = (static_cast<size_t>(z) * ny + y) * nx + x;
                    if (x + 1 < nx) {
                        const double d = a[i + sx] - a[i];
                        reg += d * d;
                    }
                    if (y + 1 < ny) {
                        const double d = a[i + sy] - a[i];
                        reg += d * d;
                    }
                    if (z + 1 < nz) {
                        const double d = a[i + sz] - a[i];
                        reg += d * d;
                    }
                }
    reg *= lam;

    if (want_grad) {
        grad_out->assign(3 * n, 0.0);
        const double two_lam = 2.0 * lam;
        double* gcomp[3] = {grad_out->data(), grad_out->data() + n, grad_out->data() + 2 * n};
        const double* acomp[3] = {dx, dy, dz};
        const std::vector<double>* mcomp[3] = {&mx, &my, &mz};
#pragma omp parallel for schedule(static)
        for (int z = 0; z < nz; ++z)
            for (int y = 0; y < ny; ++y)
                for (int x = 0; x < nx; ++x) {
                    const size_t i = (static_cast<size_t>(z) * ny + y) * nx + x;
                    for (int comp = 0; comp < 3; ++comp) {
                        const double* a = acomp[comp];
                        double r = 0.0;
                        if (x >= 1) r += a[i] - a[i - sx];
                        if (x + 1 < nx) r -= a[i + sx] - a[i];
                        if (y >= 1) r += a[i] - a[i - sy];
                        if (y + 1 < ny) r -= a[i + sy] - a[i];
                        if (z >= 1) r += a[i] - a[i - sz];
                        if (z + 1 < nz) r -= a[i + sz] - a[i];
                        gcomp[comp][i] = dsim[i] * (*mcomp[comp])[i] + two_lam * r;
                    }
                }
    }
    return sim + reg;
}

double component_bilinear(const std::vector<double>& a, int w, int h, double px, double py) {
    const double cx = std::clamp(px, 0.0, w - 1.0);
    const double cy = std::clamp(py, 0.0, h - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = cx - x0, fy = cy - y0;
    const auto at = [&](int x, int y) { return a[static_cast<size_t>(y) * w + x]; };
    return (1.0 - fy) * ((1.0 - fx) * at(x0, y0) + fx * at(x1, y0)) +
           fy * ((1.0 - fx) * at(x0, y1) + fx * at(x1, y1));
}

double component_trilinear(const std::vector<double>& a, int nx, int ny, int nz, double px,
                           double py, double pz) {
    const double cx = std::clamp(px, 0.0, nx - 1.0);
    const double cy = std::clamp(py, 0.0, ny - 1.0);
    const double cz = std::clamp(pz, 0.0, nz - 1.0);
    const int x0 = static_cast<int>(cx);
    const int y0 = static_cast<int>(cy);
    const int z0 = static_cast<int>(cz);
    const int x1 = std::min(x0 + 1, nx - 1);
    const int y1 = std::min(y0 + 1, ny - 1);
    const int z1 = std::min(z0 + 1, nz - 1);
    const double fx = cx - x0, fy = cy - y0, fz = cz - z0;
    const auto at = [&](int x, int y, int z) {
        return a[(static_cast<size_t>(z) * ny + y) * nx + x];
    };
    const double c00 = (1.0 - fx) * at(x0, y0, z0) + fx * at(x1, y0, z0);
    const double c10 = (1.0 - fx) * at(x0, y1, z0) + fx * at(x1, y1, z0);
    const double c01 = (1.0 - fx) * at(x0, y0, z1) + fx * at(x1, y0, z1);
    const double c11 = (1.0 - fx) * at(x0, y1, z1) + fx * at(x1, y1, z1);
    return (1.0 - fz) * ((1.0 - fy) * c00 + fy * c10) + fz * ((1.0 - fy) * c01 + fy * c11);
}

}  // namespace

ScalarImage downsample2(const ScalarImage& img) {
    if (img.width < 2 || img.height < 2)
        throw std::invalid_argument("downsample2: image too small");
    const ScalarImage smoothed = gaussian_smooth(img, 1.0);
    ScalarImage out((img.width + 1) / 2, (img.height + 1) / 2);
    out.pixel_pitch = img.pixel_pitch * 2.0;
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = smoothed.at(2 * x, 2 * y);
    return out;
}

ScalarVolume downsample2(const ScalarVolume& vol) {
    if (vol.nx < 2 || vol.ny < 2 || vol.nz < 2)
        throw std::invalid_argument("downsample2: volume too small");
    const ScalarVolume smoothed = gaussian_smooth(vol, 1.0);
    ScalarVolume out((vol.nx + 1) / 2, (vol.ny + 1) / 2, (vol.nz + 1) / 2);
    out.voxel_pitch = vol.voxel_pitch * 2.0;
    for (int z = 0; z < out.nz; ++z)
        for (int y = 0; y < out.ny; ++y)
            for (int x = 0; x < out.nx; ++x) out.at(x, y, z) = smoothed.at(2 * x, 2 * y, 2 * z);
    return out;
}

DisplacementField2 upsample_field(const DisplacementField2& f, int width, int height) {
    DisplacementField2 out(width, height);
    // decimation kept even indices, so fine (x, y) maps to coarse (x/2, y/2);
    // displacement vectors double in fine-pixel units
#pragma omp parallel for schedule(static)
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const size_t i = static_cast<size_t>(y) * width + x;
            out.dx[i] = 2.0 * component_bilinear(f.dx, f.width, f.height, x / 2.0, y / 2.0);
            out.dy[i] = 2.0 * component_bilinear(f.dy, f.width, f.height, x / 2.0, y / 2.0);
        }
    return out;
}

DisplacementField3 upsample_field(const DisplacementField3& f, int nx, int ny, int nz) {
    DisplacementField3 out(nx, ny, nz);
#pragma omp parallel for schedule(static)
    for (int z = 0; z < nz; ++z)
        for (int y = 0; y < ny; ++y)
            for (int x = 0; x < nx; ++x) {
                const size_t i = (static_cast<size_t>(z) * ny + y) * nx + x;
                out.dx[i] = 2.0 * component_trilinear(f.dx, f.nx, f.ny, f.nz, x / 2.0, y / 2.0, z / 2.0);
                out.dy[i] = 2.0 * component_trilinear(f.dy, f.nx, f.ny, f.nz, x / 2.0, y / 2.0, z / 2.0);
                out.dz[i] = 2.0 * component_trilinear(f.dz, f.nx, f.ny, f.nz, x / 2.0, y / 2.0, z / 2.0);
            }
    return out;
}

Objective2 eval_objective(const ScalarImage& m, const ScalarImage& f,
                          const DisplacementField2& phi, const RegConfig& cfg) {
    cfg.validate();
    if (!m.same_shape(f) || phi.width != m.width || phi.height != m.height)
        throw std::invalid_argument("eval_objective: shape mismatch");
    const size_t n = phi.size();
    std::vector<double> flat(2 * n);
    std::copy(phi.dx.begin(), phi.dx.end(), flat.begin());
    std::copy(phi.dy.begin(), phi.dy.end(), flat.begin() + n);
    std::vector<double> grad;
    Objective2 out;
    out.value = eval2(m, f, cfg, flat, &grad);
    out.gradient = DisplacementField2(m.width, m.height);
    std::copy(grad.begin(), grad.begin() + n, out.gradient.dx.begin());
    std::copy(grad.begin() + n, grad.end(), out.gradient.dy.begin());
    return out;
}

Objective3 eval_objective(const ScalarVolume& m, const ScalarVolume& f,
                          const DisplacementField3& phi, const RegConfig& cfg) {
    cfg.validate();
    if (!m.same_shape(f) || phi.nx != m.nx || phi.ny != m.ny || phi.nz != m.nz)
        throw std::invalid_argument("eval_objective: shape mismatch");
    const size_t n = phi.size();
    std::vector<double> flat(3 * n);
    std::copy(phi.dx.begin(), phi.dx.end(), flat.begin());
    std::copy(phi.dy.begin(), phi.dy.end(), flat.begin() + n);
    std::copy(phi.dz.begin(), phi.dz.end(), flat.begin() + 2 * n);
    std::vector<double> grad;
    Objective3 out;
    out.value = eval3(m, f, cfg, flat, &grad);
    out.gradient = DisplacementField3(m.nx, m.ny, m.nz);
    std::copy(grad.begin(), grad.begin() + n, out.gradient.dx.begin());
    std::copy(grad.begin() + n, grad.begin() + 2 * n, out.gradient.dy.begin());
    std::copy(grad.begin() + 2 * n, grad.end(), out.gradient.dz.begin());
    return out;
}

RegResult2 register_2d(const ScalarImage& moving, const ScalarImage& fixed, const RegConfig& cfg) {
    cfg.validate();
    if (!moving.same_shape(fixed)) throw std::invalid_argument("register_2d: dimension mismatch");
    if (!moving.all_finite() || !fixed.all_finite())
        throw std::invalid_argument("register_2d: non-finite input");

    std::vector<ScalarImage> pm, pf;
    pm.push_back(cfg.prefilter_sigma > 0.0 ? gaussian_smooth(moving, cfg.prefilter_sigma) : moving);
    pf.push_back(cfg.prefilter_sigma > 0.0 ? gaussian_smooth(fixed, cfg.prefilter_sigma) : fixed);
    while (static_cast<int>(pm.size()) < cfg.pyramid_levels &&
           (pm.back().width + 1) / 2 >= 8 && (pm.back().height + 1) / 2 >= 8) {
        pm.push_back(downsample2(pm.back()));
        pf.push_back(downsample2(pf.back()));
    }

    RegResult2 res;
    const int levels = static_cast<int>(pm.size());
    DisplacementField2 field(pm[levels - 1].width, pm[levels - 1].height);
    for (int l = levels - 1; l >= 0; --l) {
        const ScalarImage& lm = pm[l];
        const ScalarImage& lf = pf[l];
        const size_t n = static_cast<size_t>(lm.width) * lm.height;
        std::vector<double> phi(2 * n);
        std::copy(field.dx.begin(), field.dx.end(), phi.begin());
        std::copy(field.dy.begin(), field.dy.end(), phi.begin() + n);

        const auto value = [&](const std::vector<double>& p) { return eval2(lm, lf, cfg, p, nullptr); };
        const auto value_grad = [&](const std::vector<double>& p, std::vector<double>& g) {
            return eval2(lm, lf, cfg, p, &g);
        };
        const LevelOutcome oc = optimize_level(phi, value, value_grad, cfg, l, res.trace);

        std::copy(phi.begin(), phi.begin() + n, field.dx.begin());
        std::copy(phi.begin() + n, phi.end(), field.dy.begin());
        res.objective = oc.objective;
        res.converged = oc.converged;
        if (l > 0) field = upsample_field(field, pm[l - 1].width, pm[l - 1].height);
    }
    res.field = std::move(field);
    return res;
}

namespace {

// Field analogue of downsample2: each component is smoothed and decimated on
// its grid, and the vectors themselves are halved to stay in level units.
DisplacementField3 downsample_field(const DisplacementField3& f) {
    ScalarVolume cx(f.nx, f.ny, f.nz), cy(f.nx, f.ny, f.nz), cz(f.nx, f.ny, f.nz);
    cx.data = f.dx;
    cy.data = f.dy;
    cz.data = f.dz;
    const ScalarVolume hx = downsample2(cx), hy = downsample2(cy), hz = downsample2(cz);
    DisplacementField3 out(hx.nx, hx.ny, hx.nz);
    for (size_t i = 0; i < out.dx.size(); ++i) {
        out.dx[i] = 0.5 * hx.data[i];
        out.dy[i] = 0.5 * hy.data[i];
        out.dz[i] = 0.5 * hz.data[i];
    }
    return out;
}

}  // namespace

RegResult3 register_3d_prior(const ScalarVolume& v_prior, const ScalarVolume& v_bp,
                             const RegConfig& cfg, const DisplacementField3* init) {
    cfg.validate();
    if (!v_prior.same_shape(v_bp))
        throw std::invalid_argument("register_3d_prior: dimension mismatch");
    if (!v_prior.all_finite() || !v_bp.all_finite())
        throw std::invalid_argument("register_3d_prior: non-finite input");
    if (std::all_of(v_bp.data.begin(), v_bp.data.end(), [](double v) { return v == 0.0; }))
        throw std::invalid_argument("register_3d_prior: no evidence");
    if (init && (init->nx != v_prior.nx || init->ny != v_prior.ny || init->nz != v_prior.nz))
        throw std::invalid_argument("register_3d_prior: init field dimension mismatch");

    std::vector<ScalarVolume> pm, pf;
    pm.push_back(cfg.prefilter_sigma > 0.0 ? gaussian_smooth(v_prior, cfg.prefilter_sigma)
                                           : v_prior);
    pf.push_back(cfg.prefilter_sigma > 0.0 ? gaussian_smooth(v_bp, cfg.prefilter_sigma) : v_bp);
    while (static_cast<int>(pm.size()) < cfg.pyramid_levels &&
           (pm.back().nx + 1) / 2 >= 8 && (pm.back().ny + 1) / 2 >= 8 &&
           (pm.back().nz + 1) / 2 >= 8) {
        pm.push_back(downsample2(pm.back()));
        pf.push_back(downsample2(pf.back()));
    }

    RegResult3 res;
    const int levels = static_cast<int>(pm.size());
    DisplacementField3 field(pm[levels - 1].nx, pm[levels - 1].ny, pm[levels - 1].nz);
    if (init) {
        DisplacementField3 seed = *init;
        for (int l = 1; l < levels; ++l) seed = downsample_field(seed);
        field = std::move(seed);
    }
    for (int l = levels - 1; l >= 0; --l) {
        const ScalarVolume& lm = pm[l];
        const ScalarVolume& lf = pf[l];
        const size_t n = static_cast<size_t>(lm.nx) * lm.ny * lm.nz;
        std::vector<double> phi(3 * n);
        std::copy(field.dx.begin(), field.dx.end(), phi.begin());
        std::copy(field.dy.begin(), field.dy.end(), phi.begin() + n);
        std::copy(field.dz.begin(), field.dz.end(), phi.begin() + 2 * n);

        const auto value = [&](const std::vector<double>& p) { return eval3(lm, lf, cfg, p, nullptr); };
        const auto value_grad = [&](const std::vector<double>& p, std::vector<double>& g) {
            return eval3(lm, lf, cfg, p, &g);
        };
        const LevelOutcome oc = optimize_level(phi, value, value_grad, cfg, l, res.trace);

        std::copy(phi.begin(), phi.begin() + n, field.dx.begin());
        std::copy(phi.begin() + n, phi.begin() + 2 * n, field.dy.begin());
        std::copy(phi.begin() + 2 * n, phi.end(), field.dz.begin());
        res.objective = oc.objective;
        res.converged = oc.converged;
        if (l > 0) field = upsample_field(field, pm[l - 1].nx, pm[l - 1].ny, pm[l - 1].nz);
    }
    res.field = std::move(field);
    return res;
}

}  // namespace sxt
