// Python bindings for the core operations. Images cross the boundary as
// float64 arrays of shape (height, width), volumes as (nz, ny, nx) with x
// fastest, and polylines as (n, 3) arrays of x, y, z points.

#include <pybind11/pybind11.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "sxt/config.hpp"
#include "sxt/features.hpp"
#include "sxt/interp.hpp"
#include "sxt/metrics.hpp"
#include "sxt/phantom.hpp"
#include "sxt/projector.hpp"
#include "sxt/rasterize.hpp"
#include "sxt/registration.hpp"
#include "sxt/smooth.hpp"
#include "sxt/tracking.hpp"

namespace py = pybind11;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

sxt::ScalarImage image_from_array(const DoubleArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d (height, width) array");
    sxt::ScalarImage img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), img.data.begin());
    return img;
}

py::array_t<double> array_from_image(const sxt::ScalarImage& img) {
    py::array_t<double> a(std::vector<py::ssize_t>{img.height, img.width});
    std::copy(img.data.begin(), img.data.end(), a.mutable_data());
    return a;
}

sxt::ScalarVolume volume_from_array(const DoubleArray& a) {
    if (a.ndim() != 3) throw std::invalid_argument("expected a 3-d (nz, ny, nx) array");
    sxt::ScalarVolume vol(static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)),
                          static_cast<int>(a.shape(0)));
    std::copy(a.data(), a.data() + a.size(), vol.data.begin());
    return vol;
}

py::array_t<double> array_from_volume(const sxt::ScalarVolume& vol) {
    py::array_t<double> a(std::vector<py::ssize_t>{vol.nz, vol.ny, vol.nx});
    std::copy(vol.data.begin(), vol.data.end(), a.mutable_data());
    return a;
}

std::vector<sxt::Vec3> points_from_array(const DoubleArray& a) {
    if (a.ndim() != 2 || a.shape(1) != 3)
        throw std::invalid_argument("expected an (n, 3) array of points");
    std::vector<sxt::Vec3> pts(static_cast<size_t>(a.shape(0)));
    const double* p = a.data();
    for (size_t i = 0; i < pts.size(); ++i) pts[i] = {p[3 * i], p[3 * i + 1], p[3 * i + 2]};
    return pts;
}

py::array_t<double> array_from_points(const std::vector<sxt::Vec3>& pts) {
    py::array_t<double> a(std::vector<py::ssize_t>{static_cast<py::ssize_t>(pts.size()), 3});
    double* p = a.mutable_data();
    for (size_t i = 0; i < pts.size(); ++i) {
        p[3 * i] = pts[i].x;
        p[3 * i + 1] = pts[i].y;
        p[3 * i + 2] = pts[i].z;
    }
    return a;
}

std::vector<sxt::Polyline3> lines_from_list(const std::vector<DoubleArray>& arrays,
                                            double radius) {
    std::vector<sxt::Polyline3> lines;
    lines.reserve(arrays.size());
    for (const DoubleArray& a : arrays) {
        sxt::Polyline3 line;
        line.points = points_from_array(a);
        line.radius = radius;
        line.validate();
        lines.push_back(std::move(line));
    }
    return lines;
}

py::list list_from_lines(const std::vector<sxt::Polyline3>& lines) {
    py::list out;
    for (const sxt::Polyline3& line : lines) out.append(array_from_points(line.points));
    return out;
}

sxt::Similarity similarity_from_string(const std::string& s) {
    if (s == "ssd") return sxt::Similarity::SSD;
    if (s == "ncc") return sxt::Similarity::NCC;
    throw std::invalid_argument("unknown similarity: " + s);
}

sxt::RegConfig make_reg_config(const std::string& similarity, double lambda, int pyramid_levels,
                               int max_iterations, double step_size, double tolerance,
                               double prefilter_sigma) {
    sxt::RegConfig cfg;
    cfg.similarity = similarity_from_string(similarity);
    cfg.lambda = lambda;
    cfg.pyramid_levels = pyramid_levels;
    cfg.max_iterations = max_iterations;
    cfg.step_size = step_size;
    cfg.tolerance = tolerance;
    cfg.prefilter_sigma = prefilter_sigma;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "stereo x-ray tomography simulation and line-fiducial tracking core";

    py::class_<sxt::StereoGeometry>(m, "StereoGeometry")
        .def(py::init<>())
        .def_readwrite("source_object_distance", &sxt::StereoGeometry::source_object_distance)
        .def_readwrite("object_detector_distance", &sxt::StereoGeometry::object_detector_distance)
        .def_readwrite("detector_width", &sxt::StereoGeometry::detector_width)
        .def_readwrite("detector_height", &sxt::StereoGeometry::detector_height)
        .def_readwrite("detector_pitch", &sxt::StereoGeometry::detector_pitch)
        .def_readwrite("view_angles_deg", &sxt::StereoGeometry::view_angles_deg)
        .def("magnification", &sxt::StereoGeometry::magnification)
        .def("validate", &sxt::StereoGeometry::validate);

    m.def("desk_geometry", []() { return sxt::desk_scale_config().geometry; },
          "Geometry of the desk-scale preset (64^2 detector, magnification 2).");

    m.def(
        "generate_phantom",
        [](int nx, int ny, int nz, int n_lines, int n_ellipsoids, uint64_t seed) {
            sxt::PhantomSpec spec;
            spec.nx = nx;
            spec.ny = ny;
            spec.nz = nz;
            spec.n_lines = n_lines;
            spec.n_ellipsoids = n_ellipsoids;
            spec.seed = seed;
            spec.validate();
            const sxt::Phantom ph = sxt::gen_start_volume(spec);
            return py::make_tuple(array_from_volume(ph.volume), list_from_lines(ph.lines));
        },
        py::arg("nx"), py::arg("ny"), py::arg("nz"), py::arg("n_lines") = 5,
        py::arg("n_ellipsoids") = 10, py::arg("seed") = 1,
        "Random ellipsoid background plus straight line fiducials; returns (volume, lines).");

    m.def(
        "forward_project",
        [](const DoubleArray& vol, const sxt::StereoGeometry& geom, int view, double step) {
            return array_from_image(sxt::forward_project(volume_from_array(vol), geom, view, step));
        },
        py::arg("volume"), py::arg("geometry"), py::arg("view"), py::arg("step") = 0.5);

    m.def(
        "back_project",
        [](const DoubleArray& img, const sxt::StereoGeometry& geom, int view, int nx, int ny,
           int nz, bool filtered, bool weighted) {
            return array_from_volume(sxt::back_project(image_from_array(img), geom, view, nx, ny,
                                                       nz, filtered, weighted));
        },
        py::arg("image"), py::arg("geometry"), py::arg("view"), py::arg("nx"), py::arg("ny"),
        py::arg("nz"), py::arg("filtered") = false, py::arg("weighted") = true);

    m.def(
        "make_bp_evidence",
        [](const DoubleArray& feat0, const DoubleArray& feat1, const sxt::StereoGeometry& geom,
           int nx, int ny, int nz) {
            const sxt::BpEvidence ev = sxt::make_bp_evidence(
                image_from_array(feat0), image_from_array(feat1), geom, nx, ny, nz);
            return py::make_tuple(array_from_volume(ev.volume), ev.has_evidence);
        },
        py::arg("feat0"), py::arg("feat1"), py::arg("geometry"), py::arg("nx"), py::arg("ny"),
        py::arg("nz"));

    m.def(
        "register_2d",
        [](const DoubleArray& moving, const DoubleArray& fixed, const std::string& similarity,
           double lambda, int pyramid_levels, int max_iterations, double step_size,
           double tolerance, double prefilter_sigma) {
            const sxt::RegConfig cfg =
                make_reg_config(similarity, lambda, pyramid_levels, max_iterations, step_size,
                                tolerance, prefilter_sigma);
            const sxt::ScalarImage m_img = image_from_array(moving);
            const sxt::RegResult2 res = sxt::register_2d(m_img, image_from_array(fixed), cfg);
            sxt::ScalarImage dx(res.field.width, res.field.height), dy(res.field.width,
                                                                       res.field.height);
            dx.data = res.field.dx;
            dy.data = res.field.dy;
            py::dict out;
            out["dx"] = array_from_image(dx);
            out["dy"] = array_from_image(dy);
            out["moved"] = array_from_image(sxt::warp_image(m_img, res.field));
            out["objective"] = res.objective;
            out["converged"] = res.converged;
            return out;
        },
        py::arg("moving"), py::arg("fixed"), py::arg("similarity") = "ssd",
        py::arg("lambda_") = 0.1, py::arg("pyramid_levels") = 3, py::arg("max_iterations") = 100,
        py::arg("step_size") = 2.0, py::arg("tolerance") = 1e-6,
        py::arg("prefilter_sigma") = 0.0);

    m.def(
        "register_3d_prior",
        [](const DoubleArray& prior, const DoubleArray& evidence, const std::string& similarity,
           double lambda, int pyramid_levels, int max_iterations, double step_size,
           double tolerance, double prefilter_sigma, py::object init_dx, py::object init_dy,
           py::object init_dz) {
            const sxt::RegConfig cfg =
                make_reg_config(similarity, lambda, pyramid_levels, max_iterations, step_size,
                                tolerance, prefilter_sigma);
            const sxt::ScalarVolume prior_vol = volume_from_array(prior);
            sxt::DisplacementField3 init;
            const bool has_init = !init_dx.is_none();
            if (has_init) {
                const sxt::ScalarVolume ix = volume_from_array(init_dx.cast<DoubleArray>());
                const sxt::ScalarVolume iy = volume_from_array(init_dy.cast<DoubleArray>());
                const sxt::ScalarVolume iz = volume_from_array(init_dz.cast<DoubleArray>());
                init = sxt::DisplacementField3(ix.nx, ix.ny, ix.nz);
                init.dx = ix.data;
                init.dy = iy.data;
                init.dz = iz.data;
            }
            const sxt::RegResult3 res = sxt::register_3d_prior(
                prior_vol, volume_from_array(evidence), cfg, has_init ? &init : nullptr);
            sxt::ScalarVolume dx(res.field.nx, res.field.ny, res.field.nz);
            sxt::ScalarVolume dy = dx, dz = dx;
            dx.data = res.field.dx;
            dy.data = res.field.dy;
            dz.data = res.field.dz;
            py::dict out;
            out["dx"] = array_from_volume(dx);
            out["dy"] = array_from_volume(dy);
            out["dz"] = array_from_volume(dz);
            out["moved"] = array_from_volume(sxt::warp_volume(prior_vol, res.field));
            out["objective"] = res.objective;
            out["converged"] = res.converged;
            return out;
        },
        py::arg("prior"), py::arg("evidence"), py::arg("similarity") = "ncc",
        py::arg("lambda_") = 0.05, py::arg("pyramid_levels") = 3, py::arg("max_iterations") = 80,
        py::arg("step_size") = 2.0, py::arg("tolerance") = 1e-6,
        py::arg("prefilter_sigma") = 0.0, py::arg("init_dx") = py::none(),
        py::arg("init_dy") = py::none(), py::arg("init_dz") = py::none());

    m.def(
        "detect_features_2d",
        [](const DoubleArray& img, double marker_radius_px, int n_orientations) {
            const sxt::FeatureMap2 fm = sxt::detect_features_2d(image_from_array(img),
                                                                marker_radius_px, n_orientations);
            return py::make_tuple(array_from_image(fm.score), fm.threshold);
        },
        py::arg("image"), py::arg("marker_radius_px") = 1.2, py::arg("n_orientations") = 8);

    m.def(
        "extract_polylines",
        [](const DoubleArray& score, double threshold, int expected_count, double point_radius) {
            const sxt::PolylineExtraction ex = sxt::extract_polylines(
                volume_from_array(score), threshold, expected_count, point_radius);
            return py::make_tuple(list_from_lines(ex.lines), ex.n_components,
                                  ex.short_of_expected);
        },
        py::arg("score"), py::arg("threshold"), py::arg("expected_count") = -1,
        py::arg("point_radius") = 1.0);

    m.def(
        "rasterize_polylines",
        [](const std::vector<DoubleArray>& lines, int nx, int ny, int nz, double radius) {
            return array_from_volume(
                sxt::rasterize_polylines(lines_from_list(lines, radius), nx, ny, nz));
        },
        py::arg("lines"), py::arg("nx"), py::arg("ny"), py::arg("nz"), py::arg("radius") = 1.2);

    m.def(
        "warp_image",
        [](const DoubleArray& img, const DoubleArray& dx, const DoubleArray& dy) {
            const sxt::ScalarImage base = image_from_array(img);
            const sxt::ScalarImage fdx = image_from_array(dx);
            const sxt::ScalarImage fdy = image_from_array(dy);
            sxt::DisplacementField2 phi(base.width, base.height);
            phi.dx = fdx.data;
            phi.dy = fdy.data;
            return array_from_image(sxt::warp_image(base, phi));
        },
        py::arg("image"), py::arg("dx"), py::arg("dy"));

    m.def(
        "warp_volume",
        [](const DoubleArray& vol, const DoubleArray& dx, const DoubleArray& dy,
           const DoubleArray& dz) {
            const sxt::ScalarVolume base = volume_from_array(vol);
            sxt::DisplacementField3 phi(base.nx, base.ny, base.nz);
            phi.dx = volume_from_array(dx).data;
            phi.dy = volume_from_array(dy).data;
            phi.dz = volume_from_array(dz).data;
            return array_from_volume(sxt::warp_volume(base, phi));
        },
        py::arg("volume"), py::arg("dx"), py::arg("dy"), py::arg("dz"));

    m.def(
        "add_poisson_noise",
        [](const DoubleArray& img, double scale, uint64_t seed, uint64_t stream_index) {
            return array_from_image(
                sxt::add_poisson_noise(image_from_array(img), scale, seed, stream_index));
        },
        py::arg("image"), py::arg("scale"), py::arg("seed"), py::arg("stream_index") = 0);

    m.def(
        "chamfer_distance",
        [](const DoubleArray& a, const DoubleArray& b) {
            return sxt::chamfer_distance(points_from_array(a), points_from_array(b));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "roc_curve",
        [](const DoubleArray& scores, const DoubleArray& truth) {
            if (scores.size() != truth.size())
                throw std::invalid_argument("scores and truth must have the same size");
            std::vector<double> s(scores.data(), scores.data() + scores.size());
            std::vector<uint8_t> t(static_cast<size_t>(truth.size()));
            for (py::ssize_t i = 0; i < truth.size(); ++i)
                t[static_cast<size_t>(i)] = truth.data()[i] > 0.5 ? 1 : 0;
            const sxt::RocCurve roc = sxt::roc_curve(s, t);
            py::array_t<double> thr(static_cast<py::ssize_t>(roc.points.size()));
            py::array_t<double> tpr(static_cast<py::ssize_t>(roc.points.size()));
            py::array_t<double> fpr(static_cast<py::ssize_t>(roc.points.size()));
            for (size_t i = 0; i < roc.points.size(); ++i) {
                thr.mutable_data()[i] = roc.points[i].threshold;
                tpr.mutable_data()[i] = roc.points[i].tpr;
                fpr.mutable_data()[i] = roc.points[i].fpr;
            }
            return py::make_tuple(thr, tpr, fpr, roc.auc);
        },
        py::arg("scores"), py::arg("truth"));

    m.def(
        "gaussian_smooth",
        [](const DoubleArray& a, double sigma) -> py::object {
            if (a.ndim() == 2)
                return array_from_image(sxt::gaussian_smooth(image_from_array(a), sigma));
            if (a.ndim() == 3)
                return array_from_volume(sxt::gaussian_smooth(volume_from_array(a), sigma));
            throw std::invalid_argument("expected a 2-d or 3-d array");
        },
        py::arg("array"), py::arg("sigma"));

    m.def(
        "eval_objective_2d",
        [](const DoubleArray& moving, const DoubleArray& fixed, const DoubleArray& dx,
           const DoubleArray& dy, const std::string& similarity, double lambda) {
            sxt::RegConfig cfg;
            cfg.similarity = similarity_from_string(similarity);
            cfg.lambda = lambda;
            const sxt::ScalarImage m_img = image_from_array(moving);
            sxt::DisplacementField2 phi(m_img.width, m_img.height);
            phi.dx = image_from_array(dx).data;
            phi.dy = image_from_array(dy).data;
            const sxt::Objective2 obj =
                sxt::eval_objective(m_img, image_from_array(fixed), phi, cfg);
            sxt::ScalarImage gx(m_img.width, m_img.height), gy(m_img.width, m_img.height);
            gx.data = obj.gradient.dx;
            gy.data = obj.gradient.dy;
            return py::make_tuple(obj.value, array_from_image(gx), array_from_image(gy));
        },
        py::arg("moving"), py::arg("fixed"), py::arg("dx"), py::arg("dy"),
        py::arg("similarity") = "ssd", py::arg("lambda_") = 0.1);

    m.def(
        "eval_objective_3d",
        [](const DoubleArray& moving, const DoubleArray& fixed, const DoubleArray& dx,
           const DoubleArray& dy, const DoubleArray& dz, const std::string& similarity,
           double lambda) {
            sxt::RegConfig cfg;
            cfg.similarity = similarity_from_string(similarity);
            cfg.lambda = lambda;
            const sxt::ScalarVolume m_vol = volume_from_array(moving);
            sxt::DisplacementField3 phi(m_vol.nx, m_vol.ny, m_vol.nz);
            phi.dx = volume_from_array(dx).data;
            phi.dy = volume_from_array(dy).data;
            phi.dz = volume_from_array(dz).data;
            const sxt::Objective3 obj =
                sxt::eval_objective(m_vol, volume_from_array(fixed), phi, cfg);
            sxt::ScalarVolume gx(m_vol.nx, m_vol.ny, m_vol.nz);
            sxt::ScalarVolume gy = gx, gz = gx;
            gx.data = obj.gradient.dx;
            gy.data = obj.gradient.dy;
            gz.data = obj.gradient.dz;
            return py::make_tuple(obj.value, array_from_volume(gx), array_from_volume(gy),
                                  array_from_volume(gz));
        },
        py::arg("moving"), py::arg("fixed"), py::arg("dx"), py::arg("dy"), py::arg("dz"),
        py::arg("similarity") = "ncc", py::arg("lambda_") = 0.05);

    m.def(
        "track_frame",
        [](const DoubleArray& prior_volume, const std::vector<DoubleArray>& prior_lines,
           const DoubleArray& noisy0, const DoubleArray& noisy1,
           const sxt::StereoGeometry& geom, double line_radius) {
            sxt::TrackingConfigs cfgs;
            const sxt::FrameResult res = sxt::track_frame(
                volume_from_array(prior_volume), lines_from_list(prior_lines, line_radius),
                {image_from_array(noisy0), image_from_array(noisy1)}, geom, cfgs);
            py::dict out;
            out["lines"] = list_from_lines(res.lines);
            out["moved0"] = array_from_image(res.moved[0]);
            out["moved1"] = array_from_image(res.moved[1]);
            out["evidence"] = array_from_volume(res.evidence);
            return out;
        },
        py::arg("prior_volume"), py::arg("prior_lines"), py::arg("noisy0"), py::arg("noisy1"),
        py::arg("geometry"), py::arg("line_radius") = 1.2,
        "One tracked frame with the prior given as a volume plus its line positions.");
}
