#include "sxt/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "sxt/io.hpp"
#include "sxt/rng.hpp"

namespace sxt {

using nlohmann::json;

TrackingConfigs ExperimentConfig::tracking_configs() const {
    TrackingConfigs t;
    t.reg2d = reg2d;
    t.reg3d = reg3d;
    t.marker_radius_px = marker_radius_px;
    t.detector_orientations = detector_orientations;
    t.prior_smooth_sigma = prior_smooth_sigma;
    return t;
}

void ExperimentConfig::validate() const {
    phantom.validate();
    deformation.validate(std::min({phantom.nx, phantom.ny, phantom.nz}));
    geometry.validate();
    if (!(noise.clean_scale > 0.0) || !(noise.noisy_scale > 0.0))
        throw std::invalid_argument("config: noise scales must be > 0");
    reg2d.validate();
    reg3d.validate();
    if (!(marker_radius_px > 0.0))
        throw std::invalid_argument("config: marker_radius_px must be > 0");
    if (detector_orientations < 8)
        throw std::invalid_argument("config: detector_orientations must be >= 8");
    if (prior_smooth_sigma < 0.0)
        throw std::invalid_argument("config: prior_smooth_sigma must be >= 0");
    if (strategy != "both" && strategy != "start_frame_prior" && strategy != "chained_prior")
        throw std::invalid_argument("config: strategy must be start_frame_prior, chained_prior, or both");
    if (!(eval.max_chamfer > 0.0) || !(eval.min_auc > 0.0) || eval.min_auc > 1.0 ||
        !(eval.max_err2d_px > 0.0))
        throw std::invalid_argument("config: bad eval thresholds");
    if (output_dir.empty()) throw std::invalid_argument("config: output_dir must not be empty");
}

void derive_seeds(ExperimentConfig& cfg) {
    cfg.phantom.seed = derive_stream_key(cfg.master_seed, "seed/phantom", 0);
    cfg.deformation.seed = derive_stream_key(cfg.master_seed, "seed/deformation", 0);
}

ExperimentConfig desk_scale_config() {
    ExperimentConfig cfg;
    cfg.phantom.nx = cfg.phantom.ny = cfg.phantom.nz = 64;
    cfg.geometry.source_object_distance = 128.0;
    cfg.geometry.object_detector_distance = 128.0;
    cfg.geometry.detector_width = 64;
    cfg.geometry.detector_height = 64;
    cfg.geometry.detector_pitch = 2.0;
    cfg.reg2d.similarity = Similarity::SSD;
    cfg.reg2d.lambda = 0.1;
    cfg.reg2d.prefilter_sigma = 1.0;
    cfg.reg3d.similarity = Similarity::NCC;
    cfg.reg3d.lambda = 0.05;
    cfg.reg3d.max_iterations = 80;
    derive_seeds(cfg);
    return cfg;
}

ExperimentConfig paper_scale_config() {
    ExperimentConfig cfg = desk_scale_config();
    cfg.phantom.nx = cfg.phantom.ny = cfg.phantom.nz = 256;
    cfg.geometry.source_object_distance = 512.0;
    cfg.geometry.object_detector_distance = 512.0;
    cfg.geometry.detector_width = 256;
    cfg.geometry.detector_height = 256;
    cfg.geometry.detector_pitch = 2.0;
    derive_seeds(cfg);
    return cfg;
}

ExperimentConfig apply_scale(ExperimentConfig cfg, const std::string& scale) {
    const ExperimentConfig preset =
        scale == "desk" ? desk_scale_config()
                        : (scale == "paper" ? paper_scale_config()
                                            : throw std::invalid_argument("unknown scale: " + scale));
    cfg.phantom.nx = preset.phantom.nx;
    cfg.phantom.ny = preset.phantom.ny;
    cfg.phantom.nz = preset.phantom.nz;
    cfg.geometry = preset.geometry;
    derive_seeds(cfg);
    return cfg;
}

namespace {

std::string similarity_to_string(Similarity s) { return s == Similarity::SSD ? "ssd" : "ncc"; }

Similarity similarity_from_string(const std::string& s) {
    if (s == "ssd") return Similarity::SSD;
    if (s == "ncc") return Similarity::NCC;
    throw std::invalid_argument("unknown similarity: " + s);
}

json reg_to_json(const RegConfig& r) {
    return json{{"similarity", similarity_to_string(r.similarity)},
                {"lambda", r.lambda},
                {"pyramid_levels", r.pyramid_levels},
                {"max_iterations", r.max_iterations},
                {"step_size", r.step_size},
                {"backtrack_factor", r.backtrack_factor},
                {"tolerance", r.tolerance},
                {"prefilter_sigma", r.prefilter_sigma}};
}

void check_keys(const json& j, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::invalid_argument("config: section '" + section + "' must be an object");
    for (const auto& item : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* k) {
                return item.key() == k;
            }) == allowed.end())
            throw std::invalid_argument("config: unknown key '" + item.key() + "' in section '" +
                                        section + "'");
    }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void reg_from_json(const json& j, const std::string& section, RegConfig& r) {
    check_keys(j, section,
               {"similarity", "lambda", "pyramid_levels", "max_iterations", "step_size",
                "backtrack_factor", "tolerance", "prefilter_sigma"});
    if (j.contains("similarity"))
        r.similarity = similarity_from_string(j.at("similarity").get<std::string>());
    maybe(j, "lambda", r.lambda);
    maybe(j, "pyramid_levels", r.pyramid_levels);
    maybe(j, "max_iterations", r.max_iterations);
    maybe(j, "step_size", r.step_size);
    maybe(j, "backtrack_factor", r.backtrack_factor);
    maybe(j, "tolerance", r.tolerance);
    maybe(j, "prefilter_sigma", r.prefilter_sigma);
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
    json j{
        {"master_seed", cfg.master_seed},
        {"output_dir", cfg.output_dir},
        {"strategy", cfg.strategy},
        {"phantom",
         {{"dims", {cfg.phantom.nx, cfg.phantom.ny, cfg.phantom.nz}},
          {"n_lines", cfg.phantom.n_lines},
          {"n_ellipsoids", cfg.phantom.n_ellipsoids},
          {"line_radius", cfg.phantom.line_radius},
          {"line_intensity", cfg.phantom.line_intensity},
          {"ellipsoid_intensity", {cfg.phantom.ellipsoid_intensity_min, cfg.phantom.ellipsoid_intensity_max}},
          {"line_region_frac", cfg.phantom.line_region_frac},
          {"ellipsoid_center_frac", cfg.phantom.ellipsoid_center_frac},
          {"min_projected_separation", cfg.phantom.min_projected_separation}}},
        {"deformation",
         {{"sigma", cfg.deformation.sigma},
          {"amplitude", cfg.deformation.amplitude},
          {"line_magnitude", {cfg.deformation.line_magnitude_min, cfg.deformation.line_magnitude_max}},
          {"min_projected_separation", cfg.deformation.min_projected_separation},
          {"n_frames", cfg.deformation.n_frames}}},
        {"geometry",
         {{"source_object_distance", cfg.geometry.source_object_distance},
          {"object_detector_distance", cfg.geometry.object_detector_distance},
          {"detector", {cfg.geometry.detector_width, cfg.geometry.detector_height}},
          {"detector_pitch", cfg.geometry.detector_pitch},
          {"view_angles_deg", {cfg.geometry.view_angles_deg[0], cfg.geometry.view_angles_deg[1]}}}},
        {"noise", {{"clean_scale", cfg.noise.clean_scale}, {"noisy_scale", cfg.noise.noisy_scale}}},
        {"reg2d", reg_to_json(cfg.reg2d)},
        {"reg3d", reg_to_json(cfg.reg3d)},
        {"detection",
         {{"marker_radius_px", cfg.marker_radius_px},
          {"orientations", cfg.detector_orientations}}},
        {"tracking", {{"prior_smooth_sigma", cfg.prior_smooth_sigma}}},
        {"eval",
         {{"max_chamfer", cfg.eval.max_chamfer},
          {"min_auc", cfg.eval.min_auc},
          {"max_err2d_px", cfg.eval.max_err2d_px}}},
    };
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: parse error: ") + e.what());
    }
    check_keys(j, "root",
               {"master_seed", "output_dir", "strategy", "phantom", "deformation", "geometry",
                "noise", "reg2d", "reg3d", "detection", "tracking", "eval"});

    ExperimentConfig cfg = desk_scale_config();
    maybe(j, "master_seed", cfg.master_seed);
    maybe(j, "output_dir", cfg.output_dir);
    maybe(j, "strategy", cfg.strategy);

    if (j.contains("phantom")) {
        const json& p = j.at("phantom");
        check_keys(p, "phantom",
                   {"dims", "n_lines", "n_ellipsoids", "line_radius", "line_intensity",
                    "ellipsoid_intensity", "line_region_frac", "ellipsoid_center_frac",
                    "min_projected_separation"});
        if (p.contains("dims")) {
            const auto d = p.at("dims");
            if (!d.is_array() || d.size() != 3)
                throw std::invalid_argument("config: phantom.dims must have 3 entries");
            cfg.phantom.nx = d.at(0).get<int>();
            cfg.phantom.ny = d.at(1).get<int>();
            cfg.phantom.nz = d.at(2).get<int>();
        }
        maybe(p, "n_lines", cfg.phantom.n_lines);
        maybe(p, "n_ellipsoids", cfg.phantom.n_ellipsoids);
        maybe(p, "line_radius", cfg.phantom.line_radius);
        maybe(p, "line_intensity", cfg.phantom.line_intensity);
        if (p.contains("ellipsoid_intensity")) {
            const auto r = p.at("ellipsoid_intensity");
            if (!r.is_array() || r.size() != 2)
                throw std::invalid_argument("config: phantom.ellipsoid_intensity must have 2 entries");
            cfg.phantom.ellipsoid_intensity_min = r.at(0).get<double>();
            cfg.phantom.ellipsoid_intensity_max = r.at(1).get<double>();
        }
        maybe(p, "line_region_frac", cfg.phantom.line_region_frac);
        maybe(p, "ellipsoid_center_frac", cfg.phantom.ellipsoid_center_frac);
        maybe(p, "min_projected_separation", cfg.phantom.min_projected_separation);
    }

    if (j.contains("deformation")) {
        const json& d = j.at("deformation");
        check_keys(d, "deformation",
                   {"sigma", "amplitude", "line_magnitude", "min_projected_separation",
                    "n_frames"});
        maybe(d, "sigma", cfg.deformation.sigma);
        maybe(d, "amplitude", cfg.deformation.amplitude);
        if (d.contains("line_magnitude")) {
            const auto r = d.at("line_magnitude");
            if (!r.is_array() || r.size() != 2)
                throw std::invalid_argument("config: deformation.line_magnitude must have 2 entries");
            cfg.deformation.line_magnitude_min = r.at(0).get<double>();
            cfg.deformation.line_magnitude_max = r.at(1).get<double>();
        }
        maybe(d, "min_projected_separation", cfg.deformation.min_projected_separation);
        maybe(d, "n_frames", cfg.deformation.n_frames);
    }

    if (j.contains("geometry")) {
        const json& g = j.at("geometry");
        check_keys(g, "geometry",
                   {"source_object_distance", "object_detector_distance", "detector",
                    "detector_pitch", "view_angles_deg"});
        maybe(g, "source_object_distance", cfg.geometry.source_object_distance);
        maybe(g, "object_detector_distance", cfg.geometry.object_detector_distance);
        if (g.contains("detector")) {
            const auto d = g.at("detector");
            if (!d.is_array() || d.size() != 2)
                throw std::invalid_argument("config: geometry.detector must have 2 entries");
            cfg.geometry.detector_width = d.at(0).get<int>();
            cfg.geometry.detector_height = d.at(1).get<int>();
        }
        maybe(g, "detector_pitch", cfg.geometry.detector_pitch);
        if (g.contains("view_angles_deg")) {
            const auto a = g.at("view_angles_deg");
            if (!a.is_array() || a.size() != 2)
                throw std::invalid_argument("config: geometry.view_angles_deg must have 2 entries");
            cfg.geometry.view_angles_deg[0] = a.at(0).get<double>();
            cfg.geometry.view_angles_deg[1] = a.at(1).get<double>();
        }
    }

    if (j.contains("noise")) {
        const json& n = j.at("noise");
        check_keys(n, "noise", {"clean_scale", "noisy_scale"});
        maybe(n, "clean_scale", cfg.noise.clean_scale);
        maybe(n, "noisy_scale", cfg.noise.noisy_scale);
    }

    if (j.contains("reg2d")) reg_from_json(j.at("reg2d"), "reg2d", cfg.reg2d);
    if (j.contains("reg3d")) reg_from_json(j.at("reg3d"), "reg3d", cfg.reg3d);

    if (j.contains("detection")) {
        const json& d = j.at("detection");
        check_keys(d, "detection", {"marker_radius_px", "orientations"});
        maybe(d, "marker_radius_px", cfg.marker_radius_px);
        maybe(d, "orientations", cfg.detector_orientations);
    }

    if (j.contains("tracking")) {
        const json& t = j.at("tracking");
        check_keys(t, "tracking", {"prior_smooth_sigma"});
        maybe(t, "prior_smooth_sigma", cfg.prior_smooth_sigma);
    }

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        check_keys(e, "eval", {"max_chamfer", "min_auc", "max_err2d_px"});
        maybe(e, "max_chamfer", cfg.eval.max_chamfer);
        maybe(e, "min_auc", cfg.eval.min_auc);
        maybe(e, "max_err2d_px", cfg.eval.max_err2d_px);
    }

    derive_seeds(cfg);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json(text);
}

void save_config_file(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    out << config_to_json(cfg);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string text = config_to_json(cfg);
    return fnv1a64(std::as_bytes(std::span<const char>(text.data(), text.size())));
}

}  // namespace sxt
