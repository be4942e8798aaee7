#include "cathtrack/config.hpp"

#include <fstream>

namespace cathtrack {

namespace {

void expect_type(const Json& j, const std::string& type) {
    require(j.is_object(), ErrorCode::config, "config: expected a JSON object");
    require(j.contains("type") && j["type"] == type, ErrorCode::config,
            "config: expected \"type\": \"" + type + "\"");
}

template <typename T>
T field(const Json& j, const std::string& key) {
    require(j.contains(key), ErrorCode::config, "config: missing field \"" + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        fail(ErrorCode::config, "config: field \"" + key + "\" has the wrong type");
    }
}

template <typename T>
T field_or(const Json& j, const std::string& key, const T& fallback) {
    if (!j.contains(key)) return fallback;
    return field<T>(j, key);
}

Eigen::VectorXd vector_field(const Json& j, const std::string& key) {
    const auto values = field<std::vector<double>>(j, key);
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

Json matrix_to_json(const Mat3& m) {
    Json rows = Json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

Mat3 matrix_from_json(const Json& j, const std::string& key) {
    const auto rows = field<std::vector<std::vector<double>>>(j, key);
    require(rows.size() == 3 && rows[0].size() == 3 && rows[1].size() == 3 && rows[2].size() == 3,
            ErrorCode::config, "config: \"" + key + "\" must be a 3x3 matrix");
    Mat3 m;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

}  // namespace

Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open file: " + path);
    try {
        Json j;
        in >> j;
        return j;
    } catch (const Json::exception& e) {
        fail(ErrorCode::config, "invalid JSON in " + path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::io, "cannot write file: " + path);
    out << j.dump(2) << "\n";
}

Json design_to_json(const CatheterDesign& design) {
    Json j;
    j["type"] = "catheter_design";
    j["length_mm"] = design.length;
    j["radius_mm"] = design.radius;
    j["base_band_offset_mm"] = design.base_band_offset;
    j["band_width_mm"] = design.band_width;
    j["marker_diameter_mm"] = design.marker_diameter;
    j["markers"] = {{"explicit", {{"arclengths_mm", to_std(design.marker_arclengths)},
                                  {"angles_rad", to_std(design.marker_angles)}}}};
    return j;
}

CatheterDesign design_from_json(const Json& j) {
    expect_type(j, "catheter_design");
    CatheterDesign design;
    design.length = field<double>(j, "length_mm");
    design.radius = field<double>(j, "radius_mm");
    design.base_band_offset = field_or<double>(j, "base_band_offset_mm", 3.0);
    design.band_width = field_or<double>(j, "band_width_mm", 2.0);
    design.marker_diameter = field_or<double>(j, "marker_diameter_mm", 1.5);

    const Json markers = field<Json>(j, "markers");
    if (markers.contains("helix")) {
        const Json hj = markers["helix"];
        HelixSpec helix;
        helix.pitch = field<double>(hj, "pitch_mm_per_rad");
        helix.angular_spacing = field<double>(hj, "angular_spacing_rad");
        helix.start_angle = field_or<double>(hj, "start_angle_rad", 0.0);
        return build_helical_design(design.length, design.radius, field<int>(hj, "count"), helix);
    }
    require(markers.contains("explicit"), ErrorCode::config,
            "config: markers must contain \"helix\" or \"explicit\"");
    const Json ej = markers["explicit"];
    design.marker_arclengths = vector_field(ej, "arclengths_mm");
    design.marker_angles = vector_field(ej, "angles_rad");
    design.validate();
    return design;
}

Json geometry_to_json(const BiplaneGeometry& geom) {
    Json j;
    j["type"] = "biplane_geometry";
    j["pixel_scale_mm"] = geom.pixel_scale;
    j["front_rotation"] = matrix_to_json(geom.front_rotation);
    j["side_rotation"] = matrix_to_json(geom.side_rotation);
    return j;
}

BiplaneGeometry geometry_from_json(const Json& j) {
    expect_type(j, "biplane_geometry");
    BiplaneGeometry geom = BiplaneGeometry::canonical(field_or<double>(j, "pixel_scale_mm", 0.35));
    if (!field_or<bool>(j, "canonical", false)) {
        geom.front_rotation = matrix_from_json(j, "front_rotation");
        geom.side_rotation = matrix_from_json(j, "side_rotation");
    }
    geom.validate();
    return geom;
}

Json estimator_to_json(const EstimatorConfig& cfg) {
    Json j;
    j["type"] = "estimator";
    j["tip_weight"] = cfg.tip_weight;
    j["intermediate_weight"] = cfg.intermediate_weight;
    j["zeta_c"] = cfg.zeta_c;
    j["zeta_sigma"] = cfg.zeta_sigma;
    if (cfg.prior_coeffs)
        j["prior_coeffs"] = to_std(*cfg.prior_coeffs);
    else
        j["prior_coeffs"] = nullptr;
    if (cfg.prior_sigma)
        j["prior_sigma_rad"] = *cfg.prior_sigma;
    else
        j["prior_sigma_rad"] = nullptr;
    j["eps_c"] = cfg.eps_c;
    j["eps_sigma"] = cfg.eps_sigma;
    j["max_outer_iterations"] = cfg.max_outer_iterations;
    j["max_inner_iterations"] = cfg.max_inner_iterations;
    j["gradient_tolerance"] = cfg.gradient_tolerance;
    j["fd_step"] = cfg.fd_step;
    j["integration_step_mm"] = cfg.integration_step;
    j["roll_multistart"] = cfg.roll_multistart;
    j["base_frame_roll_rad"] = cfg.base_frame_roll;
    return j;
}

EstimatorConfig estimator_from_json(const Json& j) {
    expect_type(j, "estimator");
    EstimatorConfig cfg;
    cfg.tip_weight = field_or<double>(j, "tip_weight", cfg.tip_weight);
    cfg.intermediate_weight = field_or<double>(j, "intermediate_weight", cfg.intermediate_weight);
    cfg.zeta_c = field_or<double>(j, "zeta_c", cfg.zeta_c);
    cfg.zeta_sigma = field_or<double>(j, "zeta_sigma", cfg.zeta_sigma);
    if (j.contains("prior_coeffs") && !j["prior_coeffs"].is_null())
        cfg.prior_coeffs = vector_field(j, "prior_coeffs");
    if (j.contains("prior_sigma_rad") && !j["prior_sigma_rad"].is_null())
        cfg.prior_sigma = field<double>(j, "prior_sigma_rad");
    cfg.eps_c = field_or<double>(j, "eps_c", cfg.eps_c);
    cfg.eps_sigma = field_or<double>(j, "eps_sigma", cfg.eps_sigma);
    cfg.max_outer_iterations = field_or<int>(j, "max_outer_iterations", cfg.max_outer_iterations);
    cfg.max_inner_iterations = field_or<int>(j, "max_inner_iterations", cfg.max_inner_iterations);
    cfg.gradient_tolerance = field_or<double>(j, "gradient_tolerance", cfg.gradient_tolerance);
    cfg.fd_step = field_or<double>(j, "fd_step", cfg.fd_step);
    cfg.integration_step = field_or<double>(j, "integration_step_mm", cfg.integration_step);
    cfg.roll_multistart = field_or<int>(j, "roll_multistart", cfg.roll_multistart);
    cfg.base_frame_roll = field_or<double>(j, "base_frame_roll_rad", cfg.base_frame_roll);
    cfg.validate();
    return cfg;
}

Json study_to_json(const StudyConfig& cfg) {
    Json j;
    j["type"] = "study";
    j["kind"] = study_kind_name(cfg.kind);
    j["configurations_per_design"] = cfg.configurations_per_design;
    j["noise_front_mm"] = cfg.noise_front;
    j["noise_side_mm"] = cfg.noise_side;
    j["master_seed"] = cfg.master_seed;
    j["backbone_samples"] = cfg.backbone_samples;
    j["truth_order"] = cfg.truth_order;
    j["estimation_orders"] = cfg.estimation_orders;
    j["bounds"] = {{"max_bend_rad", cfg.bounds.max_bend},
                   {"coeff_magnitude_per_mm", cfg.bounds.coeff_magnitude}};
    j["length_mm"] = cfg.length;
    j["band_offset_mm"] = cfg.band_offset;
    j["spacing"] = {{"marker_counts", cfg.spacing_marker_counts},
                    {"length_mm", cfg.spacing_length},
                    {"radius_mm", cfg.spacing_radius},
                    {"margin_mm", cfg.spacing_margin},
                    {"turns", cfg.spacing_turns},
                    {"angular_spacing_rad", cfg.spacing_angular_spacing}};
    j["slenderness"] = {{"radii_mm", cfg.slenderness_radii},
                        {"marker_count", cfg.slenderness_marker_count},
                        {"angular_spacing_rad", cfg.slenderness_angular_spacing},
                        {"margin_mm", cfg.slenderness_margin}};
    j["dropped"] = {{"marker_count", cfg.dropped_marker_count},
                    {"radius_mm", cfg.dropped_radius},
                    {"angular_spacing_rad", cfg.dropped_angular_spacing},
                    {"margin_mm", cfg.dropped_margin}};
    j["estimator"] = estimator_to_json(cfg.estimator);
    return j;
}

StudyConfig study_from_json(const Json& j) {
    expect_type(j, "study");
    const auto kind = field<std::string>(j, "kind");
    StudyKind parsed;
    if (kind == "spacing")
        parsed = StudyKind::spacing;
    else if (kind == "slenderness")
        parsed = StudyKind::slenderness;
    else if (kind == "dropped")
        parsed = StudyKind::dropped;
    else
        fail(ErrorCode::config, "study: unknown kind \"" + kind + "\"");

    StudyConfig cfg = StudyConfig::preset(parsed);
    cfg.configurations_per_design =
        field_or<int>(j, "configurations_per_design", cfg.configurations_per_design);
    cfg.noise_front = field_or<double>(j, "noise_front_mm", cfg.noise_front);
    cfg.noise_side = field_or<double>(j, "noise_side_mm", cfg.noise_side);
    cfg.master_seed = field_or<std::uint64_t>(j, "master_seed", cfg.master_seed);
    cfg.backbone_samples = field_or<int>(j, "backbone_samples", cfg.backbone_samples);
    cfg.truth_order = field_or<int>(j, "truth_order", cfg.truth_order);
    cfg.estimation_orders =
        field_or<std::vector<int>>(j, "estimation_orders", cfg.estimation_orders);
    if (j.contains("bounds")) {
        const Json bj = j["bounds"];
        cfg.bounds.max_bend = field_or<double>(bj, "max_bend_rad", cfg.bounds.max_bend);
        cfg.bounds.coeff_magnitude =
            field_or<double>(bj, "coeff_magnitude_per_mm", cfg.bounds.coeff_magnitude);
    }
    cfg.length = field_or<double>(j, "length_mm", cfg.length);
    cfg.band_offset = field_or<double>(j, "band_offset_mm", cfg.band_offset);
    if (j.contains("spacing")) {
        const Json sj = j["spacing"];
        cfg.spacing_marker_counts =
            field_or<std::vector<int>>(sj, "marker_counts", cfg.spacing_marker_counts);
        cfg.spacing_length = field_or<double>(sj, "length_mm", cfg.spacing_length);
        cfg.spacing_radius = field_or<double>(sj, "radius_mm", cfg.spacing_radius);
        cfg.spacing_margin = field_or<double>(sj, "margin_mm", cfg.spacing_margin);
        cfg.spacing_turns = field_or<double>(sj, "turns", cfg.spacing_turns);
        cfg.spacing_angular_spacing =
            field_or<double>(sj, "angular_spacing_rad", cfg.spacing_angular_spacing);
    }
    if (j.contains("slenderness")) {
        const Json sj = j["slenderness"];
        cfg.slenderness_radii =
            field_or<std::vector<double>>(sj, "radii_mm", cfg.slenderness_radii);
        cfg.slenderness_marker_count =
            field_or<int>(sj, "marker_count", cfg.slenderness_marker_count);
        cfg.slenderness_angular_spacing =
            field_or<double>(sj, "angular_spacing_rad", cfg.slenderness_angular_spacing);
        cfg.slenderness_margin = field_or<double>(sj, "margin_mm", cfg.slenderness_margin);
    }
    if (j.contains("dropped")) {
        const Json dj = j["dropped"];
        cfg.dropped_marker_count = field_or<int>(dj, "marker_count", cfg.dropped_marker_count);
        cfg.dropped_radius = field_or<double>(dj, "radius_mm", cfg.dropped_radius);
        cfg.dropped_angular_spacing =
            field_or<double>(dj, "angular_spacing_rad", cfg.dropped_angular_spacing);
        cfg.dropped_margin = field_or<double>(dj, "margin_mm", cfg.dropped_margin);
    }
    if (j.contains("estimator")) cfg.estimator = estimator_from_json(j["estimator"]);
    cfg.validate();
    return cfg;
}

Json render_to_json(const RenderParams& params) {
    Json j;
    j["type"] = "render";
    j["width"] = params.width;
    j["height"] = params.height;
    j["pixel_scale_mm"] = params.pixel_scale;
    j["background"] = params.background;
    j["foreground"] = params.foreground;
    j["noise_amplitude"] = params.noise_amplitude;
    j["seed"] = params.seed;
    return j;
}

RenderParams render_from_json(const Json& j) {
    expect_type(j, "render");
    RenderParams p;
    p.width = field_or<int>(j, "width", p.width);
    p.height = field_or<int>(j, "height", p.height);
    p.pixel_scale = field_or<double>(j, "pixel_scale_mm", p.pixel_scale);
    p.background = field_or<int>(j, "background", p.background);
    p.foreground = field_or<int>(j, "foreground", p.foreground);
    p.noise_amplitude = field_or<int>(j, "noise_amplitude", p.noise_amplitude);
    p.seed = field_or<std::uint64_t>(j, "seed", p.seed);
    require(p.width > 0 && p.height > 0, ErrorCode::config, "render: image size must be positive");
    require(p.pixel_scale > 0.0, ErrorCode::config, "render: pixel scale must be positive");
    return p;
}

Json segmentation_to_json(const SegmentationParams& params) {
    Json j;
    j["type"] = "segmentation";
    j["thresh"] = params.thresh;
    j["background_intensity"] = params.background_intensity;
    j["min_area_px2"] = params.min_area;
    j["max_area_px2"] = params.max_area;
    j["stability_delta"] = params.stability_delta;
    return j;
}

SegmentationParams segmentation_from_json(const Json& j) {
    expect_type(j, "segmentation");
    SegmentationParams p;
    p.thresh = field_or<int>(j, "thresh", p.thresh);
    p.background_intensity = field_or<int>(j, "background_intensity", p.background_intensity);
    p.min_area = field_or<double>(j, "min_area_px2", p.min_area);
    p.max_area = field_or<double>(j, "max_area_px2", p.max_area);
    p.stability_delta = field_or<int>(j, "stability_delta", p.stability_delta);
    require(p.min_area < p.max_area, ErrorCode::config,
            "segmentation: min_area must be below max_area");
    require(p.thresh >= 0 && p.thresh <= 255, ErrorCode::config,
            "segmentation: thresh must be within 0..255");
    return p;
}

Json pose_spec_to_json(const PoseSpec& spec) {
    Json j;
    j["type"] = "pose_spec";
    if (spec.seeded) {
        j["seed"] = spec.seed;
        j["order"] = spec.order;
        j["max_bend_rad"] = spec.bounds.max_bend;
        j["coeff_magnitude_per_mm"] = spec.bounds.coeff_magnitude;
    } else {
        j["cx"] = to_std(spec.coeffs.cx);
        j["cy"] = to_std(spec.coeffs.cy);
        j["sigma_rad"] = spec.sigma;
    }
    return j;
}

PoseSpec pose_spec_from_json(const Json& j) {
    expect_type(j, "pose_spec");
    PoseSpec spec;
    if (j.contains("seed")) {
        spec.seeded = true;
        spec.seed = field<std::uint64_t>(j, "seed");
        spec.order = field_or<int>(j, "order", 3);
        spec.bounds.max_bend = field_or<double>(j, "max_bend_rad", spec.bounds.max_bend);
        spec.bounds.coeff_magnitude =
            field_or<double>(j, "coeff_magnitude_per_mm", spec.bounds.coeff_magnitude);
        return spec;
    }
    spec.coeffs = ModalCoefficients{vector_field(j, "cx"), vector_field(j, "cy")};
    spec.sigma = field<double>(j, "sigma_rad");
    return spec;
}

}  // namespace cathtrack
