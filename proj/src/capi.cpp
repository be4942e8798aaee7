#include "cathtrack.h"

#include <cstring>
#include <string>

#include "cathtrack/io.hpp"
#include "cathtrack/runners.hpp"
#include "cathtrack/version.hpp"

using namespace cathtrack;

struct ct_design {
    CatheterDesign value;
};
struct ct_geometry {
    BiplaneGeometry value;
};
struct ct_detections {
    MarkerDetections value;
    double pixel_scale = 0.35;
};
struct ct_markers {
    OrderedMarkerSet value;
};
struct ct_estimate {
    PoseEstimate value;
};

namespace {

thread_local std::string g_last_error;

ct_status to_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return CT_ERROR_INVALID_ARGUMENT;
        case ErrorCode::config: return CT_ERROR_CONFIG;
        case ErrorCode::numeric: return CT_ERROR_NUMERIC;
        case ErrorCode::io: return CT_ERROR_IO;
    }
    return CT_ERROR_INVALID_ARGUMENT;
}

template <typename Fn>
ct_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return CT_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return CT_ERROR_NUMERIC;
    }
}

ct_status require_arg(bool ok, const char* message) {
    if (ok) return CT_OK;
    g_last_error = message;
    return CT_ERROR_INVALID_ARGUMENT;
}

Pose pose_from_array(const double* m) {
    if (!m) return Pose::identity();
    Pose pose;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) pose.rotation(r, c) = m[4 * r + c];
        pose.position(r) = m[4 * r + 3];
    }
    return pose;
}

ModalCoefficients coeffs_from_array(const double* coeffs, int order) {
    require(coeffs != nullptr && order >= 1, ErrorCode::invalid_argument,
            "coefficients array must hold 2*order values");
    Eigen::Map<const Eigen::VectorXd> v(coeffs, 2 * order);
    return ModalCoefficients::from_stacked(v);
}

void fill_backbone(const BackbonePath& path, double* out_s, double* out_rotations,
                   double* out_positions) {
    for (std::size_t i = 0; i < path.samples.size(); ++i) {
        const FrameSample& f = path.samples[i];
        if (out_s) out_s[i] = f.s;
        if (out_rotations)
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) out_rotations[9 * i + 3 * r + c] = f.rotation(r, c);
        if (out_positions)
            for (int r = 0; r < 3; ++r) out_positions[3 * i + r] = f.position(r);
    }
}

ct_label to_c_label(MarkerLabel label) {
    switch (label) {
        case MarkerLabel::base: return CT_LABEL_BASE;
        case MarkerLabel::base_prime: return CT_LABEL_BASE_PRIME;
        case MarkerLabel::tip: return CT_LABEL_TIP;
        case MarkerLabel::intermediate: return CT_LABEL_INTERMEDIATE;
        case MarkerLabel::unknown: return CT_LABEL_UNKNOWN;
    }
    return CT_LABEL_UNKNOWN;
}

EstimatorConfig config_from_params(const ct_estimator_params* p) {
    EstimatorConfig cfg;
    if (!p) return cfg;
    cfg.tip_weight = p->tip_weight;
    cfg.intermediate_weight = p->intermediate_weight;
    cfg.zeta_c = p->zeta_c;
    cfg.zeta_sigma = p->zeta_sigma;
    cfg.eps_c = p->eps_c;
    cfg.eps_sigma = p->eps_sigma;
    cfg.max_outer_iterations = p->max_outer_iterations;
    cfg.max_inner_iterations = p->max_inner_iterations;
    cfg.gradient_tolerance = p->gradient_tolerance;
    cfg.fd_step = p->fd_step;
    cfg.integration_step = p->integration_step_mm;
    cfg.roll_multistart = p->roll_multistart;
    return cfg;
}

std::string str_or_empty(const char* s) { return s ? std::string(s) : std::string(); }

SegmentationParams seg_from_c(const ct_seg_params* p) {
    SegmentationParams params;
    if (!p) return params;
    params.thresh = p->thresh;
    params.background_intensity = p->background_intensity;
    params.min_area = p->min_area_px2;
    params.max_area = p->max_area_px2;
    params.stability_delta = p->stability_delta;
    return params;
}

std::vector<int> orders_or_default(const int* orders, int count) {
    if (!orders || count <= 0) return {3};
    return std::vector<int>(orders, orders + count);
}

}  // namespace

extern "C" {

const char* ct_version(void) { return kVersion; }

const char* ct_status_name(ct_status status) {
    switch (status) {
        case CT_OK: return "ok";
        case CT_ERROR_INVALID_ARGUMENT: return "invalid_argument";
        case CT_ERROR_CONFIG: return "config";
        case CT_ERROR_NUMERIC: return "numeric";
        case CT_ERROR_IO: return "io";
    }
    return "unknown";
}

const char* ct_last_error(void) { return g_last_error.c_str(); }

ct_status ct_design_load(const char* path, ct_design** out) {
    if (auto s = require_arg(path && out, "ct_design_load: null argument")) return s;
    return guarded([&] { *out = new ct_design{design_from_json(load_json_file(path))}; });
}

ct_status ct_design_from_json(const char* json_text, ct_design** out) {
    if (auto s = require_arg(json_text && out, "ct_design_from_json: null argument")) return s;
    return guarded([&] {
        Json j;
        try {
            j = Json::parse(json_text);
        } catch (const Json::exception& e) {
            fail(ErrorCode::config, std::string("invalid JSON: ") + e.what());
        }
        *out = new ct_design{design_from_json(j)};
    });
}

ct_status ct_design_helical(double length_mm, double radius_mm, int n, double pitch_mm_per_rad,
                            double angular_spacing_rad, double start_angle_rad, ct_design** out) {
    if (auto s = require_arg(out != nullptr, "ct_design_helical: null output")) return s;
    return guarded([&] {
        *out = new ct_design{build_helical_design(
            length_mm, radius_mm, n, {pitch_mm_per_rad, angular_spacing_rad, start_angle_rad})};
    });
}

void ct_design_free(ct_design* design) { delete design; }

int ct_design_marker_count(const ct_design* design) {
    return design ? design->value.marker_count() : 0;
}

double ct_design_length(const ct_design* design) { return design ? design->value.length : 0.0; }

double ct_design_radius(const ct_design* design) { return design ? design->value.radius : 0.0; }

ct_status ct_marker_spacing(double radius_mm, double pitch_mm_per_rad,
                            double angular_spacing_rad, double* out_mm) {
    if (auto s = require_arg(out_mm != nullptr, "ct_marker_spacing: null output")) return s;
    return guarded([&] {
        *out_mm = marker_spacing(radius_mm, {pitch_mm_per_rad, angular_spacing_rad, 0.0});
    });
}

ct_status ct_spacing_factor(double spacing_mm, double uncertainty_mm, double* out) {
    if (auto s = require_arg(out != nullptr, "ct_spacing_factor: null output")) return s;
    return guarded([&] { *out = spacing_factor(spacing_mm, uncertainty_mm); });
}

ct_status ct_geometry_load(const char* path, ct_geometry** out) {
    if (auto s = require_arg(path && out, "ct_geometry_load: null argument")) return s;
    return guarded([&] { *out = new ct_geometry{geometry_from_json(load_json_file(path))}; });
}

ct_status ct_geometry_canonical(double pixel_scale_mm, ct_geometry** out) {
    if (auto s = require_arg(out != nullptr, "ct_geometry_canonical: null output")) return s;
    return guarded([&] {
        auto g = BiplaneGeometry::canonical(pixel_scale_mm);
        g.validate();
        *out = new ct_geometry{g};
    });
}

void ct_geometry_free(ct_geometry* geometry) { delete geometry; }

ct_status ct_project_point(const ct_geometry* geometry, const double world_xyz[3],
                           ct_plane plane, double out_xy[2]) {
    if (auto s = require_arg(geometry && world_xyz && out_xy, "ct_project_point: null argument"))
        return s;
    return guarded([&] {
        const Vec2 p = project_point(Vec3(world_xyz[0], world_xyz[1], world_xyz[2]),
                                     static_cast<Plane>(plane), geometry->value);
        out_xy[0] = p.x();
        out_xy[1] = p.y();
    });
}

ct_status ct_triangulate(const ct_geometry* geometry, const double front_xy[2],
                         const double side_xy[2], double out_xyz[3]) {
    if (auto s = require_arg(geometry && front_xy && side_xy && out_xyz,
                             "ct_triangulate: null argument"))
        return s;
    return guarded([&] {
        const Vec3 p = triangulate(Vec2(front_xy[0], front_xy[1]), Vec2(side_xy[0], side_xy[1]),
                                   geometry->value);
        for (int i = 0; i < 3; ++i) out_xyz[i] = p(i);
    });
}

ct_status ct_epipolar_distance(const ct_geometry* geometry, ct_plane primary,
                               const double primary_xy[2], const double secondary_xy[2],
                               double* out_mm) {
    if (auto s = require_arg(geometry && primary_xy && secondary_xy && out_mm,
                             "ct_epipolar_distance: null argument"))
        return s;
    return guarded([&] {
        *out_mm = epipolar_distance(Vec2(secondary_xy[0], secondary_xy[1]),
                                    Vec2(primary_xy[0], primary_xy[1]),
                                    static_cast<Plane>(primary), geometry->value);
    });
}

ct_status ct_chebyshev_basis(double x, int order, double* out) {
    if (auto s = require_arg(out != nullptr, "ct_chebyshev_basis: null output")) return s;
    return guarded([&] {
        const Eigen::VectorXd t = chebyshev_basis(x, order);
        for (int k = 0; k < order; ++k) out[k] = t(k);
    });
}

ct_status ct_forward_markers(const ct_design* design, const double* coeffs, int order,
                             double sigma, const double* base_pose_4x4, double* out_xyz) {
    if (auto s = require_arg(design && coeffs && out_xyz, "ct_forward_markers: null argument"))
        return s;
    return guarded([&] {
        const MarkerWorld world =
            marker_world_positions(design->value, coeffs_from_array(coeffs, order), sigma,
                                   pose_from_array(base_pose_4x4), design->value.length / 100.0);
        const std::vector<Vec3> ordered = world.ordered();
        for (std::size_t i = 0; i < ordered.size(); ++i)
            for (int r = 0; r < 3; ++r) out_xyz[3 * i + r] = ordered[i](r);
    });
}

ct_status ct_backbone(const ct_design* design, const double* coeffs, int order,
                      const double* base_pose_4x4, int count, double* out_s,
                      double* out_rotations, double* out_positions) {
    if (auto s = require_arg(design && coeffs && count >= 2, "ct_backbone: bad argument"))
        return s;
    return guarded([&] {
        const double ds = design->value.length / (count - 1);
        const BackbonePath path = propagate(coeffs_from_array(coeffs, order),
                                            pose_from_array(base_pose_4x4),
                                            design->value.length, ds);
        fill_backbone(path, out_s, out_rotations, out_positions);
    });
}

void ct_seg_params_default(ct_seg_params* params) {
    if (!params) return;
    const SegmentationParams d;
    params->thresh = d.thresh;
    params->background_intensity = d.background_intensity;
    params->min_area_px2 = d.min_area;
    params->max_area_px2 = d.max_area;
    params->stability_delta = d.stability_delta;
}

ct_status ct_segment_pgm(const char* path, const ct_seg_params* params, ct_detections** out) {
    if (auto s = require_arg(path && out, "ct_segment_pgm: null argument")) return s;
    return guarded([&] {
        const GrayImage image = read_pgm(path);
        *out = new ct_detections{segment(image, seg_from_c(params)), image.pixel_scale};
    });
}

ct_status ct_segment_image(const unsigned char* pixels, int width, int height,
                           double pixel_scale_mm, double origin_x_mm, double origin_y_mm,
                           const ct_seg_params* params, ct_detections** out) {
    if (auto s = require_arg(pixels && out && width > 0 && height > 0,
                             "ct_segment_image: bad argument"))
        return s;
    return guarded([&] {
        GrayImage image;
        image.width = width;
        image.height = height;
        image.pixel_scale = pixel_scale_mm;
        image.origin = {origin_x_mm, origin_y_mm};
        image.intensities.assign(pixels, pixels + static_cast<std::size_t>(width) * height);
        *out = new ct_detections{segment(image, seg_from_c(params)), pixel_scale_mm};
    });
}

ct_status ct_classify(ct_detections* detections, const ct_design* design,
                      double pixel_scale_mm) {
    if (auto s = require_arg(detections && design, "ct_classify: null argument")) return s;
    return guarded([&] {
        detections->value = classify(detections->value, design->value,
                                     ExpectedAreas::from_design(design->value, pixel_scale_mm));
    });
}

int ct_detections_count(const ct_detections* detections) {
    return detections ? static_cast<int>(detections->value.items.size()) : 0;
}

ct_status ct_detections_get(const ct_detections* detections, int index, ct_label* label,
                            double* x_mm, double* y_mm, double* area_px2) {
    if (auto s = require_arg(detections && index >= 0 &&
                                 index < static_cast<int>(detections->value.items.size()),
                             "ct_detections_get: bad index"))
        return s;
    const Detection& d = detections->value.items[static_cast<std::size_t>(index)];
    if (label) *label = to_c_label(d.label);
    if (x_mm) *x_mm = d.centroid.x();
    if (y_mm) *y_mm = d.centroid.y();
    if (area_px2) *area_px2 = d.area;
    return CT_OK;
}

void ct_detections_free(ct_detections* detections) { delete detections; }

ct_status ct_reconstruct(const ct_detections* front, const ct_detections* side,
                         const ct_geometry* geometry, const ct_design* design,
                         double epipolar_gate_mm, ct_markers** out) {
    if (auto s = require_arg(front && side && geometry && design && out,
                             "ct_reconstruct: null argument"))
        return s;
    return guarded([&] {
        ReconstructionParams params;
        params.epipolar_gate = epipolar_gate_mm > 0.0
                                   ? epipolar_gate_mm
                                   : ReconstructionParams::gate_for_noise(0.0);
        PlanarMarkers pf, ps;
        const auto convert = [](const MarkerDetections& det, const char* which) {
            PlanarMarkers pm;
            const Detection* bp = det.find(MarkerLabel::base_prime);
            const Detection* b = det.find(MarkerLabel::base);
            const Detection* tip = det.find(MarkerLabel::tip);
            require(bp && b && tip, ErrorCode::numeric,
                    std::string(which) + ": detections lack labeled base_prime/base/tip");
            pm.base_prime = bp->centroid;
            pm.base = b->centroid;
            pm.tip = tip->centroid;
            pm.intermediates = det.centroids(MarkerLabel::intermediate);
            return pm;
        };
        pf = convert(front->value, "front");
        ps = convert(side->value, "side");
        *out = new ct_markers{reconstruct_markers(pf, ps, geometry->value, design->value, params)};
    });
}

ct_status ct_markers_load_csv(const char* path, ct_markers** out) {
    if (auto s = require_arg(path && out, "ct_markers_load_csv: null argument")) return s;
    return guarded([&] { *out = new ct_markers{read_world_markers_csv(path)}; });
}

int ct_markers_count(const ct_markers* markers) {
    return markers ? static_cast<int>(markers->value.markers.size()) + 3 : 0;
}

ct_status ct_markers_get(const ct_markers* markers, int slot, int* present, double out_xyz[3]) {
    if (auto s = require_arg(markers && slot >= 0 && slot < ct_markers_count(markers),
                             "ct_markers_get: bad slot"))
        return s;
    const OrderedMarkerSet& set = markers->value;
    Vec3 p;
    bool is_present = true;
    const int n = static_cast<int>(set.markers.size());
    if (slot == 0)
        p = set.base_prime;
    else if (slot == 1)
        p = set.base;
    else if (slot == n + 2)
        p = set.tip;
    else {
        p = set.markers[static_cast<std::size_t>(slot - 2)];
        is_present = set.present[static_cast<std::size_t>(slot - 2)];
    }
    if (present) *present = is_present ? 1 : 0;
    if (out_xyz)
        for (int r = 0; r < 3; ++r) out_xyz[r] = p(r);
    return CT_OK;
}

void ct_markers_free(ct_markers* markers) { delete markers; }

void ct_estimator_params_default(ct_estimator_params* params) {
    if (!params) return;
    const EstimatorConfig d;
    params->tip_weight = d.tip_weight;
    params->intermediate_weight = d.intermediate_weight;
    params->zeta_c = d.zeta_c;
    params->zeta_sigma = d.zeta_sigma;
    params->eps_c = d.eps_c;
    params->eps_sigma = d.eps_sigma;
    params->max_outer_iterations = d.max_outer_iterations;
    params->max_inner_iterations = d.max_inner_iterations;
    params->gradient_tolerance = d.gradient_tolerance;
    params->fd_step = d.fd_step;
    params->integration_step_mm = d.integration_step;
    params->roll_multistart = d.roll_multistart;
}

ct_status ct_estimate_run(const ct_markers* markers, const ct_design* design,
                          const ct_estimator_params* params, int order, ct_estimate** out) {
    if (auto s = require_arg(markers && design && out && order >= 1,
                             "ct_estimate_run: bad argument"))
        return s;
    return guarded([&] {
        *out = new ct_estimate{estimate(markers->value, design->value,
                                        config_from_params(params),
                                        ModalCoefficients::zero(order), 0.0)};
    });
}

int ct_estimate_order(const ct_estimate* estimate) {
    return estimate ? estimate->value.order() : 0;
}

ct_status ct_estimate_coeffs(const ct_estimate* estimate, double* cx, double* cy) {
    if (auto s = require_arg(estimate && cx && cy, "ct_estimate_coeffs: null argument")) return s;
    const auto& c = estimate->value.coeffs;
    for (int k = 0; k < c.order(); ++k) {
        cx[k] = c.cx(k);
        cy[k] = c.cy(k);
    }
    return CT_OK;
}

double ct_estimate_sigma(const ct_estimate* estimate) {
    return estimate ? estimate->value.sigma : 0.0;
}

double ct_estimate_cost(const ct_estimate* estimate) {
    return estimate ? estimate->value.final_cost : 0.0;
}

int ct_estimate_converged(const ct_estimate* estimate) {
    return estimate && estimate->value.converged ? 1 : 0;
}

int ct_estimate_outer_iterations(const ct_estimate* estimate) {
    return estimate ? estimate->value.outer_iterations : 0;
}

ct_status ct_estimate_base_pose(const ct_estimate* estimate, double out_pose_4x4[16]) {
    if (auto s = require_arg(estimate && out_pose_4x4, "ct_estimate_base_pose: null argument"))
        return s;
    const Pose& pose = estimate->value.base_frame;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) out_pose_4x4[4 * r + c] = pose.rotation(r, c);
        out_pose_4x4[4 * r + 3] = pose.position(r);
    }
    out_pose_4x4[12] = out_pose_4x4[13] = out_pose_4x4[14] = 0.0;
    out_pose_4x4[15] = 1.0;
    return CT_OK;
}

ct_status ct_estimate_backbone(const ct_estimate* estimate, const ct_design* design, int count,
                               double* out_s, double* out_rotations, double* out_positions) {
    if (auto s = require_arg(estimate && design && count >= 2, "ct_estimate_backbone: bad argument"))
        return s;
    return guarded([&] {
        fill_backbone(estimate->value.backbone(design->value, count), out_s, out_rotations,
                      out_positions);
    });
}

void ct_estimate_free(ct_estimate* estimate) { delete estimate; }

ct_status ct_run_simulate(const ct_simulate_opts* opts) {
    if (auto s = require_arg(opts && opts->design_path && opts->geometry_path && opts->out_dir,
                             "ct_run_simulate: missing required path"))
        return s;
    return guarded([&] {
        SimulateOptions o;
        o.design_path = opts->design_path;
        o.geometry_path = opts->geometry_path;
        o.pose_path = str_or_empty(opts->pose_path);
        o.seed = opts->seed;
        o.noise = opts->noise_mm;
        o.render = opts->render != 0;
        o.render_params_path = str_or_empty(opts->render_params_path);
        o.order = opts->order > 0 ? opts->order : 3;
        o.out_dir = opts->out_dir;
        run_simulate(o);
    });
}

ct_status ct_run_segment(const ct_segment_opts* opts) {
    if (auto s = require_arg(opts && opts->image_path && opts->out_dir,
                             "ct_run_segment: missing required path"))
        return s;
    return guarded([&] {
        SegmentOptions o;
        o.image_path = opts->image_path;
        o.params_path = str_or_empty(opts->params_path);
        o.design_path = str_or_empty(opts->design_path);
        o.out_dir = opts->out_dir;
        run_segment(o);
    });
}

ct_status ct_run_reconstruct(const ct_reconstruct_opts* opts) {
    if (auto s = require_arg(opts && opts->front_path && opts->side_path && opts->design_path &&
                                 opts->geometry_path && opts->out_dir,
                             "ct_run_reconstruct: missing required path"))
        return s;
    return guarded([&] {
        ReconstructOptions o;
        o.front_path = opts->front_path;
        o.side_path = opts->side_path;
        o.design_path = opts->design_path;
        o.geometry_path = opts->geometry_path;
        o.noise = opts->noise_mm;
        o.out_dir = opts->out_dir;
        run_reconstruct(o);
    });
}

ct_status ct_run_estimate(const ct_estimate_opts* opts) {
    if (auto s = require_arg(opts && opts->markers_path && opts->design_path && opts->out_dir,
                             "ct_run_estimate: missing required path"))
        return s;
    return guarded([&] {
        EstimateOptions o;
        o.markers_path = opts->markers_path;
        o.design_path = opts->design_path;
        o.estimator_path = str_or_empty(opts->estimator_path);
        o.orders = orders_or_default(opts->orders, opts->order_count);
        o.out_dir = opts->out_dir;
        run_estimate(o);
    });
}

ct_status ct_run_study(const ct_study_opts* opts) {
    if (auto s = require_arg(opts && opts->config_path && opts->out_dir,
                             "ct_run_study: missing required path"))
        return s;
    return guarded([&] {
        StudyOptions o;
        o.kind = str_or_empty(opts->kind);
        o.config_path = opts->config_path;
        o.jobs = opts->jobs;
        o.out_dir = opts->out_dir;
        run_study_command(o);
    });
}

ct_status ct_run_pipeline(const ct_pipeline_opts* opts) {
    if (auto s = require_arg(opts && opts->front_path && opts->side_path && opts->design_path &&
                                 opts->geometry_path && opts->out_dir,
                             "ct_run_pipeline: missing required path"))
        return s;
    return guarded([&] {
        PipelineOptions o;
        o.front_path = opts->front_path;
        o.side_path = opts->side_path;
        o.design_path = opts->design_path;
        o.geometry_path = opts->geometry_path;
        o.seg_params_path = str_or_empty(opts->seg_params_path);
        o.estimator_path = str_or_empty(opts->estimator_path);
        o.orders = orders_or_default(opts->orders, opts->order_count);
        o.noise = opts->noise_mm;
        o.out_dir = opts->out_dir;
        run_pipeline(o);
    });
}

}  // extern "C"
