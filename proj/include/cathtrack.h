/* cathtrack — biplane shape and pose tracking of marker-equipped catheters.
 *
 * C interface to the tracking core: opaque handles, integer status codes,
 * flat double arrays. All lengths are millimeters, all angles radians.
 * Handles are created by ct_*_create/load functions and released with the
 * matching ct_*_free; every function returning ct_status leaves a
 * human-readable message for the calling thread in ct_last_error() when it
 * fails.
 */
#ifndef CATHTRACK_H
#define CATHTRACK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CT_API __declspec(dllexport)
#else
#define CT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ct_status {
    CT_OK = 0,
    CT_ERROR_INVALID_ARGUMENT = 1,
    CT_ERROR_CONFIG = 2,
    CT_ERROR_NUMERIC = 3,
    CT_ERROR_IO = 4
} ct_status;

typedef enum ct_plane { CT_PLANE_FRONT = 0, CT_PLANE_SIDE = 1 } ct_plane;

typedef enum ct_label {
    CT_LABEL_BASE = 0,
    CT_LABEL_BASE_PRIME = 1,
    CT_LABEL_TIP = 2,
    CT_LABEL_INTERMEDIATE = 3,
    CT_LABEL_UNKNOWN = 4
} ct_label;

CT_API const char* ct_version(void);
CT_API const char* ct_status_name(ct_status status);
/* Message from the most recent failing call on this thread ("" if none). */
CT_API const char* ct_last_error(void);

/* --- catheter design ------------------------------------------------- */
typedef struct ct_design ct_design;

CT_API ct_status ct_design_load(const char* path, ct_design** out);
CT_API ct_status ct_design_from_json(const char* json_text, ct_design** out);
/* Equally spaced helix: n markers, pitch mm/rad, angular spacing rad. */
CT_API ct_status ct_design_helical(double length_mm, double radius_mm, int n,
                                   double pitch_mm_per_rad, double angular_spacing_rad,
                                   double start_angle_rad, ct_design** out);
CT_API void ct_design_free(ct_design* design);
CT_API int ct_design_marker_count(const ct_design* design);
CT_API double ct_design_length(const ct_design* design);
CT_API double ct_design_radius(const ct_design* design);

/* Straight-helix consecutive marker distance d (mm). */
CT_API ct_status ct_marker_spacing(double radius_mm, double pitch_mm_per_rad,
                                   double angular_spacing_rad, double* out_mm);
/* kappa = d / N. */
CT_API ct_status ct_spacing_factor(double spacing_mm, double uncertainty_mm, double* out);

/* --- biplane geometry ------------------------------------------------- */
typedef struct ct_geometry ct_geometry;

CT_API ct_status ct_geometry_load(const char* path, ct_geometry** out);
CT_API ct_status ct_geometry_canonical(double pixel_scale_mm, ct_geometry** out);
CT_API void ct_geometry_free(ct_geometry* geometry);

CT_API ct_status ct_project_point(const ct_geometry* geometry, const double world_xyz[3],
                                  ct_plane plane, double out_xy[2]);
CT_API ct_status ct_triangulate(const ct_geometry* geometry, const double front_xy[2],
                                const double side_xy[2], double out_xyz[3]);
CT_API ct_status ct_epipolar_distance(const ct_geometry* geometry, ct_plane primary,
                                      const double primary_xy[2], const double secondary_xy[2],
                                      double* out_mm);

/* --- forward kinematics ------------------------------------------------ */
/* Chebyshev values T_0..T_{order-1} at x in [-1, 1]. */
CT_API ct_status ct_chebyshev_basis(double x, int order, double* out);

/* Marker world positions for stacked coefficients [cx; cy] (2*order values)
 * and roll sigma. base_pose is a row-major 4x4 rigid transform or NULL for
 * identity. out_xyz receives (marker_count + 3) * 3 doubles ordered
 * [base', base, markers..., tip]. */
CT_API ct_status ct_forward_markers(const ct_design* design, const double* coeffs, int order,
                                    double sigma, const double* base_pose_4x4, double* out_xyz);

/* Backbone frames at `count` uniform arc-lengths from 0 to L: out_s (count),
 * out_rotations (9*count, row-major), out_positions (3*count). */
CT_API ct_status ct_backbone(const ct_design* design, const double* coeffs, int order,
                             const double* base_pose_4x4, int count, double* out_s,
                             double* out_rotations, double* out_positions);

/* --- segmentation ------------------------------------------------------ */
typedef struct ct_detections ct_detections;

typedef struct ct_seg_params {
    int thresh;                /* feature threshold, default 60 */
    int background_intensity;  /* default 230 */
    double min_area_px2;       /* default 4 */
    double max_area_px2;       /* default 4000 */
    int stability_delta;       /* default 10 */
} ct_seg_params;

CT_API void ct_seg_params_default(ct_seg_params* params);

CT_API ct_status ct_segment_pgm(const char* path, const ct_seg_params* params,
                                ct_detections** out);
CT_API ct_status ct_segment_image(const unsigned char* pixels, int width, int height,
                                  double pixel_scale_mm, double origin_x_mm, double origin_y_mm,
                                  const ct_seg_params* params, ct_detections** out);
/* Labels band/tip/intermediate regions in place (needs the design). */
CT_API ct_status ct_classify(ct_detections* detections, const ct_design* design,
                             double pixel_scale_mm);
CT_API int ct_detections_count(const ct_detections* detections);
CT_API ct_status ct_detections_get(const ct_detections* detections, int index, ct_label* label,
                                   double* x_mm, double* y_mm, double* area_px2);
CT_API void ct_detections_free(ct_detections* detections);

/* --- reconstruction ----------------------------------------------------- */
typedef struct ct_markers ct_markers;  /* ordered world marker set */

/* Both detection sets must be classified. epipolar_gate_mm <= 0 selects the
 * default for noiseless input. */
CT_API ct_status ct_reconstruct(const ct_detections* front, const ct_detections* side,
                                const ct_geometry* geometry, const ct_design* design,
                                double epipolar_gate_mm, ct_markers** out);
CT_API ct_status ct_markers_load_csv(const char* path, ct_markers** out);
/* Slots: 0 = base', 1 = base, 2..n+1 = markers, n+2 = tip. */
CT_API int ct_markers_count(const ct_markers* markers);
CT_API ct_status ct_markers_get(const ct_markers* markers, int slot, int* present,
                                double out_xyz[3]);
CT_API void ct_markers_free(ct_markers* markers);

/* --- estimation ---------------------------------------------------------- */
typedef struct ct_estimate ct_estimate;

typedef struct ct_estimator_params {
    double tip_weight;            /* default 10 */
    double intermediate_weight;   /* default 1 */
    double zeta_c;                /* default 0 */
    double zeta_sigma;            /* default 0 */
    double eps_c;                 /* default 1e-6 */
    double eps_sigma;             /* default 1e-6 */
    int max_outer_iterations;     /* default 50 */
    int max_inner_iterations;     /* default 100 */
    double gradient_tolerance;    /* default 1e-10 */
    double fd_step;               /* default 1e-6 */
    double integration_step_mm;   /* default 0 = L/100 */
    int roll_multistart;          /* default 8 */
} ct_estimator_params;

CT_API void ct_estimator_params_default(ct_estimator_params* params);

/* Cold-start estimate of order `order`; params may be NULL for defaults. */
CT_API ct_status ct_estimate_run(const ct_markers* markers, const ct_design* design,
                                 const ct_estimator_params* params, int order,
                                 ct_estimate** out);
CT_API int ct_estimate_order(const ct_estimate* estimate);
/* cx and cy each receive `order` values. */
CT_API ct_status ct_estimate_coeffs(const ct_estimate* estimate, double* cx, double* cy);
CT_API double ct_estimate_sigma(const ct_estimate* estimate);
CT_API double ct_estimate_cost(const ct_estimate* estimate);
CT_API int ct_estimate_converged(const ct_estimate* estimate);
CT_API int ct_estimate_outer_iterations(const ct_estimate* estimate);
CT_API ct_status ct_estimate_base_pose(const ct_estimate* estimate, double out_pose_4x4[16]);
/* Estimated backbone at `count` uniform arc-lengths (see ct_backbone). */
CT_API ct_status ct_estimate_backbone(const ct_estimate* estimate, const ct_design* design,
                                      int count, double* out_s, double* out_rotations,
                                      double* out_positions);
CT_API void ct_estimate_free(ct_estimate* estimate);

/* --- command runners ------------------------------------------------------ */
/* File-level entry points mirroring the CLI subcommands. Paths may be NULL
 * where marked optional. Each writes its outputs plus manifest.json into
 * out_dir. */

typedef struct ct_simulate_opts {
    const char* design_path;
    const char* geometry_path;
    const char* pose_path;          /* optional */
    uint64_t seed;
    double noise_mm;
    int render;                     /* nonzero writes front.pgm/side.pgm */
    const char* render_params_path; /* optional */
    int order;                      /* seed-driven configurations */
    const char* out_dir;
} ct_simulate_opts;
CT_API ct_status ct_run_simulate(const ct_simulate_opts* opts);

typedef struct ct_segment_opts {
    const char* image_path;
    const char* params_path;  /* optional */
    const char* design_path;  /* optional; enables labeling */
    const char* out_dir;
} ct_segment_opts;
CT_API ct_status ct_run_segment(const ct_segment_opts* opts);

typedef struct ct_reconstruct_opts {
    const char* front_path;
    const char* side_path;
    const char* design_path;
    const char* geometry_path;
    double noise_mm;
    const char* out_dir;
} ct_reconstruct_opts;
CT_API ct_status ct_run_reconstruct(const ct_reconstruct_opts* opts);

typedef struct ct_estimate_opts {
    const char* markers_path;
    const char* design_path;
    const char* estimator_path;  /* optional */
    const int* orders;           /* NULL selects {3} */
    int order_count;
    const char* out_dir;
} ct_estimate_opts;
CT_API ct_status ct_run_estimate(const ct_estimate_opts* opts);

typedef struct ct_study_opts {
    const char* kind;  /* optional: "spacing", "slenderness", "dropped" */
    const char* config_path;
    int jobs;
    const char* out_dir;
} ct_study_opts;
CT_API ct_status ct_run_study(const ct_study_opts* opts);

typedef struct ct_pipeline_opts {
    const char* front_path;  /* .pgm or .csv */
    const char* side_path;
    const char* design_path;
    const char* geometry_path;
    const char* seg_params_path; /* optional */
    const char* estimator_path;  /* optional */
    const int* orders;           /* NULL selects {3} */
    int order_count;
    double noise_mm;
    const char* out_dir;
} ct_pipeline_opts;
CT_API ct_status ct_run_pipeline(const ct_pipeline_opts* opts);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CATHTRACK_H */
