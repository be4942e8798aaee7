#include "cathtrack/runners.hpp"

#include <chrono>

#include "cathtrack/io.hpp"

namespace cathtrack {

namespace {

PlanarMarkers planar_from_world(const MarkerWorld& world, Plane plane,
                                const BiplaneGeometry& geom, const NoiseModel& noise) {
    std::vector<Vec2> pts;
    const std::vector<Vec3> ordered = world.ordered();
    pts.reserve(ordered.size());
    for (const auto& p : ordered) pts.push_back(project_point(p, plane, geom));
    pts = perturb(pts, noise, plane);
    PlanarMarkers pm;
    pm.base_prime = pts[0];
    pm.base = pts[1];
    pm.tip = pts.back();
    pm.intermediates.assign(pts.begin() + 2, pts.end() - 1);
    return pm;
}

Json backbone_to_json(const BackbonePath& path) {
    Json samples = Json::array();
    for (const auto& f : path.samples)
        samples.push_back({f.s, f.position.x(), f.position.y(), f.position.z()});
    return samples;
}

double elapsed_ms(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

PlanarMarkers planar_from_detections(const MarkerDetections& det, const std::string& context) {
    PlanarMarkers pm;
    const Detection* bp = det.find(MarkerLabel::base_prime);
    const Detection* b = det.find(MarkerLabel::base);
    const Detection* tip = det.find(MarkerLabel::tip);
    require(bp && b && tip, ErrorCode::numeric,
            context + ": detections lack labeled base_prime/base/tip");
    pm.base_prime = bp->centroid;
    pm.base = b->centroid;
    pm.tip = tip->centroid;
    pm.intermediates = det.centroids(MarkerLabel::intermediate);
    return pm;
}

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

Json estimate_to_json(const PoseEstimate& estimate) {
    Json j;
    j["type"] = "estimate";
    j["order"] = estimate.order();
    j["cx"] = std::vector<double>(estimate.coeffs.cx.data(),
                                  estimate.coeffs.cx.data() + estimate.coeffs.cx.size());
    j["cy"] = std::vector<double>(estimate.coeffs.cy.data(),
                                  estimate.coeffs.cy.data() + estimate.coeffs.cy.size());
    j["sigma_rad"] = estimate.sigma;
    j["final_cost"] = estimate.final_cost;
    j["outer_iterations"] = estimate.outer_iterations;
    j["converged"] = estimate.converged;
    j["residual_per_marker_mm"] = estimate.residual_per_marker;
    Json rotation = Json::array();
    for (int r = 0; r < 3; ++r)
        rotation.push_back({estimate.base_frame.rotation(r, 0), estimate.base_frame.rotation(r, 1),
                            estimate.base_frame.rotation(r, 2)});
    j["base_frame"] = {{"rotation", rotation},
                       {"position",
                        {estimate.base_frame.position.x(), estimate.base_frame.position.y(),
                         estimate.base_frame.position.z()}}};
    return j;
}

void run_simulate(const SimulateOptions& opts) {
    const CatheterDesign design = design_from_json(load_json_file(opts.design_path));
    const BiplaneGeometry geom = geometry_from_json(load_json_file(opts.geometry_path));
    geom.validate();
    ensure_directory(opts.out_dir);

    PoseSpec spec;
    std::vector<std::string> configs = {opts.design_path, opts.geometry_path};
    if (!opts.pose_path.empty()) {
        spec = pose_spec_from_json(load_json_file(opts.pose_path));
        configs.push_back(opts.pose_path);
    } else {
        spec.seeded = true;
        spec.seed = opts.seed;
        spec.order = opts.order;
    }
    ModalCoefficients coeffs = spec.coeffs;
    double sigma = spec.sigma;
    if (spec.seeded) {
        Rng rng = Rng::substream(spec.seed, {0x73696d75ull});
        std::tie(coeffs, sigma) = sample_configuration(rng, spec.bounds, spec.order, design.length);
    }

    const double ds = design.length / 100.0;
    const MarkerWorld world = marker_world_positions(design, coeffs, sigma, Pose::identity(), ds);

    NoiseModel noise;
    noise.front_radius = opts.noise;
    noise.side_radius = opts.noise;
    noise.seed = opts.seed;

    std::vector<std::string> outputs;
    for (Plane plane : {Plane::front, Plane::side}) {
        const PlanarMarkers pm = planar_from_world(world, plane, geom, noise);
        const std::string name =
            plane == Plane::front ? "front_markers.csv" : "side_markers.csv";
        write_planar_markers_csv(opts.out_dir + "/" + name, pm, plane);
        outputs.push_back(name);
    }

    if (opts.render) {
        RenderParams params;
        if (!opts.render_params_path.empty()) {
            params = render_from_json(load_json_file(opts.render_params_path));
            configs.push_back(opts.render_params_path);
        }
        params.pixel_scale = geom.pixel_scale;
        params.seed = opts.seed;
        const BiplaneImages images = render_biplane(world, design, geom, params);
        write_pgm(opts.out_dir + "/front.pgm", images.front);
        write_pgm(opts.out_dir + "/side.pgm", images.side);
        outputs.push_back("front.pgm");
        outputs.push_back("side.pgm");
    }

    Json truth;
    truth["type"] = "truth";
    truth["cx"] = std::vector<double>(coeffs.cx.data(), coeffs.cx.data() + coeffs.cx.size());
    truth["cy"] = std::vector<double>(coeffs.cy.data(), coeffs.cy.data() + coeffs.cy.size());
    truth["sigma_rad"] = sigma;
    truth["noise_mm"] = opts.noise;
    truth["seed"] = spec.seeded ? Json(spec.seed) : Json(nullptr);
    truth["backbone"] = backbone_to_json(propagate(coeffs, Pose::identity(), design.length,
                                                   design.length / 100.0));
    Json markers_json = Json::array();
    for (const auto& p : world.ordered()) markers_json.push_back({p.x(), p.y(), p.z()});
    truth["markers_world"] = markers_json;
    save_json_file(opts.out_dir + "/truth.json", truth);
    outputs.push_back("truth.json");

    write_manifest(opts.out_dir, "simulate", configs, opts.seed, outputs);
}

void run_segment(const SegmentOptions& opts) {
    const GrayImage image = read_pgm(opts.image_path);
    SegmentationParams params;
    std::vector<std::string> configs;
    if (!opts.params_path.empty()) {
        params = segmentation_from_json(load_json_file(opts.params_path));
        configs.push_back(opts.params_path);
    }
    ensure_directory(opts.out_dir);

    MarkerDetections det = segment(image, params);
    if (!opts.design_path.empty()) {
        const CatheterDesign design = design_from_json(load_json_file(opts.design_path));
        configs.push_back(opts.design_path);
        det = classify(det, design, ExpectedAreas::from_design(design, image.pixel_scale));
    }
    write_detections_csv(opts.out_dir + "/detections.csv", det);
    write_manifest(opts.out_dir, "segment", configs, 0, {"detections.csv"});
}

namespace {

PlanarMarkers load_planar(const std::string& path, const CatheterDesign& design,
                          const SegmentationParams& seg_params, double pixel_scale) {
    if (has_suffix(path, ".pgm")) {
        const GrayImage image = read_pgm(path);
        MarkerDetections det = segment(image, seg_params);
        det = classify(det, design, ExpectedAreas::from_design(design, pixel_scale));
        return planar_from_detections(det, path);
    }
    const CsvTable table = read_csv(path);
    if (table.column("label") >= 0) return planar_from_detections(read_detections_csv(path), path);
    return read_planar_markers_csv(path);
}

}  // namespace

void run_reconstruct(const ReconstructOptions& opts) {
    const CatheterDesign design = design_from_json(load_json_file(opts.design_path));
    const BiplaneGeometry geom = geometry_from_json(load_json_file(opts.geometry_path));
    ensure_directory(opts.out_dir);

    SegmentationParams seg_params;
    const PlanarMarkers front = load_planar(opts.front_path, design, seg_params, geom.pixel_scale);
    const PlanarMarkers side = load_planar(opts.side_path, design, seg_params, geom.pixel_scale);

    ReconstructionParams params;
    params.epipolar_gate = ReconstructionParams::gate_for_noise(opts.noise);
    const OrderedMarkerSet set = reconstruct_markers(front, side, geom, design, params);
    write_world_markers_csv(opts.out_dir + "/markers_world.csv", set);
    write_manifest(opts.out_dir, "reconstruct", {opts.design_path, opts.geometry_path}, 0,
                   {"markers_world.csv"});
}

void run_estimate(const EstimateOptions& opts) {
    const CatheterDesign design = design_from_json(load_json_file(opts.design_path));
    const OrderedMarkerSet markers = read_world_markers_csv(opts.markers_path);
    EstimatorConfig cfg;
    std::vector<std::string> configs = {opts.design_path};
    if (!opts.estimator_path.empty()) {
        cfg = estimator_from_json(load_json_file(opts.estimator_path));
        configs.push_back(opts.estimator_path);
    }
    ensure_directory(opts.out_dir);

    std::vector<std::string> outputs;
    for (int order : opts.orders) {
        require(order >= 1, ErrorCode::config, "estimate: order must be >= 1");
        const PoseEstimate est =
            estimate(markers, design, cfg, ModalCoefficients::zero(order), 0.0);
        const std::string tag = "m" + std::to_string(order);
        save_json_file(opts.out_dir + "/estimate_" + tag + ".json", estimate_to_json(est));
        write_backbone_csv(opts.out_dir + "/backbone_" + tag + ".csv", est.backbone(design, 101));
        outputs.push_back("estimate_" + tag + ".json");
        outputs.push_back("backbone_" + tag + ".csv");
    }
    write_manifest(opts.out_dir, "estimate", configs, 0, outputs);
}

void run_study_command(const StudyOptions& opts) {
    Json j = load_json_file(opts.config_path);
    // --kind overrides the config's kind and re-resolves that kind's preset.
    if (!opts.kind.empty() && j.is_object()) j["kind"] = opts.kind;
    const StudyConfig cfg = study_from_json(j);
    ensure_directory(opts.out_dir);

    const StudyResult result = run_study(cfg, opts.jobs);
    save_json_file(opts.out_dir + "/summary.json", study_summary_json(cfg, result));
    write_trials_csv(opts.out_dir + "/trials.csv", result);
    write_plotdata_csv(opts.out_dir + "/plotdata.csv", result);
    write_manifest(opts.out_dir, "study", {opts.config_path}, cfg.master_seed,
                   {"summary.json", "trials.csv", "plotdata.csv"});
}

void run_pipeline(const PipelineOptions& opts) {
    const CatheterDesign design = design_from_json(load_json_file(opts.design_path));
    const BiplaneGeometry geom = geometry_from_json(load_json_file(opts.geometry_path));
    SegmentationParams seg_params;
    std::vector<std::string> configs = {opts.design_path, opts.geometry_path};
    if (!opts.seg_params_path.empty()) {
        seg_params = segmentation_from_json(load_json_file(opts.seg_params_path));
        configs.push_back(opts.seg_params_path);
    }
    EstimatorConfig est_cfg;
    if (!opts.estimator_path.empty()) {
        est_cfg = estimator_from_json(load_json_file(opts.estimator_path));
        configs.push_back(opts.estimator_path);
    }
    ensure_directory(opts.out_dir);

    Json report;
    report["type"] = "pipeline_report";
    Json stages = Json::array();
    std::vector<std::string> outputs;

    auto start = std::chrono::steady_clock::now();
    const PlanarMarkers front = load_planar(opts.front_path, design, seg_params, geom.pixel_scale);
    stages.push_back({{"name", "segment_front"}, {"ms", elapsed_ms(start)}});
    start = std::chrono::steady_clock::now();
    const PlanarMarkers side = load_planar(opts.side_path, design, seg_params, geom.pixel_scale);
    stages.push_back({{"name", "segment_side"}, {"ms", elapsed_ms(start)}});

    start = std::chrono::steady_clock::now();
    ReconstructionParams rparams;
    rparams.epipolar_gate = ReconstructionParams::gate_for_noise(opts.noise);
    const OrderedMarkerSet set = reconstruct_markers(front, side, geom, design, rparams);
    stages.push_back({{"name", "reconstruct"}, {"ms", elapsed_ms(start)}});
    write_world_markers_csv(opts.out_dir + "/markers_world.csv", set);
    outputs.push_back("markers_world.csv");

    Json estimates = Json::array();
    for (int order : opts.orders) {
        require(order >= 1, ErrorCode::config, "pipeline: order must be >= 1");
        start = std::chrono::steady_clock::now();
        const PoseEstimate est =
            estimate(set, design, est_cfg, ModalCoefficients::zero(order), 0.0);
        stages.push_back(
            {{"name", "estimate_m" + std::to_string(order)}, {"ms", elapsed_ms(start)}});
        const std::string tag = "m" + std::to_string(order);
        save_json_file(opts.out_dir + "/estimate_" + tag + ".json", estimate_to_json(est));
        write_backbone_csv(opts.out_dir + "/backbone_" + tag + ".csv", est.backbone(design, 101));
        outputs.push_back("estimate_" + tag + ".json");
        outputs.push_back("backbone_" + tag + ".csv");

        double rms = 0.0;
        for (double r : est.residual_per_marker) rms += r * r;
        if (!est.residual_per_marker.empty())
            rms = std::sqrt(rms / static_cast<double>(est.residual_per_marker.size()));
        estimates.push_back({{"order", order},
                             {"file", "estimate_" + tag + ".json"},
                             {"residual_rms_mm", rms},
                             {"converged", est.converged}});
    }
    report["stages"] = stages;
    report["estimates"] = estimates;
    save_json_file(opts.out_dir + "/report.json", report);
    outputs.push_back("report.json");
    write_manifest(opts.out_dir, "pipeline", configs, 0, outputs);
}

}  // namespace cathtrack
