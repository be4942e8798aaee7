// Command-line front end. Parses flags, hands the work to the shared
// library through the C API, and maps failures to machine-readable JSON on
// stderr plus the documented exit codes (0 ok, 2 config, 3 numeric, 4 io).

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cathtrack.h"

namespace {

int fail_with(ct_status status) {
    const char* kind = ct_status_name(status);
    std::cerr << "{\"error\":{\"code\":" << static_cast<int>(status) << ",\"kind\":\"" << kind
              << "\",\"message\":\"";
    for (const char* p = ct_last_error(); *p; ++p) {
        if (*p == '"' || *p == '\\') std::cerr << '\\';
        std::cerr << *p;
    }
    std::cerr << "\"}}" << std::endl;
    // invalid_argument surfaces as a config failure at the CLI boundary
    return status == CT_ERROR_INVALID_ARGUMENT ? 2 : static_cast<int>(status);
}

const char* opt(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::uint64_t env_u64(const char* name, std::uint64_t fallback) {
    const char* v = std::getenv(name);
    return v ? std::strtoull(v, nullptr, 10) : fallback;
}

int env_int(const char* name, int fallback) {
    const char* v = std::getenv(name);
    return v ? static_cast<int>(std::strtol(v, nullptr, 10)) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"biplane catheter shape and pose tracking toolkit"};
    app.set_version_flag("--version", ct_version());
    app.require_subcommand(1);

    // Environment overrides for the common flags (documented in the README).
    std::uint64_t seed = env_u64("CATHTRACK_SEED", 0);
    int jobs = env_int("CATHTRACK_JOBS", 0);

    std::string design, geometry, pose, out_dir, render_params;
    std::string front, side, markers, estimator, seg_params, image, kind, config;
    std::vector<int> orders;
    double noise = 0.0;
    bool render = false;
    bool no_classify = false;
    int order = 3;

    auto* simulate = app.add_subcommand("simulate", "forward-simulate planar marker observations");
    simulate->add_option("--design", design, "catheter design config")->required();
    simulate->add_option("--geometry", geometry, "biplane geometry config")->required();
    simulate->add_option("--pose", pose, "pose spec config (explicit or seeded)");
    simulate->add_option("--seed", seed, "seed for the sampled configuration");
    simulate->add_option("--order", order, "modal order of seed-driven configurations");
    simulate->add_option("--noise", noise, "planar uncertainty radius, mm");
    simulate->add_flag("--render", render, "also write front.pgm/side.pgm");
    simulate->add_option("--render-params", render_params, "render params config");
    simulate->add_option("--out", out_dir, "output directory")->required();

    auto* segment = app.add_subcommand("segment", "segment a PGM frame into marker detections");
    segment->add_option("--image", image, "input PGM")->required();
    segment->add_option("--params", seg_params, "segmentation params config");
    segment->add_option("--design", design, "catheter design config (enables labeling)");
    segment->add_flag("--no-classify", no_classify, "emit unlabeled detections");
    segment->add_option("--out", out_dir, "output directory")->required();

    auto* reconstruct = app.add_subcommand("reconstruct", "order, match, and triangulate markers");
    reconstruct->add_option("--front", front, "front markers/detections CSV")->required();
    reconstruct->add_option("--side", side, "side markers/detections CSV")->required();
    reconstruct->add_option("--design", design, "catheter design config")->required();
    reconstruct->add_option("--geometry", geometry, "biplane geometry config")->required();
    reconstruct->add_option("--noise", noise, "planar uncertainty radius, mm (sets the gate)");
    reconstruct->add_option("--out", out_dir, "output directory")->required();

    auto* estimate = app.add_subcommand("estimate", "solve shape and roll from world markers");
    estimate->add_option("--markers", markers, "world markers CSV")->required();
    estimate->add_option("--design", design, "catheter design config")->required();
    estimate->add_option("--estimator", estimator, "estimator config");
    estimate->add_option("--order", orders, "modal order (repeatable)");
    estimate->add_option("--out", out_dir, "output directory")->required();

    auto* study = app.add_subcommand("study", "run a Monte-Carlo design study");
    study->add_option("--kind", kind, "spacing|slenderness|dropped")
        ->check(CLI::IsMember({"spacing", "slenderness", "dropped"}));
    study->add_option("--config", config, "study config")->required();
    study->add_option("--jobs", jobs, "worker threads (default: logical cores)");
    study->add_option("--out", out_dir, "output directory")->required();

    auto* pipeline = app.add_subcommand("pipeline", "segment + reconstruct + estimate");
    pipeline->add_option("--front", front, "front PGM or CSV")->required();
    pipeline->add_option("--side", side, "side PGM or CSV")->required();
    pipeline->add_option("--design", design, "catheter design config")->required();
    pipeline->add_option("--geometry", geometry, "biplane geometry config")->required();
    pipeline->add_option("--seg-params", seg_params, "segmentation params config");
    pipeline->add_option("--estimator", estimator, "estimator config");
    pipeline->add_option("--order", orders, "modal order (repeatable)");
    pipeline->add_option("--noise", noise, "planar uncertainty radius, mm");
    pipeline->add_option("--out", out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    if (orders.empty()) orders = {3};
    ct_status status = CT_OK;

    if (*simulate) {
        ct_simulate_opts o{};
        o.design_path = design.c_str();
        o.geometry_path = geometry.c_str();
        o.pose_path = opt(pose);
        o.seed = seed;
        o.noise_mm = noise;
        o.render = render ? 1 : 0;
        o.render_params_path = opt(render_params);
        o.order = order;
        o.out_dir = out_dir.c_str();
        status = ct_run_simulate(&o);
    } else if (*segment) {
        ct_segment_opts o{};
        o.image_path = image.c_str();
        o.params_path = opt(seg_params);
        o.design_path = no_classify ? nullptr : opt(design);
        o.out_dir = out_dir.c_str();
        status = ct_run_segment(&o);
    } else if (*reconstruct) {
        ct_reconstruct_opts o{};
        o.front_path = front.c_str();
        o.side_path = side.c_str();
        o.design_path = design.c_str();
        o.geometry_path = geometry.c_str();
        o.noise_mm = noise;
        o.out_dir = out_dir.c_str();
        status = ct_run_reconstruct(&o);
    } else if (*estimate) {
        ct_estimate_opts o{};
        o.markers_path = markers.c_str();
        o.design_path = design.c_str();
        o.estimator_path = opt(estimator);
        o.orders = orders.data();
        o.order_count = static_cast<int>(orders.size());
        o.out_dir = out_dir.c_str();
        status = ct_run_estimate(&o);
    } else if (*study) {
        ct_study_opts o{};
        o.kind = opt(kind);
        o.config_path = config.c_str();
        o.jobs = jobs;
        o.out_dir = out_dir.c_str();
        status = ct_run_study(&o);
    } else if (*pipeline) {
        ct_pipeline_opts o{};
        o.front_path = front.c_str();
        o.side_path = side.c_str();
        o.design_path = design.c_str();
        o.geometry_path = geometry.c_str();
        o.seg_params_path = opt(seg_params);
        o.estimator_path = opt(estimator);
        o.orders = orders.data();
        o.order_count = static_cast<int>(orders.size());
        o.noise_mm = noise;
        o.out_dir = out_dir.c_str();
        status = ct_run_pipeline(&o);
    }

    return status == CT_OK ? 0 : fail_with(status);
}
