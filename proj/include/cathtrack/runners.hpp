#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cathtrack/config.hpp"
#include "cathtrack/estimator.hpp"

namespace cathtrack {

// High-level command implementations behind the CLI and the C API. Every
// runner validates its configs, writes its outputs plus a manifest into the
// output directory, and throws cathtrack::Error on failure.

struct SimulateOptions {
    std::string design_path;
    std::string geometry_path;
    std::string pose_path;  // optional; empty selects a seed-driven configuration
    std::uint64_t seed = 0;
    double noise = 0.0;  // planar uncertainty radius applied to both planes, mm
    bool render = false;
    std::string render_params_path;  // optional
    int order = 3;                   // modal order of seed-driven configurations
    std::string out_dir;
};
void run_simulate(const SimulateOptions& opts);

struct SegmentOptions {
    std::string image_path;
    std::string params_path;  // optional
    std::string design_path;  // optional; enables labeling
    std::string out_dir;
};
void run_segment(const SegmentOptions& opts);

struct ReconstructOptions {
    std::string front_path;  // planar markers or detections CSV
    std::string side_path;
    std::string design_path;
    std::string geometry_path;
    double noise = 0.0;  // sets the epipolar gate
    std::string out_dir;
};
void run_reconstruct(const ReconstructOptions& opts);

struct EstimateOptions {
    std::string markers_path;  // world markers CSV
    std::string design_path;
    std::string estimator_path;  // optional
    std::vector<int> orders = {3};
    std::string out_dir;
};
void run_estimate(const EstimateOptions& opts);

struct StudyOptions {
    std::string kind;  // overrides the config's kind when nonempty
    std::string config_path;
    int jobs = 0;
    std::string out_dir;
};
void run_study_command(const StudyOptions& opts);

struct PipelineOptions {
    std::string front_path;  // .pgm (segmented) or .csv (planar markers)
    std::string side_path;
    std::string design_path;
    std::string geometry_path;
    std::string seg_params_path;  // optional
    std::string estimator_path;   // optional
    std::vector<int> orders = {3};
    double noise = 0.0;
    std::string out_dir;
};
void run_pipeline(const PipelineOptions& opts);

Json estimate_to_json(const PoseEstimate& estimate);

}  // namespace cathtrack
