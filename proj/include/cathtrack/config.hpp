#pragma once

#include <string>

#include <json.hpp>

#include "cathtrack/biplane.hpp"
#include "cathtrack/estimator.hpp"
#include "cathtrack/imaging.hpp"
#include "cathtrack/marker_design.hpp"
#include "cathtrack/studies.hpp"

namespace cathtrack {

using Json = nlohmann::json;

// All configs are JSON documents with a "type" discriminator. Units are
// millimeters and radians; parsers reject unknown types and report the
// offending field on error.

Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

Json design_to_json(const CatheterDesign& design);
CatheterDesign design_from_json(const Json& j);

Json geometry_to_json(const BiplaneGeometry& geom);
BiplaneGeometry geometry_from_json(const Json& j);

Json estimator_to_json(const EstimatorConfig& cfg);
EstimatorConfig estimator_from_json(const Json& j);

Json study_to_json(const StudyConfig& cfg);
StudyConfig study_from_json(const Json& j);

Json render_to_json(const RenderParams& params);
RenderParams render_from_json(const Json& j);

Json segmentation_to_json(const SegmentationParams& params);
SegmentationParams segmentation_from_json(const Json& j);

// Pose specification for the forward simulator: either explicit coefficients
// and roll, or a seed plus sampling bounds.
struct PoseSpec {
    bool seeded = false;
    ModalCoefficients coeffs;   // explicit form
    double sigma = 0.0;
    std::uint64_t seed = 0;     // seeded form
    int order = 3;
    ConfigurationBounds bounds;
};

Json pose_spec_to_json(const PoseSpec& spec);
PoseSpec pose_spec_from_json(const Json& j);

}  // namespace cathtrack
