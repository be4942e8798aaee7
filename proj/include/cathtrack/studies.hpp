#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cathtrack/estimator.hpp"
#include "cathtrack/rng.hpp"

namespace cathtrack {

struct ConfigurationBounds {
    double max_bend = M_PI;        // bound on the integrated bend angle, rad
    double coeff_magnitude = 0.0;  // per-order uniform bound, 1/mm; 0 selects max_bend/L

    double magnitude_for(double length) const {
        return coeff_magnitude > 0.0 ? coeff_magnitude : max_bend / length;
    }
};

// Integrated bend angle of the strain field over [0, L] (501-point trapezoid).
double total_bend(const ModalCoefficients& c, double length);

// Uniform coefficients inside the per-order box, rejection-sampled until the
// integrated bend fits the bound; roll uniform over (-pi, pi].
std::pair<ModalCoefficients, double> sample_configuration(Rng& rng,
                                                          const ConfigurationBounds& bounds,
                                                          int order, double length);

// RMS positional gap between two frame fields sampled at the same arc-lengths.
double shape_error(const BackbonePath& estimated, const BackbonePath& truth);

// RMS twist (about the local tangent) between two material frame fields, degrees.
double roll_error_deg(const BackbonePath& estimated_material, const BackbonePath& truth_material);

enum class StudyKind { spacing, slenderness, dropped };

const char* study_kind_name(StudyKind kind);

struct StudyConfig {
    StudyKind kind = StudyKind::spacing;
    int configurations_per_design = 25;
    double noise_front = 0.5;  // mm
    double noise_side = 0.5;   // mm
    std::uint64_t master_seed = 20260808;
    int backbone_samples = 101;
    int truth_order = 3;
    std::vector<int> estimation_orders = {3};  // dropped study default: {2, 3, 4}
    ConfigurationBounds bounds{M_PI / 2.0, 0.0};  // study workspace: bends to 90 degrees
    EstimatorConfig estimator;  // cold-start settings; priors ignored

    // Shared catheter family.
    double length = 25.0;
    double band_offset = 3.0;  // base band separation of every study design, mm

    // Spacing sweep: marker counts along a constant-angular-spacing helix
    // (or a fixed-turn one when spacing_angular_spacing = 0). The default
    // family reproduces the published sweep endpoints: n=1 near kappa 25 and
    // n=71 near kappa 1.5 at the 0.5 mm reference uncertainty.
    std::vector<int> spacing_marker_counts = {1,  4,  8,  12, 16, 20, 24, 28,
                                              32, 36, 41, 47, 55, 63, 71};
    double spacing_length = 25.0;
    double spacing_radius = 1.3;
    double spacing_margin = 2.0;
    double spacing_turns = 2.0;
    double spacing_angular_spacing = 0.54;  // rad; 0 selects the turns form

    // Slenderness sweep: radius grid at fixed marker count.
    std::vector<double> slenderness_radii;  // empty selects 20 log-spaced points in [0.2, 4]
    int slenderness_marker_count = 25;
    double slenderness_angular_spacing = M_PI / 2.0;
    double slenderness_margin = 1.0;

    // Dropped-marker study: one design, estimation orders swept. Its
    // workspace spans the full bend range (the navigation scenario), while
    // the design sweeps default to gentler configurations.
    int dropped_marker_count = 12;
    double dropped_radius = 1.0;
    double dropped_angular_spacing = M_PI / 2.0;
    double dropped_margin = 2.0;

    // Calibrated defaults per study kind (workspace bound, estimation
    // orders). JSON configs start from the preset of their "kind" and
    // override fields explicitly.
    static StudyConfig preset(StudyKind kind);

    void validate() const;
    std::vector<double> slenderness_grid() const;
};

enum class TrialVariant { control = 0, dropped = 1 };

struct TrialRecord {
    int design_index = 0;
    double x = 0.0;  // kappa, L/r, or estimation order
    int config_index = 0;
    int order = 3;
    TrialVariant variant = TrialVariant::control;
    double ep_norm = 0.0;  // shape error / L
    double er_deg = 0.0;
    bool converged = false;
    bool failed = false;
    std::string failure;
};

struct DesignPointStats {
    int design_index = 0;
    double x = 0.0;
    int order = 3;
    TrialVariant variant = TrialVariant::control;
    int marker_count = 0;
    double spacing = 0.0;  // d, mm
    double ep_mean = 0.0, ep_sd = 0.0;  // fractions of L
    double er_mean = 0.0, er_sd = 0.0;  // degrees
    int trials = 0;
    int failures = 0;
    bool flagged = false;  // >20% of trials failed
};

struct StudyResult {
    StudyKind kind = StudyKind::spacing;
    std::vector<TrialRecord> trials;
    std::vector<DesignPointStats> points;
};

// Runs every (design, configuration, order, variant) trial with deterministic
// per-trial substreams, in parallel across jobs; results are reduced in index
// order so the output is independent of the job count.
StudyResult run_study(const StudyConfig& cfg, int jobs = 0);

// Design used by a given study design-point (exposed for tests and the CLI).
CatheterDesign study_design(const StudyConfig& cfg, int design_index);
double study_design_spacing(const StudyConfig& cfg, int design_index);  // d, mm
double study_design_length(const StudyConfig& cfg);
int study_design_count(const StudyConfig& cfg);

}  // namespace cathtrack
