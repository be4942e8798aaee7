#pragma once

#include <optional>
#include <vector>

#include "cathtrack/kinematics.hpp"
#include "cathtrack/reconstruction.hpp"

namespace cathtrack {

struct EstimatorConfig {
    double tip_weight = 10.0;
    double intermediate_weight = 1.0;
    double zeta_c = 0.0;      // damping toward prior coefficients (0 on cold start)
    double zeta_sigma = 0.0;  // damping toward prior roll
    std::optional<Eigen::VectorXd> prior_coeffs;  // stacked [cx; cy]
    std::optional<double> prior_sigma;
    double eps_c = 1e-6;      // outer convergence threshold on |c* - c0|
    double eps_sigma = 1e-6;  // outer convergence threshold on |sigma* - sigma0|
    int max_outer_iterations = 50;
    int max_inner_iterations = 100;
    double gradient_tolerance = 1e-10;
    double fd_step = 1e-6;
    double integration_step = 0.0;  // mm; 0 selects L/100
    int roll_multistart = 8;        // seeds on the first cold-start roll solve
    double base_frame_roll = 0.0;   // gauge convention angle of the completed base frame

    void validate() const;
    double step_for(double length) const {
        return integration_step > 0.0 ? integration_step : length / 100.0;
    }
};

// Deterministic base frame from the reconstructed base point and tangent.
// The in-plane orientation is a pure convention; estimates expressed in two
// different conventions predict identical world positions.
Pose base_frame_from_markers(const OrderedMarkerSet& markers, double roll_convention = 0.0);

struct Residuals {
    Eigen::VectorXd stacked;  // unweighted marker residuals, present intermediates then tip
    double cost = 0.0;        // 0.5 (e^T W e + zeta_c |c - cbar|^2 + zeta_sigma (sigma - sbar)^2)
};

Residuals residuals(const ModalCoefficients& c, double sigma, const OrderedMarkerSet& markers,
                    const CatheterDesign& design, const EstimatorConfig& cfg);

// Damped nonlinear least squares over the coefficients with the roll fixed.
ModalCoefficients solve_shape(const OrderedMarkerSet& markers, const CatheterDesign& design,
                              double sigma_fixed, const EstimatorConfig& cfg,
                              const ModalCoefficients& c0);

// Minimizes the same cost over the roll alone, wrapped to (-pi, pi].
double solve_roll(const OrderedMarkerSet& markers, const CatheterDesign& design,
                  const ModalCoefficients& c_fixed, const EstimatorConfig& cfg, double sigma0,
                  bool multistart = false);

struct PoseEstimate {
    ModalCoefficients coeffs;
    double sigma = 0.0;  // (-pi, pi]
    double final_cost = 0.0;
    int outer_iterations = 0;
    bool converged = false;
    std::vector<double> residual_per_marker;  // mm, present intermediates then tip
    std::vector<double> cost_history;         // cost after every accepted half-step
    Pose base_frame;

    int order() const { return coeffs.order(); }

    // Frame field implied by the estimate, k samples at uniform arc-length.
    BackbonePath backbone(const CatheterDesign& design, int samples) const;
};

// Alternates shape and roll solves until both updates fall below the
// thresholds or the outer iteration budget runs out. Never throws for
// non-convergence; returns the best iterate with converged=false.
PoseEstimate estimate(const OrderedMarkerSet& markers, const CatheterDesign& design,
                      const EstimatorConfig& cfg, const ModalCoefficients& c0, double sigma0);

}  // namespace cathtrack
