#pragma once

#include <Eigen/Dense>

#include "cathtrack/errors.hpp"

namespace cathtrack {

// Geometry of the tracked distal segment: backbone length L, cross-section
// radius r, and the surface marker layout. Band positions are implicit: one
// band at s=0 (base), one at s=-base_band_offset along the straight proximal
// extension (base'), one at s=L (tip).
struct CatheterDesign {
    double length = 25.0;             // L, mm
    double radius = 1.0;              // r, mm
    Eigen::VectorXd marker_arclengths;  // s_d, mm, strictly increasing in (0, L)
    Eigen::VectorXd marker_angles;       // beta_d, rad
    double base_band_offset = 3.0;    // delta_b, mm
    double band_width = 2.0;          // axial extent of tip/base bands, mm (rendering)
    double marker_diameter = 1.5;     // intermediate marker dot diameter, mm (rendering)

    int marker_count() const { return static_cast<int>(marker_arclengths.size()); }

    void validate() const;
};

struct HelixSpec {
    double pitch = 1.0;            // lambda, mm per radian
    double angular_spacing = 1.0;  // delta beta, rad, nonzero
    double start_angle = 0.0;      // beta_0, rad
};

// Equally spaced helical layout, centered in the tracked segment: markers at
// s_i = s1 + pitch*angular_spacing*(i-1), beta_i = start_angle + angular_spacing*(i-1).
// Rejects layouts whose markers do not fall strictly inside (0, L).
CatheterDesign build_helical_design(double length, double radius, int n, const HelixSpec& helix);

// Straight-configuration distance between consecutive helix markers:
// d = sqrt(4 r^2 sin^2(dbeta/2) + pitch^2 dbeta^2).
double marker_spacing(double radius, const HelixSpec& helix);

// kappa = d / N.
double spacing_factor(double spacing, double uncertainty);

}  // namespace cathtrack
