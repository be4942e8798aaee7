#pragma once

#include <span>
#include <vector>

#include "cathtrack/marker_design.hpp"
#include "cathtrack/types.hpp"

namespace cathtrack {

// Chebyshev-series bending strain. cx/cy weight the same m-term basis in the
// two bending directions; torsion is structurally absent.
struct ModalCoefficients {
    Eigen::VectorXd cx;
    Eigen::VectorXd cy;

    ModalCoefficients() = default;
    ModalCoefficients(Eigen::VectorXd x, Eigen::VectorXd y);

    static ModalCoefficients zero(int order);
    static ModalCoefficients from_stacked(const Eigen::VectorXd& v);

    int order() const { return static_cast<int>(cx.size()); }
    Eigen::VectorXd stacked() const;

    // Coefficients whose strain field is Rz(alpha) times this one's.
    ModalCoefficients rotated(double alpha) const;
};

// First-kind Chebyshev values [T_0(x), ..., T_{m-1}(x)] by the three-term
// recurrence. x must lie in [-1, 1] (tolerance 1e-12).
Eigen::VectorXd chebyshev_basis(double x, int order);

// Body-frame curvature u(s) = (phi(s)·cx, phi(s)·cy, 0), 1/mm. The basis is
// evaluated at x = 2 s / L - 1.
Vec3 strain_at(double s, const ModalCoefficients& c, double length);

struct FrameSample {
    double s = 0.0;   // arc-length, mm
    Mat3 rotation = Mat3::Identity();
    Vec3 position = Vec3::Zero();

    Vec3 tangent() const { return rotation.col(2); }
};

struct BackbonePath {
    std::vector<FrameSample> samples;  // strictly increasing s, s[0]=0, s.back()=L
    double length = 0.0;
};

// Integrates the frame field along arc-length by composing closed-form rigid
// exponentials of the sampled twist, one per step. The strain is sampled at
// the step midpoint, which keeps the tip error O(ds^2); for constant strain
// every step is exact. A non-divisible L/ds shortens the final step to land
// on s = L exactly.
BackbonePath propagate(const ModalCoefficients& c, const Pose& base, double length, double ds);

// Frames at the given arc-lengths (each in [0, L], ascending not required).
// Integration grid is the uniform ds grid with exact landings inserted at
// every query point.
std::vector<FrameSample> frames_at(const ModalCoefficients& c, const Pose& base, double length,
                                   double ds, std::span<const double> queries);

struct MarkerWorld {
    std::vector<Vec3> intermediates;  // design order
    Vec3 base_prime = Vec3::Zero();
    Vec3 base = Vec3::Zero();
    Vec3 tip = Vec3::Zero();
    Vec3 base_tangent = Vec3::UnitZ();  // world direction of the backbone at s=0
    Vec3 tip_tangent = Vec3::UnitZ();

    // [b', b, 1..n, e]
    std::vector<Vec3> ordered() const;
};

// World positions of every marker for shape c and roll sigma:
// p_i = p(s_i) + R(s_i) * (r cos(beta_i + sigma), r sin(beta_i + sigma), 0).
// Bands sit on the backbone at s = -delta_b (straight proximal extension of
// the base tangent), s = 0, and s = L.
MarkerWorld marker_world_positions(const CatheterDesign& design, const ModalCoefficients& c,
                                   double sigma, const Pose& base, double ds);

// Frames carrying the marker material directions: rotation * Rz(sigma).
BackbonePath material_path(const BackbonePath& path, double sigma);

}  // namespace cathtrack
