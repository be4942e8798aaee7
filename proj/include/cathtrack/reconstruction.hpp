#pragma once

#include <span>
#include <utility>
#include <vector>

#include "cathtrack/biplane.hpp"
#include "cathtrack/marker_design.hpp"

namespace cathtrack {

// Classified planar observations for one plane.
struct PlanarMarkers {
    Vec2 base_prime = Vec2::Zero();
    Vec2 base = Vec2::Zero();
    Vec2 tip = Vec2::Zero();
    std::vector<Vec2> intermediates;  // unordered
};

struct ReconstructionParams {
    double epipolar_gate = 1.5;      // mm; callers usually set max(3*N, 1e-6)
    double spacing_tolerance = 0.5;   // relative gap mismatch accepted by detect_missing
    double ambiguity_ratio = 0.10;    // closeness ratio that triggers a warning

    static double gate_for_noise(double noise_radius) {
        return std::max(3.0 * noise_radius, 1e-6);
    }
};

// Intermediate points sorted by Euclidean distance from the tip marker.
// Output length equals input length.
std::vector<Vec2> sort_primary(std::span<const Vec2> points, const Vec2& tip);

struct Correspondence {
    std::vector<std::pair<int, int>> pairs;  // (primary chain index, secondary index)
    std::vector<int> unmatched_primary;
    std::vector<int> unmatched_secondary;
    int ambiguity_warnings = 0;
};

// Greedy epipolar matching: each primary point, in chain order, claims the
// unclaimed secondary point with the smallest epipolar distance below the
// gate. Near-ties are counted as ambiguity warnings.
Correspondence correspond(std::span<const Vec2> ordered_primary,
                          std::span<const Vec2> secondary, Plane primary_plane,
                          const BiplaneGeometry& geom, const ReconstructionParams& params);

// Assigns world-space candidates (chain [base, c_1..c_k, tip], base-to-tip)
// to design marker slots by comparing consecutive gaps against cumulative
// straight-configuration design spacings. Returns the per-slot present mask.
std::vector<bool> detect_missing(std::span<const Vec3> chain, const CatheterDesign& design,
                                 double tolerance = 0.5);

// Ordered, reconstructed marker set [b', b, 1..n, e] with a per-design-slot
// present mask. Missing slots carry unspecified positions.
struct OrderedMarkerSet {
    Vec3 base_prime = Vec3::Zero();
    Vec3 base = Vec3::Zero();
    Vec3 tip = Vec3::Zero();
    std::vector<Vec3> markers;    // design slots, base-to-tip
    std::vector<bool> present;    // per slot
    Vec3 base_tangent = Vec3::UnitZ();
    int ambiguity_warnings = 0;

    int present_count() const;
};

// Triangulates band pairs and matched intermediate pairs, infers missing
// design slots, and assembles the ordered set with the base tangent.
OrderedMarkerSet reconstruct_markers(const PlanarMarkers& front, const PlanarMarkers& side,
                                     const BiplaneGeometry& geom, const CatheterDesign& design,
                                     const ReconstructionParams& params);

// Primary plane: the one whose detections span the larger bounding-box area.
Plane choose_primary(const PlanarMarkers& front, const PlanarMarkers& side);

}  // namespace cathtrack
