#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cathtrack/types.hpp"

namespace cathtrack {

enum class Plane { front = 0, side = 1 };

// Two orthographic imaging planes given as world-to-plane rotations: the
// first two rows are the in-plane axes, the third row is the plane normal.
// The canonical setup is AP/lateral (front normal along world -y, side
// normal along world +x) with world z shared as both planes' vertical axis.
struct BiplaneGeometry {
    Mat3 front_rotation = Mat3::Identity();
    Mat3 side_rotation = Mat3::Identity();
    double pixel_scale = 0.35;  // mm per pixel, used by rendering/segmentation

    static BiplaneGeometry canonical(double pixel_scale_mm = 0.35);

    const Mat3& rotation(Plane p) const { return p == Plane::front ? front_rotation : side_rotation; }
    Vec3 normal(Plane p) const { return rotation(p).row(2).transpose(); }

    void validate() const;
};

// Planar segmentation uncertainty: displacements drawn uniformly from the
// disk of the per-plane radius. Streams split per plane from the seed.
struct NoiseModel {
    double front_radius = 0.0;  // mm
    double side_radius = 0.0;   // mm
    std::uint64_t seed = 0;

    double radius(Plane p) const { return p == Plane::front ? front_radius : side_radius; }
};

// In-plane coordinates of the orthographic projection of a world point.
Vec2 project_point(const Vec3& world, Plane plane, const BiplaneGeometry& geom);

std::vector<Vec2> perturb(std::span<const Vec2> points, const NoiseModel& noise, Plane plane);

// World point minimizing the stacked projector residual
// |P_f p - lift_f|^2 + |P_s p - lift_s|^2 with P = I - n n^T.
Vec3 triangulate(const Vec2& front, const Vec2& side, const BiplaneGeometry& geom);

// Perpendicular distance from q (secondary plane) to the epipolar line of p
// (primary plane): the primary back-projection ray projected into the
// secondary plane.
double epipolar_distance(const Vec2& q_secondary, const Vec2& p_primary, Plane primary,
                         const BiplaneGeometry& geom);

inline Plane other(Plane p) { return p == Plane::front ? Plane::side : Plane::front; }

}  // namespace cathtrack
