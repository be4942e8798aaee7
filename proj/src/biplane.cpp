#include "cathtrack/biplane.hpp"

#include <cmath>

#include "cathtrack/errors.hpp"
#include "cathtrack/rng.hpp"

namespace cathtrack {

namespace {

constexpr double kParallelGate = 0.999;

// World vector of a planar point embedded in its plane through the origin.
Vec3 lift(const Vec2& planar, const Mat3& world_to_plane) {
    return world_to_plane.row(0).transpose() * planar.x() +
           world_to_plane.row(1).transpose() * planar.y();
}

void check_orthonormal(const Mat3& r, const char* which) {
    const double defect = (r.transpose() * r - Mat3::Identity()).norm();
    require(defect < 1e-9, ErrorCode::config,
            std::string("geometry: ") + which + " rotation is not orthonormal");
}

}  // namespace

BiplaneGeometry BiplaneGeometry::canonical(double pixel_scale_mm) {
    BiplaneGeometry g;
    // Front (AP): image x = world x, image y = world z, normal = -world y.
    g.front_rotation << 1, 0, 0,
                        0, 0, 1,
                        0, -1, 0;
    // Side (lateral): image x = world y, image y = world z, normal = world x.
    g.side_rotation << 0, 1, 0,
                       0, 0, 1,
                       1, 0, 0;
    g.pixel_scale = pixel_scale_mm;
    return g;
}

void BiplaneGeometry::validate() const {
    check_orthonormal(front_rotation, "front");
    check_orthonormal(side_rotation, "side");
    require(pixel_scale > 0.0, ErrorCode::config, "geometry: pixel scale must be positive");
    const double dot = std::abs(normal(Plane::front).dot(normal(Plane::side)));
    require(dot < kParallelGate, ErrorCode::config,
            "geometry: imaging planes are (near) parallel");
}

Vec2 project_point(const Vec3& world, Plane plane, const BiplaneGeometry& geom) {
    const Vec3 q = geom.rotation(plane) * world;
    return {q.x(), q.y()};
}

std::vector<Vec2> perturb(std::span<const Vec2> points, const NoiseModel& noise, Plane plane) {
    const double radius = noise.radius(plane);
    std::vector<Vec2> out(points.begin(), points.end());
    if (radius <= 0.0) return out;
    Rng rng = Rng::substream(noise.seed, {0x70657274ull, static_cast<std::uint64_t>(plane)});
    for (auto& p : out) p += rng.in_disk(radius);
    return out;
}

Vec3 triangulate(const Vec2& front, const Vec2& side, const BiplaneGeometry& geom) {
    const Vec3 nf = geom.normal(Plane::front);
    const Vec3 ns = geom.normal(Plane::side);
    require(std::abs(nf.dot(ns)) < kParallelGate, ErrorCode::numeric,
            "triangulate: stacked projector is rank deficient (parallel planes)");

    // Normal equations of the stacked system; projectors are idempotent and
    // symmetric, so the coefficient matrix is P_f + P_s.
    const Mat3 a = 2.0 * Mat3::Identity() - nf * nf.transpose() - ns * ns.transpose();
    const Vec3 b = lift(front, geom.front_rotation) + lift(side, geom.side_rotation);
    return a.ldlt().solve(b);
}

double epipolar_distance(const Vec2& q_secondary, const Vec2& p_primary, Plane primary,
                         const BiplaneGeometry& geom) {
    const Plane secondary = other(primary);
    const Mat3& rp = geom.rotation(primary);
    const Mat3& rs = geom.rotation(secondary);

    // Back-projection ray of p, pushed into the secondary plane.
    const Vec3 anchor3 = rs * lift(p_primary, rp);
    const Vec3 dir3 = rs * geom.normal(primary);
    const Vec2 anchor(anchor3.x(), anchor3.y());
    Vec2 dir(dir3.x(), dir3.y());
    const double len = dir.norm();
    require(len > 1e-12, ErrorCode::numeric,
            "epipolar_distance: degenerate epipolar direction (parallel planes)");
    dir /= len;

    const Vec2 delta = q_secondary - anchor;
    return std::abs(delta.x() * dir.y() - delta.y() * dir.x());
}

}  // namespace cathtrack
