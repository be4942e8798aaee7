#pragma once

#include <Eigen/Dense>

namespace cathtrack {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Rigid transform, rotation + translation. Millimeters throughout.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 position = Vec3::Zero();

    Pose() = default;
    Pose(const Mat3& r, const Vec3& p) : rotation(r), position(p) {}

    Vec3 apply(const Vec3& local) const { return rotation * local + position; }

    Pose compose(const Pose& rhs) const {
        return {rotation * rhs.rotation, rotation * rhs.position + position};
    }

    static Pose identity() { return {}; }
};

inline Mat3 skew(const Vec3& w) {
    Mat3 m;
    m << 0, -w.z(), w.y(),
         w.z(), 0, -w.x(),
         -w.y(), w.x(), 0;
    return m;
}

inline Mat3 rot_z(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    Mat3 m;
    m << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return m;
}

// Rodrigues' formula.
inline Mat3 so3_exp(const Vec3& w) {
    const double theta = w.norm();
    const Mat3 wx = skew(w);
    if (theta < 1e-8) {
        return Mat3::Identity() + wx + 0.5 * wx * wx;
    }
    const double s = std::sin(theta), c = std::cos(theta);
    return Mat3::Identity() + (s / theta) * wx + ((1.0 - c) / (theta * theta)) * wx * wx;
}

// Closed-form exponential of the twist (angular u, linear e_z) scaled by arc step h.
// Returns the incremental pose: rotation exp(h*[u]x), translation V(h*u)*(h*e_z).
inline Pose se3_exp_step(const Vec3& u, double h) {
    const Vec3 w = h * u;
    const double theta = w.norm();
    const Mat3 wx = skew(w);
    Mat3 v;
    if (theta < 1e-8) {
        v = Mat3::Identity() + 0.5 * wx + (1.0 / 6.0) * wx * wx;
    } else {
        const double t2 = theta * theta;
        v = Mat3::Identity() + ((1.0 - std::cos(theta)) / t2) * wx +
            ((theta - std::sin(theta)) / (t2 * theta)) * wx * wx;
    }
    Pose step;
    step.rotation = so3_exp(w);
    step.position = v * Vec3(0, 0, h);
    return step;
}

inline double wrap_angle(double a) {
    // Wrap to (-pi, pi].
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

// Rotation angle of q about the z axis (twist component of the swing-twist split).
inline double twist_about_z(const Mat3& q) {
    return std::atan2(q(1, 0) - q(0, 1), q(0, 0) + q(1, 1));
}

}  // namespace cathtrack
