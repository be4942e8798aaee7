#include "cathtrack/kinematics.hpp"

#include <algorithm>
#include <cmath>

#include "cathtrack/errors.hpp"

namespace cathtrack {

ModalCoefficients::ModalCoefficients(Eigen::VectorXd x, Eigen::VectorXd y)
    : cx(std::move(x)), cy(std::move(y)) {
    require(cx.size() == cy.size(), ErrorCode::invalid_argument,
            "modal coefficient blocks must have equal length");
    require(cx.size() >= 1, ErrorCode::invalid_argument, "modal order must be at least 1");
}

ModalCoefficients ModalCoefficients::zero(int order) {
    require(order >= 1, ErrorCode::invalid_argument, "modal order must be at least 1");
    return {Eigen::VectorXd::Zero(order), Eigen::VectorXd::Zero(order)};
}

ModalCoefficients ModalCoefficients::from_stacked(const Eigen::VectorXd& v) {
    require(v.size() >= 2 && v.size() % 2 == 0, ErrorCode::invalid_argument,
            "stacked coefficient vector must have even length >= 2");
    const auto m = v.size() / 2;
    return {v.head(m), v.tail(m)};
}

Eigen::VectorXd ModalCoefficients::stacked() const {
    Eigen::VectorXd v(2 * order());
    v << cx, cy;
    return v;
}

ModalCoefficients ModalCoefficients::rotated(double alpha) const {
    const double c = std::cos(alpha), s = std::sin(alpha);
    return {c * cx - s * cy, s * cx + c * cy};
}

Eigen::VectorXd chebyshev_basis(double x, int order) {
    require(order >= 1, ErrorCode::invalid_argument, "chebyshev order must be at least 1");
    require(std::abs(x) <= 1.0 + 1e-12, ErrorCode::invalid_argument,
            "chebyshev argument outside [-1, 1]");
    x = std::clamp(x, -1.0, 1.0);
    Eigen::VectorXd t(order);
    t(0) = 1.0;
    if (order > 1) t(1) = x;
    for (int k = 2; k < order; ++k) t(k) = 2.0 * x * t(k - 1) - t(k - 2);
    return t;
}

Vec3 strain_at(double s, const ModalCoefficients& c, double length) {
    require(length > 0.0, ErrorCode::invalid_argument, "segment length must be positive");
    require(s >= -1e-12 && s <= length + 1e-12, ErrorCode::invalid_argument,
            "arc-length outside [0, L]");
    const Eigen::VectorXd phi = chebyshev_basis(2.0 * s / length - 1.0, c.order());
    return {phi.dot(c.cx), phi.dot(c.cy), 0.0};
}

namespace {

// One integration pass over an explicit step grid; records a frame at every
// grid node. Midpoint strain sampling per step.
std::vector<FrameSample> integrate_grid(const ModalCoefficients& c, const Pose& base,
                                        double length, const std::vector<double>& grid) {
    std::vector<FrameSample> out;
    out.reserve(grid.size());
    Pose t = base;
    out.push_back({grid.front(), t.rotation, t.position});
    for (std::size_t j = 1; j < grid.size(); ++j) {
        const double s0 = grid[j - 1];
        const double h = grid[j] - s0;
        const Vec3 u = strain_at(s0 + 0.5 * h, c, length);
        t = t.compose(se3_exp_step(u, h));
        out.push_back({grid[j], t.rotation, t.position});
    }
    return out;
}

std::vector<double> uniform_grid(double length, double ds) {
    require(ds > 0.0, ErrorCode::invalid_argument, "integration step must be positive");
    std::vector<double> grid;
    const auto steps = static_cast<std::size_t>(std::ceil(length / ds - 1e-12));
    grid.reserve(steps + 1);
    for (std::size_t j = 0; j < steps; ++j) grid.push_back(static_cast<double>(j) * ds);
    grid.push_back(length);
    return grid;
}

}  // namespace

BackbonePath propagate(const ModalCoefficients& c, const Pose& base, double length, double ds) {
    require(length > 0.0, ErrorCode::invalid_argument, "segment length must be positive");
    BackbonePath path;
    path.length = length;
    path.samples = integrate_grid(c, base, length, uniform_grid(length, ds));
    return path;
}

std::vector<FrameSample> frames_at(const ModalCoefficients& c, const Pose& base, double length,
                                   double ds, std::span<const double> queries) {
    for (double q : queries)
        require(q >= -1e-12 && q <= length + 1e-12, ErrorCode::invalid_argument,
                "query arc-length outside [0, L]");

    std::vector<double> grid = uniform_grid(length, ds);
    std::vector<double> merged = grid;
    merged.insert(merged.end(), queries.begin(), queries.end());
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                 merged.end());

    const std::vector<FrameSample> frames = integrate_grid(c, base, length, merged);

    std::vector<FrameSample> out;
    out.reserve(queries.size());
    for (double q : queries) {
        const auto it = std::lower_bound(merged.begin(), merged.end(), q - 1e-12);
        out.push_back(frames[static_cast<std::size_t>(it - merged.begin())]);
        out.back().s = q;
    }
    return out;
}

std::vector<Vec3> MarkerWorld::ordered() const {
    std::vector<Vec3> all;
    all.reserve(intermediates.size() + 3);
    all.push_back(base_prime);
    all.push_back(base);
    all.insert(all.end(), intermediates.begin(), intermediates.end());
    all.push_back(tip);
    return all;
}

MarkerWorld marker_world_positions(const CatheterDesign& design, const ModalCoefficients& c,
                                   double sigma, const Pose& base, double ds) {
    design.validate();
    const int n = design.marker_count();

    std::vector<double> queries(design.marker_arclengths.data(),
                                design.marker_arclengths.data() + n);
    queries.push_back(design.length);
    const auto frames = frames_at(c, base, design.length, ds, queries);

    MarkerWorld world;
    world.base = base.position;
    world.base_tangent = base.rotation.col(2);
    world.base_prime = base.position - design.base_band_offset * world.base_tangent;
    world.tip = frames.back().position;
    world.tip_tangent = frames.back().rotation.col(2);

    world.intermediates.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double beta = design.marker_angles(i) + sigma;
        const Vec3 offset(design.radius * std::cos(beta), design.radius * std::sin(beta), 0.0);
        world.intermediates.push_back(frames[i].position + frames[i].rotation * offset);
    }
    return world;
}

BackbonePath material_path(const BackbonePath& path, double sigma) {
    BackbonePath out = path;
    const Mat3 rz = rot_z(sigma);
    for (auto& f : out.samples) f.rotation = f.rotation * rz;
    return out;
}

}  // namespace cathtrack
