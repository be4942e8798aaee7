#include "cathtrack/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "cathtrack/errors.hpp"

namespace cathtrack {

void EstimatorConfig::validate() const {
    require(tip_weight > 0.0 && intermediate_weight > 0.0, ErrorCode::config,
            "estimator: weights must be positive");
    require(zeta_c >= 0.0 && zeta_sigma >= 0.0, ErrorCode::config,
            "estimator: damping factors must be nonnegative");
    require(eps_c > 0.0 && eps_sigma > 0.0, ErrorCode::config,
            "estimator: convergence thresholds must be positive");
    require(max_outer_iterations >= 1 && max_inner_iterations >= 1, ErrorCode::config,
            "estimator: iteration limits must be positive");
}

Pose base_frame_from_markers(const OrderedMarkerSet& markers, double roll_convention) {
    const Vec3 z = markers.base_tangent.normalized();
    const Vec3 ref = std::abs(z.dot(Vec3::UnitX())) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 y = z.cross(ref).normalized();
    const Vec3 x = y.cross(z);
    Mat3 r;
    r.col(0) = x;
    r.col(1) = y;
    r.col(2) = z;
    return {r * rot_z(roll_convention), markers.base};
}

namespace {

// Measurement model bound to one marker set: weighted residual vector over
// the present intermediate markers, the tip, and the damping rows.
class Problem {
public:
    Problem(const OrderedMarkerSet& markers, const CatheterDesign& design,
            const EstimatorConfig& cfg)
        : markers_(markers), design_(design), cfg_(cfg),
          base_(base_frame_from_markers(markers, cfg.base_frame_roll)),
          ds_(cfg.step_for(design.length)) {
        for (int i = 0; i < design.marker_count(); ++i)
            if (markers.present[static_cast<std::size_t>(i)]) {
                present_.push_back(i);
                queries_.push_back(design.marker_arclengths(i));
            }
        queries_.push_back(design.length);
    }

    int present_count() const { return static_cast<int>(present_.size()); }
    int marker_rows() const { return 3 * (present_count() + 1); }
    const Pose& base() const { return base_; }

    // Unweighted marker residuals, present intermediates then tip.
    Eigen::VectorXd marker_residuals(const ModalCoefficients& c, double sigma) const {
        const auto frames = frames_at(c, base_, design_.length, ds_, queries_);
        Eigen::VectorXd r(marker_rows());
        for (std::size_t k = 0; k < present_.size(); ++k) {
            const int i = present_[k];
            const double beta = design_.marker_angles(i) + sigma;
            const Vec3 offset(design_.radius * std::cos(beta), design_.radius * std::sin(beta),
                              0.0);
            const Vec3 model = frames[k].position + frames[k].rotation * offset;
            r.segment<3>(3 * static_cast<Eigen::Index>(k)) =
                markers_.markers[static_cast<std::size_t>(i)] - model;
        }
        r.tail<3>() = markers_.tip - frames.back().position;
        return r;
    }

    double cost_of(const Eigen::VectorXd& weighted) const { return 0.5 * weighted.squaredNorm(); }

    // sqrt-weighted residuals including damping rows; 0.5*|.|^2 equals the cost.
    Eigen::VectorXd weighted_residuals(const ModalCoefficients& c, double sigma) const {
        const Eigen::VectorXd raw = marker_residuals(c, sigma);
        const double wi = std::sqrt(cfg_.intermediate_weight);
        const double wt = std::sqrt(cfg_.tip_weight);
        int damp_rows = 0;
        if (cfg_.zeta_c > 0.0 && cfg_.prior_coeffs) damp_rows += 2 * c.order();
        if (cfg_.zeta_sigma > 0.0 && cfg_.prior_sigma) damp_rows += 1;

        Eigen::VectorXd r(raw.size() + damp_rows);
        r.head(raw.size() - 3) = wi * raw.head(raw.size() - 3);
        r.segment<3>(raw.size() - 3) = wt * raw.tail<3>();
        int at = static_cast<int>(raw.size());
        if (cfg_.zeta_c > 0.0 && cfg_.prior_coeffs) {
            r.segment(at, 2 * c.order()) =
                std::sqrt(cfg_.zeta_c) * (c.stacked() - *cfg_.prior_coeffs);
            at += 2 * c.order();
        }
        if (cfg_.zeta_sigma > 0.0 && cfg_.prior_sigma)
            r(at) = std::sqrt(cfg_.zeta_sigma) * (sigma - *cfg_.prior_sigma);
        return r;
    }

private:
    const OrderedMarkerSet& markers_;
    const CatheterDesign& design_;
    const EstimatorConfig& cfg_;
    Pose base_;
    double ds_;
    std::vector<int> present_;
    std::vector<double> queries_;
};

struct LmResult {
    Eigen::VectorXd x;
    double cost = 0.0;
};

// Damped least squares with forward-difference Jacobian. Accepted steps are
// monotone in cost.
LmResult lm_minimize(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                     Eigen::VectorXd x, int max_iterations, double gradient_tolerance,
                     double fd_step) {
    Eigen::VectorXd r = fn(x);
    double cost = 0.5 * r.squaredNorm();
    double lambda = 1e-3;

    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::MatrixXd j(r.size(), x.size());
        for (Eigen::Index col = 0; col < x.size(); ++col) {
            Eigen::VectorXd xp = x;
            xp(col) += fd_step;
            j.col(col) = (fn(xp) - r) / fd_step;
        }
        const Eigen::VectorXd g = j.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < gradient_tolerance) break;
        const Eigen::MatrixXd h = j.transpose() * j;

        bool accepted = false;
        Eigen::VectorXd step;
        while (lambda < 1e12) {
            Eigen::MatrixXd damped = h;
            for (Eigen::Index d = 0; d < x.size(); ++d)
                damped(d, d) += lambda * std::max(h(d, d), 1e-12);
            step = damped.ldlt().solve(-g);
            const Eigen::VectorXd x_try = x + step;
            const Eigen::VectorXd r_try = fn(x_try);
            const double cost_try = 0.5 * r_try.squaredNorm();
            if (cost_try < cost) {
                x = x_try;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!accepted) break;  // stalled at a (numerical) minimum
        if (step.norm() < 1e-14 * (1.0 + x.norm())) break;
    }
    return {std::move(x), cost};
}

}  // namespace

Residuals residuals(const ModalCoefficients& c, double sigma, const OrderedMarkerSet& markers,
                    const CatheterDesign& design, const EstimatorConfig& cfg) {
    cfg.validate();
    const Problem problem(markers, design, cfg);
    Residuals out;
    out.stacked = problem.marker_residuals(c, sigma);
    out.cost = problem.cost_of(problem.weighted_residuals(c, sigma));
    return out;
}

ModalCoefficients solve_shape(const OrderedMarkerSet& markers, const CatheterDesign& design,
                              double sigma_fixed, const EstimatorConfig& cfg,
                              const ModalCoefficients& c0) {
    cfg.validate();
    const Problem problem(markers, design, cfg);
    require(problem.marker_rows() >= 2 * c0.order(), ErrorCode::numeric,
            "solve_shape: fewer residual rows than coefficients (unidentifiable)");

    const auto fn = [&](const Eigen::VectorXd& x) {
        return problem.weighted_residuals(ModalCoefficients::from_stacked(x), sigma_fixed);
    };
    const LmResult res = lm_minimize(fn, c0.stacked(), cfg.max_inner_iterations,
                                     cfg.gradient_tolerance, cfg.fd_step);
    return ModalCoefficients::from_stacked(res.x);
}

double solve_roll(const OrderedMarkerSet& markers, const CatheterDesign& design,
                  const ModalCoefficients& c_fixed, const EstimatorConfig& cfg, double sigma0,
                  bool multistart) {
    cfg.validate();
    const Problem problem(markers, design, cfg);
    require(problem.present_count() >= 1, ErrorCode::numeric,
            "solve_roll: roll is unobservable without intermediate markers");

    const auto fn = [&](const Eigen::VectorXd& x) {
        return problem.weighted_residuals(c_fixed, x(0));
    };
    const auto solve_from = [&](double seed) {
        Eigen::VectorXd x0(1);
        x0(0) = seed;
        return lm_minimize(fn, x0, cfg.max_inner_iterations, cfg.gradient_tolerance, cfg.fd_step);
    };

    LmResult best = solve_from(sigma0);
    if (multistart && cfg.roll_multistart > 1) {
        for (int k = 0; k < cfg.roll_multistart; ++k) {
            const double seed = -M_PI + (2.0 * M_PI) * (k + 0.5) / cfg.roll_multistart;
            const LmResult res = solve_from(seed);
            if (res.cost < best.cost) best = res;
        }
    }
    return wrap_angle(best.x(0));
}

BackbonePath PoseEstimate::backbone(const CatheterDesign& design, int samples) const {
    require(samples >= 2, ErrorCode::invalid_argument, "backbone: need at least two samples");
    const double ds = design.length / (samples - 1);
    return propagate(coeffs, base_frame, design.length, ds);
}

PoseEstimate estimate(const OrderedMarkerSet& markers, const CatheterDesign& design,
                      const EstimatorConfig& cfg, const ModalCoefficients& c0, double sigma0) {
    cfg.validate();
    const bool cold = !cfg.prior_coeffs && !cfg.prior_sigma;
    const Problem problem(markers, design, cfg);

    PoseEstimate est;
    est.coeffs = c0;
    est.sigma = wrap_angle(sigma0);
    est.base_frame = problem.base();
    est.cost_history.push_back(problem.cost_of(problem.weighted_residuals(est.coeffs, est.sigma)));

    for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
        ModalCoefficients c_new = est.coeffs;
        double sigma_new = est.sigma;
        if (cold && outer == 0 && cfg.roll_multistart > 1 && problem.present_count() >= 1) {
            // The shape and roll basins are coupled; a cold start sweeps the
            // first alternation round over equispaced roll seeds (plus the
            // caller's) and keeps the lowest-cost pair.
            double best_cost = std::numeric_limits<double>::max();
            std::vector<double> seeds = {est.sigma};
            for (int k = 0; k < cfg.roll_multistart; ++k)
                seeds.push_back(-M_PI + (2.0 * M_PI) * (k + 0.5) / cfg.roll_multistart);
            for (double seed : seeds) {
                // Two alternation rounds per seed: strongly bent scenes need
                // the second round before the basins separate by cost.
                ModalCoefficients c_k = solve_shape(markers, design, seed, cfg, est.coeffs);
                double sigma_k = solve_roll(markers, design, c_k, cfg, seed, false);
                c_k = solve_shape(markers, design, sigma_k, cfg, c_k);
                sigma_k = solve_roll(markers, design, c_k, cfg, sigma_k, false);
                const double cost_k = problem.cost_of(problem.weighted_residuals(c_k, sigma_k));
                if (cost_k < best_cost) {
                    best_cost = cost_k;
                    c_new = c_k;
                    sigma_new = sigma_k;
                }
            }
            est.cost_history.push_back(best_cost);
        } else {
            c_new = solve_shape(markers, design, est.sigma, cfg, est.coeffs);
            est.cost_history.push_back(
                problem.cost_of(problem.weighted_residuals(c_new, est.sigma)));
            sigma_new = solve_roll(markers, design, c_new, cfg, est.sigma, false);
            est.cost_history.push_back(
                problem.cost_of(problem.weighted_residuals(c_new, sigma_new)));
        }

        const double delta_c = (c_new.stacked() - est.coeffs.stacked()).norm();
        const double delta_sigma = std::abs(wrap_angle(sigma_new - est.sigma));
        est.coeffs = c_new;
        est.sigma = sigma_new;
        est.outer_iterations = outer + 1;
        if (delta_c <= cfg.eps_c && delta_sigma <= cfg.eps_sigma) {
            est.converged = true;
            break;
        }
    }

    est.final_cost = est.cost_history.back();
    const Eigen::VectorXd raw = problem.marker_residuals(est.coeffs, est.sigma);
    for (Eigen::Index k = 0; k + 2 < raw.size(); k += 3)
        est.residual_per_marker.push_back(raw.segment<3>(k).norm());
    return est;
}

}  // namespace cathtrack
