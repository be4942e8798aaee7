#include "cathtrack/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "cathtrack/stats.hpp"

namespace cathtrack {

double total_bend(const ModalCoefficients& c, double length) {
    const int k = 501;
    const double h = length / (k - 1);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        const double w = (i == 0 || i == k - 1) ? 0.5 : 1.0;
        sum += w * strain_at(i * h, c, length).norm();
    }
    return sum * h;
}

std::pair<ModalCoefficients, double> sample_configuration(Rng& rng,
                                                          const ConfigurationBounds& bounds,
                                                          int order, double length) {
    require(order >= 1, ErrorCode::invalid_argument, "sample_configuration: order must be >= 1");
    require(bounds.max_bend >= 0.0, ErrorCode::invalid_argument,
            "sample_configuration: bend bound must be nonnegative");
    const double magnitude = bounds.magnitude_for(length);

    if (bounds.max_bend <= 0.0 || magnitude <= 0.0) {
        const double sigma = rng.uniform(-M_PI, M_PI);
        return {ModalCoefficients::zero(order), sigma};
    }

    // Workspace coverage: the integrated bend is uniform over (0, max_bend].
    // A box-sampled direction is rescaled to the drawn bend and rejected if
    // the rescaling pushes any coefficient outside its per-order bound.
    for (int attempt = 0; attempt < 10000; ++attempt) {
        Eigen::VectorXd cx(order), cy(order);
        for (int k = 0; k < order; ++k) {
            cx(k) = rng.uniform(-magnitude, magnitude);
            cy(k) = rng.uniform(-magnitude, magnitude);
        }
        const double target = rng.uniform(0.0, bounds.max_bend);
        ModalCoefficients c{cx, cy};
        const double bend = total_bend(c, length);
        if (bend < 1e-9) continue;
        const double scale = target / bend;
        c = ModalCoefficients{scale * c.cx, scale * c.cy};
        if (c.cx.lpNorm<Eigen::Infinity>() > magnitude ||
            c.cy.lpNorm<Eigen::Infinity>() > magnitude)
            continue;
        const double sigma = rng.uniform(-M_PI, M_PI);
        return {std::move(c), sigma};
    }
    fail(ErrorCode::numeric, "sample_configuration: rejection sampling overflow");
}

double shape_error(const BackbonePath& estimated, const BackbonePath& truth) {
    require(estimated.samples.size() == truth.samples.size(), ErrorCode::invalid_argument,
            "shape_error: sample counts differ");
    require(!truth.samples.empty(), ErrorCode::invalid_argument, "shape_error: empty paths");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.samples.size(); ++i) {
        require(std::abs(estimated.samples[i].s - truth.samples[i].s) < 1e-9,
                ErrorCode::invalid_argument, "shape_error: arc-length grids differ");
        sum += (estimated.samples[i].position - truth.samples[i].position).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(truth.samples.size()));
}

double roll_error_deg(const BackbonePath& estimated_material, const BackbonePath& truth_material) {
    require(estimated_material.samples.size() == truth_material.samples.size(),
            ErrorCode::invalid_argument, "roll_error: sample counts differ");
    require(!truth_material.samples.empty(), ErrorCode::invalid_argument,
            "roll_error: empty paths");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth_material.samples.size(); ++i) {
        const Mat3 rel = estimated_material.samples[i].rotation.transpose() *
                         truth_material.samples[i].rotation;
        const double twist = twist_about_z(rel);
        sum += twist * twist;
    }
    return std::sqrt(sum / static_cast<double>(truth_material.samples.size())) * 180.0 / M_PI;
}

const char* study_kind_name(StudyKind kind) {
    switch (kind) {
        case StudyKind::spacing: return "spacing";
        case StudyKind::slenderness: return "slenderness";
        case StudyKind::dropped: return "dropped";
    }
    return "spacing";
}

StudyConfig StudyConfig::preset(StudyKind kind) {
    StudyConfig cfg;
    cfg.kind = kind;
    if (kind == StudyKind::dropped) {
        cfg.estimation_orders = {2, 3, 4};
        cfg.bounds.max_bend = M_PI;
    }
    return cfg;
}

void StudyConfig::validate() const {
    require(configurations_per_design >= 1, ErrorCode::config,
            "study: configurations_per_design must be >= 1");
    require(noise_front >= 0.0 && noise_side >= 0.0, ErrorCode::config,
            "study: noise radii must be nonnegative");
    require(backbone_samples >= 2, ErrorCode::config, "study: backbone_samples must be >= 2");
    require(!estimation_orders.empty(), ErrorCode::config, "study: estimation_orders empty");
    require(truth_order >= 1, ErrorCode::config, "study: truth_order must be >= 1");
    require(length > 0.0, ErrorCode::config, "study: length must be positive");
    switch (kind) {
        case StudyKind::spacing:
            require(!spacing_marker_counts.empty(), ErrorCode::config,
                    "study: spacing grid empty");
            break;
        case StudyKind::slenderness:
            require(slenderness_marker_count >= 1, ErrorCode::config,
                    "study: slenderness marker count must be >= 1");
            break;
        case StudyKind::dropped:
            require(dropped_marker_count >= 2, ErrorCode::config,
                    "study: dropped study needs at least two markers");
            break;
    }
}

std::vector<double> StudyConfig::slenderness_grid() const {
    if (!slenderness_radii.empty()) return slenderness_radii;
    std::vector<double> grid;
    const int count = 20;
    const double lo = 0.2, hi = 4.0;
    for (int i = 0; i < count; ++i)
        grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
    return grid;
}

namespace {

HelixSpec helix_for(const StudyConfig& cfg, int design_index) {
    switch (cfg.kind) {
        case StudyKind::spacing: {
            const int n = cfg.spacing_marker_counts[static_cast<std::size_t>(design_index)];
            const double dbeta = cfg.spacing_angular_spacing > 0.0
                                     ? cfg.spacing_angular_spacing
                                     : 2.0 * M_PI * cfg.spacing_turns / std::max(1, n - 1);
            if (n == 1) return {0.0, dbeta, 0.0};
            const double gap = (cfg.spacing_length - 2.0 * cfg.spacing_margin) / (n - 1);
            return {gap / dbeta, dbeta, 0.0};
        }
        case StudyKind::slenderness: {
            const int n = cfg.slenderness_marker_count;
            const double dbeta = cfg.slenderness_angular_spacing;
            const double gap = n > 1 ? (cfg.length - 2.0 * cfg.slenderness_margin) / (n - 1) : 0.0;
            return {n > 1 ? gap / dbeta : 0.0, dbeta, 0.0};
        }
        case StudyKind::dropped: {
            const int n = cfg.dropped_marker_count;
            const double dbeta = cfg.dropped_angular_spacing;
            const double gap = (cfg.length - 2.0 * cfg.dropped_margin) / (n - 1);
            return {gap / dbeta, dbeta, 0.0};
        }
    }
    fail(ErrorCode::invalid_argument, "unknown study kind");
}

double design_radius(const StudyConfig& cfg, int design_index) {
    switch (cfg.kind) {
        case StudyKind::spacing: return cfg.spacing_radius;
        case StudyKind::slenderness:
            return cfg.slenderness_grid()[static_cast<std::size_t>(design_index)];
        case StudyKind::dropped: return cfg.dropped_radius;
    }
    return 1.0;
}

int design_markers(const StudyConfig& cfg, int design_index) {
    switch (cfg.kind) {
        case StudyKind::spacing:
            return cfg.spacing_marker_counts[static_cast<std::size_t>(design_index)];
        case StudyKind::slenderness: return cfg.slenderness_marker_count;
        case StudyKind::dropped: return cfg.dropped_marker_count;
    }
    return 1;
}

}  // namespace

double study_design_length(const StudyConfig& cfg) {
    return cfg.kind == StudyKind::spacing ? cfg.spacing_length : cfg.length;
}

int study_design_count(const StudyConfig& cfg) {
    switch (cfg.kind) {
        case StudyKind::spacing: return static_cast<int>(cfg.spacing_marker_counts.size());
        case StudyKind::slenderness: return static_cast<int>(cfg.slenderness_grid().size());
        case StudyKind::dropped: return 1;
    }
    return 0;
}

CatheterDesign study_design(const StudyConfig& cfg, int design_index) {
    CatheterDesign design =
        build_helical_design(study_design_length(cfg), design_radius(cfg, design_index),
                             design_markers(cfg, design_index), helix_for(cfg, design_index));
    design.base_band_offset = cfg.band_offset;
    return design;
}

double study_design_spacing(const StudyConfig& cfg, int design_index) {
    const int n = design_markers(cfg, design_index);
    const double r = design_radius(cfg, design_index);
    if (n >= 2) return marker_spacing(r, helix_for(cfg, design_index));
    // Single marker: distance to the nearest band anchor in the straight pose.
    return std::hypot(0.5 * study_design_length(cfg), r);
}

namespace {

struct TrialKey {
    int design_index;
    int config_index;
    int order;
    TrialVariant variant;
};

double design_x(const StudyConfig& cfg, int design_index, int order) {
    switch (cfg.kind) {
        case StudyKind::spacing: {
            const double noise = std::max(cfg.noise_front, cfg.noise_side);
            return noise > 0.0 ? study_design_spacing(cfg, design_index) / noise
                               : study_design_spacing(cfg, design_index);
        }
        case StudyKind::slenderness:
            return study_design_length(cfg) / design_radius(cfg, design_index);
        case StudyKind::dropped: return order;
    }
    return 0.0;
}

TrialRecord run_trial(const StudyConfig& cfg, const CatheterDesign& design, const TrialKey& key) {
    TrialRecord rec;
    rec.design_index = key.design_index;
    rec.config_index = key.config_index;
    rec.order = key.order;
    rec.variant = key.variant;
    rec.x = design_x(cfg, key.design_index, key.order);

    const auto di = static_cast<std::uint64_t>(key.design_index);
    const auto ci = static_cast<std::uint64_t>(key.config_index);
    try {
        // Truth configuration shared across designs and estimation orders.
        Rng config_rng = Rng::substream(cfg.master_seed, {1, ci});
        const auto [c_true, sigma_true] =
            sample_configuration(config_rng, cfg.bounds, cfg.truth_order, design.length);

        const double ds = cfg.estimator.step_for(design.length);
        const MarkerWorld world =
            marker_world_positions(design, c_true, sigma_true, Pose::identity(), ds);
        const std::vector<Vec3> ordered = world.ordered();

        const BiplaneGeometry geom = BiplaneGeometry::canonical();
        NoiseModel noise;
        noise.front_radius = cfg.noise_front;
        noise.side_radius = cfg.noise_side;
        noise.seed = Rng::splitmix64(cfg.master_seed ^ (di << 20) ^ (ci << 4) ^ 2u);

        // Segmentation noise applies to the studied intermediate markers; the
        // tip and base bands act as the calibrated anchors.
        PlanarMarkers planar[2];
        for (Plane plane : {Plane::front, Plane::side}) {
            std::vector<Vec2> pts;
            pts.reserve(ordered.size());
            for (const auto& p : ordered) pts.push_back(project_point(p, plane, geom));
            PlanarMarkers& pm = planar[static_cast<int>(plane)];
            pm.base_prime = pts[0];
            pm.base = pts[1];
            pm.tip = pts.back();
            pm.intermediates.assign(pts.begin() + 2, pts.end() - 1);
            pm.intermediates = perturb(pm.intermediates, noise, plane);
        }

        if (key.variant == TrialVariant::dropped) {
            Rng drop_rng = Rng::substream(cfg.master_seed, {3, di, ci});
            const int n = design.marker_count();
            const int max_drop = std::max(1, n / 2);
            const int count = static_cast<int>(drop_rng.uniform_int(1, max_drop));
            std::vector<int> indices(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) indices[static_cast<std::size_t>(i)] = i;
            drop_rng.shuffle(indices);
            indices.resize(static_cast<std::size_t>(count));
            std::sort(indices.begin(), indices.end(), std::greater<int>());
            const int plane = static_cast<int>(drop_rng.uniform_int(0, 1));
            for (int idx : indices)
                planar[plane].intermediates.erase(planar[plane].intermediates.begin() + idx);
        }

        // Presentation order must not matter downstream.
        for (int p = 0; p < 2; ++p) {
            Rng shuffle_rng = Rng::substream(cfg.master_seed, {4, di, ci, static_cast<std::uint64_t>(p)});
            shuffle_rng.shuffle(planar[p].intermediates);
        }

        ReconstructionParams rparams;
        rparams.epipolar_gate =
            ReconstructionParams::gate_for_noise(std::max(cfg.noise_front, cfg.noise_side));
        const OrderedMarkerSet markers =
            reconstruct_markers(planar[0], planar[1], geom, design, rparams);

        EstimatorConfig est_cfg = cfg.estimator;
        est_cfg.prior_coeffs.reset();
        est_cfg.prior_sigma.reset();
        est_cfg.zeta_c = 0.0;
        est_cfg.zeta_sigma = 0.0;
        const PoseEstimate est =
            estimate(markers, design, est_cfg, ModalCoefficients::zero(key.order), 0.0);

        const int k = cfg.backbone_samples;
        const double sample_ds = design.length / (k - 1);
        const BackbonePath truth_path =
            propagate(c_true, Pose::identity(), design.length, sample_ds);
        const BackbonePath est_path = est.backbone(design, k);

        rec.ep_norm = shape_error(est_path, truth_path) / design.length;
        rec.er_deg = roll_error_deg(material_path(est_path, est.sigma),
                                    material_path(truth_path, sigma_true));
        rec.converged = est.converged;
    } catch (const Error& e) {
        rec.failed = true;
        rec.failure = e.what();
    }
    return rec;
}

}  // namespace

StudyResult run_study(const StudyConfig& cfg, int jobs) {
    cfg.validate();
    StudyResult result;
    result.kind = cfg.kind;

    const int designs = study_design_count(cfg);
    std::vector<CatheterDesign> design_cache;
    design_cache.reserve(static_cast<std::size_t>(designs));
    for (int d = 0; d < designs; ++d) design_cache.push_back(study_design(cfg, d));

    std::vector<TrialKey> keys;
    const bool with_dropout = cfg.kind == StudyKind::dropped;
    for (int d = 0; d < designs; ++d)
        for (int order : cfg.estimation_orders)
            for (int c = 0; c < cfg.configurations_per_design; ++c) {
                keys.push_back({d, c, order, TrialVariant::control});
                if (with_dropout) keys.push_back({d, c, order, TrialVariant::dropped});
            }

    result.trials.resize(keys.size());
    if (jobs <= 0) jobs = static_cast<int>(std::thread::hardware_concurrency());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(keys.size())));

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= keys.size()) return;
            result.trials[i] =
                run_trial(cfg, design_cache[static_cast<std::size_t>(keys[i].design_index)], keys[i]);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    // Reduce in key order: one stats row per (design, order, variant).
    for (int d = 0; d < designs; ++d)
        for (int order : cfg.estimation_orders)
            for (int v = 0; v < (with_dropout ? 2 : 1); ++v) {
                DesignPointStats stats;
                stats.design_index = d;
                stats.order = order;
                stats.variant = static_cast<TrialVariant>(v);
                stats.x = design_x(cfg, d, order);
                stats.marker_count = design_cache[static_cast<std::size_t>(d)].marker_count();
                stats.spacing = study_design_spacing(cfg, d);
                std::vector<double> eps, ers;
                for (const auto& t : result.trials) {
                    if (t.design_index != d || t.order != order ||
                        t.variant != static_cast<TrialVariant>(v))
                        continue;
                    ++stats.trials;
                    if (t.failed) {
                        ++stats.failures;
                        continue;
                    }
                    eps.push_back(t.ep_norm);
                    ers.push_back(t.er_deg);
                }
                if (!eps.empty()) {
                    stats.ep_mean = mean(eps);
                    stats.ep_sd = sample_sd(eps);
                    stats.er_mean = mean(ers);
                    stats.er_sd = sample_sd(ers);
                }
                stats.flagged = stats.failures * 5 > stats.trials;  // >20%
                result.points.push_back(stats);
            }
    return result;
}

}  // namespace cathtrack
