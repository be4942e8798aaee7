#include "cathtrack/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cathtrack/errors.hpp"

namespace cathtrack {

std::vector<Vec2> sort_primary(std::span<const Vec2> points, const Vec2& tip) {
    std::vector<Vec2> out(points.begin(), points.end());
    std::stable_sort(out.begin(), out.end(), [&tip](const Vec2& a, const Vec2& b) {
        return (a - tip).norm() < (b - tip).norm();
    });
    return out;
}

Correspondence correspond(std::span<const Vec2> ordered_primary,
                          std::span<const Vec2> secondary, Plane primary_plane,
                          const BiplaneGeometry& geom, const ReconstructionParams& params) {
    Correspondence result;
    std::vector<bool> claimed(secondary.size(), false);
    for (std::size_t i = 0; i < ordered_primary.size(); ++i) {
        double best = std::numeric_limits<double>::max();
        double second_best = std::numeric_limits<double>::max();
        int pick = -1;
        for (std::size_t j = 0; j < secondary.size(); ++j) {
            if (claimed[j]) continue;
            const double dist =
                epipolar_distance(secondary[j], ordered_primary[i], primary_plane, geom);
            if (dist < best) {
                second_best = best;
                best = dist;
                pick = static_cast<int>(j);
            } else if (dist < second_best) {
                second_best = dist;
            }
        }
        if (pick >= 0 && best <= params.epipolar_gate) {
            if (second_best < std::numeric_limits<double>::max() &&
                std::abs(best - second_best) <= params.ambiguity_ratio * std::max(best, second_best))
                ++result.ambiguity_warnings;
            claimed[static_cast<std::size_t>(pick)] = true;
            result.pairs.push_back({static_cast<int>(i), pick});
        } else {
            result.unmatched_primary.push_back(static_cast<int>(i));
        }
    }
    for (std::size_t j = 0; j < secondary.size(); ++j)
        if (!claimed[j]) result.unmatched_secondary.push_back(static_cast<int>(j));
    return result;
}

namespace {

// Straight-configuration positions of the design slots bracketed by the two
// band anchors: slot 0 = base band (backbone), slots 1..n = markers (surface),
// slot n+1 = tip band (backbone).
std::vector<Vec3> straight_slots(const CatheterDesign& design) {
    const int n = design.marker_count();
    std::vector<Vec3> slots;
    slots.reserve(n + 2);
    slots.push_back({0.0, 0.0, 0.0});
    for (int i = 0; i < n; ++i)
        slots.push_back({design.radius * std::cos(design.marker_angles(i)),
                         design.radius * std::sin(design.marker_angles(i)),
                         design.marker_arclengths(i)});
    slots.push_back({0.0, 0.0, design.length});
    return slots;
}

}  // namespace

namespace {

// Cumulative-spacing alignment. With the gate enabled a relative gap
// mismatch beyond the tolerance is an assignment failure; without it the
// best-fitting slot count wins unconditionally.
std::vector<bool> align_spacing(std::span<const Vec3> chain, const CatheterDesign& design,
                                double tolerance, bool gated) {
    const int n = design.marker_count();
    require(chain.size() >= 2, ErrorCode::invalid_argument,
            "detect_missing: chain must include the base and tip anchors");
    require(static_cast<int>(chain.size()) <= n + 2, ErrorCode::invalid_argument,
            "detect_missing: more candidates than design slots");

    const std::vector<Vec3> slots = straight_slots(design);
    std::vector<bool> present(n, false);

    int slot = 0;  // current anchor slot of chain[j]
    for (std::size_t j = 0; j + 1 < chain.size(); ++j) {
        const double gap = (chain[j + 1] - chain[j]).norm();
        const bool last = (j + 2 == chain.size());
        const int remaining = static_cast<int>(chain.size()) - 2 - static_cast<int>(j);

        int best_k = -1;
        double best_err = std::numeric_limits<double>::max();
        if (last) {
            best_k = n + 1 - slot;  // must land on the tip anchor
            if (best_k < 1) best_k = -1;
        } else {
            // Leave room for the candidates still to be placed (plus the tip).
            const int max_k = n + 1 - slot - remaining;
            for (int k = 1; k <= max_k; ++k) {
                const double expected = (slots[slot + k] - slots[slot]).norm();
                const double err = std::abs(gap - expected) / expected;
                if (err < best_err) {
                    best_err = err;
                    best_k = k;
                }
            }
        }
        if (best_k < 1)
            fail(ErrorCode::numeric, "detect_missing: no slot assignment fits the chain");
        if (last) {
            const double expected = (slots[slot + best_k] - slots[slot]).norm();
            best_err = std::abs(gap - expected) / expected;
        }
        if (gated && best_err > tolerance)
            fail(ErrorCode::numeric, "detect_missing: gap mismatch exceeds tolerance");
        slot += best_k;
        if (!last) present[slot - 1] = true;  // slot indexes markers at slot-1
    }
    return present;
}

}  // namespace

std::vector<bool> detect_missing(std::span<const Vec3> chain, const CatheterDesign& design,
                                 double tolerance) {
    return align_spacing(chain, design, tolerance, true);
}

Plane choose_primary(const PlanarMarkers& front, const PlanarMarkers& side) {
    const auto bbox_area = [](const PlanarMarkers& pm) {
        Vec2 lo = pm.base_prime, hi = pm.base_prime;
        const auto grow = [&](const Vec2& p) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        };
        grow(pm.base);
        grow(pm.tip);
        for (const auto& p : pm.intermediates) grow(p);
        const Vec2 span = hi - lo;
        return span.x() * span.y();
    };
    return bbox_area(front) >= bbox_area(side) ? Plane::front : Plane::side;
}

int OrderedMarkerSet::present_count() const {
    return static_cast<int>(std::count(present.begin(), present.end(), true));
}

OrderedMarkerSet reconstruct_markers(const PlanarMarkers& front, const PlanarMarkers& side,
                                     const BiplaneGeometry& geom, const CatheterDesign& design,
                                     const ReconstructionParams& params) {
    design.validate();
    const int n = design.marker_count();

    OrderedMarkerSet set;
    set.base_prime = triangulate(front.base_prime, side.base_prime, geom);
    set.base = triangulate(front.base, side.base, geom);
    set.tip = triangulate(front.tip, side.tip, geom);
    set.markers.assign(static_cast<std::size_t>(n), Vec3::Zero());
    set.present.assign(static_cast<std::size_t>(n), false);

    const double base_gap = (set.base - set.base_prime).norm();
    require(base_gap > 1e-9, ErrorCode::numeric,
            "reconstruct: base bands coincide, base tangent undefined");
    set.base_tangent = (set.base - set.base_prime) / base_gap;

    const Plane primary = choose_primary(front, side);
    const PlanarMarkers& prim = primary == Plane::front ? front : side;
    const PlanarMarkers& sec = primary == Plane::front ? side : front;

    const std::vector<Vec2> ordered = sort_primary(prim.intermediates, prim.tip);
    const Correspondence match =
        correspond(ordered, sec.intermediates, primary, geom, params);
    set.ambiguity_warnings = match.ambiguity_warnings;

    // Triangulate the matched pairs, then chain in 3D from the tip band:
    // projection folds can swap neighbors in a single view, but in 3D the
    // bend radius stays far above the marker spacing.
    std::vector<Vec3> triangulated;
    triangulated.reserve(match.pairs.size());
    for (const auto& [pi, si] : match.pairs) {
        const Vec2& p = ordered[static_cast<std::size_t>(pi)];
        const Vec2& q = sec.intermediates[static_cast<std::size_t>(si)];
        triangulated.push_back(primary == Plane::front ? triangulate(p, q, geom)
                                                       : triangulate(q, p, geom));
    }
    std::vector<Vec3> chained;
    chained.reserve(triangulated.size());
    {
        std::vector<bool> used(triangulated.size(), false);
        Vec3 cursor = set.tip;
        for (std::size_t step = 0; step < triangulated.size(); ++step) {
            double best = std::numeric_limits<double>::max();
            std::size_t pick = 0;
            for (std::size_t j = 0; j < triangulated.size(); ++j) {
                if (used[j]) continue;
                const double dist = (triangulated[j] - cursor).norm();
                if (dist < best) {
                    best = dist;
                    pick = j;
                }
            }
            used[pick] = true;
            chained.push_back(triangulated[pick]);
            cursor = triangulated[pick];
        }
    }

    // Assemble base-to-tip.
    std::vector<Vec3> candidates;
    candidates.reserve(chained.size() + 2);
    candidates.push_back(set.base);
    candidates.insert(candidates.end(), chained.rbegin(), chained.rend());
    candidates.push_back(set.tip);

    // The spacing comparison only arbitrates when markers went missing; a
    // complete chain maps one-to-one onto the design slots. When even the
    // best alignment misses the tolerance the best fit still stands: the
    // estimate is produced from it and degrades, it does not abort.
    std::vector<bool> mask(static_cast<std::size_t>(n), true);
    if (static_cast<int>(match.pairs.size()) < n) {
        try {
            mask = detect_missing(candidates, design, params.spacing_tolerance);
        } catch (const Error&) {
            mask = align_spacing(candidates, design, params.spacing_tolerance, false);
        }
    }
    std::size_t next = 1;  // candidates[0] is the base anchor
    for (int i = 0; i < n; ++i) {
        if (!mask[static_cast<std::size_t>(i)]) continue;
        set.markers[static_cast<std::size_t>(i)] = candidates[next++];
        set.present[static_cast<std::size_t>(i)] = true;
    }
    return set;
}

}  // namespace cathtrack
