#include "cathtrack/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "cathtrack/errors.hpp"
#include "cathtrack/rng.hpp"

namespace cathtrack {

const char* marker_label_name(MarkerLabel label) {
    switch (label) {
        case MarkerLabel::base: return "base";
        case MarkerLabel::base_prime: return "base_prime";
        case MarkerLabel::tip: return "tip";
        case MarkerLabel::intermediate: return "intermediate";
        case MarkerLabel::unknown: return "unknown";
    }
    return "unknown";
}

std::optional<MarkerLabel> marker_label_from_name(const std::string& name) {
    for (MarkerLabel l : {MarkerLabel::base, MarkerLabel::base_prime, MarkerLabel::tip,
                          MarkerLabel::intermediate, MarkerLabel::unknown})
        if (name == marker_label_name(l)) return l;
    return std::nullopt;
}

const Detection* MarkerDetections::find(MarkerLabel label) const {
    for (const auto& d : items)
        if (d.label == label) return &d;
    return nullptr;
}

std::vector<Vec2> MarkerDetections::centroids(MarkerLabel label) const {
    std::vector<Vec2> out;
    for (const auto& d : items)
        if (d.label == label) out.push_back(d.centroid);
    return out;
}

namespace {

// Coverage of the pixel centered at (px, py) by the shape indicator,
// 4x4 supersampled.
template <typename Inside>
double coverage(double px, double py, const Inside& inside) {
    int hits = 0;
    for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx)
            if (inside(px - 0.5 + (sx + 0.5) / 4.0, py - 0.5 + (sy + 0.5) / 4.0)) ++hits;
    return hits / 16.0;
}

struct Canvas {
    GrayImage img;
    std::vector<std::string> clipped;

    void check_bounds(double px_lo, double px_hi, double py_lo, double py_hi,
                      const std::string& name) {
        if (px_lo < 0.0 || py_lo < 0.0 || px_hi > img.width - 1.0 || py_hi > img.height - 1.0)
            clipped.push_back(name);
    }

    template <typename Inside>
    void draw(double px_lo, double px_hi, double py_lo, double py_hi, int fg,
              const Inside& inside) {
        const int x0 = std::max(0, static_cast<int>(std::floor(px_lo)));
        const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(px_hi)));
        const int y0 = std::max(0, static_cast<int>(std::floor(py_lo)));
        const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(py_hi)));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix) {
                const double cov = coverage(ix, iy, inside);
                if (cov <= 0.0) continue;
                const double value = img.at(ix, iy) + cov * (fg - img.at(ix, iy));
                img.at(ix, iy) = static_cast<std::uint8_t>(std::lround(std::clamp(value, 0.0, 255.0)));
            }
    }

    void disk(const Vec2& center_px, double radius_px, int fg, const std::string& name) {
        check_bounds(center_px.x() - radius_px, center_px.x() + radius_px,
                     center_px.y() - radius_px, center_px.y() + radius_px, name);
        draw(center_px.x() - radius_px, center_px.x() + radius_px, center_px.y() - radius_px,
             center_px.y() + radius_px, fg, [&](double x, double y) {
                 const double dx = x - center_px.x(), dy = y - center_px.y();
                 return dx * dx + dy * dy <= radius_px * radius_px;
             });
    }

    // Bar centered at c, half-extent ha along unit direction u, hb across.
    void bar(const Vec2& center_px, const Vec2& dir, double half_along, double half_across,
             int fg, const std::string& name) {
        const double reach = std::hypot(half_along, half_across);
        check_bounds(center_px.x() - reach, center_px.x() + reach, center_px.y() - reach,
                     center_px.y() + reach, name);
        draw(center_px.x() - reach, center_px.x() + reach, center_px.y() - reach,
             center_px.y() + reach, fg, [&](double x, double y) {
                 const Vec2 d(x - center_px.x(), y - center_px.y());
                 const double along = d.x() * dir.x() + d.y() * dir.y();
                 const double across = -d.x() * dir.y() + d.y() * dir.x();
                 return std::abs(along) <= half_along && std::abs(across) <= half_across;
             });
    }
};

}  // namespace

GrayImage render_plane(const MarkerWorld& markers, const CatheterDesign& design,
                       const BiplaneGeometry& geom, Plane plane, const RenderParams& params) {
    Canvas canvas;
    canvas.img.width = params.width;
    canvas.img.height = params.height;
    canvas.img.pixel_scale = params.pixel_scale;
    canvas.img.origin = -params.pixel_scale * Vec2((params.width - 1) / 2.0, (params.height - 1) / 2.0);
    canvas.img.intensities.assign(static_cast<std::size_t>(params.width) * params.height,
                                  static_cast<std::uint8_t>(params.background));

    const double dot_radius_px = 0.5 * design.marker_diameter / params.pixel_scale;
    for (std::size_t i = 0; i < markers.intermediates.size(); ++i) {
        const Vec2 c = canvas.img.mm_to_pixel(project_point(markers.intermediates[i], plane, geom));
        canvas.disk(c, dot_radius_px, params.foreground, "marker " + std::to_string(i + 1));
    }

    const auto band = [&](const Vec3& center, const Vec3& tangent, const std::string& name) {
        const Vec2 c = canvas.img.mm_to_pixel(project_point(center, plane, geom));
        Vec2 dir = project_point(center + tangent, plane, geom) - project_point(center, plane, geom);
        const double len = dir.norm();
        const double half_along = 0.5 * design.band_width / params.pixel_scale;
        const double half_across = design.radius / params.pixel_scale;
        if (len < 1e-6) {
            // Band seen end-on collapses to the catheter cross-section.
            canvas.disk(c, half_across, params.foreground, name);
        } else {
            canvas.bar(c, dir / len, half_along, half_across, params.foreground, name);
        }
    };
    band(markers.base_prime, markers.base_tangent, "base_prime band");
    band(markers.base, markers.base_tangent, "base band");
    band(markers.tip, markers.tip_tangent, "tip band");

    if (!canvas.clipped.empty()) {
        std::ostringstream msg;
        msg << "render: shapes outside image bounds:";
        for (const auto& n : canvas.clipped) msg << " [" << n << "]";
        fail(ErrorCode::invalid_argument, msg.str());
    }

    if (params.noise_amplitude > 0) {
        Rng rng = Rng::substream(params.seed, {0x72656e64ull, static_cast<std::uint64_t>(plane)});
        for (auto& v : canvas.img.intensities) {
            const int noise = static_cast<int>(rng.uniform_int(-params.noise_amplitude,
                                                               params.noise_amplitude));
            v = static_cast<std::uint8_t>(std::clamp(static_cast<int>(v) + noise, 0, 255));
        }
    }
    return canvas.img;
}

BiplaneImages render_biplane(const MarkerWorld& markers, const CatheterDesign& design,
                             const BiplaneGeometry& geom, const RenderParams& params) {
    return {render_plane(markers, design, geom, Plane::front, params),
            render_plane(markers, design, geom, Plane::side, params)};
}

namespace {

// Connected components (8-connectivity) of feature >= thresh.
// Returns label image (-1 background) and per-label pixel counts.
struct Components {
    std::vector<int> labels;
    std::vector<double> areas;
};

Components connected_components(const std::vector<int>& feature, int width, int height,
                                int thresh) {
    Components comps;
    comps.labels.assign(feature.size(), -1);
    std::deque<std::pair<int, int>> queue;
    for (int iy = 0; iy < height; ++iy) {
        for (int ix = 0; ix < width; ++ix) {
            const std::size_t idx = static_cast<std::size_t>(iy) * width + ix;
            if (feature[idx] < thresh || comps.labels[idx] >= 0) continue;
            const int label = static_cast<int>(comps.areas.size());
            comps.areas.push_back(0.0);
            comps.labels[idx] = label;
            queue.push_back({ix, iy});
            while (!queue.empty()) {
                const auto [cx, cy] = queue.front();
                queue.pop_front();
                comps.areas[label] += 1.0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
                        const std::size_t nidx = static_cast<std::size_t>(ny) * width + nx;
                        if (feature[nidx] < thresh || comps.labels[nidx] >= 0) continue;
                        comps.labels[nidx] = label;
                        queue.push_back({nx, ny});
                    }
            }
        }
    }
    return comps;
}

constexpr double kStabilityRatio = 0.5;  // max relative area change across the delta sweep

}  // namespace

MarkerDetections segment(const GrayImage& image, const SegmentationParams& params) {
    const int w = image.width, h = image.height;
    std::vector<int> feature(image.intensities.size());
    for (std::size_t i = 0; i < feature.size(); ++i)
        feature[i] = std::max(0, params.background_intensity - static_cast<int>(image.intensities[i]));

    const Components mid = connected_components(feature, w, h, params.thresh);
    const Components lo = connected_components(feature, w, h,
                                               std::max(1, params.thresh - params.stability_delta));
    const Components hi = connected_components(feature, w, h, params.thresh + params.stability_delta);

    // Seed pixel per mid-level region: its strongest-feature pixel.
    std::vector<std::size_t> seed(mid.areas.size(), 0);
    std::vector<int> best(mid.areas.size(), -1);
    std::vector<double> sum_w(mid.areas.size(), 0.0);
    std::vector<Vec2> sum_wp(mid.areas.size(), Vec2::Zero());
    for (int iy = 0; iy < h; ++iy)
        for (int ix = 0; ix < w; ++ix) {
            const std::size_t idx = static_cast<std::size_t>(iy) * w + ix;
            const int label = mid.labels[idx];
            if (label < 0) continue;
            if (feature[idx] > best[label]) {
                best[label] = feature[idx];
                seed[label] = idx;
            }
            sum_w[label] += feature[idx];
            sum_wp[label] += feature[idx] * Vec2(ix, iy);
        }

    MarkerDetections det;
    for (std::size_t label = 0; label < mid.areas.size(); ++label) {
        const double area = mid.areas[label];
        if (area < params.min_area || area > params.max_area) continue;

        const int lo_label = lo.labels[seed[label]];
        const int hi_label = hi.labels[seed[label]];
        const double lo_area = lo_label >= 0 ? lo.areas[lo_label] : 0.0;
        const double hi_area = hi_label >= 0 ? hi.areas[hi_label] : 0.0;
        if (std::abs(lo_area - hi_area) > kStabilityRatio * area) continue;

        Detection d;
        const Vec2 centroid_px = sum_wp[label] / sum_w[label];
        d.centroid = image.pixel_to_mm(centroid_px.x(), centroid_px.y());
        d.area = area;
        d.label = MarkerLabel::unknown;
        det.items.push_back(d);
    }
    return det;
}

ExpectedAreas ExpectedAreas::from_design(const CatheterDesign& design, double pixel_scale) {
    ExpectedAreas e;
    e.band_px2 = design.band_width * 2.0 * design.radius / (pixel_scale * pixel_scale);
    e.marker_px2 = M_PI * 0.25 * design.marker_diameter * design.marker_diameter /
                   (pixel_scale * pixel_scale);
    return e;
}

MarkerDetections classify(const MarkerDetections& detections, const CatheterDesign& design,
                          const ExpectedAreas& expected) {
    (void)design;
    require(!detections.items.empty(), ErrorCode::invalid_argument, "classify: no detections");
    require(expected.band_px2 > expected.marker_px2, ErrorCode::config,
            "classify: band area must exceed marker area");

    const double cut = std::sqrt(expected.band_px2 * expected.marker_px2);
    MarkerDetections out = detections;
    std::vector<std::size_t> bands;
    for (std::size_t i = 0; i < out.items.size(); ++i) {
        if (out.items[i].area >= cut)
            bands.push_back(i);
        else
            out.items[i].label = MarkerLabel::intermediate;
    }
    if (bands.size() < 2 || bands.size() > 3)
        fail(ErrorCode::numeric, "classify: expected 2 or 3 band-scale regions, found " +
                                     std::to_string(bands.size()));

    // Base pair = mutually closest bands; the remaining band, if any, is the tip.
    std::size_t pa = 0, pb = 1;
    if (bands.size() == 3) {
        double best = std::numeric_limits<double>::max();
        for (std::size_t a = 0; a < bands.size(); ++a)
            for (std::size_t b = a + 1; b < bands.size(); ++b) {
                const double dist =
                    (out.items[bands[a]].centroid - out.items[bands[b]].centroid).norm();
                if (dist < best) {
                    best = dist;
                    pa = a;
                    pb = b;
                }
            }
        const std::size_t tip_pos = 3 - pa - pb;
        out.items[bands[tip_pos]].label = MarkerLabel::tip;
    }

    // Within the pair, base is the member nearer the marker chain (or the tip).
    const auto chain_distance = [&](const Vec2& p) {
        double best = std::numeric_limits<double>::max();
        for (const auto& d : out.items)
            if (d.label == MarkerLabel::intermediate)
                best = std::min(best, (p - d.centroid).norm());
        if (best == std::numeric_limits<double>::max()) {
            if (const Detection* tip = out.find(MarkerLabel::tip))
                best = (p - tip->centroid).norm();
            else
                best = p.norm();
        }
        return best;
    };
    const Vec2 ca = out.items[bands[pa]].centroid;
    const Vec2 cb = out.items[bands[pb]].centroid;
    const bool a_is_base = chain_distance(ca) <= chain_distance(cb);
    out.items[bands[pa]].label = a_is_base ? MarkerLabel::base : MarkerLabel::base_prime;
    out.items[bands[pb]].label = a_is_base ? MarkerLabel::base_prime : MarkerLabel::base;
    return out;
}

}  // namespace cathtrack
