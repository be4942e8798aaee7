#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cathtrack/biplane.hpp"
#include "cathtrack/kinematics.hpp"

namespace cathtrack {

// 8-bit grayscale frame. Pixel (ix, iy) center sits at plane coordinates
// origin + pixel_scale * (ix, iy), image y running with plane y.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> intensities;  // row-major
    double pixel_scale = 0.35;              // mm per pixel
    Vec2 origin = Vec2::Zero();             // mm of pixel (0,0) center

    std::uint8_t at(int ix, int iy) const { return intensities[static_cast<std::size_t>(iy) * width + ix]; }
    std::uint8_t& at(int ix, int iy) { return intensities[static_cast<std::size_t>(iy) * width + ix]; }

    Vec2 pixel_to_mm(double ix, double iy) const { return origin + pixel_scale * Vec2(ix, iy); }
    Vec2 mm_to_pixel(const Vec2& mm) const { return (mm - origin) / pixel_scale; }
};

struct RenderParams {
    int width = 512;
    int height = 512;
    double pixel_scale = 0.35;       // mm per pixel
    int background = 230;
    int foreground = 25;
    int noise_amplitude = 0;         // additive uniform in [-a, a], per pixel
    std::uint64_t seed = 0;
};

struct SegmentationParams {
    int thresh = 60;                 // feature threshold on (background - intensity)
    int background_intensity = 230;
    double min_area = 4.0;           // px^2
    double max_area = 4000.0;        // px^2
    int stability_delta = 10;        // threshold shift for the stable-region test
};

enum class MarkerLabel { base, base_prime, tip, intermediate, unknown };

const char* marker_label_name(MarkerLabel label);
std::optional<MarkerLabel> marker_label_from_name(const std::string& name);

struct Detection {
    Vec2 centroid = Vec2::Zero();  // mm, plane coordinates
    double area = 0.0;             // px^2
    MarkerLabel label = MarkerLabel::unknown;
};

struct MarkerDetections {
    std::vector<Detection> items;

    const Detection* find(MarkerLabel label) const;
    std::vector<Vec2> centroids(MarkerLabel label) const;
};

struct BiplaneImages {
    GrayImage front;
    GrayImage side;
};

// Synthetic fluoroscopy stand-in: anti-aliased dark disks for intermediate
// markers and oriented bars for the bands, on a light background. Fails if
// any drawn shape leaves the frame, naming the offending markers.
BiplaneImages render_biplane(const MarkerWorld& markers, const CatheterDesign& design,
                             const BiplaneGeometry& geom, const RenderParams& params);

GrayImage render_plane(const MarkerWorld& markers, const CatheterDesign& design,
                       const BiplaneGeometry& geom, Plane plane, const RenderParams& params);

// Background-subtract, threshold, and keep connected dark regions whose area
// is stable under a +-stability_delta threshold shift and inside the area
// range. Centroids are feature-weighted, reported in mm.
MarkerDetections segment(const GrayImage& image, const SegmentationParams& params);

struct ExpectedAreas {
    double band_px2 = 0.0;
    double marker_px2 = 0.0;

    static ExpectedAreas from_design(const CatheterDesign& design, double pixel_scale);
};

// Splits detections into band-scale and marker-scale regions by area, then
// labels the mutually-closest band pair base/base' and the remaining band
// tip. Requires 2 or 3 band-scale regions, else the frame is unlabelable.
MarkerDetections classify(const MarkerDetections& detections, const CatheterDesign& design,
                          const ExpectedAreas& expected);

}  // namespace cathtrack
