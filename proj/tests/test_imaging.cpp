#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "cathtrack/imaging.hpp"
#include "cathtrack/rng.hpp"

using namespace cathtrack;

namespace {

GrayImage blank_image(int w, int h, int bg) {
    GrayImage img;
    img.width = w;
    img.height = h;
    img.pixel_scale = 0.35;
    img.origin = -0.35 * Vec2((w - 1) / 2.0, (h - 1) / 2.0);
    img.intensities.assign(static_cast<std::size_t>(w) * h, static_cast<std::uint8_t>(bg));
    return img;
}

// Paints an anti-aliased dark disk the same way a renderer would, by
// supersampled coverage.
void paint_disk(GrayImage& img, double cx_px, double cy_px, double radius_px, int fg) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx_px - radius_px - 1)));
    const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx_px + radius_px + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy_px - radius_px - 1)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy_px + radius_px + 1)));
    for (int iy = y0; iy <= y1; ++iy)
        for (int ix = x0; ix <= x1; ++ix) {
            int hits = 0;
            for (int sy = 0; sy < 4; ++sy)
                for (int sx = 0; sx < 4; ++sx) {
                    const double px = ix - 0.5 + (sx + 0.5) / 4.0;
                    const double py = iy - 0.5 + (sy + 0.5) / 4.0;
                    const double dx = px - cx_px, dy = py - cy_px;
                    if (dx * dx + dy * dy <= radius_px * radius_px) ++hits;
                }
            const double cov = hits / 16.0;
            const double value = img.at(ix, iy) + cov * (fg - img.at(ix, iy));
            img.at(ix, iy) = static_cast<std::uint8_t>(std::lround(value));
        }
}

CatheterDesign imaging_design(int n) {
    HelixSpec helix{2.0 / (M_PI / 2), M_PI / 2, 0.0};
    return build_helical_design(25.0, 1.0, n, helix);
}

}  // namespace

TEST_CASE("blank image yields no detections") {
    const auto img = blank_image(128, 128, 230);
    const auto det = segment(img, SegmentationParams{});
    CHECK(det.items.empty());
}

TEST_CASE("two separated disks segment to two accurate centroids") {
    auto img = blank_image(256, 256, 230);
    const double radius = std::sqrt(50.0 / M_PI);  // ~50 px^2
    paint_disk(img, 100.25, 60.75, radius, 25);
    paint_disk(img, 180.0, 200.0, radius, 25);
    SegmentationParams params;
    params.min_area = 20;
    params.max_area = 100;
    const auto det = segment(img, params);
    REQUIRE(det.items.size() == 2);
    for (const auto& d : det.items) {
        const Vec2 px = img.mm_to_pixel(d.centroid);
        const double err0 = (px - Vec2(100.25, 60.75)).norm();
        const double err1 = (px - Vec2(180.0, 200.0)).norm();
        CHECK(std::min(err0, err1) < 0.5);
        CHECK(d.area >= 20);
        CHECK(d.area <= 100);
    }
}

TEST_CASE("regions below the area floor are excluded") {
    auto img = blank_image(128, 128, 230);
    paint_disk(img, 64.0, 64.0, std::sqrt(10.0 / M_PI), 25);  // ~10 px^2
    SegmentationParams params;
    params.min_area = 20;
    params.max_area = 100;
    CHECK(segment(img, params).items.empty());
}

TEST_CASE("segmentation is equivariant to whole-pixel shifts") {
    auto a = blank_image(256, 256, 230);
    auto b = blank_image(256, 256, 230);
    const double radius = 3.1;
    paint_disk(a, 80.3, 90.6, radius, 25);
    paint_disk(b, 80.3 + 7.0, 90.6 + 11.0, radius, 25);
    const auto da = segment(a, SegmentationParams{});
    const auto db = segment(b, SegmentationParams{});
    REQUIRE(da.items.size() == 1);
    REQUIRE(db.items.size() == 1);
    const Vec2 shift = db.items[0].centroid - da.items[0].centroid;
    CHECK(shift.x() == doctest::Approx(7.0 * a.pixel_scale).epsilon(1e-9));
    CHECK(shift.y() == doctest::Approx(11.0 * a.pixel_scale).epsilon(1e-9));
    CHECK(db.items[0].area == da.items[0].area);
}

TEST_CASE("rendered marker at the plane origin darkens the image center") {
    CatheterDesign design = imaging_design(1);
    design.marker_angles(0) = M_PI / 2;  // projects onto the front plane's x=0
    const auto geom = BiplaneGeometry::canonical();
    // Center the tracked segment on the world origin.
    Pose base;
    base.position = Vec3(0, 0, -12.5);
    const auto world = marker_world_positions(design, ModalCoefficients::zero(2), 0.0, base, 0.25);
    const auto img = render_plane(world, design, geom, Plane::front, RenderParams{});

    // The dot interior ties at the foreground intensity; the nearest of the
    // darkest pixels must sit within a pixel of the image center.
    int best = 256;
    for (const auto v : img.intensities) best = std::min(best, static_cast<int>(v));
    double nearest = std::numeric_limits<double>::max();
    for (int iy = 0; iy < img.height; ++iy)
        for (int ix = 0; ix < img.width; ++ix)
            if (img.at(ix, iy) == best)
                nearest = std::min(nearest, std::hypot(ix - (img.width - 1) / 2.0,
                                                       iy - (img.height - 1) / 2.0));
    CHECK(nearest <= 1.0);
}

TEST_CASE("out-of-frame markers are reported by name") {
    const CatheterDesign design = imaging_design(3);
    const auto geom = BiplaneGeometry::canonical();
    Pose base;
    base.position = Vec3(200.0, 0, 0);  // far outside a 512-px frame
    const auto world = marker_world_positions(design, ModalCoefficients::zero(2), 0.0, base, 0.25);
    CHECK_THROWS_WITH_AS((void)render_plane(world, design, geom, Plane::front, RenderParams{}),
                         doctest::Contains("outside image bounds"), Error);
}

TEST_CASE("render then segment recovers ten marker centroids") {
    // Spacing chosen so projected blob separation stays above the merge limit.
    CatheterDesign design =
        build_helical_design(25.0, 1.0, 10, {2.2 / (2 * M_PI / 3), 2 * M_PI / 3, 0.0});
    design.marker_diameter = 1.2;
    const auto geom = BiplaneGeometry::canonical();
    Pose base;
    base.position = Vec3(0, 0, -12.5);
    const ModalCoefficients c{Eigen::Vector2d(0.01, -0.005), Eigen::Vector2d(0.008, 0.004)};
    const auto world = marker_world_positions(design, c, 0.4, base, 0.25);
    const auto img = render_plane(world, design, geom, Plane::front, RenderParams{});
    const auto det = segment(img, SegmentationParams{});
    const auto labeled = classify(det, design, ExpectedAreas::from_design(design, img.pixel_scale));

    const auto dots = labeled.centroids(MarkerLabel::intermediate);
    REQUIRE(dots.size() == 10);
    double rms = 0.0;
    for (const auto& p : world.intermediates) {
        const Vec2 truth = project_point(p, Plane::front, geom);
        double best = std::numeric_limits<double>::max();
        for (const auto& d : dots) best = std::min(best, (d - truth).norm());
        rms += best * best;
    }
    rms = std::sqrt(rms / 10.0);
    CHECK(rms < 0.5 * img.pixel_scale);
}

TEST_CASE("classification labels bands and dots from a rendered frame") {
    const CatheterDesign design = imaging_design(5);
    const auto geom = BiplaneGeometry::canonical();
    Pose base;
    base.position = Vec3(0, 0, -12.5);
    const auto world = marker_world_positions(design, ModalCoefficients::zero(2), 0.0, base, 0.25);
    const auto img = render_plane(world, design, geom, Plane::front, RenderParams{});
    const auto labeled =
        classify(segment(img, SegmentationParams{}), design,
                 ExpectedAreas::from_design(design, img.pixel_scale));

    REQUIRE(labeled.find(MarkerLabel::base));
    REQUIRE(labeled.find(MarkerLabel::base_prime));
    REQUIRE(labeled.find(MarkerLabel::tip));
    CHECK(labeled.centroids(MarkerLabel::intermediate).size() == 5);

    const Vec2 base_truth = project_point(world.base, Plane::front, geom);
    const Vec2 bp_truth = project_point(world.base_prime, Plane::front, geom);
    const Vec2 tip_truth = project_point(world.tip, Plane::front, geom);
    CHECK((labeled.find(MarkerLabel::base)->centroid - base_truth).norm() < 0.5);
    CHECK((labeled.find(MarkerLabel::base_prime)->centroid - bp_truth).norm() < 0.5);
    CHECK((labeled.find(MarkerLabel::tip)->centroid - tip_truth).norm() < 0.5);
}

TEST_CASE("indistinguishable equal areas fail classification") {
    MarkerDetections det;
    for (int i = 0; i < 7; ++i) {
        Detection d;
        d.centroid = Vec2(3.0 * i, 0.0);
        d.area = 30.0;
        det.items.push_back(d);
    }
    ExpectedAreas expected{33.0, 14.0};  // every region lands on the band side
    const CatheterDesign design = imaging_design(4);
    CHECK_THROWS_AS((void)classify(det, design, expected), Error);
}

TEST_CASE("bands without dots still classify") {
    const CatheterDesign design = imaging_design(1);
    MarkerDetections det;
    Detection bp, b, tip;
    bp.centroid = Vec2(0.0, -15.5);
    bp.area = 33.0;
    b.centroid = Vec2(0.0, -12.5);
    b.area = 33.0;
    tip.centroid = Vec2(0.0, 12.5);
    tip.area = 32.0;
    det.items = {tip, b, bp};
    const auto labeled = classify(det, design, ExpectedAreas{33.0, 14.0});
    CHECK(labeled.find(MarkerLabel::base)->centroid.y() == doctest::Approx(-12.5));
    CHECK(labeled.find(MarkerLabel::base_prime)->centroid.y() == doctest::Approx(-15.5));
    CHECK(labeled.find(MarkerLabel::tip)->centroid.y() == doctest::Approx(12.5));
    CHECK(labeled.centroids(MarkerLabel::intermediate).empty());
}

TEST_CASE("segmentation of a 512x512 frame stays under the frame budget") {
    auto img = blank_image(512, 512, 230);
    Rng rng(77);
    for (int i = 0; i < 10; ++i)
        paint_disk(img, rng.uniform(30, 480), rng.uniform(30, 480), 2.2, 25);
    const auto start = std::chrono::steady_clock::now();
    const auto det = segment(img, SegmentationParams{});
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    CHECK(det.items.size() <= 10);
    CHECK(ms < 25.0);
}

TEST_CASE("additive render noise is seeded and bounded") {
    const CatheterDesign design = imaging_design(3);
    const auto geom = BiplaneGeometry::canonical();
    Pose base;
    base.position = Vec3(0, 0, -12.5);
    const auto world = marker_world_positions(design, ModalCoefficients::zero(2), 0.0, base, 0.25);
    RenderParams params;
    params.noise_amplitude = 8;
    params.seed = 42;
    const auto a = render_plane(world, design, geom, Plane::front, params);
    const auto b = render_plane(world, design, geom, Plane::front, params);
    CHECK(a.intensities == b.intensities);
    params.seed = 43;
    const auto c = render_plane(world, design, geom, Plane::front, params);
    CHECK(a.intensities != c.intensities);
}
