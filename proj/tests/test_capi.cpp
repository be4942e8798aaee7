#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "cathtrack.h"

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("cathtrack_capi_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

ct_design* helical_design(int n = 9) {
    ct_design* design = nullptr;
    const double gap = 21.0 / std::max(1, n - 1);
    REQUIRE(ct_design_helical(25.0, 1.0, n, gap / (M_PI / 2), M_PI / 2, 0.0, &design) == CT_OK);
    return design;
}

}  // namespace

TEST_CASE("version and status names") {
    CHECK(std::strlen(ct_version()) > 0);
    CHECK(std::string(ct_status_name(CT_OK)) == "ok");
    CHECK(std::string(ct_status_name(CT_ERROR_CONFIG)) == "config");
    CHECK(std::string(ct_status_name(CT_ERROR_IO)) == "io");
}

TEST_CASE("null arguments are rejected with a message") {
    CHECK(ct_design_load(nullptr, nullptr) == CT_ERROR_INVALID_ARGUMENT);
    CHECK(std::strlen(ct_last_error()) > 0);
    ct_design* design = nullptr;
    CHECK(ct_design_load("/nonexistent/design.json", &design) == CT_ERROR_IO);
}

TEST_CASE("design construction and accessors") {
    ct_design* design = helical_design(7);
    CHECK(ct_design_marker_count(design) == 7);
    CHECK(ct_design_length(design) == doctest::Approx(25.0));
    CHECK(ct_design_radius(design) == doctest::Approx(1.0));
    ct_design_free(design);

    ct_design* bad = nullptr;
    CHECK(ct_design_helical(25.0, 1.0, 4, 0.0, 1.0, 0.0, &bad) == CT_ERROR_CONFIG);
}

TEST_CASE("design parses from JSON text") {
    const char* json = R"({
      "type": "catheter_design", "length_mm": 20.0, "radius_mm": 0.7,
      "markers": {"explicit": {"arclengths_mm": [5.0, 10.0, 15.0],
                                "angles_rad": [0.0, 1.57, 3.14]}}
    })";
    ct_design* design = nullptr;
    REQUIRE(ct_design_from_json(json, &design) == CT_OK);
    CHECK(ct_design_marker_count(design) == 3);
    ct_design_free(design);
}

TEST_CASE("spacing helpers") {
    double d = 0.0, kappa = 0.0;
    REQUIRE(ct_marker_spacing(1.0, 1.0, M_PI / 2, &d) == CT_OK);
    CHECK(d == doctest::Approx(std::sqrt(2.0 + M_PI * M_PI / 4.0)));
    REQUIRE(ct_spacing_factor(d, 0.5, &kappa) == CT_OK);
    CHECK(kappa == doctest::Approx(2.0 * d));
    CHECK(ct_spacing_factor(1.0, 0.0, &kappa) == CT_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("chebyshev basis through the C surface") {
    double t[4];
    REQUIRE(ct_chebyshev_basis(0.5, 3, t) == CT_OK);
    CHECK(t[0] == doctest::Approx(1.0));
    CHECK(t[1] == doctest::Approx(0.5));
    CHECK(t[2] == doctest::Approx(-0.5));
    CHECK(ct_chebyshev_basis(1.5, 3, t) == CT_ERROR_INVALID_ARGUMENT);
}

TEST_CASE("projection and triangulation round trip") {
    ct_geometry* geom = nullptr;
    REQUIRE(ct_geometry_canonical(0.35, &geom) == CT_OK);
    const double p[3] = {1.0, 2.0, 3.0};
    double front[2], side[2], back[3];
    REQUIRE(ct_project_point(geom, p, CT_PLANE_FRONT, front) == CT_OK);
    REQUIRE(ct_project_point(geom, p, CT_PLANE_SIDE, side) == CT_OK);
    REQUIRE(ct_triangulate(geom, front, side, back) == CT_OK);
    for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(p[i]).epsilon(1e-9));

    double dist = -1.0;
    REQUIRE(ct_epipolar_distance(geom, CT_PLANE_FRONT, front, side, &dist) == CT_OK);
    CHECK(dist < 1e-9);
    ct_geometry_free(geom);
}

TEST_CASE("forward markers of a straight catheter") {
    ct_design* design = helical_design(3);
    const double coeffs[6] = {0, 0, 0, 0, 0, 0};
    std::vector<double> out(static_cast<std::size_t>((3 + 3) * 3));
    REQUIRE(ct_forward_markers(design, coeffs, 3, 0.0, nullptr, out.data()) == CT_OK);
    // Slot 0 = base', slot 1 = base, slots 2..4 = markers, slot 5 = tip.
    CHECK(out[2] == doctest::Approx(-3.0));    // base' z
    CHECK(out[5] == doctest::Approx(0.0));     // base z
    CHECK(out[17] == doctest::Approx(25.0));   // tip z
    ct_design_free(design);
}

TEST_CASE("backbone sampling through the C surface") {
    ct_design* design = helical_design(3);
    const double coeffs[2] = {0.0, 0.0};
    const int count = 11;
    std::vector<double> s(count), r(9 * count), p(3 * count);
    REQUIRE(ct_backbone(design, coeffs, 1, nullptr, count, s.data(), r.data(), p.data()) == CT_OK);
    CHECK(s.front() == 0.0);
    CHECK(s.back() == doctest::Approx(25.0));
    CHECK(p[3 * (count - 1) + 2] == doctest::Approx(25.0));
    CHECK(r[0] == doctest::Approx(1.0));  // identity rotation
    ct_design_free(design);
}

TEST_CASE("segmentation plus classification over the C surface") {
    // 64x64 frame, one dark band-sized blob and one dot-sized blob.
    const int w = 96, h = 96;
    std::vector<unsigned char> pixels(static_cast<std::size_t>(w) * h, 230);
    const auto paint = [&](int cx, int cy, double radius) {
        for (int y = cy - 12; y <= cy + 12; ++y)
            for (int x = cx - 12; x <= cx + 12; ++x)
                if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius)
                    pixels[static_cast<std::size_t>(y) * w + x] = 25;
    };
    paint(20, 20, 5.0);
    paint(60, 60, 2.3);

    ct_seg_params params;
    ct_seg_params_default(&params);
    ct_detections* det = nullptr;
    REQUIRE(ct_segment_image(pixels.data(), w, h, 0.35, 0.0, 0.0, &params, &det) == CT_OK);
    CHECK(ct_detections_count(det) == 2);
    double x, y, area;
    ct_label label;
    REQUIRE(ct_detections_get(det, 0, &label, &x, &y, &area) == CT_OK);
    CHECK(label == CT_LABEL_UNKNOWN);
    CHECK(ct_detections_get(det, 99, &label, &x, &y, &area) == CT_ERROR_INVALID_ARGUMENT);
    ct_detections_free(det);
}

TEST_CASE("full loop: forward, project, reconstruct, estimate") {
    ct_design* design = helical_design(9);
    ct_geometry* geom = nullptr;
    REQUIRE(ct_geometry_canonical(0.35, &geom) == CT_OK);

    // Truth configuration, bent gently enough that no blobs merge.
    const int order = 3;
    const double coeffs[6] = {0.02, -0.008, 0.004, 0.01, 0.012, 0.0};
    const double sigma = 0.7;
    const int n = ct_design_marker_count(design);
    std::vector<double> world(static_cast<std::size_t>((n + 3) * 3));
    REQUIRE(ct_forward_markers(design, coeffs, order, sigma, nullptr, world.data()) == CT_OK);

    // Build labeled detections for both planes (noiseless projections).
    const auto project_all = [&](ct_plane plane) {
        std::vector<double> planar;
        for (int i = 0; i < n + 3; ++i) {
            double xy[2];
            REQUIRE(ct_project_point(geom, &world[static_cast<std::size_t>(3 * i)], plane, xy) ==
                    CT_OK);
            planar.push_back(xy[0]);
            planar.push_back(xy[1]);
        }
        return planar;
    };

    // Synthesize a detections image is unnecessary; write detections via the
    // segment-image path instead: paint dots at projected pixels.
    const auto detections_for = [&](ct_plane plane) {
        const auto planar = project_all(plane);
        const int w = 512, h = 512;
        const double scale = 0.35;
        const double ox = -scale * (w - 1) / 2.0, oy = -scale * (h - 1) / 2.0;
        std::vector<unsigned char> pixels(static_cast<std::size_t>(w) * h, 230);
        const auto paint = [&](double mmx, double mmy, double radius_px) {
            const double cx = (mmx - ox) / scale, cy = (mmy - oy) / scale;
            for (int y = static_cast<int>(cy - radius_px - 2); y <= cy + radius_px + 2; ++y)
                for (int x = static_cast<int>(cx - radius_px - 2); x <= cx + radius_px + 2; ++x)
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius_px * radius_px)
                        pixels[static_cast<std::size_t>(y) * w + x] = 25;
        };
        // Bands band-scale but small enough not to merge across the 3 mm
        // base separation; dots marker-scale.
        paint(planar[0], planar[1], 2.9);
        paint(planar[2], planar[3], 2.9);
        for (int i = 2; i < n + 2; ++i) paint(planar[2 * i], planar[2 * i + 1], 2.2);
        paint(planar[2 * (n + 2)], planar[2 * (n + 2) + 1], 2.9);

        ct_detections* det = nullptr;
        REQUIRE(ct_segment_image(pixels.data(), w, h, scale, ox, oy, nullptr, &det) == CT_OK);
        REQUIRE(ct_classify(det, design, scale) == CT_OK);
        return det;
    };

    ct_detections* front = detections_for(CT_PLANE_FRONT);
    ct_detections* side = detections_for(CT_PLANE_SIDE);
    ct_markers* markers = nullptr;
    // Centroid quantization acts like noise; use a loose gate.
    REQUIRE(ct_reconstruct(front, side, geom, design, 0.5, &markers) == CT_OK);
    CHECK(ct_markers_count(markers) == n + 3);

    ct_estimate* est = nullptr;
    REQUIRE(ct_estimate_run(markers, design, nullptr, order, &est) == CT_OK);
    CHECK(ct_estimate_converged(est) == 1);
    CHECK(std::abs(ct_estimate_sigma(est) - sigma) < 0.05);

    // Hard-edged painted blobs quantize the centroids at the ~0.1 mm level.
    std::vector<double> cx(order), cy(order);
    REQUIRE(ct_estimate_coeffs(est, cx.data(), cy.data()) == CT_OK);
    for (int k = 0; k < order; ++k) {
        CHECK(std::abs(cx[static_cast<std::size_t>(k)] - coeffs[k]) < 0.03);
        CHECK(std::abs(cy[static_cast<std::size_t>(k)] - coeffs[order + k]) < 0.03);
    }

    double pose[16];
    REQUIRE(ct_estimate_base_pose(est, pose) == CT_OK);
    CHECK(pose[15] == 1.0);

    ct_estimate_free(est);
    ct_markers_free(markers);
    ct_detections_free(front);
    ct_detections_free(side);
    ct_geometry_free(geom);
    ct_design_free(design);
}

TEST_CASE("simulate runner writes outputs through the C surface") {
    TempDir tmp;
    // Write configs.
    {
        FILE* f = std::fopen(tmp.file("design.json").c_str(), "w");
        std::fputs(R"({"type":"catheter_design","length_mm":25.0,"radius_mm":1.0,
                      "markers":{"helix":{"count":9,"pitch_mm_per_rad":1.671,
                                           "angular_spacing_rad":1.5707963,"start_angle_rad":0.0}}})",
                   f);
        std::fclose(f);
        f = std::fopen(tmp.file("geometry.json").c_str(), "w");
        std::fputs(R"({"type":"biplane_geometry","canonical":true,"pixel_scale_mm":0.35})", f);
        std::fclose(f);
    }
    ct_simulate_opts opts{};
    const std::string design_path = tmp.file("design.json");
    const std::string geometry_path = tmp.file("geometry.json");
    const std::string out_dir = tmp.file("out");
    opts.design_path = design_path.c_str();
    opts.geometry_path = geometry_path.c_str();
    opts.seed = 7;
    opts.order = 3;
    opts.out_dir = out_dir.c_str();
    REQUIRE(ct_run_simulate(&opts) == CT_OK);
    CHECK(std::filesystem::exists(out_dir + "/front_markers.csv"));
    CHECK(std::filesystem::exists(out_dir + "/side_markers.csv"));
    CHECK(std::filesystem::exists(out_dir + "/truth.json"));
    CHECK(std::filesystem::exists(out_dir + "/manifest.json"));
}
