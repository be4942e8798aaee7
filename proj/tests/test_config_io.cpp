#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "cathtrack/io.hpp"

using namespace cathtrack;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("cathtrack_test_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("design config round trip is the identity") {
    const auto design = build_helical_design(25.0, 1.0, 9, {1.671, M_PI / 2, 0.2});
    const Json once = design_to_json(design);
    const auto parsed = design_from_json(once);
    CHECK(design_to_json(parsed) == once);
    CHECK((parsed.marker_arclengths - design.marker_arclengths).norm() == 0.0);
    CHECK((parsed.marker_angles - design.marker_angles).norm() == 0.0);
}

TEST_CASE("design config accepts the helix form") {
    const Json j = {{"type", "catheter_design"},
                    {"length_mm", 25.0},
                    {"radius_mm", 1.0},
                    {"markers",
                     {{"helix",
                       {{"count", 5}, {"pitch_mm_per_rad", 1.5}, {"angular_spacing_rad", 1.0}}}}}};
    const auto design = design_from_json(j);
    CHECK(design.marker_count() == 5);
    const auto direct = build_helical_design(25.0, 1.0, 5, {1.5, 1.0, 0.0});
    CHECK((design.marker_arclengths - direct.marker_arclengths).norm() == 0.0);
}

TEST_CASE("geometry config round trip and canonical shortcut") {
    const auto geom = BiplaneGeometry::canonical(0.27);
    const Json once = geometry_to_json(geom);
    const auto parsed = geometry_from_json(once);
    CHECK(geometry_to_json(parsed) == once);

    const Json shortcut = {{"type", "biplane_geometry"}, {"canonical", true},
                           {"pixel_scale_mm", 0.27}};
    const auto canon = geometry_from_json(shortcut);
    CHECK((canon.front_rotation - geom.front_rotation).norm() == 0.0);
    CHECK(canon.pixel_scale == 0.27);
}

TEST_CASE("estimator config round trip keeps priors") {
    EstimatorConfig cfg;
    cfg.zeta_c = 1e-3;
    cfg.zeta_sigma = 2e-3;
    cfg.prior_coeffs = Eigen::VectorXd::LinSpaced(6, -0.01, 0.02);
    cfg.prior_sigma = 0.4;
    cfg.roll_multistart = 12;
    const Json once = estimator_to_json(cfg);
    const auto parsed = estimator_from_json(once);
    CHECK(estimator_to_json(parsed) == once);
    CHECK(parsed.prior_sigma.has_value());
    CHECK(*parsed.prior_sigma == 0.4);
}

TEST_CASE("study config round trip covers every kind") {
    for (StudyKind kind : {StudyKind::spacing, StudyKind::slenderness, StudyKind::dropped}) {
        StudyConfig cfg;
        cfg.kind = kind;
        if (kind == StudyKind::dropped) cfg.estimation_orders = {2, 3, 4};
        cfg.master_seed = 777;
        const Json once = study_to_json(cfg);
        const auto parsed = study_from_json(once);
        CHECK(study_to_json(parsed) == once);
    }
}

TEST_CASE("segmentation and render configs round trip") {
    SegmentationParams seg;
    seg.thresh = 80;
    seg.min_area = 9;
    const Json sj = segmentation_to_json(seg);
    CHECK(segmentation_to_json(segmentation_from_json(sj)) == sj);

    RenderParams render;
    render.noise_amplitude = 5;
    render.seed = 42;
    const Json rj = render_to_json(render);
    CHECK(render_to_json(render_from_json(rj)) == rj);
}

TEST_CASE("pose spec round trips in both forms") {
    PoseSpec explicit_spec;
    explicit_spec.coeffs = ModalCoefficients{Eigen::Vector2d(0.01, 0.02), Eigen::Vector2d(0.0, -0.01)};
    explicit_spec.sigma = 0.9;
    const Json ej = pose_spec_to_json(explicit_spec);
    const auto eparsed = pose_spec_from_json(ej);
    CHECK_FALSE(eparsed.seeded);
    CHECK(pose_spec_to_json(eparsed) == ej);

    PoseSpec seeded;
    seeded.seeded = true;
    seeded.seed = 31415;
    seeded.order = 4;
    const Json sj = pose_spec_to_json(seeded);
    const auto sparsed = pose_spec_from_json(sj);
    CHECK(sparsed.seeded);
    CHECK(sparsed.seed == 31415);
    CHECK(pose_spec_to_json(sparsed) == sj);
}

TEST_CASE("config errors carry the config code and name the field") {
    const Json missing = {{"type", "catheter_design"}, {"radius_mm", 1.0},
                          {"markers", {{"explicit", {{"arclengths_mm", {1.0}}, {"angles_rad", {0.0}}}}}}};
    try {
        (void)design_from_json(missing);
        FAIL("expected a config error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config);
        CHECK(std::string(e.what()).find("length_mm") != std::string::npos);
    }
    CHECK_THROWS_AS((void)load_json_file("/nonexistent/path.json"), Error);
}

TEST_CASE("PGM round trip preserves pixels and calibration") {
    TempDir tmp;
    GrayImage img;
    img.width = 33;
    img.height = 17;
    img.pixel_scale = 0.4;
    img.origin = {-6.4, -3.2};
    img.intensities.resize(33 * 17);
    for (std::size_t i = 0; i < img.intensities.size(); ++i)
        img.intensities[i] = static_cast<std::uint8_t>(i % 251);
    write_pgm(tmp.file("img.pgm"), img);
    const GrayImage back = read_pgm(tmp.file("img.pgm"));
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixel_scale == img.pixel_scale);
    CHECK(back.origin == img.origin);
    CHECK(back.intensities == img.intensities);
}

TEST_CASE("planar marker CSV round trip") {
    TempDir tmp;
    PlanarMarkers pm;
    pm.base_prime = {0.125, -3.5};
    pm.base = {0.0, -0.5};
    pm.tip = {4.25, 25.0};
    pm.intermediates = {{1.0, 2.0}, {3.0, 4.0}, {-0.5, 0.25}};
    write_planar_markers_csv(tmp.file("m.csv"), pm, Plane::front);
    const auto back = read_planar_markers_csv(tmp.file("m.csv"));
    CHECK(back.base_prime == pm.base_prime);
    CHECK(back.base == pm.base);
    CHECK(back.tip == pm.tip);
    REQUIRE(back.intermediates.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.intermediates[i] == pm.intermediates[i]);
}

TEST_CASE("detections CSV round trip") {
    TempDir tmp;
    MarkerDetections det;
    det.items = {{{1.5, 2.5}, 30.0, MarkerLabel::base},
                 {{0.5, -2.5}, 31.0, MarkerLabel::base_prime},
                 {{9.5, 2.0}, 29.0, MarkerLabel::tip},
                 {{4.5, 1.0}, 14.0, MarkerLabel::intermediate}};
    write_detections_csv(tmp.file("d.csv"), det);
    const auto back = read_detections_csv(tmp.file("d.csv"));
    REQUIRE(back.items.size() == det.items.size());
    for (std::size_t i = 0; i < det.items.size(); ++i) {
        CHECK(back.items[i].label == det.items[i].label);
        CHECK(back.items[i].centroid == det.items[i].centroid);
        CHECK(back.items[i].area == det.items[i].area);
    }
}

TEST_CASE("world marker CSV round trip with a missing slot") {
    TempDir tmp;
    OrderedMarkerSet set;
    set.base_prime = {0, 0, -3};
    set.base = {0, 0, 0};
    set.tip = {1, 0, 25};
    set.markers = {{1, 0, 5}, {0, 1, 10}, {-1, 0, 15}};
    set.present = {true, false, true};
    set.base_tangent = Vec3(0, 0, 1);
    write_world_markers_csv(tmp.file("w.csv"), set);
    const auto back = read_world_markers_csv(tmp.file("w.csv"));
    REQUIRE(back.markers.size() == 3);
    CHECK(back.present == std::vector<bool>{true, false, true});
    CHECK(back.markers[0] == set.markers[0]);
    CHECK(back.markers[2] == set.markers[2]);
    CHECK((back.base_tangent - Vec3(0, 0, 1)).norm() < 1e-12);
}

TEST_CASE("manifest records version, hash, and outputs") {
    TempDir tmp;
    save_json_file(tmp.file("cfg.json"), Json{{"type", "x"}});
    write_manifest(tmp.path.string(), "simulate", {tmp.file("cfg.json")}, 42, {"a.csv", "b.json"});
    const Json manifest = load_json_file(tmp.file("manifest.json"));
    CHECK(manifest["type"] == "run_manifest");
    CHECK(manifest["command"] == "simulate");
    CHECK(manifest["master_seed"] == 42);
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["config_hash"].get<std::uint64_t>() != 0);
    // Hash is a pure function of the config bytes.
    const auto h1 = fnv1a_file(tmp.file("cfg.json"));
    const auto h2 = fnv1a_file(tmp.file("cfg.json"));
    CHECK(h1 == h2);
}
