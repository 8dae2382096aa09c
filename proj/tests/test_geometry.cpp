#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csiloc/geometry.hpp"
#include "csiloc/rng.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace csiloc;

TEST_CASE("wrap_angle maps into (-pi, pi]") {
    CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi / 2.0) == doctest::Approx(-kPi / 2.0));
    CHECK(wrap_angle(2.0 * kPi) == doctest::Approx(0.0));
    CHECK(wrap_angle(-7.5 * kPi) == doctest::Approx(0.5 * kPi));
    // Idempotent on already-wrapped values.
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        double a = rng.uniform(-40.0, 40.0);
        double w = wrap_angle(a);
        CHECK(w > -kPi);
        CHECK(w <= kPi);
        CHECK(wrap_angle(w) == doctest::Approx(w));
        // Same point on the circle.
        CHECK(std::cos(w) == doctest::Approx(std::cos(a)));
        CHECK(std::sin(w) == doctest::Approx(std::sin(a)));
    }
}

TEST_CASE("location arithmetic and distance") {
    Location a{1.0, 2.0};
    Location b{4.0, 6.0};
    CHECK((a + b) == Location{5.0, 8.0});
    CHECK((b - a) == Location{3.0, 4.0});
    CHECK((2.0 * a) == Location{2.0, 4.0});
    CHECK(distance(a, b) == doctest::Approx(5.0));
}

TEST_CASE("rect contains, clamp, center") {
    Rect r{0.0, 0.0, 8.0, 6.0};
    CHECK(r.width() == doctest::Approx(8.0));
    CHECK(r.height() == doctest::Approx(6.0));
    CHECK(r.contains({0.0, 0.0}));
    CHECK(r.contains({8.0, 6.0}));
    CHECK(!r.contains({8.0001, 3.0}));
    CHECK(r.clamp({9.0, -1.0}) == Location{8.0, 0.0});
    CHECK(r.clamp({4.0, 3.0}) == Location{4.0, 3.0});
    CHECK(r.center() == Location{4.0, 3.0});
}

TEST_CASE("LOS path parameters on a 3-4-5 triangle") {
    Scene scene;
    scene.ap = {0.0, 0.0};
    scene.target = {3.0, 4.0};
    scene.validate();

    auto paths = path_params_from_geometry(scene, {std::complex<double>(1.0, 0.0)});
    REQUIRE(paths.size() == 1);
    CHECK(paths[0].tau == doctest::Approx(5.0 / kSpeedOfLight).epsilon(1e-12));
    CHECK(paths[0].theta_t == doctest::Approx(std::atan2(4.0, 3.0)).epsilon(1e-12));
    CHECK(paths[0].theta_r == doctest::Approx(std::atan2(4.0, 3.0) - kPi).epsilon(1e-12));
    CHECK(paths[0].h == std::complex<double>(1.0, 0.0));
}

TEST_CASE("scatterer path parameters") {
    Scene scene;
    scene.ap = {0.0, 0.0};
    scene.target = {3.0, 0.0};
    scene.scatterers = {{0.0, 4.0}};
    scene.validate();

    std::vector<std::complex<double>> coeffs{{1.0, 0.0}, {0.25, -0.1}};
    auto paths = path_params_from_geometry(scene, coeffs);
    REQUIRE(paths.size() == 2);
    // AP->scatterer 4 m, scatterer->target 5 m.
    CHECK(paths[1].tau == doctest::Approx(9.0 / kSpeedOfLight).epsilon(1e-12));
    CHECK(paths[1].theta_t == doctest::Approx(kPi / 2.0).epsilon(1e-12)); // straight up
    // Arrival at the target from the scatterer: direction (0,4)-(3,0) = (-3,4).
    CHECK(paths[1].theta_r == doctest::Approx(std::atan2(4.0, -3.0)).epsilon(1e-12));
    CHECK(paths[1].h == coeffs[1]);
    // NLOS is longer than LOS.
    CHECK(paths[1].tau > paths[0].tau);
}

TEST_CASE("location_from_los inverts the LOS geometry") {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        Location ap{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        Location target{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        if (distance(ap, target) < 1e-3) continue;
        Scene scene;
        scene.ap = ap;
        scene.target = target;
        auto paths = path_params_from_geometry(scene, {std::complex<double>(1.0, 0.0)});
        Location rec = location_from_los(ap, paths[0].tau, paths[0].theta_t);
        CHECK(distance(rec, target) < 1e-9);
    }
    CHECK_THROWS_AS(location_from_los({0, 0}, -1e-9, 0.0), InvalidConfigError);
}

TEST_CASE("default_path_coeffs: unit LOS, deterministic NLOS") {
    auto c1 = default_path_coeffs(4, 99);
    auto c2 = default_path_coeffs(4, 99);
    auto c3 = default_path_coeffs(4, 100);
    REQUIRE(c1.size() == 4);
    CHECK(c1[0] == std::complex<double>(1.0, 0.0));
    CHECK(c1 == c2);
    CHECK(c1[1] != c3[1]);
    for (int k = 1; k < 4; ++k) CHECK(std::abs(c1[static_cast<std::size_t>(k)]) < 1.0);
}

TEST_CASE("ofdm wavelengths are centered on the carrier") {
    OfdmConfig ofdm;
    ofdm.validate();
    // Center index (n-1)/2 sits exactly at the carrier for odd offsets of the
    // default 30-subcarrier block; check symmetry around it instead.
    double f_lo = kSpeedOfLight / ofdm.wavelength(0);
    double f_hi = kSpeedOfLight / ofdm.wavelength(ofdm.n_subcarriers - 1);
    CHECK(0.5 * (f_lo + f_hi) == doctest::Approx(ofdm.carrier_freq).epsilon(1e-12));
    CHECK(f_hi - f_lo ==
          doctest::Approx((ofdm.n_subcarriers - 1) * ofdm.subcarrier_spacing).epsilon(1e-12));
}

TEST_CASE("scene validation rejects degenerate layouts") {
    Scene scene;
    scene.ap = {1.0, 1.0};
    scene.target = {1.0, 1.0};
    CHECK_THROWS_AS(scene.validate(), DegenerateGeometryError);

    scene.target = {2.0, 2.0};
    scene.scatterers = {{2.0, 2.0}};
    CHECK_THROWS_AS(scene.validate(), DegenerateGeometryError);

    scene.scatterers.clear();
    scene.array.n_rx = 0;
    CHECK_THROWS_AS(scene.validate(), InvalidConfigError);
    scene.array.n_rx = 3;
    scene.ofdm.n_subcarriers = -2;
    CHECK_THROWS_AS(scene.validate(), InvalidConfigError);
}

TEST_CASE("scene JSON round trip") {
    Scene scene;
    scene.ap = {0.25, 0.5};
    scene.target = {3.5, 4.25};
    scene.scatterers = {{1.0, 5.0}, {6.5, 2.0}};
    scene.array.n_rx = 4;
    scene.ofdm.carrier_freq = 5.745e9;
    scene.validate();

    Scene back = scene_from_json(scene_to_json(scene));
    CHECK(back.ap == scene.ap);
    CHECK(back.target == scene.target);
    REQUIRE(back.scatterers.size() == 2);
    CHECK(back.scatterers[1] == scene.scatterers[1]);
    CHECK(back.array.n_rx == 4);
    CHECK(back.ofdm.carrier_freq == scene.ofdm.carrier_freq);

    auto path = std::filesystem::temp_directory_path() / "csiloc_scene_rt.json";
    save_scene(scene, path.string());
    Scene loaded = load_scene(path.string());
    CHECK(loaded.target == scene.target);
    std::filesystem::remove(path);
}

TEST_CASE("scene JSON rejects unknown keys and malformed text") {
    CHECK_THROWS_AS(scene_from_json("{"), InvalidConfigError);
    CHECK_THROWS_AS(
        scene_from_json(R"({"ap":[0,0],"target":[1,1],"bogus":3})"),
        InvalidConfigError);
}
