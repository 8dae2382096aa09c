#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csiloc/crlb.hpp"
#include "csiloc/rng.hpp"

#include <cmath>
#include <complex>

using namespace csiloc;

namespace {

Scene random_scene(Rng& rng, int n_scatterers) {
    Scene scene;
    scene.ap = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    scene.target = {rng.uniform(3.0, 7.0), rng.uniform(2.0, 6.0)};
    for (int k = 0; k < n_scatterers; ++k)
        scene.scatterers.push_back({rng.uniform(-2.0, 9.0), rng.uniform(-2.0, 8.0)});
    scene.array.n_tx = 3;
    scene.array.n_rx = 3;
    scene.validate();
    return scene;
}

// Channel parameter vector for a scene under fixed path coefficients.
Eigen::VectorXd eta_of(const Scene& scene, const std::vector<std::complex<double>>& coeffs) {
    auto paths = path_params_from_geometry(scene, coeffs);
    Eigen::VectorXd eta(ParamOrdering::dim(static_cast<int>(paths.size())));
    for (std::size_t k = 0; k < paths.size(); ++k) {
        int ki = static_cast<int>(k);
        eta(ParamOrdering::tau(ki)) = paths[k].tau;
        eta(ParamOrdering::theta_t(ki)) = paths[k].theta_t;
        eta(ParamOrdering::theta_r(ki)) = paths[k].theta_r;
        eta(ParamOrdering::h_re(ki)) = paths[k].h.real();
        eta(ParamOrdering::h_im(ki)) = paths[k].h.imag();
    }
    return eta;
}

bool is_angle_row(int row, int n_paths) {
    for (int k = 0; k < n_paths; ++k)
        if (row == ParamOrdering::theta_t(k) || row == ParamOrdering::theta_r(k)) return true;
    return false;
}

} // namespace

TEST_CASE("pilot config shapes and energy") {
    PilotConfig p = PilotConfig::all_ones(2, 30, 4);
    CHECK(p.symbols.rows() == 2);
    CHECK(p.symbols.cols() == 30);
    CHECK(p.n_symbols == 4);
    CHECK(p.pilot_energy() == doctest::Approx(2.0 * 30.0 * 4.0));

    ArrayConfig array;
    array.n_tx = 3;
    OfdmConfig ofdm;
    CHECK_THROWS_AS(p.validate(array, ofdm), InvalidConfigError); // n_tx mismatch
}

TEST_CASE("signal mean is the channel applied to the pilots") {
    Rng rng(21);
    Scene scene = random_scene(rng, 2);
    auto coeffs = default_path_coeffs(3, 5);
    auto paths = path_params_from_geometry(scene, coeffs);
    PilotConfig pilots = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers);
    for (int i : {0, 11, 29}) {
        Eigen::VectorXcd mu = signal_mean(paths, scene.array, scene.ofdm, pilots, i);
        Eigen::VectorXcd ref =
            channel_matrix(paths, scene.array, scene.ofdm, i) * pilots.symbols.col(i);
        CHECK((mu - ref).norm() < 1e-12 * std::max(1.0, ref.norm()));
    }
}

TEST_CASE("FIM is symmetric, scales as 1/N0, grows with symbols") {
    Rng rng(22);
    Scene scene = random_scene(rng, 1);
    auto coeffs = default_path_coeffs(2, 3);
    auto paths = path_params_from_geometry(scene, coeffs);
    PilotConfig p1 = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers, 1);
    PilotConfig p4 = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers, 4);

    Eigen::MatrixXd j = fim_eta(paths, scene.array, scene.ofdm, p1, 1e-3);
    CHECK((j - j.transpose()).norm() < 1e-10 * j.norm());

    Eigen::MatrixXd j_scaled = fim_eta(paths, scene.array, scene.ofdm, p1, 2e-3);
    CHECK((2.0 * j_scaled - j).norm() < 1e-9 * j.norm());

    Eigen::MatrixXd j4 = fim_eta(paths, scene.array, scene.ofdm, p4, 1e-3);
    CHECK((j4 - 4.0 * j).norm() < 1e-9 * j4.norm());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    CHECK(es.eigenvalues().minCoeff() > -1e-9 * es.eigenvalues().maxCoeff());
}

TEST_CASE("analytic FIM matches the central-difference oracle") {
    Rng rng(23);
    for (int trial = 0; trial < 8; ++trial) {
        Scene scene = random_scene(rng, static_cast<int>(rng.bounded(3)));
        auto coeffs = default_path_coeffs(scene.n_paths(), 40 + trial);
        auto paths = path_params_from_geometry(scene, coeffs);
        PilotConfig pilots = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers);
        Eigen::MatrixXd a = fim_eta(paths, scene.array, scene.ofdm, pilots, 1e-4);
        Eigen::MatrixXd n = fim_eta_numeric(paths, scene.array, scene.ofdm, pilots, 1e-4);
        CHECK((a - n).norm() / n.norm() < 1e-4);
    }
}

TEST_CASE("transform matrix equals the numeric Jacobian of eta(location)") {
    Rng rng(24);
    for (int trial = 0; trial < 6; ++trial) {
        Scene scene = random_scene(rng, 1 + static_cast<int>(rng.bounded(2)));
        const int np = scene.n_paths();
        // Unit coefficients isolate the geometry; h blocks are identity anyway.
        std::vector<std::complex<double>> coeffs(static_cast<std::size_t>(np), {1.0, 0.0});
        Eigen::MatrixXd t = transform_matrix(scene);
        REQUIRE(t.rows() == LocParamOrdering::dim(np));
        REQUIRE(t.cols() == ParamOrdering::dim(np));

        const double h = 1e-7;
        auto jac_row = [&](double* coord) {
            double orig = *coord;
            *coord = orig + h;
            Eigen::VectorXd plus = eta_of(scene, coeffs);
            *coord = orig - h;
            Eigen::VectorXd minus = eta_of(scene, coeffs);
            *coord = orig;
            Eigen::VectorXd d(plus.size());
            for (int r = 0; r < d.size(); ++r) {
                double diff = plus(r) - minus(r);
                if (is_angle_row(r, np)) diff = wrap_angle(diff);
                d(r) = diff / (2.0 * h);
            }
            return d;
        };

        auto check_row = [&](int row, Eigen::VectorXd numeric) {
            for (int c = 0; c < t.cols(); ++c) {
                double a = t(row, c);
                double b = numeric(c);
                double denom = std::max({std::abs(a), std::abs(b), 1e-9});
                CHECK(std::abs(a - b) / denom < 1e-5);
            }
        };

        check_row(LocParamOrdering::target_x(), jac_row(&scene.target.x));
        check_row(LocParamOrdering::target_y(), jac_row(&scene.target.y));
        for (int k = 1; k < np; ++k) {
            check_row(LocParamOrdering::scatterer_x(k),
                      jac_row(&scene.scatterers[static_cast<std::size_t>(k - 1)].x));
            check_row(LocParamOrdering::scatterer_y(k),
                      jac_row(&scene.scatterers[static_cast<std::size_t>(k - 1)].y));
        }

        // Coefficient rows are exact unit vectors.
        for (int k = 0; k < np; ++k) {
            CHECK(t(LocParamOrdering::h_re(k), ParamOrdering::h_re(k)) == 1.0);
            CHECK(t(LocParamOrdering::h_im(k), ParamOrdering::h_im(k)) == 1.0);
            CHECK(t.row(LocParamOrdering::h_re(k)).sum() == 1.0);
        }
    }
}

TEST_CASE("crlb_from_fim_tilde on a diagonal information matrix") {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, 4);
    j.diagonal() << 4.0, 16.0, 1.0, 1.0;
    CrlbResult r = crlb_from_fim_tilde(j);
    // Covariance diag(1/4, 1/16): rmse = sqrt(0.25 + 0.0625).
    CHECK(r.rmse == doctest::Approx(std::sqrt(0.3125)).epsilon(1e-12));
    CHECK(r.position_cov(0, 0) == doctest::Approx(0.25));
    CHECK(r.position_cov(1, 1) == doctest::Approx(0.0625));

    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(4, 4);
    singular.diagonal() << 1.0, 1.0, 1.0, 0.0;
    CHECK_THROWS_AS(crlb_from_fim_tilde(singular), SingularFimError);
}

TEST_CASE("bound scales as sqrt(N0) and halves per +6 dB") {
    Rng rng(25);
    Scene scene = random_scene(rng, 2);
    auto coeffs = default_path_coeffs(3, 7);
    PilotConfig pilots = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers);
    double n0 = 1e-4;
    double e1 = crlb_location(scene, coeffs, pilots, n0).rmse;
    double e2 = crlb_location(scene, coeffs, pilots, 4.0 * n0).rmse;
    CHECK(e1 > 0.0);
    CHECK(std::abs(e2 - 2.0 * e1) / e1 < 1e-9);
}

TEST_CASE("perturbation prior only tightens the bound") {
    Rng rng(26);
    Scene scene = random_scene(rng, 1);
    auto coeffs = default_path_coeffs(2, 9);
    PilotConfig pilots = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers);
    double n0 = 1e-3;
    double plain = crlb_location(scene, coeffs, pilots, n0).rmse;

    double prev = 0.0;
    for (double sp : {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0}) {
        PerturbationPrior prior;
        prior.sigma_p = sp;
        double ep = crlb_perturbed(scene, coeffs, pilots, n0, prior).rmse;
        CHECK(ep <= plain * (1.0 + 1e-12));
        CHECK(ep >= prev); // monotone nondecreasing in sigma_p
        prev = ep;
    }
    PerturbationPrior bad;
    bad.sigma_p = 0.0;
    CHECK_THROWS_AS(crlb_perturbed(scene, coeffs, pilots, n0, bad), InvalidConfigError);
}

TEST_CASE("duplicated scatterer makes the location information singular") {
    Scene scene;
    scene.ap = {0.0, 0.0};
    scene.target = {4.0, 3.0};
    scene.scatterers = {{2.0, 5.0}, {2.0, 5.0}};
    scene.array.n_tx = 3;
    scene.array.n_rx = 3;
    scene.validate();
    std::vector<std::complex<double>> coeffs{{1.0, 0.0}, {0.3, 0.1}, {0.3, 0.1}};
    PilotConfig pilots = PilotConfig::all_ones(3, scene.ofdm.n_subcarriers);
    CHECK_THROWS_AS(crlb_location(scene, coeffs, pilots, 1e-4), SingularFimError);
}
