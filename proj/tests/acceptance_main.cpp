// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Heavy end-to-end runs (criteria 10 and 11) come last so the cheap
// property checks report early.
#include "csiloc/binio.hpp"
#include "csiloc/channel.hpp"
#include "csiloc/crlb.hpp"
#include "csiloc/dataset.hpp"
#include "csiloc/experiment.hpp"
#include "csiloc/geometry.hpp"
#include "csiloc/localization.hpp"
#include "csiloc/neural.hpp"
#include "csiloc/rng.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace csiloc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

// Random scene whose points are pairwise separated by >= 0.5 m on BOTH axes,
// bounding every geometric derivative away from degenerate magnitudes.
Scene random_scene(Rng& rng, int n_scatterers) {
    Scene scene;
    scene.array.n_tx = 2;
    scene.array.n_rx = 3;
    scene.ofdm.n_subcarriers = 16;
    for (;;) {
        std::vector<Location> pts;
        for (int i = 0; i < 2 + n_scatterers; ++i)
            pts.push_back({rng.uniform(0.7, 7.3), rng.uniform(0.7, 5.3)});
        bool ok = true;
        for (std::size_t a = 0; a + 1 < pts.size() && ok; ++a)
            for (std::size_t b = a + 1; b < pts.size() && ok; ++b)
                if (std::abs(pts[a].x - pts[b].x) < 0.5 || std::abs(pts[a].y - pts[b].y) < 0.5)
                    ok = false;
        if (!ok) continue;
        scene.ap = pts[0];
        scene.target = pts[1];
        scene.scatterers.assign(pts.begin() + 2, pts.end());
        scene.validate();
        return scene;
    }
}

Eigen::VectorXd eta_of(const std::vector<PathParams>& paths) {
    const int n = static_cast<int>(paths.size());
    Eigen::VectorXd eta(ParamOrdering::dim(n));
    for (int k = 0; k < n; ++k) {
        const PathParams& p = paths[static_cast<std::size_t>(k)];
        eta[ParamOrdering::tau(k)] = p.tau;
        eta[ParamOrdering::theta_t(k)] = p.theta_t;
        eta[ParamOrdering::theta_r(k)] = p.theta_r;
        eta[ParamOrdering::h_re(k)] = p.h.real();
        eta[ParamOrdering::h_im(k)] = p.h.imag();
    }
    return eta;
}

// Perturb the location-parameter coordinate `row` by `step` in place.
void perturb_loc_param(Scene& scene, std::vector<std::complex<double>>& coeffs, int row,
                       double step) {
    const int k = row / 4;
    const int within = row % 4;
    if (k == 0) {
        if (within == 0) scene.target.x += step;
        else if (within == 1) scene.target.y += step;
        else if (within == 2) coeffs[0] += std::complex<double>(step, 0.0);
        else coeffs[0] += std::complex<double>(0.0, step);
    } else {
        Location& s = scene.scatterers[static_cast<std::size_t>(k - 1)];
        if (within == 0) s.x += step;
        else if (within == 1) s.y += step;
        else if (within == 2) coeffs[static_cast<std::size_t>(k)] += std::complex<double>(step, 0.0);
        else coeffs[static_cast<std::size_t>(k)] += std::complex<double>(0.0, step);
    }
}

Eigen::MatrixXd numeric_transform(const Scene& scene,
                                  const std::vector<std::complex<double>>& coeffs) {
    const int n_paths = scene.n_paths();
    const int rows = LocParamOrdering::dim(n_paths);
    const int cols = ParamOrdering::dim(n_paths);
    const double h = 1e-6;
    Eigen::MatrixXd t(rows, cols);
    for (int r = 0; r < rows; ++r) {
        Scene sp = scene, sm = scene;
        std::vector<std::complex<double>> cp = coeffs, cm = coeffs;
        perturb_loc_param(sp, cp, r, h);
        perturb_loc_param(sm, cm, r, -h);
        const Eigen::VectorXd ep = eta_of(path_params_from_geometry(sp, cp));
        const Eigen::VectorXd em = eta_of(path_params_from_geometry(sm, cm));
        for (int c = 0; c < cols; ++c) {
            double diff = ep[c] - em[c];
            const int within = c % ParamOrdering::kPerPath;
            if (within == 1 || within == 2) diff = wrap_angle(diff);
            t(r, c) = diff / (2.0 * h);
        }
    }
    return t;
}

double mde_of(const std::vector<Location>& estimates, const std::vector<Location>& truths) {
    return evaluate(estimates, truths).mean_distance_error;
}

// ---------------------------------------------------------------------------

Outcome criterion_fim_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2026, 10);
    const int n_scenes = 50;
    double worst = 0.0;
    for (int i = 0; i < n_scenes; ++i) {
        Scene scene = random_scene(rng, i % 3);
        const auto coeffs = default_path_coeffs(scene.n_paths(), 100 + static_cast<std::uint64_t>(i));
        const auto paths = path_params_from_geometry(scene, coeffs);
        const PilotConfig pilots = PilotConfig::all_ones(scene.array.n_tx,
                                                         scene.ofdm.n_subcarriers, 2);
        const double n0 = 1e-3;
        const Eigen::MatrixXd ja = fim_eta(paths, scene.array, scene.ofdm, pilots, n0);
        const Eigen::MatrixXd jn = fim_eta_numeric(paths, scene.array, scene.ofdm, pilots, n0);
        worst = std::max(worst, (ja - jn).norm() / ja.norm());
    }
    const double dt = seconds_since(t0);
    const bool pass = worst < 1e-4 && dt < 60.0;
    return {pass, fmt("max rel Frobenius %.2e over %d scenes, %.1f s (limits 1e-4, 60 s)",
                      worst, n_scenes, dt)};
}

Outcome criterion_transform_oracle() {
    Rng rng(2026, 20);
    const int n_scenes = 50;
    double worst = 0.0;
    for (int i = 0; i < n_scenes; ++i) {
        Scene scene = random_scene(rng, i % 3);
        const auto coeffs = default_path_coeffs(scene.n_paths(), 200 + static_cast<std::uint64_t>(i));
        const Eigen::MatrixXd ta = transform_matrix(scene);
        const Eigen::MatrixXd tn = numeric_transform(scene, coeffs);
        for (int r = 0; r < ta.rows(); ++r)
            for (int c = 0; c < ta.cols(); ++c) {
                const double denom = std::max(std::abs(ta(r, c)), std::abs(tn(r, c)));
                if (denom == 0.0) continue; // structural zero on both sides
                worst = std::max(worst, std::abs(ta(r, c) - tn(r, c)) / denom);
            }
    }
    return {worst < 1e-6, fmt("max entrywise rel %.2e over %d scenes (limit 1e-6)",
                              worst, n_scenes)};
}

Outcome criterion_crlb_scaling() {
    Scene scene;
    scene.ap = {0.5, 0.5};
    scene.target = {4.2, 3.1};
    scene.scatterers = {{2.0, 5.0}, {6.0, 2.0}};
    scene.array.n_tx = 2;
    scene.array.n_rx = 3;
    scene.ofdm.n_subcarriers = 16;
    const auto coeffs = default_path_coeffs(scene.n_paths(), 7);
    const PilotConfig pilots = PilotConfig::all_ones(2, 16, 1);
    const double n0 = 1e-3;
    const double eps0 = crlb_location(scene, coeffs, pilots, n0).rmse;

    double worst = 0.0;
    for (double f : {2.0, 4.0, 8.0, 16.0}) {
        const double eps_f = crlb_location(scene, coeffs, pilots, f * n0).rmse;
        worst = std::max(worst, std::abs(eps_f - std::sqrt(f) * eps0) / (std::sqrt(f) * eps0));
    }
    // +6 dB SNR = noise power / 4 at fixed signal -> epsilon halves.
    const double eps_6db = crlb_location(scene, coeffs, pilots, n0 / 4.0).rmse;
    worst = std::max(worst, std::abs(eps_6db - 0.5 * eps0) / (0.5 * eps0));
    return {worst < 1e-9, fmt("max rel deviation from sqrt(N0) scaling %.2e (limit 1e-9)", worst)};
}

Outcome criterion_perturbed_ordering() {
    Scene scene;
    scene.ap = {0.5, 0.5};
    scene.target = {4.2, 3.1};
    scene.scatterers = {{2.0, 5.0}, {6.0, 2.0}};
    scene.array.n_tx = 2;
    scene.array.n_rx = 3;
    scene.ofdm.n_subcarriers = 16;
    const auto coeffs = default_path_coeffs(scene.n_paths(), 7);
    const PilotConfig pilots = PilotConfig::all_ones(2, 16, 1);

    // Rescale the noise so the unperturbed bound sits near 0.04 m; the prior
    // then binds visibly at the small-sigma end of the sweep.
    double n0 = 1e-3;
    n0 *= std::pow(0.04 / crlb_location(scene, coeffs, pilots, n0).rmse, 2.0);
    const double eps = crlb_location(scene, coeffs, pilots, n0).rmse;

    const std::vector<double> sigmas = {1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    std::vector<double> eps_p;
    for (double s : sigmas)
        eps_p.push_back(crlb_perturbed(scene, coeffs, pilots, n0, {s}).rmse);

    bool ordered = true, monotone = true;
    for (std::size_t i = 0; i < eps_p.size(); ++i) {
        if (eps_p[i] > eps * (1.0 + 1e-12)) ordered = false;
        if (i > 0 && eps_p[i] < eps_p[i - 1] * (1.0 - 1e-12)) monotone = false;
    }
    const double gap = eps - eps_p.back();
    const bool pass = ordered && monotone && gap < 1e-6 * eps;
    return {pass, fmt("eps %.3e m, eps_p %.3e..%.3e, final gap %.2e (< %.2e), %s",
                      eps, eps_p.front(), eps_p.back(), gap, 1e-6 * eps,
                      ordered && monotone ? "ordered+monotone" : "ORDER VIOLATION")};
}

Outcome criterion_gradient_checks() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(2026, 50);
    double worst = 0.0;
    bool all_pass = true;
    for (Table1Kind kind :
         {Table1Kind::mlp_classifier, Table1Kind::mlp_regressor, Table1Kind::cnn_regressor}) {
        Table1Build build = build_table1(kind, 11);
        const int in_dim = build.net.input_shape().flat();
        const int out_dim = build.net.output_shape().flat();
        const int batch = 3;
        Eigen::MatrixXd x(batch, in_dim);
        for (int r = 0; r < batch; ++r)
            for (int c = 0; c < in_dim; ++c) x(r, c) = rng.uniform(-1.0, 1.0);
        Eigen::MatrixXd t;
        TrainConfig::Loss loss;
        if (kind == Table1Kind::mlp_classifier) {
            t = Eigen::MatrixXd::Zero(batch, out_dim);
            for (int r = 0; r < batch; ++r) t(r, r % out_dim) = 1.0;
            loss = TrainConfig::Loss::cross_entropy;
        } else {
            t.resize(batch, out_dim);
            for (int r = 0; r < batch; ++r)
                for (int c = 0; c < out_dim; ++c) t(r, c) = rng.uniform(-1.0, 1.0);
            loss = TrainConfig::Loss::squared_l2;
        }
        GradientCheckReport report = gradient_check(build.net, x, t, loss);
        worst = std::max(worst, report.max_rel_error);
        all_pass = all_pass && report.pass;
    }
    const double dt = seconds_since(t0);
    const bool pass = all_pass && worst < 1e-4 && dt < 120.0;
    return {pass, fmt("3 networks, all layer kinds; max rel %.2e, %.1f s (limits 1e-4, 120 s)",
                      worst, dt)};
}

Outcome criterion_geometry_roundtrip() {
    Rng rng(2026, 60);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        Scene scene = random_scene(rng, 0);
        const auto paths =
            path_params_from_geometry(scene, std::vector<std::complex<double>>{{1.0, 0.0}});
        const Location back = location_from_los(scene.ap, paths[0].tau, paths[0].theta_t);
        worst = std::max(worst, distance(back, scene.target));
    }
    return {worst <= 1e-9, fmt("max round-trip error %.2e m over 100 scenes (limit 1e-9)", worst)};
}

Outcome criterion_phase_calibration() {
    Scene scene;
    scene.ap = {0.1, 0.1};
    scene.target = {4.0, 3.0};
    scene.array.n_tx = 1;
    scene.array.n_rx = 3;
    const auto paths = path_params_from_geometry(scene, std::vector<std::complex<double>>{{1.0, 0.0}});

    MeasurementModel clean;
    clean.noise_n0 = 0.0;
    clean.delta_max = 0.0;
    clean.z_max = 0.0;
    Rng rng_clean(777, 0);
    const CsiRecord ref = calibrate_phase(
        simulate_csi(scene, paths, clean, 1, rng_clean).front(), scene.ofdm.fft_size);

    MeasurementModel impaired = clean;
    impaired.delta_max = 2.0;
    impaired.z_max = kPi;

    auto mean_phase_slope = [&](const CsiRecord& rec) {
        const int n = rec.n_subcarriers;
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (int i = 0; i < n; ++i) {
            double m = 0.0;
            for (int rx = 0; rx < rec.n_rx; ++rx) m += rec.phase_cal(i, rx);
            m /= rec.n_rx;
            sx += i;
            sy += m;
            sxx += static_cast<double>(i) * i;
            sxy += i * m;
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };

    double worst_slope = 0.0, worst_delta = 0.0;
    for (int trial = 1; trial <= 50; ++trial) {
        Rng probe(777, static_cast<std::uint64_t>(trial));
        Rng sim(777, static_cast<std::uint64_t>(trial));
        const double delta_inj = probe.uniform(-impaired.delta_max, impaired.delta_max);
        const CsiRecord rec = calibrate_phase(simulate_csi(scene, paths, impaired, 1, sim).front(),
                                              scene.ofdm.fft_size);
        worst_slope = std::max(worst_slope, std::abs(mean_phase_slope(rec)));
        worst_delta = std::max(worst_delta, std::abs((rec.delta_hat - ref.delta_hat) - delta_inj));
    }
    const bool pass = worst_slope < 1e-6 && worst_delta < 1e-6;
    return {pass, fmt("max residual slope %.2e rad/sc, max delta_hat error %.2e samples "
                      "(limits 1e-6)", worst_slope, worst_delta)};
}

Outcome criterion_sic_recovery() {
    Scene physical;
    physical.ap = {0.5, 0.5};
    physical.target = {4.0, 2.0};
    physical.scatterers = {{1.0, 5.5}};
    physical.array.n_tx = 1;
    physical.array.n_rx = 3;

    // Uplink snapshot at the AP: swap the link ends so theta_r is the arrival
    // angle at the physical AP. LOS coefficient 1, NLOS exactly 10 dB weaker.
    Scene swapped = physical;
    std::swap(swapped.ap, swapped.target);
    const std::vector<std::complex<double>> coeffs = {
        {1.0, 0.0}, std::polar(std::sqrt(0.1), 0.7)};
    const auto paths = path_params_from_geometry(swapped, coeffs);
    Eigen::MatrixXcd snapshot(physical.array.n_rx, physical.ofdm.n_subcarriers);
    for (int i = 0; i < physical.ofdm.n_subcarriers; ++i)
        snapshot.col(i) = channel_matrix(paths, physical.array, physical.ofdm, i).col(0);

    SicConfig config;
    config.has_area = true;
    config.area = Rect{0.0, 0.0, 8.0, 6.0};
    const SicResult result =
        sic_localize(snapshot, physical.array, physical.ofdm, physical.ap, config);

    const double err = distance(result.prediction.location, physical.target);
    const double residual_frac = result.residual_power / result.initial_power;
    const bool pass = err <= 0.15 && residual_frac < 1e-9 && result.paths.size() >= 2;
    return {pass, fmt("location error %.3f m (limit 0.15), residual %.2e of input (limit 1e-9), "
                      "%zu paths", err, residual_frac, result.paths.size())};
}

Outcome criterion_outlier_fixture() {
    PredictionGroup group;
    for (int i = 0; i < 9; ++i) group.members.push_back({{0.0, 0.0}, PredictionSource::knn, {}});
    group.members.push_back({{9.0, 9.0}, PredictionSource::knn, {}});

    const OutlierResult res = remove_outliers(group, 2.0);
    const Location truth{0.0, 0.0};
    const double err_before = distance(fuse_average(group.members), truth);
    const double err_after = distance(res.fused, truth);

    const bool removed_exact = res.removed_indices == std::vector<int>{9};
    const bool reduced = err_after < err_before;

    // Single-axis deviation: the y std is zero, so the AND rule keeps the point.
    PredictionGroup axis;
    for (int i = 0; i < 9; ++i) axis.members.push_back({{0.0, 0.0}, PredictionSource::knn, {}});
    axis.members.push_back({{9.0, 0.0}, PredictionSource::knn, {}});
    const bool axis_kept = remove_outliers(axis, 2.0).removed_indices.empty();

    const bool pass = removed_exact && reduced && axis_kept;
    return {pass, fmt("removed %s, fused error %.3f -> %.3f m, single-axis point %s",
                      removed_exact ? "{9}" : "WRONG SET", err_before, err_after,
                      axis_kept ? "kept" : "REMOVED")};
}

Outcome criterion_end_to_end() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg; // defaults are the reference fixture
    const ExperimentDatasets data =
        build_experiment_datasets(cfg, cfg.ap, cfg.grid_spacing, false);
    const std::vector<Location>& truths = data.test.grid.rp_locations;

    const double mde_knn = mde_of(localize_test_points(cfg, "knn", data.train, data.test, nullptr),
                                  truths);
    Network classifier = train_network(cfg, "mlp_classifier", data.train, nullptr);
    const double mde_cls = mde_of(
        localize_test_points(cfg, "classifier", data.train, data.test, &classifier), truths);
    Network regressor = train_network(cfg, "mlp_regressor", data.train, nullptr);
    const double mde_reg = mde_of(
        localize_test_points(cfg, "regressor", data.train, data.test, &regressor), truths);

    const double dt = seconds_since(t0);
    const bool pass = mde_reg <= 0.9 * mde_cls && mde_reg < mde_knn && mde_cls < mde_knn &&
                      dt < 900.0;
    return {pass, fmt("MDE knn %.3f, classifier %.3f, regressor %.3f m "
                      "(need reg <= 0.9*cls and both < knn), %.0f s (limit 900)",
                      mde_knn, mde_cls, mde_reg, dt)};
}

Outcome criterion_augmentation_gain() {
    const auto t0 = std::chrono::steady_clock::now();
    double sum_plain = 0.0, sum_aug = 0.0;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        ExperimentConfig cfg;
        cfg.seed = seed;
        cfg.sigma_p = 0.1;
        cfg.copies_per_sample = 1;
        // The augmentation study runs at its own frozen training budget.
        // Perturbed copies pay off when the plain run is step-constrained and
        // still memorizing per-RP clusters; the flagship defaults train past
        // that regime, where the copies' label bias dominates instead.
        cfg.batch_size = 64;
        cfg.epochs = 100;

        const ExperimentDatasets plain =
            build_experiment_datasets(cfg, cfg.ap, cfg.grid_spacing, false);
        const ExperimentDatasets aug =
            build_experiment_datasets(cfg, cfg.ap, cfg.grid_spacing, true);
        const std::vector<Location>& truths = plain.test.grid.rp_locations;

        Network net_plain = train_network(cfg, "mlp_regressor", plain.train, nullptr);
        sum_plain += mde_of(
            localize_test_points(cfg, "regressor", plain.train, plain.test, &net_plain), truths);
        Network net_aug = train_network(cfg, "mlp_regressor", aug.train, nullptr);
        sum_aug += mde_of(
            localize_test_points(cfg, "regressor", aug.train, aug.test, &net_aug), truths);
    }
    const double mean_plain = sum_plain / 3.0;
    const double mean_aug = sum_aug / 3.0;
    const double improvement = (mean_plain - mean_aug) / mean_plain;
    const double dt = seconds_since(t0);
    const bool pass = mean_aug <= mean_plain && improvement >= 0.05;
    return {pass, fmt("mean MDE %.3f -> %.3f m over seeds {1,2,3}, improvement %.1f%% "
                      "(need >= 5%%), %.0f s", mean_plain, mean_aug, 100.0 * improvement, dt)};
}

std::map<std::string, std::vector<std::uint8_t>> snapshot_dir(const fs::path& root) {
    std::map<std::string, std::vector<std::uint8_t>> snap;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file())
            snap[fs::relative(entry.path(), root).string()] =
                read_file_bytes(entry.path().string());
    return snap;
}

Outcome criterion_cli_determinism() {
    const char* cli = std::getenv("CSILOC_CLI");
    if (cli == nullptr || *cli == '\0')
        return {false, "CSILOC_CLI environment variable not set (should point at the csiloc binary)"};

    const fs::path root = fs::temp_directory_path() / "csiloc_accept_cli";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path out = root / "out";
    const fs::path cfg_path = root / "cfg.json";

    std::ostringstream cfg;
    cfg << "{\n"
        << "  \"out_dir\": \"" << out.string() << "\",\n"
        << "  \"seed\": 11,\n"
        << "  \"grid_spacing\": 2.0,\n"
        << "  \"dataset\": {\"windows_per_rp\": 2, \"window_size\": 3,"
        << " \"n_test_points\": 3, \"test_windows_per_tp\": 2},\n"
        << "  \"network\": {\"kind\": \"mlp_regressor\", \"learning_rate\": 0.01,"
        << " \"batch_size\": 8, \"epochs\": 1},\n"
        << "  \"eval\": {\"methods\": [\"oracle\", \"knn\", \"regressor\"], \"knn_k\": 3},\n"
        << "  \"crlb\": {\"snr_db_list\": [10, 20], \"sigma_p_list\": [0.1, 1.0]},\n"
        << "  \"sweep\": {\"methods\": [\"knn\"], \"grid_spacings\": [2.0],"
        << " \"ap_counts\": [1, 2], \"augmentation\": [0], \"jobs\": 1}\n"
        << "}\n";
    write_file_text(cfg_path.string(), cfg.str());

    const std::vector<std::string> commands = {"simulate", "train", "eval", "crlb", "sweep"};
    auto run_all = [&]() -> bool {
        for (const std::string& sub : commands) {
            const std::string cmd = std::string("\"") + cli + "\" " + sub + " --config \"" +
                                    cfg_path.string() + "\" >/dev/null 2>&1";
            if (std::system(cmd.c_str()) != 0) return false;
        }
        return true;
    };

    if (!run_all()) return {false, "first CLI pass returned a nonzero exit code"};
    const auto first = snapshot_dir(out);
    fs::remove_all(out);
    if (!run_all()) return {false, "second CLI pass returned a nonzero exit code"};
    const auto second = snapshot_dir(out);

    if (first.size() != second.size() || first.empty())
        return {false, fmt("output file sets differ (%zu vs %zu files)", first.size(),
                           second.size())};
    for (const auto& [name, bytes] : first) {
        auto it = second.find(name);
        if (it == second.end()) return {false, "file missing on rerun: " + name};
        if (it->second != bytes) return {false, "bytes differ on rerun: " + name};
    }
    fs::remove_all(root);
    return {true, fmt("%zu output files byte-identical across reruns of %zu commands",
                      first.size(), commands.size())};
}

} // namespace

int main() {
    struct Criterion {
        int index;
        const char* name;
        Outcome (*run)();
    };
    const std::vector<Criterion> criteria = {
        {1, "FIM analytic vs finite-difference oracle", criterion_fim_oracle},
        {2, "transform matrix vs numeric Jacobian", criterion_transform_oracle},
        {3, "CRLB sqrt(N0) scaling and 6 dB halving", criterion_crlb_scaling},
        {4, "perturbed CRLB ordering and convergence", criterion_perturbed_ordering},
        {5, "gradient checks on all reference networks", criterion_gradient_checks},
        {6, "LOS geometry round trip", criterion_geometry_roundtrip},
        {7, "phase calibration removes injected impairments", criterion_phase_calibration},
        {8, "SIC recovers the two-path scene", criterion_sic_recovery},
        {9, "outlier removal fixtures", criterion_outlier_fixture},
        {10, "regression beats classification end to end", criterion_end_to_end},
        {11, "augmentation improves mean MDE", criterion_augmentation_gain},
        {12, "CLI reruns are byte-identical", criterion_cli_determinism},
    };

    int passed = 0;
    for (const Criterion& c : criteria) {
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        std::printf("[%s] criterion %2d: %s — %s\n", outcome.pass ? "PASS" : "FAIL", c.index,
                    c.name, outcome.detail.c_str());
        std::fflush(stdout);
        if (outcome.pass) ++passed;
    }
    std::printf("acceptance: %d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
