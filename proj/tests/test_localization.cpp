#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csiloc/channel.hpp"
#include "csiloc/localization.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace csiloc;

namespace {

FingerprintDataset line_dataset() {
    FingerprintDataset ds;
    ds.n_subcarriers = 1;
    ds.n_rx = 1;
    ds.window_size = 1;
    auto add = [&](double f, Location label) {
        FeatureSample s;
        s.mlp_vector = {f, 0.0};
        s.cnn_tensor = {f, 0.0};
        s.label = label;
        ds.samples.push_back(s);
    };
    add(0.0, {0.0, 0.0});
    add(1.0, {1.0, 0.0});
    add(4.0, {2.0, 2.0});
    ds.grid.rp_locations = {{0.0, 0.0}, {1.0, 0.0}, {2.0, 2.0}};
    ds.grid.area = Rect{0.0, 0.0, 4.0, 4.0};
    return ds;
}

// AP-side uplink snapshot for a scene whose receive end is the AP array.
Eigen::MatrixXcd uplink_snapshot(const Scene& swapped,
                                 const std::vector<std::complex<double>>& coeffs) {
    auto paths = path_params_from_geometry(swapped, coeffs);
    Eigen::MatrixXcd snap(swapped.array.n_rx, swapped.ofdm.n_subcarriers);
    for (int i = 0; i < swapped.ofdm.n_subcarriers; ++i)
        snap.col(i) = channel_matrix(paths, swapped.array, swapped.ofdm, i).col(0);
    return snap;
}

} // namespace

TEST_CASE("knn: nearest neighbours, centroids, tie breaking") {
    FingerprintDataset ds = line_dataset();

    Prediction p1 = knn_localize(ds, {0.9, 0.0}, 1);
    CHECK(p1.location == Location{1.0, 0.0});
    CHECK(p1.source == PredictionSource::knn);

    Prediction p2 = knn_localize(ds, {0.9, 0.0}, 2);
    CHECK(p2.location.x == doctest::Approx(0.5));
    CHECK(p2.location.y == doctest::Approx(0.0));

    // Equal distances: lower sample index wins.
    Prediction tie = knn_localize(ds, {0.5, 0.0}, 1);
    CHECK(tie.location == Location{0.0, 0.0});

    CHECK_THROWS_AS(knn_localize(ds, {0.0, 0.0}, 0), InvalidConfigError);
    CHECK_THROWS_AS(knn_localize(ds, {0.0, 0.0}, 4), InvalidConfigError);
    CHECK_THROWS_AS(knn_localize(ds, {0.0}, 1), InvalidConfigError);
}

TEST_CASE("classification fuses the RP posterior into a location") {
    RpGrid grid;
    grid.rp_locations = {{0.0, 0.0}, {1.2, 0.0}};
    grid.area = Rect{0.0, 0.0, 8.0, 6.0};

    Network net({1, 1, 2}, {LayerSpec::fc(2), LayerSpec::softmax()}, 1);
    for (std::size_t p = 0; p < net.layer(0).n_params(); ++p) net.layer(0).set_param(p, 0.0);

    Eigen::MatrixXd windows = Eigen::MatrixXd::Random(3, 2);
    auto per = per_window_classify(net, windows, grid);
    REQUIRE(per.size() == 3);
    for (const auto& p : per) {
        REQUIRE(p.likelihoods.size() == 2);
        CHECK(p.likelihoods[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(p.location.x == doctest::Approx(0.6).epsilon(1e-12));
        CHECK(p.location.y == doctest::Approx(0.0));
        CHECK(p.source == PredictionSource::classifier);
    }
    Prediction fused = classify_localize(net, windows, grid);
    CHECK(fused.location.x == doctest::Approx(0.6).epsilon(1e-12));
    REQUIRE(fused.likelihoods.size() == 2);
    CHECK(fused.likelihoods[1] == doctest::Approx(0.5).epsilon(1e-12));

    // Head present but wrong class count.
    RpGrid wrong = grid;
    wrong.rp_locations.push_back({2.4, 0.0});
    CHECK_THROWS_AS(classify_localize(net, windows, wrong), InvalidConfigError);

    Network no_softmax({1, 1, 2}, {LayerSpec::fc(2), LayerSpec::linear()}, 1);
    CHECK_THROWS_AS(classify_localize(no_softmax, windows, grid), InvalidConfigError);
}

TEST_CASE("regression clamps the fused estimate to the area") {
    Network net({1, 1, 2}, {LayerSpec::fc(2), LayerSpec::linear()}, 1);
    for (std::size_t p = 0; p < 4; ++p) net.layer(0).set_param(p, 0.0);
    net.layer(0).set_param(4, 10.0); // bias x
    net.layer(0).set_param(5, -3.0); // bias y

    Eigen::MatrixXd windows = Eigen::MatrixXd::Random(4, 2);
    auto per = per_window_regress(net, windows);
    REQUIRE(per.size() == 4);
    CHECK(per[0].location == Location{10.0, -3.0}); // raw, unclamped
    CHECK(per[0].source == PredictionSource::regressor);

    Rect area{0.0, 0.0, 8.0, 6.0};
    Prediction fused = regress_localize(net, windows, area);
    CHECK(fused.location == Location{8.0, 0.0});

    Network softmax_head({1, 1, 2}, {LayerSpec::fc(2), LayerSpec::softmax()}, 1);
    CHECK_THROWS_AS(regress_localize(softmax_head, windows, area), InvalidConfigError);
}

TEST_CASE("fuse_average is the coordinatewise mean, order independent") {
    std::vector<Prediction> preds(3);
    preds[0].location = {0.0, 3.0};
    preds[1].location = {3.0, 0.0};
    preds[2].location = {6.0, 3.0};
    Location f = fuse_average(preds);
    CHECK(f == Location{3.0, 2.0});
    std::swap(preds[0], preds[2]);
    CHECK(fuse_average(preds) == f);
    CHECK_THROWS_AS(fuse_average({}), InvalidConfigError);
}

TEST_CASE("outlier removal drops two-axis outliers only") {
    PredictionGroup group;
    for (int i = 0; i < 9; ++i) group.members.push_back({{0.0, 0.0}, PredictionSource::knn, {}});
    group.members.push_back({{9.0, 9.0}, PredictionSource::knn, {}});

    OutlierResult r = remove_outliers(group, 2.0);
    REQUIRE(r.removed_indices.size() == 1);
    CHECK(r.removed_indices[0] == 9);
    CHECK(r.kept.group_size() == 9);
    CHECK(r.fused == Location{0.0, 0.0});

    // Deviating on one axis only: kept (the rule needs both axes).
    PredictionGroup one_axis;
    for (int i = 0; i < 9; ++i) one_axis.members.push_back({{0.0, 0.0}, PredictionSource::knn, {}});
    one_axis.members.push_back({{9.0, 0.0}, PredictionSource::knn, {}});
    OutlierResult r2 = remove_outliers(one_axis, 2.0);
    CHECK(r2.removed_indices.empty());
    CHECK(r2.kept.group_size() == 10);

    // Everything beyond the threshold: error rather than an empty fusion.
    PredictionGroup all_out;
    all_out.members.push_back({{0.0, 0.0}, PredictionSource::knn, {}});
    all_out.members.push_back({{1.0, 1.0}, PredictionSource::knn, {}});
    CHECK_THROWS_AS(remove_outliers(all_out, 0.5), std::runtime_error);

    CHECK_THROWS_AS(remove_outliers(PredictionGroup{}, 2.0), InvalidConfigError);
}

TEST_CASE("evaluate: errors, mean, lower median, CDF") {
    std::vector<Location> pred{{0.0, 0.0}, {3.0, 4.0}, {0.0, 0.0}};
    std::vector<Location> truth{{3.0, 4.0}, {3.0, 4.0}, {0.0, 0.0}};
    EvalReport r = evaluate(pred, truth);
    REQUIRE(r.errors.size() == 3);
    CHECK(r.errors[0] == doctest::Approx(5.0));
    CHECK(r.mean_distance_error == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(r.median_distance_error == 0.0);
    REQUIRE(r.cdf.size() == 3);
    CHECK(r.cdf[0].first == 0.0);
    CHECK(r.cdf[0].second == doctest::Approx(1.0 / 3.0));
    CHECK(r.cdf[2].first == doctest::Approx(5.0));
    CHECK(r.cdf[2].second == doctest::Approx(1.0));

    // Even count: lower midpoint.
    EvalReport even = evaluate({{0.0, 0.0}, {0.0, 0.0}}, {{1.0, 0.0}, {2.0, 0.0}});
    CHECK(even.median_distance_error == doctest::Approx(1.0));

    // Translation invariance.
    std::vector<Location> pred_t = pred, truth_t = truth;
    for (auto& p : pred_t) p = p + Location{10.0, -4.0};
    for (auto& t : truth_t) t = t + Location{10.0, -4.0};
    EvalReport rt = evaluate(pred_t, truth_t);
    CHECK(rt.mean_distance_error == doctest::Approx(r.mean_distance_error).epsilon(1e-12));

    CHECK_THROWS_AS(evaluate({}, {}), InvalidConfigError);
    CHECK_THROWS_AS(evaluate(pred, {{0.0, 0.0}}), InvalidConfigError);
}

TEST_CASE("evaluation report serialization") {
    EvalReport r = evaluate({{0.0, 0.0}, {1.0, 0.0}}, {{0.0, 3.0}, {1.0, 0.0}});
    auto j = nlohmann::json::parse(eval_report_json(r));
    CHECK(j["n_samples"] == 2);
    CHECK(j["mean_distance_error"].get<double>() == doctest::Approx(1.5));
    CHECK(j["median_distance_error"].get<double>() == doctest::Approx(0.0));
    REQUIRE(j["cdf"].size() == 2);
    CHECK(j["cdf"][1][0].get<double>() == doctest::Approx(3.0));
    CHECK(j["cdf"][1][1].get<double>() == doctest::Approx(1.0));

    auto path = std::filesystem::temp_directory_path() / "csiloc_report.json";
    save_eval_report_json(r, path.string());
    auto loaded = nlohmann::json::parse(std::ifstream(path));
    CHECK(loaded["mean_distance_error"] == j["mean_distance_error"]);
    std::filesystem::remove(path);

    auto csv_path = std::filesystem::temp_directory_path() / "csiloc_errors.csv";
    export_errors_csv(r, csv_path.string());
    std::ifstream in(csv_path);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "index,error");
    int rows = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
    std::filesystem::remove(csv_path);
}

TEST_CASE("SIC recovers a clean LOS path and its source location") {
    // Uplink view: the array sits at the physical AP, the transmitter at the target.
    Location ap_pos{0.5, 0.5};
    Location target_pos{3.5, 1.5};
    Scene swapped;
    swapped.ap = target_pos;
    swapped.target = ap_pos;
    swapped.validate();

    Eigen::MatrixXcd snap = uplink_snapshot(swapped, {std::complex<double>(1.0, 0.0)});
    SicConfig cfg;
    cfg.has_area = true;
    cfg.area = Rect{0.0, 0.0, 8.0, 6.0};
    SicResult res = sic_localize(snap, swapped.array, swapped.ofdm, ap_pos, cfg);

    REQUIRE(!res.paths.empty());
    CHECK(distance(res.prediction.location, target_pos) < 0.01);
    CHECK(res.prediction.source == PredictionSource::sic);
    CHECK(res.residual_power < 1e-9 * res.initial_power);
    CHECK(res.paths[0].tau ==
          doctest::Approx(distance(ap_pos, target_pos) / kSpeedOfLight).epsilon(1e-3));

    // Deterministic: same inputs, same outputs.
    SicResult res2 = sic_localize(snap, swapped.array, swapped.ofdm, ap_pos, cfg);
    CHECK(res2.prediction.location == res.prediction.location);
    CHECK(res2.paths.size() == res.paths.size());
}

TEST_CASE("SIC separates two paths and picks the earliest as LOS") {
    Location ap_pos{0.5, 0.5};
    Location target_pos{4.0, 2.0};
    Scene swapped;
    swapped.ap = target_pos;
    swapped.target = ap_pos;
    swapped.scatterers = {{1.0, 5.5}};
    swapped.validate();

    // NLOS at about -10 dB relative to LOS.
    std::vector<std::complex<double>> coeffs{{1.0, 0.0}, {0.25, 0.2}};
    Eigen::MatrixXcd snap = uplink_snapshot(swapped, coeffs);
    SicConfig cfg;
    cfg.has_area = true;
    cfg.area = Rect{0.0, 0.0, 8.0, 6.0};
    SicResult res = sic_localize(snap, swapped.array, swapped.ofdm, ap_pos, cfg);

    REQUIRE(res.paths.size() >= 2);
    CHECK(distance(res.prediction.location, target_pos) < 0.15);
    CHECK(res.residual_power < 1e-9 * res.initial_power);
    REQUIRE(!res.residual_history.empty());
    for (std::size_t i = 1; i < res.residual_history.size(); ++i)
        CHECK(res.residual_history[i] <= res.residual_history[i - 1] * (1.0 + 1e-9));
}

TEST_CASE("SIC rejects empty input and reports missing paths") {
    SicConfig cfg;
    ArrayConfig array;
    OfdmConfig ofdm;
    Eigen::MatrixXcd zero = Eigen::MatrixXcd::Zero(array.n_rx, ofdm.n_subcarriers);
    CHECK_THROWS_AS(sic_localize(zero, array, ofdm, {0.0, 0.0}, cfg), NoPathFoundError);

    Eigen::MatrixXcd wrong = Eigen::MatrixXcd::Zero(array.n_rx, 5);
    CHECK_THROWS_AS(sic_localize(wrong, array, ofdm, {0.0, 0.0}, cfg), InvalidConfigError);
}
