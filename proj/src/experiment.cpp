#include "csiloc/experiment.hpp"

#include "csiloc/binio.hpp"
#include "csiloc/channel.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace csiloc {

using nlohmann::json;

namespace {

void require_keys(const json& j, const char* what, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InvalidConfigError(std::string(what) + " must be a JSON object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : allowed)
            if (item.key() == key) ok = true;
        if (!ok) throw InvalidConfigError(std::string("unknown key \"") + item.key() + "\" in " + what);
    }
}

Location location_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw InvalidConfigError(std::string(what) + " must be a [x, y] array");
    return {j[0].get<double>(), j[1].get<double>()};
}

json location_to_json(const Location& p) { return json::array({p.x, p.y}); }

void parse_array_config(const json& j, ArrayConfig& a) {
    require_keys(j, "array", {"n_tx", "n_rx", "spacing_d"});
    if (j.contains("n_tx")) a.n_tx = j["n_tx"].get<int>();
    if (j.contains("n_rx")) a.n_rx = j["n_rx"].get<int>();
    if (j.contains("spacing_d")) a.spacing_d = j["spacing_d"].get<double>();
}

void parse_ofdm_config(const json& j, OfdmConfig& o) {
    require_keys(j, "ofdm",
                 {"carrier_freq", "n_subcarriers", "fft_size", "sample_period", "subcarrier_spacing"});
    if (j.contains("carrier_freq")) o.carrier_freq = j["carrier_freq"].get<double>();
    if (j.contains("n_subcarriers")) o.n_subcarriers = j["n_subcarriers"].get<int>();
    if (j.contains("fft_size")) o.fft_size = j["fft_size"].get<int>();
    if (j.contains("sample_period")) o.sample_period = j["sample_period"].get<double>();
    if (j.contains("subcarrier_spacing")) o.subcarrier_spacing = j["subcarrier_spacing"].get<double>();
}

const std::set<std::string> kEvalMethods{"knn", "classifier", "regressor", "oracle"};
const std::set<std::string> kNetworkKinds{"mlp_classifier", "mlp_regressor", "cnn_regressor"};

void check_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidConfigError(std::string(what) + " must be positive and finite, got " +
                                 format_g17(v));
}

void check_count(int v, int lo, const char* what) {
    if (v < lo)
        throw InvalidConfigError(std::string(what) + " must be >= " + std::to_string(lo) + ", got " +
                                 std::to_string(v));
}

void check_in_area(const Location& p, const Rect& area, const char* what) {
    if (!area.contains(p))
        throw InvalidConfigError(std::string(what) + " (" + format_g17(p.x) + ", " + format_g17(p.y) +
                                 ") lies outside the deployment area [" + format_g17(area.x_min) +
                                 ", " + format_g17(area.x_max) + "] x [" + format_g17(area.y_min) +
                                 ", " + format_g17(area.y_max) + "]");
}

std::filesystem::path out_path(const ExperimentConfig& config, const std::string& name) {
    return std::filesystem::path(config.out_dir) / name;
}

void ensure_out_dir(const ExperimentConfig& config) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.out_dir + ": " + ec.message());
}

void write_manifest(const ExperimentConfig& config, const std::string& command,
                    const std::vector<std::string>& outputs, const json& extra = json::object()) {
    json j;
    j["command"] = command;
    j["seed"] = config.seed;
    j["config_hash"] = config_hash(config);
    j["outputs"] = outputs;
    j.update(extra);
    write_file_text(out_path(config, command + "_manifest.json").string(), j.dump(2) + "\n");
}

std::string model_file_name(const std::string& kind) { return "model_" + kind + ".nn"; }

std::string regressor_kind(const ExperimentConfig& config) {
    return config.network_kind == "cnn_regressor" ? "cnn_regressor" : "mlp_regressor";
}

// Groups test samples by their test-point index, preserving sample order.
std::vector<std::vector<int>> group_by_test_point(const FingerprintDataset& test) {
    std::vector<std::vector<int>> groups(test.grid.n_rps());
    for (int i = 0; i < test.n_samples(); ++i) {
        int tp = test.samples[static_cast<std::size_t>(i)].rp_index;
        if (tp < 0 || tp >= test.grid.n_rps())
            throw InvalidConfigError("test sample " + std::to_string(i) +
                                     " has group index outside the test grid");
        groups[static_cast<std::size_t>(tp)].push_back(i);
    }
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (groups[g].empty())
            throw InvalidConfigError("test point " + std::to_string(g) + " has no samples");
    return groups;
}

// Fuses per-window estimates for one test point, optionally removing outliers
// in chunks of group_size first.
Location fuse_windows(const ExperimentConfig& config, const std::vector<Prediction>& windows) {
    if (!config.outlier_enabled) return fuse_average(windows);
    std::vector<Location> chunk_means;
    std::size_t start = 0;
    while (start < windows.size()) {
        std::size_t len = std::min<std::size_t>(static_cast<std::size_t>(config.outlier_group_size),
                                                windows.size() - start);
        PredictionGroup group;
        group.members.assign(windows.begin() + static_cast<std::ptrdiff_t>(start),
                             windows.begin() + static_cast<std::ptrdiff_t>(start + len));
        if (group.members.size() < 2) {
            chunk_means.push_back(group.members.front().location);
        } else {
            chunk_means.push_back(remove_outliers(group, config.outlier_delta_th).fused);
        }
        start += len;
    }
    Location sum{0.0, 0.0};
    for (const auto& m : chunk_means) sum = sum + m;
    return (1.0 / static_cast<double>(chunk_means.size())) * sum;
}

void write_csv(const ExperimentConfig& config, const std::string& name, const std::string& body) {
    write_file_text(out_path(config, name).string(), body);
}

} // namespace

void ExperimentConfig::validate() const {
    if (!(area.x_max > area.x_min) || !(area.y_max > area.y_min))
        throw InvalidConfigError("area must have positive width and height");
    check_positive(grid_spacing, "grid_spacing");
    check_in_area(ap, area, "ap");
    check_in_area(ap2, area, "ap2");
    for (std::size_t k = 0; k < scatterers.size(); ++k)
        check_in_area(scatterers[k], area, ("scatterers[" + std::to_string(k) + "]").c_str());
    array.validate();
    ofdm.validate();
    if (!std::isfinite(snr_db)) throw InvalidConfigError("snr_db must be finite");
    if (delta_max < 0.0 || !std::isfinite(delta_max))
        throw InvalidConfigError("delta_max must be finite and >= 0");
    if (z_max < 0.0 || z_max > kPi)
        throw InvalidConfigError("z_max must lie in [0, pi], got " + format_g17(z_max));
    check_count(windows_per_rp, 1, "windows_per_rp");
    check_count(window_size, 1, "window_size");
    check_count(n_test_points, 1, "n_test_points");
    check_count(test_windows_per_tp, 1, "test_windows_per_tp");
    if (!kNetworkKinds.count(network_kind))
        throw InvalidConfigError("network.kind must be one of mlp_classifier, mlp_regressor, "
                                 "cnn_regressor; got \"" +
                                 network_kind + "\"");
    TrainConfig tc;
    tc.learning_rate = learning_rate;
    tc.batch_size = batch_size;
    tc.epochs = epochs;
    tc.validate();
    check_positive(sigma_p, "augmentation.sigma_p");
    check_count(copies_per_sample, 0, "augmentation.copies_per_sample");
    if (alpha < -1.0 || alpha > 1.0 || !std::isfinite(alpha))
        throw InvalidConfigError("augmentation.alpha must lie in [-1, 1]");
    check_count(outlier_group_size, 2, "outlier.group_size");
    check_positive(outlier_delta_th, "outlier.delta_th");
    if (eval_methods.empty()) throw InvalidConfigError("eval.methods must not be empty");
    for (const auto& m : eval_methods)
        if (!kEvalMethods.count(m))
            throw InvalidConfigError("unknown eval method \"" + m +
                                     "\"; expected knn, classifier, regressor, or oracle");
    check_count(knn_k, 1, "eval.knn_k");
    check_in_area(crlb_target, area, "crlb.target");
    if (crlb_snr_db.empty() || crlb_sigma_p.empty())
        throw InvalidConfigError("crlb.snr_db_list and crlb.sigma_p_list must not be empty");
    for (double s : crlb_sigma_p) check_positive(s, "crlb.sigma_p_list entry");
    check_count(crlb_n_symbols, 1, "crlb.n_symbols");
    if (sweep_methods.empty() || sweep_spacings.empty() || sweep_ap_counts.empty() ||
        sweep_augmentation.empty())
        throw InvalidConfigError("sweep lists must not be empty");
    for (const auto& m : sweep_methods)
        if (!kEvalMethods.count(m))
            throw InvalidConfigError("unknown sweep method \"" + m + "\"");
    for (double s : sweep_spacings) check_positive(s, "sweep.grid_spacings entry");
    for (int n : sweep_ap_counts)
        if (n != 1 && n != 2)
            throw InvalidConfigError("sweep.ap_counts entries must be 1 or 2, got " +
                                     std::to_string(n));
    for (int a : sweep_augmentation)
        if (a != 0 && a != 1)
            throw InvalidConfigError("sweep.augmentation entries must be 0 or 1");
    check_count(sweep_jobs, 1, "sweep.jobs");
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidConfigError(std::string("invalid config JSON: ") + e.what());
    }
    require_keys(j, "config",
                 {"seed", "out_dir", "area", "grid_spacing", "ap", "ap2", "scatterers", "array",
                  "ofdm", "measurement", "dataset", "network", "augmentation", "outlier", "eval",
                  "crlb", "sweep"});
    ExperimentConfig c;
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("area")) {
        const json& a = j["area"];
        if (!a.is_array() || a.size() != 4)
            throw InvalidConfigError("area must be [x_min, y_min, x_max, y_max]");
        c.area = Rect{a[0].get<double>(), a[1].get<double>(), a[2].get<double>(), a[3].get<double>()};
    }
    if (j.contains("grid_spacing")) c.grid_spacing = j["grid_spacing"].get<double>();
    if (j.contains("ap")) c.ap = location_from_json(j["ap"], "ap");
    if (j.contains("ap2")) c.ap2 = location_from_json(j["ap2"], "ap2");
    if (j.contains("scatterers")) {
        c.scatterers.clear();
        for (const auto& s : j["scatterers"]) c.scatterers.push_back(location_from_json(s, "scatterer"));
    }
    if (j.contains("array")) parse_array_config(j["array"], c.array);
    if (j.contains("ofdm")) parse_ofdm_config(j["ofdm"], c.ofdm);
    if (j.contains("measurement")) {
        const json& m = j["measurement"];
        require_keys(m, "measurement", {"snr_db", "delta_max", "z_max"});
        if (m.contains("snr_db")) c.snr_db = m["snr_db"].get<double>();
        if (m.contains("delta_max")) c.delta_max = m["delta_max"].get<double>();
        if (m.contains("z_max")) c.z_max = m["z_max"].get<double>();
    }
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        require_keys(d, "dataset",
                     {"windows_per_rp", "window_size", "n_test_points", "test_windows_per_tp"});
        if (d.contains("windows_per_rp")) c.windows_per_rp = d["windows_per_rp"].get<int>();
        if (d.contains("window_size")) c.window_size = d["window_size"].get<int>();
        if (d.contains("n_test_points")) c.n_test_points = d["n_test_points"].get<int>();
        if (d.contains("test_windows_per_tp"))
            c.test_windows_per_tp = d["test_windows_per_tp"].get<int>();
    }
    if (j.contains("network")) {
        const json& n = j["network"];
        require_keys(n, "network", {"kind", "learning_rate", "batch_size", "epochs"});
        if (n.contains("kind")) c.network_kind = n["kind"].get<std::string>();
        if (n.contains("learning_rate")) c.learning_rate = n["learning_rate"].get<double>();
        if (n.contains("batch_size")) c.batch_size = n["batch_size"].get<int>();
        if (n.contains("epochs")) c.epochs = n["epochs"].get<int>();
    }
    if (j.contains("augmentation")) {
        const json& a = j["augmentation"];
        require_keys(a, "augmentation", {"enabled", "sigma_p", "copies_per_sample", "alpha"});
        if (a.contains("enabled")) c.augmentation_enabled = a["enabled"].get<bool>();
        if (a.contains("sigma_p")) c.sigma_p = a["sigma_p"].get<double>();
        if (a.contains("copies_per_sample")) c.copies_per_sample = a["copies_per_sample"].get<int>();
        if (a.contains("alpha")) c.alpha = a["alpha"].get<double>();
    }
    if (j.contains("outlier")) {
        const json& o = j["outlier"];
        require_keys(o, "outlier", {"enabled", "group_size", "delta_th"});
        if (o.contains("enabled")) c.outlier_enabled = o["enabled"].get<bool>();
        if (o.contains("group_size")) c.outlier_group_size = o["group_size"].get<int>();
        if (o.contains("delta_th")) c.outlier_delta_th = o["delta_th"].get<double>();
    }
    if (j.contains("eval")) {
        const json& e = j["eval"];
        require_keys(e, "eval", {"methods", "knn_k"});
        if (e.contains("methods")) {
            c.eval_methods.clear();
            for (const auto& m : e["methods"]) c.eval_methods.push_back(m.get<std::string>());
        }
        if (e.contains("knn_k")) c.knn_k = e["knn_k"].get<int>();
    }
    if (j.contains("crlb")) {
        const json& r = j["crlb"];
        require_keys(r, "crlb", {"target", "snr_db_list", "sigma_p_list", "n_symbols"});
        if (r.contains("target")) c.crlb_target = location_from_json(r["target"], "crlb.target");
        if (r.contains("snr_db_list")) c.crlb_snr_db = r["snr_db_list"].get<std::vector<double>>();
        if (r.contains("sigma_p_list")) c.crlb_sigma_p = r["sigma_p_list"].get<std::vector<double>>();
        if (r.contains("n_symbols")) c.crlb_n_symbols = r["n_symbols"].get<int>();
    }
    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        require_keys(s, "sweep", {"methods", "grid_spacings", "ap_counts", "augmentation", "jobs"});
        if (s.contains("methods")) c.sweep_methods = s["methods"].get<std::vector<std::string>>();
        if (s.contains("grid_spacings"))
            c.sweep_spacings = s["grid_spacings"].get<std::vector<double>>();
        if (s.contains("ap_counts")) c.sweep_ap_counts = s["ap_counts"].get<std::vector<int>>();
        if (s.contains("augmentation"))
            c.sweep_augmentation = s["augmentation"].get<std::vector<int>>();
        if (s.contains("jobs")) c.sweep_jobs = s["jobs"].get<int>();
    }
    c.validate();
    return c;
}

std::string ExperimentConfig::canonical_json() const {
    json j;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["area"] = json::array({area.x_min, area.y_min, area.x_max, area.y_max});
    j["grid_spacing"] = grid_spacing;
    j["ap"] = location_to_json(ap);
    j["ap2"] = location_to_json(ap2);
    json sc = json::array();
    for (const auto& s : scatterers) sc.push_back(location_to_json(s));
    j["scatterers"] = sc;
    j["array"] = {{"n_tx", array.n_tx}, {"n_rx", array.n_rx}, {"spacing_d", array.spacing_d}};
    j["ofdm"] = {{"carrier_freq", ofdm.carrier_freq},
                 {"n_subcarriers", ofdm.n_subcarriers},
                 {"fft_size", ofdm.fft_size},
                 {"sample_period", ofdm.sample_period},
                 {"subcarrier_spacing", ofdm.subcarrier_spacing}};
    j["measurement"] = {{"snr_db", snr_db}, {"delta_max", delta_max}, {"z_max", z_max}};
    j["dataset"] = {{"windows_per_rp", windows_per_rp},
                    {"window_size", window_size},
                    {"n_test_points", n_test_points},
                    {"test_windows_per_tp", test_windows_per_tp}};
    j["network"] = {{"kind", network_kind},
                    {"learning_rate", learning_rate},
                    {"batch_size", batch_size},
                    {"epochs", epochs}};
    j["augmentation"] = {{"enabled", augmentation_enabled},
                         {"sigma_p", sigma_p},
                         {"copies_per_sample", copies_per_sample},
                         {"alpha", alpha}};
    j["outlier"] = {{"enabled", outlier_enabled},
                    {"group_size", outlier_group_size},
                    {"delta_th", outlier_delta_th}};
    j["eval"] = {{"methods", eval_methods}, {"knn_k", knn_k}};
    j["crlb"] = {{"target", location_to_json(crlb_target)},
                 {"snr_db_list", crlb_snr_db},
                 {"sigma_p_list", crlb_sigma_p},
                 {"n_symbols", crlb_n_symbols}};
    j["sweep"] = {{"methods", sweep_methods},
                  {"grid_spacings", sweep_spacings},
                  {"ap_counts", sweep_ap_counts},
                  {"augmentation", sweep_augmentation},
                  {"jobs", sweep_jobs}};
    return j.dump();
}

ExperimentConfig load_experiment_config(const std::string& path) {
    return ExperimentConfig::from_json_text(read_file_text(path));
}

std::string config_hash(const ExperimentConfig& config) {
    std::string text = config.canonical_json();
    std::uint64_t h = fnv1a64(reinterpret_cast<const std::uint8_t*>(text.data()), text.size());
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Scene make_scene_template(const ExperimentConfig& config, Location ap) {
    Scene scene;
    scene.ap = ap;
    scene.target = config.area.center();
    scene.scatterers = config.scatterers;
    scene.array = config.array;
    scene.ofdm = config.ofdm;
    scene.validate();
    return scene;
}

RpGrid make_train_grid(const ExperimentConfig& config, double spacing) {
    return RpGrid::make_interior_grid(config.area, spacing);
}

RpGrid make_test_points(const ExperimentConfig& config) {
    // Off-grid test points drawn uniformly over the area; the stream is
    // disjoint from dataset-build and augmentation streams.
    Rng rng(config.seed, 1ULL << 33);
    RpGrid grid;
    grid.area = config.area;
    grid.grid_spacing = 0.0;
    grid.rp_locations.reserve(static_cast<std::size_t>(config.n_test_points));
    const double min_sep = 1e-6;
    while (grid.rp_locations.size() < static_cast<std::size_t>(config.n_test_points)) {
        Location p{config.area.x_min + rng.uniform() * config.area.width(),
                   config.area.y_min + rng.uniform() * config.area.height()};
        bool clear = distance(p, config.ap) > min_sep && distance(p, config.ap2) > min_sep;
        for (const auto& s : config.scatterers)
            if (distance(p, s) <= min_sep) clear = false;
        if (clear) grid.rp_locations.push_back(p);
    }
    grid.validate();
    return grid;
}

double mean_signal_power(const Scene& scene_template, const RpGrid& grid,
                         const std::vector<std::complex<double>>& coeffs) {
    if (grid.n_rps() == 0) throw InvalidConfigError("signal power needs at least one grid point");
    double total = 0.0;
    std::size_t count = 0;
    Scene scene = scene_template;
    for (const auto& rp : grid.rp_locations) {
        scene.target = rp;
        auto paths = path_params_from_geometry(scene, coeffs);
        for (int i = 0; i < scene.ofdm.n_subcarriers; ++i) {
            Eigen::MatrixXcd h = channel_matrix(paths, scene.array, scene.ofdm, i);
            total += h.squaredNorm() / static_cast<double>(scene.array.n_tx);
            count += static_cast<std::size_t>(h.rows());
        }
    }
    return total / static_cast<double>(count);
}

MeasurementModel make_measurement_model(const ExperimentConfig& config, const Scene& scene,
                                        const RpGrid& train_grid) {
    auto coeffs = default_path_coeffs(scene.n_paths(), config.seed);
    double power = mean_signal_power(scene, train_grid, coeffs);
    MeasurementModel model;
    model.noise_n0 = power / std::pow(10.0, config.snr_db / 10.0);
    model.delta_max = config.delta_max;
    model.z_max = config.z_max;
    model.rng_seed = config.seed;
    model.validate();
    return model;
}

ExperimentDatasets build_experiment_datasets(const ExperimentConfig& config, Location ap,
                                             double spacing, bool augmented) {
    Scene scene = make_scene_template(config, ap);
    RpGrid train_grid = make_train_grid(config, spacing);
    MeasurementModel model = make_measurement_model(config, scene, train_grid);

    ExperimentDatasets out;
    out.train = build_dataset(train_grid, scene, model, config.windows_per_rp, config.window_size);
    if (augmented)
        out.train = augment_dataset(out.train, scene, model, config.sigma_p, config.copies_per_sample);

    RpGrid test_grid = make_test_points(config);
    // Offset keeps test noise streams disjoint from the train RP streams.
    out.test = build_dataset(test_grid, scene, model, config.test_windows_per_tp, config.window_size,
                             1ULL << 20);
    return out;
}

Network train_network(const ExperimentConfig& config, const std::string& kind,
                      const FingerprintDataset& dataset, TrainHistory* history) {
    TrainConfig tc;
    tc.learning_rate = config.learning_rate;
    tc.batch_size = config.batch_size;
    tc.epochs = config.epochs;
    tc.seed = config.seed;

    Network net = [&]() -> Network {
        if (kind == "mlp_classifier") {
            tc.loss = TrainConfig::Loss::cross_entropy;
            return make_mlp_classifier(dataset.mlp_dim(), dataset.grid.n_rps(), config.seed);
        }
        if (kind == "mlp_regressor") {
            tc.loss = TrainConfig::Loss::squared_l2;
            return make_mlp_regressor(dataset.mlp_dim(), config.seed);
        }
        if (kind == "cnn_regressor") {
            tc.loss = TrainConfig::Loss::squared_l2;
            TensorShape shape{2 * dataset.n_rx, dataset.n_subcarriers, dataset.window_size};
            return make_cnn_regressor(shape, config.seed);
        }
        throw InvalidConfigError("unknown network kind \"" + kind + "\"");
    }();

    Eigen::MatrixXd inputs = kind == "cnn_regressor"
                                 ? standardized_cnn_matrix(dataset, dataset.cnn_stats)
                                 : standardized_mlp_matrix(dataset, dataset.mlp_stats);
    Eigen::MatrixXd targets = kind == "mlp_classifier"
                                  ? onehot_targets(dataset, dataset.grid.n_rps())
                                  : location_targets(dataset);
    TrainHistory h = train(net, inputs, targets, tc);
    if (history) *history = h;
    return net;
}

std::vector<Location> localize_test_points(const ExperimentConfig& config,
                                           const std::string& method,
                                           const FingerprintDataset& train,
                                           const FingerprintDataset& test, Network* net) {
    auto groups = group_by_test_point(test);
    std::vector<Location> estimates;
    estimates.reserve(groups.size());

    if (method == "oracle") {
        for (const auto& rp : test.grid.rp_locations) estimates.push_back(rp);
        return estimates;
    }
    if (method == "knn") {
        for (const auto& group : groups) {
            std::vector<Prediction> windows;
            windows.reserve(group.size());
            for (int idx : group)
                windows.push_back(
                    knn_localize(train, test.samples[static_cast<std::size_t>(idx)].mlp_vector,
                                 config.knn_k));
            estimates.push_back(fuse_windows(config, windows));
        }
        return estimates;
    }
    if (!net) throw InvalidConfigError("method \"" + method + "\" requires a trained network");

    const bool cnn_input = net->input_shape().channels > 1;
    auto features_for = [&](int sample) -> Eigen::RowVectorXd {
        const FeatureSample& s = test.samples[static_cast<std::size_t>(sample)];
        const std::vector<double>& raw = cnn_input ? s.cnn_tensor : s.mlp_vector;
        const FeatureStats& stats = cnn_input ? train.cnn_stats : train.mlp_stats;
        Eigen::RowVectorXd row(static_cast<Eigen::Index>(raw.size()));
        for (std::size_t i = 0; i < raw.size(); ++i)
            row(static_cast<Eigen::Index>(i)) = (raw[i] - stats.mean[i]) / stats.stddev[i];
        return row;
    };

    for (const auto& group : groups) {
        Eigen::MatrixXd batch(static_cast<Eigen::Index>(group.size()), net->input_shape().flat());
        for (std::size_t r = 0; r < group.size(); ++r) batch.row(static_cast<Eigen::Index>(r)) = features_for(group[r]);

        if (method == "classifier") {
            if (config.outlier_enabled) {
                auto windows = per_window_classify(*net, batch, train.grid);
                Location fused = fuse_windows(config, windows);
                estimates.push_back(fused);
            } else {
                estimates.push_back(classify_localize(*net, batch, train.grid).location);
            }
        } else if (method == "regressor") {
            if (config.outlier_enabled) {
                auto windows = per_window_regress(*net, batch);
                Location fused = test.grid.area.clamp(fuse_windows(config, windows));
                estimates.push_back(fused);
            } else {
                estimates.push_back(regress_localize(*net, batch, test.grid.area).location);
            }
        } else {
            throw InvalidConfigError("unknown eval method \"" + method + "\"");
        }
    }
    return estimates;
}

void cmd_simulate(const ExperimentConfig& config) {
    ensure_out_dir(config);
    auto data = build_experiment_datasets(config, config.ap, config.grid_spacing,
                                          config.augmentation_enabled);
    save_dataset(data.train, out_path(config, "train.ds").string());
    save_dataset(data.test, out_path(config, "test.ds").string());
    json counts;
    counts["n_rps"] = data.train.grid.n_rps();
    counts["n_test_points"] = data.test.grid.n_rps();
    counts["n_train_samples"] = data.train.n_samples();
    write_manifest(config, "simulate", {"train.ds", "test.ds"}, counts);
}

void cmd_crlb(const ExperimentConfig& config) {
    ensure_out_dir(config);
    Scene scene = make_scene_template(config, config.ap);
    scene.target = config.crlb_target;
    auto coeffs = default_path_coeffs(scene.n_paths(), config.seed);
    auto paths = path_params_from_geometry(scene, coeffs);
    PilotConfig pilots = PilotConfig::all_ones(scene.array.n_tx, scene.ofdm.n_subcarriers,
                                               config.crlb_n_symbols);

    // Reference power at the analyzed target drives the SNR -> N_0 mapping.
    double power = 0.0;
    std::size_t count = 0;
    for (int i = 0; i < scene.ofdm.n_subcarriers; ++i) {
        Eigen::VectorXcd mu = signal_mean(paths, scene.array, scene.ofdm, pilots, i);
        power += mu.squaredNorm();
        count += static_cast<std::size_t>(mu.size());
    }
    power /= static_cast<double>(count);

    std::ostringstream csv;
    csv << "snr_db,sigma_p,epsilon,epsilon_p,status\n";
    for (double snr : config.crlb_snr_db) {
        double n0 = power / std::pow(10.0, snr / 10.0);
        for (double sp : config.crlb_sigma_p) {
            csv << format_g17(snr) << ',' << format_g17(sp) << ',';
            try {
                double eps = crlb_location(scene, coeffs, pilots, n0).rmse;
                PerturbationPrior prior;
                prior.sigma_p = sp;
                double eps_p = crlb_perturbed(scene, coeffs, pilots, n0, prior).rmse;
                csv << format_g17(eps) << ',' << format_g17(eps_p) << ",ok\n";
            } catch (const SingularFimError&) {
                csv << "nan,nan,singular\n";
            }
        }
    }
    write_csv(config, "crlb.csv", csv.str());
    write_manifest(config, "crlb", {"crlb.csv"});
}

void cmd_train(const ExperimentConfig& config) {
    ensure_out_dir(config);
    FingerprintDataset train = load_dataset(out_path(config, "train.ds").string());
    TrainHistory history;
    Network net = train_network(config, config.network_kind, train, &history);
    std::string model_name = model_file_name(config.network_kind);
    save_network(net, out_path(config, model_name).string());

    std::ostringstream csv;
    csv << "epoch,loss\n";
    for (std::size_t e = 0; e < history.epoch_loss.size(); ++e)
        csv << (e + 1) << ',' << format_g17(history.epoch_loss[e]) << '\n';
    write_csv(config, "train_history.csv", csv.str());
    write_manifest(config, "train", {model_name, "train_history.csv"});
}

void cmd_eval(const ExperimentConfig& config) {
    ensure_out_dir(config);
    FingerprintDataset train = load_dataset(out_path(config, "train.ds").string());
    FingerprintDataset test = load_dataset(out_path(config, "test.ds").string());

    std::vector<std::string> outputs;
    for (const auto& method : config.eval_methods) {
        std::optional<Network> net;
        if (method == "classifier")
            net = load_network(out_path(config, model_file_name("mlp_classifier")).string());
        else if (method == "regressor")
            net = load_network(out_path(config, model_file_name(regressor_kind(config))).string());
        auto estimates =
            localize_test_points(config, method, train, test, net ? &*net : nullptr);
        EvalReport report = evaluate(estimates, test.grid.rp_locations);

        std::string json_name = "eval_" + method + ".json";
        save_eval_report_json(report, out_path(config, json_name).string());
        std::string err_name = "errors_" + method + ".csv";
        export_errors_csv(report, out_path(config, err_name).string());
        std::ostringstream cdf;
        cdf << "error,fraction\n";
        for (const auto& [e, f] : report.cdf) cdf << format_g17(e) << ',' << format_g17(f) << '\n';
        std::string cdf_name = "cdf_" + method + ".csv";
        write_csv(config, cdf_name, cdf.str());
        outputs.insert(outputs.end(), {json_name, err_name, cdf_name});
    }
    write_manifest(config, "eval", outputs);
}

namespace {

struct SweepCell {
    std::string method;
    double spacing = 0.0;
    int ap_count = 1;
    bool augmented = false;
};

struct SweepResult {
    bool ok = false;
    double mean = 0.0;
    double median = 0.0;
    std::string error;
};

SweepResult run_sweep_cell(const ExperimentConfig& config, const SweepCell& cell) {
    SweepResult result;
    try {
        std::vector<Location> aps{config.ap};
        if (cell.ap_count == 2) aps.push_back(config.ap2);

        std::vector<std::vector<Location>> per_ap;
        for (const Location& ap : aps) {
            auto data = build_experiment_datasets(config, ap, cell.spacing, cell.augmented);
            std::optional<Network> net;
            if (cell.method == "classifier")
                net = train_network(config, "mlp_classifier", data.train, nullptr);
            else if (cell.method == "regressor")
                net = train_network(config, regressor_kind(config), data.train, nullptr);
            per_ap.push_back(localize_test_points(config, cell.method, data.train, data.test,
                                                  net ? &*net : nullptr));
        }

        RpGrid tps = make_test_points(config);
        std::vector<Location> fused(tps.rp_locations.size());
        for (std::size_t t = 0; t < fused.size(); ++t) {
            Location sum{0.0, 0.0};
            for (const auto& ap_est : per_ap) sum = sum + ap_est[t];
            fused[t] = (1.0 / static_cast<double>(per_ap.size())) * sum;
        }
        EvalReport report = evaluate(fused, tps.rp_locations);
        result.ok = true;
        result.mean = report.mean_distance_error;
        result.median = report.median_distance_error;
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
    }
    return result;
}

} // namespace

void cmd_sweep(const ExperimentConfig& config) {
    ensure_out_dir(config);
    std::vector<SweepCell> cells;
    for (const auto& method : config.sweep_methods)
        for (double spacing : config.sweep_spacings)
            for (int ap_count : config.sweep_ap_counts)
                for (int aug : config.sweep_augmentation)
                    cells.push_back(SweepCell{method, spacing, ap_count, aug != 0});

    std::vector<SweepResult> results(cells.size());
    int jobs = std::min<int>(config.sweep_jobs, static_cast<int>(cells.size()));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) results[i] = run_sweep_cell(config, cells[i]);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                results[i] = run_sweep_cell(config, cells[i]);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::ostringstream csv;
    csv << "method,grid_spacing,ap_count,augmented,mean_error,median_error,status\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        const auto& r = results[i];
        csv << c.method << ',' << format_g17(c.spacing) << ',' << c.ap_count << ','
            << (c.augmented ? 1 : 0) << ',';
        if (r.ok) {
            csv << format_g17(r.mean) << ',' << format_g17(r.median) << ",ok\n";
        } else {
            std::string msg = r.error;
            for (char& ch : msg)
                if (ch == ',' || ch == '\n') ch = ';';
            csv << "nan,nan,failed: " << msg << '\n';
        }
    }
    write_csv(config, "sweep_summary.csv", csv.str());
    write_manifest(config, "sweep", {"sweep_summary.csv"});
}

} // namespace csiloc
