#include "csiloc/geometry.hpp"

#include "csiloc/binio.hpp"
#include "csiloc/rng.hpp"

#include <json.hpp>

#include <set>

namespace csiloc {

namespace {

constexpr double kMinSeparation = 1e-9; // meters; closer points have undefined angles

using nlohmann::json;

void require_keys(const json& obj, const char* what, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw InvalidConfigError(std::string(what) + ": expected a JSON object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw InvalidConfigError(std::string(what) + ": unknown key '" + it.key() + "'");
    }
    for (const char* k : keys) {
        if (!obj.contains(k))
            throw InvalidConfigError(std::string(what) + ": missing key '" + std::string(k) + "'");
    }
}

json location_to_json(Location p) { return json::array({p.x, p.y}); }

Location location_from_json(const json& j, const char* what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw InvalidConfigError(std::string(what) + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

} // namespace

void ArrayConfig::validate() const {
    if (n_tx < 1) throw InvalidConfigError("array: n_tx must be >= 1");
    if (n_rx < 1) throw InvalidConfigError("array: n_rx must be >= 1");
    if (!(spacing_d > 0.0)) throw InvalidConfigError("array: spacing_d must be positive");
}

void OfdmConfig::validate() const {
    if (!(carrier_freq > 0.0)) throw InvalidConfigError("ofdm: carrier_freq must be positive");
    if (n_subcarriers < 1) throw InvalidConfigError("ofdm: n_subcarriers must be >= 1");
    if (fft_size < 2) throw InvalidConfigError("ofdm: fft_size must be >= 2");
    if (!(sample_period > 0.0)) throw InvalidConfigError("ofdm: sample_period must be positive");
    if (!(subcarrier_spacing > 0.0))
        throw InvalidConfigError("ofdm: subcarrier_spacing must be positive");
    // Lowest subcarrier must still sit at a positive frequency.
    const double lowest =
        carrier_freq - 0.5 * static_cast<double>(n_subcarriers - 1) * subcarrier_spacing;
    if (!(lowest > 0.0))
        throw InvalidConfigError("ofdm: subcarrier band extends below zero frequency");
}

void Scene::validate() const {
    array.validate();
    ofdm.validate();
    if (distance(ap, target) < kMinSeparation)
        throw DegenerateGeometryError("scene: target coincides with the AP");
    for (std::size_t k = 0; k < scatterers.size(); ++k) {
        const Location s = scatterers[k];
        const std::string tag = "scene: scatterer " + std::to_string(k);
        if (distance(s, ap) < kMinSeparation)
            throw DegenerateGeometryError(tag + " coincides with the AP");
        if (distance(s, target) < kMinSeparation)
            throw DegenerateGeometryError(tag + " coincides with the target");
    }
}

std::vector<std::complex<double>> default_path_coeffs(int n_paths, std::uint64_t seed) {
    if (n_paths < 1) throw InvalidConfigError("default_path_coeffs: n_paths must be >= 1");
    std::vector<std::complex<double>> coeffs;
    coeffs.reserve(static_cast<std::size_t>(n_paths));
    coeffs.emplace_back(1.0, 0.0);
    Rng rng(seed);
    const double sigma = 0.3 / std::sqrt(2.0); // per-component, total std 0.3
    for (int k = 1; k < n_paths; ++k) {
        const double re = rng.normal(0.0, sigma);
        const double im = rng.normal(0.0, sigma);
        coeffs.emplace_back(re, im);
    }
    return coeffs;
}

std::vector<PathParams> path_params_from_geometry(
    const Scene& scene, const std::vector<std::complex<double>>& coeffs) {
    scene.validate();
    if (static_cast<int>(coeffs.size()) != scene.n_paths())
        throw InvalidConfigError("path_params_from_geometry: coeffs size must match path count");

    std::vector<PathParams> paths(static_cast<std::size_t>(scene.n_paths()));

    PathParams& los = paths[0];
    los.tau = distance(scene.ap, scene.target) / kSpeedOfLight;
    los.theta_t = std::atan2(scene.target.y - scene.ap.y, scene.target.x - scene.ap.x);
    los.theta_r = wrap_angle(los.theta_t + kPi);
    los.h = coeffs[0];

    for (std::size_t k = 0; k < scene.scatterers.size(); ++k) {
        const Location s = scene.scatterers[k];
        PathParams& p = paths[k + 1];
        p.tau = (distance(scene.ap, s) + distance(s, scene.target)) / kSpeedOfLight;
        p.theta_t = std::atan2(s.y - scene.ap.y, s.x - scene.ap.x);
        p.theta_r = std::atan2(s.y - scene.target.y, s.x - scene.target.x);
        p.h = coeffs[k + 1];
    }
    return paths;
}

std::vector<PathParams> path_params_from_geometry(const Scene& scene, std::uint64_t coeff_seed) {
    return path_params_from_geometry(scene, default_path_coeffs(scene.n_paths(), coeff_seed));
}

Location location_from_los(Location ap, double tau0, double theta) {
    if (!(tau0 >= 0.0)) throw InvalidConfigError("location_from_los: tau0 must be nonnegative");
    const double d = kSpeedOfLight * tau0;
    return {ap.x + d * std::cos(theta), ap.y + d * std::sin(theta)};
}

std::string scene_to_json(const Scene& scene) {
    json j;
    j["ap"] = location_to_json(scene.ap);
    j["target"] = location_to_json(scene.target);
    json scat = json::array();
    for (Location s : scene.scatterers) scat.push_back(location_to_json(s));
    j["scatterers"] = scat;
    j["array"] = {{"n_tx", scene.array.n_tx},
                  {"n_rx", scene.array.n_rx},
                  {"spacing_d", scene.array.spacing_d}};
    j["ofdm"] = {{"carrier_freq", scene.ofdm.carrier_freq},
                 {"n_subcarriers", scene.ofdm.n_subcarriers},
                 {"fft_size", scene.ofdm.fft_size},
                 {"sample_period", scene.ofdm.sample_period},
                 {"subcarrier_spacing", scene.ofdm.subcarrier_spacing}};
    return j.dump(2) + "\n";
}

Scene scene_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InvalidConfigError(std::string("scene: invalid JSON: ") + e.what());
    }
    require_keys(j, "scene", {"ap", "target", "scatterers", "array", "ofdm"});

    Scene scene;
    scene.ap = location_from_json(j["ap"], "scene.ap");
    scene.target = location_from_json(j["target"], "scene.target");
    if (!j["scatterers"].is_array())
        throw InvalidConfigError("scene.scatterers: expected an array");
    for (const auto& s : j["scatterers"])
        scene.scatterers.push_back(location_from_json(s, "scene.scatterers[]"));

    const json& arr = j["array"];
    require_keys(arr, "scene.array", {"n_tx", "n_rx", "spacing_d"});
    scene.array.n_tx = arr["n_tx"].get<int>();
    scene.array.n_rx = arr["n_rx"].get<int>();
    scene.array.spacing_d = arr["spacing_d"].get<double>();

    const json& ofdm = j["ofdm"];
    require_keys(ofdm, "scene.ofdm",
                 {"carrier_freq", "n_subcarriers", "fft_size", "sample_period",
                  "subcarrier_spacing"});
    scene.ofdm.carrier_freq = ofdm["carrier_freq"].get<double>();
    scene.ofdm.n_subcarriers = ofdm["n_subcarriers"].get<int>();
    scene.ofdm.fft_size = ofdm["fft_size"].get<int>();
    scene.ofdm.sample_period = ofdm["sample_period"].get<double>();
    scene.ofdm.subcarrier_spacing = ofdm["subcarrier_spacing"].get<double>();

    scene.validate();
    return scene;
}

void save_scene(const Scene& scene, const std::string& path) {
    write_file_text(path, scene_to_json(scene));
}

Scene load_scene(const std::string& path) { return scene_from_json(read_file_text(path)); }

} // namespace csiloc
