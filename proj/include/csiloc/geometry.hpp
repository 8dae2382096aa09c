#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace csiloc {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s
inline constexpr double kPi = 3.141592653589793238462643383279502884;

struct InvalidConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateGeometryError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// 2-D position in meters.
struct Location {
    double x = 0.0;
    double y = 0.0;

    friend Location operator+(Location a, Location b) { return {a.x + b.x, a.y + b.y}; }
    friend Location operator-(Location a, Location b) { return {a.x - b.x, a.y - b.y}; }
    friend Location operator*(double s, Location a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Location a, Location b) { return a.x == b.x && a.y == b.y; }
};

inline double distance(Location a, Location b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Wrap an angle into (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    if (a > kPi) a -= 2.0 * kPi;
    return a;
}

// Axis-aligned rectangle, the feasible localization area.
struct Rect {
    double x_min = 0.0, y_min = 0.0;
    double x_max = 0.0, y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    bool contains(Location p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }
    Location clamp(Location p) const {
        return {std::min(std::max(p.x, x_min), x_max), std::min(std::max(p.y, y_min), y_max)};
    }
    Location center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

// Co-planar uniform linear arrays at both link ends.
struct ArrayConfig {
    int n_tx = 1;
    int n_rx = 3;
    double spacing_d = 0.028181; // meters, lambda/2 at 5.32 GHz

    void validate() const;
};

struct OfdmConfig {
    double carrier_freq = 5.32e9;       // Hz
    int n_subcarriers = 30;             // N_sc
    int fft_size = 64;                  // N_FFT
    double sample_period = 5.0e-8;      // T_s, 3.2 us symbol / 64 samples
    double subcarrier_spacing = 312500; // Hz

    // Per-subcarrier wavelength; subcarrier offsets are centered around the carrier.
    double wavelength(int subcarrier_index) const {
        const double offset = static_cast<double>(subcarrier_index) -
                              0.5 * static_cast<double>(n_subcarriers - 1);
        return kSpeedOfLight / (carrier_freq + offset * subcarrier_spacing);
    }

    void validate() const;
};

// One propagation path: delay, departure/arrival angles, complex coefficient.
// Angles use the atan2 convention on the full plane:
//   theta_t = direction of departure seen at the AP,
//   theta_r = direction the receiver looks back along the incoming ray.
// For the LOS path theta_r = theta_t + pi.
struct PathParams {
    double tau = 0.0;     // seconds
    double theta_t = 0.0; // radians, in (-pi, pi]
    double theta_r = 0.0; // radians, in (-pi, pi]
    std::complex<double> h{1.0, 0.0};
};

// Geometric scene: one AP, one target, K single-bounce scatterers.
// Path 0 is LOS; path k >= 1 bounces off scatterers[k-1].
struct Scene {
    Location ap;
    Location target;
    std::vector<Location> scatterers;
    ArrayConfig array;
    OfdmConfig ofdm;

    int n_paths() const { return static_cast<int>(scatterers.size()) + 1; }
    void validate() const;
};

// Default per-path coefficients: LOS h_0 = 1, NLOS complex Gaussian with
// total std 0.3, drawn deterministically from the seed.
std::vector<std::complex<double>> default_path_coeffs(int n_paths, std::uint64_t seed);

// Derive per-path (tau, theta_t, theta_r) from the scene geometry.
// coeffs.size() must equal scene.n_paths().
std::vector<PathParams> path_params_from_geometry(const Scene& scene,
                                                  const std::vector<std::complex<double>>& coeffs);
std::vector<PathParams> path_params_from_geometry(const Scene& scene, std::uint64_t coeff_seed = 0);

// Invert the LOS geometry: position at distance c*tau0 from the AP along theta.
Location location_from_los(Location ap, double tau0, double theta);

// Scene description file (JSON): lossless round-trip.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void save_scene(const Scene& scene, const std::string& path);
Scene load_scene(const std::string& path);

} // namespace csiloc
