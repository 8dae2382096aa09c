#pragma once

#include "csiloc/channel.hpp"
#include "csiloc/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace csiloc {

// Receiver impairments applied on top of the noiseless channel: complex AWGN
// with total per-sample variance noise_n0, plus a per-packet timing offset
// delta ~ U(-delta_max, delta_max) samples and common phase Z ~ U(-z_max, z_max].
struct MeasurementModel {
    double noise_n0 = 0.0;
    double delta_max = 2.0;
    double z_max = kPi;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

// One received OFDM symbol (packet) in polar form, [subcarrier][rx] flattened
// row-major as sc * n_rx + rx.
struct CsiRecord {
    int n_subcarriers = 0;
    int n_rx = 0;
    int symbol_index = 0;
    Location true_location;
    std::vector<double> amplitudes;
    std::vector<double> phases_raw;
    std::vector<double> phases_calibrated; // empty until calibrate_phase
    bool calibrated = false;
    double delta_hat = 0.0;    // timing-offset estimate from calibration, samples
    bool unwrap_flagged = false;

    std::size_t flat(int sc, int rx) const {
        return static_cast<std::size_t>(sc) * n_rx + rx;
    }
    double amp(int sc, int rx) const { return amplitudes[flat(sc, rx)]; }
    double phase_raw(int sc, int rx) const { return phases_raw[flat(sc, rx)]; }
    double phase_cal(int sc, int rx) const { return phases_calibrated[flat(sc, rx)]; }
};

// Reference-point layout over the feasible area.
struct RpGrid {
    std::vector<Location> rp_locations;
    double grid_spacing = 0.0;
    Rect area;

    int n_rps() const { return static_cast<int>(rp_locations.size()); }
    void validate() const;

    // Interior grid: per axis max(1, round(extent/spacing) - 2) points at the
    // given spacing, centered in the area. Index order is x-fastest
    // (rp = iy * nx + ix).
    static RpGrid make_interior_grid(const Rect& area, double spacing);
};

// Network-ready features for one window of symbols.
//   mlp_vector: window means, [amplitude block | phase block], each block
//               sc-major (index sc * n_rx + rx); length 2 * N_sc * N_rx.
//   cnn_tensor: [channel][subcarrier][symbol] flattened, channels are the
//               n_rx amplitude channels followed by the n_rx phase channels.
struct FeatureSample {
    std::vector<double> mlp_vector;
    std::vector<double> cnn_tensor;
    Location label;        // training label (RP location, or TP truth for test sets)
    Location gen_location; // where the CSI was actually generated
    int rp_index = -1;
};

// Per-feature standardization statistics (zero-variance features get std 1).
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

struct FingerprintDataset {
    std::vector<FeatureSample> samples;
    RpGrid grid;
    std::string provenance = "simulated"; // "simulated" | "augmented"
    int window_size = 30;
    int n_subcarriers = 30;
    int n_rx = 3;
    FeatureStats mlp_stats; // computed over this dataset's samples at build time
    FeatureStats cnn_stats;

    int n_samples() const { return static_cast<int>(samples.size()); }
    int mlp_dim() const { return 2 * n_subcarriers * n_rx; }
    int cnn_dim() const { return 2 * n_rx * n_subcarriers * window_size; }
};

// Simulate n_symbols received packets for the given resolved multipath; one
// CsiRecord per packet. Per packet the draw order is: delta, Z, then noise
// (subcarrier-major, rx within, re before im). Requires n_tx == 1.
std::vector<CsiRecord> simulate_csi(const Scene& scene, const std::vector<PathParams>& paths,
                                    const MeasurementModel& model, int n_symbols, Rng& rng);

// Convenience: path coefficients from default_path_coeffs(model.rng_seed) and
// packet stream Rng(model.rng_seed, 1).
std::vector<CsiRecord> simulate_csi(const Scene& scene, const MeasurementModel& model,
                                    int n_symbols);

// Remove the common linear-in-subcarrier phase: per-antenna unwrap (antennas
// anchored to each other at subcarrier 0), least-squares line (a, b) on the
// antenna-mean phase, subtract a*i + b everywhere. delta_hat = -a*n_fft/(2*pi).
CsiRecord calibrate_phase(const CsiRecord& record, int n_fft);

std::vector<double> extract_features_mlp(const std::vector<CsiRecord>& window);
std::vector<double> extract_features_cnn(const std::vector<CsiRecord>& window, int n_win);

FeatureStats compute_mlp_stats(const FingerprintDataset& dataset);
FeatureStats compute_cnn_stats(const FingerprintDataset& dataset);

// Row-per-sample matrices standardized with the given (training) statistics.
Eigen::MatrixXd standardized_mlp_matrix(const FingerprintDataset& dataset,
                                        const FeatureStats& stats);
Eigen::MatrixXd standardized_cnn_matrix(const FingerprintDataset& dataset,
                                        const FeatureStats& stats);
// Raw (unstandardized) MLP feature rows; the KNN baseline works on these.
Eigen::MatrixXd raw_mlp_matrix(const FingerprintDataset& dataset);
// Labels as rows: locations (n x 2) or one-hot RP classes (n x n_classes).
Eigen::MatrixXd location_targets(const FingerprintDataset& dataset);
Eigen::MatrixXd onehot_targets(const FingerprintDataset& dataset, int n_classes);

// Fingerprints over the grid: target placed at each RP of the shared scene
// template, samples_per_rp windows of `window` packets each. Path coefficients
// are drawn once (seed = model.rng_seed) and shared by all RPs; RP r uses
// packet stream Rng(model.rng_seed, r + 1 + stream_offset). A nonzero offset
// lets a second grid (e.g. test points) draw noise independent of the first.
FingerprintDataset build_dataset(const RpGrid& grid, const Scene& scene_template,
                                 const MeasurementModel& model, int samples_per_rp, int window,
                                 std::uint64_t stream_offset = 0);

// Appends copies_per_sample extra windows per original sample, generated at a
// point drawn uniformly in the disk of radius sigma_p around the sample label
// (resampled until inside the area) while keeping the original label.
FingerprintDataset augment_dataset(const FingerprintDataset& dataset,
                                   const Scene& scene_template, const MeasurementModel& model,
                                   double sigma_p, int copies_per_sample);

void save_dataset(const FingerprintDataset& dataset, const std::string& path);
FingerprintDataset load_dataset(const std::string& path);

// One row per sample: rp_index, label x/y, generation x/y, MLP features.
void export_dataset_csv(const FingerprintDataset& dataset, const std::string& path);

} // namespace csiloc
