#pragma once

#include "csiloc/crlb.hpp"
#include "csiloc/dataset.hpp"
#include "csiloc/localization.hpp"
#include "csiloc/neural.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace csiloc {

// Everything a run needs, loadable from JSON (all keys optional, unknown keys
// rejected). SNR is specified in dB; the noise level is derived from the mean
// noiseless signal power over the training grid.
struct ExperimentConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";

    Rect area{0.0, 0.0, 8.0, 6.0};
    double grid_spacing = 1.2;
    Location ap{0.1, 0.1};
    Location ap2{7.9, 0.1}; // second AP for 2-AP sweep cells
    std::vector<Location> scatterers{{2.0, 5.0}, {6.0, 2.0}};
    ArrayConfig array;
    OfdmConfig ofdm;

    double snr_db = 20.0;
    double delta_max = 2.0;
    double z_max = kPi;

    int windows_per_rp = 200;
    int window_size = 30;
    int n_test_points = 50;
    int test_windows_per_tp = 10;

    std::string network_kind = "mlp_regressor"; // mlp_classifier|mlp_regressor|cnn_regressor
    double learning_rate = 0.01;
    // Small batches matter for the regressor: with one tight feature cluster
    // per RP, large-batch SGD converges to a map that memorizes the cluster
    // centers, while the extra gradient noise here regularizes it into one
    // that interpolates between RPs.
    int batch_size = 8;
    int epochs = 200;

    bool augmentation_enabled = false;
    double sigma_p = 0.1;
    int copies_per_sample = 1;
    double alpha = 0.0; // label-perturbation coefficient; fixed no-op at 0

    bool outlier_enabled = false;
    int outlier_group_size = 10;
    double outlier_delta_th = 2.0;

    std::vector<std::string> eval_methods{"knn", "classifier", "regressor"};
    int knn_k = 5;

    Location crlb_target{4.0, 3.0};
    std::vector<double> crlb_snr_db{0.0, 6.0, 12.0, 18.0, 24.0};
    std::vector<double> crlb_sigma_p{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0};
    int crlb_n_symbols = 1;

    std::vector<std::string> sweep_methods{"regressor"};
    std::vector<double> sweep_spacings{1.2};
    std::vector<int> sweep_ap_counts{1};
    std::vector<int> sweep_augmentation{0}; // 0 = off, 1 = on
    int sweep_jobs = 1;

    void validate() const;
    static ExperimentConfig from_json_text(const std::string& text);
    // Canonical compact JSON of every field; input to the config hash.
    std::string canonical_json() const;
};

ExperimentConfig load_experiment_config(const std::string& path);
std::string config_hash(const ExperimentConfig& config); // 16-hex-digit FNV-1a

// Shared plumbing, exposed for tests.
Scene make_scene_template(const ExperimentConfig& config, Location ap);
RpGrid make_train_grid(const ExperimentConfig& config, double spacing);
RpGrid make_test_points(const ExperimentConfig& config);
// Mean per-sample noiseless signal power over the grid (drives SNR -> N_0).
double mean_signal_power(const Scene& scene_template, const RpGrid& grid,
                         const std::vector<std::complex<double>>& coeffs);
MeasurementModel make_measurement_model(const ExperimentConfig& config, const Scene& scene,
                                        const RpGrid& train_grid);

struct ExperimentDatasets {
    FingerprintDataset train;
    FingerprintDataset test;
};
// Builds the train set (optionally augmented) and the off-grid test set for
// one AP at the given grid spacing.
ExperimentDatasets build_experiment_datasets(const ExperimentConfig& config, Location ap,
                                             double spacing, bool augmented);

// Trains the configured network kind on a prepared dataset.
Network train_network(const ExperimentConfig& config, const std::string& kind,
                      const FingerprintDataset& train, TrainHistory* history);

// Per-test-point fused estimates for one method ("oracle" feeds truths back).
std::vector<Location> localize_test_points(const ExperimentConfig& config,
                                           const std::string& method,
                                           const FingerprintDataset& train,
                                           const FingerprintDataset& test, Network* net);

// CLI entry points; they write their artifacts plus a manifest into out_dir
// and throw on failure.
void cmd_simulate(const ExperimentConfig& config);
void cmd_crlb(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config);
void cmd_eval(const ExperimentConfig& config);
void cmd_sweep(const ExperimentConfig& config);

} // namespace csiloc
