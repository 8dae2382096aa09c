#pragma once

#include "csiloc/dataset.hpp"
#include "csiloc/neural.hpp"

#include <Eigen/Dense>

#include <complex>
#include <string>
#include <utility>
#include <vector>

namespace csiloc {

enum class PredictionSource : std::uint8_t { knn = 0, classifier = 1, regressor = 2, sic = 3 };

struct Prediction {
    Location location;
    PredictionSource source = PredictionSource::knn;
    std::vector<double> likelihoods; // optional; over RPs, sums to 1 when present
};

struct PredictionGroup {
    std::vector<Prediction> members;

    int group_size() const { return static_cast<int>(members.size()); }
};

struct EvalReport {
    double mean_distance_error = 0.0;
    double median_distance_error = 0.0; // lower midpoint for even counts
    std::vector<double> errors;         // per sample, input order
    std::vector<std::pair<double, double>> cdf; // (error, cumulative fraction)
};

// Unweighted centroid of the k nearest training labels under Euclidean
// distance on the raw MLP feature vectors; ties broken by lower sample index.
Prediction knn_localize(const FingerprintDataset& dataset, const std::vector<double>& query,
                        int k);

// Likelihood-weighted RP average per window: L = sum_i p_i * L_RP[i].
// `windows` holds one standardized feature row per window.
std::vector<Prediction> per_window_classify(Network& net, const Eigen::MatrixXd& windows,
                                            const RpGrid& grid);
Prediction classify_localize(Network& net, const Eigen::MatrixXd& windows, const RpGrid& grid);

// Direct coordinate regression per window; the fused output is clamped to the
// feasible area.
std::vector<Prediction> per_window_regress(Network& net, const Eigen::MatrixXd& windows);
Prediction regress_localize(Network& net, const Eigen::MatrixXd& windows, const Rect& area);

// Coordinatewise arithmetic mean of the member locations.
Location fuse_average(const std::vector<Prediction>& predictions);

// Rejects members whose normalized deviation exceeds delta_th on BOTH axes;
// statistics (mean, population std) are computed over the full group. A zero
// std makes that axis's condition false.
struct OutlierResult {
    PredictionGroup kept;
    std::vector<int> removed_indices;
    Location fused; // mean of the kept members
};
OutlierResult remove_outliers(const PredictionGroup& group, double delta_th);

// Model-based estimator: successively detect the strongest (tau, theta) path
// by matched-filter correlation, least-squares fit its coefficient, subtract,
// and repeat; recovered paths are then cyclically re-polished. theta is the
// arrival angle at the receiving (AP) array; the minimum-delay path is taken
// as LOS and inverted to a location.
struct SicConfig {
    double tau_min = 0.0;
    double tau_max = 1e-7;
    double tau_step = 1e-9;
    double theta_min = -kPi / 2.0;
    double theta_max = kPi / 2.0;
    double theta_step = kPi / 180.0;
    double noise_floor = 1e-12; // stop when residual power falls below this
    int max_paths = 8;
    int refine_factor = 10;  // grid refinement around the coarse peak
    int polish_rounds = 12;  // cyclic joint re-polish passes
    bool has_area = false;   // resolve the array's front-back ambiguity
    Rect area;

    void validate() const;
};

struct NoPathFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SicPath {
    double tau = 0.0;
    double theta = 0.0; // arrival angle at the AP
    std::complex<double> h{0.0, 0.0};
};

struct SicResult {
    Prediction prediction;
    std::vector<SicPath> paths;            // extraction order
    double initial_power = 0.0;
    double residual_power = 0.0;
    std::vector<double> residual_history;  // after each extraction
};

// snapshot(rx, subcarrier): one noise-averaged uplink observation at the AP
// under unit pilots.
SicResult sic_localize(const Eigen::MatrixXcd& snapshot, const ArrayConfig& array,
                       const OfdmConfig& ofdm, Location ap, const SicConfig& config);

// Per-sample Euclidean errors, mean/median, and the empirical CDF evaluated
// at the sorted error values.
EvalReport evaluate(const std::vector<Location>& predictions,
                    const std::vector<Location>& truths);

std::string eval_report_json(const EvalReport& report);
void save_eval_report_json(const EvalReport& report, const std::string& path);
// CSV with one "index,error" row per sample.
void export_errors_csv(const EvalReport& report, const std::string& path);

} // namespace csiloc
