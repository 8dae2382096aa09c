#pragma once

#include "csiloc/channel.hpp"

#include <Eigen/Dense>

namespace csiloc {

// Raised when the transformed information matrix is too ill-conditioned to invert.
struct SingularFimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double kMaxFimCondition = 1e12;

// Known pilot symbols, identical for every OFDM symbol in the block.
// symbols(t, i) is the entry transmitted from antenna t on subcarrier i.
struct PilotConfig {
    int n_symbols = 1;
    Eigen::MatrixXcd symbols; // n_tx x n_subcarriers

    static PilotConfig all_ones(int n_tx, int n_subcarriers, int n_symbols = 1);

    // Total transmit energy summed over antennas, subcarriers and symbols.
    double pilot_energy() const;

    void validate(const ArrayConfig& array, const OfdmConfig& ofdm) const;
};

// Channel-parameter vector layout: per path k the block
//   [tau_k, theta_t_k, theta_r_k, h_re_k, h_im_k]
// stored consecutively, path 0 (LOS) first.
struct ParamOrdering {
    static constexpr int kPerPath = 5;
    static int dim(int n_paths) { return kPerPath * n_paths; }
    static int tau(int k) { return kPerPath * k; }
    static int theta_t(int k) { return kPerPath * k + 1; }
    static int theta_r(int k) { return kPerPath * k + 2; }
    static int h_re(int k) { return kPerPath * k + 3; }
    static int h_im(int k) { return kPerPath * k + 4; }
};

// Location-parameter vector layout:
//   [L_x, L_y, h_re_0, h_im_0, s1_x, s1_y, h_re_1, h_im_1, ...],
// dimension 4 * n_paths.
struct LocParamOrdering {
    static int dim(int n_paths) { return 4 * n_paths; }
    static int target_x() { return 0; }
    static int target_y() { return 1; }
    static int scatterer_x(int k) { return 4 * k; } // k >= 1
    static int scatterer_y(int k) { return 4 * k + 1; }
    static int h_re(int k) { return k == 0 ? 2 : 4 * k + 2; }
    static int h_im(int k) { return k == 0 ? 3 : 4 * k + 3; }
};

// Noise-free received mean vector for one subcarrier: mu_i = H_i * x_i  (n_rx x 1).
Eigen::VectorXcd signal_mean(const std::vector<PathParams>& paths, const ArrayConfig& array,
                             const OfdmConfig& ofdm, const PilotConfig& pilots, int subcarrier);

// Fisher information in the channel parameters eta, for complex AWGN with total
// per-sample variance noise_n0:
//   J = (2 / N0) * sum_{i,n} Re{ D_i^H D_i },   D_i = d mu_i / d eta.
// Analytic derivatives.
Eigen::MatrixXd fim_eta(const std::vector<PathParams>& paths, const ArrayConfig& array,
                        const OfdmConfig& ofdm, const PilotConfig& pilots, double noise_n0);

// Same matrix via central differences on signal_mean; the reference oracle for
// the analytic version. Delay steps are scaled by the sample period so every
// parameter is perturbed at a numerically sensible magnitude.
Eigen::MatrixXd fim_eta_numeric(const std::vector<PathParams>& paths, const ArrayConfig& array,
                                const OfdmConfig& ofdm, const PilotConfig& pilots,
                                double noise_n0, double step = 1e-6);

// Jacobian-based reparametrization matrix T (4*n_paths x 5*n_paths) such that
// the information in the location parameters is J_tilde = T * J * T^T.
Eigen::MatrixXd transform_matrix(const Scene& scene);

struct CrlbResult {
    double rmse = 0.0;            // epsilon = sqrt(tr cov), meters
    Eigen::Matrix2d position_cov; // 2x2 target-position block of the inverse
};

// Invert the location-parameter information matrix and read off the bound on
// the target position. Throws SingularFimError when cond > kMaxFimCondition.
CrlbResult crlb_from_fim_tilde(const Eigen::MatrixXd& j_tilde);

// Full pipeline: geometry -> fim_eta -> transform -> invert.
CrlbResult crlb_location(const Scene& scene, const std::vector<std::complex<double>>& coeffs,
                         const PilotConfig& pilots, double noise_n0);

// Gaussian prior (std sigma_p per axis) on the target position, modelling
// fingerprint-location perturbation; adds sigma_p^-2 to the position block.
struct PerturbationPrior {
    double sigma_p = 0.0;
    void validate() const;
};

CrlbResult crlb_perturbed(const Scene& scene, const std::vector<std::complex<double>>& coeffs,
                          const PilotConfig& pilots, double noise_n0,
                          const PerturbationPrior& prior);

} // namespace csiloc
