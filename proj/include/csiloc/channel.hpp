#pragma once

#include "csiloc/geometry.hpp"

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace csiloc {

// Unit-norm ULA steering vector. Element m (m = 0..n-1) has phase
//   (m - (n-1)/2) * (2*pi/lambda) * d * sin(theta),
// i.e. the phase reference sits at the array centroid.
Eigen::VectorXcd steering_vector(int n, double spacing_d, double wavelength, double theta);

// Derivative of steering_vector with respect to theta.
Eigen::VectorXcd steering_vector_dtheta(int n, double spacing_d, double wavelength, double theta);

// Diagonal per-path gain matrix for subcarrier i:
//   Gamma_i[k,k] = sqrt(n_tx*n_rx) * h_k * exp(-j*2*pi*i*tau_k / (n_subcarriers*sample_period)).
Eigen::MatrixXcd gamma_matrix(const std::vector<PathParams>& paths, const ArrayConfig& array,
                              const OfdmConfig& ofdm, int subcarrier);

// Narrowband channel for subcarrier i: H_i = A_R * Gamma_i * A_T^H  (n_rx x n_tx),
// where A_R / A_T stack the receive / transmit steering vectors of all paths.
Eigen::MatrixXcd channel_matrix(const std::vector<PathParams>& paths, const ArrayConfig& array,
                                const OfdmConfig& ofdm, int subcarrier);

// Channel frozen over a block of symbols, indexed [symbol][subcarrier][rx][tx].
struct ChannelTensor {
    int n_symbols = 0;
    int n_subcarriers = 0;
    int n_rx = 0;
    int n_tx = 0;
    std::vector<std::complex<double>> data;

    std::size_t index(int symbol, int subcarrier, int rx, int tx) const {
        return ((static_cast<std::size_t>(symbol) * n_subcarriers + subcarrier) * n_rx + rx) *
                   n_tx +
               tx;
    }
    std::complex<double>& at(int symbol, int subcarrier, int rx, int tx) {
        return data[index(symbol, subcarrier, rx, tx)];
    }
    const std::complex<double>& at(int symbol, int subcarrier, int rx, int tx) const {
        return data[index(symbol, subcarrier, rx, tx)];
    }
};

// Block-fading tensor: the same H_i replicated over n_symbols symbols.
ChannelTensor channel_tensor(const std::vector<PathParams>& paths, const ArrayConfig& array,
                             const OfdmConfig& ofdm, int n_symbols);

} // namespace csiloc
