#include "csiloc/channel.hpp"

namespace csiloc {

namespace {

const std::complex<double> kJ(0.0, 1.0);

void check_subcarrier(const OfdmConfig& ofdm, int subcarrier) {
    if (subcarrier < 0 || subcarrier >= ofdm.n_subcarriers)
        throw InvalidConfigError("subcarrier index out of range");
}

} // namespace

Eigen::VectorXcd steering_vector(int n, double spacing_d, double wavelength, double theta) {
    if (n < 1) throw InvalidConfigError("steering_vector: n must be >= 1");
    if (!(spacing_d > 0.0) || !(wavelength > 0.0))
        throw InvalidConfigError("steering_vector: spacing and wavelength must be positive");
    Eigen::VectorXcd a(n);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    const double phase_step = 2.0 * kPi / wavelength * spacing_d * std::sin(theta);
    const double center = 0.5 * static_cast<double>(n - 1);
    for (int m = 0; m < n; ++m)
        a(m) = scale * std::exp(kJ * ((static_cast<double>(m) - center) * phase_step));
    return a;
}

Eigen::VectorXcd steering_vector_dtheta(int n, double spacing_d, double wavelength,
                                        double theta) {
    Eigen::VectorXcd a = steering_vector(n, spacing_d, wavelength, theta);
    const double gain = 2.0 * kPi / wavelength * spacing_d * std::cos(theta);
    const double center = 0.5 * static_cast<double>(n - 1);
    for (int m = 0; m < n; ++m)
        a(m) *= kJ * ((static_cast<double>(m) - center) * gain);
    return a;
}

Eigen::MatrixXcd gamma_matrix(const std::vector<PathParams>& paths, const ArrayConfig& array,
                              const OfdmConfig& ofdm, int subcarrier) {
    if (paths.empty()) throw InvalidConfigError("gamma_matrix: no paths");
    array.validate();
    ofdm.validate();
    check_subcarrier(ofdm, subcarrier);
    const auto n_paths = static_cast<Eigen::Index>(paths.size());
    Eigen::MatrixXcd gamma = Eigen::MatrixXcd::Zero(n_paths, n_paths);
    const double amp = std::sqrt(static_cast<double>(array.n_tx) * array.n_rx);
    const double omega =
        2.0 * kPi * subcarrier / (ofdm.n_subcarriers * ofdm.sample_period);
    for (Eigen::Index k = 0; k < n_paths; ++k)
        gamma(k, k) = amp * paths[k].h * std::exp(-kJ * (omega * paths[k].tau));
    return gamma;
}

Eigen::MatrixXcd channel_matrix(const std::vector<PathParams>& paths, const ArrayConfig& array,
                                const OfdmConfig& ofdm, int subcarrier) {
    const Eigen::MatrixXcd gamma = gamma_matrix(paths, array, ofdm, subcarrier);
    const double lambda = ofdm.wavelength(subcarrier);
    const auto n_paths = static_cast<Eigen::Index>(paths.size());
    Eigen::MatrixXcd a_r(array.n_rx, n_paths);
    Eigen::MatrixXcd a_t(array.n_tx, n_paths);
    for (Eigen::Index k = 0; k < n_paths; ++k) {
        a_r.col(k) = steering_vector(array.n_rx, array.spacing_d, lambda, paths[k].theta_r);
        a_t.col(k) = steering_vector(array.n_tx, array.spacing_d, lambda, paths[k].theta_t);
    }
    return a_r * gamma * a_t.adjoint();
}

ChannelTensor channel_tensor(const std::vector<PathParams>& paths, const ArrayConfig& array,
                             const OfdmConfig& ofdm, int n_symbols) {
    if (n_symbols < 1) throw InvalidConfigError("channel_tensor: n_symbols must be >= 1");
    ChannelTensor tensor;
    tensor.n_symbols = n_symbols;
    tensor.n_subcarriers = ofdm.n_subcarriers;
    tensor.n_rx = array.n_rx;
    tensor.n_tx = array.n_tx;
    tensor.data.resize(static_cast<std::size_t>(n_symbols) * ofdm.n_subcarriers * array.n_rx *
                       array.n_tx);
    for (int i = 0; i < ofdm.n_subcarriers; ++i) {
        const Eigen::MatrixXcd h = channel_matrix(paths, array, ofdm, i);
        for (int n = 0; n < n_symbols; ++n)
            for (int rx = 0; rx < array.n_rx; ++rx)
                for (int tx = 0; tx < array.n_tx; ++tx)
                    tensor.at(n, i, rx, tx) = h(rx, tx);
    }
    return tensor;
}

} // namespace csiloc
