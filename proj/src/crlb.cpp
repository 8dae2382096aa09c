#include "csiloc/crlb.hpp"

namespace csiloc {

namespace {

const std::complex<double> kJ(0.0, 1.0);

void check_noise(double noise_n0) {
    if (!(noise_n0 > 0.0)) throw InvalidConfigError("noise_n0 must be positive");
}

Eigen::MatrixXd finalize_fim(const Eigen::MatrixXcd& gram, double noise_n0, int n_symbols) {
    Eigen::MatrixXd j = (2.0 / noise_n0) * static_cast<double>(n_symbols) * gram.real();
    return 0.5 * (j + j.transpose()); // enforce exact symmetry
}

// Copy of paths with channel parameter `param` (ParamOrdering index) offset by delta.
std::vector<PathParams> perturb_param(const std::vector<PathParams>& paths, int param,
                                      double delta) {
    std::vector<PathParams> out = paths;
    PathParams& p = out[static_cast<std::size_t>(param) / ParamOrdering::kPerPath];
    switch (param % ParamOrdering::kPerPath) {
        case 0: p.tau += delta; break;
        case 1: p.theta_t += delta; break;
        case 2: p.theta_r += delta; break;
        case 3: p.h += std::complex<double>(delta, 0.0); break;
        default: p.h += std::complex<double>(0.0, delta); break;
    }
    return out;
}

} // namespace

PilotConfig PilotConfig::all_ones(int n_tx, int n_subcarriers, int n_symbols) {
    PilotConfig pilots;
    pilots.n_symbols = n_symbols;
    pilots.symbols = Eigen::MatrixXcd::Constant(n_tx, n_subcarriers, {1.0, 0.0});
    return pilots;
}

double PilotConfig::pilot_energy() const {
    return symbols.squaredNorm() * static_cast<double>(n_symbols);
}

void PilotConfig::validate(const ArrayConfig& array, const OfdmConfig& ofdm) const {
    if (n_symbols < 1) throw InvalidConfigError("pilots: n_symbols must be >= 1");
    if (symbols.rows() != array.n_tx || symbols.cols() != ofdm.n_subcarriers)
        throw InvalidConfigError("pilots: symbol matrix must be n_tx x n_subcarriers");
}

Eigen::VectorXcd signal_mean(const std::vector<PathParams>& paths, const ArrayConfig& array,
                             const OfdmConfig& ofdm, const PilotConfig& pilots, int subcarrier) {
    pilots.validate(array, ofdm);
    return channel_matrix(paths, array, ofdm, subcarrier) * pilots.symbols.col(subcarrier);
}

Eigen::MatrixXd fim_eta(const std::vector<PathParams>& paths, const ArrayConfig& array,
                        const OfdmConfig& ofdm, const PilotConfig& pilots, double noise_n0) {
    if (paths.empty()) throw InvalidConfigError("fim_eta: no paths");
    array.validate();
    ofdm.validate();
    pilots.validate(array, ofdm);
    check_noise(noise_n0);

    const int n_paths = static_cast<int>(paths.size());
    const int dim = ParamOrdering::dim(n_paths);
    const double amp = std::sqrt(static_cast<double>(array.n_tx) * array.n_rx);
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(dim, dim);

    for (int i = 0; i < ofdm.n_subcarriers; ++i) {
        const double omega = 2.0 * kPi * i / (ofdm.n_subcarriers * ofdm.sample_period);
        const double lambda = ofdm.wavelength(i);
        const Eigen::VectorXcd x = pilots.symbols.col(i);
        Eigen::MatrixXcd d(array.n_rx, dim);
        for (int k = 0; k < n_paths; ++k) {
            const PathParams& p = paths[static_cast<std::size_t>(k)];
            const Eigen::VectorXcd a_r =
                steering_vector(array.n_rx, array.spacing_d, lambda, p.theta_r);
            const Eigen::VectorXcd da_r =
                steering_vector_dtheta(array.n_rx, array.spacing_d, lambda, p.theta_r);
            const Eigen::VectorXcd a_t =
                steering_vector(array.n_tx, array.spacing_d, lambda, p.theta_t);
            const Eigen::VectorXcd da_t =
                steering_vector_dtheta(array.n_tx, array.spacing_d, lambda, p.theta_t);

            const std::complex<double> phase = amp * std::exp(-kJ * (omega * p.tau));
            const std::complex<double> s = a_t.dot(x);   // a_t^H x
            const std::complex<double> ds = da_t.dot(x); // (d a_t / d theta)^H x
            const Eigen::VectorXcd g = phase * s * a_r;  // column without h

            d.col(ParamOrdering::h_re(k)) = g;
            d.col(ParamOrdering::h_im(k)) = kJ * g;
            d.col(ParamOrdering::tau(k)) = (-kJ * omega) * p.h * g;
            d.col(ParamOrdering::theta_t(k)) = p.h * phase * ds * a_r;
            d.col(ParamOrdering::theta_r(k)) = p.h * phase * s * da_r;
        }
        gram.noalias() += d.adjoint() * d;
    }
    return finalize_fim(gram, noise_n0, pilots.n_symbols);
}

Eigen::MatrixXd fim_eta_numeric(const std::vector<PathParams>& paths, const ArrayConfig& array,
                                const OfdmConfig& ofdm, const PilotConfig& pilots,
                                double noise_n0, double step) {
    if (paths.empty()) throw InvalidConfigError("fim_eta_numeric: no paths");
    if (!(step > 0.0)) throw InvalidConfigError("fim_eta_numeric: step must be positive");
    array.validate();
    ofdm.validate();
    pilots.validate(array, ofdm);
    check_noise(noise_n0);

    const int n_paths = static_cast<int>(paths.size());
    const int dim = ParamOrdering::dim(n_paths);
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(dim, dim);

    for (int i = 0; i < ofdm.n_subcarriers; ++i) {
        Eigen::MatrixXcd d(array.n_rx, dim);
        for (int param = 0; param < dim; ++param) {
            const bool is_delay = param % ParamOrdering::kPerPath == 0;
            const double delta = is_delay ? step * ofdm.sample_period : step;
            const Eigen::VectorXcd mu_plus =
                signal_mean(perturb_param(paths, param, delta), array, ofdm, pilots, i);
            const Eigen::VectorXcd mu_minus =
                signal_mean(perturb_param(paths, param, -delta), array, ofdm, pilots, i);
            d.col(param) = (mu_plus - mu_minus) / (2.0 * delta);
        }
        gram.noalias() += d.adjoint() * d;
    }
    return finalize_fim(gram, noise_n0, pilots.n_symbols);
}

Eigen::MatrixXd transform_matrix(const Scene& scene) {
    scene.validate();
    const int n_paths = scene.n_paths();
    const std::vector<PathParams> paths = path_params_from_geometry(
        scene, std::vector<std::complex<double>>(static_cast<std::size_t>(n_paths), {1.0, 0.0}));

    Eigen::MatrixXd t =
        Eigen::MatrixXd::Zero(LocParamOrdering::dim(n_paths), ParamOrdering::dim(n_paths));

    // LOS path: tau_0 and both angles depend only on the target position.
    {
        const double d0 = distance(scene.ap, scene.target);
        const double th = paths[0].theta_t;
        t(LocParamOrdering::target_x(), ParamOrdering::tau(0)) = std::cos(th) / kSpeedOfLight;
        t(LocParamOrdering::target_y(), ParamOrdering::tau(0)) = std::sin(th) / kSpeedOfLight;
        t(LocParamOrdering::target_x(), ParamOrdering::theta_t(0)) = -std::sin(th) / d0;
        t(LocParamOrdering::target_y(), ParamOrdering::theta_t(0)) = std::cos(th) / d0;
        // theta_r_0 = theta_t_0 + pi, so it shares the same gradient.
        t(LocParamOrdering::target_x(), ParamOrdering::theta_r(0)) = -std::sin(th) / d0;
        t(LocParamOrdering::target_y(), ParamOrdering::theta_r(0)) = std::cos(th) / d0;
    }

    for (int k = 1; k < n_paths; ++k) {
        const Location s = scene.scatterers[static_cast<std::size_t>(k - 1)];
        const double d1 = distance(scene.ap, s);
        const double d2 = distance(s, scene.target);
        const double th_t = paths[static_cast<std::size_t>(k)].theta_t;
        const double th_r = paths[static_cast<std::size_t>(k)].theta_r;

        t(LocParamOrdering::target_x(), ParamOrdering::tau(k)) = -std::cos(th_r) / kSpeedOfLight;
        t(LocParamOrdering::target_y(), ParamOrdering::tau(k)) = -std::sin(th_r) / kSpeedOfLight;
        t(LocParamOrdering::target_x(), ParamOrdering::theta_r(k)) = std::sin(th_r) / d2;
        t(LocParamOrdering::target_y(), ParamOrdering::theta_r(k)) = -std::cos(th_r) / d2;

        t(LocParamOrdering::scatterer_x(k), ParamOrdering::tau(k)) =
            (std::cos(th_t) + std::cos(th_r)) / kSpeedOfLight;
        t(LocParamOrdering::scatterer_y(k), ParamOrdering::tau(k)) =
            (std::sin(th_t) + std::sin(th_r)) / kSpeedOfLight;
        t(LocParamOrdering::scatterer_x(k), ParamOrdering::theta_t(k)) = -std::sin(th_t) / d1;
        t(LocParamOrdering::scatterer_y(k), ParamOrdering::theta_t(k)) = std::cos(th_t) / d1;
        t(LocParamOrdering::scatterer_x(k), ParamOrdering::theta_r(k)) = -std::sin(th_r) / d2;
        t(LocParamOrdering::scatterer_y(k), ParamOrdering::theta_r(k)) = std::cos(th_r) / d2;
    }

    for (int k = 0; k < n_paths; ++k) {
        t(LocParamOrdering::h_re(k), ParamOrdering::h_re(k)) = 1.0;
        t(LocParamOrdering::h_im(k), ParamOrdering::h_im(k)) = 1.0;
    }
    return t;
}

CrlbResult crlb_from_fim_tilde(const Eigen::MatrixXd& j_tilde) {
    if (j_tilde.rows() != j_tilde.cols() || j_tilde.rows() < 2)
        throw InvalidConfigError("crlb_from_fim_tilde: matrix must be square, dim >= 2");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(j_tilde,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0) || sv(0) / smin > kMaxFimCondition)
        throw SingularFimError("information matrix is singular or near-singular (cond > 1e12)");

    const Eigen::MatrixXd inv =
        svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
    CrlbResult result;
    result.position_cov = inv.topLeftCorner<2, 2>();
    result.rmse = std::sqrt(result.position_cov(0, 0) + result.position_cov(1, 1));
    return result;
}

CrlbResult crlb_location(const Scene& scene, const std::vector<std::complex<double>>& coeffs,
                         const PilotConfig& pilots, double noise_n0) {
    const std::vector<PathParams> paths = path_params_from_geometry(scene, coeffs);
    const Eigen::MatrixXd j = fim_eta(paths, scene.array, scene.ofdm, pilots, noise_n0);
    const Eigen::MatrixXd t = transform_matrix(scene);
    Eigen::MatrixXd j_tilde = t * j * t.transpose();
    j_tilde = 0.5 * (j_tilde + j_tilde.transpose()).eval();
    return crlb_from_fim_tilde(j_tilde);
}

void PerturbationPrior::validate() const {
    if (!(sigma_p > 0.0)) throw InvalidConfigError("perturbation prior: sigma_p must be positive");
}

CrlbResult crlb_perturbed(const Scene& scene, const std::vector<std::complex<double>>& coeffs,
                          const PilotConfig& pilots, double noise_n0,
                          const PerturbationPrior& prior) {
    prior.validate();
    const std::vector<PathParams> paths = path_params_from_geometry(scene, coeffs);
    const Eigen::MatrixXd j = fim_eta(paths, scene.array, scene.ofdm, pilots, noise_n0);
    const Eigen::MatrixXd t = transform_matrix(scene);
    Eigen::MatrixXd j_tilde = t * j * t.transpose();
    j_tilde = 0.5 * (j_tilde + j_tilde.transpose()).eval();
    const double inv_var = 1.0 / (prior.sigma_p * prior.sigma_p);
    j_tilde(0, 0) += inv_var;
    j_tilde(1, 1) += inv_var;
    return crlb_from_fim_tilde(j_tilde);
}

} // namespace csiloc
