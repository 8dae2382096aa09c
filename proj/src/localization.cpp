#include "csiloc/localization.hpp"

#include "csiloc/binio.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace csiloc {

namespace {

const std::complex<double> kJ(0.0, 1.0);

Eigen::MatrixXd infer(Network& net, const Eigen::MatrixXd& windows) {
    if (windows.rows() == 0) throw InvalidConfigError("localize: no windows");
    const bool was_train = net.train_mode();
    net.set_train(false);
    Eigen::MatrixXd out = net.forward(windows);
    net.set_train(was_train);
    return out;
}

// --- SIC internals -------------------------------------------------------

struct SicEngine {
    const ArrayConfig& array;
    const OfdmConfig& ofdm;
    std::vector<double> omega;  // per-subcarrier delay-phase rate
    std::vector<double> lambda; // per-subcarrier wavelength

    SicEngine(const ArrayConfig& a, const OfdmConfig& o) : array(a), ofdm(o) {
        omega.resize(static_cast<std::size_t>(o.n_subcarriers));
        lambda.resize(static_cast<std::size_t>(o.n_subcarriers));
        for (int i = 0; i < o.n_subcarriers; ++i) {
            omega[static_cast<std::size_t>(i)] =
                2.0 * kPi * i / (o.n_subcarriers * o.sample_period);
            lambda[static_cast<std::size_t>(i)] = o.wavelength(i);
        }
    }

    int n_sc() const { return ofdm.n_subcarriers; }

    // b_i(theta) = a_i(theta)^H r_i for every subcarrier.
    Eigen::VectorXcd project_angle(const Eigen::MatrixXcd& r, double theta) const {
        Eigen::VectorXcd b(n_sc());
        for (int i = 0; i < n_sc(); ++i) {
            const Eigen::VectorXcd a = steering_vector(array.n_rx, array.spacing_d,
                                                       lambda[static_cast<std::size_t>(i)], theta);
            b(i) = a.dot(r.col(i));
        }
        return b;
    }

    std::complex<double> corr_from_b(const Eigen::VectorXcd& b, double tau) const {
        std::complex<double> c{0.0, 0.0};
        for (int i = 0; i < n_sc(); ++i)
            c += b(i) * std::exp(kJ * (omega[static_cast<std::size_t>(i)] * tau));
        return c;
    }

    std::complex<double> corr(const Eigen::MatrixXcd& r, double tau, double theta) const {
        return corr_from_b(project_angle(r, theta), tau);
    }

    // Power explained by the best-fit single path at (tau, theta):
    // |<g, r>|^2 / ||g||^2 with ||g||^2 = n_sc (unit-norm steering vectors).
    double score(const Eigen::MatrixXcd& r, double tau, double theta) const {
        return std::norm(corr(r, tau, theta)) / n_sc();
    }

    Eigen::MatrixXcd path_template(double tau, double theta) const {
        Eigen::MatrixXcd g(array.n_rx, n_sc());
        for (int i = 0; i < n_sc(); ++i)
            g.col(i) =
                steering_vector(array.n_rx, array.spacing_d,
                                lambda[static_cast<std::size_t>(i)], theta) *
                std::exp(-kJ * (omega[static_cast<std::size_t>(i)] * tau));
        return g;
    }
};

template <typename F>
double golden_max(F&& f, double lo, double hi, int iters = 90) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo;
    double b = hi;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        }
    }
    return 0.5 * (a + b);
}

struct PeakEstimate {
    double tau = 0.0;
    double theta = 0.0;
    double score = 0.0;
};

PeakEstimate coarse_search(const SicEngine& eng, const Eigen::MatrixXcd& r,
                           const SicConfig& cfg) {
    PeakEstimate best;
    best.score = -1.0;
    const int n_theta =
        static_cast<int>(std::floor((cfg.theta_max - cfg.theta_min) / cfg.theta_step)) + 1;
    const int n_tau =
        static_cast<int>(std::floor((cfg.tau_max - cfg.tau_min) / cfg.tau_step)) + 1;
    for (int it = 0; it < n_theta; ++it) {
        const double theta = cfg.theta_min + it * cfg.theta_step;
        const Eigen::VectorXcd b = eng.project_angle(r, theta);
        for (int is = 0; is < n_tau; ++is) {
            const double tau = cfg.tau_min + is * cfg.tau_step;
            const double s = std::norm(eng.corr_from_b(b, tau)) / eng.n_sc();
            if (s > best.score) best = {tau, theta, s};
        }
    }
    return best;
}

// Refined grid around the coarse peak, then alternating 1-D golden sections.
PeakEstimate polish_peak(const SicEngine& eng, const Eigen::MatrixXcd& r, const SicConfig& cfg,
                         PeakEstimate peak, double tau_window, double theta_window) {
    const double tau_fine = tau_window / cfg.refine_factor;
    const double theta_fine = theta_window / cfg.refine_factor;
    PeakEstimate best = peak;
    for (int i = -cfg.refine_factor; i <= cfg.refine_factor; ++i) {
        const double tau = peak.tau + i * tau_fine;
        if (tau < cfg.tau_min || tau > cfg.tau_max) continue;
        for (int j = -cfg.refine_factor; j <= cfg.refine_factor; ++j) {
            const double theta =
                std::clamp(peak.theta + j * theta_fine, cfg.theta_min, cfg.theta_max);
            const double s = eng.score(r, tau, theta);
            if (s > best.score) best = {tau, theta, s};
        }
    }
    // Alternate 1-D golden sections until the joint (tau, theta) optimum stops
    // moving; a fixed small round count stalls short of machine precision when
    // the two coordinates are coupled.
    double prev_score = -1.0;
    for (int round = 0; round < 24; ++round) {
        best.tau = golden_max(
            [&](double t) { return eng.score(r, t, best.theta); },
            std::max(cfg.tau_min, best.tau - tau_fine),
            std::min(cfg.tau_max, best.tau + tau_fine));
        best.theta = golden_max(
            [&](double th) { return eng.score(r, best.tau, th); },
            std::max(cfg.theta_min, best.theta - theta_fine),
            std::min(cfg.theta_max, best.theta + theta_fine));
        best.score = eng.score(r, best.tau, best.theta);
        if (best.score - prev_score <= 1e-15 * best.score) break;
        prev_score = best.score;
    }
    return best;
}

// Jointly refit all coefficients by least squares against the full snapshot.
void refit_amplitudes(const SicEngine& eng, const Eigen::MatrixXcd& snapshot,
                      std::vector<SicPath>& paths) {
    const Eigen::Index dim = snapshot.size();
    Eigen::MatrixXcd basis(dim, static_cast<Eigen::Index>(paths.size()));
    for (std::size_t k = 0; k < paths.size(); ++k) {
        const Eigen::MatrixXcd g = eng.path_template(paths[k].tau, paths[k].theta);
        basis.col(static_cast<Eigen::Index>(k)) = Eigen::Map<const Eigen::VectorXcd>(g.data(), dim);
    }
    const Eigen::Map<const Eigen::VectorXcd> y(snapshot.data(), dim);
    const Eigen::VectorXcd h = basis.colPivHouseholderQr().solve(y);
    for (std::size_t k = 0; k < paths.size(); ++k)
        paths[k].h = h(static_cast<Eigen::Index>(k));
}

Eigen::MatrixXcd reconstruct(const SicEngine& eng, const std::vector<SicPath>& paths,
                             const std::vector<SicPath>* skip_one, std::size_t skip_idx,
                             Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(rows, cols);
    for (std::size_t k = 0; k < paths.size(); ++k) {
        if (skip_one && k == skip_idx) continue;
        sum += paths[k].h * eng.path_template(paths[k].tau, paths[k].theta);
    }
    return sum;
}

// Damped Gauss-Newton over all (tau, theta) jointly, coefficients eliminated
// by least squares at every trial point. Coordinate-wise refinement alone
// zigzags when path delays sit well inside one delay-resolution cell; this
// endgame converges the exactly-modelled case to the round-off floor.
void gauss_newton_polish(const SicEngine& eng, const Eigen::MatrixXcd& snapshot,
                         std::vector<SicPath>& paths, const SicConfig& cfg) {
    if (paths.empty()) return;
    const Eigen::Index m = snapshot.size();
    const int n_params = 2 * static_cast<int>(paths.size());

    auto residual_of = [&](const std::vector<SicPath>& ps) -> Eigen::MatrixXcd {
        return snapshot - reconstruct(eng, ps, nullptr, 0, snapshot.rows(), snapshot.cols());
    };

    refit_amplitudes(eng, snapshot, paths);
    Eigen::MatrixXcd r = residual_of(paths);
    double cost = r.squaredNorm();
    double lambda = 1e-6;

    for (int iter = 0; iter < 60; ++iter) {
        if (cost <= 1e-26 * snapshot.squaredNorm()) break;

        Eigen::MatrixXcd jac(m, n_params);
        for (std::size_t k = 0; k < paths.size(); ++k) {
            Eigen::MatrixXcd dtau(snapshot.rows(), eng.n_sc());
            Eigen::MatrixXcd dtheta(snapshot.rows(), eng.n_sc());
            for (int i = 0; i < eng.n_sc(); ++i) {
                const double w = eng.omega[static_cast<std::size_t>(i)];
                const double wl = eng.lambda[static_cast<std::size_t>(i)];
                const std::complex<double> rot = std::exp(-kJ * (w * paths[k].tau));
                const Eigen::VectorXcd a =
                    steering_vector(eng.array.n_rx, eng.array.spacing_d, wl, paths[k].theta);
                const Eigen::VectorXcd da =
                    steering_vector_dtheta(eng.array.n_rx, eng.array.spacing_d, wl,
                                           paths[k].theta);
                dtau.col(i) = a * (-kJ * w) * rot;
                dtheta.col(i) = da * rot;
            }
            // r = y - sum_k h_k g_k, so dr/dtau_k = -h_k dg_k/dtau_k.
            jac.col(2 * static_cast<Eigen::Index>(k)) =
                -paths[k].h * Eigen::Map<const Eigen::VectorXcd>(dtau.data(), m);
            jac.col(2 * static_cast<Eigen::Index>(k) + 1) =
                -paths[k].h * Eigen::Map<const Eigen::VectorXcd>(dtheta.data(), m);
        }

        const Eigen::Map<const Eigen::VectorXcd> rv(r.data(), m);
        const Eigen::MatrixXd a = (jac.adjoint() * jac).real();
        const Eigen::VectorXd g = (jac.adjoint() * rv).real();

        bool accepted = false;
        for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * a.diagonal().cwiseMax(1e-30);
            const Eigen::VectorXd delta = damped.ldlt().solve(-g);

            std::vector<SicPath> trial = paths;
            for (std::size_t k = 0; k < trial.size(); ++k) {
                trial[k].tau = std::clamp(paths[k].tau + delta(2 * static_cast<Eigen::Index>(k)),
                                          cfg.tau_min, cfg.tau_max);
                trial[k].theta =
                    std::clamp(paths[k].theta + delta(2 * static_cast<Eigen::Index>(k) + 1),
                               cfg.theta_min, cfg.theta_max);
            }
            refit_amplitudes(eng, snapshot, trial);
            const Eigen::MatrixXcd rt = residual_of(trial);
            const double trial_cost = rt.squaredNorm();
            if (trial_cost < cost) {
                paths = std::move(trial);
                r = rt;
                const double drop = cost - trial_cost;
                cost = trial_cost;
                lambda = std::max(lambda * 0.25, 1e-12);
                accepted = true;
                if (drop <= 1e-16 * snapshot.squaredNorm()) return;
            } else {
                lambda *= 4.0;
            }
        }
        if (!accepted) break;
    }
}

} // namespace

Prediction knn_localize(const FingerprintDataset& dataset, const std::vector<double>& query,
                        int k) {
    const int n = dataset.n_samples();
    if (n == 0) throw InvalidConfigError("knn: empty dataset");
    if (k < 1 || k > n) throw InvalidConfigError("knn: k must be in [1, n_samples]");
    if (static_cast<int>(query.size()) != dataset.mlp_dim())
        throw InvalidConfigError("knn: query feature length mismatch");

    std::vector<std::pair<double, int>> distances(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const std::vector<double>& v = dataset.samples[static_cast<std::size_t>(s)].mlp_vector;
        double d2 = 0.0;
        for (std::size_t f = 0; f < query.size(); ++f) {
            const double d = v[f] - query[f];
            d2 += d * d;
        }
        distances[static_cast<std::size_t>(s)] = {d2, s};
    }
    std::partial_sort(distances.begin(), distances.begin() + k, distances.end());

    Location centroid{0.0, 0.0};
    for (int i = 0; i < k; ++i) {
        const Location l =
            dataset.samples[static_cast<std::size_t>(distances[static_cast<std::size_t>(i)].second)]
                .label;
        centroid.x += l.x;
        centroid.y += l.y;
    }
    centroid.x /= k;
    centroid.y /= k;
    return {centroid, PredictionSource::knn, {}};
}

std::vector<Prediction> per_window_classify(Network& net, const Eigen::MatrixXd& windows,
                                            const RpGrid& grid) {
    grid.validate();
    if (net.n_layers() == 0 ||
        net.layer(net.n_layers() - 1).kind() != LayerKind::softmax)
        throw InvalidConfigError("classify: network head must be softmax");
    if (net.output_shape().flat() != grid.n_rps())
        throw InvalidConfigError("classify: network output size does not match RP count");

    const Eigen::MatrixXd probs = infer(net, windows);
    std::vector<Prediction> preds(static_cast<std::size_t>(probs.rows()));
    for (Eigen::Index w = 0; w < probs.rows(); ++w) {
        Prediction& p = preds[static_cast<std::size_t>(w)];
        p.source = PredictionSource::classifier;
        p.likelihoods.resize(static_cast<std::size_t>(probs.cols()));
        Location loc{0.0, 0.0};
        for (Eigen::Index i = 0; i < probs.cols(); ++i) {
            const double pi = probs(w, i);
            p.likelihoods[static_cast<std::size_t>(i)] = pi;
            loc.x += pi * grid.rp_locations[static_cast<std::size_t>(i)].x;
            loc.y += pi * grid.rp_locations[static_cast<std::size_t>(i)].y;
        }
        p.location = loc;
    }
    return preds;
}

Prediction classify_localize(Network& net, const Eigen::MatrixXd& windows, const RpGrid& grid) {
    const std::vector<Prediction> preds = per_window_classify(net, windows, grid);
    Prediction fused;
    fused.source = PredictionSource::classifier;
    fused.location = fuse_average(preds);
    fused.likelihoods.assign(preds.front().likelihoods.size(), 0.0);
    for (const Prediction& p : preds)
        for (std::size_t i = 0; i < fused.likelihoods.size(); ++i)
            fused.likelihoods[i] += p.likelihoods[i];
    for (double& v : fused.likelihoods) v /= static_cast<double>(preds.size());
    return fused;
}

std::vector<Prediction> per_window_regress(Network& net, const Eigen::MatrixXd& windows) {
    if (net.n_layers() > 0 && net.layer(net.n_layers() - 1).kind() == LayerKind::softmax)
        throw InvalidConfigError("regress: network head must not be softmax");
    if (net.output_shape().flat() != 2)
        throw InvalidConfigError("regress: network must output 2 coordinates");

    const Eigen::MatrixXd out = infer(net, windows);
    std::vector<Prediction> preds(static_cast<std::size_t>(out.rows()));
    for (Eigen::Index w = 0; w < out.rows(); ++w)
        preds[static_cast<std::size_t>(w)] = {{out(w, 0), out(w, 1)},
                                              PredictionSource::regressor,
                                              {}};
    return preds;
}

Prediction regress_localize(Network& net, const Eigen::MatrixXd& windows, const Rect& area) {
    const std::vector<Prediction> preds = per_window_regress(net, windows);
    return {area.clamp(fuse_average(preds)), PredictionSource::regressor, {}};
}

Location fuse_average(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw InvalidConfigError("fuse_average: empty input");
    Location mean{0.0, 0.0};
    for (const Prediction& p : predictions) {
        mean.x += p.location.x;
        mean.y += p.location.y;
    }
    mean.x /= static_cast<double>(predictions.size());
    mean.y /= static_cast<double>(predictions.size());
    return mean;
}

OutlierResult remove_outliers(const PredictionGroup& group, double delta_th) {
    const int n = group.group_size();
    if (n < 2) throw InvalidConfigError("remove_outliers: group size must be >= 2");
    if (!(delta_th > 0.0)) throw InvalidConfigError("remove_outliers: delta_th must be positive");

    double mx = 0.0;
    double my = 0.0;
    for (const Prediction& p : group.members) {
        mx += p.location.x;
        my += p.location.y;
    }
    mx /= n;
    my /= n;
    double vx = 0.0;
    double vy = 0.0;
    for (const Prediction& p : group.members) {
        vx += (p.location.x - mx) * (p.location.x - mx);
        vy += (p.location.y - my) * (p.location.y - my);
    }
    const double sx = std::sqrt(vx / n);
    const double sy = std::sqrt(vy / n);

    OutlierResult result;
    for (int i = 0; i < n; ++i) {
        const Prediction& p = group.members[static_cast<std::size_t>(i)];
        const bool out_x = sx > 0.0 && std::abs(p.location.x - mx) / sx > delta_th;
        const bool out_y = sy > 0.0 && std::abs(p.location.y - my) / sy > delta_th;
        if (out_x && out_y)
            result.removed_indices.push_back(i);
        else
            result.kept.members.push_back(p);
    }
    // Impossible for delta_th >= 1: the normalized deviations of any axis have
    // mean square 1, so at most a strict subset can exceed the threshold.
    if (result.kept.members.empty())
        throw std::runtime_error("remove_outliers: every member was rejected");
    result.fused = fuse_average(result.kept.members);
    return result;
}

void SicConfig::validate() const {
    if (!(tau_step > 0.0) || !(theta_step > 0.0))
        throw InvalidConfigError("sic: grid steps must be positive");
    if (!(tau_max > tau_min) || tau_min < 0.0)
        throw InvalidConfigError("sic: need 0 <= tau_min < tau_max");
    if (!(theta_max > theta_min))
        throw InvalidConfigError("sic: need theta_min < theta_max");
    if (!(noise_floor >= 0.0)) throw InvalidConfigError("sic: noise_floor must be >= 0");
    if (max_paths < 1) throw InvalidConfigError("sic: max_paths must be >= 1");
    if (refine_factor < 1) throw InvalidConfigError("sic: refine_factor must be >= 1");
    if (polish_rounds < 0) throw InvalidConfigError("sic: polish_rounds must be >= 0");
}

SicResult sic_localize(const Eigen::MatrixXcd& snapshot, const ArrayConfig& array,
                       const OfdmConfig& ofdm, Location ap, const SicConfig& config) {
    config.validate();
    array.validate();
    ofdm.validate();
    if (array.n_rx < 2)
        throw InvalidConfigError("sic: angle estimation needs at least 2 antennas");
    if (snapshot.rows() != array.n_rx || snapshot.cols() != ofdm.n_subcarriers)
        throw InvalidConfigError("sic: snapshot must be n_rx x n_subcarriers");

    const SicEngine eng(array, ofdm);
    SicResult result;
    result.initial_power = snapshot.squaredNorm();

    // Greedy extraction interleaved with joint refinement: after adding each
    // path, every path is re-searched over the full grid against the snapshot
    // minus the current estimate of the others and all coefficients are refit
    // jointly. Closely spaced paths that a single matched-filter peak cannot
    // separate migrate to their true parameters this way instead of leaving
    // energy behind for spurious extractions.
    // The configured floor is absolute; additionally stop once the residual is
    // at the relative round-off floor of the input so an exactly explained
    // snapshot does not trigger ghost extractions.
    const double stop_power = std::max(config.noise_floor, 1e-14 * result.initial_power);

    Eigen::MatrixXcd residual = snapshot;
    std::vector<SicPath> paths;
    while (static_cast<int>(paths.size()) < config.max_paths &&
           residual.squaredNorm() > stop_power) {
        PeakEstimate peak = coarse_search(eng, residual, config);
        peak = polish_peak(eng, residual, config, peak, config.tau_step, config.theta_step);
        if (peak.score <= stop_power) break;

        SicPath path;
        path.tau = peak.tau;
        path.theta = peak.theta;
        paths.push_back(path);
        refit_amplitudes(eng, snapshot, paths);

        double prev_power = std::numeric_limits<double>::infinity();
        for (int round = 0; round < config.polish_rounds; ++round) {
            for (std::size_t k = 0; k < paths.size(); ++k) {
                const Eigen::MatrixXcd target =
                    snapshot - reconstruct(eng, paths, &paths, k, snapshot.rows(), snapshot.cols());
                PeakEstimate cur = coarse_search(eng, target, config);
                cur = polish_peak(eng, target, config, cur, config.tau_step, config.theta_step);
                paths[k].tau = cur.tau;
                paths[k].theta = cur.theta;
                refit_amplitudes(eng, snapshot, paths);
            }
            const double power =
                (snapshot - reconstruct(eng, paths, nullptr, 0, snapshot.rows(), snapshot.cols()))
                    .squaredNorm();
            if (power <= config.noise_floor ||
                prev_power - power <= 1e-15 * result.initial_power) {
                break;
            }
            prev_power = power;
        }
        gauss_newton_polish(eng, snapshot, paths, config);
        residual = snapshot - reconstruct(eng, paths, nullptr, 0, snapshot.rows(), snapshot.cols());
        result.residual_history.push_back(residual.squaredNorm());
    }
    if (paths.empty())
        throw NoPathFoundError("sic: no correlation peak rises above the noise floor");

    // Drop numerically insignificant ghosts (more than 60 dB below the
    // strongest path) so the minimum-delay rule picks a physical path.
    double max_path_power = 0.0;
    for (const SicPath& p : paths) max_path_power = std::max(max_path_power, std::norm(p.h));
    std::vector<SicPath> significant;
    for (const SicPath& p : paths)
        if (std::norm(p.h) >= 1e-6 * max_path_power) significant.push_back(p);
    if (significant.size() < paths.size()) {
        paths = std::move(significant);
        refit_amplitudes(eng, snapshot, paths);
        residual = snapshot - reconstruct(eng, paths, nullptr, 0, snapshot.rows(), snapshot.cols());
    }

    result.residual_power = residual.squaredNorm();
    result.paths = paths;

    const SicPath& los = *std::min_element(
        paths.begin(), paths.end(),
        [](const SicPath& a, const SicPath& b) { return a.tau < b.tau; });
    const Location direct = location_from_los(ap, los.tau, los.theta);
    const Location mirror = location_from_los(ap, los.tau, wrap_angle(kPi - los.theta));
    Location chosen = direct;
    if (config.has_area && !config.area.contains(direct) && config.area.contains(mirror))
        chosen = mirror;
    result.prediction = {chosen, PredictionSource::sic, {}};
    return result;
}

EvalReport evaluate(const std::vector<Location>& predictions,
                    const std::vector<Location>& truths) {
    if (predictions.empty() || predictions.size() != truths.size())
        throw InvalidConfigError("evaluate: prediction/truth lists must be nonempty and equal");

    EvalReport report;
    report.errors.resize(predictions.size());
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        report.errors[i] = distance(predictions[i], truths[i]);
        total += report.errors[i];
    }
    report.mean_distance_error = total / static_cast<double>(predictions.size());

    std::vector<double> sorted = report.errors;
    std::sort(sorted.begin(), sorted.end());
    report.median_distance_error = sorted[(sorted.size() - 1) / 2];
    report.cdf.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        report.cdf.emplace_back(sorted[i],
                                static_cast<double>(i + 1) / static_cast<double>(sorted.size()));
    return report;
}

std::string eval_report_json(const EvalReport& report) {
    nlohmann::json j;
    j["n_samples"] = report.errors.size();
    j["mean_distance_error"] = report.mean_distance_error;
    j["median_distance_error"] = report.median_distance_error;
    nlohmann::json cdf = nlohmann::json::array();
    for (const auto& [err, frac] : report.cdf) cdf.push_back({err, frac});
    j["cdf"] = cdf;
    return j.dump(2) + "\n";
}

void save_eval_report_json(const EvalReport& report, const std::string& path) {
    write_file_text(path, eval_report_json(report));
}

void export_errors_csv(const EvalReport& report, const std::string& path) {
    std::string text = "index,error\n";
    for (std::size_t i = 0; i < report.errors.size(); ++i)
        text += std::to_string(i) + "," + format_g17(report.errors[i]) + "\n";
    write_file_text(path, text);
}

} // namespace csiloc
