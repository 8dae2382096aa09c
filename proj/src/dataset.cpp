#include "csiloc/dataset.hpp"

#include "csiloc/binio.hpp"

#include <algorithm>
#include <cmath>

namespace csiloc {

namespace {

constexpr char kDatasetMagic[8] = {'C', 'S', 'I', 'L', 'O', 'C', 'D', 'S'};
constexpr std::uint32_t kDatasetVersion = 1;
constexpr double kUnwrapAmbiguityTol = 1e-6; // jump this close to pi is flagged
constexpr double kMinStd = 1e-12;

void check_finite_range(double v, const char* what) {
    if (!std::isfinite(v) || v < 0.0)
        throw InvalidConfigError(std::string("measurement: ") + what +
                                 " must be finite and >= 0");
}

FeatureStats stats_over(const FingerprintDataset& dataset, bool mlp) {
    const int dim = mlp ? dataset.mlp_dim() : dataset.cnn_dim();
    FeatureStats stats;
    stats.mean.assign(static_cast<std::size_t>(dim), 0.0);
    stats.stddev.assign(static_cast<std::size_t>(dim), 1.0);
    if (dataset.samples.empty()) return stats;

    const double n = static_cast<double>(dataset.samples.size());
    for (const FeatureSample& s : dataset.samples) {
        const std::vector<double>& v = mlp ? s.mlp_vector : s.cnn_tensor;
        if (static_cast<int>(v.size()) != dim)
            throw InvalidConfigError("stats: inconsistent feature dimensions");
        for (int f = 0; f < dim; ++f) stats.mean[static_cast<std::size_t>(f)] += v[f];
    }
    for (double& m : stats.mean) m /= n;
    std::vector<double> var(static_cast<std::size_t>(dim), 0.0);
    for (const FeatureSample& s : dataset.samples) {
        const std::vector<double>& v = mlp ? s.mlp_vector : s.cnn_tensor;
        for (int f = 0; f < dim; ++f) {
            const double d = v[f] - stats.mean[static_cast<std::size_t>(f)];
            var[static_cast<std::size_t>(f)] += d * d;
        }
    }
    for (int f = 0; f < dim; ++f) {
        const double sd = std::sqrt(var[static_cast<std::size_t>(f)] / n);
        stats.stddev[static_cast<std::size_t>(f)] = sd < kMinStd ? 1.0 : sd;
    }
    return stats;
}

Eigen::MatrixXd feature_matrix(const FingerprintDataset& dataset, bool mlp,
                               const FeatureStats* stats) {
    const int dim = mlp ? dataset.mlp_dim() : dataset.cnn_dim();
    if (stats && (static_cast<int>(stats->mean.size()) != dim ||
                  static_cast<int>(stats->stddev.size()) != dim))
        throw InvalidConfigError("standardize: stats dimension mismatch");
    Eigen::MatrixXd m(dataset.n_samples(), dim);
    for (int r = 0; r < dataset.n_samples(); ++r) {
        const std::vector<double>& v =
            mlp ? dataset.samples[static_cast<std::size_t>(r)].mlp_vector
                : dataset.samples[static_cast<std::size_t>(r)].cnn_tensor;
        if (static_cast<int>(v.size()) != dim)
            throw InvalidConfigError("feature matrix: inconsistent feature dimensions");
        for (int f = 0; f < dim; ++f) {
            const auto fi = static_cast<std::size_t>(f);
            m(r, f) = stats ? (v[fi] - stats->mean[fi]) / stats->stddev[fi] : v[fi];
        }
    }
    return m;
}

void check_window_records(const std::vector<CsiRecord>& window) {
    const CsiRecord& first = window.front();
    for (const CsiRecord& r : window) {
        if (!r.calibrated)
            throw InvalidConfigError("features: window contains uncalibrated records");
        if (r.n_subcarriers != first.n_subcarriers || r.n_rx != first.n_rx)
            throw InvalidConfigError("features: window mixes record shapes");
    }
}

FeatureSample make_sample(const std::vector<CsiRecord>& window, int n_win, Location label,
                          Location gen, int rp_index) {
    FeatureSample fs;
    fs.mlp_vector = extract_features_mlp(window);
    fs.cnn_tensor = extract_features_cnn(window, n_win);
    fs.label = label;
    fs.gen_location = gen;
    fs.rp_index = rp_index;
    return fs;
}

void put_stats(ByteWriter& w, const FeatureStats& stats) {
    if (stats.mean.size() != stats.stddev.size())
        throw InvalidConfigError("save_dataset: malformed stats");
    w.put_u32(static_cast<std::uint32_t>(stats.mean.size()));
    for (double v : stats.mean) w.put_f64(v);
    for (double v : stats.stddev) w.put_f64(v);
}

FeatureStats get_stats(ByteReader& r) {
    const std::uint32_t dim = r.get_u32();
    FeatureStats stats;
    stats.mean.resize(dim);
    stats.stddev.resize(dim);
    for (double& v : stats.mean) v = r.get_f64();
    for (double& v : stats.stddev) v = r.get_f64();
    return stats;
}

} // namespace

void MeasurementModel::validate() const {
    check_finite_range(noise_n0, "noise_n0");
    check_finite_range(delta_max, "delta_max");
    check_finite_range(z_max, "z_max");
}

void RpGrid::validate() const {
    if (rp_locations.empty()) throw InvalidConfigError("grid: needs at least one RP");
    for (std::size_t i = 0; i < rp_locations.size(); ++i) {
        if (!area.contains(rp_locations[i]))
            throw InvalidConfigError("grid: RP " + std::to_string(i) + " outside area");
    }
}

RpGrid RpGrid::make_interior_grid(const Rect& area, double spacing) {
    if (!(spacing > 0.0)) throw InvalidConfigError("grid: spacing must be positive");
    if (!(area.width() > 0.0) || !(area.height() > 0.0))
        throw InvalidConfigError("grid: area must have positive extent");
    const auto axis_count = [spacing](double extent) {
        return std::max(1L, std::lround(extent / spacing) - 2);
    };
    const long nx = axis_count(area.width());
    const long ny = axis_count(area.height());
    RpGrid grid;
    grid.grid_spacing = spacing;
    grid.area = area;
    const double x0 = area.x_min + 0.5 * (area.width() - static_cast<double>(nx - 1) * spacing);
    const double y0 = area.y_min + 0.5 * (area.height() - static_cast<double>(ny - 1) * spacing);
    grid.rp_locations.reserve(static_cast<std::size_t>(nx * ny));
    for (long iy = 0; iy < ny; ++iy)
        for (long ix = 0; ix < nx; ++ix)
            grid.rp_locations.push_back(
                {x0 + static_cast<double>(ix) * spacing, y0 + static_cast<double>(iy) * spacing});
    grid.validate();
    return grid;
}

std::vector<CsiRecord> simulate_csi(const Scene& scene, const std::vector<PathParams>& paths,
                                    const MeasurementModel& model, int n_symbols, Rng& rng) {
    scene.validate();
    model.validate();
    if (paths.empty()) throw InvalidConfigError("simulate_csi: no paths");
    if (n_symbols < 1) throw InvalidConfigError("simulate_csi: n_symbols must be >= 1");
    if (scene.array.n_tx != 1)
        throw InvalidConfigError("simulate_csi: CSI records are single-TX (n_tx must be 1)");

    const int nsc = scene.ofdm.n_subcarriers;
    const int nrx = scene.array.n_rx;

    // Block fading: the noiseless response is shared by every symbol.
    Eigen::MatrixXcd clean(nrx, nsc);
    for (int i = 0; i < nsc; ++i)
        clean.col(i) = channel_matrix(paths, scene.array, scene.ofdm, i).col(0);

    const double noise_std = std::sqrt(0.5 * model.noise_n0); // per real component
    std::vector<CsiRecord> records(static_cast<std::size_t>(n_symbols));
    for (int n = 0; n < n_symbols; ++n) {
        CsiRecord& rec = records[static_cast<std::size_t>(n)];
        rec.n_subcarriers = nsc;
        rec.n_rx = nrx;
        rec.symbol_index = n;
        rec.true_location = scene.target;
        rec.amplitudes.resize(static_cast<std::size_t>(nsc) * nrx);
        rec.phases_raw.resize(static_cast<std::size_t>(nsc) * nrx);

        const double delta = rng.uniform(-model.delta_max, model.delta_max);
        const double z = model.z_max == 0.0 ? 0.0
                                            : -model.z_max + 2.0 * model.z_max * rng.uniform_pos();
        for (int i = 0; i < nsc; ++i) {
            const double impair = -2.0 * kPi * i * delta / scene.ofdm.fft_size + z;
            const std::complex<double> rot(std::cos(impair), std::sin(impair));
            for (int rx = 0; rx < nrx; ++rx) {
                std::complex<double> v = clean(rx, i);
                if (model.noise_n0 > 0.0)
                    v += std::complex<double>(rng.normal(0.0, noise_std),
                                              rng.normal(0.0, noise_std));
                v *= rot;
                rec.amplitudes[rec.flat(i, rx)] = std::abs(v);
                rec.phases_raw[rec.flat(i, rx)] = std::arg(v);
            }
        }
    }
    return records;
}

std::vector<CsiRecord> simulate_csi(const Scene& scene, const MeasurementModel& model,
                                    int n_symbols) {
    const auto coeffs = default_path_coeffs(scene.n_paths(), model.rng_seed);
    const auto paths = path_params_from_geometry(scene, coeffs);
    Rng rng(model.rng_seed, 1);
    return simulate_csi(scene, paths, model, n_symbols, rng);
}

CsiRecord calibrate_phase(const CsiRecord& record, int n_fft) {
    if (record.n_subcarriers < 2)
        throw InvalidConfigError("calibrate_phase: need at least 2 subcarriers");
    if (record.n_rx < 1) throw InvalidConfigError("calibrate_phase: need at least 1 antenna");
    if (n_fft < 2) throw InvalidConfigError("calibrate_phase: n_fft must be >= 2");

    const int nsc = record.n_subcarriers;
    const int nrx = record.n_rx;
    bool flagged = false;
    const auto track_jump = [&flagged](double jump) {
        if (std::abs(jump) > kPi - kUnwrapAmbiguityTol) flagged = true;
        return jump;
    };

    // Unwrap along subcarriers per antenna. Antenna anchors are chained at
    // subcarrier 0 so a packet-wide phase offset cannot slip antennas by
    // different multiples of 2*pi (ULA spacing keeps true offsets under pi).
    std::vector<double> unwrapped(static_cast<std::size_t>(nsc) * nrx);
    for (int rx = 0; rx < nrx; ++rx) {
        double anchor = record.phase_raw(0, rx);
        if (rx > 0) {
            const double prev_anchor = unwrapped[record.flat(0, rx - 1)];
            anchor = prev_anchor + track_jump(wrap_angle(anchor - prev_anchor));
        }
        unwrapped[record.flat(0, rx)] = anchor;
        double prev = anchor;
        for (int sc = 1; sc < nsc; ++sc) {
            prev += track_jump(wrap_angle(record.phase_raw(sc, rx) - prev));
            unwrapped[record.flat(sc, rx)] = prev;
        }
    }

    // Least-squares line on the antenna-mean phase against subcarrier index.
    const double i_bar = 0.5 * static_cast<double>(nsc - 1);
    double m_bar = 0.0;
    std::vector<double> mean_phase(static_cast<std::size_t>(nsc), 0.0);
    for (int sc = 0; sc < nsc; ++sc) {
        double acc = 0.0;
        for (int rx = 0; rx < nrx; ++rx) acc += unwrapped[record.flat(sc, rx)];
        mean_phase[static_cast<std::size_t>(sc)] = acc / nrx;
        m_bar += mean_phase[static_cast<std::size_t>(sc)];
    }
    m_bar /= nsc;
    double sxx = 0.0;
    double sxy = 0.0;
    for (int sc = 0; sc < nsc; ++sc) {
        const double di = static_cast<double>(sc) - i_bar;
        sxx += di * di;
        sxy += di * (mean_phase[static_cast<std::size_t>(sc)] - m_bar);
    }
    const double a = sxy / sxx;
    const double b = m_bar - a * i_bar;

    CsiRecord out = record;
    out.phases_calibrated.resize(unwrapped.size());
    for (int sc = 0; sc < nsc; ++sc)
        for (int rx = 0; rx < nrx; ++rx)
            out.phases_calibrated[out.flat(sc, rx)] =
                unwrapped[out.flat(sc, rx)] - a * sc - b;
    out.calibrated = true;
    out.delta_hat = -a * n_fft / (2.0 * kPi);
    out.unwrap_flagged = flagged;
    return out;
}

std::vector<double> extract_features_mlp(const std::vector<CsiRecord>& window) {
    if (window.empty()) throw InvalidConfigError("features: empty window");
    check_window_records(window);
    const CsiRecord& first = window.front();
    const std::size_t block = static_cast<std::size_t>(first.n_subcarriers) * first.n_rx;
    std::vector<double> v(2 * block, 0.0);
    for (const CsiRecord& r : window) {
        for (std::size_t f = 0; f < block; ++f) {
            v[f] += r.amplitudes[f];
            v[block + f] += r.phases_calibrated[f];
        }
    }
    const double inv = 1.0 / static_cast<double>(window.size());
    for (double& x : v) x *= inv;
    return v;
}

std::vector<double> extract_features_cnn(const std::vector<CsiRecord>& window, int n_win) {
    if (n_win < 1) throw InvalidConfigError("features: n_win must be >= 1");
    if (static_cast<int>(window.size()) != n_win)
        throw InvalidConfigError("features: window length does not match n_win");
    check_window_records(window);
    const CsiRecord& first = window.front();
    const int nsc = first.n_subcarriers;
    const int nrx = first.n_rx;
    std::vector<double> t(static_cast<std::size_t>(2 * nrx) * nsc * n_win);
    const auto idx = [nsc, n_win](int c, int sc, int w) {
        return (static_cast<std::size_t>(c) * nsc + sc) * n_win + w;
    };
    for (int w = 0; w < n_win; ++w) {
        const CsiRecord& r = window[static_cast<std::size_t>(w)];
        for (int sc = 0; sc < nsc; ++sc)
            for (int rx = 0; rx < nrx; ++rx) {
                t[idx(rx, sc, w)] = r.amp(sc, rx);
                t[idx(nrx + rx, sc, w)] = r.phase_cal(sc, rx);
            }
    }
    return t;
}

FeatureStats compute_mlp_stats(const FingerprintDataset& dataset) {
    return stats_over(dataset, true);
}

FeatureStats compute_cnn_stats(const FingerprintDataset& dataset) {
    return stats_over(dataset, false);
}

Eigen::MatrixXd standardized_mlp_matrix(const FingerprintDataset& dataset,
                                        const FeatureStats& stats) {
    return feature_matrix(dataset, true, &stats);
}

Eigen::MatrixXd standardized_cnn_matrix(const FingerprintDataset& dataset,
                                        const FeatureStats& stats) {
    return feature_matrix(dataset, false, &stats);
}

Eigen::MatrixXd raw_mlp_matrix(const FingerprintDataset& dataset) {
    return feature_matrix(dataset, true, nullptr);
}

Eigen::MatrixXd location_targets(const FingerprintDataset& dataset) {
    Eigen::MatrixXd m(dataset.n_samples(), 2);
    for (int r = 0; r < dataset.n_samples(); ++r) {
        m(r, 0) = dataset.samples[static_cast<std::size_t>(r)].label.x;
        m(r, 1) = dataset.samples[static_cast<std::size_t>(r)].label.y;
    }
    return m;
}

Eigen::MatrixXd onehot_targets(const FingerprintDataset& dataset, int n_classes) {
    if (n_classes < 1) throw InvalidConfigError("onehot_targets: n_classes must be >= 1");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dataset.n_samples(), n_classes);
    for (int r = 0; r < dataset.n_samples(); ++r) {
        const int rp = dataset.samples[static_cast<std::size_t>(r)].rp_index;
        if (rp < 0 || rp >= n_classes)
            throw InvalidConfigError("onehot_targets: sample " + std::to_string(r) +
                                     " has rp_index outside [0, n_classes)");
        m(r, rp) = 1.0;
    }
    return m;
}

FingerprintDataset build_dataset(const RpGrid& grid, const Scene& scene_template,
                                 const MeasurementModel& model, int samples_per_rp, int window,
                                 std::uint64_t stream_offset) {
    grid.validate();
    model.validate();
    if (samples_per_rp < 1) throw InvalidConfigError("build_dataset: samples_per_rp must be >= 1");
    if (window < 1) throw InvalidConfigError("build_dataset: window must be >= 1");

    FingerprintDataset ds;
    ds.grid = grid;
    ds.provenance = "simulated";
    ds.window_size = window;
    ds.n_subcarriers = scene_template.ofdm.n_subcarriers;
    ds.n_rx = scene_template.array.n_rx;
    ds.samples.reserve(static_cast<std::size_t>(grid.n_rps()) * samples_per_rp);

    // One multipath environment for the whole dataset: coefficients are drawn
    // once and shared by every RP.
    const auto coeffs = default_path_coeffs(scene_template.n_paths(), model.rng_seed);
    Scene scene = scene_template;
    for (int r = 0; r < grid.n_rps(); ++r) {
        scene.target = grid.rp_locations[static_cast<std::size_t>(r)];
        const auto paths = path_params_from_geometry(scene, coeffs);
        Rng rng(model.rng_seed, static_cast<std::uint64_t>(r) + 1 + stream_offset);
        auto records = simulate_csi(scene, paths, model, samples_per_rp * window, rng);
        for (auto& rec : records) rec = calibrate_phase(rec, scene.ofdm.fft_size);
        for (int s = 0; s < samples_per_rp; ++s) {
            const auto begin = records.begin() + static_cast<std::ptrdiff_t>(s) * window;
            const std::vector<CsiRecord> win(begin, begin + window);
            ds.samples.push_back(
                make_sample(win, window, scene.target, scene.target, r));
        }
    }
    ds.mlp_stats = compute_mlp_stats(ds);
    ds.cnn_stats = compute_cnn_stats(ds);
    return ds;
}

FingerprintDataset augment_dataset(const FingerprintDataset& dataset,
                                   const Scene& scene_template, const MeasurementModel& model,
                                   double sigma_p, int copies_per_sample) {
    if (!(sigma_p > 0.0)) throw InvalidConfigError("augment: sigma_p must be positive");
    if (copies_per_sample < 0)
        throw InvalidConfigError("augment: copies_per_sample must be >= 0");
    model.validate();
    if (dataset.n_subcarriers != scene_template.ofdm.n_subcarriers ||
        dataset.n_rx != scene_template.array.n_rx)
        throw InvalidConfigError("augment: scene template shape does not match dataset");

    FingerprintDataset out = dataset;
    if (copies_per_sample == 0) return out;
    out.provenance = "augmented";

    const auto coeffs = default_path_coeffs(scene_template.n_paths(), model.rng_seed);
    Scene scene = scene_template;
    // Streams 1..N_RP belong to build_dataset; augmentation starts at 2^32.
    std::uint64_t stream = std::uint64_t{1} << 32;
    const std::size_t n_orig = dataset.samples.size();
    for (int c = 0; c < copies_per_sample; ++c) {
        for (std::size_t s = 0; s < n_orig; ++s) {
            const FeatureSample& orig = dataset.samples[s];
            Rng rng(model.rng_seed, stream++);
            Location gen;
            int attempts = 0;
            do {
                if (++attempts > 10000)
                    throw std::runtime_error(
                        "augment: could not place perturbed point inside the area");
                const double rad = sigma_p * std::sqrt(rng.uniform());
                const double phi = 2.0 * kPi * rng.uniform();
                gen = {orig.label.x + rad * std::cos(phi), orig.label.y + rad * std::sin(phi)};
            } while (!dataset.grid.area.contains(gen));
            scene.target = gen;
            const auto paths = path_params_from_geometry(scene, coeffs);
            auto records = simulate_csi(scene, paths, model, dataset.window_size, rng);
            for (auto& rec : records) rec = calibrate_phase(rec, scene.ofdm.fft_size);
            out.samples.push_back(
                make_sample(records, dataset.window_size, orig.label, gen, orig.rp_index));
        }
    }
    out.mlp_stats = compute_mlp_stats(out);
    out.cnn_stats = compute_cnn_stats(out);
    return out;
}

void save_dataset(const FingerprintDataset& dataset, const std::string& path) {
    std::uint8_t provenance_code = 0;
    if (dataset.provenance == "simulated") provenance_code = 0;
    else if (dataset.provenance == "augmented") provenance_code = 1;
    else throw InvalidConfigError("save_dataset: unknown provenance '" + dataset.provenance + "'");

    ByteWriter w;
    w.put_bytes(kDatasetMagic, sizeof kDatasetMagic);
    w.put_u32(kDatasetVersion);
    w.put_u32(static_cast<std::uint32_t>(dataset.samples.size()));
    w.put_u32(static_cast<std::uint32_t>(dataset.window_size));
    w.put_u32(static_cast<std::uint32_t>(dataset.n_subcarriers));
    w.put_u32(static_cast<std::uint32_t>(dataset.n_rx));
    w.put_u8(provenance_code);

    w.put_u32(static_cast<std::uint32_t>(dataset.grid.rp_locations.size()));
    w.put_f64(dataset.grid.grid_spacing);
    w.put_f64(dataset.grid.area.x_min);
    w.put_f64(dataset.grid.area.y_min);
    w.put_f64(dataset.grid.area.x_max);
    w.put_f64(dataset.grid.area.y_max);
    for (Location rp : dataset.grid.rp_locations) {
        w.put_f64(rp.x);
        w.put_f64(rp.y);
    }

    put_stats(w, dataset.mlp_stats);
    put_stats(w, dataset.cnn_stats);

    for (const FeatureSample& s : dataset.samples) {
        w.put_i32(s.rp_index);
        w.put_f64(s.label.x);
        w.put_f64(s.label.y);
        w.put_f64(s.gen_location.x);
        w.put_f64(s.gen_location.y);
        w.put_u32(static_cast<std::uint32_t>(s.mlp_vector.size()));
        for (double v : s.mlp_vector) w.put_f64(v);
        w.put_u32(static_cast<std::uint32_t>(s.cnn_tensor.size()));
        for (double v : s.cnn_tensor) w.put_f64(v);
    }

    w.put_u64(fnv1a64(w.bytes().data(), w.bytes().size()));
    write_file_bytes(path, w.bytes());
}

FingerprintDataset load_dataset(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < sizeof kDatasetMagic + 4 + 8)
        throw IoError("load_dataset: file too short: " + path);
    ByteReader r(bytes.data(), bytes.size() - 8);
    ByteReader tail(bytes.data() + bytes.size() - 8, 8);
    if (tail.get_u64() != fnv1a64(bytes.data(), bytes.size() - 8))
        throw IoError("load_dataset: checksum mismatch (corrupt or truncated): " + path);

    char magic[8];
    r.get_bytes(magic, sizeof magic);
    if (std::memcmp(magic, kDatasetMagic, sizeof magic) != 0)
        throw IoError("load_dataset: bad magic: " + path);
    const std::uint32_t version = r.get_u32();
    if (version != kDatasetVersion)
        throw IoError("load_dataset: unsupported version " + std::to_string(version));

    FingerprintDataset ds;
    const std::uint32_t n_samples = r.get_u32();
    ds.window_size = static_cast<int>(r.get_u32());
    ds.n_subcarriers = static_cast<int>(r.get_u32());
    ds.n_rx = static_cast<int>(r.get_u32());
    const std::uint8_t provenance_code = r.get_u8();
    if (provenance_code > 1) throw IoError("load_dataset: bad provenance code");
    ds.provenance = provenance_code == 0 ? "simulated" : "augmented";

    const std::uint32_t n_rps = r.get_u32();
    ds.grid.grid_spacing = r.get_f64();
    ds.grid.area.x_min = r.get_f64();
    ds.grid.area.y_min = r.get_f64();
    ds.grid.area.x_max = r.get_f64();
    ds.grid.area.y_max = r.get_f64();
    ds.grid.rp_locations.resize(n_rps);
    for (Location& rp : ds.grid.rp_locations) {
        rp.x = r.get_f64();
        rp.y = r.get_f64();
    }

    ds.mlp_stats = get_stats(r);
    ds.cnn_stats = get_stats(r);

    ds.samples.resize(n_samples);
    for (FeatureSample& s : ds.samples) {
        s.rp_index = r.get_i32();
        s.label.x = r.get_f64();
        s.label.y = r.get_f64();
        s.gen_location.x = r.get_f64();
        s.gen_location.y = r.get_f64();
        s.mlp_vector.resize(r.get_u32());
        for (double& v : s.mlp_vector) v = r.get_f64();
        s.cnn_tensor.resize(r.get_u32());
        for (double& v : s.cnn_tensor) v = r.get_f64();
    }
    if (r.remaining() != 0) throw IoError("load_dataset: trailing bytes: " + path);
    return ds;
}

void export_dataset_csv(const FingerprintDataset& dataset, const std::string& path) {
    std::string text = "rp_index,label_x,label_y,gen_x,gen_y";
    for (int f = 0; f < dataset.mlp_dim(); ++f) text += ",f" + std::to_string(f);
    text += "\n";
    for (const FeatureSample& s : dataset.samples) {
        text += std::to_string(s.rp_index);
        text += "," + format_g17(s.label.x) + "," + format_g17(s.label.y);
        text += "," + format_g17(s.gen_location.x) + "," + format_g17(s.gen_location.y);
        for (double v : s.mlp_vector) text += "," + format_g17(v);
        text += "\n";
    }
    write_file_text(path, text);
}

} // namespace csiloc
