#include "csiloc/neural.hpp"

#include "csiloc/binio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

namespace csiloc {

namespace {

constexpr char kModelMagic[8] = {'C', 'S', 'I', 'L', 'O', 'C', 'N', 'N'};
constexpr std::uint32_t kModelVersion = 1;
constexpr double kProbFloor = 1e-12;

void init_uniform(double* data, std::size_t n, double limit, Rng& rng) {
    for (std::size_t i = 0; i < n; ++i) data[i] = rng.uniform(-limit, limit);
}

double glorot_limit(int fan_in, int fan_out) {
    return std::sqrt(6.0 / (static_cast<double>(fan_in) + fan_out));
}

class FcLayer final : public Layer {
public:
    FcLayer(int in_dim, int units, Rng& rng)
        : w_(in_dim, units),
          b_(Eigen::VectorXd::Zero(units)),
          gw_(Eigen::MatrixXd::Zero(in_dim, units)),
          gb_(Eigen::VectorXd::Zero(units)) {
        init_uniform(w_.data(), static_cast<std::size_t>(w_.size()),
                     glorot_limit(in_dim, units), rng);
    }

    LayerKind kind() const override { return LayerKind::fc; }
    TensorShape output_shape() const override { return {1, 1, static_cast<int>(w_.cols())}; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool, Rng&) override {
        x_ = x;
        return ((x * w_).rowwise() + b_.transpose()).eval();
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override {
        gw_.noalias() = x_.transpose() * g;
        gb_ = g.colwise().sum().transpose();
        return g * w_.transpose();
    }

    std::size_t n_params() const override {
        return static_cast<std::size_t>(w_.size() + b_.size());
    }
    double get_param(std::size_t i) const override {
        return i < static_cast<std::size_t>(w_.size())
                   ? w_.data()[i]
                   : b_(static_cast<Eigen::Index>(i - static_cast<std::size_t>(w_.size())));
    }
    void set_param(std::size_t i, double v) override {
        if (i < static_cast<std::size_t>(w_.size()))
            w_.data()[i] = v;
        else
            b_(static_cast<Eigen::Index>(i - static_cast<std::size_t>(w_.size()))) = v;
    }
    double get_grad(std::size_t i) const override {
        return i < static_cast<std::size_t>(gw_.size())
                   ? gw_.data()[i]
                   : gb_(static_cast<Eigen::Index>(i - static_cast<std::size_t>(gw_.size())));
    }
    void apply_sgd(double lr) override {
        w_ -= lr * gw_;
        b_ -= lr * gb_;
    }

private:
    Eigen::MatrixXd w_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd gw_;
    Eigen::VectorXd gb_;
    Eigen::MatrixXd x_;
};

class ReluLayer final : public Layer {
public:
    explicit ReluLayer(TensorShape shape) : shape_(shape) {}

    LayerKind kind() const override { return LayerKind::relu; }
    TensorShape output_shape() const override { return shape_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool, Rng&) override {
        // d/dx at exactly 0 uses the subgradient 0.
        mask_ = (x.array() > 0.0).cast<double>();
        return x.cwiseMax(0.0);
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override {
        return g.cwiseProduct(mask_);
    }

private:
    TensorShape shape_;
    Eigen::MatrixXd mask_;
};

class DropoutLayer final : public Layer {
public:
    DropoutLayer(TensorShape shape, double rate) : shape_(shape), keep_(1.0 - rate) {}

    LayerKind kind() const override { return LayerKind::dropout; }
    TensorShape output_shape() const override { return shape_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train, Rng& rng) override {
        last_train_ = train;
        if (!train) return x; // inverted dropout: inference is the identity
        const bool reuse = frozen_ && mask_.rows() == x.rows() && mask_.cols() == x.cols();
        if (!reuse) {
            mask_.resize(x.rows(), x.cols());
            const double scale = 1.0 / keep_;
            for (Eigen::Index r = 0; r < mask_.rows(); ++r)
                for (Eigen::Index c = 0; c < mask_.cols(); ++c)
                    mask_(r, c) = rng.uniform() < keep_ ? scale : 0.0;
        }
        return x.cwiseProduct(mask_);
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override {
        return last_train_ ? g.cwiseProduct(mask_).eval() : g;
    }

    void freeze_mask(bool frozen) override { frozen_ = frozen; }

private:
    TensorShape shape_;
    double keep_;
    bool frozen_ = false;
    bool last_train_ = false;
    Eigen::MatrixXd mask_;
};

class SoftmaxLayer final : public Layer {
public:
    explicit SoftmaxLayer(TensorShape shape) : shape_(shape) {}

    LayerKind kind() const override { return LayerKind::softmax; }
    TensorShape output_shape() const override { return shape_; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool, Rng&) override {
        y_.resize(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
            const double m = x.row(r).maxCoeff();
            y_.row(r) = (x.row(r).array() - m).exp();
            y_.row(r) /= y_.row(r).sum();
        }
        return y_;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override {
        Eigen::MatrixXd gx(g.rows(), g.cols());
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const double dot = g.row(r).dot(y_.row(r));
            gx.row(r) = y_.row(r).array() * (g.row(r).array() - dot);
        }
        return gx;
    }

private:
    TensorShape shape_;
    Eigen::MatrixXd y_;
};

class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(TensorShape in, int filters, int kh, int kw, Rng& rng)
        : in_(in),
          filters_(filters),
          kh_(kh),
          kw_(kw),
          pad_h_((kh - 1) / 2),
          pad_w_((kw - 1) / 2),
          out_h_(in.height + 2 * ((kh - 1) / 2) - kh + 1),
          out_w_(in.width + 2 * ((kw - 1) / 2) - kw + 1),
          w_(in.channels * kh * kw, filters),
          b_(Eigen::VectorXd::Zero(filters)),
          gw_(Eigen::MatrixXd::Zero(in.channels * kh * kw, filters)),
          gb_(Eigen::VectorXd::Zero(filters)) {
        if (out_h_ < 1 || out_w_ < 1)
            throw InvalidConfigError("conv2d: kernel larger than padded input");
        init_uniform(w_.data(), static_cast<std::size_t>(w_.size()),
                     glorot_limit(in.channels * kh * kw, filters * kh * kw), rng);
    }

    LayerKind kind() const override { return LayerKind::conv2d; }
    TensorShape output_shape() const override { return {filters_, out_h_, out_w_}; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool, Rng&) override {
        batch_ = static_cast<int>(x.rows());
        const int ohw = out_h_ * out_w_;
        col_.setZero(static_cast<Eigen::Index>(batch_) * ohw, w_.rows());
        for (int b = 0; b < batch_; ++b)
            for (int oh = 0; oh < out_h_; ++oh)
                for (int ow = 0; ow < out_w_; ++ow) {
                    const Eigen::Index row =
                        (static_cast<Eigen::Index>(b) * out_h_ + oh) * out_w_ + ow;
                    for (int c = 0; c < in_.channels; ++c)
                        for (int ki = 0; ki < kh_; ++ki) {
                            const int ih = oh - pad_h_ + ki;
                            if (ih < 0 || ih >= in_.height) continue;
                            for (int kj = 0; kj < kw_; ++kj) {
                                const int iw = ow - pad_w_ + kj;
                                if (iw < 0 || iw >= in_.width) continue;
                                col_(row, (static_cast<Eigen::Index>(c) * kh_ + ki) * kw_ + kj) =
                                    x(b, (static_cast<Eigen::Index>(c) * in_.height + ih) *
                                             in_.width +
                                         iw);
                            }
                        }
                }
        const Eigen::MatrixXd tmp = (col_ * w_).rowwise() + b_.transpose();
        Eigen::MatrixXd y(batch_, static_cast<Eigen::Index>(filters_) * ohw);
        for (int b = 0; b < batch_; ++b)
            for (int f = 0; f < filters_; ++f)
                for (int o = 0; o < ohw; ++o)
                    y(b, static_cast<Eigen::Index>(f) * ohw + o) =
                        tmp(static_cast<Eigen::Index>(b) * ohw + o, f);
        return y;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override {
        const int ohw = out_h_ * out_w_;
        Eigen::MatrixXd gmat(static_cast<Eigen::Index>(batch_) * ohw, filters_);
        for (int b = 0; b < batch_; ++b)
            for (int f = 0; f < filters_; ++f)
                for (int o = 0; o < ohw; ++o)
                    gmat(static_cast<Eigen::Index>(b) * ohw + o, f) =
                        g(b, static_cast<Eigen::Index>(f) * ohw + o);
        gw_.noalias() = col_.transpose() * gmat;
        gb_ = gmat.colwise().sum().transpose();

        const Eigen::MatrixXd gcol = gmat * w_.transpose();
        Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(batch_, in_.flat());
        for (int b = 0; b < batch_; ++b)
            for (int oh = 0; oh < out_h_; ++oh)
                for (int ow = 0; ow < out_w_; ++ow) {
                    const Eigen::Index row =
                        (static_cast<Eigen::Index>(b) * out_h_ + oh) * out_w_ + ow;
                    for (int c = 0; c < in_.channels; ++c)
                        for (int ki = 0; ki < kh_; ++ki) {
                            const int ih = oh - pad_h_ + ki;
                            if (ih < 0 || ih >= in_.height) continue;
                            for (int kj = 0; kj < kw_; ++kj) {
                                const int iw = ow - pad_w_ + kj;
                                if (iw < 0 || iw >= in_.width) continue;
                                gx(b, (static_cast<Eigen::Index>(c) * in_.height + ih) *
                                          in_.width +
                                      iw) +=
                                    gcol(row,
                                         (static_cast<Eigen::Index>(c) * kh_ + ki) * kw_ + kj);
                            }
                        }
                }
        return gx;
    }

    std::size_t n_params() const override {
        return static_cast<std::size_t>(w_.size() + b_.size());
    }
    double get_param(std::size_t i) const override {
        return i < static_cast<std::size_t>(w_.size())
                   ? w_.data()[i]
                   : b_(static_cast<Eigen::Index>(i - static_cast<std::size_t>(w_.size())));
    }
    void set_param(std::size_t i, double v) override {
        if (i < static_cast<std::size_t>(w_.size()))
            w_.data()[i] = v;
        else
            b_(static_cast<Eigen::Index>(i - static_cast<std::size_t>(w_.size()))) = v;
    }
    double get_grad(std::size_t i) const override {
        return i < static_cast<std::size_t>(gw_.size())
                   ? gw_.data()[i]
                   : gb_(static_cast<Eigen::Index>(i - static_cast<std::size_t>(gw_.size())));
    }
    void apply_sgd(double lr) override {
        w_ -= lr * gw_;
        b_ -= lr * gb_;
    }

private:
    TensorShape in_;
    int filters_, kh_, kw_, pad_h_, pad_w_, out_h_, out_w_;
    int batch_ = 0;
    Eigen::MatrixXd w_;
    Eigen::VectorXd b_;
    Eigen::MatrixXd gw_;
    Eigen::VectorXd gb_;
    Eigen::MatrixXd col_;
};

class MaxPool2dLayer final : public Layer {
public:
    MaxPool2dLayer(TensorShape in, int ph, int pw)
        : in_(in), ph_(ph), pw_(pw), out_h_(in.height / ph), out_w_(in.width / pw) {
        if (out_h_ < 1 || out_w_ < 1)
            throw InvalidConfigError("maxpool2d: pool window larger than input");
    }

    LayerKind kind() const override { return LayerKind::maxpool2d; }
    TensorShape output_shape() const override { return {in_.channels, out_h_, out_w_}; }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool, Rng&) override {
        const int batch = static_cast<int>(x.rows());
        const Eigen::Index out_flat =
            static_cast<Eigen::Index>(in_.channels) * out_h_ * out_w_;
        Eigen::MatrixXd y(batch, out_flat);
        argmax_.resize(batch, out_flat);
        for (int b = 0; b < batch; ++b)
            for (int c = 0; c < in_.channels; ++c)
                for (int oh = 0; oh < out_h_; ++oh)
                    for (int ow = 0; ow < out_w_; ++ow) {
                        double best = -std::numeric_limits<double>::infinity();
                        Eigen::Index best_idx = 0;
                        for (int ki = 0; ki < ph_; ++ki)
                            for (int kj = 0; kj < pw_; ++kj) {
                                const int ih = oh * ph_ + ki;
                                const int iw = ow * pw_ + kj;
                                const Eigen::Index idx =
                                    (static_cast<Eigen::Index>(c) * in_.height + ih) *
                                        in_.width +
                                    iw;
                                if (x(b, idx) > best) { // first max wins ties
                                    best = x(b, idx);
                                    best_idx = idx;
                                }
                            }
                        const Eigen::Index o =
                            (static_cast<Eigen::Index>(c) * out_h_ + oh) * out_w_ + ow;
                        y(b, o) = best;
                        argmax_(b, o) = best_idx;
                    }
        return y;
    }

    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override {
        Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(g.rows(), in_.flat());
        for (Eigen::Index b = 0; b < g.rows(); ++b)
            for (Eigen::Index o = 0; o < g.cols(); ++o) gx(b, argmax_(b, o)) += g(b, o);
        return gx;
    }

private:
    TensorShape in_;
    int ph_, pw_, out_h_, out_w_;
    Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> argmax_;
};

class LinearLayer final : public Layer {
public:
    explicit LinearLayer(TensorShape shape) : shape_(shape) {}

    LayerKind kind() const override { return LayerKind::linear; }
    TensorShape output_shape() const override { return shape_; }
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool, Rng&) override { return x; }
    Eigen::MatrixXd backward(const Eigen::MatrixXd& g) override { return g; }

private:
    TensorShape shape_;
};

double dataset_loss(Network& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                    TrainConfig::Loss loss) {
    const Eigen::Index chunk = 512;
    double total = 0.0;
    for (Eigen::Index start = 0; start < x.rows(); start += chunk) {
        const Eigen::Index rows = std::min(chunk, x.rows() - start);
        const Eigen::MatrixXd out = net.forward(x.middleRows(start, rows));
        const Eigen::MatrixXd target = y.middleRows(start, rows);
        const double l = loss == TrainConfig::Loss::cross_entropy
                             ? cross_entropy(out, target)
                             : squared_l2_loss(out, target);
        total += l * static_cast<double>(rows);
    }
    return total / static_cast<double>(x.rows());
}

} // namespace

const char* layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::fc: return "fc";
        case LayerKind::relu: return "relu";
        case LayerKind::dropout: return "dropout";
        case LayerKind::softmax: return "softmax";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::linear: return "linear";
    }
    return "unknown";
}

LayerSpec LayerSpec::fc(int units) {
    LayerSpec s;
    s.kind = LayerKind::fc;
    s.units = units;
    return s;
}
LayerSpec LayerSpec::relu() {
    LayerSpec s;
    s.kind = LayerKind::relu;
    return s;
}
LayerSpec LayerSpec::dropout(double rate) {
    LayerSpec s;
    s.kind = LayerKind::dropout;
    s.rate = rate;
    return s;
}
LayerSpec LayerSpec::softmax() {
    LayerSpec s;
    s.kind = LayerKind::softmax;
    return s;
}
LayerSpec LayerSpec::conv2d(int filters, int kernel_h, int kernel_w) {
    LayerSpec s;
    s.kind = LayerKind::conv2d;
    s.filters = filters;
    s.kernel_h = kernel_h;
    s.kernel_w = kernel_w;
    return s;
}
LayerSpec LayerSpec::maxpool2d(int pool_h, int pool_w) {
    LayerSpec s;
    s.kind = LayerKind::maxpool2d;
    s.pool_h = pool_h;
    s.pool_w = pool_w;
    return s;
}
LayerSpec LayerSpec::linear() {
    LayerSpec s;
    s.kind = LayerKind::linear;
    return s;
}

void LayerSpec::validate() const {
    switch (kind) {
        case LayerKind::fc:
            if (units < 1) throw InvalidConfigError("layer fc: units must be >= 1");
            break;
        case LayerKind::dropout:
            if (!(rate >= 0.0) || rate >= 1.0)
                throw InvalidConfigError("layer dropout: rate must be in [0, 1)");
            break;
        case LayerKind::conv2d:
            if (filters < 1 || kernel_h < 1 || kernel_w < 1)
                throw InvalidConfigError("layer conv2d: filters and kernel dims must be >= 1");
            break;
        case LayerKind::maxpool2d:
            if (pool_h < 1 || pool_w < 1)
                throw InvalidConfigError("layer maxpool2d: pool dims must be >= 1");
            break;
        default: break;
    }
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw InvalidConfigError("train: learning_rate must be finite and >= 0");
    if (batch_size < 1) throw InvalidConfigError("train: batch_size must be >= 1");
    if (epochs < 0) throw InvalidConfigError("train: epochs must be >= 0");
}

Network::Network(TensorShape input_shape, std::vector<LayerSpec> specs, std::uint64_t init_seed)
    : input_shape_(input_shape), specs_(std::move(specs)) {
    if (input_shape_.channels < 1 || input_shape_.height < 1 || input_shape_.width < 1)
        throw InvalidConfigError("network: input shape dims must be >= 1");
    Rng init_rng(init_seed);
    TensorShape shape = input_shape_;
    for (const LayerSpec& spec : specs_) {
        spec.validate();
        std::unique_ptr<Layer> layer;
        switch (spec.kind) {
            case LayerKind::fc:
                layer = std::make_unique<FcLayer>(shape.flat(), spec.units, init_rng);
                break;
            case LayerKind::relu:
                layer = std::make_unique<ReluLayer>(shape);
                break;
            case LayerKind::dropout:
                layer = std::make_unique<DropoutLayer>(shape, spec.rate);
                break;
            case LayerKind::softmax:
                layer = std::make_unique<SoftmaxLayer>(shape);
                break;
            case LayerKind::conv2d:
                layer = std::make_unique<Conv2dLayer>(shape, spec.filters, spec.kernel_h,
                                                      spec.kernel_w, init_rng);
                break;
            case LayerKind::maxpool2d:
                layer = std::make_unique<MaxPool2dLayer>(shape, spec.pool_h, spec.pool_w);
                break;
            case LayerKind::linear:
                layer = std::make_unique<LinearLayer>(shape);
                break;
        }
        shape = layer->output_shape();
        layers_.push_back(std::move(layer));
    }
}

void Network::set_dropout_seed(std::uint64_t seed) { dropout_rng_ = Rng(seed, 2); }

void Network::freeze_dropout(bool frozen) {
    for (auto& layer : layers_) layer->freeze_mask(frozen);
}

Eigen::MatrixXd Network::forward(const Eigen::MatrixXd& x) {
    if (x.cols() != input_shape_.flat())
        throw InvalidConfigError("network: input width does not match input shape");
    Eigen::MatrixXd cur = x;
    for (auto& layer : layers_) cur = layer->forward(cur, train_mode_, dropout_rng_);
    return cur;
}

void Network::backward(const Eigen::MatrixXd& loss_grad) {
    if (loss_grad.cols() != output_shape().flat())
        throw InvalidConfigError("network: loss gradient width does not match output shape");
    Eigen::MatrixXd g = loss_grad;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
}

TensorShape Network::output_shape() const {
    return layers_.empty() ? input_shape_ : layers_.back()->output_shape();
}

std::size_t Network::n_params() const {
    std::size_t n = 0;
    for (const auto& layer : layers_) n += layer->n_params();
    return n;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& a) {
    if (a.size() == 0) throw InvalidConfigError("softmax: empty input");
    Eigen::VectorXd y = (a.array() - a.maxCoeff()).exp();
    return y / y.sum();
}

double cross_entropy(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& onehot) {
    if (probs.rows() != onehot.rows() || probs.cols() != onehot.cols() || probs.rows() == 0)
        throw InvalidConfigError("cross_entropy: shape mismatch or empty batch");
    double total = 0.0;
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        for (Eigen::Index c = 0; c < probs.cols(); ++c)
            if (onehot(r, c) != 0.0)
                total -= onehot(r, c) * std::log(std::max(probs(r, c), kProbFloor));
    return total / static_cast<double>(probs.rows());
}

Eigen::MatrixXd cross_entropy_grad(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& onehot) {
    if (probs.rows() != onehot.rows() || probs.cols() != onehot.cols() || probs.rows() == 0)
        throw InvalidConfigError("cross_entropy_grad: shape mismatch or empty batch");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(probs.rows(), probs.cols());
    const double inv_batch = 1.0 / static_cast<double>(probs.rows());
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        for (Eigen::Index c = 0; c < probs.cols(); ++c)
            if (onehot(r, c) != 0.0)
                g(r, c) = -onehot(r, c) / std::max(probs(r, c), kProbFloor) * inv_batch;
    return g;
}

double squared_l2_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.rows() == 0)
        throw InvalidConfigError("squared_l2_loss: shape mismatch or empty batch");
    return (pred - target).rowwise().squaredNorm().mean();
}

Eigen::MatrixXd squared_l2_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols() || pred.rows() == 0)
        throw InvalidConfigError("squared_l2_grad: shape mismatch or empty batch");
    return 2.0 / static_cast<double>(pred.rows()) * (pred - target);
}

void sgd_step(Network& net, double learning_rate) {
    for (int i = 0; i < net.n_layers(); ++i) net.layer(i).apply_sgd(learning_rate);
}

TrainHistory train(Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                   const TrainConfig& config) {
    config.validate();
    if (inputs.rows() == 0) throw InvalidConfigError("train: empty dataset");
    if (inputs.rows() != targets.rows())
        throw InvalidConfigError("train: inputs and targets disagree on sample count");
    if (inputs.cols() != net.input_shape().flat())
        throw InvalidConfigError("train: input width does not match the network");
    if (targets.cols() != net.output_shape().flat())
        throw InvalidConfigError("train: target width does not match the network");
    const bool softmax_head =
        net.n_layers() > 0 && net.layer(net.n_layers() - 1).kind() == LayerKind::softmax;
    if ((config.loss == TrainConfig::Loss::cross_entropy) != softmax_head)
        throw InvalidConfigError("train: loss does not match the output head");

    net.set_dropout_seed(config.seed);
    Rng shuffle_rng(config.seed, 1);
    const int n = static_cast<int>(inputs.rows());
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    TrainHistory history;
    history.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rng.bounded(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        net.set_train(true);
        for (int start = 0; start < n; start += config.batch_size) {
            const int rows = std::min(config.batch_size, n - start);
            Eigen::MatrixXd xb(rows, inputs.cols());
            Eigen::MatrixXd yb(rows, targets.cols());
            for (int r = 0; r < rows; ++r) {
                xb.row(r) = inputs.row(order[static_cast<std::size_t>(start + r)]);
                yb.row(r) = targets.row(order[static_cast<std::size_t>(start + r)]);
            }
            const Eigen::MatrixXd out = net.forward(xb);
            const Eigen::MatrixXd g = config.loss == TrainConfig::Loss::cross_entropy
                                          ? cross_entropy_grad(out, yb)
                                          : squared_l2_grad(out, yb);
            net.backward(g);
            sgd_step(net, config.learning_rate);
        }
        net.set_train(false);
        history.epoch_loss.push_back(dataset_loss(net, inputs, targets, config.loss));
    }
    return history;
}

GradientCheckReport gradient_check(Network& net, const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& targets, TrainConfig::Loss loss,
                                   double step, double tolerance, int max_per_layer,
                                   std::uint64_t seed) {
    if (!(step > 0.0)) throw InvalidConfigError("gradient_check: step must be positive");
    if (max_per_layer < 1) throw InvalidConfigError("gradient_check: max_per_layer must be >= 1");

    const bool was_train = net.train_mode();
    net.set_train(true);
    net.freeze_dropout(true); // first forward draws the masks, then they stay put

    const auto loss_of = [&](const Eigen::MatrixXd& out) {
        return loss == TrainConfig::Loss::cross_entropy ? cross_entropy(out, targets)
                                                        : squared_l2_loss(out, targets);
    };
    const Eigen::MatrixXd out = net.forward(inputs);
    net.backward(loss == TrainConfig::Loss::cross_entropy ? cross_entropy_grad(out, targets)
                                                          : squared_l2_grad(out, targets));

    GradientCheckReport report;
    Rng pick_rng(seed);
    for (int li = 0; li < net.n_layers(); ++li) {
        Layer& layer = net.layer(li);
        const std::size_t n = layer.n_params();
        if (n == 0) continue;

        std::vector<std::size_t> candidates(n);
        std::iota(candidates.begin(), candidates.end(), std::size_t{0});
        const std::size_t n_check = std::min<std::size_t>(n, static_cast<std::size_t>(max_per_layer));
        for (std::size_t i = 0; i < n_check; ++i) {
            const std::size_t j = i + pick_rng.bounded(static_cast<std::uint64_t>(n - i));
            std::swap(candidates[i], candidates[j]);
        }

        double layer_max = 0.0;
        for (std::size_t i = 0; i < n_check; ++i) {
            const std::size_t p = candidates[i];
            const double original = layer.get_param(p);
            const double analytic = layer.get_grad(p);

            // A single step size can misfire for reasons that have nothing to
            // do with the analytic gradient: a relu/maxpool kink inside the
            // +-h interval (needs a smaller step) or cancellation when the
            // derivative is tiny relative to the loss (needs a larger one).
            // A wrong gradient disagrees at every scale, so take the best
            // agreement over a small ladder and stop once it is within tol.
            double rel_best = std::numeric_limits<double>::infinity();
            for (const double h : {step, step * 0.1, step * 0.01, step * 10.0, step * 100.0}) {
                layer.set_param(p, original + h);
                const double loss_plus = loss_of(net.forward(inputs));
                layer.set_param(p, original - h);
                const double loss_minus = loss_of(net.forward(inputs));
                layer.set_param(p, original);

                const double numeric = (loss_plus - loss_minus) / (2.0 * h);
                const double rel = std::abs(analytic - numeric) /
                                   std::max({std::abs(analytic), std::abs(numeric), 1e-8});
                rel_best = std::min(rel_best, rel);
                if (rel_best < tolerance) break;
            }
            layer_max = std::max(layer_max, rel_best);
            ++report.n_checked;
        }
        report.per_layer.emplace_back(li, layer_max);
        report.max_rel_error = std::max(report.max_rel_error, layer_max);
    }
    report.pass = report.max_rel_error < tolerance;

    net.freeze_dropout(false);
    net.set_train(was_train);
    return report;
}

Network make_mlp_classifier(int input_dim, int n_classes, std::uint64_t init_seed) {
    if (input_dim < 1) throw InvalidConfigError("classifier input_dim must be >= 1");
    if (n_classes < 1) throw InvalidConfigError("classifier n_classes must be >= 1");
    std::vector<LayerSpec> specs = {LayerSpec::fc(256),       LayerSpec::relu(),
                                    LayerSpec::fc(256),       LayerSpec::relu(),
                                    LayerSpec::fc(256),       LayerSpec::relu(),
                                    LayerSpec::fc(64),        LayerSpec::relu(),
                                    LayerSpec::dropout(0.3),  LayerSpec::fc(n_classes),
                                    LayerSpec::softmax()};
    return Network(TensorShape{1, 1, input_dim}, std::move(specs), init_seed);
}

Network make_mlp_regressor(int input_dim, std::uint64_t init_seed) {
    if (input_dim < 1) throw InvalidConfigError("regressor input_dim must be >= 1");
    std::vector<LayerSpec> specs = {LayerSpec::fc(256),      LayerSpec::relu(),
                                    LayerSpec::fc(256),      LayerSpec::relu(),
                                    LayerSpec::fc(256),      LayerSpec::relu(),
                                    LayerSpec::fc(256),      LayerSpec::relu(),
                                    LayerSpec::dropout(0.3), LayerSpec::fc(2),
                                    LayerSpec::linear()};
    return Network(TensorShape{1, 1, input_dim}, std::move(specs), init_seed);
}

Network make_cnn_regressor(TensorShape input_shape, std::uint64_t init_seed) {
    std::vector<LayerSpec> specs = {LayerSpec::conv2d(16, 3, 3), LayerSpec::relu(),
                                    LayerSpec::conv2d(16, 3, 3), LayerSpec::relu(),
                                    LayerSpec::conv2d(16, 3, 3), LayerSpec::relu(),
                                    LayerSpec::maxpool2d(2, 2),  LayerSpec::fc(64),
                                    LayerSpec::relu(),           LayerSpec::dropout(0.3),
                                    LayerSpec::fc(2),            LayerSpec::linear()};
    return Network(input_shape, std::move(specs), init_seed);
}

Table1Build build_table1(Table1Kind kind, std::uint64_t init_seed) {
    auto make = [&]() -> Network {
        switch (kind) {
            case Table1Kind::mlp_classifier: return make_mlp_classifier(180, 15, init_seed);
            case Table1Kind::mlp_regressor: return make_mlp_regressor(180, init_seed);
            case Table1Kind::cnn_regressor: return make_cnn_regressor({6, 30, 30}, init_seed);
        }
        throw InvalidConfigError("unknown network kind");
    };
    long published = kind == Table1Kind::mlp_classifier  ? 257574
                     : kind == Table1Kind::mlp_regressor ? 248322
                                                         : 236114;
    Table1Build build{make(), 0, published};
    build.computed_params = static_cast<long>(build.net.n_params());
    return build;
}

void save_network(const Network& net, const std::string& path) {
    ByteWriter w;
    w.put_bytes(kModelMagic, sizeof kModelMagic);
    w.put_u32(kModelVersion);
    w.put_u32(static_cast<std::uint32_t>(net.input_shape().channels));
    w.put_u32(static_cast<std::uint32_t>(net.input_shape().height));
    w.put_u32(static_cast<std::uint32_t>(net.input_shape().width));
    w.put_u32(static_cast<std::uint32_t>(net.specs().size()));
    for (const LayerSpec& s : net.specs()) {
        w.put_u8(static_cast<std::uint8_t>(s.kind));
        w.put_i32(s.units);
        w.put_f64(s.rate);
        w.put_i32(s.filters);
        w.put_i32(s.kernel_h);
        w.put_i32(s.kernel_w);
        w.put_i32(s.pool_h);
        w.put_i32(s.pool_w);
    }
    w.put_u64(static_cast<std::uint64_t>(net.n_params()));
    for (int i = 0; i < net.n_layers(); ++i) {
        const Layer& layer = net.layer(i);
        for (std::size_t p = 0; p < layer.n_params(); ++p) w.put_f64(layer.get_param(p));
    }
    w.put_u64(fnv1a64(w.bytes().data(), w.bytes().size()));
    write_file_bytes(path, w.bytes());
}

Network load_network(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file_bytes(path);
    if (bytes.size() < sizeof kModelMagic + 4 + 8)
        throw IoError("load_network: file too short: " + path);
    ByteReader tail(bytes.data() + bytes.size() - 8, 8);
    if (tail.get_u64() != fnv1a64(bytes.data(), bytes.size() - 8))
        throw IoError("load_network: checksum mismatch (corrupt or truncated): " + path);

    ByteReader r(bytes.data(), bytes.size() - 8);
    char magic[8];
    r.get_bytes(magic, sizeof magic);
    if (std::memcmp(magic, kModelMagic, sizeof magic) != 0)
        throw IoError("load_network: bad magic: " + path);
    const std::uint32_t version = r.get_u32();
    if (version != kModelVersion)
        throw IoError("load_network: unsupported version " + std::to_string(version));

    TensorShape shape;
    shape.channels = static_cast<int>(r.get_u32());
    shape.height = static_cast<int>(r.get_u32());
    shape.width = static_cast<int>(r.get_u32());
    const std::uint32_t n_specs = r.get_u32();
    std::vector<LayerSpec> specs(n_specs);
    for (LayerSpec& s : specs) {
        const std::uint8_t kind = r.get_u8();
        if (kind > static_cast<std::uint8_t>(LayerKind::linear))
            throw IoError("load_network: bad layer kind");
        s.kind = static_cast<LayerKind>(kind);
        s.units = r.get_i32();
        s.rate = r.get_f64();
        s.filters = r.get_i32();
        s.kernel_h = r.get_i32();
        s.kernel_w = r.get_i32();
        s.pool_h = r.get_i32();
        s.pool_w = r.get_i32();
    }

    Network net(shape, std::move(specs), 0);
    const std::uint64_t n_params = r.get_u64();
    if (n_params != net.n_params())
        throw IoError("load_network: parameter count does not match layer table");
    for (int i = 0; i < net.n_layers(); ++i) {
        Layer& layer = net.layer(i);
        for (std::size_t p = 0; p < layer.n_params(); ++p) layer.set_param(p, r.get_f64());
    }
    if (r.remaining() != 0) throw IoError("load_network: trailing bytes: " + path);
    return net;
}

} // namespace csiloc
