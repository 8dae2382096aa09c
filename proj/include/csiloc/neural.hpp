#pragma once

#include "csiloc/geometry.hpp" // InvalidConfigError
#include "csiloc/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace csiloc {

enum class LayerKind : std::uint8_t {
    fc = 0,
    relu = 1,
    dropout = 2,
    softmax = 3,
    conv2d = 4,
    maxpool2d = 5,
    linear = 6, // identity output marker
};

const char* layer_kind_name(LayerKind kind);

// Declarative layer description; only the fields relevant to `kind` are used.
struct LayerSpec {
    LayerKind kind = LayerKind::linear;
    int units = 0;      // fc
    double rate = 0.0;  // dropout keep-probability complement (drop rate)
    int filters = 0;    // conv2d output channels
    int kernel_h = 0;   // conv2d
    int kernel_w = 0;
    int pool_h = 0;     // maxpool2d
    int pool_w = 0;

    static LayerSpec fc(int units);
    static LayerSpec relu();
    static LayerSpec dropout(double rate);
    static LayerSpec softmax();
    static LayerSpec conv2d(int filters, int kernel_h, int kernel_w);
    static LayerSpec maxpool2d(int pool_h, int pool_w);
    static LayerSpec linear();

    void validate() const;
};

// Activation shape between layers; fully-connected layers flatten implicitly.
struct TensorShape {
    int channels = 1;
    int height = 1;
    int width = 1;

    int flat() const { return channels * height * width; }
};

// One instantiated layer. Batches are Eigen row-major-by-convention matrices:
// row = sample, columns = flattened [channel][height][width] activations.
class Layer {
public:
    virtual ~Layer() = default;

    virtual LayerKind kind() const = 0;
    virtual TensorShape output_shape() const = 0;

    // Forward caches whatever backward needs; rng feeds dropout masks.
    virtual Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train, Rng& rng) = 0;
    // Gradient of the loss w.r.t. this layer's input; also fills parameter grads.
    virtual Eigen::MatrixXd backward(const Eigen::MatrixXd& grad_out) = 0;

    // Flat parameter/gradient access in a fixed storage order (weights then
    // biases, Eigen column-major within each tensor).
    virtual std::size_t n_params() const { return 0; }
    virtual double get_param(std::size_t) const { return 0.0; }
    virtual void set_param(std::size_t, double) {}
    virtual double get_grad(std::size_t) const { return 0.0; }
    virtual void apply_sgd(double) {}

    // Dropout-only hooks; no-ops elsewhere.
    virtual void freeze_mask(bool) {}
};

struct TrainConfig {
    double learning_rate = 0.01;
    int batch_size = 64;
    int epochs = 100;
    std::uint64_t seed = 0;
    enum class Loss { cross_entropy, squared_l2 } loss = Loss::cross_entropy;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> epoch_loss; // full-set loss, inference mode, end of epoch
};

struct GradientCheckReport {
    double max_rel_error = 0.0;
    bool pass = false;
    long n_checked = 0;
    // One entry per parametric layer: (layer index, max relative error there).
    std::vector<std::pair<int, double>> per_layer;
};

class Network {
public:
    // Builds layers from specs, propagating shapes from input_shape; weights
    // initialized uniform +-sqrt(6/(fan_in+fan_out)) from init_seed, biases 0.
    Network(TensorShape input_shape, std::vector<LayerSpec> specs, std::uint64_t init_seed);

    Network(Network&&) = default;
    Network& operator=(Network&&) = default;
    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    void set_train(bool train) { train_mode_ = train; }
    bool train_mode() const { return train_mode_; }
    void set_dropout_seed(std::uint64_t seed);
    void freeze_dropout(bool frozen);

    // Forward in the current mode; input rows are flattened samples.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
    // Reverse pass from d(loss)/d(output); forward must have run on this batch.
    void backward(const Eigen::MatrixXd& loss_grad);

    TensorShape input_shape() const { return input_shape_; }
    TensorShape output_shape() const;
    const std::vector<LayerSpec>& specs() const { return specs_; }
    int n_layers() const { return static_cast<int>(layers_.size()); }
    Layer& layer(int i) { return *layers_[static_cast<std::size_t>(i)]; }
    const Layer& layer(int i) const { return *layers_[static_cast<std::size_t>(i)]; }
    std::size_t n_params() const;

private:
    TensorShape input_shape_;
    std::vector<LayerSpec> specs_;
    std::vector<std::unique_ptr<Layer>> layers_;
    bool train_mode_ = false;
    Rng dropout_rng_{0};
};

// Row-wise stable softmax (max subtraction) of a single activation vector.
Eigen::VectorXd softmax(const Eigen::VectorXd& a);

// Batch-mean losses and their gradients w.r.t. the network output.
// cross_entropy clamps probabilities at 1e-12 before the log.
double cross_entropy(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& onehot);
Eigen::MatrixXd cross_entropy_grad(const Eigen::MatrixXd& probs, const Eigen::MatrixXd& onehot);
double squared_l2_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);
Eigen::MatrixXd squared_l2_grad(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

// theta <- theta - lr * grad, using the gradients from the last backward().
void sgd_step(Network& net, double learning_rate);

// Seeded-shuffle mini-batch SGD; requires the loss to match the output head
// (cross_entropy needs a softmax head, squared_l2 a non-softmax head).
TrainHistory train(Network& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                   const TrainConfig& config);

// Central-difference check of backward() on one batch. Checks up to
// max_per_layer randomly chosen parameters in every parametric layer; dropout
// masks are frozen for the duration so the loss stays deterministic. Each
// parameter is accepted at the best agreement over a small step ladder around
// `step`, which rides out relu/maxpool kinks and cancellation on tiny
// gradients without masking real backward() bugs (those fail at every step).
GradientCheckReport gradient_check(Network& net, const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& targets, TrainConfig::Loss loss,
                                   double step = 1e-5, double tolerance = 1e-4,
                                   int max_per_layer = 200, std::uint64_t seed = 0);

// The three reference architectures, with both our parameter count and the
// published total (they disagree for the MLPs; see README).
enum class Table1Kind { mlp_classifier, mlp_regressor, cnn_regressor };

struct Table1Build {
    Network net;
    long computed_params = 0;
    long published_params = 0;
};

Table1Build build_table1(Table1Kind kind, std::uint64_t init_seed);

// Same stacks with configurable input width / class count, for deployments
// whose feature dimension or grid size differs from the reference fixture.
Network make_mlp_classifier(int input_dim, int n_classes, std::uint64_t init_seed);
Network make_mlp_regressor(int input_dim, std::uint64_t init_seed);
Network make_cnn_regressor(TensorShape input_shape, std::uint64_t init_seed);

// Model container: magic "CSILOCNN", version, shape + layer table, parameters
// as little-endian doubles, trailing checksum.
void save_network(const Network& net, const std::string& path);
Network load_network(const std::string& path);

} // namespace csiloc
