#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace carpal {

enum class Activation { identity, tanh };

const char* to_string(Activation a);
Activation activation_from_string(const std::string& s);

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
    Activation activation = Activation::identity;

    int in_dim() const { return static_cast<int>(weight.cols()); }
    int out_dim() const { return static_cast<int>(weight.rows()); }
};

struct LayerGrad {
    Eigen::MatrixXd weight;
    Eigen::VectorXd bias;
};

/// Chain of dense layers evaluated column-wise (one sample per column).
class Mlp {
public:
    Mlp() = default;
    explicit Mlp(std::vector<DenseLayer> layers);

    /// Layers with the given widths; weights Glorot-uniform, biases zero.
    static Mlp glorot(int in_dim, const std::vector<int>& widths, const std::vector<Activation>& acts,
                      std::uint64_t seed);

    struct Cache {
        std::vector<Eigen::MatrixXd> activations;  // input followed by every layer output
    };

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache* cache = nullptr) const;
    /// Accumulates parameter gradients into `grads` and returns d loss / d input.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_out, std::vector<LayerGrad>& grads) const;

    std::vector<LayerGrad> zero_grads() const;

    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    int in_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }
    int out_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

private:
    std::vector<DenseLayer> layers_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    bool operator==(const AdamConfig&) const = default;
};

/// First and second moments for one parameter set.
struct AdamState {
    AdamConfig config;
    std::vector<LayerGrad> m;
    std::vector<LayerGrad> v;
    std::int64_t step = 0;

    AdamState() = default;
    AdamState(const std::vector<LayerGrad>& shapes, AdamConfig cfg);

    void apply(std::vector<DenseLayer*>& params, const std::vector<LayerGrad>& grads);
};

}  // namespace carpal
