#include "carpal/mlp.hpp"

#include <random>

#include "carpal/common.hpp"

namespace carpal {

const char* to_string(Activation a) {
    return a == Activation::tanh ? "tanh" : "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::tanh;
    if (s == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + s + "'");
}

Mlp::Mlp(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        require(l.bias.size() == l.weight.rows(), "layer bias does not match its weight rows");
        if (i > 0) require(l.in_dim() == layers_[i - 1].out_dim(), "consecutive layer dimensions do not match");
        require(l.weight.allFinite() && l.bias.allFinite(), "layer parameters must be finite");
    }
}

Mlp Mlp::glorot(int in_dim, const std::vector<int>& widths, const std::vector<Activation>& acts, std::uint64_t seed) {
    require(widths.size() == acts.size(), "one activation per layer");
    Rng rng = make_rng(seed, 0x6d6c70ULL);
    std::vector<DenseLayer> layers;
    int prev = in_dim;
    for (std::size_t i = 0; i < widths.size(); ++i) {
        const double limit = std::sqrt(6.0 / (prev + widths[i]));
        std::uniform_real_distribution<double> u(-limit, limit);
        DenseLayer l;
        l.weight.resize(widths[i], prev);
        for (int r = 0; r < l.weight.rows(); ++r)
            for (int c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = u(rng);
        l.bias = Eigen::VectorXd::Zero(widths[i]);
        l.activation = acts[i];
        layers.push_back(std::move(l));
        prev = widths[i];
    }
    return Mlp(std::move(layers));
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Cache* cache) const {
    Eigen::MatrixXd a = x;
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(a);
    }
    for (const auto& l : layers_) {
        Eigen::MatrixXd z = l.weight * a;
        z.colwise() += l.bias;
        if (l.activation == Activation::tanh) z = z.array().tanh().matrix();
        a = std::move(z);
        if (cache) cache->activations.push_back(a);
    }
    return a;
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_out, std::vector<LayerGrad>& grads) const {
    Eigen::MatrixXd delta = d_out;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const auto& l = layers_[k];
        const Eigen::MatrixXd& out = cache.activations[k + 1];
        if (l.activation == Activation::tanh) delta = (delta.array() * (1.0 - out.array().square())).matrix();
        grads[k].weight.noalias() += delta * cache.activations[k].transpose();
        grads[k].bias += delta.rowwise().sum();
        delta = l.weight.transpose() * delta;
    }
    return delta;
}

std::vector<LayerGrad> Mlp::zero_grads() const {
    std::vector<LayerGrad> g;
    for (const auto& l : layers_)
        g.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
    return g;
}

AdamState::AdamState(const std::vector<LayerGrad>& shapes, AdamConfig cfg) : config(cfg) {
    for (const auto& s : shapes) {
        m.push_back({Eigen::MatrixXd::Zero(s.weight.rows(), s.weight.cols()), Eigen::VectorXd::Zero(s.bias.size())});
        v.push_back(m.back());
    }
}

void AdamState::apply(std::vector<DenseLayer*>& params, const std::vector<LayerGrad>& grads) {
    require(params.size() == grads.size() && grads.size() == m.size(), "optimizer state does not match parameters");
    ++step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    auto update = [&](auto& p, const auto& g, auto& mm, auto& vv) {
        mm = config.beta1 * mm + (1.0 - config.beta1) * g;
        vv = (config.beta2 * vv.array() + (1.0 - config.beta2) * g.array().square()).matrix();
        p.array() -= config.lr * (mm.array() / c1) / ((vv.array() / c2).sqrt() + config.eps);
    };
    for (std::size_t i = 0; i < params.size(); ++i) {
        update(params[i]->weight, grads[i].weight, m[i].weight, v[i].weight);
        update(params[i]->bias, grads[i].bias, m[i].bias, v[i].bias);
    }
}

}  // namespace carpal
