#include "carpal/predictor.hpp"

#include <algorithm>
#include <numeric>

namespace carpal {

namespace {

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

constexpr double kMinScale = 1e-9;

}  // namespace

bool head::is_positive(int row) {
    return (row >= traj_var && row < traj_var + 6) || row == utility + 1 || row == utility + 3 || row == pred_error;
}

void PredictorConfig::validate() const {
    features.validate();
    require(!trunk.empty(), "trunk needs at least one layer");
    for (int w : trunk) require(w >= 1, "trunk widths must be positive");
    require(utility_hidden >= 1, "utility head width must be positive");
    require(horizon > 0.0, "prediction horizon must be positive");
}

void TrainConfig::validate() const {
    require(pretrain_epochs >= 0 && epochs >= 0, "epoch counts must be non-negative");
    require(batch_size >= 1, "batch size must be >= 1");
    require(adam.lr > 0.0, "learning rate must be positive");
}

PredictorModel PredictorModel::create(const PredictorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    PredictorModel m;
    m.config = cfg;
    const int in = cfg.features.length();
    m.input_mean = Eigen::VectorXd::Zero(in);
    m.input_scale = Eigen::VectorXd::Ones(in);
    m.trunk = Mlp::glorot(in, cfg.trunk, std::vector<Activation>(cfg.trunk.size(), Activation::tanh),
                          derive_seed(seed, 1));
    const int emb = cfg.trunk.back();
    m.traj_head = Mlp::glorot(emb, {12}, {Activation::identity}, derive_seed(seed, 2));
    m.utility_head = Mlp::glorot(emb, {cfg.utility_hidden, 4}, {Activation::tanh, Activation::identity},
                                 derive_seed(seed, 3));
    m.error_head = Mlp::glorot(emb, {1}, {Activation::identity}, derive_seed(seed, 4));
    m.output_offset = Eigen::VectorXd::Zero(head::outputs);
    m.output_scale = Eigen::VectorXd::Ones(head::outputs);
    return m;
}

PredictorModel PredictorModel::zeros(const PredictorConfig& cfg) {
    PredictorModel m = create(cfg, 0);
    for (DenseLayer* l : m.parameters()) {
        l->weight.setZero();
        l->bias.setZero();
    }
    return m;
}

std::vector<DenseLayer*> PredictorModel::parameters() {
    std::vector<DenseLayer*> out;
    for (Mlp* net : {&trunk, &traj_head, &utility_head, &error_head})
        for (auto& l : net->layers()) out.push_back(&l);
    return out;
}

std::size_t PredictorModel::parameter_count() const {
    std::size_t n = 0;
    for (const Mlp* net : {&trunk, &traj_head, &utility_head, &error_head})
        for (const auto& l : net->layers()) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<LayerGrad> PredictorModel::zero_grads() const {
    std::vector<LayerGrad> out;
    for (const Mlp* net : {&trunk, &traj_head, &utility_head, &error_head}) {
        auto g = net->zero_grads();
        out.insert(out.end(), std::make_move_iterator(g.begin()), std::make_move_iterator(g.end()));
    }
    return out;
}

void PredictorModel::fit_input_normalizer(const Eigen::MatrixXd& features) {
    require(features.rows() == input_dim() && features.cols() > 0, "normalizer data has the wrong shape");
    input_mean = features.rowwise().mean();
    const Eigen::VectorXd var = (features.colwise() - input_mean).array().square().rowwise().mean();
    input_scale = var.unaryExpr([](double v) { return v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0; });
}

Eigen::MatrixXd PredictorModel::forward(const Eigen::MatrixXd& features, Cache* cache) const {
    require(features.rows() == input_dim(),
            "feature length " + std::to_string(features.rows()) + " does not match model input " +
                std::to_string(input_dim()));
    const Eigen::MatrixXd xn = ((features.colwise() - input_mean).array().colwise() * input_scale.array()).matrix();
    Cache local;
    Cache& c = cache ? *cache : local;
    const Eigen::MatrixXd h = trunk.forward(xn, &c.trunk);
    const auto b = features.cols();
    c.raw.resize(head::outputs, b);
    c.raw.topRows(12) = traj_head.forward(h, &c.traj);
    c.raw.middleRows(12, 4) = utility_head.forward(h, &c.util);
    c.raw.bottomRows(1) = error_head.forward(h, &c.error);
    Eigen::MatrixXd out(head::outputs, b);
    for (int r = 0; r < head::outputs; ++r) {
        if (head::is_positive(r))
            out.row(r) = output_scale[r] * c.raw.row(r).unaryExpr([](double z) { return softplus(z); });
        else
            out.row(r) = (output_offset[r] + output_scale[r] * c.raw.row(r).array()).matrix();
    }
    return out;
}

std::vector<LayerGrad> PredictorModel::backward(const Cache& cache, const Eigen::MatrixXd& d_out) const {
    Eigen::MatrixXd d_raw(d_out.rows(), d_out.cols());
    for (int r = 0; r < head::outputs; ++r) {
        if (head::is_positive(r))
            d_raw.row(r) = (d_out.row(r).array() * output_scale[r] *
                            cache.raw.row(r).unaryExpr([](double z) { return logistic(z); }).array())
                               .matrix();
        else
            d_raw.row(r) = output_scale[r] * d_out.row(r);
    }
    auto g_trunk = trunk.zero_grads();
    auto g_traj = traj_head.zero_grads();
    auto g_util = utility_head.zero_grads();
    auto g_err = error_head.zero_grads();
    Eigen::MatrixXd dh = traj_head.backward(cache.traj, d_raw.topRows(12), g_traj);
    dh += utility_head.backward(cache.util, d_raw.middleRows(12, 4), g_util);
    dh += error_head.backward(cache.error, d_raw.bottomRows(1), g_err);
    trunk.backward(cache.trunk, dh, g_trunk);
    std::vector<LayerGrad> out;
    for (auto* g : {&g_trunk, &g_traj, &g_util, &g_err})
        out.insert(out.end(), std::make_move_iterator(g->begin()), std::make_move_iterator(g->end()));
    return out;
}

Prediction PredictorModel::unpack(const Eigen::Ref<const Eigen::VectorXd>& out, double horizon) {
    Prediction p;
    std::array<double, 6> mean{};
    for (int i = 0; i < 6; ++i) {
        mean[static_cast<std::size_t>(i)] = out[head::traj_mean + i];
        p.distribution.log_var[static_cast<std::size_t>(i)] = std::log(std::max(out[head::traj_var + i], kVarianceFloor));
    }
    p.distribution.mean = PolyCoeffs::from_flat(mean);
    p.distribution.horizon = horizon;
    p.stats = {out[head::utility], out[head::utility + 1], out[head::utility + 2], out[head::utility + 3]};
    p.pred_error = out[head::pred_error];
    return p;
}

Prediction PredictorModel::predict(const FeatureVector& feat) const {
    const auto flat = feat.flat();
    const Eigen::Map<const Eigen::VectorXd> x(flat.data(), static_cast<Eigen::Index>(flat.size()));
    const Eigen::MatrixXd out = forward(x);
    return unpack(out.col(0), config.horizon);
}

double displacement_error(const PolyCoeffs& mean, Vec2 endpoint, double horizon) {
    return distance(mean.at(horizon), endpoint);
}

LossBreakdown compute_loss(const Eigen::MatrixXd& y, const LossTargets& t, const LossWeights& w,
                           Eigen::MatrixXd* d_out) {
    const auto b = y.cols();
    require(b > 0 && y.rows() == head::outputs, "loss needs a non-empty output batch");
    require(t.coeffs.cols() == b && t.endpoint.cols() == b, "loss targets do not match the batch");
    const bool has_utility = t.utility.size() > 0;
    require(!has_utility || t.utility.cols() == b, "utility targets do not match the batch");
    if (d_out) *d_out = Eigen::MatrixXd::Zero(y.rows(), b);
    LossBreakdown L;
    const double inv_b = 1.0 / static_cast<double>(b);
    const double log_2pi = std::log(2.0 * std::numbers::pi);
    for (Eigen::Index k = 0; k < b; ++k) {
        if (w.nll != 0.0) {
            for (int i = 0; i < 6; ++i) {
                const double m = y(head::traj_mean + i, k);
                const double raw_v = y(head::traj_var + i, k);
                const bool floored = raw_v < kVarianceFloor;
                const double v = floored ? kVarianceFloor : raw_v;
                const double r = t.coeffs(i, k) - m;
                L.nll += 0.5 * (log_2pi + std::log(v)) + r * r / (2.0 * v);
                if (d_out) {
                    (*d_out)(head::traj_mean + i, k) += w.nll * inv_b * (-r / v);
                    if (!floored) (*d_out)(head::traj_var + i, k) += w.nll * inv_b * (0.5 / v - r * r / (2.0 * v * v));
                }
            }
        }
        auto l2 = [&](int row, double target, double scale, double weight, double& acc) {
            const double r = (y(row, k) - target) / scale;
            acc += r * r;
            if (d_out) (*d_out)(row, k) += weight * inv_b * 2.0 * r / scale;
        };
        if (has_utility) {
            if (w.mu_h != 0.0) l2(head::utility + 0, t.utility(0, k), t.l2_scale[0], w.mu_h, L.mu_h);
            if (w.var_h != 0.0) l2(head::utility + 1, t.utility(1, k), t.l2_scale[1], w.var_h, L.var_h);
            if (w.mu_p != 0.0) l2(head::utility + 2, t.utility(2, k), t.l2_scale[2], w.mu_p, L.mu_p);
            if (w.var_p != 0.0) l2(head::utility + 3, t.utility(3, k), t.l2_scale[3], w.var_p, L.var_p);
        }
        if (w.pred_error != 0.0) {
            // Target held constant: no gradient into the trajectory mean.
            const Vec2 mean3{y(0, k) + t.horizon * (y(1, k) + t.horizon * y(2, k)),
                             y(3, k) + t.horizon * (y(4, k) + t.horizon * y(5, k))};
            const double target = distance(mean3, {t.endpoint(0, k), t.endpoint(1, k)});
            l2(head::pred_error, target, t.l2_scale[4], w.pred_error, L.pred_error);
        }
    }
    for (double* v : {&L.nll, &L.mu_h, &L.var_h, &L.mu_p, &L.var_p, &L.pred_error}) *v *= inv_b;
    L.total = w.nll * L.nll + w.mu_h * L.mu_h + w.var_h * L.var_h + w.mu_p * L.mu_p + w.var_p * L.var_p +
              w.pred_error * L.pred_error;
    return L;
}

std::vector<LossBreakdown> run_epochs(PredictorModel& model, AdamState& adam, const TrainingData& data,
                                      const Eigen::MatrixXd& utility, const LossWeights& w,
                                      const std::array<double, 5>& l2_scale, int epochs, int batch_size, Rng& rng) {
    const auto n = static_cast<Eigen::Index>(data.size());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    auto params = model.parameters();
    std::vector<LossBreakdown> curve;
    for (int e = 0; e < epochs; ++e) {
        // Fisher-Yates with an explicit draw keeps the permutation library-independent.
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
        LossBreakdown acc;
        for (Eigen::Index start = 0; start < n; start += batch_size) {
            const Eigen::Index b = std::min<Eigen::Index>(batch_size, n - start);
            LossTargets t;
            t.horizon = data.horizon;
            t.l2_scale = l2_scale;
            Eigen::MatrixXd x(data.features.rows(), b);
            t.coeffs.resize(6, b);
            t.endpoint.resize(2, b);
            if (utility.size() > 0) t.utility.resize(4, b);
            for (Eigen::Index k = 0; k < b; ++k) {
                const Eigen::Index c = order[static_cast<std::size_t>(start + k)];
                x.col(k) = data.features.col(c);
                t.coeffs.col(k) = data.coeffs.col(c);
                t.endpoint.col(k) = data.endpoint.col(c);
                if (utility.size() > 0) t.utility.col(k) = utility.col(c);
            }
            PredictorModel::Cache cache;
            const Eigen::MatrixXd y = model.forward(x, &cache);
            Eigen::MatrixXd d_out;
            const LossBreakdown L = compute_loss(y, t, w, &d_out);
            const auto grads = model.backward(cache, d_out);
            adam.apply(params, grads);
            const double frac = static_cast<double>(b) / static_cast<double>(n);
            acc.total += frac * L.total;
            acc.nll += frac * L.nll;
            acc.mu_h += frac * L.mu_h;
            acc.var_h += frac * L.var_h;
            acc.mu_p += frac * L.mu_p;
            acc.var_p += frac * L.var_p;
            acc.pred_error += frac * L.pred_error;
        }
        curve.push_back(acc);
    }
    return curve;
}

namespace {

struct RowMoments {
    double mean;
    double std;
};

RowMoments moments(const Eigen::Ref<const Eigen::RowVectorXd>& r) {
    const double m = r.mean();
    const double var = (r.array() - m).square().mean();
    return {m, std::sqrt(var)};
}

}  // namespace

TrainResult train(const PredictorConfig& pcfg, const TrainingData& data, const UtilityTargetFn& targets,
                  const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    require(data.size() > 0, "training needs a non-empty dataset");
    require(data.features.rows() == pcfg.features.length(), "training features do not match the model input");
    TrainResult res;
    PredictorModel& model = res.model;
    model = PredictorModel::create(pcfg, seed);
    model.config.horizon = data.horizon;
    model.fit_input_normalizer(data.features);
    for (int i = 0; i < 6; ++i) {
        const RowMoments m = moments(data.coeffs.row(i));
        model.output_offset[head::traj_mean + i] = m.mean;
        model.output_scale[head::traj_mean + i] = std::max(m.std, 1e-3);
        model.output_scale[head::traj_var + i] = std::max(m.std * m.std, kVarianceFloor);
    }

    AdamState adam(model.zero_grads(), cfg.adam);
    Rng rng = make_rng(seed, 0x747261696eULL);
    LossWeights pre{};
    pre.nll = cfg.weights.nll;
    pre.mu_h = pre.var_h = pre.mu_p = pre.var_p = pre.pred_error = 0.0;
    const std::array<double, 5> unit_scale{1.0, 1.0, 1.0, 1.0, 1.0};
    res.report.pretrain =
        run_epochs(model, adam, data, Eigen::MatrixXd(), pre, unit_scale, cfg.pretrain_epochs, cfg.batch_size, rng);

    Eigen::MatrixXd utility;
    std::array<double, 5> l2_scale = unit_scale;
    if (targets) {
        utility = targets(model);
        require(utility.rows() == 4 && utility.cols() == data.features.cols(), "utility targets have the wrong shape");
        for (int i = 0; i < 4; ++i) {
            const RowMoments m = moments(utility.row(i));
            const int row = head::utility + i;
            if (head::is_positive(row)) {
                model.output_scale[row] = std::max(m.mean, kMinScale);
            } else {
                model.output_offset[row] = m.mean;
                model.output_scale[row] = std::max(m.std, kMinScale);
            }
            l2_scale[static_cast<std::size_t>(i)] = std::max(m.std, kMinScale);
        }
    }
    {
        const Eigen::MatrixXd y = model.forward(data.features);
        Eigen::RowVectorXd err(y.cols());
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            const auto p = PredictorModel::unpack(y.col(k), data.horizon);
            err[k] = displacement_error(p.distribution.mean, {data.endpoint(0, k), data.endpoint(1, k)}, data.horizon);
        }
        const RowMoments m = moments(err);
        model.output_scale[head::pred_error] = std::max(m.mean, 1e-3);
        l2_scale[4] = std::max(m.std, 1e-3);
    }
    LossWeights joint = cfg.weights;
    if (!targets) joint.mu_h = joint.var_h = joint.mu_p = joint.var_p = 0.0;
    res.report.joint = run_epochs(model, adam, data, utility, joint, l2_scale, cfg.epochs, cfg.batch_size, rng);
    res.report.utility_targets = std::move(utility);
    return res;
}

std::vector<Trajectory> world_samples(const Prediction& p, const Pose2& ego, std::size_t n, std::uint64_t seed,
                                      double dt) {
    auto local = sample(p.distribution, n, seed, dt);
    for (auto& t : local) t = t.transformed(ego);
    return local;
}

}  // namespace carpal
