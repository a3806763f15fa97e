#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "carpal/predictor.hpp"
#include "helpers.hpp"

using namespace carpal;

namespace {

PredictorConfig tiny_config() {
    PredictorConfig c;
    c.trunk = {9, 7};
    c.utility_hidden = 5;
    c.features.past_steps = 3;
    c.features.map_cells = 2;
    return c;
}

double relative_error(double a, double n) {
    const double scale = std::max(std::abs(a), std::abs(n));
    return scale < 1e-7 ? std::abs(a - n) * 1e3 : std::abs(a - n) / scale;
}

struct Problem {
    Eigen::MatrixXd x;
    LossTargets targets;
};

Problem random_problem(int input_dim, int batch, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Problem p;
    p.x = Eigen::MatrixXd::NullaryExpr(input_dim, batch, [&] { return n(rng); });
    p.targets.coeffs = Eigen::MatrixXd::NullaryExpr(6, batch, [&] { return n(rng); });
    p.targets.endpoint = Eigen::MatrixXd::NullaryExpr(2, batch, [&] { return 3.0 * n(rng); });
    p.targets.utility = Eigen::MatrixXd::NullaryExpr(4, batch, [&] { return n(rng); });
    p.targets.utility.row(1) = p.targets.utility.row(1).array().abs();
    p.targets.utility.row(3) = p.targets.utility.row(3).array().abs();
    p.targets.l2_scale = {0.7, 1.3, 0.9, 2.0, 1.1};
    return p;
}

}  // namespace

TEST(GradientCheck, MlpAllActivations) {
    for (Activation act : {Activation::identity, Activation::tanh}) {
        Mlp m = Mlp::glorot(4, {6, 3}, {act, Activation::identity}, 11);
        Rng rng(1);
        std::normal_distribution<double> n(0.0, 1.0);
        Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(4, 5, [&] { return n(rng); });
        const Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(3, 5, [&] { return n(rng); });
        auto loss = [&] { return (m.forward(x).array() * w.array()).sum(); };
        Mlp::Cache cache;
        m.forward(x, &cache);
        auto grads = m.zero_grads();
        const Eigen::MatrixXd dx = m.backward(cache, w, grads);
        const double h = 1e-6;
        for (std::size_t l = 0; l < m.layers().size(); ++l) {
            auto& layer = m.layers()[l];
            for (Eigen::Index k = 0; k < layer.weight.size(); ++k) {
                const double keep = layer.weight(k);
                layer.weight(k) = keep + h;
                const double up = loss();
                layer.weight(k) = keep - h;
                const double down = loss();
                layer.weight(k) = keep;
                EXPECT_LE(relative_error(grads[l].weight(k), (up - down) / (2 * h)), 1e-4);
            }
            for (Eigen::Index k = 0; k < layer.bias.size(); ++k) {
                const double keep = layer.bias(k);
                layer.bias(k) = keep + h;
                const double up = loss();
                layer.bias(k) = keep - h;
                const double down = loss();
                layer.bias(k) = keep;
                EXPECT_LE(relative_error(grads[l].bias(k), (up - down) / (2 * h)), 1e-4);
            }
        }
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            const double keep = x(k);
            x(k) = keep + h;
            const double up = loss();
            x(k) = keep - h;
            const double down = loss();
            x(k) = keep;
            EXPECT_LE(relative_error(dx(k), (up - down) / (2 * h)), 1e-4);
        }
    }
}

TEST(GradientCheck, PredictorEveryHeadAndLoss) {
    const PredictorConfig cfg = tiny_config();
    PredictorModel model = PredictorModel::create(cfg, 3);
    // Non-trivial transforms so the output scaling enters the chain rule.
    for (int r = 0; r < head::outputs; ++r) {
        model.output_scale[r] = 0.5 + 0.1 * r;
        if (!head::is_positive(r)) model.output_offset[r] = 0.05 * r;
    }
    const Problem p = random_problem(model.input_dim(), 6, 17);
    // pred_error is covered by its own check; its target is detached from the mean rows.
    const LossWeights w{1.0, 0.8, 1.2, 0.6, 1.5, 0.0};
    auto loss = [&] { return compute_loss(model.forward(p.x), p.targets, w, nullptr).total; };

    PredictorModel::Cache cache;
    const Eigen::MatrixXd out = model.forward(p.x, &cache);
    Eigen::MatrixXd d_out;
    compute_loss(out, p.targets, w, &d_out);
    const auto grads = model.backward(cache, d_out);
    auto params = model.parameters();
    ASSERT_EQ(grads.size(), params.size());
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t l = 0; l < params.size(); ++l) {
        auto check = [&](double& slot, double analytic) {
            const double keep = slot;
            slot = keep + h;
            const double up = loss();
            slot = keep - h;
            const double down = loss();
            slot = keep;
            worst = std::max(worst, relative_error(analytic, (up - down) / (2 * h)));
        };
        for (Eigen::Index k = 0; k < params[l]->weight.size(); ++k) check(params[l]->weight(k), grads[l].weight(k));
        for (Eigen::Index k = 0; k < params[l]->bias.size(); ++k) check(params[l]->bias(k), grads[l].bias(k));
    }
    EXPECT_LE(worst, 1e-4);
}

TEST(GradientCheck, LossWithoutUtilityTargets) {
    const PredictorConfig cfg = tiny_config();
    Problem p = random_problem(cfg.features.length(), 4, 5);
    p.targets.utility.resize(0, 0);
    Rng rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd out = Eigen::MatrixXd::NullaryExpr(head::outputs, 4, [&] { return n(rng); });
    for (int r = 0; r < head::outputs; ++r)
        if (head::is_positive(r)) out.row(r) = out.row(r).array().abs() + 0.1;
    Eigen::MatrixXd d_out;
    LossWeights w;
    w.pred_error = 0.0;
    compute_loss(out, p.targets, w, &d_out);
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        const double keep = out(k);
        out(k) = keep + h;
        const double up = compute_loss(out, p.targets, w, nullptr).total;
        out(k) = keep - h;
        const double down = compute_loss(out, p.targets, w, nullptr).total;
        out(k) = keep;
        EXPECT_LE(relative_error(d_out(k), (up - down) / (2 * h)), 1e-4) << "output " << k;
    }
}

TEST(GradientCheck, PredictionErrorTermIsDetached) {
    const PredictorConfig cfg = tiny_config();
    const Problem p = random_problem(cfg.features.length(), 5, 6);
    Rng rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    const Eigen::MatrixXd out = Eigen::MatrixXd::NullaryExpr(head::outputs, 5, [&] { return n(rng); });
    const LossWeights w{0.0, 0.0, 0.0, 0.0, 0.0, 1.3};
    Eigen::MatrixXd d_out;
    const double total = compute_loss(out, p.targets, w, &d_out).total;
    double oracle = 0.0;
    for (int k = 0; k < 5; ++k) {
        const double T = p.targets.horizon;
        const double ex = out(0, k) + out(1, k) * T + out(2, k) * T * T;
        const double ey = out(3, k) + out(4, k) * T + out(5, k) * T * T;
        const double target = std::hypot(ex - p.targets.endpoint(0, k), ey - p.targets.endpoint(1, k));
        const double r = (out(head::pred_error, k) - target) / p.targets.l2_scale[4];
        oracle += 1.3 * r * r / 5.0;
        EXPECT_NEAR(d_out(head::pred_error, k), 1.3 * 2.0 * r / p.targets.l2_scale[4] / 5.0, 1e-12);
        for (int row = 0; row < head::outputs; ++row)
            if (row != head::pred_error) {
                EXPECT_EQ(d_out(row, k), 0.0);
            }
    }
    EXPECT_NEAR(total, oracle, 1e-12);
}

TEST(Projection, MatchesNormalEquations) {
    Rng rng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Vec2> pts;
        for (int k = 1; k <= 30; ++k) pts.push_back({3.0 * k * 0.1 + 0.2 * n(rng), 0.5 * n(rng)});
        const Trajectory t = Trajectory::from_positions(pts, 0.1, 0.1);
        Eigen::MatrixXd a(30, 3);
        Eigen::VectorXd bx(30), by(30);
        for (int k = 0; k < 30; ++k) {
            const double s = t[k].t;
            a.row(k) << 1.0, s, s * s;
            bx(k) = t[k].x;
            by(k) = t[k].y;
        }
        const Eigen::MatrixXd ata = a.transpose() * a;
        const Eigen::VectorXd cx = ata.ldlt().solve(a.transpose() * bx), cy = ata.ldlt().solve(a.transpose() * by);
        const PolyCoeffs c = project(t);
        for (int i = 0; i < 3; ++i) {
            EXPECT_NEAR(c.ax[i], cx(i), 1e-9);
            EXPECT_NEAR(c.ay[i], cy(i), 1e-9);
        }
    }
}

TEST(Projection, ReconstructsQuadraticsExactly) {
    const PolyCoeffs c{{0.5, 6.0, -0.4}, {-1.0, 0.3, 0.25}};
    const PolyCoeffs back = project(reconstruct(c, 3.0, 0.1));
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(back.ax[i], c.ax[i], 1e-10);
        EXPECT_NEAR(back.ay[i], c.ay[i], 1e-10);
    }
}

TEST(Sampling, MomentsMatchTheDistribution) {
    TrajectoryDistribution d;
    d.mean = {{0.0, 5.0, 0.1}, {0.0, 0.2, -0.05}};
    d.log_var = {std::log(0.04), std::log(0.25), std::log(0.01), std::log(0.09), std::log(0.16), std::log(0.02)};
    const auto draws = sample_coeffs(d, 20000, 4);
    const auto var = d.variances();
    const auto mean = d.mean.flat();
    for (int i = 0; i < 6; ++i) {
        double m = 0.0, s = 0.0;
        for (const auto& c : draws) m += c.flat()[i];
        m /= draws.size();
        for (const auto& c : draws) s += (c.flat()[i] - m) * (c.flat()[i] - m);
        s /= draws.size();
        EXPECT_NEAR(m, mean[i], 4.0 * std::sqrt(var[i] / draws.size()));
        EXPECT_NEAR(s, var[i], 0.05 * var[i]);
    }
}

TEST(Sampling, NllIsTheDiagonalGaussianDensity) {
    TrajectoryDistribution d;
    d.mean = {{0.1, 4.0, 0.0}, {0.0, 0.0, 0.1}};
    d.log_var = {-1.0, 0.0, -2.0, -0.5, 0.3, -3.0};
    const PolyCoeffs x{{0.3, 3.5, 0.2}, {-0.2, 0.4, 0.0}};
    const auto var = d.variances();
    double want = 0.0;
    for (int i = 0; i < 6; ++i) {
        const double r = x.flat()[i] - d.mean.flat()[i];
        want += 0.5 * (std::log(2 * std::numbers::pi * var[i]) + r * r / var[i]);
    }
    EXPECT_NEAR(nll(d, x), want, 1e-12);
}

TEST(Predictor, BatchForwardMatchesColumns) {
    const PredictorModel m = PredictorModel::create(tiny_config(), 9);
    const Problem p = random_problem(m.input_dim(), 5, 3);
    const Eigen::MatrixXd all = m.forward(p.x);
    for (int c = 0; c < 5; ++c) EXPECT_LT((m.forward(p.x.col(c)) - all.col(c)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Predictor, CheckpointRoundTripIsExact) {
    PredictorModel m = PredictorModel::create(tiny_config(), 10);
    m.output_scale[3] = 0.123456789012345;
    const PredictorModel back = model_from_json(model_to_json(m));
    const Problem p = random_problem(m.input_dim(), 3, 1);
    EXPECT_EQ(m.forward(p.x), back.forward(p.x));
    EXPECT_EQ(model_to_json(m), model_to_json(back));
}

TEST(Predictor, FeaturesLiveInTheEgoFrame) {
    Scenario sc = generate_scenario(ScenarioConfig{}, 12);
    const FeatureVector f = featurize(sc, FeatureConfig{});
    ASSERT_EQ(static_cast<int>(f.flat().size()), FeatureConfig{}.length());
    // The newest past point is the ego itself.
    EXPECT_NEAR(f.past_xy[f.past_xy.size() - 2], 0.0, 1e-12);
    EXPECT_NEAR(f.past_xy.back(), 0.0, 1e-12);
    // Rigidly moving the world leaves the features unchanged.
    const Pose2 move{{13.0, -4.0}, 0.7};
    Scenario moved = sc;
    moved.past = sc.past.transformed(move);
    moved.future = sc.future.transformed(move);
    moved.scene.ego.position = move.to_world(sc.scene.ego.position);
    moved.scene.ego.heading = normalize_angle(sc.scene.ego.heading + 0.7);
    moved.scene.goal = move.to_world(sc.scene.goal);
    moved.scene.obstacles.clear();
    sc.scene.obstacles.clear();
    const FeatureVector a = featurize(sc, FeatureConfig{}), b = featurize(moved, FeatureConfig{});
    for (std::size_t i = 0; i < a.past_xy.size(); ++i) EXPECT_NEAR(a.past_xy[i], b.past_xy[i], 1e-9);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(a.goal_hint[i], b.goal_hint[i], 1e-9);
}

TEST(Training, SameSeedSameModel) {
    std::vector<Scenario> set;
    for (int i = 0; i < 24; ++i) set.push_back(generate_scenario(ScenarioConfig{}, 500 + i));
    PredictorConfig pc;
    pc.trunk = {16, 8};
    TrainConfig tc;
    tc.pretrain_epochs = 2;
    tc.epochs = 3;
    tc.batch_size = 8;
    const TrainingData data = make_training_data(set, pc.features);
    const UtilityTargetFn none;
    const auto a = train(pc, data, none, tc, 4), b = train(pc, data, none, tc, 4);
    EXPECT_EQ(model_to_json(a.model), model_to_json(b.model));
    ASSERT_EQ(a.report.joint.size(), 3u);
    EXPECT_TRUE(std::isfinite(a.report.joint.back().total));
}
