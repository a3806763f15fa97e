#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carpal/mlp.hpp"
#include "carpal/scene.hpp"
#include "carpal/trajectory.hpp"
#include "carpal/utility.hpp"

namespace carpal {

struct FeatureConfig {
    int past_steps = 20;          // T_p
    int map_cells = 16;           // F, local map is F x F
    double map_resolution = 0.5;  // m per cell, window F * res ahead of the ego
    bool operator==(const FeatureConfig&) const = default;

    int length() const { return 2 * past_steps + 4 + map_cells * map_cells + 2; }
    void validate() const;
};

/// Observed inputs of one scenario, all in the ego frame at t = 0.
struct FeatureVector {
    std::vector<double> past_xy;     // x0, y0, x1, y1, ... oldest first
    std::vector<double> kinematics;  // speed, yaw_rate, accel_cmd, steer_cmd
    std::vector<double> local_map;   // row-major, rows along +x, 1 = occupied
    std::vector<double> goal_hint;   // unit vector towards the goal

    std::vector<double> flat() const;
    bool operator==(const FeatureVector&) const = default;
};

/// Ego-frame features; the map is sampled from the noise-free obstacles.
FeatureVector featurize(const Scenario& scenario, const FeatureConfig& cfg);

/// Observed future in the ego frame, projected on the quadratic basis.
PolyCoeffs target_coeffs(const Scenario& scenario);

struct PredictorConfig {
    std::vector<int> trunk{128, 64};
    int utility_hidden = 16;
    double horizon = 3.0;  // s, time of the last predicted point
    FeatureConfig features;
    bool operator==(const PredictorConfig&) const = default;

    void validate() const;
};

/// Column layout of the model output.
namespace head {
inline constexpr int traj_mean = 0;     // 6 coefficient means
inline constexpr int traj_var = 6;      // 6 coefficient variances
inline constexpr int utility = 12;      // mu_h, var_h, mu_p, var_p
inline constexpr int pred_error = 16;   // expected displacement error at the horizon
inline constexpr int outputs = 17;

/// Outputs produced through softplus (variances and the displacement error).
bool is_positive(int row);
}  // namespace head

struct Prediction {
    TrajectoryDistribution distribution;  // ego frame
    UtilityStats stats;
    double pred_error = 0.0;
};

class PredictorModel {
public:
    PredictorModel() = default;

    /// Glorot-initialised weights; identity input and output transforms.
    static PredictorModel create(const PredictorConfig& cfg, std::uint64_t seed);
    /// All weights and biases zero; identity transforms.
    static PredictorModel zeros(const PredictorConfig& cfg);

    struct Cache {
        Eigen::MatrixXd raw;  // head outputs before the output transform
        Mlp::Cache trunk, traj, util, error;
    };

    /// features: input_dim x batch. Returns head::outputs x batch.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& features, Cache* cache = nullptr) const;
    Prediction predict(const FeatureVector& feat) const;
    static Prediction unpack(const Eigen::Ref<const Eigen::VectorXd>& out, double horizon);

    /// Gradients for d loss / d outputs, one entry per layer in parameters() order.
    std::vector<LayerGrad> backward(const Cache& cache, const Eigen::MatrixXd& d_out) const;
    std::vector<LayerGrad> zero_grads() const;
    std::vector<DenseLayer*> parameters();

    int input_dim() const { return static_cast<int>(input_mean.size()); }
    std::size_t parameter_count() const;

    PredictorConfig config;
    Eigen::VectorXd input_mean, input_scale;  // x_norm = (x - mean) * scale
    Mlp trunk, traj_head, utility_head, error_head;
    Eigen::VectorXd output_offset, output_scale;  // per output row

    void fit_input_normalizer(const Eigen::MatrixXd& features);
};

struct LossWeights {
    double nll = 1.0;
    double mu_h = 1.0;
    double var_h = 1.0;
    double mu_p = 1.0;
    double var_p = 1.0;
    double pred_error = 1.0;
    bool operator==(const LossWeights&) const = default;
};

struct LossBreakdown {
    double total = 0.0;
    double nll = 0.0;
    double mu_h = 0.0;
    double var_h = 0.0;
    double mu_p = 0.0;
    double var_p = 0.0;
    double pred_error = 0.0;
};

/// Supervision for a batch (columns match the feature columns).
struct LossTargets {
    Eigen::MatrixXd coeffs;    // 6 x B, ego-frame projection of tau_a
    Eigen::MatrixXd endpoint;  // 2 x B, tau_a at the horizon
    Eigen::MatrixXd utility;   // 4 x B, empty when unavailable
    std::array<double, 5> l2_scale{1.0, 1.0, 1.0, 1.0, 1.0};  // mu_h, var_h, mu_p, var_p, pred_error
    double horizon = 3.0;
};

/// Mean loss over the batch; writes d loss / d outputs when `d_out` is given.
LossBreakdown compute_loss(const Eigen::MatrixXd& outputs, const LossTargets& targets, const LossWeights& w,
                           Eigen::MatrixXd* d_out);

struct TrainConfig {
    int pretrain_epochs = 200;
    int epochs = 400;
    int batch_size = 64;
    AdamConfig adam;
    LossWeights weights;
    bool operator==(const TrainConfig&) const = default;

    void validate() const;
};

struct TrainingData {
    Eigen::MatrixXd features;  // input_dim x N
    Eigen::MatrixXd coeffs;    // 6 x N
    Eigen::MatrixXd endpoint;  // 2 x N
    double horizon = 3.0;

    std::size_t size() const { return static_cast<std::size_t>(features.cols()); }
};

TrainingData make_training_data(std::span<const Scenario> scenarios, const FeatureConfig& cfg);

/// Ground-truth utility statistics (4 x N) computed with the given model's samples.
using UtilityTargetFn = std::function<Eigen::MatrixXd(const PredictorModel&)>;

struct TrainReport {
    std::vector<LossBreakdown> pretrain;
    std::vector<LossBreakdown> joint;
    Eigen::MatrixXd utility_targets;
};

struct TrainResult {
    PredictorModel model;
    TrainReport report;
};

/// Optional predictor-only phase, then all heads jointly. Deterministic per seed.
TrainResult train(const PredictorConfig& pcfg, const TrainingData& data, const UtilityTargetFn& targets,
                  const TrainConfig& cfg, std::uint64_t seed);

/// Runs `epochs` passes of mini-batch Adam in place; returns per-epoch mean losses.
std::vector<LossBreakdown> run_epochs(PredictorModel& model, AdamState& adam, const TrainingData& data,
                                      const Eigen::MatrixXd& utility, const LossWeights& w,
                                      const std::array<double, 5>& l2_scale, int epochs, int batch_size, Rng& rng);

/// Distance between the predicted mean and the observed future at the horizon.
double displacement_error(const PolyCoeffs& mean, Vec2 endpoint, double horizon);

/// n predicted trajectories in the world frame.
std::vector<Trajectory> world_samples(const Prediction& p, const Pose2& ego, std::size_t n, std::uint64_t seed,
                                      double dt = 0.1);

std::string model_to_json(const PredictorModel& model);
PredictorModel model_from_json(const std::string& text);
void save_model(const PredictorModel& model, const std::string& path);
PredictorModel load_model(const std::string& path);

}  // namespace carpal
