#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "carpal/decision.hpp"
#include "carpal/planner.hpp"
#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"
#include "carpal/utility.hpp"

namespace carpal {

/// Everything needed to turn a prediction into ground-truth utility statistics.
struct PipelineConfig {
    UtilityConfig utility;
    VehicleSpecs vehicle;
    PlannerConfig planner;
    NoiseParams noise{5e-4, 0.1, 0.4, 1.2, 1.0, 0.3, 2.0};
    std::size_t samples = 10;  // n, predicted trajectories
    std::size_t plans = 10;    // m, noisy plans
    bool operator==(const PipelineConfig&) const = default;

    void validate() const;
};

struct GroundTruth {
    UtilityStats stats;
    double driver_utility = 0.0;  // u(tau_a) on the same field
    double clearance = 0.0;       // observed future vs the noise-free distance field
    std::vector<Trajectory> samples;
    std::vector<PlanResult> plans;
    std::size_t fallbacks = 0;
};

/// Samples n predictions, builds the noise-free field from them, plans m times under
/// perception noise and scores everything on that field.
GroundTruth ground_truth(const Scenario& scenario, const Prediction& prediction, const PipelineConfig& cfg,
                         std::uint64_t seed);

/// Per-scenario seed for the ground-truth pipeline.
std::uint64_t case_seed(std::uint64_t seed, const Scenario& scenario);

/// mu_h, var_h, mu_p, var_p (4 x N) from each scenario's ground truth under `model`.
Eigen::MatrixXd utility_targets(const PredictorModel& model, std::span<const Scenario> scenarios,
                                const PipelineConfig& cfg, std::uint64_t seed);

struct AugmentConfig {
    double fraction = 0.10;       // share of the set to augment
    double scale = 1.2;           // mode A, ego-frame trajectory scaling
    int obstacles_min = 1;        // mode B, injected obstacles
    int obstacles_max = 2;
    double radius_min = 0.5;      // m
    double radius_max = 1.0;
    double lateral_sigma = 0.5;   // m, spread around the observed future
    double goal_keepout = 2.0;    // m
    bool operator==(const AugmentConfig&) const = default;

    void validate() const;
};

/// Mode 1 scales past and future about the ego by `scale`; mode 2 places obstacles
/// on or near the observed future.
Scenario augment_case(const Scenario& sc, int mode, const AugmentConfig& cfg, std::uint64_t seed);

/// Replaces round(fraction * N) seeded-chosen cases by augmented copies; mode uniform per case.
std::vector<Scenario> augment_risky(std::span<const Scenario> set, const AugmentConfig& cfg, std::uint64_t seed);

struct EvalConfig {
    PipelineConfig pipeline;
    double d_s = 1.6;                         // m, minimum safe distance
    std::uint64_t label_seed = 1601;          // planner noise for labels
    double eta = 1e-2;                        // operating point of the decision rule
    double eta_abp = 1.0;                     // m, operating point of ABP
    double delta_u = 0.0;                     // regressor margin of the entropy bound
    std::size_t entropy_batch = 100;          // scenarios per entropy batch
    double entropy_tolerance = 0.1;           // nats
    std::size_t bootstrap = 2000;
    bool operator==(const EvalConfig&) const = default;

    void validate() const;
};

/// One test case with everything the ROC methods need.
struct CaseRecord {
    std::string id;
    bool augmented = false;
    int augment_mode = 0;
    double clearance = 0.0;        // observed
    double driver_utility = 0.0;   // ground-truth u(tau_a)
    UtilityStats truth;            // ground-truth statistics
    UtilityStats regressed;        // model output
    double pred_error = 0.0;       // regressed displacement error
    double true_error = 0.0;       // observed displacement error of the predicted mean
    double mean_clearance = 0.0;   // predicted mean trajectory vs obstacles
    double vbp_clearance = 0.0;    // constant-velocity rollout vs obstacles
    bool positive = false;
    std::size_t fallbacks = 0;
};

/// positive iff clearance < d_s and mu_p > u(tau_a).
bool is_positive(double clearance, double driver_utility, const UtilityStats& truth, double d_s);

CaseRecord evaluate_case(const PredictorModel& model, const Scenario& sc, const EvalConfig& cfg);
std::vector<CaseRecord> evaluate_cases(const PredictorModel& model, std::span<const Scenario> set,
                                       const EvalConfig& cfg);

enum class Method { carpal, carpal_acausal, abp, abp_acausal, vbp };

const char* to_string(Method m);
Method method_from_string(const std::string& s);

/// Decision of `method` on one case at `threshold` (ignored by vbp).
Action method_action(const CaseRecord& c, Method method, double threshold, double d_s);

struct RocPoint {
    double threshold = 0.0;
    std::optional<double> recall;   // null without positives
    std::optional<double> fallout;  // null without negatives
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t intervene_count = 0;
    std::size_t warn_count = 0;
};

RocPoint tally(std::span<const CaseRecord> cases, Method method, double threshold, double d_s);

/// Log-spaced thresholds covering the method's useful range.
std::vector<double> default_thresholds(Method method);

/// One point per threshold; vbp yields its single fixed point.
std::vector<RocPoint> roc_sweep(std::span<const CaseRecord> cases, Method method, std::span<const double> thresholds,
                                double d_s);

/// Lowest fall-out among points reaching recall >= r.
std::optional<double> fallout_at_recall(std::span<const RocPoint> curve, double r);

void write_roc_csv_header(std::ostream& out);
void write_roc_csv(std::ostream& out, Method method, std::span<const RocPoint> points);

struct Improvement {
    std::size_t cases = 0;
    std::optional<double> mean;  // null without intervened positives
    double ci_low = 0.0;         // 95% percentile bootstrap
    double ci_high = 0.0;
};

/// Mean of (mu_p - u(tau_a)) / |u(tau_a)| over intervened positives.
Improvement utility_improvement(std::span<const CaseRecord> cases, Method method, double threshold, double d_s,
                                std::size_t bootstrap, std::uint64_t seed);

struct LatencyStats {
    double forward_mean_ms = 0.0;
    double forward_p95_ms = 0.0;
    double pipeline_mean_ms = 0.0;
    double pipeline_p95_ms = 0.0;
    std::size_t count = 0;
};

/// Wall-clock single-sample regression against the ground-truth pipeline.
LatencyStats time_regression(const PredictorModel& model, std::span<const Scenario> set, const PipelineConfig& cfg,
                             std::size_t count);

/// Histogram estimate of differential entropy, sqrt(N) equal-width bins.
double histogram_entropy(std::span<const double> values);

struct EntropyBatch {
    double h_u = 0.0;    // histogram entropy of the realised system utility
    double h_h = 0.0;    // Gaussian entropy from the mean regressed var_h
    double h_p = 0.0;
    double bound = 0.0;  // h_h + h_p
    bool holds = false;  // h_u <= bound + tolerance
};

/// Consecutive batches of `batch` cases; the realised utility is mu_p when the regressed
/// rule intervenes and u(tau_a) otherwise.
std::vector<EntropyBatch> entropy_batches(std::span<const CaseRecord> cases, const EvalConfig& cfg);

struct RocCurve {
    Method method;
    std::vector<RocPoint> points;
};

/// Recall against fall-out; regressed curves solid, acausal dashed, vbp as a cross.
std::string roc_svg(std::span<const RocCurve> curves);

/// Three panels: safety, intention and combined utility.
std::string utility_svg(const UtilityField& field, const Scene& scene, std::span<const Trajectory> samples,
                        std::span<const Trajectory> plans, const Trajectory* observed);

}  // namespace carpal
