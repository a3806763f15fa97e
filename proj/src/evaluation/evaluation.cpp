#include "carpal/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "carpal/grid.hpp"

namespace carpal {

void PipelineConfig::validate() const {
    utility.validate();
    planner.validate();
    noise.validate();
    require(samples >= 1 && plans >= 1, "sample and plan counts must be >= 1");
    require(vehicle.radius >= 0.0 && vehicle.turning_radius > 0.0, "vehicle specs are invalid");
}

void AugmentConfig::validate() const {
    require(fraction >= 0.0 && fraction <= 1.0, "augmentation fraction must be in [0, 1]");
    require(scale > 0.0, "trajectory scale must be positive");
    require(obstacles_min >= 0 && obstacles_max >= obstacles_min, "injected obstacle count range is invalid");
    require(radius_min > 0.0 && radius_max >= radius_min, "injected obstacle radius range is invalid");
    require(lateral_sigma >= 0.0 && goal_keepout >= 0.0, "injection spread must be non-negative");
}

void EvalConfig::validate() const {
    pipeline.validate();
    require(d_s > 0.0, "safe distance must be positive");
    require(eta > 0.0 && eta_abp >= 0.0, "operating thresholds must be positive");
    require(entropy_batch >= 2, "entropy batches need at least two cases");
    require(bootstrap >= 1, "bootstrap needs at least one resample");
}

std::uint64_t case_seed(std::uint64_t seed, const Scenario& sc) {
    return derive_seed(seed, sc.scene.seed ^ (static_cast<std::uint64_t>(sc.augment_mode) << 56));
}

GroundTruth ground_truth(const Scenario& sc, const Prediction& prediction, const PipelineConfig& cfg,
                         std::uint64_t seed) {
    cfg.validate();
    GroundTruth gt;
    const double dt = sc.future.empty() ? 0.1 : sc.future.dt();
    gt.samples = world_samples(prediction, sc.scene.ego.pose(), cfg.samples, derive_seed(seed, 1), dt);
    const UtilityField field = build_utility_field(sc.scene, gt.samples, cfg.utility);
    gt.plans = plan_ensemble(sc.scene, field, cfg.utility, cfg.vehicle, cfg.planner, cfg.noise, cfg.plans,
                             derive_seed(seed, 2));
    std::vector<Trajectory> plan_traj;
    for (const auto& p : gt.plans) {
        plan_traj.push_back(p.trajectory);
        gt.fallbacks += p.fallback ? 1 : 0;
    }
    gt.stats = utility_stats(field, gt.samples, plan_traj);
    gt.driver_utility = trajectory_utility(field, sc.future);
    gt.clearance = kDistanceSentinel;
    for (const auto& p : sc.future.points()) gt.clearance = std::min(gt.clearance, field.clearance(p.xy()));
    return gt;
}

Eigen::MatrixXd utility_targets(const PredictorModel& model, std::span<const Scenario> set, const PipelineConfig& cfg,
                                std::uint64_t seed) {
    Eigen::MatrixXd out(4, static_cast<Eigen::Index>(set.size()));
    const auto n = static_cast<std::ptrdiff_t>(set.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const Scenario& sc = set[static_cast<std::size_t>(i)];
        const Prediction p = model.predict(featurize(sc, model.config.features));
        const UtilityStats s = ground_truth(sc, p, cfg, case_seed(seed, sc)).stats;
        out.col(i) << s.mu_h, s.var_h, s.mu_p, s.var_p;
    }
    return out;
}

Scenario augment_case(const Scenario& sc, int mode, const AugmentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    require(mode == 1 || mode == 2, "augmentation mode must be 1 or 2");
    Scenario out = sc;
    out.augmented = true;
    out.augment_mode = mode;
    out.id = sc.id + (mode == 1 ? "-scaled" : "-obstacle");
    const Pose2 ego = sc.scene.ego.pose();
    if (mode == 1) {
        auto scale = [&](const Trajectory& t) {
            std::vector<TrajPoint> pts;
            for (const auto& p : t.points()) {
                const Vec2 q = ego.to_world(ego.to_local(p.xy()) * cfg.scale);
                pts.push_back({p.t, q.x, q.y});
            }
            return Trajectory(std::move(pts), t.dt());
        };
        out.past = scale(sc.past);
        out.future = scale(sc.future);
        out.scene.ego.speed *= cfg.scale;
        out.scene.ego.accel_cmd *= cfg.scale;
        return out;
    }
    Rng rng = make_rng(seed, 0x61756775ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> lateral(0.0, cfg.lateral_sigma);
    const int count = cfg.obstacles_min + static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.obstacles_max - cfg.obstacles_min + 1));
    const auto& fut = sc.future.points();
    for (int k = 0; k < count; ++k) {
        for (int attempt = 0; attempt < 16; ++attempt) {
            // Somewhere between one second and the end of the observed future.
            const std::size_t lo = std::min<std::size_t>(fut.size() - 1, fut.size() / 3);
            const std::size_t i = lo + static_cast<std::size_t>(unit(rng) * static_cast<double>(fut.size() - lo));
            const std::size_t j = std::min(i, fut.size() - 1);
            const Vec2 p = fut[j].xy();
            const Vec2 prev = j > 0 ? fut[j - 1].xy() : sc.scene.ego.position;
            Vec2 dir = p - prev;
            const double dn = dir.norm();
            dir = dn > 1e-9 ? dir * (1.0 / dn) : Vec2{std::cos(ego.heading), std::sin(ego.heading)};
            const Vec2 c = p + Vec2{-dir.y, dir.x} * lateral(rng);
            const double r = cfg.radius_min + unit(rng) * (cfg.radius_max - cfg.radius_min);
            if (distance(c, sc.scene.ego.position) < r + 2.0) continue;
            if (distance(c, sc.scene.goal) < r + cfg.goal_keepout) continue;
            const Bounds& b = sc.scene.bounds;
            if (c.x - r < b.min.x || c.x + r > b.max.x || c.y - r < b.min.y || c.y + r > b.max.y) continue;
            out.scene.obstacles.push_back(Obstacle::circle(c, r, ObstacleKind::augmented));
            break;
        }
    }
    out.scene.validate();
    return out;
}

std::vector<Scenario> augment_risky(std::span<const Scenario> set, const AugmentConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::vector<Scenario> out(set.begin(), set.end());
    const auto k = static_cast<std::size_t>(std::lround(cfg.fraction * static_cast<double>(set.size())));
    Rng rng = make_rng(seed, 0x7269736bULL);
    std::vector<std::size_t> idx(set.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
    for (std::size_t i = 0; i < k; ++i) {
        const int mode = 1 + static_cast<int>(rng() % 2);
        out[idx[i]] = augment_case(set[idx[i]], mode, cfg, derive_seed(seed, idx[i]));
    }
    return out;
}

bool is_positive(double clearance, double driver_utility, const UtilityStats& truth, double d_s) {
    return clearance < d_s && truth.mu_p > driver_utility;
}

CaseRecord evaluate_case(const PredictorModel& model, const Scenario& sc, const EvalConfig& cfg) {
    const Prediction p = model.predict(featurize(sc, model.config.features));
    const GroundTruth gt = ground_truth(sc, p, cfg.pipeline, case_seed(cfg.label_seed, sc));
    const Pose2 ego = sc.scene.ego.pose();
    CaseRecord r;
    r.id = sc.id;
    r.augmented = sc.augmented;
    r.augment_mode = sc.augment_mode;
    r.clearance = gt.clearance;
    r.driver_utility = gt.driver_utility;
    r.truth = gt.stats;
    r.regressed = p.stats;
    r.pred_error = p.pred_error;
    r.true_error = displacement_error(p.distribution.mean, ego.to_local(sc.future.back().xy()), p.distribution.horizon);
    r.mean_clearance = min_clearance(sc.scene, mean_trajectory(p, ego, sc.future.dt()));
    r.vbp_clearance = min_clearance(sc.scene, constant_velocity_rollout(sc.scene.ego, p.distribution.horizon, sc.future.dt()));
    r.positive = is_positive(r.clearance, r.driver_utility, r.truth, cfg.d_s);
    r.fallbacks = gt.fallbacks;
    return r;
}

std::vector<CaseRecord> evaluate_cases(const PredictorModel& model, std::span<const Scenario> set,
                                       const EvalConfig& cfg) {
    cfg.validate();
    std::vector<CaseRecord> out(set.size());
    const auto n = static_cast<std::ptrdiff_t>(set.size());
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = evaluate_case(model, set[static_cast<std::size_t>(i)], cfg);
    return out;
}

const char* to_string(Method m) {
    switch (m) {
        case Method::carpal: return "carpal";
        case Method::carpal_acausal: return "carpal_acausal";
        case Method::abp: return "abp";
        case Method::abp_acausal: return "abp_acausal";
        case Method::vbp: return "vbp";
    }
    return "unknown";
}

Method method_from_string(const std::string& s) {
    for (Method m : {Method::carpal, Method::carpal_acausal, Method::abp, Method::abp_acausal, Method::vbp})
        if (s == to_string(m)) return m;
    throw ValidationError("unknown method '" + s + "'");
}

Action method_action(const CaseRecord& c, Method method, double threshold, double d_s) {
    switch (method) {
        case Method::carpal: return decide(c.regressed, DecisionThresholds::unified(threshold)).action;
        case Method::carpal_acausal: return decide(c.truth, DecisionThresholds::unified(threshold)).action;
        case Method::abp:
            return c.pred_error > threshold || !(c.mean_clearance < d_s) ? Action::no_action : Action::intervene;
        case Method::abp_acausal:
            return c.true_error > threshold || !(c.mean_clearance < d_s) ? Action::no_action : Action::intervene;
        case Method::vbp: return c.vbp_clearance < d_s ? Action::intervene : Action::no_action;
    }
    return Action::no_action;
}

RocPoint tally(std::span<const CaseRecord> cases, Method method, double threshold, double d_s) {
    RocPoint p;
    p.threshold = threshold;
    for (const auto& c : cases) {
        const Action a = method_action(c, method, threshold, d_s);
        const bool yes = a == Action::intervene;
        p.intervene_count += yes ? 1 : 0;
        p.warn_count += a == Action::warn ? 1 : 0;
        if (c.positive) (yes ? p.tp : p.fn) += 1;
        else (yes ? p.fp : p.tn) += 1;
    }
    if (p.tp + p.fn > 0) p.recall = static_cast<double>(p.tp) / static_cast<double>(p.tp + p.fn);
    if (p.fp + p.tn > 0) p.fallout = static_cast<double>(p.fp) / static_cast<double>(p.fp + p.tn);
    return p;
}

std::vector<double> default_thresholds(Method method) {
    std::vector<double> out;
    switch (method) {
        case Method::carpal:
        case Method::carpal_acausal:
            for (int k = 0; k <= 100; ++k) out.push_back(std::pow(10.0, -9.0 + 0.1 * k));
            break;
        case Method::abp:
        case Method::abp_acausal:
            for (int k = 0; k <= 80; ++k) out.push_back(std::pow(10.0, -2.0 + 0.05 * k));
            break;
        case Method::vbp: out.push_back(std::numeric_limits<double>::quiet_NaN()); break;
    }
    return out;
}

std::vector<RocPoint> roc_sweep(std::span<const CaseRecord> cases, Method method, std::span<const double> thresholds,
                                double d_s) {
    std::vector<RocPoint> out;
    if (method == Method::vbp) {
        out.push_back(tally(cases, method, std::numeric_limits<double>::quiet_NaN(), d_s));
        return out;
    }
    for (double t : thresholds) out.push_back(tally(cases, method, t, d_s));
    return out;
}

std::optional<double> fallout_at_recall(std::span<const RocPoint> curve, double r) {
    std::optional<double> best;
    for (const auto& p : curve)
        if (p.recall && p.fallout && *p.recall >= r - 1e-12 && (!best || *p.fallout < *best)) best = p.fallout;
    return best;
}

namespace {

std::string num(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : "null"; }

}  // namespace

void write_roc_csv_header(std::ostream& out) { out << "method,threshold,recall,fallout,tp,fp,tn,fn\n"; }

void write_roc_csv(std::ostream& out, Method method, std::span<const RocPoint> points) {
    for (const auto& p : points)
        out << to_string(method) << ',' << num(p.threshold) << ',' << opt(p.recall) << ',' << opt(p.fallout) << ','
            << p.tp << ',' << p.fp << ',' << p.tn << ',' << p.fn << '\n';
}

Improvement utility_improvement(std::span<const CaseRecord> cases, Method method, double threshold, double d_s,
                                std::size_t bootstrap, std::uint64_t seed) {
    std::vector<double> rel;
    for (const auto& c : cases) {
        if (!c.positive || method_action(c, method, threshold, d_s) != Action::intervene) continue;
        if (c.driver_utility == 0.0) continue;
        rel.push_back((c.truth.mu_p - c.driver_utility) / std::abs(c.driver_utility));
    }
    Improvement out;
    out.cases = rel.size();
    if (rel.empty()) return out;
    auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); };
    out.mean = mean(rel);
    Rng rng = make_rng(seed, 0x626f6f74ULL);
    std::vector<double> means;
    means.reserve(bootstrap);
    std::vector<double> draw(rel.size());
    for (std::size_t b = 0; b < bootstrap; ++b) {
        for (auto& d : draw) d = rel[rng() % rel.size()];
        means.push_back(mean(draw));
    }
    std::sort(means.begin(), means.end());
    auto q = [&](double f) {
        const auto i = static_cast<std::size_t>(std::floor(f * static_cast<double>(means.size() - 1)));
        return means[i];
    };
    out.ci_low = q(0.025);
    out.ci_high = q(0.975);
    return out;
}

LatencyStats time_regression(const PredictorModel& model, std::span<const Scenario> set, const PipelineConfig& cfg,
                             std::size_t count) {
    require(!set.empty() && count >= 1, "latency measurement needs scenarios");
    using clock = std::chrono::steady_clock;
    std::vector<double> fwd, full;
    for (std::size_t i = 0; i < count; ++i) {
        const Scenario& sc = set[i % set.size()];
        const auto t0 = clock::now();
        const Prediction p = model.predict(featurize(sc, model.config.features));
        const auto t1 = clock::now();
        const GroundTruth gt = ground_truth(sc, p, cfg, case_seed(0, sc));
        const auto t2 = clock::now();
        fwd.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
        full.push_back(std::chrono::duration<double, std::milli>(t2 - t0).count());
        (void)gt;
    }
    auto summarize = [](std::vector<double> v, double& mean, double& p95) {
        mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        p95 = v[std::min(v.size() - 1, static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1)];
    };
    LatencyStats s;
    s.count = count;
    summarize(fwd, s.forward_mean_ms, s.forward_p95_ms);
    summarize(full, s.pipeline_mean_ms, s.pipeline_p95_ms);
    return s;
}

double histogram_entropy(std::span<const double> values) {
    require(!values.empty(), "entropy estimate needs values");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo)) return -std::numeric_limits<double>::infinity();
    const auto n = values.size();
    const auto bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n)))));
    const double w = (hi - lo) / static_cast<double>(bins);
    std::vector<std::size_t> count(bins, 0);
    for (double v : values) count[std::min(bins - 1, static_cast<std::size_t>((v - lo) / w))] += 1;
    double h = 0.0;
    for (std::size_t c : count) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log(p / w);
    }
    return h;
}

std::vector<EntropyBatch> entropy_batches(std::span<const CaseRecord> cases, const EvalConfig& cfg) {
    std::vector<EntropyBatch> out;
    const std::size_t b = cfg.entropy_batch;
    const std::size_t full = cases.size() >= b ? cases.size() / b : (cases.empty() ? 0 : 1);
    for (std::size_t k = 0; k < full; ++k) {
        const auto part = cases.size() >= b ? cases.subspan(k * b, b) : cases;
        std::vector<double> u;
        double var_h = 0.0, var_p = 0.0;
        for (const auto& c : part) {
            const bool act = method_action(c, Method::carpal, cfg.eta, cfg.d_s) == Action::intervene;
            u.push_back(act ? c.truth.mu_p : c.driver_utility);
            var_h += c.regressed.var_h;
            var_p += c.regressed.var_p;
        }
        var_h = std::max(var_h / static_cast<double>(part.size()), std::numeric_limits<double>::min());
        var_p = std::max(var_p / static_cast<double>(part.size()), std::numeric_limits<double>::min());
        EntropyBatch e;
        e.h_u = histogram_entropy(u);
        e.h_h = gaussian_entropy(var_h, cfg.delta_u);
        e.h_p = gaussian_entropy(var_p, cfg.delta_u);
        e.bound = e.h_h + e.h_p;
        e.holds = e.h_u <= e.bound + cfg.entropy_tolerance;
        out.push_back(e);
    }
    return out;
}

}  // namespace carpal
