#include "cli.hpp"

#include <cmath>
#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "carpal/evaluation.hpp"
#include "carpal/planner.hpp"
#include "carpal/predictor.hpp"
#include "carpal/scene.hpp"
#include "carpal/session.hpp"
#include "carpal/utility.hpp"

#ifdef CARPAL_WITH_SERVICE
#include <pthread.h>

#include "carpal/server.hpp"
#endif

namespace carpal::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

Json opt_num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double num_from(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

void require_arg(const std::string& value, const char* flag) {
    require(!value.empty(), std::string("missing required option ") + flag);
}

Manifest manifest(const char* command, const Config& cfg, Json args, Json seeds) {
    Manifest m;
    m.command = command;
    m.args = std::move(args);
    m.seeds = std::move(seeds);
    m.config = config_to_json(cfg);
    return m;
}

/// Manifest for a single-file output, written as `<file>.manifest.json` beside it.
void write_beside(Manifest m, const fs::path& out, std::vector<std::string> extra_outputs = {}) {
    const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
    m.outputs.push_back(out.filename().string());
    for (auto& e : extra_outputs) m.outputs.push_back(std::move(e));
    write_manifest(m, dir, out.filename().string() + ".manifest.json");
}

std::vector<Trajectory> intention_samples(const Config& cfg, const Scenario& sc, const std::string& model_path,
                                          std::uint64_t seed) {
    if (model_path.empty()) return {sc.future};
    const PredictorModel model = load_model(model_path);
    const Prediction p = model.predict(featurize(sc, cfg.predictor.features));
    return world_samples(p, sc.scene.ego.pose(), cfg.pipeline.samples, derive_seed(seed, 1), sc.future.dt());
}

// Json (de)serialisation of the recorded flags.
Json args_json(const GenerateOptions& o) {
    return {{"count", o.count}, {"seed", o.seed}, {"out", absolute(o.out)}, {"augment", o.augment}};
}
Json args_json(const TrainOptions& o) {
    return {{"data", absolute(o.data)}, {"out", absolute(o.out)}, {"seed", o.seed}};
}
Json args_json(const UtilityOptions& o) {
    return {{"scenario", absolute(o.scenario)}, {"out", absolute(o.out)}, {"model", absolute(o.model)},
            {"seed", o.seed}};
}
Json args_json(const PlanOptions& o) {
    return {{"scenario", absolute(o.scenario)}, {"out", absolute(o.out)}, {"noise", absolute(o.noise)},
            {"model", absolute(o.model)}, {"m", o.m}, {"seed", o.seed}};
}
Json args_json(const DecideOptions& o) {
    return {{"scenario", absolute(o.scenario)}, {"model", absolute(o.model)}, {"out", absolute(o.out)},
            {"eta", opt_num(o.eta)}};
}
Json args_json(const EvaluateOptions& o) {
    return {{"model", absolute(o.model)}, {"data", absolute(o.data)}, {"out", absolute(o.out)},
            {"eta", opt_num(o.eta)},      {"seed", o.seed},           {"latency", o.latency}};
}

}  // namespace

void run_generate(const Config& cfg, const GenerateOptions& o) {
    require_arg(o.out, "--out");
    require(o.count >= 1, "--count must be >= 1");
    std::vector<Scenario> set;
    set.reserve(o.count);
    for (std::size_t i = 0; i < o.count; ++i) {
        Scenario sc = generate_scenario(cfg.scene, derive_seed(o.seed, i));
        char id[32];
        std::snprintf(id, sizeof id, "case-%05zu", i);
        sc.id = id;
        set.push_back(std::move(sc));
    }
    if (o.augment) set = augment_risky(set, cfg.augment, derive_seed(o.seed, 0x61756721ULL));

    const fs::path out(o.out);
    Manifest m = manifest("generate", cfg, args_json(o), {{"seed", o.seed}});
    Json listed = Json::array();
    for (std::size_t i = 0; i < set.size(); ++i) {
        char name[48];
        std::snprintf(name, sizeof name, "scenarios/case-%05zu.json", i);
        save_scenario(set[i], out / name);
        m.outputs.emplace_back(name);
        listed.push_back(name);
    }
    m.extra = {{"scenarios", std::move(listed)}};
    write_manifest(m, out);
}

void run_train(const Config& cfg, const TrainOptions& o) {
    require_arg(o.data, "--data");
    require_arg(o.out, "--out");
    const std::vector<Scenario> set = load_dataset(o.data);
    const TrainingData data = make_training_data(set, cfg.predictor.features);
    const UtilityTargetFn targets = [&](const PredictorModel& model) {
        return utility_targets(model, set, cfg.pipeline, derive_seed(o.seed, 0x7574696cULL));
    };
    const TrainResult res = train(cfg.predictor, data, targets, cfg.train, o.seed);

    const fs::path out(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_model(res.model, out.string());
    std::ostringstream log;
    log << "phase,epoch,total,nll,mu_h,var_h,mu_p,var_p,pred_error\n";
    auto rows = [&](const char* phase, const std::vector<LossBreakdown>& losses) {
        for (std::size_t e = 0; e < losses.size(); ++e) {
            const auto& l = losses[e];
            log << phase << ',' << e << ',' << num(l.total) << ',' << num(l.nll) << ',' << num(l.mu_h) << ','
                << num(l.var_h) << ',' << num(l.mu_p) << ',' << num(l.var_p) << ',' << num(l.pred_error) << '\n';
        }
    };
    rows("pretrain", res.report.pretrain);
    rows("joint", res.report.joint);
    const std::string log_name = out.filename().string() + ".train.csv";
    write_text(out.parent_path() / log_name, log.str());

    Manifest m = manifest("train", cfg, args_json(o), {{"seed", o.seed}});
    m.extra = {{"scenarios", set.size()}};
    write_beside(std::move(m), out, {log_name});
}

void run_utility(const Config& cfg, const UtilityOptions& o) {
    require_arg(o.scenario, "--scenario");
    require_arg(o.out, "--out");
    const Scenario sc = load_scenario(o.scenario);
    const auto samples = intention_samples(cfg, sc, o.model, o.seed);
    const auto& pc = cfg.pipeline;
    const UtilityField field = build_utility_field(sc.scene, samples, pc.utility);
    std::vector<Trajectory> plans;
    for (auto& r : plan_ensemble(sc.scene, field, pc.utility, pc.vehicle, pc.planner, pc.noise, pc.plans,
                                 derive_seed(o.seed, 2)))
        plans.push_back(std::move(r.trajectory));
    write_text(o.out, utility_svg(field, sc.scene, samples, plans, &sc.future));
    write_beside(manifest("utility", cfg, args_json(o), {{"seed", o.seed}}), o.out);
}

void run_plan(const Config& base, const PlanOptions& o) {
    require_arg(o.scenario, "--scenario");
    require_arg(o.out, "--out");
    Config cfg = base;
    if (!o.noise.empty())
        cfg.pipeline.noise =
            config_from_json("{\"planner\": {\"noise\": " + read_text(o.noise) + "}}").pipeline.noise;
    if (o.m >= 1) cfg.pipeline.plans = static_cast<std::size_t>(o.m);
    cfg.validate();

    const Scenario sc = load_scenario(o.scenario);
    const auto samples = intention_samples(cfg, sc, o.model, o.seed);
    const auto& pc = cfg.pipeline;
    const UtilityField field = build_utility_field(sc.scene, samples, pc.utility);
    const auto plans = plan_ensemble(sc.scene, field, pc.utility, pc.vehicle, pc.planner, pc.noise, pc.plans,
                                     derive_seed(o.seed, 2));
    Json arr = Json::array();
    std::vector<Trajectory> trajs;
    for (const auto& p : plans) {
        Json j = to_json(p);
        j["utility"] = trajectory_utility(field, p.trajectory);
        arr.push_back(std::move(j));
        trajs.push_back(p.trajectory);
    }
    const Json doc{{"scenario", sc.id},
                   {"seed", o.seed},
                   {"plans", std::move(arr)},
                   {"stats", to_json(utility_stats(field, samples, trajs))}};
    write_text(o.out, doc.dump(2) + "\n");
    write_beside(manifest("plan", cfg, args_json(o), {{"seed", o.seed}}), o.out);
}

void run_decide(const Config& cfg, const DecideOptions& o) {
    require_arg(o.scenario, "--scenario");
    require_arg(o.model, "--model");
    require_arg(o.out, "--out");
    const Scenario sc = load_scenario(o.scenario);
    const PredictorModel model = load_model(o.model);
    const Prediction p = model.predict(featurize(sc, cfg.predictor.features));
    const DecisionThresholds th = std::isfinite(o.eta) ? DecisionThresholds::unified(o.eta) : cfg.decision;
    th.validate();
    const DecisionOutcome d = decide(p.stats, th);
    const Json doc{{"scenario", sc.id},
                   {"decision", to_json(d)},
                   {"thresholds", {{"eta_h", th.eta_h}, {"eta_p", th.eta_p}}},
                   {"pred_error", p.pred_error}};
    std::cout << doc.dump(2) << "\n";
    write_text(o.out, doc.dump(2) + "\n");
    write_beside(manifest("decide", cfg, args_json(o), {{"seed", 0}}), o.out);
}

void run_evaluate(const Config& cfg, const EvaluateOptions& o) {
    require_arg(o.model, "--model");
    require_arg(o.data, "--data");
    require_arg(o.out, "--out");
    EvalConfig ecfg = cfg.eval();
    if (o.seed >= 0) ecfg.label_seed = static_cast<std::uint64_t>(o.seed);
    if (std::isfinite(o.eta)) ecfg.eta = o.eta;
    ecfg.validate();

    const PredictorModel model = load_model(o.model);
    const std::vector<Scenario> set = load_dataset(o.data);
    const std::vector<CaseRecord> cases = evaluate_cases(model, set, ecfg);
    const fs::path out(o.out);

    std::ostringstream roc;
    write_roc_csv_header(roc);
    std::vector<RocCurve> curves;
    Json per_method = Json::object();
    for (Method meth : {Method::carpal, Method::carpal_acausal, Method::abp, Method::abp_acausal, Method::vbp}) {
        const auto th = default_thresholds(meth);
        auto pts = roc_sweep(cases, meth, th, ecfg.d_s);
        write_roc_csv(roc, meth, pts);
        Json mj = Json::object();
        for (double r : {0.5, 0.7, 0.9}) {
            const auto f = fallout_at_recall(pts, r);
            mj["fallout_at_recall_" + num(r)] = f ? Json(*f) : Json(nullptr);
        }
        if (meth == Method::vbp && !pts.empty()) {
            mj["recall"] = pts[0].recall ? Json(*pts[0].recall) : Json(nullptr);
            mj["fallout"] = pts[0].fallout ? Json(*pts[0].fallout) : Json(nullptr);
        }
        per_method[to_string(meth)] = std::move(mj);
        curves.push_back({meth, std::move(pts)});
    }
    write_text(out / "roc.csv", roc.str());
    write_text(out / "roc.svg", roc_svg(curves));

    std::ostringstream cs;
    cs << "id,augmented,augment_mode,positive,clearance,driver_utility,mu_h,var_h,mu_p,var_p,reg_mu_h,reg_var_h,"
          "reg_mu_p,reg_var_p,pred_error,true_error,mean_clearance,vbp_clearance,fallbacks,carpal,carpal_acausal,"
          "abp,vbp\n";
    std::size_t positives = 0, agree = 0;
    for (const auto& c : cases) {
        positives += c.positive;
        const Action a = method_action(c, Method::carpal, ecfg.eta, ecfg.d_s);
        const Action b = method_action(c, Method::carpal_acausal, ecfg.eta, ecfg.d_s);
        agree += (a == Action::intervene) == (b == Action::intervene);
        cs << c.id << ',' << c.augmented << ',' << c.augment_mode << ',' << c.positive << ',' << num(c.clearance)
           << ',' << num(c.driver_utility) << ',' << num(c.truth.mu_h) << ',' << num(c.truth.var_h) << ','
           << num(c.truth.mu_p) << ',' << num(c.truth.var_p) << ',' << num(c.regressed.mu_h) << ','
           << num(c.regressed.var_h) << ',' << num(c.regressed.mu_p) << ',' << num(c.regressed.var_p) << ','
           << num(c.pred_error) << ',' << num(c.true_error) << ',' << num(c.mean_clearance) << ','
           << num(c.vbp_clearance) << ',' << c.fallbacks << ',' << to_string(a) << ',' << to_string(b) << ','
           << to_string(method_action(c, Method::abp, ecfg.eta_abp, ecfg.d_s)) << ','
           << to_string(method_action(c, Method::vbp, 0.0, ecfg.d_s)) << '\n';
    }
    write_text(out / "cases.csv", cs.str());

    const Improvement imp = utility_improvement(cases, Method::carpal, ecfg.eta, ecfg.d_s, ecfg.bootstrap,
                                                ecfg.label_seed);
    const auto batches = entropy_batches(cases, ecfg);
    Json eb = Json::array();
    std::size_t holds = 0;
    for (const auto& b : batches) {
        holds += b.holds;
        eb.push_back({{"h_u", opt_num(b.h_u)}, {"h_h", b.h_h}, {"h_p", b.h_p}, {"bound", b.bound}, {"holds", b.holds}});
    }
    const Json summary{
        {"cases", cases.size()},
        {"positives", positives},
        {"eta", ecfg.eta},
        {"agreement", cases.empty() ? 0.0 : static_cast<double>(agree) / static_cast<double>(cases.size())},
        {"methods", std::move(per_method)},
        {"improvement",
         {{"cases", imp.cases}, {"mean", imp.mean ? Json(*imp.mean) : Json(nullptr)}, {"ci_low", imp.ci_low},
          {"ci_high", imp.ci_high}}},
        {"entropy", {{"batches", std::move(eb)}, {"holding", holds}}},
    };
    write_text(out / "summary.json", summary.dump(2) + "\n");

    Manifest m = manifest("evaluate", cfg, args_json(o), {{"label_seed", ecfg.label_seed}});
    m.outputs = {"roc.csv", "roc.svg", "cases.csv", "summary.json"};
    if (o.latency > 0) {
        // Wall-clock numbers; recorded but deliberately left out of the hashed outputs.
        const LatencyStats lat = time_regression(model, set, ecfg.pipeline, o.latency);
        const Json tj{{"count", lat.count},
                      {"forward_mean_ms", lat.forward_mean_ms},
                      {"forward_p95_ms", lat.forward_p95_ms},
                      {"pipeline_mean_ms", lat.pipeline_mean_ms},
                      {"pipeline_p95_ms", lat.pipeline_p95_ms}};
        write_text(out / "timing.json", tj.dump(2) + "\n");
        m.extra = {{"unhashed", {"timing.json"}}};
    }
    write_manifest(m, out);
}

void run_serve(const Config& cfg, const ServeOptions& o) {
    require_arg(o.model, "--model");
#ifdef CARPAL_WITH_SERVICE
    auto model = std::make_shared<const PredictorModel>(load_model(o.model));
    ScenarioSource source;
    source.generated = session_scene_config(cfg);
    if (!o.data.empty()) source.dataset = load_dataset(o.data);
    const std::string address = o.address.empty() ? cfg.service.address : o.address;
    const long port = o.port >= 0 ? o.port : cfg.service.port;
    require(port <= 65535, "--port must be in [0, 65535]");

    // Signals are taken synchronously by this thread; the server runs beside it.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    Server server(cfg, model, std::move(source));
    const unsigned short bound = server.listen(address, static_cast<unsigned short>(port));
    std::cout << "listening on ws://" << address << ":" << bound << std::endl;
    std::thread loop([&] { server.run(); });
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
    loop.join();
#else
    (void)cfg;
    throw std::runtime_error("this build has no session service (configure with -DCARPAL_BUILD_SERVICE=ON)");
#endif
}

fs::path replay(const fs::path& manifest_path, const fs::path& out_dir) {
    Json m;
    try {
        m = Json::parse(read_text(manifest_path));
    } catch (const Json::parse_error& e) {
        throw ValidationError("'" + manifest_path.string() + "' is not valid JSON: " + e.what());
    }
    require(m.contains("command") && m.contains("args") && m.contains("config"),
            "'" + manifest_path.string() + "' is not a carpal manifest");
    const Config cfg = config_from_json(m.at("config").dump());
    const std::string command = m.at("command").get<std::string>();
    const Json& a = m.at("args");
    auto file_in = [&](const Json& j) { return (out_dir / fs::path(j.get<std::string>()).filename()).string(); };
    try {
        if (command == "generate") {
            GenerateOptions o{a.at("count").get<std::size_t>(), a.at("seed").get<std::uint64_t>(), out_dir.string(),
                              a.at("augment").get<bool>()};
            run_generate(cfg, o);
            return out_dir / "manifest.json";
        }
        if (command == "evaluate") {
            EvaluateOptions o{a.at("model").get<std::string>(), a.at("data").get<std::string>(), out_dir.string(),
                              num_from(a.at("eta")), a.at("seed").get<long>(), a.at("latency").get<std::size_t>()};
            run_evaluate(cfg, o);
            return out_dir / "manifest.json";
        }
        std::string out = file_in(a.at("out"));
        if (command == "train") {
            run_train(cfg, {a.at("data").get<std::string>(), out, a.at("seed").get<std::uint64_t>()});
        } else if (command == "utility") {
            run_utility(cfg, {a.at("scenario").get<std::string>(), out, a.at("model").get<std::string>(),
                              a.at("seed").get<std::uint64_t>()});
        } else if (command == "plan") {
            run_plan(cfg, {a.at("scenario").get<std::string>(), out, a.at("noise").get<std::string>(),
                           a.at("model").get<std::string>(), a.at("m").get<long>(), a.at("seed").get<std::uint64_t>()});
        } else if (command == "decide") {
            run_decide(cfg, {a.at("scenario").get<std::string>(), a.at("model").get<std::string>(), out,
                             num_from(a.at("eta"))});
        } else {
            throw ValidationError("manifest command '" + command + "' cannot be replayed");
        }
        return fs::path(out + ".manifest.json");
    } catch (const Json::exception& e) {
        throw ValidationError("'" + manifest_path.string() + "' has malformed args: " + e.what());
    }
}

int run(int argc, char** argv) {
    CLI::App app{"Utility-based intervention decisions for a human-driven vehicle", "carpal"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(0, 1);
    std::string config_path;
    std::string replay_path, replay_out;
    app.add_option("--replay", replay_path, "Re-run the command recorded in a manifest");
    app.add_option("--replay-out", replay_out, "Output directory for --replay");

    auto with_config = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "Config JSON (default: $CARPAL_CONFIG, else built-in defaults)");
    };

    GenerateOptions gen;
    auto* g = app.add_subcommand("generate", "Generate a synthetic scenario set");
    with_config(g);
    g->add_option("--count", gen.count, "Number of scenarios")->capture_default_str();
    g->add_option("--seed", gen.seed, "Master seed")->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_flag("--augment", gen.augment, "Replace evaluation.augment.fraction of the set by augmented cases");

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train the predictor and utility regressor");
    with_config(t);
    t->add_option("--data", tr.data, "Scenario directory")->required();
    t->add_option("--out", tr.out, "Checkpoint path")->required();
    t->add_option("--seed", tr.seed, "Training seed")->capture_default_str();

    UtilityOptions ut;
    auto* u = app.add_subcommand("utility", "Render the utility field of a scenario as SVG");
    with_config(u);
    u->add_option("--scenario", ut.scenario, "Scenario JSON")->required();
    u->add_option("--out", ut.out, "SVG path")->required();
    u->add_option("--model", ut.model, "Checkpoint supplying the intention samples");
    u->add_option("--seed", ut.seed, "Sampling and planning seed")->capture_default_str();

    PlanOptions pl;
    auto* p = app.add_subcommand("plan", "Plan an ensemble under perception noise");
    with_config(p);
    p->add_option("--scenario", pl.scenario, "Scenario JSON")->required();
    p->add_option("--out", pl.out, "Plans JSON path")->required();
    p->add_option("--noise", pl.noise, "JSON object of perception-noise parameters");
    p->add_option("--m", pl.m, "Number of plans");
    p->add_option("--model", pl.model, "Checkpoint supplying the intention samples");
    p->add_option("--seed", pl.seed, "Planning seed")->capture_default_str();

    DecideOptions de;
    auto* d = app.add_subcommand("decide", "Decide on one scenario from regressed statistics");
    with_config(d);
    d->add_option("--scenario", de.scenario, "Scenario JSON")->required();
    d->add_option("--model", de.model, "Checkpoint")->required();
    d->add_option("--eta", de.eta, "Unified variance threshold (default: decision.eta_h / eta_p)");
    d->add_option("--out", de.out, "Decision JSON path")->capture_default_str();

    EvaluateOptions ev;
    auto* e = app.add_subcommand("evaluate", "ROC sweep, utility improvement and entropy checks");
    with_config(e);
    e->add_option("--model", ev.model, "Checkpoint")->required();
    e->add_option("--data", ev.data, "Scenario directory")->required();
    e->add_option("--out", ev.out, "Report directory")->required();
    e->add_option("--eta", ev.eta, "Operating threshold (default: evaluation.eta)");
    e->add_option("--seed", ev.seed, "Label seed (default: evaluation.label_seed)");
    e->add_option("--latency", ev.latency, "Cases to time, 0 to skip")->capture_default_str();

    ServeOptions sv;
    auto* s = app.add_subcommand("serve", "Run the websocket drive-session service");
    with_config(s);
    s->add_option("--model", sv.model, "Checkpoint")->required();
    s->add_option("--data", sv.data, "Scenario directory (default: generated roads)");
    s->add_option("--address", sv.address, "Bind address (default: service.address)");
    s->add_option("--port", sv.port, "Port (default: service.port)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 1;
    }

    try {
        if (!replay_path.empty()) {
            require(app.get_subcommands().empty(), "--replay takes no subcommand");
            require_arg(replay_out, "--replay-out");
            std::cout << replay(replay_path, replay_out).string() << "\n";
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << app.help();
            return 1;
        }
        const Config cfg = resolve_config(config_path);
        const CLI::App* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "generate") run_generate(cfg, gen);
        if (name == "train") run_train(cfg, tr);
        if (name == "utility") run_utility(cfg, ut);
        if (name == "plan") run_plan(cfg, pl);
        if (name == "decide") run_decide(cfg, de);
        if (name == "evaluate") run_evaluate(cfg, ev);
        if (name == "serve") run_serve(cfg, sv);
        return 0;
    } catch (const ValidationError& err) {
        std::cerr << "carpal: " << err.what() << "\n";
        return 1;
    } catch (const std::exception& err) {
        std::cerr << "carpal: " << err.what() << "\n";
        return 2;
    }
}

}  // namespace carpal::cli
