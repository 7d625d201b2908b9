// Command-line front end: calibrate, power, sweep, simulate, samplesize.
// Every subcommand reads a JSON config and prints a JSON report on stdout.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "platctl/platctl.hpp"

using namespace platctl;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> reps;
  std::optional<double> tol;
  std::string out;
  std::string policy = "both";
};

json load_config(const std::string& path) {
  if (path.empty()) throw DesignError("config", "--config is required");
  std::ifstream in(path);
  if (!in) throw DesignError("config", "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DesignError("config", "'" + path + "' is not valid JSON: " + e.what());
  }
}

ValidateOptions validate_options(const json& cfg) {
  return ValidateOptions{cfg.value("require_final_decision", true)};
}

double config_tol(const Common& o, const json& cfg) { return o.tol.value_or(cfg.value("tol", 1e-5)); }
std::uint64_t config_seed(const Common& o, const json& cfg) {
  return o.seed.value_or(cfg.value("seed", std::uint64_t{0x5eed1234abcdULL}));
}

struct Resolved {
  TrialDesign design;
  Boundaries bounds;
  json source;
};

/// Boundaries from explicit vectors, from a shape with a given c, or by
/// calibrating the shape to alpha.
Resolved resolve(const json& cfg) {
  Resolved r;
  r.design = design_from_json(cfg);
  if (cfg.contains("upper") || cfg.contains("lower")) {
    r.bounds = bounds_from_json(cfg);
    r.source = {{"kind", "explicit"}};
  } else {
    const ShapeKind kind = parse_shape(cfg.value("shape", std::string("triangular")));
    if (cfg.contains("c")) {
      r.bounds = shape_boundaries({kind, cfg.at("c").get<double>()}, r.design.J);
      r.source = {{"kind", "shape"}, {"shape", to_string(kind)}, {"c", cfg.at("c")}};
    } else {
      validate_design(r.design, shape_boundaries({kind, 1.0}, r.design.J));
      const double alpha = cfg.value("alpha", 0.05);
      const Calibration cal = calibrate_c(r.design, kind, alpha);
      r.bounds = cal.bounds;
      r.source = {{"kind", "calibrated"}, {"shape", to_string(kind)}, {"alpha", alpha},
                  {"c", cal.shape.c},     {"fwer", cal.fwer},         {"fwer_err", cal.fwer_err}};
    }
  }
  validate_design(r.design, r.bounds, validate_options(cfg));
  return r;
}

Scenario scenario_of(const json& cfg, const TrialDesign& d) {
  Scenario s = scenario_from_json(cfg);
  validate_scenario(d, s);
  return s;
}

bool wants(const std::string& policy, Policy p) {
  if (policy == "both") return true;
  if (policy == "retain") return p == Policy::retain;
  if (policy == "discard") return p == Policy::discard;
  throw DesignError("policy", "policy must be retain, discard or both");
}

json probability_json(const Probability& p) { return json{{"value", p.value}, {"err", p.err}}; }

json conditional_json(const ConditionalPower& c) {
  json j{{"status", to_string(c.status)}, {"value", c.value}, {"err", c.err}};
  if (c.status != PowerStatus::zero_branch) j["numerator"] = c.numerator, j["denominator"] = c.denominator;
  return j;
}

json overall_json(const OverallPower& p) {
  return json{{"value", p.value}, {"err", p.err}, {"xi_sum", p.xi_sum}, {"omega_sum", p.omega_sum}};
}

void emit(const json& report, const Common& o) {
  if (!o.out.empty()) {
    std::ofstream f(o.out);
    if (!f) throw DesignError("output", "cannot write '" + o.out + "'");
    f << report.dump(2) << "\n";
  }
  std::cout << report.dump(2) << "\n";
}

int cmd_calibrate(const Common& o, bool dual) {
  const json cfg = load_config(o.config);
  TrialDesign d = design_from_json(cfg);
  const ShapeKind kind = parse_shape(cfg.value("shape", std::string("triangular")));
  validate_design(d, shape_boundaries({kind, 1.0}, d.J));
  CalibrateOptions co;
  if (o.tol) co.fwer.mvn.abs_tol = *o.tol;
  const double alpha = cfg.value("alpha", 0.05);
  const Calibration cal = calibrate_c(d, kind, alpha, co);
  json report{{"design", d},
              {"shape", to_string(kind)},
              {"alpha", alpha},
              {"c", cal.shape.c},
              {"bounds", cal.bounds},
              {"fwer", cal.fwer},
              {"fwer_err", cal.fwer_err},
              {"evaluations", cal.evaluations}};
  if (dual) report["fwer_by_control_change"] = probability_json(fwer_by_control_change(d, cal.bounds, co.fwer));
  emit(report, o);
  return 0;
}

int cmd_power(const Common& o, const std::string& what, std::optional<int> ks, std::optional<int> kp,
              std::optional<int> jp) {
  const json cfg = load_config(o.config);
  const Resolved r = resolve(cfg);
  const Scenario s = scenario_of(cfg, r.design);
  PowerOptions po;
  po.mvn.abs_tol = config_tol(o, cfg);
  po.mvn.seed = config_seed(o, cfg);
  po.simplify = cfg.value("simplify", true);
  const int kstar = ks.value_or(cfg.value("kstar", s.best_arm()));
  const int kprime = kp.value_or(cfg.value("kprime", 1));
  const int jprime = jp.value_or(cfg.value("jprime", 1));

  json report{{"design", r.design}, {"bounds", r.bounds}, {"bounds_source", r.source}, {"scenario", s},
              {"quantity", what}, {"tol", po.mvn.abs_tol}};
  if (what == "conditional") {
    const auto [cr, cd] = conditional_power_both(r.design, r.bounds, s, kstar, kprime, jprime, po);
    report["kstar"] = kstar, report["kprime"] = kprime, report["jprime"] = jprime;
    if (wants(o.policy, Policy::retain)) report["retain"] = conditional_json(cr);
    if (wants(o.policy, Policy::discard)) report["discard"] = conditional_json(cd);
  } else if (what == "overall") {
    const auto [pr, pd] = overall_power_both(r.design, r.bounds, s, kstar, po);
    report["kstar"] = kstar;
    if (!pr.kstar_is_best) report["warning"] = "k* does not have the largest effect";
    if (wants(o.policy, Policy::retain)) report["retain"] = overall_json(pr);
    if (wants(o.policy, Policy::discard)) report["discard"] = overall_json(pd);
  } else if (what == "xi") {
    json per = json::array();
    for (int j = 1; j <= r.design.J; ++j) {
      json e = probability_json(xi(r.design, r.bounds, s, kstar, j, po));
      e["j"] = j;
      per.push_back(std::move(e));
    }
    report["kstar"] = kstar;
    report["xi"] = std::move(per);
  } else if (what == "omega") {
    report["kstar"] = kstar, report["kprime"] = kprime, report["jprime"] = jprime;
    for (Policy p : {Policy::retain, Policy::discard})
      if (wants(o.policy, p))
        report[to_string(p)] = probability_json(omega(r.design, r.bounds, s, kstar, kprime, jprime, p, po));
  } else if (what == "wrong-control") {
    report["value"] = probability_json(wrong_control_prob(r.design, r.bounds, s, po));
  } else if (what == "fwer") {
    FwerOptions fo;
    fo.mvn.abs_tol = std::min(po.mvn.abs_tol, 1e-6);
    report["fwer"] = probability_json(fwer(r.design, r.bounds, fo));
  } else if (what == "threshold") {
    json per = json::array();
    for (int j = 1; j <= r.design.J; ++j)
      if (r.design.accrual(kstar, j) > r.design.accrual(kprime, jprime))
        per.push_back({{"j", j},
                       {"threshold", retain_benefit_threshold(r.design, r.bounds, kstar, kprime, jprime, j)}});
    report["kstar"] = kstar, report["kprime"] = kprime, report["jprime"] = jprime;
    report["retain_benefit_threshold"] = std::move(per);
  } else {
    throw DesignError("quantity", "unknown power quantity '" + what + "'");
  }
  emit(report, o);
  return 0;
}

int cmd_sweep(const Common& o) {
  const json cfg = load_config(o.config);
  const Resolved r = resolve(cfg);
  SweepConfig c;
  c.design = r.design;
  c.bounds = r.bounds;
  c.base = cfg.contains("mu") ? scenario_of(cfg, r.design)
                              : Scenario{std::vector<double>(static_cast<std::size_t>(r.design.K) + 1, 0.0)};
  c.quantity = parse_quantity(cfg.value("quantity", std::string("conditional-power")));
  c.kstar = cfg.value("kstar", 2);
  c.kprime = cfg.value("kprime", 1);
  c.jprime = cfg.value("jprime", 1);
  c.power.mvn.abs_tol = config_tol(o, cfg);
  c.power.simplify = cfg.value("simplify", true);
  c.seed = config_seed(o, cfg);
  if (!cfg.contains("axes")) throw DesignError("axis-count", "sweep config needs 'axes'");
  for (const json& a : cfg.at("axes")) {
    GridAxis g;
    g.arm = a.at("arm").get<int>();
    g.from = a.value("from", g.from);
    g.to = a.value("to", g.to);
    g.step = a.value("step", g.step);
    c.axes.push_back(g);
  }
  const SweepResult res = run_sweep(c);
  std::vector<std::string> prov{"platctl sweep config=" + o.config,
                                "design K=" + std::to_string(c.design.K) + " J=" + std::to_string(c.design.J) +
                                    " n=" + std::to_string(c.design.n) + " entry=" + json(c.design.entry).dump() +
                                    " sigma=" + json(c.design.sigma).dump(),
                                "upper=" + numbers_to_json(c.bounds.upper).dump() +
                                    " lower=" + numbers_to_json(c.bounds.lower).dump(),
                                "bounds_source=" + r.source.dump(),
                                "defaults grid=[-0.5,1.0] step=0.05 tol=1e-05 reps=1000000"};
  if (o.out.empty()) {
    write_sweep_csv(std::cout, c, res, prov);
    return 0;
  }
  std::ofstream f(o.out);
  if (!f) throw DesignError("output", "cannot write '" + o.out + "'");
  write_sweep_csv(f, c, res, prov);
  json report{{"csv", o.out}, {"quantity", to_string(c.quantity)}, {"summary", sweep_summary_to_json(c, res)}};
  std::cout << report.dump(2) << "\n";
  return 0;
}

int cmd_simulate(const Common& o, bool trace) {
  const json cfg = load_config(o.config);
  const Resolved r = resolve(cfg);
  const Scenario s = scenario_of(cfg, r.design);
  const std::uint64_t seed = config_seed(o, cfg);
  json report{{"design", r.design}, {"bounds", r.bounds}, {"bounds_source", r.source}, {"scenario", s}, {"seed", seed}};
  if (trace) {
    for (Policy p : {Policy::retain, Policy::discard}) {
      if (!wants(o.policy, p)) continue;
      const TrialOutcome t = simulate_trial(r.design, r.bounds, s, p, seed);
      json tj = outcome_to_json(t);
      tj["decomposition_residual"] = replay_decomposition_check(r.design, t);
      report[to_string(p)] = std::move(tj);
    }
  } else {
    const long reps = o.reps.value_or(cfg.value("reps", 1000000L));
    if (reps < 1) throw DesignError("reps", "reps must be positive");
    const EstimatePair e = estimate_both(r.design, r.bounds, s, reps, seed);
    report["reps"] = reps;
    if (wants(o.policy, Policy::retain)) report["retain"] = estimate_to_json(r.design, e.retain);
    if (wants(o.policy, Policy::discard)) report["discard"] = estimate_to_json(r.design, e.discard);
  }
  emit(report, o);
  return 0;
}

int cmd_samplesize(const Common& o) {
  const json cfg = load_config(o.config);
  const TrialDesign d = design_from_json(cfg);
  const ShapeKind kind = parse_shape(cfg.value("shape", std::string("triangular")));
  validate_design(d, shape_boundaries({kind, 1.0}, d.J));
  SampleSizeOptions so;
  if (o.tol) so.calibrate.fwer.mvn.abs_tol = *o.tol;
  const double alpha = cfg.value("alpha", 0.05);
  const double target = cfg.value("power", 0.9);
  if (!cfg.contains("theta")) throw DesignError("json-field", "samplesize config needs 'theta'");
  const double theta = cfg.at("theta").get<double>();
  const SampleSize ss = find_sample_size(template_of(d), kind, alpha, target, theta, so);
  json report{{"n", ss.n},
              {"total", ss.total},
              {"pairwise_power", ss.power},
              {"alpha", alpha},
              {"target_power", target},
              {"theta", theta},
              {"shape", to_string(kind)},
              {"c", ss.calibration.shape.c},
              {"bounds", ss.calibration.bounds},
              {"fwer", ss.calibration.fwer},
              {"design", template_of(d).with_n(ss.n)}};
  emit(report, o);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power of platform trials that can change their control arm"};
  app.require_subcommand(1);
  Common o;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->required();
    sub->add_option("--seed", o.seed, "integrator or simulation seed");
    sub->add_option("--reps", o.reps, "simulation replicates");
    sub->add_option("--tol", o.tol, "absolute accuracy of reported probabilities");
    sub->add_option("--out", o.out, "output file");
    sub->add_option("--policy", o.policy, "retain, discard or both")
        ->check(CLI::IsMember({"retain", "discard", "both"}));
  };

  bool dual = false;
  auto* cal = app.add_subcommand("calibrate", "calibrate the boundary scale to a target FWER");
  common(cal);
  cal->add_flag("--dual", dual, "also report the FWER as the sum of control-change probabilities");

  std::string what = "conditional";
  std::optional<int> ks, kp, jp;
  auto* pow = app.add_subcommand("power", "analytic power quantities");
  common(pow);
  auto* qgroup = pow->add_option_group("quantity");
  qgroup->add_flag_callback("--conditional", [&] { what = "conditional"; }, "conditional power of k*");
  qgroup->add_flag_callback("--overall", [&] { what = "overall"; }, "overall power of k*");
  qgroup->add_flag_callback("--xi", [&] { what = "xi"; }, "probability that k* becomes the control");
  qgroup->add_flag_callback("--omega", [&] { what = "omega"; }, "k' becomes the control and k* beats it");
  qgroup->add_flag_callback("--wrong-control", [&] { what = "wrong-control"; },
                            "a non-best arm becomes the control at its first analysis");
  qgroup->add_flag_callback("--fwer", [&] { what = "fwer"; }, "familywise error under the global null");
  qgroup->add_flag_callback("--threshold", [&] { what = "threshold"; }, "retain-benefit thresholds");
  qgroup->require_option(0, 1);
  pow->add_option("--kstar", ks, "arm of interest");
  pow->add_option("--kprime", kp, "arm that becomes the control");
  pow->add_option("--jprime", jp, "stage at which it becomes the control");

  auto* sw = app.add_subcommand("sweep", "grid sweep written as CSV");
  common(sw);

  bool trace = false;
  auto* sim = app.add_subcommand("simulate", "simulate trials");
  common(sim);
  sim->add_flag("--trace", trace, "print one simulated trial instead of frequencies");

  auto* ssz = app.add_subcommand("samplesize", "smallest cohort size for a target pairwise power");
  common(ssz);

  CLI11_PARSE(app, argc, argv);
  try {
    if (cal->parsed()) return cmd_calibrate(o, dual);
    if (pow->parsed()) return cmd_power(o, what, ks, kp, jp);
    if (sw->parsed()) return cmd_sweep(o);
    if (sim->parsed()) return cmd_simulate(o, trace);
    if (ssz->parsed()) return cmd_samplesize(o);
  } catch (const std::exception& e) {
    std::cerr << json{{"error", e.what()}}.dump() << "\n";
    return 2;
  }
  return 1;
}
