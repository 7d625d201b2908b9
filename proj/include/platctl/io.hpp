#pragma once

// JSON documents for designs, boundaries, scenarios, events and trial
// outcomes, and the CSV layout of sweeps.

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "platctl/design.hpp"
#include "platctl/events.hpp"
#include "platctl/sweep.hpp"
#include "platctl/trial_sim.hpp"

namespace platctl {

using json = nlohmann::json;

/// Non-finite numbers as strings, infinite lower bounds also accepted as null.
inline json number_to_json(double x) {
  if (std::isnan(x)) return nullptr;
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double number_from_json(const json& j, double null_value) {
  if (j.is_null()) return null_value;
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "Infinity") return kInf;
    if (s == "-inf" || s == "-Infinity") return -kInf;
    throw DesignError("json-number", "cannot read '" + s + "' as a number");
  }
  if (!j.is_number()) throw DesignError("json-number", "expected a number, got " + j.dump());
  return j.get<double>();
}

inline std::vector<double> numbers_from_json(const json& j, double null_value) {
  if (!j.is_array()) throw DesignError("json-array", "expected an array, got " + j.dump());
  std::vector<double> v;
  for (const json& x : j) v.push_back(number_from_json(x, null_value));
  return v;
}

inline json numbers_to_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(number_to_json(x));
  return a;
}

inline void to_json(json& j, const TrialDesign& d) {
  j = json{{"K", d.K}, {"J", d.J}, {"n", d.n}, {"entry", d.entry}, {"sigma", d.sigma}};
}

inline TrialDesign design_from_json(const json& j) {
  for (const char* key : {"K", "J", "n"})
    if (!j.contains(key)) throw DesignError("json-field", std::string("missing field '") + key + "'");
  TrialDesign d;
  d.K = j.at("K").get<int>();
  d.J = j.at("J").get<int>();
  d.n = j.at("n").get<long>();
  d.sigma = j.value("sigma", 1.0);
  if (j.contains("entry"))
    d.entry = j.at("entry").get<std::vector<long>>();
  else
    d.entry.assign(static_cast<std::size_t>(std::max(d.K, 0)) + 1, 0L);
  return d;
}

inline void to_json(json& j, const Boundaries& b) {
  j = json{{"upper", numbers_to_json(b.upper)}, {"lower", numbers_to_json(b.lower)}, {"lower_binding", b.lower_binding}};
}

inline Boundaries bounds_from_json(const json& j) {
  if (!j.contains("upper") || !j.contains("lower"))
    throw DesignError("json-field", "boundaries need both 'upper' and 'lower'");
  Boundaries b;
  b.upper = numbers_from_json(j.at("upper"), kInf);
  b.lower = numbers_from_json(j.at("lower"), -kInf);
  b.lower_binding = j.value("lower_binding", true);
  return b;
}

inline void to_json(json& j, const Scenario& s) { j = json{{"mu", s.mu}}; }

inline Scenario scenario_from_json(const json& j) {
  if (!j.contains("mu")) throw DesignError("json-field", "missing field 'mu'");
  return Scenario{j.at("mu").get<std::vector<double>>()};
}

inline json zindex_to_json(const ZIndex& z) {
  json j{{"k", z.k}, {"kprime", z.kprime}, {"j", z.j}, {"policy", z.post_change ? "post-change-only" : "retain-all"}};
  if (z.post_change) j["jprime"] = z.jprime;
  return j;
}

inline json event_to_json(const EventSpec& e) {
  json terms = json::array();
  for (const Conjunction& c : e.terms) {
    json t = json::array();
    for (const Constraint& k : c)
      t.push_back({{"stat", to_string(k.idx)}, {"lo", number_to_json(k.lo)}, {"hi", number_to_json(k.hi)}});
    terms.push_back(std::move(t));
  }
  return json{{"disjoint", e.disjoint}, {"terms", std::move(terms)}};
}

inline json outcome_to_json(const TrialOutcome& o) {
  json changes = json::array();
  for (const ControlChange& c : o.control_history)
    changes.push_back({{"arm", c.arm}, {"stage", c.stage}, {"accrual", c.accrual}});
  json fates = json::array();
  for (std::size_t k = 1; k < o.arm_fate.size(); ++k) {
    const ArmFate& f = o.arm_fate[k];
    json a{{"arm", k}, {"fate", to_string(f.fate)}};
    if (f.fate != Fate::never_entered) a["stage"] = f.stage, a["accrual"] = f.accrual;
    fates.push_back(std::move(a));
  }
  json trace = json::array();
  for (const TraceEntry& t : o.z_trace) {
    json e = zindex_to_json(t.idx);
    e["value"] = t.value;
    e["accrual"] = t.accrual;
    trace.push_back(std::move(e));
  }
  json blocks = json::array();
  for (const auto& arm : o.blocks.sums) blocks.push_back(numbers_to_json(arm));
  return json{{"policy", to_string(o.policy)},       {"control_history", std::move(changes)},
              {"arm_fate", std::move(fates)},          {"patients_used", o.patients_used},
              {"end_accrual", o.end_accrual},          {"z_trace", std::move(trace)},
              {"block_sums", std::move(blocks)},       {"cohort", o.blocks.n}};
}

inline json frequency_to_json(const Frequency& f) {
  return json{{"value", f.value}, {"se", f.se}, {"count", f.count}, {"trials", f.trials}};
}

/// Every cell of an estimate table that can be nonzero.
inline json estimate_to_json(const TrialDesign& d, const EstimateTable& t) {
  json xi = json::array(), cp = json::array(), overall = json::array();
  for (int k = 1; k <= d.K; ++k) {
    for (int j = 1; j <= d.J; ++j) {
      json e = frequency_to_json(t.xi(k, j));
      e["k"] = k, e["j"] = j;
      xi.push_back(std::move(e));
    }
    json o = frequency_to_json(t.overall_power(k));
    o["kstar"] = k;
    overall.push_back(std::move(o));
  }
  for (int ks = 1; ks <= d.K; ++ks)
    for (int kp = 1; kp <= d.K; ++kp)
      for (int jp = 1; jp <= d.J && kp != ks; ++jp) {
        if (t.change_event(ks, kp, jp).count == 0) continue;
        cp.push_back({{"kstar", ks},
                      {"kprime", kp},
                      {"jprime", jp},
                      {"change_event", frequency_to_json(t.change_event(ks, kp, jp))},
                      {"omega", frequency_to_json(t.omega(ks, kp, jp))},
                      {"conditional_power", frequency_to_json(t.conditional_power(ks, kp, jp))}});
      }
  return json{{"policy", to_string(t.policy)},
              {"reps", t.counts.reps},
              {"xi", std::move(xi)},
              {"conditional", std::move(cp)},
              {"overall_power", std::move(overall)},
              {"any_change", frequency_to_json(frequency(t.counts.any_change, t.counts.reps))},
              {"any_rejection", frequency_to_json(t.fwer())},
              {"wrong_control", frequency_to_json(t.wrong_control())},
              {"mean_patients", t.mean_patients()}};
}

/// Sweep CSV: '#' header lines with the settings, one row per grid point
/// with columns mu<a>_delta[, mu<b>_delta], value_retain, value_discard,
/// difference, err_estimate, then '#' footer lines with the summary.
/// Points whose conditioning probability is below the estimable floor
/// carry "nan" values.
inline void write_sweep_csv(std::ostream& os, const SweepConfig& c, const SweepResult& r,
                            const std::vector<std::string>& provenance = {}) {
  const auto num = [](double x) {
    if (std::isnan(x)) return std::string("nan");
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
  };
  for (const std::string& line : provenance) os << "# " << line << "\n";
  os << "# quantity=" << to_string(c.quantity) << " kstar=" << c.kstar;
  if (c.quantity == Quantity::conditional_power) os << " kprime=" << c.kprime << " jprime=" << c.jprime;
  os << "\n# tol=" << num(c.power.mvn.abs_tol) << " seed=" << c.seed << " simplify=" << (c.power.simplify ? 1 : 0)
     << "\n";
  os << "# base_mu=";
  for (std::size_t i = 0; i < c.base.mu.size(); ++i) os << (i ? "," : "") << num(c.base.mu[i]);
  os << "\n";
  for (const GridAxis& a : c.axes)
    os << "# axis mu" << a.arm << "_delta from=" << num(a.from) << " to=" << num(a.to) << " step=" << num(a.step)
       << "\n";
  for (const GridAxis& a : c.axes) os << "mu" << a.arm << "_delta,";
  os << "value_retain,value_discard,difference,err_estimate\n";
  for (const SweepRow& row : r.rows) {
    for (double v : row.deltas) os << num(v) << ",";
    os << num(row.value_retain) << "," << num(row.value_discard) << "," << num(row.difference) << ","
       << num(row.err_estimate) << "\n";
  }
  const auto where = [&](std::size_t i) {
    std::string s;
    for (std::size_t a = 0; a < c.axes.size(); ++a)
      s += (a ? " " : "") + std::string("mu") + std::to_string(c.axes[a].arm) + "_delta=" + num(r.rows[i].deltas[a]);
    return s;
  };
  const char* col = c.quantity == Quantity::wrong_control ? "value" : "difference";
  os << "# summary column=" << col << " points=" << r.rows.size() << " valid=" << r.summary.valid << "\n";
  if (r.summary.valid > 0) {
    os << "# max=" << num(r.summary.max) << " at " << where(r.summary.argmax) << "\n";
    os << "# min=" << num(r.summary.min) << " at " << where(r.summary.argmin) << "\n";
    os << "# max_abs=" << num(r.summary.max_abs) << " at " << where(r.summary.argmax_abs) << "\n";
  }
}

inline json sweep_summary_to_json(const SweepConfig& c, const SweepResult& r) {
  json j{{"points", r.rows.size()}, {"valid", r.summary.valid}};
  if (r.summary.valid == 0) return j;
  const auto at = [&](std::size_t i) {
    json p;
    for (std::size_t a = 0; a < c.axes.size(); ++a)
      p["mu" + std::to_string(c.axes[a].arm) + "_delta"] = r.rows[i].deltas[a];
    return p;
  };
  j["max"] = r.summary.max;
  j["argmax"] = at(r.summary.argmax);
  j["min"] = r.summary.min;
  j["argmin"] = at(r.summary.argmin);
  j["max_abs"] = r.summary.max_abs;
  j["argmax_abs"] = at(r.summary.argmax_abs);
  return j;
}

}  // namespace platctl
