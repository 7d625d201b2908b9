#pragma once

// Grid sweeps of power quantities over one or two arm effects.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "platctl/design.hpp"
#include "platctl/parallel.hpp"
#include "platctl/power.hpp"

namespace platctl {

enum class Quantity { conditional_power, overall_power, wrong_control };

inline const char* to_string(Quantity q) {
  switch (q) {
    case Quantity::conditional_power: return "conditional-power";
    case Quantity::overall_power: return "overall-power";
    case Quantity::wrong_control: return "wrong-control";
  }
  return "?";
}

inline Quantity parse_quantity(const std::string& s) {
  if (s == "conditional-power" || s == "conditional") return Quantity::conditional_power;
  if (s == "overall-power" || s == "overall") return Quantity::overall_power;
  if (s == "wrong-control") return Quantity::wrong_control;
  throw DesignError("quantity", "unknown sweep quantity '" + s + "'");
}

/// Effect of `arm` over the original control, mu[arm] - mu[0].
struct GridAxis {
  int arm = 1;
  double from = -0.5;
  double to = 1.0;
  double step = 0.05;

  std::vector<double> values() const {
    if (!(step > 0.0)) throw DesignError("axis-step", "grid step must be positive");
    if (to < from) throw DesignError("axis-range", "grid end lies before its start");
    std::vector<double> v;
    for (long i = 0;; ++i) {
      const double x = from + static_cast<double>(i) * step;
      if (x > to + 1e-9 * step) break;
      v.push_back(std::round(x * 1e10) / 1e10);
    }
    return v;
  }
};

struct SweepConfig {
  TrialDesign design;
  Boundaries bounds;
  Scenario base;                 // effects of arms not on an axis
  std::vector<GridAxis> axes;    // one or two
  Quantity quantity = Quantity::conditional_power;
  int kstar = 2;
  int kprime = 1;
  int jprime = 1;
  PowerOptions power{};
  std::uint64_t seed = 0x5eed1234abcdULL;
  unsigned workers = 0;          // 0: PLATCTL_WORKERS or hardware concurrency
};

struct SweepRow {
  std::vector<double> deltas;
  double value_retain = 0.0;
  double value_discard = 0.0;
  double difference = 0.0;       // value_retain - value_discard
  double err_estimate = 0.0;
  std::string status = "ok";
};

struct SweepSummary {
  double max = 0.0, min = 0.0, max_abs = 0.0;
  std::size_t argmax = 0, argmin = 0, argmax_abs = 0;
  std::size_t valid = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  SweepSummary summary;          // over `difference`, or the value for wrong-control
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline void validate_sweep(const SweepConfig& c) {
  if (c.axes.empty() || c.axes.size() > 2) throw DesignError("axis-count", "a sweep has one or two axes");
  for (const GridAxis& a : c.axes)
    if (a.arm < 1 || a.arm > c.design.K) throw DesignError("axis-arm", "axis arm outside 1..K");
  if (c.axes.size() == 2 && c.axes[0].arm == c.axes[1].arm) throw DesignError("axis-arm", "axes must differ");
  validate_scenario(c.design, c.base);
  if (c.quantity == Quantity::conditional_power) {
    detail::check_pair(c.design, c.kstar, c.kprime, c.jprime);
  } else if (c.quantity == Quantity::overall_power && (c.kstar < 1 || c.kstar > c.design.K)) {
    throw DesignError("arm-range", "k* must be an experimental arm");
  }
}

}  // namespace detail

inline SweepRow evaluate_point(const SweepConfig& c, const Scenario& s, std::uint64_t seed) {
  PowerOptions po = c.power;
  po.mvn.seed = seed;
  SweepRow row;
  switch (c.quantity) {
    case Quantity::conditional_power: {
      const auto [r, d] = conditional_power_both(c.design, c.bounds, s, c.kstar, c.kprime, c.jprime, po);
      row.status = to_string(r.status);
      if (r.status == PowerStatus::not_estimable) {
        row.value_retain = row.value_discard = row.difference = std::numeric_limits<double>::quiet_NaN();
        break;
      }
      row.value_retain = r.value;
      row.value_discard = d.value;
      row.err_estimate = std::hypot(r.err, d.err);
      break;
    }
    case Quantity::overall_power: {
      const auto [r, d] = overall_power_both(c.design, c.bounds, s, c.kstar, po);
      row.value_retain = r.value;
      row.value_discard = d.value;
      row.err_estimate = std::hypot(r.err, d.err);
      if (!r.kstar_is_best) row.status = "not-best";
      break;
    }
    case Quantity::wrong_control: {
      const Probability p = wrong_control_prob(c.design, c.bounds, s, po);
      row.value_retain = row.value_discard = p.value;
      row.err_estimate = p.err;
      break;
    }
  }
  if (row.status != "not_estimable") row.difference = row.value_retain - row.value_discard;
  return row;
}

/// Rows in grid order: the last axis varies fastest.
inline SweepResult run_sweep(const SweepConfig& c) {
  detail::validate_sweep(c);
  std::vector<std::vector<double>> grid;
  grid.push_back({});
  for (const GridAxis& a : c.axes) {
    std::vector<std::vector<double>> next;
    for (const auto& prefix : grid)
      for (double v : a.values()) {
        auto p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    grid = std::move(next);
  }
  SweepResult out;
  out.rows.resize(grid.size());
  parallel_for(grid.size(), c.workers, [&](std::size_t i) {
    Scenario s = c.base;
    for (std::size_t a = 0; a < c.axes.size(); ++a)
      s.mu[static_cast<std::size_t>(c.axes[a].arm)] = s.mu[0] + grid[i][a];
    SweepRow row = evaluate_point(c, s, detail::splitmix64(c.seed ^ static_cast<std::uint64_t>(i)));
    row.deltas = grid[i];
    out.rows[i] = std::move(row);
  });

  SweepSummary& sm = out.summary;
  bool first = true;
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const SweepRow& r = out.rows[i];
    const double v = c.quantity == Quantity::wrong_control ? r.value_retain : r.difference;
    if (std::isnan(v)) continue;
    ++sm.valid;
    if (first || v > sm.max) sm.max = v, sm.argmax = i;
    if (first || v < sm.min) sm.min = v, sm.argmin = i;
    if (first || std::abs(v) > sm.max_abs) sm.max_abs = std::abs(v), sm.argmax_abs = i;
    first = false;
  }
  return out;
}

}  // namespace platctl
