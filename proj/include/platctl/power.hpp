#pragma once

// Conditional and overall power under both data policies.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "platctl/design.hpp"
#include "platctl/events.hpp"
#include "platctl/mvn.hpp"

namespace platctl {

struct PowerOptions {
  MvnOptions mvn{};              // mvn.abs_tol is the target accuracy of every reported value
  bool simplify = true;          // use the common-start simplification where it is exact
  double estimable_floor = 1e-12;
};

enum class PowerStatus { ok, zero_branch, not_estimable };

inline const char* to_string(PowerStatus s) {
  switch (s) {
    case PowerStatus::ok: return "ok";
    case PowerStatus::zero_branch: return "zero";
    case PowerStatus::not_estimable: return "not_estimable";
  }
  return "?";
}

struct ConditionalPower {
  PowerStatus status = PowerStatus::ok;
  double value = 0.0;
  double err = 0.0;
  double numerator = 0.0;    // P(E1 ∩ E2 ∩ E3 ∩ E4) (retain) or P(E1 ∩ E2 ∩ E3)·P(E4*) (discard)
  double denominator = 0.0;  // P(E1 ∩ E2 ∩ E3)
};

struct PowerRequest {
  TrialDesign design;
  Boundaries bounds;
  Scenario scenario;
  int kstar = 2;
  int kprime = 1;
  int jprime = 1;
  Policy policy = Policy::retain;
};

namespace detail {

inline EventOptions event_options(const PowerOptions& o) { return EventOptions{o.simplify}; }

inline EventSpec change_event(const TrialDesign& d, const Boundaries& b, int kstar, int kprime, int jprime,
                              const PowerOptions& o) {
  const EventOptions eo = event_options(o);
  return intersect({event_E1(d, b, kprime, jprime), event_E2(d, b, kstar, kprime, jprime, eo),
                    event_E3(d, b, kstar, kprime, jprime, eo)});
}

inline bool no_analyses_left(const TrialDesign& d, int kstar, int kprime, int jprime) {
  return d.accrual(kstar, d.J) <= d.accrual(kprime, jprime);
}

inline void check_pair(const TrialDesign& d, int kstar, int kprime, int jprime) {
  if (kstar < 1 || kstar > d.K || kprime < 1 || kprime > d.K)
    throw DesignError("arm-range", "k* and k' must be experimental arms");
  if (kstar == kprime) throw DesignError("distinct-arms", "k* must differ from k'");
  if (jprime < 1 || jprime > d.J) throw DesignError("stage-range", "j' must lie in 1..J");
}

}  // namespace detail

/// Conditional power of k* for both policies, sharing the conditioning
/// probability. `first` is retain, `second` is discard.
inline std::pair<ConditionalPower, ConditionalPower> conditional_power_both(const TrialDesign& d, const Boundaries& b,
                                                                            const Scenario& s, int kstar, int kprime,
                                                                            int jprime, const PowerOptions& o = {}) {
  detail::check_pair(d, kstar, kprime, jprime);
  ConditionalPower retain, discard;
  if (detail::no_analyses_left(d, kstar, kprime, jprime)) {
    retain.status = discard.status = PowerStatus::zero_branch;
    return {retain, discard};
  }
  const double tol = o.mvn.abs_tol;
  const EventSpec cond = detail::change_event(d, b, kstar, kprime, jprime, o);
  ChainTargets want;
  want.ratio = tol;
  const ChainResult r = chain_probability(d, s, cond, crossing_chain(d, b, kstar, kprime, jprime, Policy::retain),
                                          want, o.mvn);
  retain.denominator = discard.denominator = r.lead;
  if (r.lead < o.estimable_floor) {
    retain.status = discard.status = PowerStatus::not_estimable;
    return {retain, discard};
  }
  retain.numerator = r.stopped;
  retain.value = r.ratio;
  retain.err = r.ratio_err;

  const Probability post = event_probability(d, s, event_E4(d, b, kstar, kprime, jprime, Policy::discard), o.mvn);
  discard.value = post.value;
  discard.err = post.err;
  discard.numerator = r.lead * post.value;
  return {retain, discard};
}

/// Probability that k* is declared superior to k' after k' became the
/// control at stage j', given that change happened with k* still in.
inline ConditionalPower conditional_power(const PowerRequest& r, const PowerOptions& o = {}) {
  auto both = conditional_power_both(r.design, r.bounds, r.scenario, r.kstar, r.kprime, r.jprime, o);
  return r.policy == Policy::retain ? both.first : both.second;
}

/// Probability that k* becomes the control at its stage j*.
inline Probability xi(const TrialDesign& d, const Boundaries& b, const Scenario& s, int kstar, int jstar,
                      const PowerOptions& o = {}) {
  const EventOptions eo = detail::event_options(o);
  return event_probability(d, s, intersect(event_E1(d, b, kstar, jstar), event_E3(d, b, kstar, kstar, jstar, eo)),
                           o.mvn);
}

/// Probability that k' becomes the control at stage j' and k* is later
/// found superior to it, under the given policy.
inline Probability omega(const TrialDesign& d, const Boundaries& b, const Scenario& s, int kstar, int kprime,
                         int jprime, Policy policy, const PowerOptions& o = {}) {
  detail::check_pair(d, kstar, kprime, jprime);
  if (detail::no_analyses_left(d, kstar, kprime, jprime)) return {};
  const EventSpec cond = detail::change_event(d, b, kstar, kprime, jprime, o);
  ChainTargets want;
  if (policy == Policy::retain) {
    want.stopped = o.mvn.abs_tol;
    const ChainResult r = chain_probability(d, s, cond, crossing_chain(d, b, kstar, kprime, jprime, policy), want, o.mvn);
    return {r.stopped, r.stopped_err};
  }
  const Probability c = event_probability(d, s, cond, o.mvn);
  const Probability p = event_probability(d, s, event_E4(d, b, kstar, kprime, jprime, Policy::discard), o.mvn);
  return {c.value * p.value, std::hypot(c.err * p.value, p.err * c.value)};
}

struct OverallPower {
  double value = 0.0;
  double err = 0.0;
  double xi_sum = 0.0;     // k* becomes the control itself
  double omega_sum = 0.0;  // k* beats whichever arm became the control
  bool kstar_is_best = true;
};

/// Overall power for both policies; Ξ and the change probabilities are
/// shared. `first` is retain, `second` is discard.
inline std::pair<OverallPower, OverallPower> overall_power_both(const TrialDesign& d, const Boundaries& b,
                                                                const Scenario& s, int kstar,
                                                                const PowerOptions& o = {}) {
  if (kstar < 1 || kstar > d.K) throw DesignError("arm-range", "k* must be an experimental arm");
  OverallPower retain, discard;
  retain.kstar_is_best = discard.kstar_is_best = s[kstar] >= s[s.best_arm()];
  double xi_var = 0.0;
  for (int j = 1; j <= d.J; ++j) {
    const Probability p = xi(d, b, s, kstar, j, o);
    retain.xi_sum += p.value;
    xi_var += p.err * p.err;
  }
  discard.xi_sum = retain.xi_sum;
  double rv = xi_var, dv = xi_var;
  for (int kp = 1; kp <= d.K; ++kp) {
    if (kp == kstar) continue;
    for (int jp = 1; jp <= d.J; ++jp) {
      if (detail::no_analyses_left(d, kstar, kp, jp)) continue;
      const EventSpec cond = detail::change_event(d, b, kstar, kp, jp, o);
      ChainTargets want;
      want.lead = want.stopped = o.mvn.abs_tol;
      const ChainResult r =
          chain_probability(d, s, cond, crossing_chain(d, b, kstar, kp, jp, Policy::retain), want, o.mvn);
      const Probability p = event_probability(d, s, event_E4(d, b, kstar, kp, jp, Policy::discard), o.mvn);
      retain.omega_sum += r.stopped;
      rv += r.stopped_err * r.stopped_err;
      discard.omega_sum += r.lead * p.value;
      dv += std::pow(r.lead_err * p.value, 2) + std::pow(p.err * r.lead, 2);
    }
  }
  retain.value = std::clamp(retain.xi_sum + retain.omega_sum, 0.0, 1.0);
  discard.value = std::clamp(discard.xi_sum + discard.omega_sum, 0.0, 1.0);
  retain.err = std::sqrt(rv);
  discard.err = std::sqrt(dv);
  return {retain, discard};
}

/// Probability that k* either becomes the control or is later found
/// superior to the arm that did. Intended for the best arm;
/// `kstar_is_best` reports whether that holds.
inline OverallPower overall_power(const TrialDesign& d, const Boundaries& b, const Scenario& s, int kstar,
                                  Policy policy, const PowerOptions& o = {}) {
  auto both = overall_power_both(d, b, s, kstar, o);
  return policy == Policy::retain ? both.first : both.second;
}

/// Probability that an arm other than the best becomes the control at its
/// first analysis.
inline Probability wrong_control_prob(const TrialDesign& d, const Boundaries& b, const Scenario& s,
                                      const PowerOptions& o = {}) {
  const int best = s.best_arm();
  Probability total;
  double var = 0.0;
  for (int k = 1; k <= d.K; ++k) {
    if (k == best) continue;
    const Probability p = xi(d, b, s, k, 1, o);
    total.value += p.value;
    var += p.err * p.err;
  }
  total.err = std::sqrt(var);
  return total;
}

/// Value of the full-window statistic at the change point above which
/// keeping pre-change data raises the chance of crossing u_j at stage j.
inline double retain_benefit_threshold(const TrialDesign& d, const Boundaries& b, int kstar, int kprime, int jprime,
                                       int j) {
  const double base = static_cast<double>(std::max(d.start(kstar), d.start(kprime)));
  const double change = static_cast<double>(d.accrual(kprime, jprime));
  const double nj = static_cast<double>(d.accrual(kstar, j));
  if (change <= base) throw DesignError("no-shared-data", "no concurrent data precede the change");
  if (nj <= change) throw DesignError("stage-after-change", "stage j must follow the change");
  return b.u(j) * (std::sqrt(nj - base) - std::sqrt(nj - change)) / std::sqrt(change - base);
}

}  // namespace platctl
