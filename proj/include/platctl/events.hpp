#pragma once

// Trial events as unions of conjunctions of interval constraints on test
// statistics, and their probabilities under a scenario.
//
// Naming follows the decision flow around one control change, where arm k'
// becomes the control at its stage j':
//   E1  k' reaches its upper bound at stage j' after continuing before that;
//   E2  arm k* is still in the trial at that moment;
//   E3  no other arm overtakes k' as the new control;
//   E4  k* is later declared superior to k' (full-window statistics);
//   E4* the same using only post-change data.
//
// Every generator below emits terms that are pairwise disjoint, so event
// probabilities are plain sums over terms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "platctl/design.hpp"
#include "platctl/joint_dist.hpp"
#include "platctl/mvn.hpp"

namespace platctl {

/// lo < Z < hi for one statistic; infinite limits allowed.
struct Constraint {
  ZIndex idx;
  double lo = -kInf;
  double hi = kInf;
};

using Conjunction = std::vector<Constraint>;

/// An empty term list is the impossible event; a single empty conjunction
/// is the sure event.
struct EventSpec {
  std::vector<Conjunction> terms;
  bool disjoint = true;

  static EventSpec sure() { return EventSpec{{Conjunction{}}, true}; }
  static EventSpec impossible() { return EventSpec{{}, true}; }
  static EventSpec single(Conjunction c) { return EventSpec{{std::move(c)}, true}; }

  bool is_sure() const { return terms.size() == 1 && terms.front().empty(); }
};

struct EventOptions {
  /// Replace "(Z_{k,0} <= u) or (Z_{k,k'} < 0)" at the change point by
  /// "Z_{k,k'} < 0" when arm k and the new control entered together. Only
  /// valid inside an intersection with E1 for the same change.
  bool simplify_common_start = false;
};

namespace detail {

inline void push_continue(Conjunction& c, const Boundaries& b, int arm, int comparator, int from, int to) {
  for (int i = from; i <= to; ++i) c.push_back({ZIndex::retain(arm, comparator, i), b.l(i), b.u(i)});
}

inline Conjunction join(const Conjunction& a, const Conjunction& b) {
  Conjunction out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

/// Collapses constraints per canonical statistic. Returns false when the
/// conjunction is empty.
inline bool collapse(const TrialDesign& d, const Conjunction& c, std::vector<ZIndex>& idx, std::vector<double>& lo,
                     std::vector<double>& hi) {
  idx.clear(), lo.clear(), hi.clear();
  for (const Constraint& k : c) {
    const ZIndex z = canonicalize(d, k.idx);
    auto it = std::find(idx.begin(), idx.end(), z);
    if (it == idx.end()) {
      idx.push_back(z), lo.push_back(k.lo), hi.push_back(k.hi);
    } else {
      const auto p = static_cast<std::size_t>(it - idx.begin());
      lo[p] = std::max(lo[p], k.lo);
      hi[p] = std::min(hi[p], k.hi);
    }
  }
  for (std::size_t i = 0; i < idx.size(); ++i)
    if (!(lo[i] < hi[i])) return false;
  return true;
}

/// True when the two conjunctions cannot hold together.
inline bool contradictory(const TrialDesign& d, const Conjunction& a, const Conjunction& b) {
  std::vector<ZIndex> idx;
  std::vector<double> lo, hi;
  return !collapse(d, join(a, b), idx, lo, hi);
}

}  // namespace detail

/// Intersection of two events; the product of disjoint unions stays disjoint.
inline EventSpec intersect(const EventSpec& a, const EventSpec& b) {
  EventSpec out;
  out.disjoint = a.disjoint && b.disjoint;
  for (const Conjunction& x : a.terms)
    for (const Conjunction& y : b.terms) out.terms.push_back(detail::join(x, y));
  return out;
}

inline EventSpec intersect(std::initializer_list<EventSpec> events) {
  EventSpec out = EventSpec::sure();
  for (const EventSpec& e : events) out = intersect(out, e);
  return out;
}

/// Arm k' becomes the control at its stage j'.
inline EventSpec event_E1(const TrialDesign& d, const Boundaries& b, int kprime, int jprime) {
  if (jprime < 1 || jprime > d.J) throw DesignError("stage-range", "j' must lie in 1..J");
  Conjunction c;
  detail::push_continue(c, b, kprime, 0, 1, jprime - 1);
  c.push_back({ZIndex::retain(kprime, 0, jprime), b.u(jprime), kInf});
  return EventSpec::single(std::move(c));
}

/// Arm k* is still in the trial when k' becomes the control at stage j'.
inline EventSpec event_E2(const TrialDesign& d, const Boundaries& b, int kstar, int kprime, int jprime,
                          EventOptions opts = {}) {
  if (kstar == kprime) throw StructuralError("E2 requires k* != k'");
  const long change = d.accrual(kprime, jprime);
  if (d.accrual(kstar, 1) > change) return EventSpec::sure();
  const int jh = last_stage_before(d, kstar, kprime, jprime);
  if (d.accrual(kstar, jh) < change) {
    Conjunction c;
    detail::push_continue(c, b, kstar, 0, 1, jh);
    return EventSpec::single(std::move(c));
  }
  Conjunction base;
  detail::push_continue(base, b, kstar, 0, 1, jh - 1);
  if (opts.simplify_common_start && d.start(kstar) == d.start(kprime)) {
    Conjunction c = base;
    c.push_back({ZIndex::retain(kstar, 0, jh), b.l(jh), kInf});
    c.push_back({ZIndex::retain(kstar, kprime, jh), -kInf, 0.0});
    return EventSpec::single(std::move(c));
  }
  Conjunction below = base, above = base;
  below.push_back({ZIndex::retain(kstar, 0, jh), b.l(jh), b.u(jh)});
  above.push_back({ZIndex::retain(kstar, 0, jh), b.u(jh), kInf});
  above.push_back({ZIndex::retain(kstar, kprime, jh), -kInf, 0.0});
  return EventSpec{{std::move(below), std::move(above)}, true};
}

/// The fate of one competing arm k that keeps k' as the change winner.
inline EventSpec competitor_event(const TrialDesign& d, const Boundaries& b, int k, int kprime, int jprime,
                                  EventOptions opts = {}) {
  const long change = d.accrual(kprime, jprime);
  if (d.accrual(k, 1) > change) return EventSpec::sure();
  const int jh = last_stage_before(d, k, kprime, jprime);
  EventSpec out;
  for (int i = 1; i < jh; ++i) {
    if (b.l(i) == -kInf) continue;
    Conjunction c;
    detail::push_continue(c, b, k, 0, 1, i - 1);
    c.push_back({ZIndex::retain(k, 0, i), -kInf, b.l(i)});
    out.terms.push_back(std::move(c));
  }
  Conjunction base;
  detail::push_continue(base, b, k, 0, 1, jh - 1);
  if (d.accrual(k, jh) < change) {
    base.push_back({ZIndex::retain(k, 0, jh), -kInf, b.u(jh)});
    out.terms.push_back(std::move(base));
  } else if (opts.simplify_common_start && d.start(k) == d.start(kprime)) {
    base.push_back({ZIndex::retain(k, kprime, jh), -kInf, 0.0});
    out.terms.push_back(std::move(base));
  } else {
    Conjunction below = base, above = base;
    below.push_back({ZIndex::retain(k, 0, jh), -kInf, b.u(jh)});
    above.push_back({ZIndex::retain(k, 0, jh), b.u(jh), kInf});
    above.push_back({ZIndex::retain(k, kprime, jh), -kInf, 0.0});
    out.terms.push_back(std::move(below));
    out.terms.push_back(std::move(above));
  }
  return out;
}

/// No arm other than k* and k' becomes the control instead of k'.
inline EventSpec event_E3(const TrialDesign& d, const Boundaries& b, int kstar, int kprime, int jprime,
                          EventOptions opts = {}) {
  EventSpec out = EventSpec::sure();
  for (int k = 1; k <= d.K; ++k) {
    if (k == kstar || k == kprime) continue;
    out = intersect(out, competitor_event(d, b, k, kprime, jprime, opts));
  }
  return out;
}

/// k* is found superior to k' at one of its analyses after the change.
/// Requires n_{k*,J} > n_{k',j'}.
inline EventSpec event_E4(const TrialDesign& d, const Boundaries& b, int kstar, int kprime, int jprime, Policy policy) {
  if (kstar == kprime) throw StructuralError("E4 requires k* != k'");
  const int jh = last_stage_before(d, kstar, kprime, jprime);
  if (jh >= d.J) throw StructuralError("E4: arm " + std::to_string(kstar) + " has no analyses after the change");
  const auto stat = [&](int i) {
    return policy == Policy::retain ? ZIndex::retain(kstar, kprime, i) : ZIndex::post(kstar, kprime, i, jprime);
  };
  EventSpec out;
  for (int i = jh + 1; i <= d.J; ++i) {
    Conjunction c;
    for (int h = jh + 1; h < i; ++h) c.push_back({stat(h), b.l(h), b.u(h)});
    c.push_back({stat(i), b.u(i), kInf});
    out.terms.push_back(std::move(c));
  }
  return out;
}

/// A sequence of statistics read in order; the walk stops at the first one
/// inside its stopping interval and goes on while inside its continuation
/// interval.
struct StopChain {
  std::vector<ZIndex> stats;
  std::vector<double> cont_lo, cont_hi, stop_lo, stop_hi;
};

/// E4 written as a chain over k*'s analyses after the change.
inline StopChain crossing_chain(const TrialDesign& d, const Boundaries& b, int kstar, int kprime, int jprime,
                                Policy policy) {
  const EventSpec e = event_E4(d, b, kstar, kprime, jprime, policy);
  StopChain c;
  for (const Constraint& k : e.terms.back()) {
    c.stats.push_back(k.idx);
    const int j = k.idx.j;
    c.cont_lo.push_back(b.l(j));
    c.cont_hi.push_back(b.u(j));
    c.stop_lo.push_back(b.u(j));
    c.stop_hi.push_back(kInf);
  }
  return c;
}

/// Rewrites an arbitrary union as a disjoint one: term i is replaced by
/// term i minus every earlier term, where the complement of a conjunction
/// c1..cm is split as (not c1) or (c1 and not c2) or ...
inline EventSpec disjointify(const TrialDesign& d, const EventSpec& e) {
  if (e.disjoint) return e;
  bool already = true;
  for (std::size_t i = 0; i < e.terms.size() && already; ++i)
    for (std::size_t j = 0; j < i && already; ++j) already = detail::contradictory(d, e.terms[i], e.terms[j]);
  if (already) return EventSpec{e.terms, true};

  EventSpec out;
  for (std::size_t i = 0; i < e.terms.size(); ++i) {
    std::vector<Conjunction> pieces{e.terms[i]};
    for (std::size_t p = 0; p < i; ++p) {
      std::vector<Conjunction> next;
      for (const Conjunction& piece : pieces) {
        if (detail::contradictory(d, piece, e.terms[p])) {
          next.push_back(piece);
          continue;
        }
        Conjunction prefix = piece;
        for (const Constraint& c : e.terms[p]) {
          if (c.lo > -kInf) {
            Conjunction below = prefix;
            below.push_back({c.idx, -kInf, c.lo});
            if (!detail::contradictory(d, below, {})) next.push_back(std::move(below));
          }
          if (c.hi < kInf) {
            Conjunction above = prefix;
            above.push_back({c.idx, c.hi, kInf});
            if (!detail::contradictory(d, above, {})) next.push_back(std::move(above));
          }
          prefix.push_back(c);
          if (detail::contradictory(d, prefix, {})) break;
        }
      }
      pieces = std::move(next);
    }
    for (Conjunction& c : pieces) out.terms.push_back(std::move(c));
  }
  out.disjoint = true;
  return out;
}

struct Probability {
  double value = 0.0;
  double err = 0.0;  // one standard error, combined across integrals
};

/// Probability of one conjunction.
inline Probability conjunction_probability(const TrialDesign& d, const Scenario& s, const Conjunction& c,
                                           const MvnOptions& opts) {
  std::vector<ZIndex> idx;
  std::vector<double> lo, hi;
  if (!detail::collapse(d, c, idx, lo, hi)) return {};
  if (idx.empty()) return {1.0, 0.0};
  const JointNormal jn = assemble_joint(d, s, idx);
  Rectangle rect{std::vector<double>(jn.size()), std::vector<double>(jn.size())};
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::size_t p = *jn.find(idx[i]);
    rect.lo[p] = lo[i];
    rect.hi[p] = hi[i];
  }
  const MvnResult r = mvn_rect_prob(jn, rect, opts);
  return {r.prob, r.err};
}

inline Probability event_probability(const TrialDesign& d, const Scenario& s, const EventSpec& e,
                                     const MvnOptions& opts = {}) {
  const EventSpec dj = disjointify(d, e);
  Probability total;
  double var = 0.0;
  MvnOptions term_opts = opts;
  if (!dj.terms.empty()) term_opts.abs_tol = opts.abs_tol / std::sqrt(static_cast<double>(dj.terms.size()));
  for (const Conjunction& c : dj.terms) {
    const Probability p = conjunction_probability(d, s, c, term_opts);
    total.value += p.value;
    var += p.err * p.err;
  }
  total.value = std::clamp(total.value, 0.0, 1.0);
  total.err = std::sqrt(var);
  return total;
}

/// Joint integration of `lead` and `lead` followed by a stop along `chain`.
inline ChainResult chain_probability(const TrialDesign& d, const Scenario& s, const EventSpec& lead,
                                     const StopChain& chain, const ChainTargets& want, const MvnOptions& opts = {}) {
  std::vector<ChainTerm> terms;
  for (const Conjunction& c : disjointify(d, lead).terms) {
    std::vector<ZIndex> idx;
    std::vector<double> lo, hi;
    if (!detail::collapse(d, c, idx, lo, hi)) continue;
    const std::size_t m = idx.size();
    for (const ZIndex& z : chain.stats) {
      if (std::find(idx.begin(), idx.end(), canonicalize(d, z)) != idx.end())
        throw StructuralError("chain statistic " + to_string(z) + " is already constrained");
      idx.push_back(z);
    }
    const JointNormal jn = assemble_joint(d, s, idx);
    if (jn.size() != idx.size()) throw StructuralError("chain statistics alias each other");
    ChainTerm t{jn.mean, jn.corr, {lo, hi}, {chain.stop_lo, chain.stop_hi}};
    t.limits.lo.insert(t.limits.lo.end(), chain.cont_lo.begin(), chain.cont_lo.end());
    t.limits.hi.insert(t.limits.hi.end(), chain.cont_hi.begin(), chain.cont_hi.end());
    for (std::size_t i = 0; i < m; ++i)
      if (jn.indices[i] != idx[i]) throw StructuralError("unexpected reordering in assemble_joint");
    terms.push_back(std::move(t));
  }
  return mvn_chain_prob(terms, want, opts);
}

}  // namespace platctl
