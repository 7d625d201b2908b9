#pragma once

// Patient-level simulation of whole platform trials with at most one
// control change, and relative-frequency estimates of the analytic
// quantities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "platctl/design.hpp"
#include "platctl/parallel.hpp"
#include "platctl/sweep.hpp"

namespace platctl {

enum class Fate { never_entered, active_at_end, dropped_futility, rejected_superior };

inline const char* to_string(Fate f) {
  switch (f) {
    case Fate::never_entered: return "never-entered";
    case Fate::active_at_end: return "active-at-end";
    case Fate::dropped_futility: return "dropped-futility";
    case Fate::rejected_superior: return "rejected-superior";
  }
  return "?";
}

struct ArmFate {
  Fate fate = Fate::never_entered;
  int stage = 0;          // analysis at which the fate was settled
  long accrual = 0;       // n_{k,stage}
};

struct ControlChange {
  int arm = 0;
  int stage = 0;          // the new control's own stage j'
  long accrual = 0;       // n_{k',j'}
};

struct TraceEntry {
  ZIndex idx;
  double value = 0.0;
  long accrual = 0;
};

/// Per-arm sums of outcomes over consecutive cohorts: block t covers the
/// patients recruited in accrual interval ((t-1)·n, t·n]. Blocks before an
/// arm's entry are absent (NaN).
struct BlockData {
  long n = 1;
  double sigma = 1.0;
  std::vector<std::vector<double>> sums;  // [arm][block]

  /// Sum over accrual window (start, end] for one arm. Throws if the
  /// window reaches before the arm's entry.
  double window_sum(int arm, long start, long end) const {
    const auto& s = sums.at(static_cast<std::size_t>(arm));
    double total = 0.0;
    for (long t = start / n; t < end / n; ++t) {
      const double v = s.at(static_cast<std::size_t>(t));
      if (std::isnan(v)) throw StructuralError("window reaches before arm " + std::to_string(arm) + " entered");
      total += v;
    }
    return total;
  }

  double z(int k, int c, long start, long end) const {
    const double m = static_cast<double>(end - start);
    return (window_sum(k, start, end) - window_sum(c, start, end)) / (sigma * std::sqrt(2.0 * m));
  }
};

struct TrialOutcome {
  Policy policy = Policy::retain;
  std::vector<ControlChange> control_history;
  std::vector<ArmFate> arm_fate;   // index 0 unused
  long patients_used = 0;
  long end_accrual = 0;
  long first_rejection = -1;       // accrual of the first crossing against the original control
  std::vector<TraceEntry> z_trace;
  BlockData blocks;

  bool changed() const { return !control_history.empty(); }

  /// Arm k was still in the trial (or not yet entered) right after the
  /// control change.
  bool in_at_change(int k) const {
    if (!changed() || k == control_history.front().arm) return false;
    const ArmFate& f = arm_fate[static_cast<std::size_t>(k)];
    return !(f.fate == Fate::dropped_futility && f.accrual <= control_history.front().accrual);
  }

  /// Arm k was declared superior to the new control.
  bool beat_new_control(int k) const {
    if (!changed()) return false;
    const ArmFate& f = arm_fate[static_cast<std::size_t>(k)];
    return f.fate == Fate::rejected_superior && f.accrual > control_history.front().accrual;
  }
};

namespace detail {

inline std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t rep) {
  return splitmix64(splitmix64(seed) ^ splitmix64(rep + 0x632be59bd9b4e019ULL));
}

/// Patient outcomes for every arm from its entry to the horizon, summed
/// per cohort.
inline BlockData generate_blocks(const TrialDesign& d, const Scenario& s, std::mt19937_64& rng) {
  BlockData data;
  data.n = d.n;
  data.sigma = d.sigma;
  const long blocks = d.horizon() / d.n;
  std::normal_distribution<double> z01(0.0, 1.0);
  data.sums.assign(static_cast<std::size_t>(d.K) + 1,
                   std::vector<double>(static_cast<std::size_t>(blocks), std::nan("")));
  for (int k = 0; k <= d.K; ++k) {
    const double mu = s[k];
    for (long t = d.start(k) / d.n; t < blocks; ++t) {
      double sum = 0.0;
      for (long p = 0; p < d.n; ++p) sum += mu + d.sigma * z01(rng);
      data.sums[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] = sum;
    }
  }
  return data;
}

/// Stage of arm k analysed at accrual tau, or 0.
inline int stage_at(const TrialDesign& d, int k, long tau) {
  const long off = tau - d.start(k);
  if (off <= 0 || off % d.n != 0) return 0;
  const long j = off / d.n;
  return j <= d.J ? static_cast<int>(j) : 0;
}

}  // namespace detail

/// Plays the decision rules over given data.
///
/// Pre-change, each analysed arm is compared with the original control.
/// All upper crossings at one analysis are settled first: the winner is the
/// crossing arm that beats every other crossing arm pairwise, exact ties
/// going to the lower index. Losing crossers stay in. When the pairwise
/// results form a cycle no arm is installed: every crosser is rejected
/// against the original control and no later change happens. Futility
/// drops follow. After
/// the change every remaining or later-entering arm is compared with the
/// new control, using the full concurrent window (retain) or post-change
/// patients only (discard). The trial ends when no arm is active and none
/// is still to enter.
inline TrialOutcome run_trial(const TrialDesign& d, const Boundaries& b, BlockData data, Policy policy) {
  TrialOutcome out;
  out.policy = policy;
  out.arm_fate.assign(static_cast<std::size_t>(d.K) + 1, ArmFate{});
  std::vector<bool> active(static_cast<std::size_t>(d.K) + 1, false), entered = active;
  int control = 0;
  long change_at = -1;
  bool spent = false;

  std::vector<long> times;
  for (int k = 1; k <= d.K; ++k)
    for (int j = 1; j <= d.J; ++j) times.push_back(d.accrual(k, j));
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  long end = 0;
  for (long tau : times) {
    for (int k = 1; k <= d.K; ++k)
      if (!entered[static_cast<std::size_t>(k)] && d.start(k) < tau) {
        entered[static_cast<std::size_t>(k)] = active[static_cast<std::size_t>(k)] = true;
        out.arm_fate[static_cast<std::size_t>(k)].fate = Fate::active_at_end;
      }
    struct Look {
      int k, j;
      double z;
    };
    std::vector<Look> looks;
    for (int k = 1; k <= d.K; ++k) {
      if (!active[static_cast<std::size_t>(k)] || k == control) continue;
      const int j = detail::stage_at(d, k, tau);
      if (j == 0) continue;
      ZIndex idx = ZIndex::retain(k, control, j);
      if (control != 0 && policy == Policy::discard) {
        const ControlChange& c = out.control_history.front();
        idx = ZIndex::post(k, control, j, c.stage);
      }
      const Window w = window(d, idx);
      const double z = data.z(k, control, w.start, w.end);
      out.z_trace.push_back({idx, z, tau});
      looks.push_back({k, j, z});
    }
    if (looks.empty()) continue;
    end = tau;

    const auto settle = [&](const Look& l, Fate f) {
      out.arm_fate[static_cast<std::size_t>(l.k)] = {f, l.j, tau};
      active[static_cast<std::size_t>(l.k)] = false;
    };

    for (const Look& l : looks)
      if (control == 0 && l.z > b.u(l.j) && out.first_rejection < 0) out.first_rejection = tau;

    if (control == 0 && !spent) {
      std::vector<Look> up;
      for (const Look& l : looks)
        if (l.z > b.u(l.j)) up.push_back(l);
      std::size_t win = up.size();
      const auto beats = [&](const Look& a, const Look& c) {
        const long start = std::max(d.start(a.k), d.start(c.k));
        const double z = data.z(a.k, c.k, start, tau);
        return z > 0.0 || (z == 0.0 && a.k < c.k);
      };
      for (std::size_t i = 0; i < up.size() && win == up.size(); ++i) {
        bool all = true;
        for (std::size_t m = 0; m < up.size() && all; ++m)
          if (m != i) all = beats(up[i], up[m]);
        if (all) win = i;
      }
      if (!up.empty() && win == up.size()) {
        spent = true;
        for (const Look& l : up) settle(l, Fate::rejected_superior);
      } else if (!up.empty()) {
        const Look w = up[win];
        settle(w, Fate::rejected_superior);
        control = w.k;
        change_at = tau;
        out.control_history.push_back({w.k, w.j, tau});
        for (const Look& l : up)
          if (l.k != w.k && l.j == d.J) settle(l, Fate::active_at_end);
      }
      for (const Look& l : looks) {
        if (l.z > b.u(l.j)) continue;
        if (l.z < b.l(l.j))
          settle(l, Fate::dropped_futility);
        else if (l.j == d.J)
          settle(l, Fate::active_at_end);
      }
    } else {
      for (const Look& l : looks) {
        if (l.z > b.u(l.j))
          settle(l, Fate::rejected_superior);
        else if (l.z < b.l(l.j))
          settle(l, Fate::dropped_futility);
        else if (l.j == d.J)
          settle(l, Fate::active_at_end);
      }
    }

    bool more = false;
    for (int k = 1; k <= d.K && !more; ++k)
      more = (active[static_cast<std::size_t>(k)] && k != control) || d.start(k) >= tau;
    if (!more) break;
  }

  out.end_accrual = end;
  long patients = change_at >= 0 ? change_at : end;
  for (int k = 1; k <= d.K; ++k) {
    const ArmFate& f = out.arm_fate[static_cast<std::size_t>(k)];
    if (f.fate == Fate::never_entered) continue;
    const long stop = k == control ? end : f.accrual;
    patients += std::max(0L, stop - d.start(k));
  }
  out.patients_used = patients;
  out.blocks = std::move(data);
  return out;
}

/// One trial from its own random stream.
inline TrialOutcome simulate_trial(const TrialDesign& d, const Boundaries& b, const Scenario& s, Policy policy,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return run_trial(d, b, detail::generate_blocks(d, s, rng), policy);
}

/// Largest |Z·√m - (Ẑ·√m̂ + Z*·√m*)| over every statistic the recorded
/// data support, where the full window is split at every possible change
/// accrual n_{k',j'} into the part before (Ẑ) and after (Z*).
inline double replay_decomposition_check(const TrialDesign& d, const TrialOutcome& o) {
  double worst = 0.0;
  const auto available = [&](int arm, long start, long end) {
    const auto& s = o.blocks.sums[static_cast<std::size_t>(arm)];
    for (long t = start / d.n; t < end / d.n; ++t)
      if (t < 0 || t >= static_cast<long>(s.size()) || std::isnan(s[static_cast<std::size_t>(t)])) return false;
    return true;
  };
  for (int k = 1; k <= d.K; ++k)
    for (int c = 0; c <= d.K; ++c) {
      if (c == k) continue;
      for (int j = 1; j <= d.J; ++j) {
        const long start = std::max(d.start(k), d.start(c));
        const long end = d.accrual(k, j);
        if (end <= start || !available(k, start, end) || !available(c, start, end)) continue;
        const double z = o.blocks.z(k, c, start, end);
        const double m = static_cast<double>(end - start);
        for (int jp = 1; jp <= d.J && c != 0; ++jp) {
          const long cut = d.accrual(c, jp);
          if (cut >= end) continue;
          const long post_start = std::max(start, cut);
          const double ms = static_cast<double>(end - post_start);
          const double zs = o.blocks.z(k, c, post_start, end);
          double rhs = zs * std::sqrt(ms);
          if (post_start > start) {
            const double mh = static_cast<double>(post_start - start);
            rhs += o.blocks.z(k, c, start, post_start) * std::sqrt(mh);
          }
          worst = std::max(worst, std::abs(z * std::sqrt(m) - rhs));
        }
      }
    }
  for (const TraceEntry& t : o.z_trace) {
    const Window w = window(d, t.idx);
    worst = std::max(worst, std::abs(t.value - o.blocks.z(t.idx.k, t.idx.kprime, w.start, w.end)));
  }
  return worst;
}

/// A relative frequency with its binomial standard error.
struct Frequency {
  double value = 0.0;
  double se = 0.0;
  long count = 0;
  long trials = 0;
};

inline Frequency frequency(long count, long trials) {
  Frequency f{0.0, 0.0, count, trials};
  if (trials > 0) {
    f.value = static_cast<double>(count) / static_cast<double>(trials);
    f.se = std::sqrt(f.value * (1.0 - f.value) / static_cast<double>(trials));
  }
  return f;
}

/// Raw counts over replicates for one policy; all indices are arms or
/// stages as in the design, stored densely.
struct EstimateCounts {
  int K = 0, J = 0;
  long reps = 0;
  std::vector<long> change;       // [k][j]: k became the control at its stage j
  std::vector<long> cond;         // [k*][k'][j']: that change with k* still in
  std::vector<long> beat;         // [k*][k'][j']: and k* later beat k'
  std::vector<long> overall;      // [k*]: k* became the control or beat it
  long any_change = 0;
  long any_rejection = 0;         // some arm crossed against the original control
  long wrong_control = 0;         // a non-best arm became the control at its stage 1
  long patients = 0;

  void init(int k, int j) {
    K = k, J = j;
    change.assign(static_cast<std::size_t>((K + 1) * (J + 1)), 0);
    cond.assign(static_cast<std::size_t>((K + 1) * (K + 1) * (J + 1)), 0);
    beat = cond;
    overall.assign(static_cast<std::size_t>(K + 1), 0);
  }
  std::size_t at(int k, int j) const { return static_cast<std::size_t>(k * (J + 1) + j); }
  std::size_t at(int ks, int kp, int jp) const { return static_cast<std::size_t>((ks * (K + 1) + kp) * (J + 1) + jp); }

  void add(const TrialOutcome& o, int best) {
    ++reps;
    patients += o.patients_used;
    if (o.first_rejection >= 0) ++any_rejection;
    if (!o.changed()) return;
    const ControlChange& c = o.control_history.front();
    ++any_change;
    ++change[at(c.arm, c.stage)];
    if (c.arm != best && c.stage == 1) ++wrong_control;
    ++overall[static_cast<std::size_t>(c.arm)];
    for (int ks = 1; ks <= K; ++ks) {
      if (!o.in_at_change(ks)) continue;
      ++cond[at(ks, c.arm, c.stage)];
      if (o.beat_new_control(ks)) {
        ++beat[at(ks, c.arm, c.stage)];
        ++overall[static_cast<std::size_t>(ks)];
      }
    }
  }

  void merge(const EstimateCounts& o) {
    reps += o.reps;
    patients += o.patients;
    any_change += o.any_change;
    any_rejection += o.any_rejection;
    wrong_control += o.wrong_control;
    for (std::size_t i = 0; i < change.size(); ++i) change[i] += o.change[i];
    for (std::size_t i = 0; i < cond.size(); ++i) cond[i] += o.cond[i], beat[i] += o.beat[i];
    for (std::size_t i = 0; i < overall.size(); ++i) overall[i] += o.overall[i];
  }
};

/// Frequency table matching the analytic quantities.
struct EstimateTable {
  Policy policy = Policy::retain;
  EstimateCounts counts;

  Frequency xi(int k, int j) const { return frequency(counts.change[counts.at(k, j)], counts.reps); }
  Frequency change_event(int ks, int kp, int jp) const {
    return frequency(counts.cond[counts.at(ks, kp, jp)], counts.reps);
  }
  Frequency omega(int ks, int kp, int jp) const { return frequency(counts.beat[counts.at(ks, kp, jp)], counts.reps); }
  Frequency conditional_power(int ks, int kp, int jp) const {
    return frequency(counts.beat[counts.at(ks, kp, jp)], counts.cond[counts.at(ks, kp, jp)]);
  }
  Frequency overall_power(int ks) const { return frequency(counts.overall[static_cast<std::size_t>(ks)], counts.reps); }
  /// Frequency of any upper crossing before a change; the FWER under the
  /// global null.
  Frequency fwer() const { return frequency(counts.any_rejection, counts.reps); }
  Frequency wrong_control() const { return frequency(counts.wrong_control, counts.reps); }
  double mean_patients() const {
    return counts.reps ? static_cast<double>(counts.patients) / static_cast<double>(counts.reps) : 0.0;
  }
};

struct EstimatePair {
  EstimateTable retain, discard;
};

/// Both policies from the same simulated data. Replicate r uses its own
/// stream derived from (seed, r), and counts are merged in chunk order, so
/// the table does not depend on the worker count.
inline EstimatePair estimate_both(const TrialDesign& d, const Boundaries& b, const Scenario& s, long reps,
                                  std::uint64_t seed, unsigned workers = 0) {
  validate_scenario(d, s);
  const int best = s.best_arm();
  constexpr long kChunk = 4096;
  const long chunks = (reps + kChunk - 1) / kChunk;
  std::vector<EstimateCounts> rc(static_cast<std::size_t>(chunks)), dc(rc.size());
  parallel_for(static_cast<std::size_t>(chunks), workers, [&](std::size_t c) {
    EstimateCounts& r = rc[c];
    EstimateCounts& q = dc[c];
    r.init(d.K, d.J);
    q.init(d.K, d.J);
    const long lo = static_cast<long>(c) * kChunk, hi = std::min(reps, lo + kChunk);
    for (long rep = lo; rep < hi; ++rep) {
      std::mt19937_64 rng(detail::replicate_seed(seed, static_cast<std::uint64_t>(rep)));
      BlockData data = detail::generate_blocks(d, s, rng);
      const TrialOutcome a = run_trial(d, b, data, Policy::retain);
      const TrialOutcome z = run_trial(d, b, std::move(data), Policy::discard);
      r.add(a, best);
      q.add(z, best);
    }
  });
  EstimatePair out;
  out.retain.policy = Policy::retain;
  out.discard.policy = Policy::discard;
  out.retain.counts.init(d.K, d.J);
  out.discard.counts.init(d.K, d.J);
  for (std::size_t c = 0; c < rc.size(); ++c) {
    out.retain.counts.merge(rc[c]);
    out.discard.counts.merge(dc[c]);
  }
  return out;
}

inline EstimateTable estimate(const TrialDesign& d, const Boundaries& b, const Scenario& s, Policy policy, long reps,
                              std::uint64_t seed, unsigned workers = 0) {
  EstimatePair p = estimate_both(d, b, s, reps, seed, workers);
  return policy == Policy::retain ? p.retain : p.discard;
}

}  // namespace platctl
