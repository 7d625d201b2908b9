// Acceptance run: one PASS/FAIL line per criterion, details indented below.
// Exit status is nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/binomial.hpp>

#include "platctl/platctl.hpp"

using namespace platctl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void verdict(int id, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

template <class... A>
void note(const char* fmt, A... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

bool within(double x, double target, double tol) { return std::abs(x - target) <= tol; }

TrialDesign case1() { return common_start_design(3, 2, 43); }
TrialDesign case2() { return TrialDesign{3, 2, 43, {0, 0, 0, 43}, 1.0}; }

struct Calibrated {
  Calibration cal;
  double seconds = 0.0;
};

Calibrated calibrate_timed(const TrialDesign& d) {
  const auto t0 = Clock::now();
  Calibrated c{calibrate_c(d, ShapeKind::triangular, 0.05), 0.0};
  c.seconds = seconds_since(t0);
  return c;
}

bool boundaries_match(const Boundaries& b, double u1, double u2, double l1) {
  return within(b.u(1), u1, 0.005) && within(b.u(2), u2, 0.005) && within(b.l(1), l1, 0.005) &&
         within(b.l(2), u2, 0.005);
}

struct TimedSweep {
  SweepConfig config;
  SweepResult result;
  double seconds = 0.0;
};

TimedSweep sweep(const TrialDesign& d, const Boundaries& b, Quantity q, int kstar, int kprime, int jprime,
                 std::vector<GridAxis> axes) {
  TimedSweep t;
  t.config.design = d;
  t.config.bounds = b;
  t.config.base = Scenario{std::vector<double>(static_cast<std::size_t>(d.K) + 1, 0.0)};
  t.config.quantity = q;
  t.config.kstar = kstar;
  t.config.kprime = kprime;
  t.config.jprime = jprime;
  t.config.axes = std::move(axes);
  const auto t0 = Clock::now();
  t.result = run_sweep(t.config);
  t.seconds = seconds_since(t0);
  return t;
}

std::string where(const TimedSweep& s, std::size_t i) {
  std::string out;
  for (std::size_t a = 0; a < s.config.axes.size(); ++a)
    out += (a ? ", " : "") + std::string("mu") + std::to_string(s.config.axes[a].arm) + "=" +
           std::to_string(s.result.rows[i].deltas[a]).substr(0, 5);
  return out;
}

// ---------------------------------------------------------------- criterion 6

struct RandomCase {
  TrialDesign design;
  Boundaries bounds;
  Scenario scenario;
};

RandomCase draw_case(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> K(2, 3), J(2, 3), n(5, 60), coin(0, 1);
  std::uniform_real_distribution<double> u(0.0, 3.0), unit(0.0, 1.0), mu(-0.5, 1.0);
  RandomCase c;
  c.design = common_start_design(K(rng), J(rng), n(rng));
  const bool no_lower = coin(rng) == 1;
  for (int j = 1; j <= c.design.J; ++j) {
    const double uj = u(rng);
    c.bounds.upper.push_back(uj);
    c.bounds.lower.push_back(no_lower ? -kInf : unit(rng) * uj);
  }
  c.bounds.lower.back() = c.bounds.upper.back();
  c.scenario.mu.push_back(0.0);
  for (int k = 1; k <= c.design.K; ++k) c.scenario.mu.push_back(mu(rng));
  return c;
}

// ---------------------------------------------------------------- criterion 7

struct Concordance {
  int compared = 0;
  int skipped = 0;
  int violations = 0;
  double worst_z = 0.0;
  std::string worst;
};

// Gap in SE units. With fewer than 10 expected hits or misses the normal
// band is replaced by an exact binomial test at the same two-sided level.
double gap_in_se(double p, double err, long count, long trials) {
  const double n = static_cast<double>(trials);
  if (n * p >= 10.0 && n * (1.0 - p) >= 10.0) {
    const double se = std::hypot(std::sqrt(p * (1.0 - p) / n), err);
    return std::abs(static_cast<double>(count) / n - p) / se;
  }
  if (p <= 0.0 || p >= 1.0) return count == static_cast<long>(p * n) ? 0.0 : kInf;
  const boost::math::binomial_distribution<double> dist(n, p);
  const double below = boost::math::cdf(dist, static_cast<double>(count));
  const double above = count == 0 ? 1.0 : boost::math::cdf(boost::math::complement(dist, static_cast<double>(count - 1)));
  const double pval = std::min(1.0, 2.0 * std::min(below, above));
  return pval >= 1.0 ? 0.0 : -norm_quantile(pval / 2.0);
}

void compare(Concordance& c, const std::string& what, double analytic, double analytic_err, const Frequency& f,
             long trials) {
  const double p = std::clamp(analytic, 0.0, 1.0);
  const double z = gap_in_se(p, analytic_err, f.count, trials);
  ++c.compared;
  if (z > c.worst_z) {
    c.worst_z = z;
    c.worst = what;
  }
  if (z > 3.0) {
    ++c.violations;
    note("violation %s: analytic %.6f simulated %.6f (%ld of %ld) gap %.2f SE", what.c_str(), analytic, f.value,
         f.count, trials, z);
  }
}

void concordance_scenario(Concordance& c, const char* label, const TrialDesign& d, const Boundaries& b,
                          const Scenario& s, long reps, std::uint64_t seed) {
  const auto t0 = Clock::now();
  const EstimatePair sim = estimate_both(d, b, s, reps, seed);
  PowerOptions po;
  const std::string tag = std::string(label) + " mu=(" + std::to_string(s[1]).substr(0, 5) + "," +
                          std::to_string(s[2]).substr(0, 5) + "," + std::to_string(s[3]).substr(0, 5) + ") ";
  for (int k = 1; k <= d.K; ++k)
    for (int j = 1; j <= d.J; ++j) {
      const Probability p = xi(d, b, s, k, j, po);
      compare(c, tag + "Xi[" + std::to_string(k) + "," + std::to_string(j) + "]", p.value, p.err, sim.retain.xi(k, j),
              reps);
    }
  for (int ks = 1; ks <= d.K; ++ks)
    for (int kp = 1; kp <= d.K; ++kp)
      for (int jp = 1; jp <= d.J; ++jp) {
        if (ks == kp) continue;
        const std::string id = "[" + std::to_string(ks) + "," + std::to_string(kp) + "," + std::to_string(jp) + "]";
        const auto [r, q] = conditional_power_both(d, b, s, ks, kp, jp, po);
        if (r.status == PowerStatus::zero_branch) {
          compare(c, tag + "Omega" + id, 0.0, 0.0, sim.retain.omega(ks, kp, jp), reps);
          compare(c, tag + "Omega*" + id, 0.0, 0.0, sim.discard.omega(ks, kp, jp), reps);
          continue;
        }
        compare(c, tag + "change event" + id, r.denominator, r.err, sim.retain.change_event(ks, kp, jp), reps);
        compare(c, tag + "Omega" + id, r.numerator, r.err, sim.retain.omega(ks, kp, jp), reps);
        compare(c, tag + "Omega*" + id, q.numerator, q.err, sim.discard.omega(ks, kp, jp), reps);
        const long cond = sim.retain.change_event(ks, kp, jp).count;
        if (r.status != PowerStatus::ok || cond == 0) {
          c.skipped += 2;
          continue;
        }
        compare(c, tag + "CP retain" + id, r.value, r.err, sim.retain.conditional_power(ks, kp, jp), cond);
        compare(c, tag + "CP discard" + id, q.value, q.err, sim.discard.conditional_power(ks, kp, jp), cond);
      }
  const int best = s.best_arm();
  const auto [opr, opd] = overall_power_both(d, b, s, best, po);
  compare(c, tag + "overall retain", opr.value, opr.err, sim.retain.overall_power(best), reps);
  compare(c, tag + "overall discard", opd.value, opd.err, sim.discard.overall_power(best), reps);
  const Probability wc = wrong_control_prob(d, b, s, po);
  compare(c, tag + "wrong control", wc.value, wc.err, sim.retain.wrong_control(), reps);
  bool null = true;
  for (double m : s.mu) null = null && m == s.mu[0];
  if (null) {
    const Probability f = fwer(d, b);
    compare(c, tag + "FWER", f.value, f.err, sim.retain.fwer(), reps);
  }
  note("%s done in %.0f s", tag.c_str(), seconds_since(t0));
}

}  // namespace

int main() {
  const auto start = Clock::now();

  // 1, 2: calibration
  const Calibrated c1 = calibrate_timed(case1());
  const Boundaries& b1 = c1.cal.bounds;
  note("case 1: c=%.6f U=(%.4f, %.4f) L=(%.4f, %.4f) FWER=%.6f, %d evaluations, %.1f s", c1.cal.shape.c, b1.u(1),
       b1.u(2), b1.l(1), b1.l(2), c1.cal.fwer, c1.cal.evaluations, c1.seconds);
  verdict(1, boundaries_match(b1, 2.330, 2.197, 0.777) && c1.seconds < 120.0,
          "case 1 boundaries within 0.005 of U=(2.330, 2.197), L=(0.777, 2.197) in under 2 min");

  const Calibrated c2 = calibrate_timed(case2());
  const Boundaries& b2 = c2.cal.bounds;
  note("case 2: c=%.6f U=(%.4f, %.4f) L=(%.4f, %.4f) FWER=%.6f, %d evaluations, %.1f s", c2.cal.shape.c, b2.u(1),
       b2.u(2), b2.l(1), b2.l(2), c2.cal.fwer, c2.cal.evaluations, c2.seconds);
  verdict(2, boundaries_match(b2, 2.358, 2.223, 0.786) && c2.seconds < 300.0,
          "case 2 boundaries within 0.005 of U=(2.358, 2.223), L=(0.786, 2.223) in under 5 min");

  // 3: sample size
  {
    const SampleSize s1 = find_sample_size(template_of(case1()), c1.cal, 0.9, 0.545);
    const SampleSize s2 = find_sample_size(template_of(case2()), c2.cal, 0.9, 0.545);
    note("case 1: n=%ld total=%ld pairwise power %.5f", s1.n, s1.total, s1.power);
    note("case 2: n=%ld total=%ld pairwise power %.5f", s2.n, s2.total, s2.power);
    verdict(3, s1.n == 43 && s1.total == 344 && s2.n == 43 && s2.total == 387,
            "sample size n=43 with totals 344 and 387");
  }

  // 5 first: its case-1 conditional sweep also feeds criterion 4
  const TimedSweep cp1 = sweep(case1(), b1, Quantity::conditional_power, 2, 1, 1, {GridAxis{1}, GridAxis{2}});
  const TimedSweep op1 = sweep(case1(), b1, Quantity::overall_power, 2, 1, 1, {GridAxis{1}, GridAxis{2}});
  const TimedSweep cp2 = sweep(case2(), b2, Quantity::conditional_power, 3, 1, 2, {GridAxis{1}, GridAxis{3}});

  // 4: conditional-power anchors
  {
    double retain_at_one = kInf, worst_retain = 0.0, worst_discard = 0.0;
    for (const SweepRow& r : cp1.result.rows) {
      if (r.status != "ok") continue;
      const double gap = r.deltas[1] - r.deltas[0];
      if (std::abs(gap - 1.0) < 1e-9) retain_at_one = std::min(retain_at_one, r.value_retain);
      if (gap < -1e-9) {
        worst_retain = std::max(worst_retain, r.value_retain);
        worst_discard = std::max(worst_discard, r.value_discard);
      }
    }
    const double discard_076 =
        conditional_power_both(case1(), b1, Scenario{{0.0, 0.0, 0.760, 0.0}}, 2, 1, 1).second.value;
    note("retain at mu2-mu1=1, lowest over the grid: %.5f (bound 0.889)", retain_at_one);
    note("discard at mu2-mu1=0.760: %.5f (bound 0.90)", discard_076);
    note("worst carry of an inferior arm, mu2<mu1: discard %.5f (bound 0.0115), retain %.6f (bound 0.0001)",
         worst_discard, worst_retain);
    verdict(4,
            retain_at_one >= 0.889 - 0.005 && discard_076 >= 0.90 - 0.005 && worst_discard <= 0.0115 + 0.005 &&
                worst_retain <= 0.0001 + 0.005,
            "conditional-power anchors within 0.005 of their bounds");
  }

  // 5: surface maxima; the reported maximum is the largest loss from retaining
  {
    const auto loss = [](const TimedSweep& s) { return -s.result.summary.min; };
    note("case 1 conditional: max loss %.4f at %s, max gain %.4f, %zu/%zu points estimable, %.0f s", loss(cp1),
         where(cp1, cp1.result.summary.argmin).c_str(), cp1.result.summary.max, cp1.result.summary.valid,
         cp1.result.rows.size(), cp1.seconds);
    note("case 1 overall: max loss %.4f at %s, max gain %.4f, %.0f s", loss(op1),
         where(op1, op1.result.summary.argmin).c_str(), op1.result.summary.max, op1.seconds);
    note("case 2 conditional: max loss %.4f at %s, max gain %.4f, %zu/%zu points estimable, %.0f s", loss(cp2),
         where(cp2, cp2.result.summary.argmin).c_str(), cp2.result.summary.max, cp2.result.summary.valid,
         cp2.result.rows.size(), cp2.seconds);
    const bool fast = cp1.seconds < 1800 && op1.seconds < 1800 && cp2.seconds < 1800;
    verdict(5, within(loss(cp1), 0.526, 0.02) && within(loss(op1), 0.017, 0.005) && within(loss(cp2), 0.398, 0.02) && fast,
            "surface maxima 0.526, 0.017 and 0.398 within tolerance, each sweep under 30 min");
  }

  // 6: retaining never helps when every bound is nonnegative
  {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(20240601);
    PowerOptions po;
    po.mvn.abs_tol = 1e-4;
    const double slack = 2.0 * po.mvn.abs_tol;
    int cp_checks = 0, cp_bad = 0, cp_skipped = 0, op_checks = 0, op_bad = 0;
    int single_stage_left = 0;
    double cp_worst = -kInf, op_worst = -kInf;
    for (int attempt = 0; attempt < 5000 && (cp_checks < 200 || op_checks < 200); ++attempt) {
      const RandomCase rc = draw_case(rng);
      const TrialDesign& d = rc.design;
      std::uniform_int_distribution<int> arm(1, d.K), stage(1, d.J - 1);
      if (cp_checks < 200) {
        const int ks = arm(rng);
        int kp = arm(rng);
        while (kp == ks) kp = arm(rng);
        const int jp = stage(rng);
        const auto [r, q] = conditional_power_both(d, rc.bounds, rc.scenario, ks, kp, jp, po);
        if (r.status != PowerStatus::ok) {
          ++cp_skipped;
        } else {
          ++cp_checks;
          single_stage_left += jp == d.J - 1 ? 1 : 0;
          cp_worst = std::max(cp_worst, r.value - q.value);
          if (r.value > q.value + slack) {
            ++cp_bad;
            note("violation: conditional power retain %.6f > discard %.6f", r.value, q.value);
          }
        }
      }
      if (op_checks < 200) {
        const auto [r, q] = overall_power_both(d, rc.bounds, rc.scenario, rc.scenario.best_arm(), po);
        ++op_checks;
        op_worst = std::max(op_worst, r.value - q.value);
        if (r.value > q.value + slack) {
          ++op_bad;
          note("violation: overall power retain %.6f > discard %.6f", r.value, q.value);
        }
      }
    }
    note("conditional power: %d checks (%d with one stage left), %d skipped as not estimable, largest retain-discard "
         "%.2e",
         cp_checks, single_stage_left, cp_skipped, cp_worst);
    note("overall power: %d checks, largest retain-discard %.2e; tolerance %.0e, %.0f s", op_checks, op_worst,
         po.mvn.abs_tol, seconds_since(t0));
    verdict(6, cp_checks >= 200 && op_checks >= 200 && cp_bad == 0 && op_bad == 0,
            "retain <= discard + 2 tol on at least 200 random cases for each quantity");
  }

  // 7: analytic against simulated frequencies
  {
    const auto t0 = Clock::now();
    Concordance c;
    const long reps = 1000000;
    const std::vector<Scenario> s1{Scenario{{0, 0, 0, 0}}, Scenario{{0, 0.178, 0.545, 0}},
                                   Scenario{{0, 0.545, 0.178, 0.178}}, Scenario{{0, 0.3, 0.3, 0.3}},
                                   Scenario{{0, 0.545, 0.545, -0.178}}};
    const std::vector<Scenario> s2{Scenario{{0, 0, 0, 0}}, Scenario{{0, 0.178, 0, 0.545}},
                                   Scenario{{0, 0.545, 0.178, 0.3}}, Scenario{{0, 0.3, 0.3, 0.3}},
                                   Scenario{{0, 0, 0.545, 0.545}}};
    std::uint64_t seed = 7000;
    for (const Scenario& s : s1) concordance_scenario(c, "case 1", case1(), b1, s, reps, ++seed);
    for (const Scenario& s : s2) concordance_scenario(c, "case 2", case2(), b2, s, reps, ++seed);
    note("%d comparisons, %d conditional cells skipped (no conditioning trials), largest gap %.2f SE "
         "(%s), %.0f s",
         c.compared, c.skipped, c.worst_z, c.worst.c_str(), seconds_since(t0));
    verdict(7, c.violations == 0, "every analytic quantity within 3 SE of 10^6 simulated trials");
  }

  // 8: integrator
  {
    const MvnResult one = mvn_rect_prob(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1),
                                        Rectangle{{1.959964}, {kInf}});
    const MvnResult two = mvn_rect_prob(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2),
                                        Rectangle{{1.959964, 1.959964}, {kInf, kInf}});
    Eigen::MatrixXd E = Eigen::MatrixXd::Constant(3, 3, 0.5);
    E.diagonal().setOnes();
    const MvnResult three = mvn_rect_prob(Eigen::VectorXd::Zero(3), E, Rectangle{{-kInf, -kInf, -kInf}, {0, 0, 0}});
    const double orthant = 0.125 + 3.0 * std::asin(0.5) / (4.0 * std::numbers::pi);
    note("closed forms: %.7f (0.025), %.8f (0.000625), %.7f (%.7f)", one.prob, two.prob, three.prob, orthant);
    bool ok = within(one.prob, 0.025, 1e-4) && within(two.prob, 0.000625, 1e-4) && within(three.prob, 0.25, 1e-4);

    std::mt19937_64 rng(99);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> lo(-1.5, 1.0), width(0.3, 2.5);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Eigen::MatrixXd A(5, 7);
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) A(i, j) = z(rng);
      Eigen::MatrixXd C = A * A.transpose();
      const Eigen::VectorXd s = C.diagonal().cwiseSqrt().cwiseInverse();
      C = s.asDiagonal() * C * s.asDiagonal();
      Eigen::VectorXd mean(5);
      Rectangle rect{std::vector<double>(5), std::vector<double>(5)};
      for (int i = 0; i < 5; ++i) {
        mean(i) = 0.3 * z(rng);
        rect.lo[static_cast<std::size_t>(i)] = lo(rng);
        rect.hi[static_cast<std::size_t>(i)] = rect.lo[static_cast<std::size_t>(i)] + width(rng);
      }
      const MvnResult q = mvn_rect_prob(mean, C, rect);
      const McResult mc = mvn_mc_prob(mean, C, rect, 10000000, 500 + static_cast<std::uint64_t>(rep));
      const double gap = std::abs(q.prob - mc.prob) / std::hypot(mc.se, q.err);
      worst = std::max(worst, gap);
      ok = ok && gap <= 3.0;
    }
    note("random 5-dimensional rectangles against 10^7 Monte Carlo draws: largest gap %.2f SE", worst);
    verdict(8, ok, "closed forms within 1e-4 and random rectangles within 3 SE of Monte Carlo");
  }

  // 9: structural identities
  {
    double residual = 0.0;
    int traces = 0;
    std::mt19937_64 rng(4242);
    std::uniform_int_distribution<int> K(1, 4), J(1, 4), n(1, 30), lag(0, 2);
    std::uniform_real_distribution<double> mu(-0.5, 1.0), c(0.4, 1.5);
    for (int rep = 0; rep < 5000; ++rep) {
      TrialDesign d;
      Boundaries b;
      if (rep < 1000) {
        d = case1();
        b = b1;
      } else if (rep < 2000) {
        d = case2();
        b = b2;
      } else {
        d.K = K(rng), d.J = J(rng), d.n = n(rng);
        d.entry.push_back(0);
        for (int k = 1; k <= d.K; ++k) d.entry.push_back(lag(rng) * d.n);
        const double scale = c(rng);
        b = shape_boundaries({ShapeKind::triangular, scale}, d.J);
      }
      Scenario s;
      for (int k = 0; k <= d.K; ++k) s.mu.push_back(mu(rng));
      for (Policy p : {Policy::retain, Policy::discard}) {
        residual = std::max(residual, replay_decomposition_check(d, simulate_trial(d, b, s, p, 1000 + rep)));
        ++traces;
      }
    }
    double lowest = kInf;
    int designs = 0;
    std::uniform_int_distribution<int> Jt(2, 6), nt(1, 80);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int rep = 0; rep < 2000; ++rep) {
      const TrialDesign d = common_start_design(2, Jt(rng), nt(rng));
      Boundaries b;
      for (int j = 0; j < d.J; ++j) b.upper.push_back(u(rng)), b.lower.push_back(0.0);
      std::uniform_int_distribution<int> jp(1, d.J - 1);
      const int change = jp(rng);
      for (int j = change + 1; j <= d.J; ++j) lowest = std::min(lowest, retain_benefit_threshold(d, b, 2, 1, change, j));
      ++designs;
    }
    note("%d traces, largest decomposition residual %.2e; %d designs, lowest threshold %.4f", traces, residual, designs,
         lowest);
    verdict(9, traces >= 10000 && residual < 1e-10 && lowest >= 0.0,
            "decomposition residual below 1e-10 on 10^4 traces and thresholds nonnegative");
  }

  std::printf("%s: %d criteria failed, %.0f s\n", failures ? "FAILED" : "ALL PASSED", failures, seconds_since(start));
  return failures ? 1 : 0;
}
