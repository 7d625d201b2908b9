#pragma once

// Boundary shapes, familywise error under the global null, and the
// per-stage sample size needed for a target pairwise power.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/toms748_solve.hpp>

#include "platctl/design.hpp"
#include "platctl/events.hpp"
#include "platctl/mvn.hpp"
#include "platctl/power.hpp"

namespace platctl {

enum class ShapeKind { triangular, obrien_fleming };

inline const char* to_string(ShapeKind k) { return k == ShapeKind::triangular ? "triangular" : "obrien-fleming"; }

inline ShapeKind parse_shape(const std::string& s) {
  if (s == "triangular") return ShapeKind::triangular;
  if (s == "obrien-fleming" || s == "obrien_fleming" || s == "obf") return ShapeKind::obrien_fleming;
  throw DesignError("shape-kind", "unknown boundary shape '" + s + "'");
}

struct BoundaryShape {
  ShapeKind kind = ShapeKind::triangular;
  double c = 1.0;
};

/// Boundaries at information fractions t_j = j/J.
inline Boundaries shape_boundaries(const BoundaryShape& shape, int J) {
  if (J < 1) throw DesignError("stage-count", "J must be at least 1");
  if (!(shape.c >= 0) || !std::isfinite(shape.c)) throw DesignError("shape-scale", "c must be nonnegative");
  Boundaries b;
  b.upper.resize(static_cast<std::size_t>(J));
  b.lower.resize(static_cast<std::size_t>(J));
  for (int j = 1; j <= J; ++j) {
    const double t = static_cast<double>(j) / J;
    const auto i = static_cast<std::size_t>(j - 1);
    if (shape.kind == ShapeKind::triangular) {
      b.upper[i] = shape.c * (1.0 + t) / std::sqrt(t);
      b.lower[i] = shape.c * (3.0 * t - 1.0) / std::sqrt(t);
    } else {
      b.upper[i] = shape.c / std::sqrt(t);
      b.lower[i] = -b.upper[i];
    }
  }
  b.lower.back() = b.upper.back();
  return b;
}

inline Scenario global_null(const TrialDesign& d) {
  return Scenario{std::vector<double>(static_cast<std::size_t>(d.K) + 1, 0.0)};
}

struct FwerOptions {
  MvnOptions mvn = [] {
    MvnOptions o;
    o.abs_tol = 1e-6;
    return o;
  }();
};

/// Arm k never crosses its upper bound. Futility stops are binding, so the
/// terms are disjoint by the stage at which the arm leaves.
inline EventSpec never_crosses(const TrialDesign& d, const Boundaries& b, int k) {
  EventSpec out;
  for (int i = 1; i <= d.J; ++i) {
    const double cut = i < d.J ? b.l(i) : b.u(i);
    if (cut == -kInf) continue;
    Conjunction c;
    detail::push_continue(c, b, k, 0, 1, i - 1);
    c.push_back({ZIndex::retain(k, 0, i), -kInf, cut});
    out.terms.push_back(std::move(c));
  }
  return out;
}

/// Probability under the global null that any arm crosses an upper bound
/// while the original control is in place.
inline Probability fwer(const TrialDesign& d, const Boundaries& b, const FwerOptions& o = {}) {
  EventSpec none = EventSpec::sure();
  for (int k = 1; k <= d.K; ++k) none = intersect(none, never_crosses(d, b, k));
  const Probability p = event_probability(d, global_null(d), none, o.mvn);
  return {1.0 - p.value, p.err};
}

/// The same quantity as Σ_{k,j} Ξ_{k,j} under the global null: every
/// false rejection before a change is a change.
inline Probability fwer_by_control_change(const TrialDesign& d, const Boundaries& b, const FwerOptions& o = {}) {
  PowerOptions po;
  po.mvn = o.mvn;
  po.simplify = false;
  const Scenario null = global_null(d);
  Probability total;
  double var = 0.0;
  for (int k = 1; k <= d.K; ++k)
    for (int j = 1; j <= d.J; ++j) {
      const Probability p = xi(d, b, null, k, j, po);
      total.value += p.value;
      var += p.err * p.err;
    }
  total.err = std::sqrt(var);
  return total;
}

struct CalibrateOptions {
  double lo = 0.3;
  double hi = 4.0;
  double c_tol = 1e-4;
  double fwer_tol = 5e-5;
  double coarse_tol = 1e-5;  // integrator tolerance while the bracket is wide
  double coarse_width = 2e-3;
  int max_iter = 60;
  FwerOptions fwer{};
};

struct Calibration {
  BoundaryShape shape;
  Boundaries bounds;
  double fwer = 0.0;
  double fwer_err = 0.0;
  int evaluations = 0;
};

/// Scale c at which the FWER equals alpha. The FWER falls as c grows, so a
/// bracketing search applies: first with a loose integrator tolerance, then
/// inside a narrow bracket at full accuracy. The lower end of the initial
/// bracket is pushed toward 0 if needed.
inline Calibration calibrate_c(const TrialDesign& d, ShapeKind kind, double alpha, const CalibrateOptions& o = {}) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DesignError("alpha-range", "alpha must lie in (0, 1)");
  Calibration out;
  out.shape.kind = kind;
  FwerOptions coarse = o.fwer;
  coarse.mvn.abs_tol = std::max(o.coarse_tol, o.fwer.mvn.abs_tol);
  const auto objective = [&](const FwerOptions& fo) {
    return [&, fo](double c) {
      ++out.evaluations;
      return fwer(d, shape_boundaries({kind, c}, d.J), fo).value - alpha;
    };
  };
  const auto solve = [&](auto f, double lo, double hi, double flo, double fhi, double width) {
    if (flo == 0.0) return std::pair{lo, lo};
    if (fhi == 0.0) return std::pair{hi, hi};
    boost::uintmax_t iters = static_cast<boost::uintmax_t>(o.max_iter);
    const auto stop = [width](double a, double b) { return std::abs(b - a) <= width; };
    return boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, stop, iters);
  };

  auto fc = objective(coarse);
  double lo = o.lo, hi = o.hi;
  double flo = fc(lo), fhi = fc(hi);
  while (flo < 0.0 && lo > 0.0) {
    lo = lo < 1e-6 ? 0.0 : lo / 4.0;
    flo = fc(lo);
  }
  if (flo < 0.0 || fhi > 0.0)
    throw NumericalError("calibrate_c: FWER target " + std::to_string(alpha) + " not bracketed by c in [" +
                         std::to_string(lo) + ", " + std::to_string(hi) + "]");
  const auto rough = solve(fc, lo, hi, flo, fhi, o.coarse_width);

  auto ff = objective(o.fwer);
  const double margin = std::max(o.coarse_width, 1e-3);
  double a = std::max(0.0, std::min(rough.first, rough.second) - margin);
  double b = std::max(rough.first, rough.second) + margin;
  double fa = ff(a), fb = ff(b);
  for (int widen = 0; (fa < 0.0 || fb > 0.0) && widen < 20; ++widen) {
    if (fa < 0.0) a = std::max(0.0, a - margin * (1 << widen)), fa = ff(a);
    if (fb > 0.0) b += margin * (1 << widen), fb = ff(b);
  }
  if (fa < 0.0 || fb > 0.0) throw NumericalError("calibrate_c: lost the bracket while refining");
  const auto fine = solve(ff, a, b, fa, fb, o.c_tol);
  out.shape.c = 0.5 * (fine.first + fine.second);
  out.bounds = shape_boundaries(out.shape, d.J);
  const Probability p = fwer(d, out.bounds, o.fwer);
  out.fwer = p.value;
  out.fwer_err = p.err;
  if (!(std::abs(p.value - alpha) <= o.fwer_tol))
    throw NumericalError("calibrate_c: FWER " + std::to_string(p.value) + " misses target " + std::to_string(alpha));
  return out;
}

/// Probability that one arm with true advantage theta over its comparator
/// crosses an upper bound at some stage, ignoring the other arms.
inline double pairwise_power(const TrialDesign& d, const Boundaries& b, double theta, const MvnOptions& mvn = {}) {
  const TrialDesign two{1, d.J, d.n, {0, 0}, d.sigma};
  const Scenario s{{0.0, theta}};
  EventSpec cross;
  for (int i = 1; i <= d.J; ++i) {
    Conjunction c;
    detail::push_continue(c, b, 1, 0, 1, i - 1);
    c.push_back({ZIndex::retain(1, 0, i), b.u(i), kInf});
    cross.terms.push_back(std::move(c));
  }
  return event_probability(two, s, cross, mvn).value;
}

/// Geometry without a cohort size: entries are counted in stages.
struct DesignTemplate {
  int K = 1;
  int J = 1;
  std::vector<long> entry_stages;
  double sigma = 1.0;

  TrialDesign with_n(long n) const {
    TrialDesign d{K, J, n, {}, sigma};
    for (long e : entry_stages) d.entry.push_back(e * n);
    return d;
  }
};

inline DesignTemplate template_of(const TrialDesign& d) {
  DesignTemplate t{d.K, d.J, {}, d.sigma};
  for (long e : d.entry) {
    if (e % d.n != 0) throw DesignError("entry-multiple", "entries must be multiples of n");
    t.entry_stages.push_back(e / d.n);
  }
  return t;
}

struct SampleSize {
  long n = 0;
  long total = 0;
  double power = 0.0;
  Calibration calibration;
};

struct SampleSizeOptions {
  long cap = 100000;
  CalibrateOptions calibrate{};
  MvnOptions mvn = [] {
    MvnOptions o;
    o.abs_tol = 1e-6;
    return o;
  }();
};

/// Smallest cohort size whose pairwise power reaches the target under an
/// existing calibration of the same design shape.
inline SampleSize find_sample_size(const DesignTemplate& t, const Calibration& cal, double target_power, double theta,
                                   const SampleSizeOptions& o = {}) {
  if (!(target_power > 0.0 && target_power < 1.0)) throw DesignError("power-range", "target power must lie in (0, 1)");
  if (!(theta > 0.0)) throw DesignError("effect-positive", "theta must be positive");
  SampleSize out;
  out.calibration = cal;
  const auto power_at = [&](long n) { return pairwise_power(t.with_n(n), out.calibration.bounds, theta, o.mvn); };

  long lo = 0, hi = 1;
  double phi = power_at(hi);
  while (phi < target_power) {
    if (hi >= o.cap)
      throw NumericalError("find_sample_size: target power not reached for n <= " + std::to_string(o.cap));
    lo = hi;
    hi = std::min(hi * 2, o.cap);
    phi = power_at(hi);
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    const double pm = power_at(mid);
    if (pm >= target_power) {
      hi = mid;
      phi = pm;
    } else {
      lo = mid;
    }
  }
  out.n = hi;
  out.power = phi;
  out.total = max_sample_size(t.with_n(hi));
  return out;
}

/// Boundaries depend only on the shape of the design, not on n, so the
/// calibration runs once.
inline SampleSize find_sample_size(const DesignTemplate& t, ShapeKind kind, double alpha, double target_power,
                                   double theta, const SampleSizeOptions& o = {}) {
  if (!(target_power > 0.0 && target_power < 1.0)) throw DesignError("power-range", "target power must lie in (0, 1)");
  if (!(theta > 0.0)) throw DesignError("effect-positive", "theta must be positive");
  return find_sample_size(t, calibrate_c(t.with_n(1), kind, alpha, o.calibrate), target_power, theta, o);
}

}  // namespace platctl
