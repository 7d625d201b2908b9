#pragma once

// Trial geometry, boundaries and effect scenarios for multi-arm multi-stage
// platform trials in which a superior arm can replace the control.
//
// Accrual is measured in patients per arm. Because every arm recruits at the
// same rate and the control recruits continuously, an accrual count doubles
// as a calendar time: two analyses happen "at the same time" exactly when
// their accruals coincide.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace platctl {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Raised when a design, boundary set or scenario violates a structural
/// invariant. `invariant()` names the rule that failed.
class DesignError : public std::invalid_argument {
 public:
  DesignError(std::string invariant, const std::string& what)
      : std::invalid_argument(invariant + ": " + what),
        invariant_(std::move(invariant)) {}
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

/// Raised when a computation is asked for a combination the model cannot
/// produce (an unreachable correlation case, mismatched statistics, ...).
class StructuralError : public std::logic_error {
  using std::logic_error::logic_error;
};

/// Raised when a numerical routine detects that its input is broken
/// (indefinite correlation matrix, failed bracket, ...).
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Arm 0 is the initial control; arms 1..K are experimental.
struct TrialDesign {
  int K = 1;                 // experimental arms
  int J = 1;                 // analyses per arm
  long n = 1;                // patients per arm per stage
  std::vector<long> entry;   // entry[k] = n_{k,0}; size K+1
  double sigma = 1.0;        // known outcome standard deviation

  /// n_{k,j} = n_{k,0} + j·n, the accrual of arm k at its j-th analysis.
  long accrual(int k, int j) const {
    if (k < 0 || k > K) throw DesignError("arm-range", "arm " + std::to_string(k) + " outside 0.." + std::to_string(K));
    if (j < 0 || j > J) throw DesignError("stage-range", "stage " + std::to_string(j) + " outside 0.." + std::to_string(J));
    return entry[static_cast<std::size_t>(k)] + static_cast<long>(j) * n;
  }

  long start(int k) const { return accrual(k, 0); }

  /// Last calendar point at which any arm can still be analysed.
  long horizon() const {
    long h = 0;
    for (int k = 1; k <= K; ++k) h = std::max(h, accrual(k, J));
    return h;
  }
};

/// Convenience constructor for the common-start design.
inline TrialDesign common_start_design(int K, int J, long n, double sigma = 1.0) {
  return TrialDesign{K, J, n, std::vector<long>(static_cast<std::size_t>(K) + 1, 0L), sigma};
}

/// Stopping boundaries shared by every arm. Missing futility bounds are
/// represented by -inf.
struct Boundaries {
  std::vector<double> upper;
  std::vector<double> lower;
  bool lower_binding = true;

  int stages() const { return static_cast<int>(upper.size()); }
  double u(int j) const { return upper.at(static_cast<std::size_t>(j - 1)); }
  double l(int j) const { return lower.at(static_cast<std::size_t>(j - 1)); }
};

/// True means: mu[0] is the initial control, mu[k] arm k.
struct Scenario {
  std::vector<double> mu;

  double operator[](int k) const { return mu.at(static_cast<std::size_t>(k)); }

  /// Experimental arm with the largest mean; ties go to the lower index.
  int best_arm() const {
    int best = 1;
    for (int k = 2; k < static_cast<int>(mu.size()); ++k)
      if (mu[static_cast<std::size_t>(k)] > mu[static_cast<std::size_t>(best)]) best = k;
    return best;
  }
};

/// Which data enter a comparison after the control has changed.
enum class Policy { retain, discard };

inline const char* to_string(Policy p) { return p == Policy::retain ? "retain" : "discard"; }

/// Identifies a test statistic.
///
/// With `post_change == false` this is Z_{k,k',j}, the comparison of arm k
/// against comparator k' using every concurrent patient up to n_{k,j}. With
/// `post_change == true` it is Z*_{k,k',j,j'}, which only uses patients
/// recruited after n_{k',j'}, the accrual at which k' became the control.
struct ZIndex {
  int k = 1;
  int kprime = 0;
  int j = 1;
  bool post_change = false;
  int jprime = 0;

  static ZIndex retain(int k, int kprime, int j) { return ZIndex{k, kprime, j, false, 0}; }
  static ZIndex post(int k, int kprime, int j, int jprime) { return ZIndex{k, kprime, j, true, jprime}; }

  friend bool operator==(const ZIndex&, const ZIndex&) = default;
  friend auto operator<=>(const ZIndex&, const ZIndex&) = default;
};

inline std::string to_string(const ZIndex& z) {
  std::string s = (z.post_change ? "Z*[" : "Z[") + std::to_string(z.k) + "," + std::to_string(z.kprime) + "," +
                  std::to_string(z.j);
  if (z.post_change) s += "," + std::to_string(z.jprime);
  return s + "]";
}

/// Patient window (start, end] a statistic is built from.
struct Window {
  long start = 0;
  long end = 0;
  long size() const { return end - start; }
};

inline Window window(const TrialDesign& d, const ZIndex& z) {
  long start = std::max(d.start(z.k), d.start(z.kprime));
  if (z.post_change) start = std::max(start, d.accrual(z.kprime, z.jprime));
  return Window{start, d.accrual(z.k, z.j)};
}

/// Last analysis of arm k at or before accrual n_{k',j'}; 0 when arm k has
/// not been analysed by then.
inline int last_stage_before(const TrialDesign& d, int k, int kprime, int jprime) {
  const long change = d.accrual(kprime, jprime);
  int best = 0;
  for (int j = 1; j <= d.J; ++j)
    if (d.accrual(k, j) <= change) best = j;
  return best;
}

/// Maximum number of patients the trial can recruit: every experimental arm
/// for J stages plus a control that runs until the last analysis.
inline long max_sample_size(const TrialDesign& d) {
  return static_cast<long>(d.K) * d.J * d.n + d.horizon();
}

struct ValidateOptions {
  /// Require l_J = u_J so every arm is resolved at its final analysis.
  bool require_final_decision = true;
};

/// Throws DesignError naming the first violated invariant.
inline void validate_design(const TrialDesign& d, const Boundaries& b, ValidateOptions opts = {}) {
  if (d.K < 1) throw DesignError("arm-count", "K must be at least 1");
  if (d.J < 1) throw DesignError("stage-count", "J must be at least 1");
  if (d.n < 1) throw DesignError("cohort-size", "n must be a positive integer");
  if (!(d.sigma > 0) || !std::isfinite(d.sigma)) throw DesignError("sigma-positive", "sigma must be positive");
  if (d.entry.size() != static_cast<std::size_t>(d.K) + 1)
    throw DesignError("entry-length", "entry must list K+1 offsets");
  if (d.entry[0] != 0) throw DesignError("control-entry", "entry[0] must be 0");
  for (std::size_t k = 0; k < d.entry.size(); ++k) {
    if (d.entry[k] < 0) throw DesignError("entry-nonnegative", "entry[" + std::to_string(k) + "] is negative");
    if (d.entry[k] % d.n != 0)
      throw DesignError("entry-multiple", "entry[" + std::to_string(k) + "] is not a multiple of n");
  }
  if (b.upper.size() != static_cast<std::size_t>(d.J) || b.lower.size() != static_cast<std::size_t>(d.J))
    throw DesignError("bounds-length", "upper and lower must both have J entries");
  for (int j = 1; j <= d.J; ++j) {
    if (std::isnan(b.u(j)) || std::isnan(b.l(j))) throw DesignError("bounds-nan", "boundary is NaN");
    if (b.l(j) > b.u(j)) throw DesignError("bounds-order", "l_" + std::to_string(j) + " > u_" + std::to_string(j));
  }
  if (opts.require_final_decision) {
    const double uJ = b.u(d.J), lJ = b.l(d.J);
    if (!(std::abs(uJ - lJ) <= 1e-12 * std::max(1.0, std::abs(uJ))))
      throw DesignError("final-binding", "l_J must equal u_J");
  }
}

inline void validate_scenario(const TrialDesign& d, const Scenario& s) {
  if (s.mu.size() != static_cast<std::size_t>(d.K) + 1)
    throw DesignError("scenario-length", "mu must have K+1 entries");
  for (double m : s.mu)
    if (!std::isfinite(m)) throw DesignError("scenario-finite", "mu entries must be finite");
}

}  // namespace platctl
