#pragma once

// Rectangle probabilities P(lo <= X <= hi) for X ~ N(mean, corr).
//
// The integrator follows the separation-of-variables scheme: factor the
// (possibly singular) correlation matrix with a pivoted Cholesky step that
// orders variables by their expected truncation mass, map the integral onto
// the unit cube, and integrate it with randomly shifted Kronecker lattice
// points (square roots of primes) under the baker's transform with
// antithetic pairs. The spread over shifts gives the error estimate.
//
// Rank-deficient matrices are supported. A variable with no remaining
// conditional variance is a fixed linear combination of earlier whitened
// variables; its limits are folded into the limits of the last whitened
// variable it depends on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "platctl/design.hpp"
#include "platctl/joint_dist.hpp"
#include "platctl/normal.hpp"

namespace platctl {

inline constexpr int kMaxMvnDimension = 25;

struct Rectangle {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct MvnOptions {
  double abs_tol = 1e-5;    // stop once 3·err <= max(abs_tol, rel_tol·prob)
  double rel_tol = 0.0;
  int shifts = 12;
  std::size_t min_points = 1024;     // per shift, before the first check
  std::size_t max_points = 1 << 21;  // per shift
  std::uint64_t seed = 0x5eed1234abcdULL;
  bool reorder = true;
};

struct MvnResult {
  double prob = 0.0;
  double err = 0.0;  // one standard error
  std::size_t points = 0;
};

/// Pivoted Cholesky factor of a positive semidefinite matrix: with P the
/// permutation `perm`, P·C·Pᵀ = L·Lᵀ where L is n×rank lower trapezoidal.
struct PsdFactor {
  Eigen::MatrixXd L;
  std::vector<int> perm;  // perm[i] = original row of pivoted row i
  int rank = 0;

  /// F with F·Fᵀ = C in the original variable order.
  Eigen::MatrixXd factor() const {
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(L.rows(), rank);
    for (Eigen::Index i = 0; i < L.rows(); ++i) F.row(perm[static_cast<std::size_t>(i)]) = L.row(i).head(rank);
    return F;
  }
};

inline PsdFactor factorize_psd(const Eigen::MatrixXd& C, double tol = kPsdTolerance) {
  const Eigen::Index n = C.rows();
  if (C.cols() != n) throw NumericalError("factorize_psd: matrix is not square");
  Eigen::MatrixXd A = C;
  PsdFactor f;
  f.L = Eigen::MatrixXd::Zero(n, n);
  f.perm.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) f.perm[static_cast<std::size_t>(i)] = static_cast<int>(i);

  Eigen::Index i = 0;
  for (; i < n; ++i) {
    Eigen::Index piv = i;
    double best = -kInf;
    for (Eigen::Index j = i; j < n; ++j) {
      const double s = A(j, j) - f.L.row(j).head(i).squaredNorm();
      if (s < -tol) throw NumericalError("factorize_psd: matrix is indefinite");
      if (s > best) best = s, piv = j;
    }
    if (best <= tol) break;
    if (piv != i) {
      A.row(i).swap(A.row(piv));
      A.col(i).swap(A.col(piv));
      f.L.row(i).swap(f.L.row(piv));
      std::swap(f.perm[static_cast<std::size_t>(i)], f.perm[static_cast<std::size_t>(piv)]);
    }
    const double lii = std::sqrt(best);
    f.L(i, i) = lii;
    for (Eigen::Index j = i + 1; j < n; ++j)
      f.L(j, i) = (A(j, i) - f.L.row(j).head(i).dot(f.L.row(i).head(i))) / lii;
  }
  f.rank = static_cast<int>(i);
  // Remaining Schur complement must vanish.
  for (Eigen::Index a = f.rank; a < n; ++a)
    for (Eigen::Index b = f.rank; b <= a; ++b) {
      const double r = A(a, b) - f.L.row(a).head(f.rank).dot(f.L.row(b).head(f.rank));
      if (std::abs(r) > std::sqrt(tol)) throw NumericalError("factorize_psd: matrix is indefinite");
    }
  return f;
}

namespace detail {

/// P(a < Z < b) for standard normal Z, evaluated on the tail that keeps
/// precision.
inline double interval_mass(double a, double b) {
  if (!(b > a)) return 0.0;
  if (a > 0.0) return norm_sf(a) - norm_sf(b);
  return norm_cdf(b) - norm_cdf(a);
}

/// Mean of a standard normal truncated to (a, b).
inline double truncated_mean(double a, double b) {
  const double mass = interval_mass(a, b);
  if (mass > 1e-300) {
    const double pa = std::isfinite(a) ? norm_pdf(a) : 0.0;
    const double pb = std::isfinite(b) ? norm_pdf(b) : 0.0;
    return (pa - pb) / mass;
  }
  if (std::isfinite(a) && std::isfinite(b)) return 0.5 * (a + b);
  if (std::isfinite(a)) return a;
  if (std::isfinite(b)) return b;
  return 0.0;
}

/// Draws the whitened variable restricted to (a, b) from a uniform w and
/// returns its mass.
inline double sample_interval(double a, double b, double w, double* y) {
  if (a > 0.0) {
    const double qa = norm_sf(a), qb = norm_sf(b);
    *y = -norm_quantile(qb + w * (qa - qb));
    return qa - qb;
  }
  const double pa = norm_cdf(a), pb = norm_cdf(b);
  *y = norm_quantile(pa + w * (pb - pa));
  return pb - pa;
}

struct DependentRow {
  std::vector<double> coef;  // coefficients on whitened variables before `col`
  double lo = -kInf;
  double hi = kInf;
};

/// Cube-mapped integrand for one rectangle probability.
///
/// With `stop` given, the last stop->lo.size() variables form a chain read
/// in order after every other variable: `rect` holds their continuation
/// limits and `stop` their stopping limits. `chain` then returns both the
/// probability of the leading rectangle and the probability of that
/// rectangle followed by a stop somewhere along the chain, from the same
/// point.
class SovIntegrand {
 public:
  SovIntegrand(const Eigen::VectorXd& mean, const Eigen::MatrixXd& corr, const Rectangle& rect, bool reorder,
               const Rectangle* stop = nullptr) {
    const auto n = static_cast<int>(mean.size());
    const int tail = stop ? static_cast<int>(stop->lo.size()) : 0;
    const int m = n - tail;
    Eigen::MatrixXd C = corr;
    std::vector<double> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    std::vector<int> orig(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = rect.lo[static_cast<std::size_t>(i)] - mean(i);
      b[static_cast<std::size_t>(i)] = rect.hi[static_cast<std::size_t>(i)] - mean(i);
      orig[static_cast<std::size_t>(i)] = i;
    }
    L_ = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> ybar(static_cast<std::size_t>(n), 0.0);
    const auto swap_in = [&](int i, int piv) {
      if (piv == i) return;
      C.row(i).swap(C.row(piv));
      C.col(i).swap(C.col(piv));
      L_.row(i).swap(L_.row(piv));
      std::swap(a[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(piv)]);
      std::swap(b[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(piv)]);
      std::swap(orig[static_cast<std::size_t>(i)], orig[static_cast<std::size_t>(piv)]);
    };
    const auto eliminate = [&](int i, double var) {
      const double lii = std::sqrt(var);
      L_(i, i) = lii;
      for (int j = i + 1; j < n; ++j) L_(j, i) = (C(j, i) - L_.row(j).head(i).dot(L_.row(i).head(i))) / lii;
      double shift = 0.0;
      for (int q = 0; q < i; ++q) shift += L_(i, q) * ybar[static_cast<std::size_t>(q)];
      ybar[static_cast<std::size_t>(i)] =
          truncated_mean((a[static_cast<std::size_t>(i)] - shift) / lii, (b[static_cast<std::size_t>(i)] - shift) / lii);
    };

    int i = 0;
    for (; i < n; ++i) {
      int piv = -1;
      double best_mass = kInf, best_var = 0.0;
      for (int j = i; j < n; ++j) {
        if (orig[static_cast<std::size_t>(j)] >= m) continue;
        const double s = C(j, j) - L_.row(j).head(i).squaredNorm();
        if (s <= kPsdTolerance) continue;
        if (!reorder) {
          piv = j, best_var = s;
          break;
        }
        double shift = 0.0;
        for (int q = 0; q < i; ++q) shift += L_(j, q) * ybar[static_cast<std::size_t>(q)];
        const double sd = std::sqrt(s);
        const double mass = interval_mass((a[static_cast<std::size_t>(j)] - shift) / sd,
                                          (b[static_cast<std::size_t>(j)] - shift) / sd);
        if (mass < best_mass) best_mass = mass, piv = j, best_var = s;
      }
      if (piv < 0) break;
      swap_in(i, piv);
      eliminate(i, best_var);
    }
    lead_rank_ = i;
    for (int h = 0; h < tail; ++h, ++i) {
      int piv = i;
      while (orig[static_cast<std::size_t>(piv)] != m + h) ++piv;
      const double s = C(piv, piv) - L_.row(piv).head(i).squaredNorm();
      if (s <= kPsdTolerance)
        throw NumericalError("mvn: chain variable " + std::to_string(h) + " carries no information beyond the rectangle");
      swap_in(i, piv);
      eliminate(i, s);
      stop_lo_.push_back(stop->lo[static_cast<std::size_t>(h)] - mean(m + h));
      stop_hi_.push_back(stop->hi[static_cast<std::size_t>(h)] - mean(m + h));
    }
    rank_ = i;
    lo_.assign(a.begin(), a.begin() + rank_);
    hi_.assign(b.begin(), b.begin() + rank_);
    attached_.resize(static_cast<std::size_t>(rank_));
    for (int j = rank_; j < n; ++j) {
      int col = -1;
      for (int q = lead_rank_ - 1; q >= 0; --q)
        if (std::abs(L_(j, q)) > 1e-10) {
          col = q;
          break;
        }
      const double aj = a[static_cast<std::size_t>(j)], bj = b[static_cast<std::size_t>(j)];
      if (col < 0) {
        if (!(aj <= 0.0 && 0.0 <= bj)) impossible_ = true;
        continue;
      }
      const double c = L_(j, col);
      DependentRow row;
      for (int q = 0; q < col; ++q) row.coef.push_back(L_(j, q) / c);
      row.lo = c > 0 ? aj / c : bj / c;
      row.hi = c > 0 ? bj / c : aj / c;
      attached_[static_cast<std::size_t>(col)].push_back(std::move(row));
    }
  }

  int rank() const { return rank_; }
  bool is_chain() const { return !stop_lo_.empty(); }
  /// Number of cube coordinates the integrand consumes.
  int dimension() const { return std::max(0, rank_ - 1); }
  bool impossible() const { return impossible_; }

  double operator()(const double* w, double* y) const {
    double f = 1.0;
    for (int i = 0; i < rank_; ++i) {
      double a, b;
      limits(i, y, a, b);
      if (!(b > a)) return 0.0;
      if (i + 1 < rank_) {
        f *= sample_interval(a, b, w[i], &y[i]);
      } else {
        f *= interval_mass(a, b);
      }
      if (f <= 0.0) return 0.0;
    }
    return f;
  }

  /// Leading-rectangle probability `lead` and stop probability `stopped`
  /// at one point.
  void chain(const double* w, double* y, double& lead, double& stopped) const {
    lead = stopped = 0.0;
    double f = 1.0;
    for (int i = 0; i < lead_rank_; ++i) {
      double a, b;
      limits(i, y, a, b);
      if (!(b > a)) return;
      f *= sample_interval(a, b, w[i], &y[i]);
      if (f <= 0.0) return;
    }
    lead = f;
    for (int i = lead_rank_; i < rank_; ++i) {
      double shift = 0.0;
      for (int q = 0; q < i; ++q) shift += L_(i, q) * y[q];
      const double lii = L_(i, i);
      const auto h = static_cast<std::size_t>(i - lead_rank_);
      stopped += f * interval_mass((stop_lo_[h] - shift) / lii, (stop_hi_[h] - shift) / lii);
      if (i + 1 == rank_) break;
      const double a = (lo_[static_cast<std::size_t>(i)] - shift) / lii;
      const double b = (hi_[static_cast<std::size_t>(i)] - shift) / lii;
      if (!(b > a)) return;
      f *= sample_interval(a, b, w[i], &y[i]);
      if (f <= 0.0) return;
    }
  }

 private:
  void limits(int i, const double* y, double& a, double& b) const {
    double shift = 0.0;
    for (int q = 0; q < i; ++q) shift += L_(i, q) * y[q];
    const double lii = L_(i, i);
    a = (lo_[static_cast<std::size_t>(i)] - shift) / lii;
    b = (hi_[static_cast<std::size_t>(i)] - shift) / lii;
    for (const DependentRow& row : attached_[static_cast<std::size_t>(i)]) {
      double s = 0.0;
      for (std::size_t q = 0; q < row.coef.size(); ++q) s += row.coef[q] * y[q];
      a = std::max(a, row.lo - s);
      b = std::min(b, row.hi - s);
    }
  }

  int rank_ = 0;
  int lead_rank_ = 0;
  bool impossible_ = false;
  Eigen::MatrixXd L_;
  std::vector<double> lo_, hi_;
  std::vector<double> stop_lo_, stop_hi_;
  std::vector<std::vector<DependentRow>> attached_;
};

inline const std::array<double, kMaxMvnDimension>& kronecker_generators() {
  static const std::array<double, kMaxMvnDimension> g = [] {
    constexpr std::array<int, kMaxMvnDimension> primes{2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                                       43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97};
    std::array<double, kMaxMvnDimension> out{};
    for (std::size_t i = 0; i < primes.size(); ++i) {
      const double s = std::sqrt(static_cast<double>(primes[i]));
      out[i] = s - std::floor(s);
    }
    return out;
  }();
  return g;
}

inline void check_rectangle(const Eigen::VectorXd& mean, const Eigen::MatrixXd& corr, const Rectangle& rect) {
  const auto n = static_cast<std::size_t>(mean.size());
  if (corr.rows() != mean.size() || corr.cols() != mean.size())
    throw NumericalError("mvn: correlation matrix does not match the mean vector");
  if (rect.lo.size() != n || rect.hi.size() != n) throw NumericalError("mvn: rectangle dimension mismatch");
  if (n > static_cast<std::size_t>(kMaxMvnDimension))
    throw NumericalError("mvn: dimension " + std::to_string(n) + " exceeds " + std::to_string(kMaxMvnDimension));
}

inline void check_psd(const Eigen::MatrixXd& corr) {
  if (corr.rows() < 2) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kPsdTolerance)
    throw NumericalError("mvn: correlation matrix is not positive semidefinite");
}

/// Randomly shifted lattice in `dim` dimensions. `visit(shift, w, w')`
/// receives each mapped point with its antithetic partner; `converged(done)`
/// is asked after every doubling of the points per shift.
template <class Visit, class Converged>
std::size_t run_lattice(int dim, const MvnOptions& opts, Visit&& visit, Converged&& converged) {
  const auto& gen = kronecker_generators();
  const int shifts = std::max(2, opts.shifts);
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::vector<double>> shift(static_cast<std::size_t>(shifts),
                                         std::vector<double>(static_cast<std::size_t>(dim)));
  for (auto& sh : shift)
    for (double& v : sh) v = unif(rng);
  std::vector<double> w(static_cast<std::size_t>(dim) + 1), wa(static_cast<std::size_t>(dim) + 1);
  std::size_t done = 0;
  std::size_t target = std::max<std::size_t>(opts.min_points, 16);
  for (;;) {
    for (int s = 0; s < shifts; ++s) {
      const auto& sh = shift[static_cast<std::size_t>(s)];
      for (std::size_t k = done + 1; k <= target; ++k) {
        const double kk = static_cast<double>(k);
        for (int i = 0; i < dim; ++i) {
          double x = kk * gen[static_cast<std::size_t>(i)] + sh[static_cast<std::size_t>(i)];
          x -= std::floor(x);
          x = std::abs(2.0 * x - 1.0);
          w[static_cast<std::size_t>(i)] = x;
          wa[static_cast<std::size_t>(i)] = 1.0 - x;
        }
        visit(s, w.data(), wa.data());
      }
    }
    done = target;
    if (converged(done) || done >= opts.max_points) break;
    target = std::min(opts.max_points, done * 2);
  }
  return done * static_cast<std::size_t>(shifts) * 2;
}

/// Mean and standard error of per-shift averages.
inline std::pair<double, double> shift_stats(const std::vector<double>& per_shift) {
  const auto S = static_cast<double>(per_shift.size());
  double mean = 0.0;
  for (double v : per_shift) mean += v;
  mean /= S;
  double var = 0.0;
  for (double v : per_shift) var += (v - mean) * (v - mean);
  return {mean, std::sqrt(var / (S * (S - 1.0)))};
}

}  // namespace detail

/// Rectangle probability with a one-standard-error estimate. Deterministic
/// for a fixed `opts.seed`.
inline MvnResult mvn_rect_prob(const Eigen::VectorXd& mean, const Eigen::MatrixXd& corr, const Rectangle& rect,
                               const MvnOptions& opts = {}) {
  detail::check_rectangle(mean, corr, rect);
  const auto n = static_cast<std::size_t>(mean.size());
  for (std::size_t i = 0; i < n; ++i)
    if (!(rect.lo[i] < rect.hi[i])) return {0.0, 0.0, 0};
  if (n == 0) return {1.0, 0.0, 0};
  detail::check_psd(corr);

  const detail::SovIntegrand f(mean, corr, rect, opts.reorder);
  if (f.impossible() || f.rank() == 0) return {f.impossible() ? 0.0 : 1.0, 0.0, 0};
  std::vector<double> y(n);
  const int dim = f.dimension();
  if (dim == 0) return {f(nullptr, y.data()), 0.0, 1};

  const int shifts = std::max(2, opts.shifts);
  std::vector<double> sums(static_cast<std::size_t>(shifts), 0.0), avg(sums.size());
  MvnResult res;
  res.points = detail::run_lattice(
      dim, opts,
      [&](int s, const double* w, const double* wa) {
        sums[static_cast<std::size_t>(s)] += 0.5 * (f(w, y.data()) + f(wa, y.data()));
      },
      [&](std::size_t done) {
        for (std::size_t s = 0; s < sums.size(); ++s) avg[s] = sums[s] / static_cast<double>(done);
        const auto [m, se] = detail::shift_stats(avg);
        res.prob = std::clamp(m, 0.0, 1.0);
        res.err = se;
        return 3.0 * se <= std::max(opts.abs_tol, opts.rel_tol * res.prob);
      });
  return res;
}

/// One leading rectangle followed by a stopping chain, over the variables
/// of `mean`: the first size - stop.lo.size() are constrained by `limits`
/// only; the rest form the chain (`limits` continue, `stop` stops).
struct ChainTerm {
  Eigen::VectorXd mean;
  Eigen::MatrixXd corr;
  Rectangle limits;
  Rectangle stop;
};

/// Accuracy wanted for each output (3·err bound); infinity means "don't care".
struct ChainTargets {
  double lead = kInf;
  double stopped = kInf;
  double ratio = kInf;
};

struct ChainResult {
  double lead = 0.0;        // P(leading rectangles)
  double lead_err = 0.0;
  double stopped = 0.0;     // P(leading rectangles, then a stop)
  double stopped_err = 0.0;
  double ratio = 0.0;       // stopped / lead
  double ratio_err = 0.0;
  std::size_t points = 0;
};

/// Sum over disjoint chain terms, all integrated on the same lattice points
/// so that the ratio of the two sums is estimated with correlated errors.
inline ChainResult mvn_chain_prob(const std::vector<ChainTerm>& terms, const ChainTargets& want,
                                  const MvnOptions& opts = {}) {
  std::vector<detail::SovIntegrand> fs;
  int dim = 0;
  std::size_t ymax = 1;
  for (const ChainTerm& t : terms) {
    detail::check_rectangle(t.mean, t.corr, t.limits);
    const std::size_t tail = t.stop.lo.size();
    if (tail == 0 || t.stop.hi.size() != tail || tail > static_cast<std::size_t>(t.mean.size()))
      throw NumericalError("mvn: chain term needs stopping limits for its tail");
    bool empty = false;
    for (std::size_t i = 0; i + tail < t.limits.lo.size(); ++i) empty = empty || !(t.limits.lo[i] < t.limits.hi[i]);
    if (empty) continue;
    detail::check_psd(t.corr);
    detail::SovIntegrand f(t.mean, t.corr, t.limits, opts.reorder, &t.stop);
    if (f.impossible()) continue;
    dim = std::max(dim, f.dimension());
    ymax = std::max(ymax, static_cast<std::size_t>(t.mean.size()));
    fs.push_back(std::move(f));
  }
  ChainResult res;
  if (fs.empty()) return res;
  std::vector<double> y(ymax);
  const int shifts = std::max(2, opts.shifts);
  std::vector<double> lead(static_cast<std::size_t>(shifts), 0.0), stopped(lead.size(), 0.0);
  const auto add = [&](int s, const double* w) {
    for (const auto& f : fs) {
      double a = 0.0, b = 0.0;
      f.chain(w, y.data(), a, b);
      lead[static_cast<std::size_t>(s)] += 0.5 * a;
      stopped[static_cast<std::size_t>(s)] += 0.5 * b;
    }
  };
  const auto converged = [&](std::size_t done) {
    std::vector<double> la(lead.size()), sa(lead.size()), ra;
    for (std::size_t s = 0; s < lead.size(); ++s) {
      la[s] = lead[s] / static_cast<double>(done);
      sa[s] = stopped[s] / static_cast<double>(done);
      if (lead[s] > 0.0) ra.push_back(stopped[s] / lead[s]);
    }
    std::tie(res.lead, res.lead_err) = detail::shift_stats(la);
    std::tie(res.stopped, res.stopped_err) = detail::shift_stats(sa);
    res.ratio = res.lead > 0.0 ? std::clamp(res.stopped / res.lead, 0.0, 1.0) : 0.0;
    res.ratio_err = ra.size() >= 2 ? detail::shift_stats(ra).second : 0.0;
    const bool ratio_ok = res.lead <= 0.0 || 3.0 * res.ratio_err <= want.ratio;
    return 3.0 * res.lead_err <= want.lead && 3.0 * res.stopped_err <= want.stopped && ratio_ok;
  };
  if (dim == 0) {
    add(0, nullptr);
    res.lead = 2.0 * lead[0];
    res.stopped = 2.0 * stopped[0];
    res.ratio = res.lead > 0.0 ? std::clamp(res.stopped / res.lead, 0.0, 1.0) : 0.0;
    res.points = 1;
    return res;
  }
  res.points = detail::run_lattice(
      dim, opts,
      [&](int s, const double* w, const double* wa) {
        add(s, w);
        add(s, wa);
      },
      converged);
  return res;
}

inline MvnResult mvn_rect_prob(const JointNormal& jn, const Rectangle& rect, const MvnOptions& opts = {}) {
  return mvn_rect_prob(jn.mean, jn.corr, rect, opts);
}

struct McResult {
  double prob = 0.0;
  double se = 0.0;
};

/// Plain Monte Carlo estimate of the same probability. Used as an oracle.
inline McResult mvn_mc_prob(const Eigen::VectorXd& mean, const Eigen::MatrixXd& corr, const Rectangle& rect,
                            std::size_t reps, std::uint64_t seed) {
  detail::check_rectangle(mean, corr, rect);
  const PsdFactor pf = factorize_psd(corr);
  const Eigen::MatrixXd F = pf.factor();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z01(0.0, 1.0);
  const auto n = mean.size();
  Eigen::VectorXd z(pf.rank), x(n);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    for (int i = 0; i < pf.rank; ++i) z(i) = z01(rng);
    x = mean + F * z;
    bool inside = true;
    for (Eigen::Index i = 0; i < n && inside; ++i)
      inside = rect.lo[static_cast<std::size_t>(i)] <= x(i) && x(i) <= rect.hi[static_cast<std::size_t>(i)];
    hits += inside ? 1 : 0;
  }
  const double p = static_cast<double>(hits) / static_cast<double>(reps);
  return {p, std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(reps))};
}

inline McResult mvn_mc_prob(const JointNormal& jn, const Rectangle& rect, std::size_t reps, std::uint64_t seed) {
  return mvn_mc_prob(jn.mean, jn.corr, rect, reps, seed);
}

}  // namespace platctl
