#pragma once

// Joint normal law of any collection of test statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "platctl/design.hpp"

namespace platctl {

/// Mean vector and correlation matrix over a list of distinct statistics.
struct JointNormal {
  std::vector<ZIndex> indices;
  Eigen::VectorXd mean;
  Eigen::MatrixXd corr;

  std::size_t size() const { return indices.size(); }

  std::optional<std::size_t> find(const ZIndex& z) const {
    auto it = std::find(indices.begin(), indices.end(), z);
    if (it == indices.end()) return std::nullopt;
    return static_cast<std::size_t>(it - indices.begin());
  }
};

/// Maps a post-change statistic whose window equals the full concurrent
/// window (no pre-change data shared) onto the plain statistic.
inline ZIndex canonicalize(const TrialDesign& d, const ZIndex& z) {
  if (!z.post_change) return z;
  const long full_start = std::max(d.start(z.k), d.start(z.kprime));
  if (d.accrual(z.kprime, z.jprime) <= full_start) return ZIndex::retain(z.k, z.kprime, z.j);
  return z;
}

/// Expected value of a statistic in z-units.
inline double z_mean(const TrialDesign& d, const Scenario& s, const ZIndex& z) {
  if (z.k == z.kprime) throw StructuralError("statistic compares arm " + std::to_string(z.k) + " with itself");
  const Window w = window(d, z);
  if (w.size() <= 0) throw DesignError("empty-window", to_string(z) + " has no patients");
  return (s[z.k] - s[z.kprime]) * std::sqrt(static_cast<double>(w.size())) / (d.sigma * std::sqrt(2.0));
}

namespace detail {

inline bool unreachable_orientation(const ZIndex& a, const ZIndex& b) {
  // arm b.k appears as a comparator in the earlier statistic
  return a.kprime == b.k && a.k != b.kprime;
}

}  // namespace detail

/// Correlation between two full-window statistics Z_{k1,k1',j1} and
/// Z_{k2,k2',j2}.
///
/// The pair is ordered so that n_{k1,j1} <= n_{k2,j2}; equal accruals are
/// ordered by (k, k') and flipped if that orientation would put the later
/// statistic's active arm in the comparator slot of the earlier one.
inline double z_corr(const TrialDesign& d, ZIndex a, ZIndex b) {
  if (a.post_change || b.post_change) throw StructuralError("z_corr expects full-window statistics");
  if (a.k == a.kprime || b.k == b.kprime) throw StructuralError("statistic compares an arm with itself");
  long na = d.accrual(a.k, a.j), nb = d.accrual(b.k, b.j);
  if (na > nb || (na == nb && std::tie(a.k, a.kprime) > std::tie(b.k, b.kprime))) {
    std::swap(a, b);
    std::swap(na, nb);
  }
  if (na == nb && detail::unreachable_orientation(a, b)) std::swap(a, b);

  const int k1 = a.k, c1 = a.kprime, k2 = b.k, c2 = b.kprime;
  const double n1 = static_cast<double>(d.accrual(k1, a.j));
  const double n2 = static_cast<double>(d.accrual(k2, b.j));
  const auto e = [&](int arm) { return static_cast<double>(d.start(arm)); };

  if (k1 != k2 && k1 != c2 && c1 != k2 && c1 != c2) return 0.0;
  if (k1 == k2 && c1 == c2) {
    const double base = std::max(e(k1), e(c1));
    return std::sqrt((n1 - base) / (n2 - base));
  }
  if (k1 == k2) {
    const double num = std::max(0.0, n1 - std::max({e(k1), e(c1), e(c2)}));
    return num / (2.0 * std::sqrt((n1 - std::max(e(k1), e(c1))) * (n2 - std::max(e(k1), e(c2)))));
  }
  if (k1 == c2 && c1 != k2) {
    const double num = std::max(0.0, n1 - std::max({e(k1), e(k2), e(c1)}));
    return -num / (2.0 * std::sqrt((n1 - std::max(e(k1), e(c1))) * (n2 - std::max(e(k2), e(k1)))));
  }
  if (c1 == c2) {
    const double num = std::max(0.0, n1 - std::max({e(k1), e(k2), e(c1)}));
    return num / (2.0 * std::sqrt((n1 - std::max(e(k1), e(c1))) * (n2 - std::max(e(k2), e(c1)))));
  }
  throw StructuralError("no correlation case for " + to_string(a) + " and " + to_string(b) +
                        ": a control cannot become an active arm again");
}

/// Correlation between Z*_{k,k',j1,j'} and Z*_{k,k',j2,j'}.
inline double z_corr_post(const TrialDesign& d, ZIndex a, ZIndex b) {
  if (!a.post_change || !b.post_change) throw StructuralError("z_corr_post expects post-change statistics");
  if (a.k != b.k || a.kprime != b.kprime || a.jprime != b.jprime)
    throw StructuralError("post-change statistics " + to_string(a) + " and " + to_string(b) +
                          " do not share (k, k', j')");
  if (a.j > b.j) std::swap(a, b);
  const double base = static_cast<double>(std::max(d.start(a.k), d.accrual(a.kprime, a.jprime)));
  const double n1 = static_cast<double>(d.accrual(a.k, a.j));
  const double n2 = static_cast<double>(d.accrual(b.k, b.j));
  return std::sqrt((n1 - base) / (n2 - base));
}

/// Correlation between two canonical statistics of either kind. A
/// post-change statistic shares no patients with any statistic that ends
/// at or before its change point, so such pairs are uncorrelated.
inline double stat_corr(const TrialDesign& d, const ZIndex& a, const ZIndex& b) {
  if (a == b) return 1.0;
  if (!a.post_change && !b.post_change) return z_corr(d, a, b);
  if (a.post_change && b.post_change) return z_corr_post(d, a, b);
  const ZIndex& full = a.post_change ? b : a;
  const ZIndex& post = a.post_change ? a : b;
  if (d.accrual(full.k, full.j) <= d.accrual(post.kprime, post.jprime)) return 0.0;
  throw StructuralError("cannot correlate " + to_string(full) + " with " + to_string(post) +
                        ": the full-window statistic extends past the change point");
}

inline constexpr double kPsdTolerance = 1e-10;

/// Builds the joint law of `indices`. Aliases (a post-change statistic
/// with no pre-change data, or repeated entries) are merged, so the result
/// may be shorter than the input; look statistics up with `find` after
/// `canonicalize`.
inline JointNormal assemble_joint(const TrialDesign& d, const Scenario& s, const std::vector<ZIndex>& indices) {
  JointNormal jn;
  for (const ZIndex& z : indices) {
    const ZIndex c = canonicalize(d, z);
    if (std::find(jn.indices.begin(), jn.indices.end(), c) == jn.indices.end()) jn.indices.push_back(c);
  }
  const auto m = static_cast<Eigen::Index>(jn.indices.size());
  jn.mean.resize(m);
  jn.corr.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    jn.mean(i) = z_mean(d, s, jn.indices[static_cast<std::size_t>(i)]);
    jn.corr(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = stat_corr(d, jn.indices[static_cast<std::size_t>(i)], jn.indices[static_cast<std::size_t>(j)]);
      if (!(std::abs(r) <= 1.0 + 1e-12))
        throw NumericalError("correlation outside [-1, 1] for " + to_string(jn.indices[static_cast<std::size_t>(i)]));
      jn.corr(i, j) = jn.corr(j, i) = r;
    }
  }
  if (m > 1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jn.corr, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -kPsdTolerance)
      throw NumericalError("assembled correlation matrix is not positive semidefinite (min eigenvalue " +
                           std::to_string(eig.eigenvalues().minCoeff()) + ")");
  }
  return jn;
}

}  // namespace platctl
