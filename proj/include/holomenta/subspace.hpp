#pragma once

#include <utility>

#include "holomenta/types.hpp"

namespace holomenta::geom {

inline constexpr double kDefaultRankTol = 1e-9;

/// Basis of a linear subspace of R^n with a relative rank tolerance.
/// Ranks and independence are decided against the largest singular value of
/// the stacked column matrix. Dimensions here are small (n <= ~12), so the
/// dense O(n^3) route is used throughout.
struct SubspaceBasis {
  int ambient_dim = 0;
  Mat vectors;  // ambient_dim x count, one basis vector per column
  double tol = kDefaultRankTol;

  int count() const { return static_cast<int>(vectors.cols()); }

  static SubspaceBasis empty(int ambient, double tol = kDefaultRankTol) {
    SubspaceBasis b;
    b.ambient_dim = ambient;
    b.vectors = Mat::Zero(ambient, 0);
    b.tol = tol;
    return b;
  }

  /// Wraps the given columns, checking pairwise independence at `tol`.
  static SubspaceBasis from_columns(Mat cols, double tol = kDefaultRankTol) {
    SubspaceBasis b;
    b.ambient_dim = static_cast<int>(cols.rows());
    b.tol = tol;
    if (cols.cols() > 0) {
      Eigen::JacobiSVD<Mat> svd(cols);
      const auto& sv = svd.singularValues();
      if (sv[sv.size() - 1] <= tol * sv[0])
        throw Error("subspace basis vectors are not independent at tolerance");
    }
    b.vectors = std::move(cols);
    return b;
  }
};

inline int rank_of(const Mat& m, double tol = kDefaultRankTol) {
  if (m.cols() == 0 || m.rows() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * sv[0];
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++r;
  return r;
}

/// Orthonormal basis of the null space of m, columns of the result.
inline Mat null_space(const Mat& m, double tol = kDefaultRankTol) {
  if (m.cols() == 0) return Mat::Zero(0, 0);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double largest = sv.size() > 0 ? sv[0] : 0.0;
  const double cutoff = tol * (largest > 0.0 ? largest : 1.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

/// Orthonormal spanning set (drops dependent directions at tolerance).
inline Mat orthonormalize(const Mat& m, double tol = kDefaultRankTol) {
  if (m.cols() == 0) return m;
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = tol * (sv.size() > 0 ? sv[0] : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  return svd.matrixU().leftCols(rank);
}

/// Basis of span(A) ∩ span(B), via the null space of [A | -B]: every null
/// vector (c; d) satisfies A c = B d, an intersection element. The returned
/// basis is orthonormal; callers may rely on the span only.
inline SubspaceBasis subspace_intersection(const SubspaceBasis& a,
                                           const SubspaceBasis& b) {
  if (a.ambient_dim != b.ambient_dim)
    throw Error("subspace_intersection: ambient dimensions differ");
  const double tol = std::min(a.tol, b.tol);
  if (a.count() == 0 || b.count() == 0)
    return SubspaceBasis::empty(a.ambient_dim, tol);
  Mat stacked(a.ambient_dim, a.count() + b.count());
  stacked << a.vectors, -b.vectors;
  Mat ns = null_space(stacked, tol);
  if (ns.cols() == 0) return SubspaceBasis::empty(a.ambient_dim, tol);
  Mat inter = a.vectors * ns.topRows(a.count());
  SubspaceBasis out;
  out.ambient_dim = a.ambient_dim;
  out.tol = tol;
  out.vectors = orthonormalize(inter, tol);
  return out;
}

/// Coefficients (c_A, c_B) with vec = A c_A + B c_B, unique when A ⊕ B is a
/// direct sum containing vec. Coefficients refer to the bases as given.
inline std::pair<Vec, Vec> decompose(const Vec& vec, const SubspaceBasis& a,
                                     const SubspaceBasis& b) {
  if (a.ambient_dim != b.ambient_dim || vec.size() != a.ambient_dim)
    throw Error("decompose: ambient dimensions differ");
  const double tol = std::min(a.tol, b.tol);
  const int ka = a.count(), kb = b.count();
  Mat stacked(a.ambient_dim, ka + kb);
  if (ka > 0) stacked.leftCols(ka) = a.vectors;
  if (kb > 0) stacked.rightCols(kb) = b.vectors;
  if (ka + kb == 0) {
    if (vec.norm() > tol)
      throw DirectSumViolation("decompose: vector outside empty span");
    return {Vec::Zero(0), Vec::Zero(0)};
  }
  Eigen::JacobiSVD<Mat> svd(stacked,
                            Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[sv.size() - 1] <= tol * sv[0])
    throw DirectSumViolation("decompose: summands overlap at tolerance");
  Vec coeffs = svd.solve(vec);
  const double resid = (stacked * coeffs - vec).norm();
  if (resid > 1e3 * tol * std::max(1.0, vec.norm()))
    throw DirectSumViolation("decompose: vector outside combined span");
  return {coeffs.head(ka), coeffs.tail(kb)};
}

/// Component of vec in span(A) along the complement span(B).
inline Vec project_along(const Vec& vec, const SubspaceBasis& a,
                         const SubspaceBasis& b) {
  auto [ca, cb] = decompose(vec, a, b);
  return a.count() > 0 ? Vec(a.vectors * ca) : Vec(Vec::Zero(vec.size()));
}

inline double condition_number(const Mat& m) {
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[sv.size() - 1] == 0.0)
    return std::numeric_limits<double>::infinity();
  return sv[0] / sv[sv.size() - 1];
}

}  // namespace holomenta::geom
