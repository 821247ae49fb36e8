#pragma once

#include <cmath>
#include <limits>

#include "holomenta/types.hpp"

namespace holomenta::numeric {

/// Stencil order for the central-difference kernels. `second` is the plain
/// two-point stencil with h = cbrt(eps)(1+|x|); `fourth` is its one-step
/// Richardson extrapolation (a five-point stencil) with h = eps^(1/5)(1+|x|),
/// which lowers both the truncation and the roundoff floor to ~1e-12
/// relative. The mechanics core uses `fourth` so that conserved quantities
/// of the integrated flow stay flat to 1e-10 and better.
enum class FdOrder { second, fourth };

inline double fd_step(double x, FdOrder order) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double scale = 1.0 + std::abs(x);
  if (order == FdOrder::second) return std::cbrt(eps) * scale;
  return std::pow(eps, 0.2) * scale;
}

/// d/dt f(t) at t = 0 for a scalar-valued callable.
template <typename F>
double central_derivative(F&& f, FdOrder order = FdOrder::fourth) {
  const double h = fd_step(0.0, order);
  if (order == FdOrder::second) return (f(h) - f(-h)) / (2.0 * h);
  return (f(-2.0 * h) - 8.0 * f(-h) + 8.0 * f(h) - f(2.0 * h)) / (12.0 * h);
}

/// Gradient of a scalar field, one central stencil per coordinate.
inline Vec gradient(const ScalarField& f, const Vec& q,
                    FdOrder order = FdOrder::fourth) {
  Vec g(q.size());
  Vec x = q;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    const double h = fd_step(q[i], order);
    const double xi = q[i];
    auto eval = [&](double t) {
      x[i] = xi + t;
      const double val = f(x);
      x[i] = xi;
      return val;
    };
    if (order == FdOrder::second) {
      g[i] = (eval(h) - eval(-h)) / (2.0 * h);
    } else {
      g[i] = (eval(-2.0 * h) - 8.0 * eval(-h) + 8.0 * eval(h) - eval(2.0 * h)) /
             (12.0 * h);
    }
  }
  return g;
}

/// Jacobian of a vector field: entry (i, j) = d field_i / d q_j. The default
/// is the plain second-order stencil with h_j = cbrt(eps)(1+|q_j|).
inline Mat jacobian(const VectorField& field, const Vec& q,
                    FdOrder order = FdOrder::second) {
  const Eigen::Index n = q.size();
  Mat jac;
  Vec x = q;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double h = fd_step(q[j], order);
    const double xj = q[j];
    auto eval = [&](double t) {
      x[j] = xj + t;
      Vec val = field(x);
      x[j] = xj;
      if (!val.allFinite())
        throw Error("non-finite field value at finite-difference stencil point");
      return val;
    };
    Vec col;
    if (order == FdOrder::second) {
      col = (eval(h) - eval(-h)) / (2.0 * h);
    } else {
      col = (eval(-2.0 * h) - 8.0 * eval(-h) + 8.0 * eval(h) -
             eval(2.0 * h)) /
            (12.0 * h);
    }
    if (jac.size() == 0) jac.resize(col.size(), n);
    jac.col(j) = col;
  }
  return jac;
}

/// Directional derivative of a scalar field along `dir`.
inline double directional_derivative(const ScalarField& f, const Vec& q,
                                     const Vec& dir,
                                     FdOrder order = FdOrder::fourth) {
  const double nd = dir.norm();
  if (nd == 0.0) return 0.0;
  const Vec u = dir / nd;
  return nd * central_derivative(
                  [&](double t) { return f(q + t * u); }, order);
}

/// Lie bracket [A, B](q) = JB(q) A(q) - JA(q) B(q).
inline Vec lie_bracket(const VectorField& a, const VectorField& b, const Vec& q,
                       FdOrder order = FdOrder::second) {
  return jacobian(b, q, order) * a(q) - jacobian(a, q, order) * b(q);
}

}  // namespace holomenta::numeric
