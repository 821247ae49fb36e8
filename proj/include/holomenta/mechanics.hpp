#pragma once

#include <string>
#include <utility>
#include <vector>

#include "holomenta/numeric.hpp"
#include "holomenta/subspace.hpp"
#include "holomenta/types.hpp"

namespace holomenta::mech {

/// Nonholonomic system on a chart of Q: kinetic metric, potential, a frame
/// of the constraint distribution D (r columns) and a frame of a chosen
/// complement W (n - r columns) with TQ = D ⊕ W pointwise.
struct MechanicalSystem {
  int n = 0;
  std::vector<std::string> coord_names;
  MatrixField metric;     // q -> n x n SPD
  ScalarField potential;  // q -> real
  MatrixField d_frame;    // q -> n x r, columns span D_q
  MatrixField w_frame;    // q -> n x (n - r), columns span W_q
  int r = 0;
  double rank_tol = geom::kDefaultRankTol;
};

/// Point of the constraint manifold M in quasi-velocity coordinates: v holds
/// the components of the admissible velocity in the d_frame columns, so the
/// constraint holds identically and momenta embed as p = kappa X v.
struct MPoint {
  Vec q;
  Vec v;
};

/// Tangent vector to M lying in C, in (q, v) chart components. qdot always
/// reconstructs inside D_q.
struct CTangent {
  Vec qdot;
  Vec vdot;
};

/// Tangent vector to T*Q at an embedded point, in (dq, dp) components.
struct EmbeddedTangent {
  Vec dq;
  Vec dp;
};

inline geom::SubspaceBasis d_basis_at(const MechanicalSystem& sys,
                                      const Vec& q) {
  return geom::SubspaceBasis::from_columns(sys.d_frame(q), sys.rank_tol);
}

inline geom::SubspaceBasis w_basis_at(const MechanicalSystem& sys,
                                      const Vec& q) {
  Mat w = sys.w_frame ? sys.w_frame(q) : Mat::Zero(sys.n, 0);
  return geom::SubspaceBasis::from_columns(std::move(w), sys.rank_tol);
}

/// Canonical momenta of the embedded point: p = kappa(q) X(q) v.
inline Vec momenta(const MechanicalSystem& sys, const MPoint& m) {
  return sys.metric(m.q) * (sys.d_frame(m.q) * m.v);
}

/// Restricted Hamiltonian H_M(q, v) = 1/2 v^T (X^T kappa X) v + U(q).
inline double hamiltonian_m(const MechanicalSystem& sys, const MPoint& m) {
  const Mat x = sys.d_frame(m.q);
  const Mat g = x.transpose() * sys.metric(m.q) * x;
  double h = 0.5 * m.v.dot(g * m.v);
  if (sys.potential) h += sys.potential(m.q);
  return h;
}

/// Basis of C_m pushed into T(T*Q) at the embedded point. For j = 1..r the
/// first family is (dq = X_j, dp = d[kappa X v]/dq · X_j) with v held fixed;
/// the second family is (dq = 0, dp = kappa X e_j). Their (q, v)-chart
/// counterparts are (X_j, 0) and (0, e_j).
inline std::vector<EmbeddedTangent> c_basis(const MechanicalSystem& sys,
                                            const MPoint& m) {
  const Mat x = sys.d_frame(m.q);
  const Mat kx = sys.metric(m.q) * x;
  VectorField momentum_map = [&sys, &m](const Vec& q) -> Vec {
    return sys.metric(q) * (sys.d_frame(q) * m.v);
  };
  const Mat dp_dq =
      numeric::jacobian(momentum_map, m.q, numeric::FdOrder::fourth);
  std::vector<EmbeddedTangent> basis;
  basis.reserve(2 * sys.r);
  for (int j = 0; j < sys.r; ++j)
    basis.push_back({x.col(j), dp_dq * x.col(j)});
  for (int j = 0; j < sys.r; ++j)
    basis.push_back({Vec::Zero(sys.n), kx.col(j)});
  return basis;
}

inline double canonical_two_form(const EmbeddedTangent& u,
                                 const EmbeddedTangent& w) {
  return u.dq.dot(w.dp) - w.dq.dot(u.dp);
}

/// Matrix of Omega_M restricted to C in the c_basis ordering
/// (c^1_1..c^1_r, c^2_1..c^2_r). Antisymmetric by construction; throws
/// DegenerateForm when its condition number exceeds 1e12.
inline Mat constrained_two_form(const MechanicalSystem& sys, const MPoint& m) {
  const auto basis = c_basis(sys, m);
  const int dim = static_cast<int>(basis.size());
  Mat omega = Mat::Zero(dim, dim);
  for (int a = 0; a < dim; ++a) {
    for (int b = a + 1; b < dim; ++b) {
      const double val = canonical_two_form(basis[a], basis[b]);
      omega(a, b) = val;
      omega(b, a) = -val;
    }
  }
  if (geom::condition_number(omega) > 1e12)
    throw DegenerateForm("constrained two-form is numerically singular");
  return omega;
}

namespace detail {

/// Right-hand side df restricted to the C-basis: the c^1_j slots take the
/// q-gradient paired with X_j (v fixed), the c^2_j slots take df/dv_j.
inline Vec restricted_differential(const MechanicalSystem& sys,
                                   const MPoint& m, const PhaseFunction& f) {
  const Mat x = sys.d_frame(m.q);
  ScalarField f_q = [&](const Vec& q) { return f(q, m.v); };
  ScalarField f_v = [&](const Vec& v) { return f(m.q, v); };
  const Vec grad_q = numeric::gradient(f_q, m.q, numeric::FdOrder::fourth);
  const Vec grad_v = numeric::gradient(f_v, m.v, numeric::FdOrder::fourth);
  Vec b(2 * sys.r);
  for (int j = 0; j < sys.r; ++j) b[j] = grad_q.dot(x.col(j));
  b.tail(sys.r) = grad_v;
  return b;
}

struct HamSolve {
  CTangent field;
  double residual;
};

inline HamSolve ham_solve(const MechanicalSystem& sys, const MPoint& m,
                          const Vec& b) {
  const Mat omega = constrained_two_form(sys, m);
  // i_X Omega|_C = df|_C reads Omega^T w = b for the coefficients w of X in
  // the C-basis; Omega is antisymmetric, so solve Omega w = -b.
  Eigen::FullPivLU<Mat> lu(omega);
  const Vec w = lu.solve(-b);
  const double residual =
      (omega * w + b).norm() / std::max(1.0, b.norm());
  const Mat x = sys.d_frame(m.q);
  CTangent out{x * w.head(sys.r), w.tail(sys.r)};
  return {std::move(out), residual};
}

}  // namespace detail

/// Nonholonomic Hamiltonian vector field X_f of a phase function f(q, v),
/// the unique section of C with i_{X_f} Omega_M|_C = df|_C.
inline CTangent ham_vector_field(const MechanicalSystem& sys, const MPoint& m,
                                 const PhaseFunction& f) {
  const Vec b = detail::restricted_differential(sys, m, f);
  auto solved = detail::ham_solve(sys, m, b);
  if (solved.residual > 1e-10)
    throw DegenerateForm("constrained solve residual exceeds 1e-10");
  return solved.field;
}

/// Relative residual of the constrained linear solve for X_f at m.
inline double ham_solve_residual(const MechanicalSystem& sys, const MPoint& m,
                                 const PhaseFunction& f) {
  const Vec b = detail::restricted_differential(sys, m, f);
  return detail::ham_solve(sys, m, b).residual;
}

/// The nonholonomic dynamics X_nh = X_{H_M} (equivalently -pi#_nh(dH_M)).
inline CTangent nonholonomic_vector_field(const MechanicalSystem& sys,
                                          const MPoint& m) {
  return ham_vector_field(sys, m, [&sys](const Vec& q, const Vec& v) {
    return hamiltonian_m(sys, MPoint{q, v});
  });
}

/// Directional derivative of a phase function along a C-tangent.
inline double derivative_along(const MechanicalSystem& sys, const MPoint& m,
                               const PhaseFunction& f, const CTangent& t) {
  Vec dir(sys.n + sys.r);
  dir << t.qdot, t.vdot;
  if (dir.norm() == 0.0) return 0.0;
  ScalarField joint = [&](const Vec& z) {
    return f(z.head(sys.n), z.tail(sys.r));
  };
  Vec z0(sys.n + sys.r);
  z0 << m.q, m.v;
  return numeric::directional_derivative(joint, z0, dir,
                                         numeric::FdOrder::fourth);
}

/// Nonholonomic bracket {f, g}_nh(m) = -X_f(g)(m).
inline double nh_bracket(const MechanicalSystem& sys, const MPoint& m,
                         const PhaseFunction& f, const PhaseFunction& g) {
  const CTangent xf = ham_vector_field(sys, m, f);
  return -derivative_along(sys, m, g, xf);
}

}  // namespace holomenta::mech
