#pragma once

#include <string>
#include <utility>
#include <vector>

#include "holomenta/integrate.hpp"
#include "holomenta/mechanics.hpp"
#include "holomenta/numeric.hpp"
#include "holomenta/subspace.hpp"
#include "holomenta/types.hpp"

namespace holomenta::sym {

/// Infinitesimal data of a free symmetry action: the s generator fields
/// (eta_a)_Q for a basis of the Lie algebra, stacked as columns.
struct LieAlgebraAction {
  int s = 0;
  MatrixField generators;  // q -> n x s
};

inline Mat generators_at(const LieAlgebraAction& act, const Vec& q) {
  return act.s > 0 ? act.generators(q) : Mat::Zero(q.size(), 0);
}

/// Pointwise splitting g = g_S ⊕ g_W: columns are coefficient vectors in
/// the standard algebra basis.
struct AlgebraSplitting {
  Mat gs_basis;  // s x k
  Mat gw_basis;  // s x (s - k)
};

/// True iff D_q + V_q spans the whole tangent space at q.
inline bool dimension_assumption(const mech::MechanicalSystem& sys,
                                 const LieAlgebraAction& act, const Vec& q) {
  const Mat d = sys.d_frame(q);
  const Mat e = generators_at(act, q);
  Mat stacked(sys.n, d.cols() + e.cols());
  stacked << d, e;
  return geom::rank_of(stacked, sys.rank_tol) == sys.n;
}

/// Splits the algebra at q: g_S collects coefficient vectors whose generator
/// lands in D_q, g_W those landing in W_q. Throws SplitFailure when the two
/// parts do not span R^s (W not vertical, or the action not free at q).
inline AlgebraSplitting algebra_splitting(const mech::MechanicalSystem& sys,
                                          const LieAlgebraAction& act,
                                          const Vec& q) {
  const Mat e = generators_at(act, q);
  const auto d_basis = mech::d_basis_at(sys, q);
  const auto w_basis = mech::w_basis_at(sys, q);
  Mat coeff_d(d_basis.count(), act.s);
  Mat coeff_w(w_basis.count(), act.s);
  for (int a = 0; a < act.s; ++a) {
    auto [cd, cw] = geom::decompose(e.col(a), d_basis, w_basis);
    coeff_d.col(a) = cd;
    coeff_w.col(a) = cw;
  }
  AlgebraSplitting split;
  split.gs_basis = geom::null_space(coeff_w, sys.rank_tol);
  split.gw_basis = geom::null_space(coeff_d, sys.rank_tol);
  Mat joint(act.s, split.gs_basis.cols() + split.gw_basis.cols());
  joint << split.gs_basis, split.gw_basis;
  if (static_cast<int>(joint.cols()) != act.s ||
      geom::rank_of(joint, sys.rank_tol) != act.s)
    throw SplitFailure("g_S and g_W do not span the algebra at this point");
  return split;
}

/// Projection of a constant algebra element onto g_S along g_W, returned in
/// the standard basis. Satisfies (P_{g_S} eta)_Q = P_D(eta_Q) pointwise.
inline Vec project_g_s(const mech::MechanicalSystem& sys,
                       const LieAlgebraAction& act, const Vec& q,
                       const Vec& eta) {
  const AlgebraSplitting split = algebra_splitting(sys, act, q);
  const int k = static_cast<int>(split.gs_basis.cols());
  Mat joint(act.s, act.s);
  joint << split.gs_basis, split.gw_basis;
  const Vec c = joint.fullPivLu().solve(eta);
  return split.gs_basis * c.head(k);
}

/// True iff the g_W fiber is the same subspace of R^s at every sample, so
/// that g_W admits a basis of constant sections.
inline bool vertical_symmetry_condition(const mech::MechanicalSystem& sys,
                                        const LieAlgebraAction& act,
                                        const std::vector<Vec>& samples) {
  if (samples.size() < 2)
    throw Error("vertical_symmetry_condition needs at least two samples");
  Mat ref;
  for (const auto& q : samples) {
    const Mat gw =
        geom::orthonormalize(algebra_splitting(sys, act, q).gw_basis);
    if (ref.size() == 0) {
      ref = gw;
      continue;
    }
    if (gw.cols() != ref.cols()) return false;
    if (gw.cols() == 0) continue;
    // Largest principal angle via sin(theta) = ||(I - P_ref) gw||_2.
    const Mat resid = gw - ref * (ref.transpose() * gw);
    if (resid.norm() > 1e-7) return false;
  }
  return true;
}

/// Nonholonomic momentum pairing <J^nh, xi>(m) = p(m) · xi_Q(q).
inline double momentum_pairing(const mech::MechanicalSystem& sys,
                               const LieAlgebraAction& act,
                               const mech::MPoint& m, const Vec& xi_coeffs) {
  const Vec p = mech::momenta(sys, m);
  return p.dot(generators_at(act, m.q) * xi_coeffs);
}

/// The g-valued connection-like one-form induced by W: the unique algebra
/// coefficients zeta with zeta_Q(q) equal to the W-component of the tangent.
inline Vec a_w(const mech::MechanicalSystem& sys, const LieAlgebraAction& act,
               const Vec& q, const Vec& tangent) {
  const auto d_basis = mech::d_basis_at(sys, q);
  const auto w_basis = mech::w_basis_at(sys, q);
  auto [cd, cw] = geom::decompose(tangent, d_basis, w_basis);
  const Vec w_part =
      w_basis.count() > 0 ? Vec(w_basis.vectors * cw) : Vec(Vec::Zero(sys.n));
  const Mat e = generators_at(act, q);
  if (act.s == 0) {
    if (w_part.norm() > 1e3 * sys.rank_tol)
      throw SplitFailure("W-component outside the vertical space");
    return Vec::Zero(0);
  }
  const Vec zeta = e.colPivHouseholderQr().solve(w_part);
  if ((e * zeta - w_part).norm() >
      1e3 * sys.rank_tol * std::max(1.0, w_part.norm()))
    throw SplitFailure("W-component outside the vertical space");
  return zeta;
}

/// P_D-projected coordinate-constant extension of a base vector, as a field.
inline VectorField projected_extension(const mech::MechanicalSystem& sys,
                                       Vec base) {
  return [&sys, base = std::move(base)](const Vec& q) -> Vec {
    return geom::project_along(base, mech::d_basis_at(sys, q),
                               mech::w_basis_at(sys, q));
  };
}

/// <J, K_W>(u, w) at m: K_W(u, w) = -A_W([u_ext, w_ext](q)) for the
/// P_D-projected constant extensions of the base parts, paired with the
/// momenta through the generators. Tensorial in u and w, so only their base
/// components enter.
inline double jk_pairing(const mech::MechanicalSystem& sys,
                         const LieAlgebraAction& act, const mech::MPoint& m,
                         const mech::CTangent& u, const mech::CTangent& w) {
  const VectorField u_ext = projected_extension(sys, u.qdot);
  const VectorField w_ext = projected_extension(sys, w.qdot);
  const Vec bracket =
      numeric::lie_bracket(u_ext, w_ext, m.q, numeric::FdOrder::fourth);
  const Vec zeta = a_w(sys, act, m.q, bracket);
  const Vec p = mech::momenta(sys, m);
  return -p.dot(generators_at(act, m.q) * zeta);
}

/// Section of the algebra bundle as coefficient functions over the standard
/// basis.
using Section = std::function<Vec(const Vec& q)>;

/// M-cotangent lift of the generator of a section: the nonholonomic
/// Hamiltonian vector field of its momentum function f = p · xi_Q.
inline mech::CTangent m_cotangent_lift(const mech::MechanicalSystem& sys,
                                       const LieAlgebraAction& act,
                                       const mech::MPoint& m,
                                       const Section& xi) {
  PhaseFunction f = [&sys, &act, &xi](const Vec& q, const Vec& v) {
    const Vec p = sys.metric(q) * (sys.d_frame(q) * v);
    return p.dot(generators_at(act, q) * xi(q));
  };
  return mech::ham_vector_field(sys, m, f);
}

/// Infinitesimal generator of a constant algebra element on M in (q, v)
/// chart components. Valid for G-equivariant d-frames, where the lifted
/// action leaves the quasi-velocity components untouched.
inline std::pair<Vec, Vec> generator_on_m(const mech::MechanicalSystem& sys,
                                          const LieAlgebraAction& act,
                                          const mech::MPoint& m,
                                          const Vec& eta) {
  return {generators_at(act, m.q) * eta, Vec::Zero(sys.r)};
}

// --- invariance diagnostics -------------------------------------------------

/// Worst finite-difference Lie-derivative residual of the metric, D and W
/// along every generator at q. Symmetric actions give ~1e-9 or below.
inline double invariance_residual(const mech::MechanicalSystem& sys,
                                  const LieAlgebraAction& act, const Vec& q) {
  const Mat e = generators_at(act, q);
  const Mat kappa = sys.metric(q);
  const double kappa_scale = std::max(1.0, kappa.norm());
  const auto d_basis = mech::d_basis_at(sys, q);
  const auto w_basis = mech::w_basis_at(sys, q);
  double worst = 0.0;

  std::vector<Mat> dkappa(sys.n);
  for (int k = 0; k < sys.n; ++k) {
    const double h = numeric::fd_step(q[k], numeric::FdOrder::second);
    Vec qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    dkappa[k] = (sys.metric(qp) - sys.metric(qm)) / (2.0 * h);
  }

  for (int a = 0; a < act.s; ++a) {
    VectorField gen = [&act, a](const Vec& x) -> Vec {
      return generators_at(act, x).col(a);
    };
    const Vec v = e.col(a);
    const Mat jv = numeric::jacobian(gen, q, numeric::FdOrder::fourth);
    Mat lie = jv.transpose() * kappa + kappa * jv;
    for (int k = 0; k < sys.n; ++k) lie += v[k] * dkappa[k];
    worst = std::max(worst, lie.norm() / kappa_scale);

    for (int j = 0; j < sys.r; ++j) {
      VectorField dj = [&sys, j](const Vec& x) -> Vec {
        return sys.d_frame(x).col(j);
      };
      const Vec br = numeric::lie_bracket(gen, dj, q, numeric::FdOrder::fourth);
      auto [cd, cw] = geom::decompose(br, d_basis, w_basis);
      const Vec off = w_basis.count() > 0
                          ? Vec(w_basis.vectors * cw)
                          : Vec(Vec::Zero(sys.n));
      worst = std::max(worst, off.norm() / std::max(1.0, br.norm()));
    }
    for (int j = 0; j < w_basis.count(); ++j) {
      VectorField wj = [&sys, j](const Vec& x) -> Vec {
        return sys.w_frame(x).col(j);
      };
      const Vec br = numeric::lie_bracket(gen, wj, q, numeric::FdOrder::fourth);
      auto [cd, cw] = geom::decompose(br, d_basis, w_basis);
      const Vec off = Vec(d_basis.vectors * cd);
      worst = std::max(worst, off.norm() / std::max(1.0, br.norm()));
    }
  }
  return worst;
}

// --- horizontal gauge momentum discovery ------------------------------------

enum class Verdict { certified, residual_failed, empirical_only };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::certified: return "certified";
    case Verdict::residual_failed: return "residual_failed";
    case Verdict::empirical_only: return "empirical_only";
  }
  return "?";
}

struct GaugeMomentumReport {
  Vec eta;  // constant algebra element generating the candidate
  std::vector<std::pair<Vec, Vec>> section_samples;  // (q, P_gS(eta) coeffs)
  double jk_residual_max = 0.0;
  double drift = 0.0;
  Verdict verdict = Verdict::residual_failed;
};

struct PipelineOptions {
  double residual_tol = 1e-7;
  double drift_tol = 1e-8;
  mech::MPoint traj_start;
  double traj_t_final = 10.0;
  ode::OdeOptions ode{};
};

struct PipelineResult {
  bool dim_assumption = false;
  int rank_s = 0;
  bool vertical_symmetry = false;
  std::vector<GaugeMomentumReport> reports;
};

/// The conserved-candidate function f_eta(m) = p(m) · P_D(eta_Q(q)), which
/// coincides with <J^nh, P_{g_S}(eta)>.
inline double gauge_momentum_value(const mech::MechanicalSystem& sys,
                                   const LieAlgebraAction& act,
                                   const mech::MPoint& m, const Vec& eta) {
  const Vec eta_q = generators_at(act, m.q) * eta;
  const Vec horizontal = geom::project_along(eta_q, mech::d_basis_at(sys, m.q),
                                             mech::w_basis_at(sys, m.q));
  return mech::momenta(sys, m).dot(horizontal);
}

/// Full discovery pipeline: splits the algebra, tests the vertical symmetry
/// condition, completes a constant g_W basis with standard-basis elements,
/// evaluates the curvature-pairing obstruction on the samples, and always
/// records the empirical drift of each candidate along one trajectory.
/// Returns exactly rank S reports.
inline PipelineResult analyze_symmetries(const mech::MechanicalSystem& sys,
                                         const LieAlgebraAction& act,
                                         const std::vector<mech::MPoint>& samples,
                                         const PipelineOptions& opts) {
  if (samples.empty()) throw Error("analyze_symmetries: no samples");
  PipelineResult result;

  for (const auto& m : samples)
    if (!dimension_assumption(sys, act, m.q))
      throw DimensionAssumptionFailure(
          "D + V does not span the tangent space at a sample");
  result.dim_assumption = true;

  std::vector<Vec> sample_qs;
  sample_qs.reserve(samples.size());
  for (const auto& m : samples) sample_qs.push_back(m.q);

  const AlgebraSplitting first = algebra_splitting(sys, act, sample_qs[0]);
  const int k = static_cast<int>(first.gs_basis.cols());
  for (const auto& q : sample_qs)
    if (static_cast<int>(algebra_splitting(sys, act, q).gs_basis.cols()) != k)
      throw SplitFailure("rank of g_S varies across the samples");
  result.rank_s = k;

  result.vertical_symmetry =
      samples.size() >= 2
          ? vertical_symmetry_condition(sys, act, sample_qs)
          : true;

  // Complete the g_W fiber at the first sample to a basis of R^s with
  // standard-basis elements, greedily. Under the vertical symmetry
  // condition that fiber is the constant g_W.
  const Mat gw_ref = geom::orthonormalize(first.gw_basis);
  std::vector<Vec> etas;
  {
    Mat accum(act.s, gw_ref.cols());
    accum << gw_ref;
    for (int a = 0; a < act.s && static_cast<int>(etas.size()) < k; ++a) {
      Vec candidate = Vec::Zero(act.s);
      candidate[a] = 1.0;
      Mat trial(act.s, accum.cols() + 1);
      trial << accum, candidate;
      if (geom::rank_of(trial, sys.rank_tol) ==
          static_cast<int>(trial.cols())) {
        etas.push_back(candidate);
        accum = trial;
      }
    }
    if (static_cast<int>(etas.size()) != k)
      throw SplitFailure("could not complete a basis transverse to g_W");
  }

  // One empirical trajectory shared by all candidates.
  ode::Trajectory traj =
      ode::integrate(sys, opts.traj_start, opts.traj_t_final, opts.ode);

  for (const Vec& eta : etas) {
    GaugeMomentumReport report;
    report.eta = eta;

    double worst = 0.0;
    for (const auto& m : samples) {
      const Vec p_gs = project_g_s(sys, act, m.q, eta);
      report.section_samples.emplace_back(m.q, p_gs);
      const mech::CTangent xnh = mech::nonholonomic_vector_field(sys, m);
      const Vec xi_q = generators_at(act, m.q) * p_gs;
      const mech::CTangent xi_dir{xi_q, Vec::Zero(sys.r)};
      const double pairing = jk_pairing(sys, act, m, xnh, xi_dir);
      const double xnh_norm = std::sqrt(xnh.qdot.squaredNorm() +
                                        xnh.vdot.squaredNorm());
      const double scale = 1.0 + mech::momenta(sys, m).norm() * xnh_norm;
      worst = std::max(worst, std::abs(pairing) / scale);
    }
    report.jk_residual_max = worst;

    auto observable = [&sys, &act, eta](const mech::MPoint& m) {
      return gauge_momentum_value(sys, act, m, eta);
    };
    report.drift =
        ode::conservation_report(traj, {{"f", observable}}).at("f");

    const bool resid_ok =
        result.vertical_symmetry && report.jk_residual_max <= opts.residual_tol;
    const bool drift_ok = report.drift <= opts.drift_tol;
    if (resid_ok && drift_ok)
      report.verdict = Verdict::certified;
    else if (drift_ok)
      report.verdict = Verdict::empirical_only;
    else
      report.verdict = Verdict::residual_failed;
    result.reports.push_back(std::move(report));
  }
  return result;
}

inline std::vector<GaugeMomentumReport> horizontal_gauge_momenta(
    const mech::MechanicalSystem& sys, const LieAlgebraAction& act,
    const std::vector<mech::MPoint>& samples, const PipelineOptions& opts) {
  return analyze_symmetries(sys, act, samples, opts).reports;
}

}  // namespace holomenta::sym
