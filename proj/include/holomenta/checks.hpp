#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "holomenta/integrate.hpp"
#include "holomenta/symmetry.hpp"
#include "holomenta/systems.hpp"
#include "holomenta/types.hpp"

namespace holomenta::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

inline Vec cross(const Vec& a, const Vec& b) {
  return Vec{{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
              a[0] * b[1] - a[1] * b[0]}};
}

// --- independent body-frame oracle for the rolling ball ----------------------
// Integrates the reduced momentum equation Kdot = K x Omega together with
// the full rotation matrix Rdot = R hat(Omega), where Omega is recovered
// from K through the contact inertia. Self-contained: never touches the
// constrained two-form machinery it cross-checks.

struct BallOracleSample {
  double t;
  Vec k;      // body momentum
  Vec gamma;  // vertical axis in the body frame (third row of R)
  Mat rot;
};

inline std::vector<BallOracleSample> ball_oracle(
    const systems::BallParams& par, const Vec& k0, const Mat& rot0,
    double t_final, int samples, double tol = 1e-12) {
  Vec z0(12);
  z0.head(3) = k0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) z0[3 + 3 * i + j] = rot0(i, j);

  ode::Rhs rhs = [&par](double, const Vec& z) -> Vec {
    const Vec k = z.head(3);
    Mat rot(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rot(i, j) = z[3 + 3 * i + j];
    const Vec gamma = rot.row(2).transpose();
    const Mat a = systems::ball::locked_inertia(par, gamma);
    const Vec omega = a.ldlt().solve(k);
    const Vec kdot = cross(k, omega);
    const Mat rdot = rot * systems::ball::hat(omega);
    Vec dz(12);
    dz.head(3) = kdot;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) dz[3 + 3 * i + j] = rdot(i, j);
    return dz;
  };

  ode::OdeOptions opts;
  opts.tol = tol;
  opts.samples = samples;
  const ode::Solution sol = ode::solve(rhs, 0.0, z0, t_final, opts);

  std::vector<BallOracleSample> out;
  out.reserve(sol.times.size());
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    BallOracleSample s;
    s.t = sol.times[i];
    s.k = sol.states[i].head(3);
    Mat rot(3, 3);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) rot(a, b) = sol.states[i][3 + 3 * a + b];
    s.gamma = rot.row(2).transpose();
    s.rot = rot;
    out.push_back(std::move(s));
  }
  return out;
}

/// Body momentum K_i = p . X_i of a chart state.
inline Vec ball_k_vector(const mech::MechanicalSystem& sys,
                         const mech::MPoint& m) {
  const Vec p = mech::momenta(sys, m);
  const Mat x = sys.d_frame(m.q);
  Vec k(3);
  for (int i = 0; i < 3; ++i) k[i] = p.dot(x.col(i));
  return k;
}

struct BallOracleComparison {
  double k_error = 0.0;
  double gamma_error = 0.0;
  double rot_error = 0.0;
  double k_norm_drift = 0.0;
};

/// Integrates the chart dynamics and the body-frame oracle side by side from
/// the same initial state and reports the worst deviations.
inline BallOracleComparison ball_oracle_compare(
    const systems::BuiltinFixture& fix, const systems::BallParams& par,
    const mech::MPoint& start, double t_final, int samples = 101,
    double tol = 1e-10) {
  ode::OdeOptions opts;
  opts.tol = tol;
  opts.samples = samples;
  const ode::Trajectory traj =
      ode::integrate(fix.system, start, t_final, opts);

  const Vec k0 = ball_k_vector(fix.system, start);
  const Mat rot0 =
      systems::ball::rotation(start.q[0], start.q[1], start.q[2]);
  const auto oracle =
      ball_oracle(par, k0, rot0, t_final, samples, tol * 1e-2);

  BallOracleComparison cmp;
  const double k_norm0 = k0.norm();
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    const auto& m = traj.states[i];
    const Vec k = ball_k_vector(fix.system, m);
    const Vec gamma = systems::ball::gamma_of(m.q);
    const Mat rot = systems::ball::rotation(m.q[0], m.q[1], m.q[2]);
    cmp.k_error = std::max(cmp.k_error, (k - oracle[i].k).norm());
    cmp.gamma_error =
        std::max(cmp.gamma_error, (gamma - oracle[i].gamma).norm());
    cmp.rot_error = std::max(cmp.rot_error, (rot - oracle[i].rot).norm());
    cmp.k_norm_drift = std::max(
        cmp.k_norm_drift, std::abs(oracle[i].k.squaredNorm() -
                                   k_norm0 * k_norm0) /
                              std::max(1.0, k_norm0 * k_norm0));
  }
  return cmp;
}

// --- per-fixture invariant and drift suite -----------------------------------

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace detail

/// Runs the full invariant + drift suite of one builtin fixture. Each row is
/// a named PASS/FAIL with the measured value against its bound.
inline std::vector<CheckResult> run_fixture_checks(const std::string& name) {
  const systems::BuiltinFixture fix = systems::builtin(name);
  std::vector<CheckResult> rows;
  auto add = [&rows](const std::string& label, bool ok,
                     const std::string& detail) {
    rows.push_back({label, ok, detail});
  };

  const auto states = systems::sample_states(fix, 50, 1);

  // Action invariance and the dimension assumption.
  {
    double worst_inv = 0.0;
    bool dim_ok = true;
    for (const auto& m : states) {
      worst_inv = std::max(
          worst_inv, sym::invariance_residual(fix.system, fix.action, m.q));
      dim_ok = dim_ok && sym::dimension_assumption(fix.system, fix.action, m.q);
    }
    add("action invariance residual <= 1e-6", worst_inv <= 1e-6,
        detail::fmt(worst_inv));
    add("dimension assumption at samples", dim_ok, dim_ok ? "holds" : "fails");
  }

  // Algebra splitting rank.
  {
    bool rank_ok = true;
    for (const auto& m : states) {
      const auto split =
          sym::algebra_splitting(fix.system, fix.action, m.q);
      rank_ok =
          rank_ok && static_cast<int>(split.gs_basis.cols()) == fix.expected_rank_s;
    }
    add("rank S == " + std::to_string(fix.expected_rank_s), rank_ok,
        rank_ok ? "as expected" : "mismatch");
  }

  // Two-form structure and the constrained solve.
  {
    double worst_cond = 0.0, worst_antisym = 0.0, worst_tan = 0.0;
    for (const auto& m : states) {
      const Mat omega = mech::constrained_two_form(fix.system, m);
      worst_antisym =
          std::max(worst_antisym, (omega + omega.transpose()).norm());
      worst_cond = std::max(worst_cond, geom::condition_number(omega));
      const mech::CTangent xnh =
          mech::nonholonomic_vector_field(fix.system, m);
      const Vec recon = fix.system.d_frame(m.q) *
                        fix.system.d_frame(m.q)
                            .colPivHouseholderQr()
                            .solve(xnh.qdot);
      worst_tan = std::max(worst_tan,
                           (recon - xnh.qdot).norm() /
                               std::max(1.0, xnh.qdot.norm()));
    }
    add("two-form antisymmetric", worst_antisym <= 1e-12,
        detail::fmt(worst_antisym));
    add("two-form condition < 1e8", worst_cond < 1e8, detail::fmt(worst_cond));
    add("dynamics tangent to D (1e-9)", worst_tan <= 1e-9,
        detail::fmt(worst_tan));
  }

  // Conservation along one trajectory.
  {
    ode::OdeOptions opts;
    opts.tol = 1e-10;
    const ode::Trajectory traj =
        ode::integrate(fix.system, fix.start, fix.t_final, opts);
    const auto& sys = fix.system;
    std::vector<std::pair<std::string, ode::Observable>> obs;
    obs.emplace_back("energy", [&sys](const mech::MPoint& m) {
      return mech::hamiltonian_m(sys, m);
    });
    for (const auto& o : fix.observables)
      if (o.conserved_expected) obs.emplace_back(o.name, o.fn);
    const auto drifts = ode::conservation_report(traj, obs);
    for (const auto& [label, drift] : drifts)
      add("drift of " + label + " <= 1e-8", drift <= 1e-8,
          detail::fmt(drift));
  }

  // Discovery pipeline per complement choice.
  for (const auto& variant : fix.w_variants) {
    const auto sys = fix.with_w_variant(variant.name);
    sym::PipelineOptions popts;
    popts.traj_start = fix.start;
    popts.traj_t_final = fix.t_final;
    const auto result =
        sym::analyze_symmetries(sys, fix.action, states, popts);
    add("[" + variant.name + "] vertical symmetry",
        result.vertical_symmetry == variant.vertical_symmetry_expected,
        result.vertical_symmetry ? "true" : "false");
    bool verdicts_ok =
        result.reports.size() == variant.expected_verdicts.size();
    std::string got;
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
      const std::string v = sym::to_string(result.reports[i].verdict);
      got += (i ? "," : "") + v;
      verdicts_ok = verdicts_ok && i < variant.expected_verdicts.size() &&
                    v == variant.expected_verdicts[i];
    }
    add("[" + variant.name + "] pipeline verdicts", verdicts_ok, got);
  }

  // Ball only: body-frame oracle agreement and the contact metric identity.
  if (name == "ball") {
    const systems::BallParams par;
    const auto cmp = ball_oracle_compare(fix, par, fix.start, 5.0);
    add("body-frame oracle K, gamma match <= 1e-6",
        cmp.k_error <= 1e-6 && cmp.gamma_error <= 1e-6,
        detail::fmt(std::max(cmp.k_error, cmp.gamma_error)));
    add("rotation-matrix kinematics match <= 1e-7", cmp.rot_error <= 1e-7,
        detail::fmt(cmp.rot_error));
    add("|K|^2 drift <= 1e-8", cmp.k_norm_drift <= 1e-8,
        detail::fmt(cmp.k_norm_drift));

    double worst_metric = 0.0;
    for (const auto& m : states) {
      const Mat x = fix.system.d_frame(m.q);
      const Mat kappa = fix.system.metric(m.q);
      const Vec gamma = systems::ball::gamma_of(m.q);
      const double mr2 = par.mass * par.radius * par.radius;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double lhs = x.col(i).dot(kappa * x.col(j));
          const double rhs = (i == j ? par.inertia[i] : 0.0) +
                             mr2 * ((i == j ? 1.0 : 0.0) - gamma[i] * gamma[j]);
          worst_metric = std::max(worst_metric, std::abs(lhs - rhs));
        }
    }
    add("contact metric identity <= 1e-9", worst_metric <= 1e-9,
        detail::fmt(worst_metric));
  }

  return rows;
}

}  // namespace holomenta::checks
