#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "holomenta/integrate.hpp"
#include "holomenta/mechanics.hpp"
#include "holomenta/rng.hpp"
#include "holomenta/symmetry.hpp"
#include "holomenta/types.hpp"

namespace holomenta::systems {

struct NamedObservable {
  std::string name;
  ode::Observable fn;
  bool conserved_expected = true;
};

struct WVariant {
  std::string name;
  MatrixField w_frame;
  bool vertical_symmetry_expected = true;
  std::vector<std::string> expected_verdicts;  // pipeline outcome, in order
};

/// A builtin example system bundled with its symmetry action, the available
/// vertical-complement choices, closed-form observables, expected pipeline
/// outcomes and a sampling box for randomized checks.
struct BuiltinFixture {
  std::string name;
  mech::MechanicalSystem system;  // carries w_variants[0]
  sym::LieAlgebraAction action;
  std::vector<WVariant> w_variants;
  int expected_rank_s = 0;
  Vec q_lo, q_hi, v_lo, v_hi;
  mech::MPoint start;
  double t_final = 10.0;
  std::vector<NamedObservable> observables;

  mech::MechanicalSystem with_w_variant(const std::string& variant) const {
    for (const auto& w : w_variants) {
      if (w.name == variant) {
        mech::MechanicalSystem out = system;
        out.w_frame = w.w_frame;
        return out;
      }
    }
    throw Error("unknown W variant '" + variant + "' for " + name);
  }

  const WVariant& variant_info(const std::string& variant) const {
    for (const auto& w : w_variants)
      if (w.name == variant) return w;
    throw Error("unknown W variant '" + variant + "' for " + name);
  }
};

inline std::vector<mech::MPoint> sample_states(const BuiltinFixture& fix,
                                               int count,
                                               std::uint64_t seed) {
  SampleRng rng(seed);
  std::vector<mech::MPoint> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec q = rng.uniform_vec(fix.q_lo, fix.q_hi);
    Vec v = rng.uniform_vec(fix.v_lo, fix.v_hi);
    out.push_back({std::move(q), std::move(v)});
  }
  return out;
}

// --- nonholonomic particle --------------------------------------------------
// Chart (x, y, z), flat metric, constraint zdot = y xdot. The symmetry is
// the translation action along x and z. Two complements are bundled: the
// constant one span{dz} (vertical symmetry holds, but the curvature pairing
// obstructs the candidate) and the y-dependent one (vertical symmetry fails
// while p_x sqrt(1+y^2) is an honest first integral).

inline BuiltinFixture make_particle() {
  BuiltinFixture fix;
  fix.name = "particle";

  mech::MechanicalSystem sys;
  sys.n = 3;
  sys.r = 2;
  sys.coord_names = {"x", "y", "z"};
  sys.metric = [](const Vec&) { return Mat::Identity(3, 3); };
  sys.potential = [](const Vec&) { return 0.0; };
  sys.d_frame = [](const Vec& q) {
    Mat d(3, 2);
    d << 0, 1,
         1, 0,
         0, q[1];
    return d;
  };

  WVariant wz;
  wz.name = "wz";
  wz.vertical_symmetry_expected = true;
  wz.expected_verdicts = {"residual_failed"};
  wz.w_frame = [](const Vec&) {
    Mat w(3, 1);
    w << 0, 0, 1;
    return w;
  };
  WVariant wpaper;
  wpaper.name = "wpaper";
  wpaper.vertical_symmetry_expected = false;
  wpaper.expected_verdicts = {"empirical_only"};
  // Span of (1 - sqrt(1+y^2)) dx + y dz, written with the generator scaled
  // by 1/y so it stays nonzero through y = 0 (where the fiber is span{dz}).
  wpaper.w_frame = [](const Vec& q) {
    const double y = q[1];
    Mat w(3, 1);
    w << -y / (1.0 + std::sqrt(1.0 + y * y)), 0.0, 1.0;
    return w;
  };
  fix.w_variants = {wz, wpaper};
  sys.w_frame = wz.w_frame;
  fix.system = sys;

  fix.action.s = 2;
  fix.action.generators = [](const Vec&) {
    Mat e(3, 2);
    e << 1, 0,
         0, 0,
         0, 1;
    return e;
  };

  fix.expected_rank_s = 1;
  fix.q_lo = Vec{{-2.0, -1.5, -2.0}};
  fix.q_hi = Vec{{2.0, 1.5, 2.0}};
  fix.v_lo = Vec{{-1.5, -1.5}};
  fix.v_hi = Vec{{1.5, 1.5}};
  fix.start = {Vec{{0.0, 0.0, 0.0}}, Vec{{1.0, 1.0}}};

  mech::MechanicalSystem sys_copy = sys;
  fix.observables.push_back(
      {"px_sqrt1py2",
       [sys_copy](const mech::MPoint& m) {
         const Vec p = mech::momenta(sys_copy, m);
         return p[0] * std::sqrt(1.0 + m.q[1] * m.q[1]);
       },
       true});
  fix.observables.push_back(
      {"p_y",
       [sys_copy](const mech::MPoint& m) {
         return mech::momenta(sys_copy, m)[1];
       },
       true});
  fix.observables.push_back(
      {"p_x",
       [sys_copy](const mech::MPoint& m) {
         return mech::momenta(sys_copy, m)[0];
       },
       false});
  return fix;
}

// --- vertical rolling disk ---------------------------------------------------
// Chart (x, y, phi, psi): contact point, rolling angle, heading. Rolling
// without sliding couples (xdot, ydot) to phidot through the heading. The
// symmetry group is planar motions plus the rolling-phase shift; the
// rotation generator advances the heading psi, as required for the
// constraints to be preserved.

struct DiskParams {
  double inertia_roll = 1.0;   // I, about the rolling axis
  double inertia_spin = 1.0;   // J, about the vertical
  double radius = 1.0;         // R
};

inline BuiltinFixture make_disk(const DiskParams& par = {}) {
  BuiltinFixture fix;
  fix.name = "disk";
  const double ii = par.inertia_roll, jj = par.inertia_spin, rr = par.radius;

  mech::MechanicalSystem sys;
  sys.n = 4;
  sys.r = 2;
  sys.coord_names = {"x", "y", "phi", "psi"};
  sys.metric = [ii, jj](const Vec&) {
    Vec diag(4);
    diag << 1.0, 1.0, ii, jj;
    return Mat(diag.asDiagonal());
  };
  sys.potential = [](const Vec&) { return 0.0; };
  sys.d_frame = [rr](const Vec& q) {
    const double c = std::cos(q[3]), s = std::sin(q[3]);
    Mat d(4, 2);
    d << rr * c, 0,
         rr * s, 0,
         1,      0,
         0,      1;
    return d;
  };

  WVariant w;
  w.name = "translations";
  w.vertical_symmetry_expected = true;
  w.expected_verdicts = {"certified", "certified"};
  w.w_frame = [](const Vec&) {
    Mat m(4, 2);
    m << 1, 0,
         0, 1,
         0, 0,
         0, 0;
    return m;
  };
  fix.w_variants = {w};
  sys.w_frame = w.w_frame;
  fix.system = sys;

  fix.action.s = 4;
  fix.action.generators = [](const Vec& q) {
    Mat e(4, 4);
    e << 1, 0, -q[1], 0,
         0, 1,  q[0], 0,
         0, 0,  0,    1,
         0, 0,  1,    0;
    return e;
  };

  fix.expected_rank_s = 2;
  const double pi = std::acos(-1.0);
  fix.q_lo = Vec{{-2.0, -2.0, -pi, -pi}};
  fix.q_hi = Vec{{2.0, 2.0, pi, pi}};
  fix.v_lo = Vec{{-1.5, -1.5}};
  fix.v_hi = Vec{{1.5, 1.5}};
  fix.start = {Vec{{0.0, 0.0, 0.0, 0.5}}, Vec{{1.0, 0.7}}};

  mech::MechanicalSystem sys_copy = sys;
  fix.observables.push_back(
      {"J1",
       [sys_copy, ii, rr](const mech::MPoint& m) {
         const Vec p = mech::momenta(sys_copy, m);
         return (rr * rr / ii + 1.0) * p[2];
       },
       true});
  fix.observables.push_back(
      {"J2",
       [sys_copy](const mech::MPoint& m) {
         return mech::momenta(sys_copy, m)[3];
       },
       true});
  return fix;
}

// --- inhomogeneous ball rolling on a plane ------------------------------------
// Chart: z-x-z Euler angles (phi, theta, psi) for the orientation plus the
// contact point (x, y). Quasi-velocities are the body angular velocity
// components; rolling couples the contact-point velocity to them through
// the first two rows of the rotation matrix.

struct BallParams {
  Vec inertia = Vec{{2.0, 3.0, 4.0}};  // principal moments
  double mass = 1.0;
  double radius = 1.0;
};

namespace ball {

/// Rotation matrix of the z-x-z Euler angles (phi, theta, psi); its third
/// row is the vertical axis seen from the body, gamma = (st sp, st cp, ct).
inline Mat rotation(double phi, double theta, double psi) {
  const double cf = std::cos(phi), sf = std::sin(phi);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Mat g(3, 3);
  g << cf * cp - sf * ct * sp, -cf * sp - sf * ct * cp,  sf * st,
       sf * cp + cf * ct * sp, -sf * sp + cf * ct * cp, -cf * st,
       st * sp,                 st * cp,                 ct;
  return g;
}

/// Body angular velocity as a linear map of the chart angle rates:
/// Omega = kinematics(theta, psi) * (phidot, thetadot, psidot).
inline Mat kinematics(double theta, double psi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Mat b(3, 3);
  b << st * sp, cp, 0,
       st * cp, -sp, 0,
       ct, 0, 1;
  return b;
}

/// Closed-form inverse of the kinematic map (valid away from sin(theta)=0).
inline Mat kinematics_inverse(double theta, double psi) {
  const double ct = std::cos(theta), st = std::sin(theta);
  const double cp = std::cos(psi), sp = std::sin(psi);
  Mat inv(3, 3);
  inv << sp / st, cp / st, 0,
         cp, -sp, 0,
         -ct * sp / st, -ct * cp / st, 1;
  return inv;
}

inline Vec gamma_of(const Vec& q) {
  const double st = std::sin(q[1]);
  return Vec{{st * std::sin(q[2]), st * std::cos(q[2]), std::cos(q[1])}};
}

inline Mat hat(const Vec& w) {
  Mat m(3, 3);
  m << 0, -w[2], w[1],
       w[2], 0, -w[0],
       -w[1], w[0], 0;
  return m;
}

/// Locked inertia of the rolling contact: A(gamma) = I + m r^2 (Id - gamma gamma^T),
/// so the momentum K = A(gamma) Omega.
inline Mat locked_inertia(const BallParams& par, const Vec& gamma) {
  Mat a = Mat(par.inertia.asDiagonal());
  a += par.mass * par.radius * par.radius *
       (Mat::Identity(3, 3) - gamma * gamma.transpose());
  return a;
}

}  // namespace ball

inline BuiltinFixture make_ball(const BallParams& par = {}) {
  BuiltinFixture fix;
  fix.name = "ball";
  const double m = par.mass, r = par.radius;
  const Vec inertia = par.inertia;

  auto d_frame = [m, r](const Vec& q) {
    const Mat g = ball::rotation(q[0], q[1], q[2]);
    const Mat binv = ball::kinematics_inverse(q[1], q[2]);
    Mat d = Mat::Zero(5, 3);
    for (int i = 0; i < 3; ++i) {
      d.block<3, 1>(0, i) = binv.col(i);   // chart rates giving Omega = e_i
      d(3, i) = r * g(1, i);               // xdot = r beta_i
      d(4, i) = -r * g(0, i);              // ydot = -r alpha_i
    }
    return d;
  };

  mech::MechanicalSystem sys;
  sys.n = 5;
  sys.r = 3;
  sys.coord_names = {"phi", "theta", "psi", "x", "y"};
  sys.metric = [m, inertia](const Vec& q) {
    const Mat b = ball::kinematics(q[1], q[2]);
    Mat kappa = Mat::Zero(5, 5);
    kappa.topLeftCorner(3, 3) =
        b.transpose() * Mat(inertia.asDiagonal()) * b;
    kappa(3, 3) = m;
    kappa(4, 4) = m;
    return kappa;
  };
  sys.potential = [](const Vec&) { return 0.0; };
  sys.d_frame = d_frame;

  WVariant w;
  w.name = "translations";
  w.vertical_symmetry_expected = true;
  w.expected_verdicts = {"certified"};
  w.w_frame = [](const Vec&) {
    Mat out = Mat::Zero(5, 2);
    out(3, 0) = 1.0;
    out(4, 1) = 1.0;
    return out;
  };
  fix.w_variants = {w};
  sys.w_frame = w.w_frame;
  fix.system = sys;

  // Generators: rotation about the spatial vertical (which advances phi and
  // swirls the contact point) and the two plane translations.
  fix.action.s = 3;
  fix.action.generators = [](const Vec& q) {
    Mat e = Mat::Zero(5, 3);
    e(0, 0) = 1.0;
    e(3, 0) = -q[4];
    e(4, 0) = q[3];
    e(3, 1) = 1.0;
    e(4, 2) = 1.0;
    return e;
  };

  fix.expected_rank_s = 1;
  const double pi = std::acos(-1.0);
  fix.q_lo = Vec{{-pi, 0.3, -pi, -2.0, -2.0}};
  fix.q_hi = Vec{{pi, pi - 0.3, pi, 2.0, 2.0}};
  fix.v_lo = Vec{{-1.0, -1.0, -1.0}};
  fix.v_hi = Vec{{1.0, 1.0, 1.0}};
  fix.start = {Vec{{0.1, 1.0, 0.3, 0.0, 0.0}}, Vec{{0.2, 0.1, 0.6}}};

  mech::MechanicalSystem sys_copy = sys;
  auto dcopy = d_frame;
  fix.observables.push_back(
      {"gammaK",
       [sys_copy, dcopy](const mech::MPoint& m) {
         const Vec p = mech::momenta(sys_copy, m);
         const Mat x = dcopy(m.q);
         const Vec gamma = ball::gamma_of(m.q);
         double val = 0.0;
         for (int i = 0; i < 3; ++i) val += gamma[i] * p.dot(x.col(i));
         return val;
       },
       true});
  return fix;
}

inline BuiltinFixture builtin(const std::string& name) {
  if (name == "particle") return make_particle();
  if (name == "disk") return make_disk();
  if (name == "ball") return make_ball();
  throw UnknownBuiltin("unknown builtin '" + name + "'");
}

inline bool is_builtin(const std::string& name) {
  return name == "particle" || name == "disk" || name == "ball";
}

}  // namespace holomenta::systems
