#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "holomenta/mechanics.hpp"
#include "holomenta/types.hpp"

namespace holomenta::ode {

using Rhs = std::function<Vec(double, const Vec&)>;

struct StepStats {
  std::string method;
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  double dt = 0.0;   // rk4 step
  double tol = 0.0;  // rk45 tolerance
};

struct Solution {
  std::vector<double> times;
  std::vector<Vec> states;
  StepStats stats;
};

struct OdeOptions {
  std::string method = "rk45";
  double dt = 1e-3;          // rk4 fixed step
  double tol = 1e-10;        // rk45 absolute and relative tolerance
  double initial_step = 1e-3;
  double min_step = 1e-12;
  double max_step = 0.25;
  int samples = 201;         // uniform output grid including both endpoints
};

namespace detail {

/// Cubic Hermite interpolation across one accepted step.
inline Vec hermite(double t, double t0, double t1, const Vec& y0,
                   const Vec& f0, const Vec& y1, const Vec& f1) {
  const double dt = t1 - t0;
  const double s = (t - t0) / dt;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * dt * f0 +
         (-2 * s3 + 3 * s2) * y1 + (s3 - s2) * dt * f1;
}

struct SampleSink {
  std::vector<double> grid;
  std::size_t next = 0;
  Solution* out;

  void emit_through(double t0, double t1, const Vec& y0, const Vec& f0,
                    const Vec& y1, const Vec& f1) {
    while (next < grid.size() && grid[next] <= t1 + 1e-14) {
      const double t = grid[next];
      out->times.push_back(t);
      out->states.push_back(t >= t1 ? y1
                                    : hermite(t, t0, t1, y0, f0, y1, f1));
      ++next;
    }
  }
};

inline void check_finite(const Vec& y) {
  if (!y.allFinite()) throw StepFailure("non-finite state during integration");
}

inline Vec rk4_step(const Rhs& f, double t, const Vec& y, double dt,
                    long& evals) {
  const Vec k1 = f(t, y);
  const Vec k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1);
  const Vec k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2);
  const Vec k4 = f(t + dt, y + dt * k3);
  evals += 4;
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace detail

inline Solution solve_rk4(const Rhs& f, double t0, const Vec& y0,
                          double t_final, const OdeOptions& opts) {
  if (opts.samples < 2) throw Error("need at least two output samples");
  if (!(opts.dt > 0.0)) throw Error("rk4 requires a positive step");
  Solution sol;
  sol.stats.method = "rk4";
  detail::SampleSink sink;
  sink.out = &sol;
  for (int i = 0; i < opts.samples; ++i)
    sink.grid.push_back(t0 + (t_final - t0) * i / (opts.samples - 1));

  // The requested step is rounded to an exact divisor of the interval.
  const long n_steps =
      std::max<long>(1, std::lround((t_final - t0) / opts.dt));
  const double dt = (t_final - t0) / static_cast<double>(n_steps);
  sol.stats.dt = dt;
  double t = t0;
  Vec y = y0;
  Vec fy = f(t, y);
  ++sol.stats.rhs_evals;
  for (long k = 0; k < n_steps; ++k) {
    const double t1 = (k + 1 == n_steps) ? t_final : t0 + (k + 1) * dt;
    Vec y1 = detail::rk4_step(f, t, y, t1 - t, sol.stats.rhs_evals);
    detail::check_finite(y1);
    Vec fy1 = f(t1, y1);
    ++sol.stats.rhs_evals;
    sink.emit_through(t, t1, y, fy, y1, fy1);
    t = t1;
    y = std::move(y1);
    fy = std::move(fy1);
    ++sol.stats.accepted;
  }
  return sol;
}

// Dormand-Prince 5(4) coefficients.
namespace dopri {
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                        c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                        a53 = 64448.0 / 6561, a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                        a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                        a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
inline constexpr double e1 = 35.0 / 384 - 5179.0 / 57600,
                        e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640,
                        e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
}  // namespace dopri

inline Solution solve_rk45(const Rhs& f, double t0, const Vec& y0,
                           double t_final, const OdeOptions& opts) {
  if (opts.samples < 2) throw Error("need at least two output samples");
  Solution sol;
  sol.stats.method = "rk45";
  sol.stats.tol = opts.tol;
  detail::SampleSink sink;
  sink.out = &sol;
  for (int i = 0; i < opts.samples; ++i)
    sink.grid.push_back(t0 + (t_final - t0) * i / (opts.samples - 1));

  double t = t0;
  Vec y = y0;
  Vec k1 = f(t, y);
  ++sol.stats.rhs_evals;
  double dt = std::min(opts.initial_step, t_final - t0);
  const double atol = opts.tol, rtol = opts.tol;
  // The cubic Hermite interpolant is two orders below the step formula, so
  // accepted steps must not outrun the output grid for the dense samples to
  // stay at tolerance.
  double max_step = opts.max_step;
  if (opts.samples > 2)
    max_step = std::min(
        max_step, 0.25 * (t_final - t0) / static_cast<double>(opts.samples - 1));

  while (t < t_final) {
    dt = std::min({dt, max_step, t_final - t});
    if (dt < opts.min_step)
      throw StepFailure("rk45 step size underflow at t = " + std::to_string(t));

    using namespace dopri;
    const Vec k2 = f(t + c2 * dt, y + dt * (a21 * k1));
    const Vec k3 = f(t + c3 * dt, y + dt * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * dt, y + dt * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 =
        f(t + c5 * dt, y + dt * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(t + dt, y + dt * (a61 * k1 + a62 * k2 + a63 * k3 +
                                       a64 * k4 + a65 * k5));
    Vec y1 = y + dt * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = f(t + dt, y1);  // FSAL
    sol.stats.rhs_evals += 6;

    const Vec err = dt * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 +
                          e7 * k7);
    double norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc =
          atol + rtol * std::max(std::abs(y[i]), std::abs(y1[i]));
      norm += (err[i] / sc) * (err[i] / sc);
    }
    norm = std::sqrt(norm / static_cast<double>(y.size()));

    if (norm <= 1.0) {
      detail::check_finite(y1);
      sink.emit_through(t, t + dt, y, k1, y1, k7);
      t += dt;
      y = std::move(y1);
      k1 = k7;
      ++sol.stats.accepted;
    } else {
      ++sol.stats.rejected;
    }
    const double factor =
        (norm == 0.0) ? 5.0
                      : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    dt *= factor;
  }
  // Endpoint sample can be left behind by roundoff in the grid comparison.
  while (sink.next < sink.grid.size()) {
    sol.times.push_back(sink.grid[sink.next++]);
    sol.states.push_back(y);
  }
  return sol;
}

inline Solution solve(const Rhs& f, double t0, const Vec& y0, double t_final,
                      const OdeOptions& opts) {
  if (opts.method == "rk4") return solve_rk4(f, t0, y0, t_final, opts);
  if (opts.method == "rk45") return solve_rk45(f, t0, y0, t_final, opts);
  throw Error("unknown integrator '" + opts.method + "'");
}

// --- trajectories of the nonholonomic dynamics -----------------------------

struct Trajectory {
  std::vector<double> times;
  std::vector<mech::MPoint> states;
  StepStats stats;
};

inline Rhs nonholonomic_rhs(const mech::MechanicalSystem& sys) {
  return [&sys](double, const Vec& z) -> Vec {
    mech::MPoint m{z.head(sys.n), z.tail(sys.r)};
    const mech::CTangent x = mech::nonholonomic_vector_field(sys, m);
    Vec dz(sys.n + sys.r);
    dz << x.qdot, x.vdot;
    return dz;
  };
}

inline Trajectory integrate(const mech::MechanicalSystem& sys,
                            const mech::MPoint& m0, double t_final,
                            const OdeOptions& opts = {}) {
  if (!(t_final > 0.0)) throw Error("t_final must be positive");
  if (!m0.q.allFinite() || !m0.v.allFinite())
    throw Error("initial state must be finite");
  Vec z0(sys.n + sys.r);
  z0 << m0.q, m0.v;
  const Solution sol = solve(nonholonomic_rhs(sys), 0.0, z0, t_final, opts);
  Trajectory traj;
  traj.times = sol.times;
  traj.stats = sol.stats;
  traj.states.reserve(sol.states.size());
  for (const Vec& z : sol.states)
    traj.states.push_back({z.head(sys.n), z.tail(sys.r)});
  return traj;
}

using Observable = std::function<double(const mech::MPoint&)>;

/// drift(f) = max_t |f(m(t)) - f(m(0))| / max(1, |f(m(0))|).
inline std::map<std::string, double> conservation_report(
    const Trajectory& traj,
    const std::vector<std::pair<std::string, Observable>>& observables) {
  if (traj.states.empty()) throw Error("conservation_report: empty trajectory");
  std::map<std::string, double> drifts;
  for (const auto& [name, f] : observables) {
    const double f0 = f(traj.states.front());
    double worst = 0.0;
    for (const auto& m : traj.states)
      worst = std::max(worst, std::abs(f(m) - f0));
    drifts[name] = worst / std::max(1.0, std::abs(f0));
  }
  return drifts;
}

}  // namespace holomenta::ode
