#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "holomenta/checks.hpp"
#include "holomenta/symmetry.hpp"
#include "holomenta/systems.hpp"

using namespace holomenta;
using mech::MPoint;

namespace {

Vec unit(int s, int a) {
  Vec e = Vec::Zero(s);
  e[a] = 1.0;
  return e;
}

/// Constant eta completing the g_W fiber at q to a basis, smallest index
/// first (the same completion the pipeline uses).
Vec first_completion(const mech::MechanicalSystem& sys,
                     const sym::LieAlgebraAction& act, const Vec& q) {
  const auto split = sym::algebra_splitting(sys, act, q);
  const Mat gw = geom::orthonormalize(split.gw_basis);
  for (int a = 0; a < act.s; ++a) {
    Mat trial(act.s, gw.cols() + 1);
    trial << gw, unit(act.s, a);
    if (geom::rank_of(trial) == static_cast<int>(trial.cols()))
      return unit(act.s, a);
  }
  FAIL("no completion found");
  return Vec::Zero(act.s);
}

}  // namespace

TEST_CASE("dimension assumption") {
  const auto particle = systems::builtin("particle");
  const auto disk = systems::builtin("disk");
  CHECK(sym::dimension_assumption(disk.system, disk.action,
                                  Vec{{0.1, -0.4, 0.3, 0.9}}));
  CHECK(sym::dimension_assumption(particle.system, particle.action,
                                  Vec{{0.0, 1.0, 0.0}}));
  SECTION("empty action fails when D is proper") {
    sym::LieAlgebraAction none;
    none.s = 0;
    CHECK_FALSE(sym::dimension_assumption(particle.system, none,
                                          Vec{{0.0, 1.0, 0.0}}));
  }
}

TEST_CASE("algebra splitting") {
  const auto fix = systems::builtin("particle");
  SECTION("particle with the y-dependent complement at y = 1") {
    const auto sys = fix.with_w_variant("wpaper");
    const auto split =
        sym::algebra_splitting(sys, fix.action, Vec{{0.0, 1.0, 0.0}});
    REQUIRE(split.gs_basis.cols() == 1);
    REQUIRE(split.gw_basis.cols() == 1);
    // g_S = span{(1, 1)}, g_W = span{(1 - sqrt 2, 1)} as spans.
    Vec gs = split.gs_basis.col(0);
    CHECK(std::abs(gs[0] - gs[1]) < 1e-9 * gs.norm());
    Vec gw = split.gw_basis.col(0);
    CHECK(gw[0] / gw[1] == Catch::Approx(1.0 - std::sqrt(2.0)).margin(1e-9));
  }
  SECTION("disk g_W is spanned by the translations") {
    const auto disk = systems::builtin("disk");
    const auto split = sym::algebra_splitting(disk.system, disk.action,
                                              Vec{{0.3, -0.2, 0.1, 0.7}});
    REQUIRE(split.gw_basis.cols() == 2);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(split.gw_basis(2, j)) < 1e-10);
      CHECK(std::abs(split.gw_basis(3, j)) < 1e-10);
    }
  }
  SECTION("rank g_S equals rank S at random states") {
    for (const auto& name : {"particle", "disk", "ball"}) {
      const auto f = systems::builtin(name);
      for (const auto& m : systems::sample_states(f, 15, 41)) {
        const auto split = sym::algebra_splitting(f.system, f.action, m.q);
        const auto s_space = geom::subspace_intersection(
            mech::d_basis_at(f.system, m.q),
            geom::SubspaceBasis::from_columns(
                sym::generators_at(f.action, m.q)));
        CHECK(static_cast<int>(split.gs_basis.cols()) == s_space.count());
        CHECK(static_cast<int>(split.gs_basis.cols()) == f.expected_rank_s);
      }
    }
  }
}

TEST_CASE("project_g_s") {
  const auto fix = systems::builtin("particle");
  const auto wpaper = fix.with_w_variant("wpaper");
  const Vec q{{0.0, 1.0, 0.0}};

  SECTION("the printed projection at y = 1") {
    const Vec p = sym::project_g_s(wpaper, fix.action, q, Vec{{1.0, 0.0}});
    const double c = 1.0 / std::sqrt(2.0);  // (1+y^2)^(-1/2) on (1, y)
    CHECK(p[0] == Catch::Approx(c).margin(1e-12));
    CHECK(p[1] == Catch::Approx(c).margin(1e-12));
  }
  SECTION("elements of g_S are fixed, g_W is the kernel") {
    const auto split = sym::algebra_splitting(wpaper, fix.action, q);
    const Vec in_gs = split.gs_basis.col(0);
    CHECK((sym::project_g_s(wpaper, fix.action, q, in_gs) - in_gs).norm() <
          1e-10);
    const Vec in_gw = split.gw_basis.col(0);
    CHECK(sym::project_g_s(wpaper, fix.action, q, in_gw).norm() < 1e-10);
  }
  SECTION("idempotent and compatible with P_D at random states") {
    for (const auto& name : {"particle", "disk", "ball"}) {
      const auto f = systems::builtin(name);
      for (const auto& m : systems::sample_states(f, 10, 43)) {
        const Vec eta = first_completion(f.system, f.action, m.q);
        const Vec p = sym::project_g_s(f.system, f.action, m.q, eta);
        const Vec pp = sym::project_g_s(f.system, f.action, m.q, p);
        CHECK((pp - p).norm() < 1e-9);
        const Mat gens = sym::generators_at(f.action, m.q);
        const Vec lhs = gens * p;
        const Vec rhs = geom::project_along(gens * eta,
                                            mech::d_basis_at(f.system, m.q),
                                            mech::w_basis_at(f.system, m.q));
        CHECK((lhs - rhs).norm() < 1e-9);
      }
    }
  }
}

TEST_CASE("vertical symmetry condition") {
  const auto particle = systems::builtin("particle");
  const auto disk = systems::builtin("disk");
  std::vector<Vec> qs;
  for (const auto& m : systems::sample_states(particle, 10, 47))
    qs.push_back(m.q);
  std::vector<Vec> disk_qs;
  for (const auto& m : systems::sample_states(disk, 10, 47))
    disk_qs.push_back(m.q);

  CHECK(sym::vertical_symmetry_condition(disk.system, disk.action, disk_qs));
  CHECK(sym::vertical_symmetry_condition(particle.with_w_variant("wz"),
                                         particle.action, qs));
  CHECK_FALSE(sym::vertical_symmetry_condition(
      particle.with_w_variant("wpaper"), particle.action, qs));
  CHECK_THROWS_AS(
      sym::vertical_symmetry_condition(disk.system, disk.action, {disk_qs[0]}),
      Error);
}

TEST_CASE("momentum pairing") {
  SECTION("zero momenta pair to zero") {
    const auto fix = systems::builtin("particle");
    const MPoint m{Vec{{0.3, 0.4, 0.5}}, Vec{{0.0, 0.0}}};
    CHECK(sym::momentum_pairing(fix.system, fix.action, m,
                                Vec{{1.0, -2.0}}) == 0.0);
  }
  SECTION("disk rolling section pairs to (R^2/I + 1) p_phi") {
    const auto disk = systems::builtin("disk");
    const MPoint m{Vec{{0.1, 0.2, 0.3, 0.6}}, Vec{{2.0, 3.0}}};
    // Section coefficients of P_gS(phi-shift) at q.
    const Vec xi =
        sym::project_g_s(disk.system, disk.action, m.q, Vec{{0, 0, 0, 1}});
    CHECK(sym::momentum_pairing(disk.system, disk.action, m, xi) ==
          Catch::Approx(4.0).margin(1e-10));
  }
  SECTION("ball pairing equals <gamma, K>") {
    const auto ball = systems::builtin("ball");
    for (const auto& m : systems::sample_states(ball, 10, 53)) {
      const Vec xi = sym::project_g_s(ball.system, ball.action, m.q,
                                      Vec{{1.0, 0.0, 0.0}});
      const double lhs = sym::momentum_pairing(ball.system, ball.action, m, xi);
      const Vec k = checks::ball_k_vector(ball.system, m);
      const double rhs = systems::ball::gamma_of(m.q).dot(k);
      CHECK(lhs == Catch::Approx(rhs).margin(1e-9));
    }
  }
}

TEST_CASE("the W-valued one-form a_w") {
  SECTION("tangents inside D are annihilated") {
    const auto fix = systems::builtin("particle");
    const Vec q{{0.0, 1.0, 0.0}};
    CHECK(sym::a_w(fix.system, fix.action, q, Vec{{1.0, 0.0, 1.0}}).norm() <
          1e-12);
  }
  SECTION("disk translation direction") {
    const auto disk = systems::builtin("disk");
    const Vec zeta = sym::a_w(disk.system, disk.action,
                              Vec{{0.5, -0.1, 0.2, 0.9}},
                              Vec{{1.0, 0.0, 0.0, 0.0}});
    CHECK((zeta - Vec{{1.0, 0.0, 0.0, 0.0}}).norm() < 1e-10);
  }
  SECTION("particle dz direction has coefficients (0, 1)") {
    const auto fix = systems::builtin("particle");
    const Vec zeta = sym::a_w(fix.system, fix.action, Vec{{0.0, 1.0, 0.0}},
                              Vec{{0.0, 0.0, 1.0}});
    CHECK((zeta - Vec{{0.0, 1.0}}).norm() < 1e-12);
  }
}

TEST_CASE("curvature pairing <J, K_W>") {
  const auto fix = systems::builtin("particle");
  SECTION("antisymmetry: equal arguments vanish") {
    const MPoint m{Vec{{0.2, 0.8, -0.3}}, Vec{{0.7, 1.1}}};
    const auto x = mech::nonholonomic_vector_field(fix.system, m);
    CHECK(sym::jk_pairing(fix.system, fix.action, m, x, x) ==
          Catch::Approx(0.0).margin(1e-10));
  }
  SECTION("particle with W = span{dz}: value y p_x on the frame pair") {
    const MPoint m{Vec{{0.0, 1.0, 0.0}}, Vec{{0.7, 1.0}}};  // p_x = 1
    const Mat d = fix.system.d_frame(m.q);
    // Base directions P_D(dx) = dx + y dz and P_D(dy) = dy.
    mech::CTangent u{d.col(1), Vec::Zero(2)};
    mech::CTangent w{d.col(0), Vec::Zero(2)};
    const double val = sym::jk_pairing(fix.system, fix.action, m, u, w);
    CHECK(val == Catch::Approx(1.0).margin(1e-8));
  }
  SECTION("disk pairing vanishes identically on M") {
    const auto disk = systems::builtin("disk");
    for (const auto& m : systems::sample_states(disk, 15, 59)) {
      const auto xnh = mech::nonholonomic_vector_field(disk.system, m);
      const Mat d = disk.system.d_frame(m.q);
      mech::CTangent xi{d.col(0), Vec::Zero(2)};
      CHECK(sym::jk_pairing(disk.system, disk.action, m, xnh, xi) ==
            Catch::Approx(0.0).margin(1e-10));
    }
  }
}

TEST_CASE("M-cotangent lift") {
  SECTION("unconstrained lift of a constant translation is the translation") {
    mech::MechanicalSystem sys;
    sys.n = 2;
    sys.r = 2;
    sys.coord_names = {"x", "y"};
    sys.metric = [](const Vec&) { return Mat::Identity(2, 2); };
    sys.potential = [](const Vec&) { return 0.0; };
    sys.d_frame = [](const Vec&) { return Mat::Identity(2, 2); };
    sys.w_frame = [](const Vec&) { return Mat::Zero(2, 0); };
    sym::LieAlgebraAction act;
    act.s = 1;
    act.generators = [](const Vec&) {
      Mat e(2, 1);
      e << 1.0, 0.0;
      return e;
    };
    const MPoint m{Vec{{0.4, -0.9}}, Vec{{0.3, 0.8}}};
    const auto lift = sym::m_cotangent_lift(
        sys, act, m, [](const Vec&) { return Vec{{1.0}}; });
    CHECK((lift.qdot - Vec{{1.0, 0.0}}).norm() < 1e-10);
    CHECK(lift.vdot.norm() < 1e-10);
  }
  SECTION("base projection recovers the generator on every builtin") {
    for (const auto& name : {"particle", "disk", "ball"}) {
      const auto fix = systems::builtin(name);
      for (const auto& m : systems::sample_states(fix, 10, 61)) {
        const Vec eta = first_completion(fix.system, fix.action, m.q);
        sym::Section xi = [&fix, eta](const Vec& q) {
          return sym::project_g_s(fix.system, fix.action, q, eta);
        };
        const auto lift = sym::m_cotangent_lift(fix.system, fix.action, m, xi);
        const Vec xi_q = sym::generators_at(fix.action, m.q) * xi(m.q);
        CHECK((lift.qdot - xi_q).norm() <=
              1e-8 * std::max(1.0, xi_q.norm()));
      }
    }
  }
  SECTION("disk lifts leave the Hamiltonian flat") {
    const auto disk = systems::builtin("disk");
    const PhaseFunction h = [&disk](const Vec& q, const Vec& v) {
      return mech::hamiltonian_m(disk.system, {q, v});
    };
    for (const auto& m : systems::sample_states(disk, 10, 67)) {
      for (int a : {2, 3}) {
        sym::Section xi = [&disk, a](const Vec& q) {
          return sym::project_g_s(disk.system, disk.action, q,
                                  unit(4, a));
        };
        const auto lift = sym::m_cotangent_lift(disk.system, disk.action, m, xi);
        CHECK(mech::derivative_along(disk.system, m, h, lift) ==
              Catch::Approx(0.0).margin(1e-8));
      }
    }
  }
}

TEST_CASE("action invariance residuals are tiny on the builtins") {
  for (const auto& name : {"particle", "disk", "ball"}) {
    const auto fix = systems::builtin(name);
    for (const auto& m : systems::sample_states(fix, 5, 71))
      CHECK(sym::invariance_residual(fix.system, fix.action, m.q) <= 1e-6);
  }
}

TEST_CASE("structural identities relating lifts, momenta and the dynamics") {
  // Two cross-checks per state: the product-rule decomposition of the lift
  //   lift(xi) = xi_M + sum_a <J, eta_a> X_{f_a},   xi = f_a eta_a,
  // and the derivative identity
  //   lift(xi)(H_M) + sum_a <J, eta_a> X_nh(f_a) = 0.
  const std::vector<std::pair<std::string, std::string>> cases{
      {"particle", "wz"},
      {"particle", "wpaper"},
      {"disk", "translations"},
      {"ball", "translations"}};
  for (const auto& spec : cases) {
    const auto fix = systems::builtin(spec.first);
    const auto sys = fix.with_w_variant(spec.second);
    CAPTURE(spec.first, spec.second);
    for (const auto& m : systems::sample_states(fix, 8, 73)) {
      const Vec eta = first_completion(sys, fix.action, m.q);
      // A scalar modulation keeps the section coefficients genuinely
      // position dependent.
      sym::Section xi = [&sys, &fix, eta](const Vec& q) {
        const double bump = 1.0 + 0.3 * std::sin(q[0]);
        return Vec(bump * sym::project_g_s(sys, fix.action, q, eta));
      };
      const auto lift = sym::m_cotangent_lift(sys, fix.action, m, xi);

      Vec route_q = sym::generators_at(fix.action, m.q) * xi(m.q);
      Vec route_v = Vec::Zero(sys.r);
      double deriv_sum = 0.0;
      const auto xnh = mech::nonholonomic_vector_field(sys, m);
      for (int a = 0; a < fix.action.s; ++a) {
        const double j_a =
            sym::momentum_pairing(sys, fix.action, m, unit(fix.action.s, a));
        const PhaseFunction fa = [&xi, a](const Vec& q, const Vec&) {
          return xi(q)[a];
        };
        const auto xfa = mech::ham_vector_field(sys, m, fa);
        route_q += j_a * xfa.qdot;
        route_v += j_a * xfa.vdot;
        deriv_sum += j_a * mech::derivative_along(sys, m, fa, xnh);
      }
      CHECK((route_q - lift.qdot).norm() < 1e-6);
      CHECK((route_v - lift.vdot).norm() < 1e-6);

      const PhaseFunction h = [&sys](const Vec& q, const Vec& v) {
        return mech::hamiltonian_m(sys, {q, v});
      };
      const double lift_h = mech::derivative_along(sys, m, h, lift);
      CHECK(lift_h + deriv_sum == Catch::Approx(0.0).margin(1e-6));
    }
  }
}

TEST_CASE("the momentum-shifted two-form stays nondegenerate") {
  for (const auto& name : {"particle", "disk", "ball"}) {
    const auto fix = systems::builtin(name);
    for (const auto& m : systems::sample_states(fix, 25, 79)) {
      Mat omega = mech::constrained_two_form(fix.system, m);
      const Mat d = fix.system.d_frame(m.q);
      for (int a = 0; a < fix.system.r; ++a)
        for (int b = a + 1; b < fix.system.r; ++b) {
          mech::CTangent u{d.col(a), Vec::Zero(fix.system.r)};
          mech::CTangent w{d.col(b), Vec::Zero(fix.system.r)};
          const double jk = sym::jk_pairing(fix.system, fix.action, m, u, w);
          omega(a, b) += jk;
          omega(b, a) -= jk;
        }
      CHECK(geom::condition_number(omega) < 1e8);
    }
  }
}

TEST_CASE("discovery pipeline on the builtins") {
  sym::PipelineOptions popts;

  SECTION("disk: two certified momenta matching the closed forms") {
    const auto fix = systems::builtin("disk");
    popts.traj_start = fix.start;
    const auto samples = systems::sample_states(fix, 30, 0);
    const auto result =
        sym::analyze_symmetries(fix.system, fix.action, samples, popts);
    CHECK(result.rank_s == 2);
    CHECK(result.vertical_symmetry);
    REQUIRE(result.reports.size() == 2);
    for (const auto& r : result.reports)
      CHECK(r.verdict == sym::Verdict::certified);
    // Candidate values against (R^2/I + 1) p_phi and p_psi, pointwise.
    for (const auto& m : systems::sample_states(fix, 25, 5)) {
      const Vec p = mech::momenta(fix.system, m);
      const double j1 = 2.0 * p[2], j2 = p[3];
      const double got0 = sym::gauge_momentum_value(fix.system, fix.action, m,
                                                    result.reports[0].eta);
      const double got1 = sym::gauge_momentum_value(fix.system, fix.action, m,
                                                    result.reports[1].eta);
      const double scale = std::max({1.0, std::abs(j1), std::abs(j2)});
      const bool direct = std::abs(got0 - j2) + std::abs(got1 - j1) <
                          1e-10 * scale;
      const bool swapped = std::abs(got0 - j1) + std::abs(got1 - j2) <
                           1e-10 * scale;
      CHECK((direct || swapped));
    }
  }

  SECTION("ball: one certified momentum equal to <gamma, K>") {
    const auto fix = systems::builtin("ball");
    popts.traj_start = fix.start;
    const auto samples = systems::sample_states(fix, 30, 0);
    const auto result =
        sym::analyze_symmetries(fix.system, fix.action, samples, popts);
    CHECK(result.rank_s == 1);
    REQUIRE(result.reports.size() == 1);
    CHECK(result.reports[0].verdict == sym::Verdict::certified);
    for (const auto& m : systems::sample_states(fix, 20, 5)) {
      const double got = sym::gauge_momentum_value(fix.system, fix.action, m,
                                                   result.reports[0].eta);
      const double want =
          systems::ball::gamma_of(m.q).dot(checks::ball_k_vector(fix.system, m));
      CHECK(got == Catch::Approx(want).epsilon(1e-10));
    }
  }

  SECTION("particle: obstruction with the constant complement") {
    const auto fix = systems::builtin("particle");
    popts.traj_start = fix.start;
    const auto samples = systems::sample_states(fix, 30, 0);
    const auto result = sym::analyze_symmetries(fix.with_w_variant("wz"),
                                                fix.action, samples, popts);
    CHECK(result.rank_s == 1);
    CHECK(result.vertical_symmetry);
    REQUIRE(result.reports.size() == 1);
    CHECK(result.reports[0].verdict == sym::Verdict::residual_failed);
    CHECK(result.reports[0].jk_residual_max > 1e-3);
  }

  SECTION("particle: empirical conservation with the curved complement") {
    const auto fix = systems::builtin("particle");
    popts.traj_start = fix.start;
    const auto samples = systems::sample_states(fix, 30, 0);
    const auto result = sym::analyze_symmetries(fix.with_w_variant("wpaper"),
                                                fix.action, samples, popts);
    CHECK_FALSE(result.vertical_symmetry);
    REQUIRE(result.reports.size() == 1);
    CHECK(result.reports[0].verdict == sym::Verdict::empirical_only);
    CHECK(result.reports[0].drift <= 1e-8);
  }
}
