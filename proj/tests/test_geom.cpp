#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "holomenta/numeric.hpp"
#include "holomenta/subspace.hpp"

using namespace holomenta;
using geom::SubspaceBasis;

TEST_CASE("jacobian of simple fields") {
  SECTION("rotation field (y, -x)") {
    VectorField f = [](const Vec& q) { return Vec{{q[1], -q[0]}}; };
    const Mat j = numeric::jacobian(f, Vec{{0.3, -1.2}});
    CHECK(j(0, 0) == Catch::Approx(0.0).margin(1e-9));
    CHECK(j(0, 1) == Catch::Approx(1.0).margin(1e-9));
    CHECK(j(1, 0) == Catch::Approx(-1.0).margin(1e-9));
    CHECK(j(1, 1) == Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("constant field") {
    VectorField f = [](const Vec&) { return Vec{{2.0, -7.0}}; };
    CHECK(numeric::jacobian(f, Vec{{1.0, 2.0}}).norm() ==
          Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("(x^2, 0) at x = 3") {
    VectorField f = [](const Vec& q) { return Vec{{q[0] * q[0], 0.0}}; };
    const Mat j = numeric::jacobian(f, Vec{{3.0, 0.5}});
    CHECK(j(0, 0) == Catch::Approx(6.0).margin(1e-6));
    CHECK(j(0, 1) == Catch::Approx(0.0).margin(1e-6));
    CHECK(j(1, 0) == Catch::Approx(0.0).margin(1e-6));
  }
  SECTION("non-finite values at stencil points are reported") {
    VectorField f = [](const Vec& q) {
      return Vec{{std::sqrt(q[0])}};  // NaN on the left stencil points
    };
    CHECK_THROWS_AS(numeric::jacobian(f, Vec{{0.0}}), Error);
  }
}

TEST_CASE("lie_bracket") {
  SECTION("coordinate fields commute") {
    VectorField a = [](const Vec&) { return Vec{{1.0, 0.0, 0.0}}; };
    VectorField b = [](const Vec&) { return Vec{{0.0, 1.0, 0.0}}; };
    CHECK(numeric::lie_bracket(a, b, Vec{{0.1, 0.2, 0.3}}).norm() ==
          Catch::Approx(0.0).margin(1e-10));
  }
  SECTION("rolling frame bracket in chart (x, y, phi, psi)") {
    // A = d/dpsi, B = (R cos psi, R sin psi, 1, 0): [A, B] = dB/dpsi.
    const double rr = 1.0;
    VectorField a = [](const Vec&) { return Vec{{0.0, 0.0, 0.0, 1.0}}; };
    VectorField b = [rr](const Vec& q) {
      return Vec{{rr * std::cos(q[3]), rr * std::sin(q[3]), 1.0, 0.0}};
    };
    const Vec q{{0.4, -0.7, 0.2, 0.0}};  // psi = 0
    const Vec br = numeric::lie_bracket(a, b, q);
    CHECK(br[0] == Catch::Approx(0.0).margin(1e-6));
    CHECK(br[1] == Catch::Approx(1.0).margin(1e-6));
    CHECK(br[2] == Catch::Approx(0.0).margin(1e-6));
    CHECK(br[3] == Catch::Approx(0.0).margin(1e-6));
  }
  SECTION("antisymmetry on smooth fields") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    VectorField a = [](const Vec& q) {
      return Vec{{std::sin(q[1]), q[0] * q[2], std::exp(0.3 * q[0])}};
    };
    VectorField b = [](const Vec& q) {
      return Vec{{q[2] * q[2], std::cos(q[0]), q[1]}};
    };
    for (int i = 0; i < 20; ++i) {
      const Vec q{{u(rng), u(rng), u(rng)}};
      const Vec ab = numeric::lie_bracket(a, b, q);
      const Vec ba = numeric::lie_bracket(b, a, q);
      CHECK((ab + ba).norm() == Catch::Approx(0.0).margin(1e-6));
    }
  }
}

TEST_CASE("subspace_intersection") {
  SECTION("particle D and V meet in one line") {
    Mat d(3, 2);
    d << 0, 1,
         1, 0,
         0, 1;  // span{dy, dx + y dz} at y = 1
    Mat v(3, 2);
    v << 1, 0,
         0, 0,
         0, 1;  // span{dx, dz}
    const auto inter = geom::subspace_intersection(
        SubspaceBasis::from_columns(d), SubspaceBasis::from_columns(v));
    REQUIRE(inter.count() == 1);
    const Vec expected = Vec{{1.0, 0.0, 1.0}} / std::sqrt(2.0);
    CHECK(std::abs(inter.vectors.col(0).dot(expected)) ==
          Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("A intersect A = A") {
    Mat a(4, 2);
    a << 1, 0.5,
         2, -1,
         0, 3,
         1, 1;
    const auto basis = SubspaceBasis::from_columns(a);
    const auto inter = geom::subspace_intersection(basis, basis);
    REQUIRE(inter.count() == 2);
    // Every result vector reconstructs inside A.
    const Mat sol = a.colPivHouseholderQr().solve(inter.vectors);
    CHECK((a * sol - inter.vectors).norm() ==
          Catch::Approx(0.0).margin(1e-9));
  }
  SECTION("full vertical space gives back D") {
    Mat d(4, 2);
    d << 1, 0,
         0, 0,
         0, 0,
         0, 1;
    const auto inter = geom::subspace_intersection(
        SubspaceBasis::from_columns(d),
        SubspaceBasis::from_columns(Mat::Identity(4, 4)));
    CHECK(inter.count() == 2);
  }
  SECTION("empty intersection") {
    Mat a(3, 1), b(3, 1);
    a << 1, 0, 0;
    b << 0, 1, 0;
    CHECK(geom::subspace_intersection(SubspaceBasis::from_columns(a),
                                      SubspaceBasis::from_columns(b))
              .count() == 0);
  }
}

TEST_CASE("decompose") {
  SECTION("hand-solved 3x3 split at y = 1") {
    Mat a(3, 2);
    a << 0, 1,
         1, 0,
         0, 1;
    Mat b(3, 1);
    b << 1.0 - std::sqrt(2.0), 0.0, 1.0;
    const Vec vec{{1.0, 0.0, 0.0}};
    const auto [ca, cb] = geom::decompose(vec, SubspaceBasis::from_columns(a),
                                          SubspaceBasis::from_columns(b));
    CHECK(ca[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(ca[1] == Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
    CHECK(cb[0] == Catch::Approx(-1.0 / std::sqrt(2.0)).margin(1e-12));
  }
  SECTION("vectors already inside A have zero B part") {
    Mat a(3, 2);
    a << 1, 0,
         0, 1,
         0, 0;
    Mat b(3, 1);
    b << 0, 0, 1;
    const auto [ca, cb] = geom::decompose(
        Vec{{2.0, -3.0, 0.0}}, SubspaceBasis::from_columns(a),
        SubspaceBasis::from_columns(b));
    CHECK(cb.norm() == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("overlapping summands are rejected") {
    Mat a(3, 2);
    a << 1, 0,
         0, 1,
         0, 0;
    Mat b(3, 1);
    b << 1, 1, 0;  // inside span(a)
    CHECK_THROWS_AS(geom::decompose(Vec{{1.0, 0.0, 0.0}},
                                    SubspaceBasis::from_columns(a),
                                    SubspaceBasis::from_columns(b)),
                    DirectSumViolation);
  }
  SECTION("vector outside the combined span is rejected") {
    Mat a(3, 1), b(3, 1);
    a << 1, 0, 0;
    b << 0, 1, 0;
    CHECK_THROWS_AS(geom::decompose(Vec{{0.0, 0.0, 1.0}},
                                    SubspaceBasis::from_columns(a),
                                    SubspaceBasis::from_columns(b)),
                    DirectSumViolation);
  }
}

namespace {

Mat random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

}  // namespace

TEST_CASE("subspace properties on random data") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> dim(1, 3);

  SECTION("decompose then recombine, and projector idempotence") {
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 6;
      const int ka = dim(rng), kb = dim(rng);
      Mat joint = random_matrix(rng, n, ka + kb);
      if (geom::rank_of(joint, 1e-6) < ka + kb) continue;
      const auto a = SubspaceBasis::from_columns(joint.leftCols(ka));
      const auto b = SubspaceBasis::from_columns(joint.rightCols(kb));
      const Vec vec = joint * random_matrix(rng, ka + kb, 1);
      const auto [ca, cb] = geom::decompose(vec, a, b);
      const Vec recon = a.vectors * ca + b.vectors * cb;
      CHECK((recon - vec).norm() <= 1e-10 * std::max(1.0, vec.norm()));
      const Vec proj = geom::project_along(vec, a, b);
      const Vec proj2 = geom::project_along(proj, a, b);
      CHECK((proj2 - proj).norm() <= 1e-10 * std::max(1.0, proj.norm()));
    }
  }

  SECTION("intersection is inside both spans, Grassmann rank identity") {
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 5;
      const auto a = SubspaceBasis::from_columns(random_matrix(rng, n, dim(rng)));
      const auto b = SubspaceBasis::from_columns(random_matrix(rng, n, dim(rng)));
      const auto inter = geom::subspace_intersection(a, b);
      for (int j = 0; j < inter.count(); ++j) {
        const Vec x = inter.vectors.col(j);
        const Vec ra = a.vectors * a.vectors.colPivHouseholderQr().solve(x);
        const Vec rb = b.vectors * b.vectors.colPivHouseholderQr().solve(x);
        CHECK((ra - x).norm() <= 1e-9);
        CHECK((rb - x).norm() <= 1e-9);
      }
      Mat stacked(n, a.count() + b.count());
      stacked << a.vectors, b.vectors;
      const int rank_union = geom::rank_of(stacked, 1e-7);
      CHECK(rank_union + inter.count() == a.count() + b.count());
    }
  }
}
