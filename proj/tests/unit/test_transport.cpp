#include "mixdendro/errors.hpp"
#include "mixdendro/transport.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace mixdendro;
using namespace mixdendro::testing;

namespace {

MixingMeasure line(std::vector<double> w, std::vector<double> x) {
  std::vector<VectorXd> t;
  for (double v : x) t.push_back(VectorXd::Constant(1, v));
  return MixingMeasure::euclidean(w, t);
}

MixingMeasure gauss1(std::vector<double> w, std::vector<double> mu, std::vector<double> s) {
  std::vector<VectorXd> m;
  std::vector<MatrixXd> c;
  for (double v : mu) m.push_back(VectorXd::Constant(1, v));
  for (double v : s) c.push_back(MatrixXd::Constant(1, 1, v));
  return MixingMeasure::gaussian(w, m, c);
}

}  // namespace

TEST_CASE("wasserstein between diracs is the distance for every r") {
  VectorXd a(2), b(2);
  a << 1, 2;
  b << 4, 6;
  const MixingMeasure da = MixingMeasure::euclidean({1.0}, {a});
  const MixingMeasure db = MixingMeasure::euclidean({1.0}, {b});
  for (double r : {1.0, 1.5, 2.0, 6.0}) CHECK(wasserstein(da, db, r) == doctest::Approx(5.0));
}

TEST_CASE("wasserstein hand example") {
  CHECK(wasserstein(line({0.5, 0.5}, {0, 2}), line({1.0}, {1}), 1.0) == doctest::Approx(1.0));
  CHECK(wasserstein(line({0.5, 0.5}, {0, 2}), line({0.5, 0.5}, {2, 0}), 2.0) ==
        doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("simplex matches the quantile coupling on the line") {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    const MixingMeasure a = random_euclidean(rng, 3, 1);
    const MixingMeasure b = random_euclidean(rng, 4, 1);
    for (double r : {1.0, 2.0, 3.0}) {
      const double lp = optimal_plan(a, b, r).cost;
      CHECK(std::abs(lp - quantile_oracle(support_of(a), support_of(b), r)) <= 1e-8);
    }
  }
}

TEST_CASE("transport plan is feasible and rejects bad input") {
  VectorXd s(2), d(3);
  s << 0.3, 0.7;
  d << 0.2, 0.2, 0.6;
  MatrixXd c(2, 3);
  c << 1, 2, 3, 4, 0, 1;
  const TransportPlan p = solve_transport(s, d, c);
  CHECK((p.coupling.rowwise().sum() - s).norm() <= 1e-14);
  CHECK((p.coupling.colwise().sum().transpose() - d).norm() <= 1e-14);
  CHECK(p.coupling.minCoeff() >= 0.0);
  CHECK(p.cost == doctest::Approx((p.coupling.array() * c.array()).sum()));

  VectorXd neg = s;
  neg(0) = -0.1;
  CHECK_THROWS_AS(solve_transport(neg, d, c), InvalidInput);
  VectorXd uneven = d;
  uneven(0) = 0.5;
  CHECK_THROWS_AS(solve_transport(s, uneven, c), InvalidInput);
  CHECK_THROWS_AS(solve_transport(s, d, MatrixXd::Zero(3, 3)), DimensionMismatch);
  MatrixXd nan = c;
  nan(0, 0) = std::nan("");
  CHECK_THROWS_AS(solve_transport(s, d, nan), InvalidInput);
}

TEST_CASE("wasserstein rejects r below one and mixed measures") {
  const MixingMeasure a = line({1.0}, {0});
  CHECK_THROWS_AS(wasserstein(a, a, 0.5), InvalidInput);
  CHECK_THROWS(wasserstein(a, gauss1({1.0}, {0}, {1}), 1.0));
}

TEST_CASE("voronoi assignment") {
  SUBCASE("identity when the measure is the reference") {
    const MixingMeasure g0 = line({0.2, 0.3, 0.5}, {0, 4, 9});
    const CellAssignment c = voronoi_assign(g0, g0);
    for (std::size_t i = 0; i < 3; ++i) {
      REQUIRE(c.cells[i].size() == 1);
      CHECK(c.cells[i][0] == i);
      CHECK(c.owner[i] == i);
    }
  }
  SUBCASE("nearest center") {
    const CellAssignment c = voronoi_assign(line({0.3, 0.3, 0.4}, {0.1, 9.9, 4.9}),
                                            line({0.5, 0.5}, {0, 10}));
    CHECK(c.cells[0] == std::vector<std::size_t>{0, 2});
    CHECK(c.cells[1] == std::vector<std::size_t>{1});
  }
  SUBCASE("ties go to the first cell") {
    const CellAssignment c = voronoi_assign(line({1.0}, {5.0}), line({0.5, 0.5}, {0, 10}));
    CHECK(c.owner[0] == 0);
  }
}

TEST_CASE("divergence D") {
  const MixingMeasure g0 = line({0.5, 0.5}, {0, 10});
  CHECK(divergence_D(g0, g0) == 0.0);
  const MixingMeasure g = line({0.4, 0.6}, {0.1, 9.9});
  CHECK(divergence_D(g, g0) == doctest::Approx(0.31).epsilon(1e-12));
  for (double x : {-3.0, 0.05, 5.0, 42.0}) {
    const MixingMeasure padded = line({0.4, 0.6, 0.0}, {0.1, 9.9, x});
    CHECK(divergence_D(padded, g0) == doctest::Approx(0.31).epsilon(1e-12));
  }
}

TEST_CASE("divergence DG") {
  const MixingMeasure g0 = gauss1({1.0}, {0.0}, {1.0});
  CHECK(divergence_DG(g0, g0) == 0.0);
  CHECK(divergence_DG(gauss1({1.0}, {0.1}, {1.2}), g0) == doctest::Approx(0.52).epsilon(1e-12));

  // Equal covariances: the squared terms quadruple, the first-moment term doubles.
  const MixingMeasure h0 = gauss1({0.5, 0.5}, {0.0, 10.0}, {1.0, 2.0});
  const double d1 = divergence_DG(gauss1({0.5, 0.5}, {0.1, 10.2}, {1.0, 2.0}), h0);
  const double d2 = divergence_DG(gauss1({0.5, 0.5}, {0.2, 10.4}, {1.0, 2.0}), h0);
  const double first1 = 0.5 * 0.1 + 0.5 * 0.2;
  CHECK((d2 - 2 * first1) == doctest::Approx(4 * (d1 - first1)).epsilon(1e-12));
}

TEST_CASE("rbar") {
  CHECK(rbar(1) == 2);
  CHECK(rbar(2) == 4);
  CHECK(rbar(3) == 6);
  CHECK_THROWS_AS(rbar(4), UnsupportedOrder);
  CHECK_THROWS_AS(rbar(0), InvalidInput);
}

TEST_CASE("DG reports cells beyond the known orders") {
  const MixingMeasure g0 = gauss1({1.0}, {0.0}, {1.0});
  const MixingMeasure g = gauss1({0.25, 0.25, 0.25, 0.25}, {0.1, 0.2, 0.3, 0.4}, {1, 1, 1, 1});
  CHECK_THROWS_AS(divergence_DG(g, g0), UnsupportedOrder);
}
