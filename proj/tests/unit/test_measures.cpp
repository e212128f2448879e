#include "mixdendro/errors.hpp"
#include "mixdendro/measures.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace mixdendro;
using namespace mixdendro::testing;

namespace {

VectorXd v1(double x) { return VectorXd::Constant(1, x); }
MatrixXd m1(double x) { return MatrixXd::Constant(1, 1, x); }

Atom euclid(double w, double x) { return Atom(w, EuclideanPoint(v1(x))); }
Atom gauss(double w, double mu, double s) { return Atom(w, GaussianPoint(v1(mu), m1(s))); }

}  // namespace

TEST_CASE("dissimilarity on hand examples") {
  CHECK(dissimilarity(euclid(0.5, 0.0), euclid(0.5, 2.0), Kernel::EuclideanLocation) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(dissimilarity(euclid(0.3, 1.7), euclid(0.7, 1.7), Kernel::EuclideanLocation) == 0.0);
  CHECK(dissimilarity(gauss(0.5, 0.0, 1.0), gauss(0.5, 2.0, 3.0), Kernel::GaussianLocationScale) ==
        doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("dissimilarity rejects mixed kernels and dimensions") {
  const Atom a = euclid(0.5, 0.0);
  const Atom b(0.5, EuclideanPoint(VectorXd::Zero(2)));
  CHECK_THROWS_AS(dissimilarity(a, b, Kernel::EuclideanLocation), InvalidInput);
  CHECK_THROWS_AS(dissimilarity(a, gauss(0.5, 0.0, 1.0), Kernel::EuclideanLocation), InvalidInput);
}

TEST_CASE("harmonic weight") {
  CHECK(harmonic_weight(0.5, 0.5) == doctest::Approx(0.25));
  CHECK(harmonic_weight(0.2, 0.3) == doctest::Approx(0.2 * 0.3 / 0.5));
  CHECK(harmonic_weight(0.0, 0.3) == 0.0);
}

TEST_CASE("merge_pair on hand examples") {
  SUBCASE("euclidean weighted mean") {
    const MixingMeasure g(Kernel::EuclideanLocation, {euclid(0.3, 0.0), euclid(0.1, 4.0), euclid(0.6, 9.0)});
    const MixingMeasure m = merge_pair(g, 0, 1);
    REQUIRE(m.size() == 2);
    CHECK(m.weight(0) == doctest::Approx(0.4));
    CHECK(m.location(0)(0) == doctest::Approx(1.0));
    CHECK(m.location(1)(0) == 9.0);
  }
  SUBCASE("gaussian covariance absorbs the spread") {
    const MixingMeasure g(Kernel::GaussianLocationScale, {gauss(0.5, 0.0, 1.0), gauss(0.5, 2.0, 1.0)});
    const MixingMeasure m = merge_pair(g, 1, 0);
    REQUIRE(m.size() == 1);
    CHECK(m.weight(0) == doctest::Approx(1.0));
    CHECK(m.location(0)(0) == doctest::Approx(1.0));
    CHECK(std::get<GaussianPoint>(m[0].point).sigma()(0, 0) == doctest::Approx(2.0));
  }
  SUBCASE("merged atom takes the lower slot, others keep order") {
    const MixingMeasure g(Kernel::EuclideanLocation,
                          {euclid(0.25, 0.0), euclid(0.25, 1.0), euclid(0.25, 2.0), euclid(0.25, 3.0)});
    const MixingMeasure m = merge_pair(g, 3, 1);
    REQUIRE(m.size() == 3);
    CHECK(m.location(0)(0) == 0.0);
    CHECK(m.location(1)(0) == doctest::Approx(2.0));
    CHECK(m.location(2)(0) == 2.0);
  }
  SUBCASE("invalid indices") {
    const MixingMeasure g(Kernel::EuclideanLocation, {euclid(0.5, 0.0), euclid(0.5, 1.0)});
    CHECK_THROWS_AS(merge_pair(g, 1, 1), InvalidInput);
    CHECK_THROWS_AS(merge_pair(g, 0, 2), InvalidInput);
  }
}

TEST_CASE("moment_summary") {
  SUBCASE("single atom") {
    VectorXd t(2);
    t << 2, 1;
    const MomentSummary s = moment_summary(MixingMeasure::euclidean({1.0}, {t}));
    CHECK(s.mass == 1.0);
    CHECK(s.m1(0) == 2.0);
    CHECK(s.m1(1) == 1.0);
    CHECK(s.m2(0, 0) == 4.0);
    CHECK(s.m2(0, 1) == 2.0);
    CHECK(s.m2(1, 0) == 2.0);
    CHECK(s.m2(1, 1) == 1.0);
  }
  SUBCASE("uniform three-atom measure") {
    VectorXd a(2), b(2), c(2);
    a << 2, 1;
    b << 0, 6;
    c << -2, 1;
    const MomentSummary s = moment_summary(MixingMeasure::euclidean({1.0 / 3, 1.0 / 3, 1.0 / 3}, {a, b, c}));
    CHECK(s.m1(0) == doctest::Approx(0.0));
    CHECK(s.m1(1) == doctest::Approx(8.0 / 3));
  }
  SUBCASE("gaussian second moment survives merges") {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
      const MixingMeasure g = random_gaussian(rng, 2 + t % 5, 1 + t % 3, 2.0);
      const MatrixXd before = moment_summary(g).m2;
      const MatrixXd after = moment_summary(merge_pair(g, 0, g.size() - 1)).m2;
      CHECK((before - after).norm() <= 1e-12);
    }
  }
}

TEST_CASE("measure validation") {
  CHECK_THROWS_AS(MixingMeasure(Kernel::EuclideanLocation, {}), InvalidInput);
  CHECK_THROWS_AS(MixingMeasure(Kernel::EuclideanLocation, {euclid(0.5, 0.0), euclid(0.4, 1.0)}),
                  InvalidInput);
  CHECK_THROWS_AS(MixingMeasure(Kernel::EuclideanLocation, {euclid(0.5, 0.0), gauss(0.5, 1.0, 1.0)}),
                  InvalidInput);
  CHECK_THROWS_AS(MixingMeasure::euclidean({0.5, 0.5}, {v1(0.0), VectorXd::Zero(2)}), DimensionMismatch);
  CHECK_THROWS_AS(euclid(-0.1, 0.0), InvalidInput);
  CHECK_NOTHROW(MixingMeasure(Kernel::EuclideanLocation, {euclid(1.0, 0.0), euclid(0.0, 5.0)}));
}

TEST_CASE("gaussian parameter checks") {
  MatrixXd s(2, 2);
  s << 1.0, 0.3, 0.3 + 1e-14, 2.0;
  const GaussianPoint p(VectorXd::Zero(2), s);
  CHECK(p.sigma()(0, 1) == p.sigma()(1, 0));
  MatrixXd bad(2, 2);
  bad << 0.5, 0.5, 0.5, 0.1;  // determinant -0.2
  CHECK_THROWS_AS(GaussianPoint(VectorXd::Zero(2), bad), InvalidInput);
  CHECK_THROWS_AS(GaussianPoint(VectorXd::Zero(1), m1(1e-9)), InvalidInput);
  CHECK_THROWS_AS(GaussianPoint(VectorXd::Zero(1), m1(1e7)), InvalidInput);
  CHECK_NOTHROW(GaussianPoint(VectorXd::Zero(1), m1(1e-9), {1e-10, 1.0}));
  CHECK_THROWS_AS(GaussianPoint(VectorXd::Zero(2), m1(1.0)), DimensionMismatch);
}

TEST_CASE("two massless atoms merge to their midpoint") {
  const Atom m = merge_atoms(euclid(0.0, 1.0), euclid(0.0, 3.0));
  CHECK(m.weight == 0.0);
  CHECK(std::get<EuclideanPoint>(m.point).theta()(0) == doctest::Approx(2.0));
}
