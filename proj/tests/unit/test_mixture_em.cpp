#include "mixdendro/errors.hpp"
#include "mixdendro/mixture_em.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mixdendro;
using namespace mixdendro::testing;

namespace {

MixingMeasure gauss1(std::vector<double> w, std::vector<double> mu, std::vector<double> s) {
  std::vector<VectorXd> m;
  std::vector<MatrixXd> c;
  for (double v : mu) m.push_back(VectorXd::Constant(1, v));
  for (double v : s) c.push_back(MatrixXd::Constant(1, 1, v));
  return MixingMeasure::gaussian(w, m, c);
}

Dataset two_clusters(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd x(1000, 2);
  for (Eigen::Index i = 0; i < 1000; ++i) {
    const double c = i < 500 ? -10.0 : 10.0;
    x(i, 0) = c + z(rng);
    x(i, 1) = c + z(rng);
  }
  return Dataset(x);
}

}  // namespace

TEST_CASE("log_density closed forms") {
  const VectorXd zero = VectorXd::Zero(1);
  CHECK(log_density(gauss1({1.0}, {0}, {1}), zero) ==
        doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-12));
  CHECK(log_density(gauss1({1.0}, {0}, {1}), zero) == doctest::Approx(-0.918939).epsilon(1e-6));
  for (double a : {0.5, 2.0, 7.0}) {
    CHECK(log_density(gauss1({0.5, 0.5}, {-a, a}, {1, 1}), zero) ==
          doctest::Approx(log_density(gauss1({1.0}, {a}, {1}), zero)).epsilon(1e-12));
  }
  const MixingMeasure g = gauss1({0.3, 0.7}, {-1, 2}, {0.5, 2});
  for (double x : {-2.0, 0.0, 1.3, 4.0}) {
    const auto pdf = [x](double mu, double s) {
      return std::exp(-0.5 * (x - mu) * (x - mu) / s) / std::sqrt(2 * std::numbers::pi * s);
    };
    const double direct = 0.3 * pdf(-1, 0.5) + 0.7 * pdf(2, 2);
    CHECK(std::abs(std::exp(log_density(g, VectorXd::Constant(1, x))) - direct) <= 1e-12);
  }
  // Euclidean atoms are unit-covariance normals.
  const MixingMeasure e = MixingMeasure::euclidean({1.0}, {VectorXd::Zero(1)});
  CHECK(log_density(e, zero) == doctest::Approx(-0.918939).epsilon(1e-6));
  CHECK_THROWS_AS(log_density(e, VectorXd::Zero(2)), DimensionMismatch);
}

TEST_CASE("avg_loglik") {
  const MixingMeasure g = gauss1({0.3, 0.7}, {-1, 2}, {0.5, 2});
  const Dataset one(MatrixXd::Constant(1, 1, 0.4));
  CHECK(avg_loglik(g, one) == doctest::Approx(log_density(g, VectorXd::Constant(1, 0.4))));
  MatrixXd rows(3, 1);
  rows << -1, 0.5, 3;
  MatrixXd twice(6, 1);
  twice << rows, rows;
  CHECK(avg_loglik(g, Dataset(twice)) == doctest::Approx(avg_loglik(g, Dataset(rows))).epsilon(1e-14));
}

TEST_CASE("dataset rejects non-finite entries") {
  MatrixXd x = MatrixXd::Zero(3, 2);
  x(1, 1) = std::nan("");
  CHECK_THROWS_AS(Dataset{x}, InvalidInput);
  CHECK_THROWS_AS(Dataset{MatrixXd(0, 2)}, InvalidInput);
}

TEST_CASE("k = 1 returns the sample moments") {
  Rng rng(41);
  MatrixXd x(200, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = normal_vector(rng, 2, 3.0).transpose();
  EmConfig cfg;
  cfg.k = 1;
  cfg.restarts = 2;
  const FitResult f = fit_em(Dataset(x), cfg);
  const VectorXd mean = x.colwise().mean();
  const MatrixXd centred = x.rowwise() - mean.transpose();
  const MatrixXd cov = centred.transpose() * centred / static_cast<double>(x.rows());
  CHECK((f.measure.location(0) - mean).norm() <= 1e-9);
  CHECK((std::get<GaussianPoint>(f.measure[0].point).sigma() - cov).norm() <= 1e-9);
  CHECK(f.converged);
}

TEST_CASE("well separated clusters are recovered for every seed") {
  const Dataset data = two_clusters(42);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    EmConfig cfg;
    cfg.k = 2;
    cfg.seed = seed;
    cfg.restarts = 2;
    const FitResult f = fit_em(data, cfg);
    for (std::size_t i = 0; i < 2; ++i) {
      const double c = f.measure.location(i)(0) < 0 ? -10.0 : 10.0;
      CHECK((f.measure.location(i) - VectorXd::Constant(2, c)).norm() <= 0.2);
      CHECK(std::abs(f.measure.weight(i) - 0.5) <= 0.05);
    }
    for (std::size_t t = 1; t < f.loglik_trace.size(); ++t) {
      if (!f.projected[t]) CHECK(f.loglik_trace[t] >= f.loglik_trace[t - 1] - 1e-10);
    }
  }
}

TEST_CASE("identical rows collapse to the eigenvalue floor") {
  MatrixXd x(50, 2);
  x.col(0).setConstant(1.5);
  x.col(1).setConstant(-2.0);
  EmConfig cfg;
  cfg.k = 1;
  const FitResult f = fit_em(Dataset(x), cfg);
  const MatrixXd s = std::get<GaussianPoint>(f.measure[0].point).sigma();
  CHECK((s - cfg.cov_floor * MatrixXd::Identity(2, 2)).norm() <= 1e-15);
}

TEST_CASE("fixed identity mode keeps unit covariances") {
  EmConfig cfg;
  cfg.k = 2;
  cfg.covariance_mode = CovarianceMode::FixedIdentity;
  const FitResult f = fit_em(two_clusters(43), cfg);
  CHECK(f.measure.kernel() == Kernel::EuclideanLocation);
}

TEST_CASE("proportion floor is respected") {
  EmConfig cfg;
  cfg.k = 4;
  cfg.prop_floor = 0.1;
  const FitResult f = fit_em(two_clusters(44), cfg);
  for (std::size_t i = 0; i < f.measure.size(); ++i) CHECK(f.measure.weight(i) >= 0.1 - 1e-12);
}

TEST_CASE("projections") {
  VectorXd w(3);
  w << 0.9, 0.1, 0.0;
  const VectorXd p = project_weights(w, 0.05);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p.minCoeff() >= 0.05 - 1e-15);
  CHECK(project_weights(w, 0.0) == w);

  MatrixXd s(2, 2);
  s << 1, 0.999, 0.999, 1;
  const MatrixXd c = clip_eigenvalues(s, 0.01, 1.5);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.01));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.5));
}

TEST_CASE("config validation") {
  const Dataset data = two_clusters(45);
  EmConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(fit_em(data, cfg), InvalidInput);
  cfg.k = 2000;
  CHECK_THROWS_AS(fit_em(data, cfg), InvalidInput);
  cfg.k = 4;
  cfg.prop_floor = 0.25;
  CHECK_THROWS_AS(fit_em(data, cfg), InvalidInput);
}

TEST_CASE("kmeans++ picks distinct rows deterministically") {
  const Dataset data = two_clusters(46);
  const auto a = kmeans_plus_plus(data, 5, 9);
  const auto b = kmeans_plus_plus(data, 5, 9);
  CHECK(a == b);
  std::vector<Eigen::Index> s = a;
  std::sort(s.begin(), s.end());
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
}

TEST_CASE("responsibilities are normalized") {
  const Dataset data = two_clusters(47);
  const MixingMeasure g = MixingMeasure::gaussian(
      {0.5, 0.5}, {VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0)},
      {MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)});
  const MatrixXd r = responsibilities(g, data);
  CHECK((r.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(r.minCoeff() >= 0.0);
}
