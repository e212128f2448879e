#include "mixdendro/errors.hpp"
#include "mixdendro/simharness.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace mixdendro;
using namespace mixdendro::testing;

namespace {

double normal_cdf(double x, double mu, double sd) {
  return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0)));
}

double sample_skewness(const VectorXd& x) {
  const double m = x.mean();
  const double m2 = (x.array() - m).square().mean();
  const double m3 = (x.array() - m).cube().mean();
  return m3 / std::pow(m2, 1.5);
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n_grid = {200, 800};
  cfg.reps = 4;
  cfg.seed = 3;
  cfg.em.restarts = 2;
  cfg.em.max_iters = 100;
  cfg.em.tol_loglik = 1e-6;
  return cfg;
}

}  // namespace

TEST_CASE("scenario metadata") {
  CHECK(true_order(strong_scenario()) == 3);
  CHECK(true_order(weak_scenario()) == 3);
  CHECK(true_order(contaminated_scenario()) == 2);
  CHECK(true_order(skew_scenario()) == 2);
  CHECK(fit_mode(strong_scenario()) == CovarianceMode::FixedIdentity);
  CHECK(fit_mode(weak_scenario()) == CovarianceMode::Full);
  CHECK(!scenario_truth(skew_scenario()).has_value());
  const MomentSummary s = moment_summary(*scenario_truth(strong_scenario()));
  CHECK(s.m1(0) == doctest::Approx(0.0));
  CHECK(s.m1(1) == doctest::Approx(8.0 / 3));
  CHECK_THROWS_AS(validate(contaminated_scenario(1.5)), InvalidInput);
}

TEST_CASE("zero contamination is the pure mixture") {
  const Scenario s = contaminated_scenario(0.0);
  const Eigen::Index n = 20000;
  const Dataset data = sample_scenario(s, n, 61);
  // 0.4 N(5, 1) + 0.6 N(10, 1.5)
  const double mean = 0.4 * 5 + 0.6 * 10;
  const double second = 0.4 * (1 + 25) + 0.6 * (1.5 + 100);
  const double sd = std::sqrt(second - mean * mean);
  CHECK(std::abs(data.rows().col(0).mean() - mean) <= 3 * sd / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("zero skewness is the normal law") {
  const Scenario s = SkewMixture{{{1.0, 2.0, 4.0, 0.0}}};
  const Eigen::Index n = 10000;
  const Dataset data = sample_scenario(s, n, 62);
  std::vector<double> x(data.rows().col(0).data(), data.rows().col(0).data() + n);
  std::sort(x.begin(), x.end());
  double ks = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double f = normal_cdf(x[static_cast<std::size_t>(i)], 2.0, 2.0);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n),
                   std::abs(f - static_cast<double>(i + 1) / n)});
  }
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("strong skewness is to the right") {
  const Scenario s = SkewMixture{{{1.0, 5.0, 1.0, 20.0}}};
  for (std::uint64_t rep = 0; rep < 8; ++rep) {
    const Dataset data = sample_scenario(s, 10000, derive_seed(63, {rep}));
    CHECK(sample_skewness(data.rows().col(0)) > 0.0);
  }
  const Dataset mix = sample_scenario(skew_scenario(), 10000, 64);
  CHECK(mix.n() == 10000);
}

TEST_CASE("sampling is reproducible") {
  for (const Scenario& s : {strong_scenario(), weak_scenario(), contaminated_scenario(), skew_scenario()}) {
    CHECK(sample_scenario(s, 300, 9).rows() == sample_scenario(s, 300, 9).rows());
    CHECK(sample_scenario(s, 300, 9).rows() != sample_scenario(s, 300, 10).rows());
  }
}

TEST_CASE("returning the truth gives a degenerate summary") {
  const Scenario s = strong_scenario();
  const MixingMeasure truth = *scenario_truth(s);
  const Fitter oracle = [&](const Dataset&, int, std::uint64_t) { return truth; };
  const RateTable t = rate_experiment(s, small_config(), 5, oracle);
  CHECK(t.failures.empty());
  for (const RateRecord& r : t.records) CHECK(r.error == doctest::Approx(0.0).epsilon(1e-12));
  for (const RateSummary& r : t.summary) {
    CHECK(r.degenerate);
    CHECK(std::isnan(r.slope));
  }
}

TEST_CASE("rate table layout") {
  const RateTable t = rate_experiment(strong_scenario(), small_config(), 4);
  CHECK(t.failures.empty());
  const RateSummary& m = t.find(Estimator::Merged, Metric::W1);
  CHECK(m.n_values == std::vector<int>{200, 800});
  CHECK(m.medians.size() == 2);
  CHECK_THROWS(t.find(Estimator::Exact, Metric::W6));
}

TEST_CASE("one replication gives all-or-nothing fractions") {
  ExperimentConfig cfg = small_config();
  cfg.reps = 1;
  SelectionExperimentOptions opt;
  opt.kmax = 4;
  opt.methods = {Method::AIC, Method::BIC, Method::DIC, Method::Cut};
  const SelectionTable t = selection_experiment(strong_scenario(), cfg, opt);
  for (const SelectionSummaryRow& r : t.summary) {
    CHECK((r.fraction_correct == 0.0 || r.fraction_correct == 1.0));
    CHECK(r.replications == 1);
  }
}

TEST_CASE("slope") {
  std::vector<std::pair<double, double>> pts;
  for (double x : {0.0, 1.0, 2.5, 4.0}) pts.emplace_back(x, -0.5 * x + 1.0);
  const LineFit f = slope(pts);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));

  const LineFit two = slope({{1.0, 3.0}, {3.0, 7.0}});
  CHECK(two.slope == doctest::Approx(2.0));
  CHECK(two.intercept == doctest::Approx(1.0));

  Rng rng(65);
  std::normal_distribution<double> z;
  std::vector<std::pair<double, double>> noisy, shifted;
  for (int i = 0; i < 20; ++i) {
    const double y = 0.3 * i + z(rng);
    noisy.emplace_back(i, y);
    shifted.emplace_back(i, y + 17.0);
  }
  CHECK(slope(noisy).slope == doctest::Approx(slope(shifted).slope).epsilon(1e-12));
  CHECK_THROWS_AS(slope({{1.0, 2.0}}), InvalidInput);
}

TEST_CASE("pca") {
  Rng rng(66);
  MatrixXd x(60, 3);
  const MatrixXd mix = random_spd(rng, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) = (mix * normal_vector(rng, 3)).transpose();
  const Dataset data(x);

  SUBCASE("full rotation preserves distances") {
    const MatrixXd s = pca_project(data, 3).rows();
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index j = 0; j < 10; ++j) {
        CHECK(std::abs((s.row(i) - s.row(j)).norm() - (x.row(i) - x.row(j)).norm()) <= 1e-9);
      }
    }
  }
  SUBCASE("score variances are the eigenvalues") {
    const PcaModel m = pca_fit(data, 3);
    const MatrixXd s = pca_project(data, 3).rows();
    for (Eigen::Index c = 0; c < 3; ++c) {
      const double var = (s.col(c).array() - s.col(c).mean()).square().sum() / (x.rows() - 1);
      CHECK(std::abs(var - m.eigenvalues(c)) <= 1e-9);
      if (c > 0) CHECK(m.eigenvalues(c) <= m.eigenvalues(c - 1));
    }
  }
  SUBCASE("rank one data is reconstructed") {
    VectorXd v(3);
    v << 1.0, -2.0, 0.5;
    MatrixXd r(20, 3);
    for (Eigen::Index i = 0; i < r.rows(); ++i) r.row(i) = (0.3 * i - 2.0) * v.transpose();
    const PcaModel m = pca_fit(Dataset(r), 1);
    const MatrixXd scores = pca_project(Dataset(r), 1).rows();
    const MatrixXd back =
        (scores * m.components.transpose()).rowwise() + m.mean.transpose();
    CHECK((back - r).norm() <= 1e-9);
  }
  CHECK_THROWS_AS(pca_fit(data, 4), InvalidInput);
  CHECK_THROWS_AS(pca_fit(data, 0), InvalidInput);
}
