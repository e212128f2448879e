#include "mixdendro/simharness.hpp"

#include "mixdendro/errors.hpp"
#include "mixdendro/parallel.hpp"
#include "mixdendro/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

namespace mixdendro {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MatrixXd mat2(double a, double b, double c, double d) {
  MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

VectorXd vec(std::initializer_list<double> values) {
  VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

const std::vector<VectorXd>& strong_means() {
  static const std::vector<VectorXd> means{vec({2.0, 1.0}), vec({0.0, 6.0}), vec({-2.0, 1.0})};
  return means;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

Scenario strong_scenario() {
  return WellSpecifiedStrong{MixingMeasure::euclidean({1.0 / 3, 1.0 / 3, 1.0 / 3}, strong_means())};
}

Scenario weak_scenario() {
  // The first covariance is the positive-definite substitute; the other two
  // are kept as printed.
  const std::vector<MatrixXd> sigmas{mat2(0.5, 0.1, 0.1, 0.5), mat2(0.5, -0.1, -0.1, 0.1),
                                     mat2(0.25, 0.5, 0.5, 2.0)};
  return WellSpecifiedWeak{
      MixingMeasure::gaussian({1.0 / 3, 1.0 / 3, 1.0 / 3}, strong_means(), sigmas)};
}

Scenario contaminated_scenario(double eps) {
  MatrixXd v1(1, 1), v2(1, 1);
  v1 << 1.0;
  v2 << 1.5;
  return EpsContaminated{eps, 0.0, 1.0,
                         MixingMeasure::gaussian({0.4, 0.6}, {vec({5.0}), vec({10.0})}, {v1, v2})};
}

Scenario skew_scenario() {
  return SkewMixture{{{0.4, 5.0, 1.0, 20.0}, {0.6, 8.0, 1.5, 20.0}}};
}

std::string scenario_name(const Scenario& s) {
  return std::visit(overloaded{[](const WellSpecifiedStrong&) { return "strong"; },
                               [](const WellSpecifiedWeak&) { return "weak"; },
                               [](const EpsContaminated&) { return "contaminated"; },
                               [](const SkewMixture&) { return "skew"; }},
                    s);
}

int true_order(const Scenario& s) {
  return std::visit(
      overloaded{[](const SkewMixture& m) { return static_cast<int>(m.components.size()); },
                 [](const auto& m) { return static_cast<int>(m.truth.size()); }},
      s);
}

std::optional<MixingMeasure> scenario_truth(const Scenario& s) {
  return std::visit(overloaded{[](const SkewMixture&) -> std::optional<MixingMeasure> {
                                 return std::nullopt;
                               },
                               [](const auto& m) -> std::optional<MixingMeasure> { return m.truth; }},
                    s);
}

CovarianceMode fit_mode(const Scenario& s) {
  return std::holds_alternative<WellSpecifiedStrong>(s) ? CovarianceMode::FixedIdentity
                                                        : CovarianceMode::Full;
}

double scenario_omega(const Scenario& s, Eigen::Index n) {
  return std::holds_alternative<WellSpecifiedStrong>(s) ? omega_half_log_n(n) : omega_log_n(n);
}

void validate(const Scenario& s) {
  if (const auto* c = std::get_if<EpsContaminated>(&s)) {
    if (!(c->eps >= 0.0 && c->eps < 1.0)) throw InvalidInput("contamination eps must lie in [0, 1)");
    if (!(c->laplace_scale > 0.0)) throw InvalidInput("laplace scale must be positive");
    if (!std::isfinite(c->laplace_location)) throw InvalidInput("laplace location must be finite");
    if (c->truth.dim() != 1) throw InvalidInput("contaminated scenario is univariate");
  }
  if (const auto* m = std::get_if<SkewMixture>(&s)) {
    if (m->components.empty()) throw InvalidInput("skew mixture has no components");
    double total = 0.0;
    for (const SkewComponent& c : m->components) {
      if (!(c.weight > 0.0)) throw InvalidInput("skew component weights must be positive");
      if (!(c.variance > 0.0)) throw InvalidInput("skew component scales must be positive");
      if (!std::isfinite(c.location) || !std::isfinite(c.skewness)) {
        throw InvalidInput("skew component parameters must be finite");
      }
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidInput("skew component weights must sum to 1");
  }
}

Dataset sample_scenario(const Scenario& s, Eigen::Index n, std::uint64_t seed) {
  if (n < 1) throw InvalidInput("sample size must be at least 1");
  validate(s);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const auto draw_from = [&](const MixingMeasure& g, MatrixXd& out, Eigen::Index row) {
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = g.weight(i);
    // Built per call so that every stream consumes the same draws.
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t c = pick(rng);
    VectorXd z(g.dim());
    for (Eigen::Index t = 0; t < g.dim(); ++t) z(t) = normal(rng);
    if (const auto* e = std::get_if<EuclideanPoint>(&g[c].point)) {
      out.row(row) = (e->theta() + z).transpose();
    } else {
      const auto& gp = std::get<GaussianPoint>(g[c].point);
      const Eigen::LLT<MatrixXd> llt(gp.sigma());
      out.row(row) = (gp.mu() + llt.matrixL() * z).transpose();
    }
  };

  return std::visit(
      overloaded{
          [&](const EpsContaminated& c) {
            MatrixXd out(n, 1);
            for (Eigen::Index r = 0; r < n; ++r) {
              if (c.eps > 0.0 && uniform(rng) < c.eps) {
                double u = 0.0;
                while (u == 0.0) u = uniform(rng);
                u -= 0.5;
                const double sign = u < 0.0 ? -1.0 : 1.0;
                out(r, 0) = c.laplace_location - c.laplace_scale * sign * std::log1p(-2.0 * std::abs(u));
              } else {
                draw_from(c.truth, out, r);
              }
            }
            return Dataset(std::move(out));
          },
          [&](const SkewMixture& m) {
            std::vector<double> w;
            for (const SkewComponent& c : m.components) w.push_back(c.weight);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            MatrixXd out(n, 1);
            for (Eigen::Index r = 0; r < n; ++r) {
              const SkewComponent& c = m.components[pick(rng)];
              const double delta = c.skewness / std::sqrt(1.0 + c.skewness * c.skewness);
              const double u0 = normal(rng);
              const double u1 = normal(rng);
              const double z = delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1;
              out(r, 0) = c.location + std::sqrt(c.variance) * z;
            }
            return Dataset(std::move(out));
          },
          [&](const auto& m) {
            MatrixXd out(n, m.truth.dim());
            for (Eigen::Index r = 0; r < n; ++r) draw_from(m.truth, out, r);
            return Dataset(std::move(out));
          }},
      s);
}

const char* estimator_name(Estimator e) {
  switch (e) {
    case Estimator::Overfitted: return "overfitted";
    case Estimator::Exact: return "exact";
    case Estimator::Merged: return "merged";
  }
  return "?";
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::W1: return "W1";
    case Metric::W2: return "W2";
    case Metric::W6: return "W6";
    case Metric::D: return "D";
    case Metric::DG: return "DG";
  }
  return "?";
}

const char* method_name(Method m) {
  switch (m) {
    case Method::AIC: return "aic";
    case Method::BIC: return "bic";
    case Method::DIC: return "dic";
    case Method::Cut: return "cut";
  }
  return "?";
}

const RateSummary& RateTable::find(Estimator e, Metric m) const {
  for (const RateSummary& s : summary) {
    if (s.estimator == e && s.metric == m) return s;
  }
  throw InvalidInput(std::string("no summary for ") + estimator_name(e) + "/" + metric_name(m));
}

const SelectionSummaryRow& SelectionTable::find(int n, Method m) const {
  for (const SelectionSummaryRow& r : summary) {
    if (r.n == n && r.method == m) return r;
  }
  throw InvalidInput("no selection summary for n = " + std::to_string(n) + ", method " +
                     method_name(m));
}

EmConfig scenario_em(const Scenario& s, const EmConfig& base, int k) {
  EmConfig cfg = base;
  cfg.k = k;
  cfg.covariance_mode = fit_mode(s);
  if (cfg.covariance_mode == CovarianceMode::Full) cfg.prop_floor = 0.05 / k;
  return cfg;
}

namespace {

void check_grid(const ExperimentConfig& cfg, int min_reps) {
  if (cfg.n_grid.empty()) throw InvalidInput("n grid is empty");
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) {
    if (cfg.n_grid[i] < 1) throw InvalidInput("n grid entries must be positive");
    if (i > 0 && cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
      throw InvalidInput("n grid must be strictly ascending");
    }
  }
  if (cfg.reps < min_reps) {
    throw InvalidInput("need at least " + std::to_string(min_reps) + " replications");
  }
}

std::uint64_t replication_seed(std::uint64_t seed, int n, int rep) {
  return derive_seed(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep)});
}

Fitter default_fitter(const Scenario& s, const EmConfig& base) {
  return [s, base](const Dataset& data, int k, std::uint64_t seed) {
    EmConfig cfg = scenario_em(s, base, k);
    cfg.seed = seed;
    return fit_em(data, cfg).measure;
  };
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

struct Job {
  int n;
  int rep;
};

std::vector<Job> jobs_of(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (int n : cfg.n_grid) {
    for (int rep = 0; rep < cfg.reps; ++rep) jobs.push_back({n, rep});
  }
  return jobs;
}

}  // namespace

RateTable rate_experiment(const Scenario& s, const ExperimentConfig& cfg, int k_over,
                          const Fitter& fitter) {
  check_grid(cfg, 4);
  const std::optional<MixingMeasure> truth = scenario_truth(s);
  if (!truth) throw InvalidInput("rate experiments need a scenario with a mixing-measure truth");
  const int k0 = true_order(s);
  if (k_over < k0) throw InvalidInput("k_over must be at least the true order");
  const Fitter fit = fitter ? fitter : default_fitter(s, cfg.em);
  const bool gaussian = truth->kernel() == Kernel::GaussianLocationScale;
  const std::string name = scenario_name(s);

  const std::vector<Job> jobs = jobs_of(cfg);
  struct Outcome {
    std::vector<RateRecord> records;
    std::optional<std::string> failure;
  };
  std::vector<Outcome> outcomes(jobs.size());

  parallel_for(jobs.size(), resolve_threads(cfg.threads), [&](std::size_t idx) {
    const Job job = jobs[idx];
    Outcome& out = outcomes[idx];
    try {
      const std::uint64_t rs = replication_seed(cfg.seed, job.n, job.rep);
      const Dataset data = sample_scenario(s, job.n, derive_seed(rs, {0}));
      const MixingMeasure exact = fit(data, k0, derive_seed(rs, {1}));
      const MixingMeasure over = fit(data, k_over, derive_seed(rs, {2}));
      const MixingMeasure merged = measure_at_level(build_dendrogram(over), k0);

      const auto add = [&](Estimator e, Metric m, double err) {
        out.records.push_back({name, job.n, job.rep, e, m, err});
      };
      const auto divergence = [&](Estimator e, const MixingMeasure& g) {
        try {
          if (gaussian) {
            add(e, Metric::DG, divergence_DG(g, *truth));
          } else {
            add(e, Metric::D, divergence_D(g, *truth));
          }
        } catch (const UnsupportedOrder&) {
          // A Voronoi cell holds more atoms than the known exponent table covers.
        }
      };
      add(Estimator::Exact, Metric::W1, wasserstein(exact, *truth, 1.0));
      divergence(Estimator::Exact, exact);
      add(Estimator::Merged, Metric::W1, wasserstein(merged, *truth, 1.0));
      divergence(Estimator::Merged, merged);
      add(Estimator::Overfitted, Metric::W1, wasserstein(over, *truth, 1.0));
      if (gaussian) {
        add(Estimator::Overfitted, Metric::W6, wasserstein(over, *truth, 6.0));
      } else {
        add(Estimator::Overfitted, Metric::W2, wasserstein(over, *truth, 2.0));
      }
      divergence(Estimator::Overfitted, over);
    } catch (const std::exception& e) {
      out.records.clear();
      out.failure = e.what();
    }
  });

  RateTable table;
  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    if (outcomes[idx].failure) {
      table.failures.push_back({jobs[idx].n, jobs[idx].rep, *outcomes[idx].failure});
    }
    for (RateRecord& r : outcomes[idx].records) table.records.push_back(std::move(r));
  }

  // Summaries in a fixed (estimator, metric) order.
  std::map<std::pair<int, int>, std::map<int, std::vector<double>>> groups;
  for (const RateRecord& r : table.records) {
    groups[{static_cast<int>(r.estimator), static_cast<int>(r.metric)}][r.n].push_back(r.error);
  }
  for (const auto& [key, by_n] : groups) {
    RateSummary sum{static_cast<Estimator>(key.first), static_cast<Metric>(key.second),
                    kNaN, kNaN, kNaN, false, {}, {}};
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, errors] : by_n) {
      const double med = median(errors);
      sum.n_values.push_back(n);
      sum.medians.push_back(med);
      if (med > 0.0 && std::isfinite(med)) {
        pts.emplace_back(std::log10(static_cast<double>(n)), std::log10(med));
      } else {
        sum.degenerate = true;
      }
    }
    if (pts.size() < 2) sum.degenerate = true;
    if (!sum.degenerate) {
      const LineFit lf = slope(pts);
      sum.slope = lf.slope;
      sum.intercept = lf.intercept;
      sum.stderr_slope = lf.stderr_slope;
    }
    table.summary.push_back(std::move(sum));
  }
  return table;
}

SelectionTable selection_experiment(const Scenario& s, const ExperimentConfig& cfg,
                                    const SelectionExperimentOptions& options) {
  check_grid(cfg, 1);
  if (options.methods.empty()) throw InvalidInput("no selection methods requested");
  if (options.kmax < 2) throw InvalidInput("selection needs kmax >= 2");
  const int k0 = true_order(s);
  const std::set<Method> methods(options.methods.begin(), options.methods.end());

  const std::vector<Job> jobs = jobs_of(cfg);
  struct Outcome {
    std::map<Method, int> chosen;
    std::optional<std::string> failure;
  };
  std::vector<Outcome> outcomes(jobs.size());

  parallel_for(jobs.size(), resolve_threads(cfg.threads), [&](std::size_t idx) {
    const Job job = jobs[idx];
    Outcome& out = outcomes[idx];
    try {
      const std::uint64_t rs = replication_seed(cfg.seed, job.n, job.rep);
      const Dataset data = sample_scenario(s, job.n, derive_seed(rs, {0}));
      SelectOptions opt;
      opt.kmin = 1;
      opt.kmax = options.kmax;
      opt.use_aic = methods.count(Method::AIC) > 0;
      opt.use_bic = methods.count(Method::BIC) > 0;
      opt.use_dic = methods.count(Method::DIC) > 0;
      opt.use_cut = methods.count(Method::Cut) > 0;
      opt.omega = options.omega ? options.omega(data.n()) : scenario_omega(s, data.n());
      // One refit ladder shares one config, so the floor is the one of the
      // largest candidate order, which is admissible for every order below.
      opt.em = scenario_em(s, cfg.em, options.kmax);
      opt.em.seed = derive_seed(rs, {2});
      const SelectionReport report = run_selection(data, opt);
      for (Method m : methods) out.chosen[m] = report.chosen.at(method_name(m));
    } catch (const std::exception& e) {
      out.chosen.clear();
      out.failure = e.what();
    }
  });

  SelectionTable table;
  for (std::size_t idx = 0; idx < jobs.size(); ++idx) {
    if (outcomes[idx].failure) {
      table.failures.push_back({jobs[idx].n, jobs[idx].rep, *outcomes[idx].failure});
      continue;
    }
    for (const auto& [m, k] : outcomes[idx].chosen) {
      table.records.push_back({jobs[idx].n, jobs[idx].rep, m, k});
    }
  }
  for (int n : cfg.n_grid) {
    for (Method m : options.methods) {
      int count = 0, correct = 0;
      double total = 0.0;
      for (const SelectionRecord& r : table.records) {
        if (r.n != n || r.method != m) continue;
        ++count;
        correct += r.chosen == k0 ? 1 : 0;
        total += r.chosen;
      }
      table.summary.push_back({n, m, count > 0 ? static_cast<double>(correct) / count : kNaN,
                               count > 0 ? total / count : kNaN, count});
    }
  }
  return table;
}

std::vector<DendrogramReplicate> replicate_dendrograms(const Scenario& s, Eigen::Index n,
                                                       const ExperimentConfig& cfg, int k_over) {
  if (n < 1) throw InvalidInput("sample size must be at least 1");
  if (cfg.reps < 1) throw InvalidInput("need at least one replication");
  if (k_over < 2) throw InvalidInput("dendrograms need k_over >= 2");
  const Fitter fit = default_fitter(s, cfg.em);
  std::vector<std::optional<Dendrogram>> trees(static_cast<std::size_t>(cfg.reps));
  std::vector<std::string> errors(trees.size());
  parallel_for(trees.size(), resolve_threads(cfg.threads), [&](std::size_t rep) {
    try {
      const std::uint64_t rs = replication_seed(cfg.seed, static_cast<int>(n), static_cast<int>(rep));
      const Dataset data = sample_scenario(s, n, derive_seed(rs, {0}));
      trees[rep] = build_dendrogram(fit(data, k_over, derive_seed(rs, {2})));
    } catch (const std::exception& e) {
      errors[rep] = e.what();
    }
  });
  std::vector<DendrogramReplicate> out;
  for (std::size_t rep = 0; rep < trees.size(); ++rep) {
    if (trees[rep]) out.push_back({static_cast<int>(rep), std::move(*trees[rep])});
  }
  return out;
}

LineFit slope(const std::vector<std::pair<double, double>>& points) {
  const auto m = static_cast<double>(points.size());
  std::set<double> xs;
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    if (!std::isfinite(x) || !std::isfinite(y)) throw InvalidInput("slope needs finite points");
    xs.insert(x);
    sx += x;
    sy += y;
  }
  if (xs.size() < 2) throw InvalidInput("slope needs at least two distinct x values");
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  LineFit fit{sxy / sxx, 0.0, kNaN};
  fit.intercept = my - fit.slope * mx;
  if (points.size() > 2) {
    double ssr = 0.0;
    for (const auto& [x, y] : points) {
      const double e = y - fit.intercept - fit.slope * x;
      ssr += e * e;
    }
    fit.stderr_slope = std::sqrt(ssr / (m - 2.0) / sxx);
  }
  return fit;
}

PcaModel pca_fit(const Dataset& data, int q) {
  const Eigen::Index d = data.d();
  if (q < 1 || q > d) {
    throw InvalidInput("PCA needs 1 <= q <= d, got q = " + std::to_string(q) + ", d = " +
                       std::to_string(d));
  }
  if (data.n() < 2) throw InvalidInput("PCA needs at least two observations");
  PcaModel model;
  model.mean = data.rows().colwise().mean().transpose();
  const MatrixXd centered = data.rows().rowwise() - model.mean.transpose();
  const MatrixXd cov = centered.transpose() * centered / static_cast<double>(data.n() - 1);
  const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalFailure("covariance eigendecomposition failed");

  model.components.resize(d, q);
  model.eigenvalues.resize(q);
  for (int c = 0; c < q; ++c) {
    // Eigen sorts ascending; take from the top.
    const Eigen::Index src = d - 1 - c;
    VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    model.components.col(c) = v;
    model.eigenvalues(c) = eig.eigenvalues()(src);
  }
  return model;
}

Dataset pca_project(const Dataset& data, int q) {
  const PcaModel model = pca_fit(data, q);
  return Dataset((data.rows().rowwise() - model.mean.transpose()) * model.components);
}

}  // namespace mixdendro
