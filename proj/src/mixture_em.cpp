#include "mixdendro/mixture_em.hpp"

#include "mixdendro/errors.hpp"
#include "mixdendro/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace mixdendro {

Dataset::Dataset(MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1) throw InvalidInput("dataset has no observations");
  if (rows_.cols() < 1) throw InvalidInput("dataset has no columns");
  if (!rows_.allFinite()) throw InvalidInput("dataset contains non-finite entries");
}

void validate(const EmConfig& cfg) {
  if (cfg.k < 1) throw InvalidInput("EM needs k >= 1");
  if (cfg.restarts < 1) throw InvalidInput("EM needs at least one restart");
  if (cfg.max_iters < 1) throw InvalidInput("EM needs max_iters >= 1");
  if (!(cfg.tol_loglik > 0.0)) throw InvalidInput("EM tolerance must be positive");
  if (!(cfg.cov_floor > 0.0) || !(cfg.cov_cap >= cfg.cov_floor)) {
    throw InvalidInput("covariance bounds need 0 < floor <= cap");
  }
  if (!(cfg.prop_floor >= 0.0) || cfg.prop_floor * cfg.k >= 1.0) {
    throw InvalidInput("proportion floor c0 must satisfy 0 <= c0 and c0 * k < 1");
  }
}

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

// Working parameters; means are stored column-wise (d x k).
struct Params {
  VectorXd weights;
  MatrixXd means;
  std::vector<MatrixXd> covs;  // empty in identity mode
};

Params params_of(const MixingMeasure& g) {
  const auto k = static_cast<Eigen::Index>(g.size());
  Params p{VectorXd(k), MatrixXd(g.dim(), k), {}};
  for (Eigen::Index i = 0; i < k; ++i) {
    const Atom& a = g[static_cast<std::size_t>(i)];
    p.weights(i) = a.weight;
    p.means.col(i) = location(a.point);
    if (const auto* gp = std::get_if<GaussianPoint>(&a.point)) p.covs.push_back(gp->sigma());
  }
  return p;
}

// k x n matrix of log(w_j) + log f(x_i | component j); xt is d x n.
MatrixXd log_terms(const Params& p, const MatrixXd& xt) {
  const Eigen::Index k = p.weights.size();
  const Eigen::Index d = xt.rows();
  MatrixXd out(k, xt.cols());
  for (Eigen::Index j = 0; j < k; ++j) {
    const double log_w = p.weights(j) > 0.0 ? std::log(p.weights(j))
                                            : -std::numeric_limits<double>::infinity();
    MatrixXd centered = xt.colwise() - p.means.col(j);
    double log_det = 0.0;
    if (!p.covs.empty()) {
      Eigen::LLT<MatrixXd> llt(p.covs[static_cast<std::size_t>(j)]);
      if (llt.info() != Eigen::Success) {
        throw NumericalFailure("covariance of component " + std::to_string(j) +
                               " is not positive definite");
      }
      llt.matrixL().solveInPlace(centered);
      log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    }
    out.row(j) = (-0.5 * (centered.colwise().squaredNorm().array() +
                          (static_cast<double>(d) * kLog2Pi + log_det)) +
                  log_w)
                     .matrix();
  }
  return out;
}

// Column-wise log-sum-exp of a k x n matrix.
VectorXd log_sum_exp(const MatrixXd& terms) {
  VectorXd out(terms.cols());
  for (Eigen::Index i = 0; i < terms.cols(); ++i) {
    const double top = terms.col(i).maxCoeff();
    if (!std::isfinite(top)) {
      out(i) = top;
      continue;
    }
    out(i) = top + std::log((terms.col(i).array() - top).exp().sum());
  }
  return out;
}

struct EStep {
  MatrixXd resp;  // k x n
  double avg_loglik;
};

EStep e_step(const Params& p, const MatrixXd& xt) {
  MatrixXd terms = log_terms(p, xt);
  const VectorXd lse = log_sum_exp(terms);
  for (Eigen::Index i = 0; i < terms.cols(); ++i) {
    terms.col(i) = (terms.col(i).array() - lse(i)).exp().matrix();
  }
  return {std::move(terms), lse.mean()};
}

MatrixXd data_covariance(const MatrixXd& xt) {
  const MatrixXd centered = xt.colwise() - xt.rowwise().mean();
  return centered * centered.transpose() / static_cast<double>(xt.cols());
}

// Returns true when a covariance or proportion had to be projected.
bool m_step(const MatrixXd& resp, const MatrixXd& xt, const EmConfig& cfg, Params& p) {
  const Eigen::Index k = resp.rows();
  const auto n = static_cast<double>(xt.cols());
  const VectorXd counts = resp.rowwise().sum();
  bool projected = false;
  p.weights = counts / n;
  for (Eigen::Index j = 0; j < k; ++j) {
    // A component that owns no data keeps its previous location and shape.
    if (counts(j) <= 1e-10) continue;
    p.means.col(j) = xt * resp.row(j).transpose() / counts(j);
    if (cfg.covariance_mode == CovarianceMode::Full) {
      const MatrixXd centered = xt.colwise() - p.means.col(j);
      const MatrixXd cov = centered * resp.row(j).asDiagonal() * centered.transpose() / counts(j);
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (cov + cov.transpose()));
      const auto& ev = eig.eigenvalues();
      if (ev.minCoeff() < cfg.cov_floor || ev.maxCoeff() > cfg.cov_cap) {
        projected = true;
        p.covs[static_cast<std::size_t>(j)] = clip_eigenvalues(cov, cfg.cov_floor, cfg.cov_cap);
      } else {
        p.covs[static_cast<std::size_t>(j)] = 0.5 * (cov + cov.transpose());
      }
    }
  }
  p.weights /= p.weights.sum();
  if (cfg.prop_floor > 0.0 && p.weights.minCoeff() < cfg.prop_floor) {
    p.weights = project_weights(p.weights, cfg.prop_floor);
    projected = true;
  }
  return projected;
}

Params initialize(const MatrixXd& xt, const Dataset& data, const EmConfig& cfg,
                  std::uint64_t seed) {
  const Eigen::Index d = xt.rows();
  const Eigen::Index k = cfg.k;
  Params p{VectorXd::Constant(k, 1.0 / static_cast<double>(k)), MatrixXd(d, k), {}};
  const bool full = cfg.covariance_mode == CovarianceMode::Full;
  const MatrixXd global = full ? clip_eigenvalues(data_covariance(xt), cfg.cov_floor, cfg.cov_cap)
                               : MatrixXd();
  if (full) p.covs.assign(static_cast<std::size_t>(k), global);

  if (cfg.init == InitMethod::KMeansPlusPlus) {
    const auto seeds = kmeans_plus_plus(data, cfg.k, seed);
    for (Eigen::Index j = 0; j < k; ++j) p.means.col(j) = xt.col(seeds[static_cast<std::size_t>(j)]);
    return p;
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd resp(k, xt.cols());
  for (Eigen::Index i = 0; i < xt.cols(); ++i) {
    for (Eigen::Index j = 0; j < k; ++j) resp(j, i) = unit(rng) + 1e-12;
    resp.col(i) /= resp.col(i).sum();
  }
  p.means.setZero();
  EmConfig unfloored = cfg;
  unfloored.prop_floor = 0.0;
  m_step(resp, xt, unfloored, p);
  if (cfg.prop_floor > 0.0) p.weights = project_weights(p.weights, cfg.prop_floor);
  return p;
}

struct RestartOutcome {
  Params params;
  double avg_loglik;
  int iters;
  bool converged;
  std::vector<double> trace;
  std::vector<bool> projected;
};

RestartOutcome run_restart(const MatrixXd& xt, const Dataset& data, const EmConfig& cfg,
                           std::uint64_t seed) {
  RestartOutcome out{initialize(xt, data, cfg, seed), 0.0, 0, false, {}, {false}};
  while (true) {
    EStep e = e_step(out.params, xt);
    out.trace.push_back(e.avg_loglik);
    out.avg_loglik = e.avg_loglik;
    if (!std::isfinite(e.avg_loglik)) break;
    const std::size_t t = out.trace.size();
    if (t >= 2 && out.trace[t - 1] - out.trace[t - 2] < cfg.tol_loglik) {
      out.converged = true;
      break;
    }
    if (out.iters == cfg.max_iters) break;
    out.projected.push_back(m_step(e.resp, xt, cfg, out.params));
    ++out.iters;
  }
  return out;
}

Dataset canonical_order(const Dataset& data) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(data.n()));
  std::iota(idx.begin(), idx.end(), 0);
  const MatrixXd& x = data.rows();
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(a, c) != x(b, c)) return x(a, c) < x(b, c);
    }
    return false;
  });
  MatrixXd out(x.rows(), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
  return Dataset(std::move(out));
}

}  // namespace

double log_density(const MixingMeasure& measure, const VectorXd& x) {
  if (x.size() != measure.dim()) {
    throw DimensionMismatch("point has dimension " + std::to_string(x.size()) +
                            ", measure has dimension " + std::to_string(measure.dim()));
  }
  return log_sum_exp(log_terms(params_of(measure), x))(0);
}

double avg_loglik(const MixingMeasure& measure, const Dataset& data) {
  if (data.d() != measure.dim()) {
    throw DimensionMismatch("data has dimension " + std::to_string(data.d()) +
                            ", measure has dimension " + std::to_string(measure.dim()));
  }
  return log_sum_exp(log_terms(params_of(measure), data.rows().transpose())).mean();
}

MatrixXd responsibilities(const MixingMeasure& measure, const Dataset& data) {
  if (data.d() != measure.dim()) throw DimensionMismatch("data and measure dimensions differ");
  return e_step(params_of(measure), data.rows().transpose()).resp.transpose();
}

VectorXd project_weights(const VectorXd& weights, double floor) {
  const Eigen::Index k = weights.size();
  if (floor * static_cast<double>(k) >= 1.0) throw InvalidInput("proportion floor too large");
  std::vector<bool> pinned(static_cast<std::size_t>(k), false);
  VectorXd out = weights;
  // Pinning one weight can push others below the floor; repeat until stable.
  for (Eigen::Index round = 0; round <= k; ++round) {
    double free_mass = 1.0;
    double free_total = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (pinned[static_cast<std::size_t>(j)]) {
        free_mass -= floor;
      } else {
        free_total += weights(j);
      }
    }
    bool changed = false;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (pinned[static_cast<std::size_t>(j)]) {
        out(j) = floor;
        continue;
      }
      out(j) = free_total > 0.0 ? weights(j) * free_mass / free_total : free_mass;
      if (out(j) < floor) {
        pinned[static_cast<std::size_t>(j)] = true;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return out;
}

MatrixXd clip_eigenvalues(const MatrixXd& sigma, double lo, double hi) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (sigma + sigma.transpose()));
  const VectorXd clipped = eig.eigenvalues().cwiseMax(lo).cwiseMin(hi);
  const MatrixXd out = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

std::vector<Eigen::Index> kmeans_plus_plus(const Dataset& data, int k, std::uint64_t seed) {
  const Eigen::Index n = data.n();
  if (k < 1 || k > n) throw InvalidInput("k-means++ needs 1 <= k <= n");
  Rng rng(seed);
  std::vector<Eigen::Index> centers;
  centers.push_back(std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng));
  VectorXd nearest = (data.rows().rowwise() - data.rows().row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= nearest(i);
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
    }
    centers.push_back(pick);
    nearest = nearest.cwiseMin(
        (data.rows().rowwise() - data.rows().row(pick)).rowwise().squaredNorm());
  }
  return centers;
}

FitResult fit_em(const Dataset& data, const EmConfig& cfg) {
  validate(cfg);
  if (data.n() < cfg.k) {
    throw InvalidInput("EM with k = " + std::to_string(cfg.k) + " needs at least k observations, got " +
                       std::to_string(data.n()));
  }
  // Rows are visited in lexicographic order, so the fit does not depend on
  // how the observations happen to be ordered.
  const Dataset sorted = canonical_order(data);
  const MatrixXd xt = sorted.rows().transpose();

  std::vector<double> finals;
  int best = -1;
  RestartOutcome winner;
  for (int r = 0; r < cfg.restarts; ++r) {
    RestartOutcome outcome =
        run_restart(xt, sorted, cfg, derive_seed(cfg.seed, {static_cast<std::uint64_t>(r)}));
    finals.push_back(outcome.avg_loglik);
    if (std::isfinite(outcome.avg_loglik) && (best < 0 || outcome.avg_loglik > winner.avg_loglik)) {
      best = r;
      winner = std::move(outcome);
    }
  }
  if (best < 0) throw NumericalFailure("EM produced a non-finite likelihood in every restart");

  const Params& p = winner.params;
  std::vector<double> weights(p.weights.data(), p.weights.data() + p.weights.size());
  const double total = p.weights.sum();
  for (double& w : weights) w /= total;
  std::vector<VectorXd> means;
  for (Eigen::Index j = 0; j < p.means.cols(); ++j) means.push_back(p.means.col(j));

  MixingMeasure measure =
      cfg.covariance_mode == CovarianceMode::FixedIdentity
          ? MixingMeasure::euclidean(weights, means)
          : MixingMeasure::gaussian(weights, means, p.covs, {cfg.cov_floor, cfg.cov_cap});
  return FitResult{std::move(measure),     winner.avg_loglik,     winner.iters,
                   winner.converged,       best,                  std::move(winner.trace),
                   std::move(winner.projected), std::move(finals)};
}

}  // namespace mixdendro
