#pragma once

#include "mixdendro/measures.hpp"

#include <cstdint>
#include <vector>

namespace mixdendro {

/// n x d matrix of observations, one per row, all entries finite.
class Dataset {
 public:
  explicit Dataset(MatrixXd rows);

  const MatrixXd& rows() const { return rows_; }
  Eigen::Index n() const { return rows_.rows(); }
  Eigen::Index d() const { return rows_.cols(); }

 private:
  MatrixXd rows_;
};

enum class CovarianceMode {
  /// Unit covariances, known; only weights and means are estimated.
  FixedIdentity,
  Full,
};

enum class InitMethod { KMeansPlusPlus, RandomResponsibility };

struct EmConfig {
  int k = 1;
  int restarts = 8;
  int max_iters = 500;
  double tol_loglik = 1e-7;
  double cov_floor = 1e-6;
  double cov_cap = 1e6;
  /// Lower bound c0 on every mixing proportion; 0 disables it. c0 * k < 1.
  double prop_floor = 0.0;
  InitMethod init = InitMethod::KMeansPlusPlus;
  std::uint64_t seed = 0;
  CovarianceMode covariance_mode = CovarianceMode::Full;
};

void validate(const EmConfig& cfg);

struct FitResult {
  MixingMeasure measure;
  double avg_loglik;
  int iters;
  bool converged;
  int best_restart;
  /// Average log-likelihood of the parameters after 0, 1, ..., iters M-steps.
  std::vector<double> loglik_trace;
  /// projected[t] is set when the M-step producing trace entry t clipped a
  /// covariance eigenvalue or raised a proportion to the floor.
  std::vector<bool> projected;
  /// Final average log-likelihood of every restart, in restart order.
  std::vector<double> restart_logliks;
};

/// log sum_i p_i f(x | atom_i). Euclidean atoms are unit-covariance normals.
double log_density(const MixingMeasure& measure, const VectorXd& x);

/// (1/n) sum_i log_density(measure, x_i).
double avg_loglik(const MixingMeasure& measure, const Dataset& data);

/// Posterior component probabilities, n x k.
MatrixXd responsibilities(const MixingMeasure& measure, const Dataset& data);

/// Clamp-and-renormalize projection onto {w : sum w = 1, w_i >= floor}.
VectorXd project_weights(const VectorXd& weights, double floor);

/// Symmetric matrix with eigenvalues clipped to [lo, hi].
MatrixXd clip_eigenvalues(const MatrixXd& sigma, double lo, double hi);

/// Best-of-restarts EM for a k-component Gaussian mixture.
FitResult fit_em(const Dataset& data, const EmConfig& cfg);

/// k-means++ seeding: indices of k rows of `data`.
std::vector<Eigen::Index> kmeans_plus_plus(const Dataset& data, int k, std::uint64_t seed);

}  // namespace mixdendro
