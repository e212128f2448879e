#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <variant>
#include <vector>

namespace mixdendro {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Kernel { EuclideanLocation, GaussianLocationScale };

const char* kernel_name(Kernel kernel);

/// Admissible eigenvalue range for covariance parameters. The parameter
/// space is compact, so covariances are kept away from singularity and
/// from blowing up.
struct EigenBounds {
  double lambda_min = 1e-6;
  double lambda_max = 1e6;
};

/// Weights of a measure must sum to one within this tolerance.
inline constexpr double kWeightSumTolerance = 1e-12;

class EuclideanPoint {
 public:
  explicit EuclideanPoint(VectorXd theta);

  const VectorXd& theta() const { return theta_; }
  Eigen::Index dim() const { return theta_.size(); }

 private:
  VectorXd theta_;
};

/// (mean, covariance) parameter. The covariance is symmetrized on
/// construction and its spectrum checked against `bounds`.
class GaussianPoint {
 public:
  GaussianPoint(VectorXd mu, MatrixXd sigma, const EigenBounds& bounds = {});

  const VectorXd& mu() const { return mu_; }
  const MatrixXd& sigma() const { return sigma_; }
  Eigen::Index dim() const { return mu_.size(); }

 private:
  VectorXd mu_;
  MatrixXd sigma_;
};

using ParamPoint = std::variant<EuclideanPoint, GaussianPoint>;

Kernel kernel_of(const ParamPoint& point);
Eigen::Index dim_of(const ParamPoint& point);
/// theta for Euclidean points, mu for Gaussian points.
const VectorXd& location(const ParamPoint& point);

struct Atom {
  Atom(double weight, ParamPoint point);

  double weight;
  ParamPoint point;
};

/// A discrete mixing measure: an ordered list of weighted atoms sharing
/// one kernel and one dimension. Atoms need not be distinct, and atoms of
/// zero mass are admitted so vanishing components can be represented.
class MixingMeasure {
 public:
  MixingMeasure(Kernel kernel, std::vector<Atom> atoms);

  static MixingMeasure euclidean(const std::vector<double>& weights,
                                 const std::vector<VectorXd>& thetas);
  static MixingMeasure gaussian(const std::vector<double>& weights,
                                const std::vector<VectorXd>& mus,
                                const std::vector<MatrixXd>& sigmas,
                                const EigenBounds& bounds = {});

  Kernel kernel() const { return kernel_; }
  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return atoms_.size(); }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const Atom& operator[](std::size_t i) const { return atoms_[i]; }
  double weight(std::size_t i) const { return atoms_[i].weight; }
  const VectorXd& location(std::size_t i) const;

 private:
  Kernel kernel_;
  Eigen::Index dim_;
  std::vector<Atom> atoms_;
};

/// 1 / (p^-1 + q^-1), extended by continuity to zero when either mass is 0.
double harmonic_weight(double p, double q);

/// Merge dissimilarity between two atoms. Euclidean: harmonic weight times
/// squared distance. Gaussian: harmonic weight times
/// (|mu_a - mu_b|^2 + |Sigma_a - Sigma_b|_F).
double dissimilarity(const Atom& a, const Atom& b, Kernel kernel);

/// Moment-preserving merge of two atoms: masses add, locations average by
/// mass, and for Gaussians the covariance absorbs the spread of the means.
Atom merge_atoms(const Atom& a, const Atom& b);

/// Measure with atoms i and j replaced by their merge. The merged atom
/// occupies slot min(i, j); the remaining atoms keep their order.
MixingMeasure merge_pair(const MixingMeasure& measure, std::size_t i, std::size_t j);

struct MomentSummary {
  double mass = 0.0;
  VectorXd m1;
  MatrixXd m2;
};

/// mass = sum p, m1 = sum p*theta, and m2 = sum p*theta*theta^T (Euclidean)
/// or sum p*(Sigma + mu*mu^T) (Gaussian).
MomentSummary moment_summary(const MixingMeasure& measure);

}  // namespace mixdendro
