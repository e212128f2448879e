#include "mixdendro/measures.hpp"

#include "mixdendro/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace mixdendro {

const char* kernel_name(Kernel kernel) {
  return kernel == Kernel::EuclideanLocation ? "euclidean" : "gaussian";
}

EuclideanPoint::EuclideanPoint(VectorXd theta) : theta_(std::move(theta)) {
  if (theta_.size() == 0) throw InvalidInput("euclidean point has dimension 0");
  if (!theta_.allFinite()) throw InvalidInput("euclidean point has non-finite entries");
}

GaussianPoint::GaussianPoint(VectorXd mu, MatrixXd sigma, const EigenBounds& bounds)
    : mu_(std::move(mu)), sigma_(std::move(sigma)) {
  const Eigen::Index d = mu_.size();
  if (d == 0) throw InvalidInput("gaussian point has dimension 0");
  if (sigma_.rows() != d || sigma_.cols() != d) {
    throw DimensionMismatch("covariance is " + std::to_string(sigma_.rows()) + "x" +
                            std::to_string(sigma_.cols()) + ", mean has dimension " +
                            std::to_string(d));
  }
  if (!mu_.allFinite() || !sigma_.allFinite()) {
    throw InvalidInput("gaussian point has non-finite entries");
  }
  sigma_ = (0.5 * (sigma_ + sigma_.transpose())).eval();

  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(sigma_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  // Relative slack absorbs the rounding of eigenvalue clipping in EM.
  if (lo < bounds.lambda_min * (1.0 - 1e-9) || hi > bounds.lambda_max * (1.0 + 1e-9)) {
    throw InvalidInput("covariance eigenvalues [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "] outside [" +
                       std::to_string(bounds.lambda_min) + ", " +
                       std::to_string(bounds.lambda_max) + "]");
  }
}

Kernel kernel_of(const ParamPoint& point) {
  return std::holds_alternative<EuclideanPoint>(point) ? Kernel::EuclideanLocation
                                                       : Kernel::GaussianLocationScale;
}

Eigen::Index dim_of(const ParamPoint& point) {
  return std::visit([](const auto& p) { return p.dim(); }, point);
}

const VectorXd& location(const ParamPoint& point) {
  if (const auto* e = std::get_if<EuclideanPoint>(&point)) return e->theta();
  return std::get<GaussianPoint>(point).mu();
}

Atom::Atom(double w, ParamPoint p) : weight(w), point(std::move(p)) {
  if (!std::isfinite(weight) || weight < 0.0 || weight > 1.0 + kWeightSumTolerance) {
    throw InvalidInput("atom weight " + std::to_string(weight) + " outside [0, 1]");
  }
}

MixingMeasure::MixingMeasure(Kernel kernel, std::vector<Atom> atoms)
    : kernel_(kernel), dim_(0), atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidInput("mixing measure has no atoms");
  dim_ = dim_of(atoms_.front().point);
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (kernel_of(a.point) != kernel_) {
      throw InvalidInput(std::string("atom kernel differs from measure kernel ") +
                         kernel_name(kernel_));
    }
    if (dim_of(a.point) != dim_) throw DimensionMismatch("atoms have differing dimensions");
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw InvalidInput("weights sum to " + std::to_string(total) + ", expected 1");
  }
}

MixingMeasure MixingMeasure::euclidean(const std::vector<double>& weights,
                                       const std::vector<VectorXd>& thetas) {
  if (weights.size() != thetas.size()) throw InvalidInput("weights/thetas length mismatch");
  std::vector<Atom> atoms;
  atoms.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    atoms.emplace_back(weights[i], EuclideanPoint(thetas[i]));
  }
  return MixingMeasure(Kernel::EuclideanLocation, std::move(atoms));
}

MixingMeasure MixingMeasure::gaussian(const std::vector<double>& weights,
                                      const std::vector<VectorXd>& mus,
                                      const std::vector<MatrixXd>& sigmas,
                                      const EigenBounds& bounds) {
  if (weights.size() != mus.size() || weights.size() != sigmas.size()) {
    throw InvalidInput("weights/mus/sigmas length mismatch");
  }
  std::vector<Atom> atoms;
  atoms.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    atoms.emplace_back(weights[i], GaussianPoint(mus[i], sigmas[i], bounds));
  }
  return MixingMeasure(Kernel::GaussianLocationScale, std::move(atoms));
}

const VectorXd& MixingMeasure::location(std::size_t i) const {
  return mixdendro::location(atoms_[i].point);
}

double harmonic_weight(double p, double q) {
  if (p <= 0.0 || q <= 0.0) return 0.0;
  return p * q / (p + q);
}

namespace {

void check_same(const Atom& a, const Atom& b, Kernel kernel) {
  if (kernel_of(a.point) != kernel || kernel_of(b.point) != kernel) {
    throw InvalidInput(std::string("atom kernel does not match ") + kernel_name(kernel));
  }
  if (dim_of(a.point) != dim_of(b.point)) {
    throw DimensionMismatch("atoms have dimensions " + std::to_string(dim_of(a.point)) +
                            " and " + std::to_string(dim_of(b.point)));
  }
}

}  // namespace

double dissimilarity(const Atom& a, const Atom& b, Kernel kernel) {
  check_same(a, b, kernel);
  const double h = harmonic_weight(a.weight, b.weight);
  if (kernel == Kernel::EuclideanLocation) {
    const auto& ta = std::get<EuclideanPoint>(a.point).theta();
    const auto& tb = std::get<EuclideanPoint>(b.point).theta();
    return h * (ta - tb).squaredNorm();
  }
  const auto& ga = std::get<GaussianPoint>(a.point);
  const auto& gb = std::get<GaussianPoint>(b.point);
  return h * ((ga.mu() - gb.mu()).squaredNorm() + (ga.sigma() - gb.sigma()).norm());
}

Atom merge_atoms(const Atom& a, const Atom& b) {
  const Kernel kernel = kernel_of(a.point);
  check_same(a, b, kernel);
  const double mass = a.weight + b.weight;
  // Two massless atoms merge to their midpoint.
  const double wa = mass > 0.0 ? a.weight / mass : 0.5;
  const double wb = mass > 0.0 ? b.weight / mass : 0.5;

  if (kernel == Kernel::EuclideanLocation) {
    const auto& ta = std::get<EuclideanPoint>(a.point).theta();
    const auto& tb = std::get<EuclideanPoint>(b.point).theta();
    return Atom(mass, EuclideanPoint(wa * ta + wb * tb));
  }
  const auto& ga = std::get<GaussianPoint>(a.point);
  const auto& gb = std::get<GaussianPoint>(b.point);
  const VectorXd mu = wa * ga.mu() + wb * gb.mu();
  const VectorXd da = ga.mu() - mu;
  const VectorXd db = gb.mu() - mu;
  const MatrixXd sigma = wa * (ga.sigma() + da * da.transpose()) +
                         wb * (gb.sigma() + db * db.transpose());
  // The smallest eigenvalue is at least the smaller input floor; the spread
  // of the means may push the largest one past any input cap.
  return Atom(mass, GaussianPoint(mu, sigma, {0.0, std::numeric_limits<double>::infinity()}));
}

MixingMeasure merge_pair(const MixingMeasure& measure, std::size_t i, std::size_t j) {
  const std::size_t k = measure.size();
  if (i == j) throw InvalidInput("merge_pair needs two distinct indices");
  if (i >= k || j >= k) {
    throw InvalidInput("merge_pair index out of range for measure with " +
                       std::to_string(k) + " atoms");
  }
  const std::size_t lo = std::min(i, j);
  const std::size_t hi = std::max(i, j);
  std::vector<Atom> atoms;
  atoms.reserve(k - 1);
  for (std::size_t r = 0; r < k; ++r) {
    if (r == lo) {
      atoms.push_back(merge_atoms(measure[lo], measure[hi]));
    } else if (r != hi) {
      atoms.push_back(measure[r]);
    }
  }
  return MixingMeasure(measure.kernel(), std::move(atoms));
}

MomentSummary moment_summary(const MixingMeasure& measure) {
  const Eigen::Index d = measure.dim();
  MomentSummary out{0.0, VectorXd::Zero(d), MatrixXd::Zero(d, d)};
  for (const Atom& a : measure.atoms()) {
    const VectorXd& loc = location(a.point);
    out.mass += a.weight;
    out.m1 += a.weight * loc;
    out.m2 += a.weight * loc * loc.transpose();
    if (const auto* g = std::get_if<GaussianPoint>(&a.point)) out.m2 += a.weight * g->sigma();
  }
  return out;
}

}  // namespace mixdendro
