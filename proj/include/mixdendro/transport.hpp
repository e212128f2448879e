#pragma once

#include "mixdendro/measures.hpp"

#include <cstddef>
#include <vector>

namespace mixdendro {

/// Ground metric between two Gaussian parameters (mu, Sigma).
enum class GaussianGroundMetric {
  /// Euclidean norm of the stacked vector (mu, vec(Sigma)).
  Concatenated,
  /// sqrt(|dmu|^2 + |dSigma|_F), the root of the Voronoi cost.
  VoronoiRoot,
};

struct TransportPlan {
  MatrixXd coupling;  // rows: source atoms, columns: target atoms
  double cost = 0.0;  // sum of coupling .* cost matrix
};

/// Exact solution of the discrete transportation problem
///   min <q, cost>  s.t.  q 1 = supply, q^T 1 = demand, q >= 0
/// by the transportation simplex (north-west corner start, Dantzig pricing
/// with a fallback to Bland's rule on runs of degenerate pivots).
/// `supply` and `demand` must be nonnegative with equal totals.
TransportPlan solve_transport(const VectorXd& supply, const VectorXd& demand,
                              const MatrixXd& cost);

/// Pairwise ground distances between the atoms of two measures.
MatrixXd ground_distances(const MixingMeasure& a, const MixingMeasure& b,
                          GaussianGroundMetric metric = GaussianGroundMetric::Concatenated);

/// Optimal coupling for the cost |x - y|^r. `plan.cost` is W_r^r.
TransportPlan optimal_plan(const MixingMeasure& a, const MixingMeasure& b, double r,
                           GaussianGroundMetric metric = GaussianGroundMetric::Concatenated);

/// Wasserstein-r distance between two discrete measures, r >= 1.
double wasserstein(const MixingMeasure& a, const MixingMeasure& b, double r,
                   GaussianGroundMetric metric = GaussianGroundMetric::Concatenated);

/// Partition of the atoms of a measure into the Voronoi cells of the atoms
/// of a reference measure.
struct CellAssignment {
  MixingMeasure reference;
  std::vector<std::vector<std::size_t>> cells;  // one per reference atom
  std::vector<std::size_t> owner;               // cell index of each assigned atom
};

/// Assign each atom of `measure` to the nearest reference atom, using
/// |theta - theta0| for Euclidean kernels and |dmu|^2 + |dSigma|_F for
/// Gaussians. Ties go to the lowest reference index.
CellAssignment voronoi_assign(const MixingMeasure& measure, const MixingMeasure& reference);

/// Voronoi divergence for strongly identifiable kernels. Per cell: mass
/// discrepancy + |aggregated first moment| + aggregated squared distance.
double divergence_D(const MixingMeasure& measure, const MixingMeasure& truth);

/// Voronoi divergence for location-scale Gaussians, with cell-size
/// dependent exponents from rbar().
double divergence_DG(const MixingMeasure& measure, const MixingMeasure& truth);

/// Order governing the weak-identifiability rate of m atoms fitted to one
/// true Gaussian component. Known values only: 1 -> 2, 2 -> 4, 3 -> 6.
int rbar(int m);

}  // namespace mixdendro
