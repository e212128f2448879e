#include "mixdendro/transport.hpp"

#include "mixdendro/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mixdendro {

namespace {

struct BasicCell {
  std::size_t row;
  std::size_t col;
  double flow;
};

// Spanning-tree basis of the transportation polytope. Nodes 0..m-1 are
// rows, m..m+n-1 columns; each basic cell is an edge.
class TransportationSimplex {
 public:
  TransportationSimplex(const VectorXd& supply, const VectorXd& demand, const MatrixXd& cost)
      : m_(static_cast<std::size_t>(supply.size())),
        n_(static_cast<std::size_t>(demand.size())),
        cost_(cost),
        adjacency_(m_ + n_) {
    north_west_corner(supply, demand);
    const double scale = std::max(1.0, cost_.cwiseAbs().maxCoeff());
    tolerance_ = 1e-13 * scale;
  }

  TransportPlan solve() {
    const std::size_t max_pivots = 100 * (m_ + n_) * (m_ + n_) + 1000;
    std::size_t degenerate_run = 0;
    for (std::size_t pivot = 0; pivot < max_pivots; ++pivot) {
      rebuild_adjacency();
      compute_potentials();
      const bool bland = degenerate_run > 2 * (m_ + n_);
      std::size_t enter_row = 0;
      std::size_t enter_col = 0;
      if (!price(bland, enter_row, enter_col)) return plan();
      const double step = pivot_on(enter_row, enter_col);
      degenerate_run = step > 0.0 ? 0 : degenerate_run + 1;
    }
    throw NumericalFailure("transportation simplex exceeded its pivot limit");
  }

 private:
  void north_west_corner(VectorXd supply, VectorXd demand) {
    std::size_t i = 0;
    std::size_t j = 0;
    basis_.reserve(m_ + n_ - 1);
    while (true) {
      const double flow = std::max(0.0, std::min(supply(i), demand(j)));
      const bool row_first = supply(i) <= demand(j);
      basis_.push_back({i, j, flow});
      supply(i) -= flow;
      demand(j) -= flow;
      if (i == m_ - 1 && j == n_ - 1) break;
      if ((row_first && i < m_ - 1) || j == n_ - 1) {
        ++i;
      } else {
        ++j;
      }
    }
  }

  void rebuild_adjacency() {
    for (auto& list : adjacency_) list.clear();
    for (std::size_t e = 0; e < basis_.size(); ++e) {
      adjacency_[basis_[e].row].push_back(e);
      adjacency_[m_ + basis_[e].col].push_back(e);
    }
  }

  std::size_t other_end(std::size_t e, std::size_t node) const {
    const BasicCell& c = basis_[e];
    return node < m_ ? m_ + c.col : c.row;
  }

  void compute_potentials() {
    potential_.assign(m_ + n_, 0.0);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adjacency_[node]) {
        const std::size_t next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = 1;
        // u_row + v_col = cost on every basic cell.
        potential_[next] = cost_(basis_[e].row, basis_[e].col) - potential_[node];
        stack.push_back(next);
      }
    }
  }

  bool price(bool bland, std::size_t& enter_row, std::size_t& enter_col) const {
    double best = -tolerance_;
    bool found = false;
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double reduced = cost_(i, j) - potential_[i] - potential_[m_ + j];
        if (reduced < best) {
          enter_row = i;
          enter_col = j;
          found = true;
          if (bland) return true;
          best = reduced;
        }
      }
    }
    return found;
  }

  // Adds cell (row, col) to the basis, pushes flow around the cycle it
  // closes, and drops the blocking cell. Returns the step length.
  double pivot_on(std::size_t row, std::size_t col) {
    // Tree path from the column node back to the row node.
    std::vector<std::size_t> parent_edge(m_ + n_, kNone);
    std::vector<char> seen(m_ + n_, 0);
    std::vector<std::size_t> stack{row};
    seen[row] = 1;
    const std::size_t target = m_ + col;
    while (!stack.empty() && !seen[target]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t e : adjacency_[node]) {
        const std::size_t next = other_end(e, node);
        if (seen[next]) continue;
        seen[next] = 1;
        parent_edge[next] = e;
        stack.push_back(next);
      }
    }
    std::vector<std::size_t> path;  // starts at the edge touching the column
    for (std::size_t node = target; node != row;) {
      const std::size_t e = parent_edge[node];
      path.push_back(e);
      node = other_end(e, node);
    }

    // Even positions lose flow, odd positions gain it.
    std::size_t leaving = kNone;
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < path.size(); t += 2) {
      const BasicCell& c = basis_[path[t]];
      const bool better =
          c.flow < step ||
          (c.flow == step && (c.row * n_ + c.col) < (basis_[leaving].row * n_ + basis_[leaving].col));
      if (better) {
        step = c.flow;
        leaving = path[t];
      }
    }
    for (std::size_t t = 0; t < path.size(); ++t) {
      BasicCell& c = basis_[path[t]];
      c.flow = (t % 2 == 0) ? std::max(0.0, c.flow - step) : c.flow + step;
    }
    basis_[leaving] = {row, col, step};
    return step;
  }

  TransportPlan plan() const {
    TransportPlan out{MatrixXd::Zero(static_cast<Eigen::Index>(m_), static_cast<Eigen::Index>(n_)),
                      0.0};
    for (const BasicCell& c : basis_) {
      out.coupling(c.row, c.col) += c.flow;
      out.cost += c.flow * cost_(c.row, c.col);
    }
    return out;
  }

  static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  std::size_t m_;
  std::size_t n_;
  const MatrixXd& cost_;
  double tolerance_ = 0.0;
  std::vector<BasicCell> basis_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<double> potential_;
};

void check_compatible(const MixingMeasure& a, const MixingMeasure& b) {
  if (a.kernel() != b.kernel()) {
    throw InvalidInput(std::string("kernel mismatch: ") + kernel_name(a.kernel()) + " vs " +
                       kernel_name(b.kernel()));
  }
  if (a.dim() != b.dim()) {
    throw DimensionMismatch("measures have dimensions " + std::to_string(a.dim()) + " and " +
                            std::to_string(b.dim()));
  }
}

VectorXd weights_of(const MixingMeasure& g) {
  VectorXd w(static_cast<Eigen::Index>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) w(static_cast<Eigen::Index>(i)) = g.weight(i);
  return w;
}

// Squared ground distance; every metric here is sqrt of this quantity.
double squared_ground(const ParamPoint& x, const ParamPoint& y, GaussianGroundMetric metric) {
  if (const auto* ex = std::get_if<EuclideanPoint>(&x)) {
    return (ex->theta() - std::get<EuclideanPoint>(y).theta()).squaredNorm();
  }
  const auto& gx = std::get<GaussianPoint>(x);
  const auto& gy = std::get<GaussianPoint>(y);
  const double dmu = (gx.mu() - gy.mu()).squaredNorm();
  const double dsigma = (gx.sigma() - gy.sigma()).squaredNorm();
  return metric == GaussianGroundMetric::Concatenated ? dmu + dsigma : dmu + std::sqrt(dsigma);
}

double voronoi_cost(const ParamPoint& x, const ParamPoint& y) {
  if (const auto* ex = std::get_if<EuclideanPoint>(&x)) {
    return (ex->theta() - std::get<EuclideanPoint>(y).theta()).squaredNorm();
  }
  const auto& gx = std::get<GaussianPoint>(x);
  const auto& gy = std::get<GaussianPoint>(y);
  return (gx.mu() - gy.mu()).squaredNorm() + (gx.sigma() - gy.sigma()).norm();
}

void check_distinct(const MixingMeasure& truth) {
  for (std::size_t i = 0; i < truth.size(); ++i) {
    for (std::size_t j = i + 1; j < truth.size(); ++j) {
      if (voronoi_cost(truth[i].point, truth[j].point) == 0.0) {
        throw InvalidInput("reference measure has coinciding atoms " + std::to_string(i) +
                           " and " + std::to_string(j));
      }
    }
  }
}

}  // namespace

TransportPlan solve_transport(const VectorXd& supply, const VectorXd& demand,
                              const MatrixXd& cost) {
  if (supply.size() == 0 || demand.size() == 0) throw InvalidInput("empty transport marginal");
  if (cost.rows() != supply.size() || cost.cols() != demand.size()) {
    throw DimensionMismatch("cost matrix shape does not match marginals");
  }
  if (!supply.allFinite() || !demand.allFinite() || !cost.allFinite()) {
    throw InvalidInput("transport inputs must be finite");
  }
  if ((supply.array() < 0.0).any() || (demand.array() < 0.0).any()) {
    throw InvalidInput("transport marginals must be nonnegative");
  }
  const double total_supply = supply.sum();
  const double total_demand = demand.sum();
  if (std::abs(total_supply - total_demand) > 1e-9 * std::max(1.0, total_supply)) {
    throw InvalidInput("transport marginals have different totals");
  }
  // Rescale so the north-west corner closes exactly.
  const VectorXd balanced = total_demand > 0.0 ? VectorXd(demand * (total_supply / total_demand))
                                               : demand;
  TransportationSimplex simplex(supply, balanced, cost);
  return simplex.solve();
}

MatrixXd ground_distances(const MixingMeasure& a, const MixingMeasure& b,
                          GaussianGroundMetric metric) {
  check_compatible(a, b);
  MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      out(i, j) = std::sqrt(squared_ground(a[i].point, b[j].point, metric));
    }
  }
  return out;
}

TransportPlan optimal_plan(const MixingMeasure& a, const MixingMeasure& b, double r,
                           GaussianGroundMetric metric) {
  check_compatible(a, b);
  if (!(r >= 1.0) || !std::isfinite(r)) {
    throw InvalidInput("Wasserstein order r must be a finite real >= 1, got " + std::to_string(r));
  }
  MatrixXd cost(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double sq = squared_ground(a[i].point, b[j].point, metric);
      double c;
      if (r == 1.0) {
        c = std::sqrt(sq);
      } else if (r == 2.0) {
        c = sq;
      } else if (r == 6.0) {
        c = sq * sq * sq;
      } else {
        c = std::pow(sq, 0.5 * r);
      }
      cost(i, j) = c;
    }
  }
  return solve_transport(weights_of(a), weights_of(b), cost);
}

double wasserstein(const MixingMeasure& a, const MixingMeasure& b, double r,
                   GaussianGroundMetric metric) {
  const double cost = std::max(0.0, optimal_plan(a, b, r, metric).cost);
  if (r == 1.0) return cost;
  if (r == 2.0) return std::sqrt(cost);
  return std::pow(cost, 1.0 / r);
}

CellAssignment voronoi_assign(const MixingMeasure& measure, const MixingMeasure& reference) {
  check_compatible(measure, reference);
  CellAssignment out{reference, std::vector<std::vector<std::size_t>>(reference.size()),
                     std::vector<std::size_t>(measure.size(), 0)};
  for (std::size_t j = 0; j < measure.size(); ++j) {
    std::size_t best = 0;
    double best_cost = voronoi_cost(measure[j].point, reference[0].point);
    for (std::size_t i = 1; i < reference.size(); ++i) {
      const double c = voronoi_cost(measure[j].point, reference[i].point);
      if (c < best_cost) {
        best_cost = c;
        best = i;
      }
    }
    out.cells[best].push_back(j);
    out.owner[j] = best;
  }
  return out;
}

double divergence_D(const MixingMeasure& measure, const MixingMeasure& truth) {
  if (measure.kernel() != Kernel::EuclideanLocation ||
      truth.kernel() != Kernel::EuclideanLocation) {
    throw InvalidInput("divergence D requires the euclidean kernel");
  }
  check_distinct(truth);
  const CellAssignment cells = voronoi_assign(measure, truth);
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const VectorXd& center = truth.location(i);
    double mass = 0.0;
    double spread = 0.0;
    VectorXd first = VectorXd::Zero(truth.dim());
    for (std::size_t j : cells.cells[i]) {
      const double p = measure.weight(j);
      const VectorXd delta = measure.location(j) - center;
      mass += p;
      first += p * delta;
      spread += p * delta.squaredNorm();
    }
    total += std::abs(mass - truth.weight(i)) + first.norm() + spread;
  }
  return total;
}

double divergence_DG(const MixingMeasure& measure, const MixingMeasure& truth) {
  if (measure.kernel() != Kernel::GaussianLocationScale ||
      truth.kernel() != Kernel::GaussianLocationScale) {
    throw InvalidInput("divergence D_G requires the gaussian kernel");
  }
  check_distinct(truth);
  const CellAssignment cells = voronoi_assign(measure, truth);
  const Eigen::Index d = truth.dim();
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& center = std::get<GaussianPoint>(truth[i].point);
    const auto& cell = cells.cells[i];
    if (cell.empty()) {
      total += truth.weight(i);
      continue;
    }
    const double order = rbar(static_cast<int>(cell.size()));
    double mass = 0.0;
    double local = 0.0;
    VectorXd first = VectorXd::Zero(d);
    MatrixXd second = MatrixXd::Zero(d, d);
    for (std::size_t j : cell) {
      const auto& atom = std::get<GaussianPoint>(measure[j].point);
      const double p = measure.weight(j);
      const VectorXd dmu = atom.mu() - center.mu();
      const MatrixXd dsigma = atom.sigma() - center.sigma();
      mass += p;
      local += p * (std::pow(dmu.norm(), order) + std::pow(dsigma.norm(), 0.5 * order));
      first += p * dmu;
      second += p * (dmu * dmu.transpose() + dsigma);
    }
    total += std::abs(mass - truth.weight(i)) + local + first.norm() + second.norm();
  }
  return total;
}

int rbar(int m) {
  switch (m) {
    case 1: return 2;
    case 2: return 4;
    case 3: return 6;
    default: break;
  }
  if (m < 1) throw InvalidInput("rbar is defined for m >= 1, got " + std::to_string(m));
  throw UnsupportedOrder("rbar(" + std::to_string(m) +
                         ") is not known exactly (only rbar(4) >= 7 is established)");
}

}  // namespace mixdendro
