#pragma once

// Shared generators and brute-force oracles for the test binaries.

#include "mixdendro/measures.hpp"
#include "mixdendro/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace mixdendro::testing {

inline std::vector<double> dirichlet_ones(Rng& rng, int k) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(static_cast<std::size_t>(k));
  for (double& x : w) x = e(rng) + 1e-300;
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

inline VectorXd normal_vector(Rng& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  VectorXd v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = z(rng);
  return v;
}

inline MatrixXd random_spd(Rng& rng, Eigen::Index d, double ridge = 0.1) {
  std::normal_distribution<double> z(0.0, 1.0);
  MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = z(rng);
  }
  return a * a.transpose() / static_cast<double>(d) + ridge * MatrixXd::Identity(d, d);
}

inline MixingMeasure random_euclidean(Rng& rng, int k, Eigen::Index d, double scale = 1.0) {
  std::vector<VectorXd> thetas;
  for (int i = 0; i < k; ++i) thetas.push_back(normal_vector(rng, d, scale));
  return MixingMeasure::euclidean(dirichlet_ones(rng, k), thetas);
}

inline MixingMeasure random_gaussian(Rng& rng, int k, Eigen::Index d, double scale = 1.0) {
  std::vector<VectorXd> mus;
  std::vector<MatrixXd> sigmas;
  for (int i = 0; i < k; ++i) {
    mus.push_back(normal_vector(rng, d, scale));
    sigmas.push_back(random_spd(rng, d));
  }
  return MixingMeasure::gaussian(dirichlet_ones(rng, k), mus, sigmas);
}

/// Same atoms in the order given by perm.
inline MixingMeasure permuted(const MixingMeasure& g, const std::vector<std::size_t>& perm) {
  std::vector<Atom> atoms;
  for (std::size_t i : perm) atoms.push_back(g[i]);
  return MixingMeasure(g.kernel(), std::move(atoms));
}

inline std::vector<std::size_t> random_permutation(Rng& rng, std::size_t k) {
  std::vector<std::size_t> p(k);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

/// W_r^r between two 1-d measures through the quantile coupling, which is
/// optimal on the line for every convex cost.
inline double quantile_oracle(std::vector<std::pair<double, double>> a,
                              std::vector<std::pair<double, double>> b, double r) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double ta = std::accumulate(a.begin(), a.end(), 0.0,
                                    [](double s, const auto& p) { return s + p.second; });
  const double tb = std::accumulate(b.begin(), b.end(), 0.0,
                                    [](double s, const auto& p) { return s + p.second; });
  std::size_t i = 0, j = 0;
  double ra = a[0].second / ta, rb = b[0].second / tb;
  double total = 0.0;
  while (i < a.size() && j < b.size()) {
    const double m = std::min(ra, rb);
    total += m * std::pow(std::abs(a[i].first - b[j].first), r);
    ra -= m;
    rb -= m;
    if (ra <= 1e-15) {
      if (++i < a.size()) ra = a[i].second / ta;
    }
    if (rb <= 1e-15) {
      if (++j < b.size()) rb = b[j].second / tb;
    }
  }
  return total;
}

inline std::vector<std::pair<double, double>> support_of(const MixingMeasure& g) {
  std::vector<std::pair<double, double>> s;
  for (std::size_t i = 0; i < g.size(); ++i) s.emplace_back(g.location(i)(0), g.weight(i));
  return s;
}

/// Bitwise equality of two measures.
inline bool identical(const MixingMeasure& a, const MixingMeasure& b) {
  if (a.kernel() != b.kernel() || a.size() != b.size() || a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.weight(i) != b.weight(i)) return false;
    if (a.location(i) != b.location(i)) return false;
    if (const auto* ga = std::get_if<GaussianPoint>(&a[i].point)) {
      if (ga->sigma() != std::get<GaussianPoint>(b[i].point).sigma()) return false;
    }
  }
  return true;
}

}  // namespace mixdendro::testing
