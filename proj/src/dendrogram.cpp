#include "mixdendro/dendrogram.hpp"

#include "mixdendro/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>

namespace mixdendro {

const char* linkage_name(Linkage linkage) {
  return linkage == Linkage::Centroid ? "centroid" : "single";
}

Dendrogram::Dendrogram(MixingMeasure base, std::vector<MergeRecord> records, Linkage linkage)
    : base_(std::move(base)), records_(std::move(records)), linkage_(linkage) {
  const int k = order();
  if (static_cast<int>(records_.size()) != k - 1) {
    throw InvalidInput("dendrogram over " + std::to_string(k) + " atoms needs " +
                       std::to_string(k - 1) + " records, got " +
                       std::to_string(records_.size()));
  }
  for (std::size_t t = 0; t < records_.size(); ++t) {
    const MergeRecord& r = records_[t];
    const int level = k - static_cast<int>(t);
    if (r.level != level) {
      throw InvalidInput("record " + std::to_string(t) + " has level " +
                         std::to_string(r.level) + ", expected " + std::to_string(level));
    }
    if (r.left >= r.right || r.right >= static_cast<std::size_t>(level)) {
      throw InvalidInput("record at level " + std::to_string(level) + " has invalid indices");
    }
    if (!(r.height >= 0.0)) throw InvalidInput("negative dendrogram height");
  }
}

double Dendrogram::height(int level) const {
  const int k = order();
  if (level < 2 || level > k) {
    throw InvalidInput("height level " + std::to_string(level) + " outside [2, " +
                       std::to_string(k) + "]");
  }
  return records_[static_cast<std::size_t>(k - level)].height;
}

namespace {

struct PairMin {
  std::size_t i = 0;
  std::size_t j = 1;
  double value = std::numeric_limits<double>::infinity();
};

// Strict comparison in row-major order keeps the lexicographically
// smallest pair on ties.
PairMin minimal_pair(const std::vector<std::vector<double>>& d) {
  PairMin best;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = i + 1; j < d.size(); ++j) {
      if (d[i][j] < best.value) best = {i, j, d[i][j]};
    }
  }
  return best;
}

std::vector<std::vector<double>> pairwise_dissimilarity(const MixingMeasure& g) {
  const std::size_t k = g.size();
  std::vector<std::vector<double>> d(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      d[i][j] = d[j][i] = dissimilarity(g[i], g[j], g.kernel());
    }
  }
  return d;
}

}  // namespace

Dendrogram build_dendrogram(const MixingMeasure& measure) {
  MixingMeasure current = measure;
  std::vector<std::vector<double>> d = pairwise_dissimilarity(current);
  std::vector<MergeRecord> records;
  records.reserve(measure.size() > 0 ? measure.size() - 1 : 0);

  for (int level = static_cast<int>(measure.size()); level >= 2; --level) {
    const PairMin best = minimal_pair(d);
    current = merge_pair(current, best.i, best.j);
    records.push_back({level, best.i, best.j, current[best.i], best.value});

    // Drop the absorbed atom, then refresh the merged atom's row and column.
    d.erase(d.begin() + static_cast<std::ptrdiff_t>(best.j));
    for (auto& row : d) row.erase(row.begin() + static_cast<std::ptrdiff_t>(best.j));
    for (std::size_t r = 0; r < current.size(); ++r) {
      if (r == best.i) continue;
      d[best.i][r] = d[r][best.i] = dissimilarity(current[best.i], current[r], current.kernel());
    }
  }
  return Dendrogram(measure, std::move(records), Linkage::Centroid);
}

Dendrogram single_linkage_dendrogram(const MixingMeasure& measure) {
  if (measure.kernel() != Kernel::EuclideanLocation) {
    throw InvalidInput("single linkage is defined for the euclidean kernel only");
  }
  const std::size_t k = measure.size();
  const std::vector<std::vector<double>> d = pairwise_dissimilarity(measure);
  // block_of[a] is the slot, within the current measure, of the block
  // containing original atom a.
  std::vector<std::size_t> block_of(k);
  std::iota(block_of.begin(), block_of.end(), 0);

  MixingMeasure current = measure;
  std::vector<MergeRecord> records;
  for (int level = static_cast<int>(k); level >= 2; --level) {
    PairMin best;
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = a + 1; b < k; ++b) {
        if (block_of[a] != block_of[b] && d[a][b] < best.value) best = {a, b, d[a][b]};
      }
    }
    const std::size_t lo = std::min(block_of[best.i], block_of[best.j]);
    const std::size_t hi = std::max(block_of[best.i], block_of[best.j]);
    current = merge_pair(current, lo, hi);
    records.push_back({level, lo, hi, current[lo], best.value});
    for (std::size_t& slot : block_of) {
      if (slot == hi) {
        slot = lo;
      } else if (slot > hi) {
        --slot;
      }
    }
  }
  return Dendrogram(measure, std::move(records), Linkage::SingleLinkage);
}

MixingMeasure measure_at_level(const Dendrogram& tree, int kappa) {
  const int k = tree.order();
  if (kappa < 1 || kappa > k) {
    throw InvalidInput("level " + std::to_string(kappa) + " outside [1, " + std::to_string(k) +
                       "]");
  }
  MixingMeasure current = tree.base();
  for (int t = 0; t < k - kappa; ++t) {
    const MergeRecord& r = tree.records()[static_cast<std::size_t>(t)];
    current = merge_pair(current, r.left, r.right);
  }
  return current;
}

std::vector<MixingMeasure> all_levels(const Dendrogram& tree) {
  std::vector<MixingMeasure> levels;
  levels.reserve(static_cast<std::size_t>(tree.order()));
  levels.push_back(tree.base());
  for (const MergeRecord& r : tree.records()) {
    levels.push_back(merge_pair(levels.back(), r.left, r.right));
  }
  std::reverse(levels.begin(), levels.end());
  return levels;
}

ProjectionCheck projection_check(const MixingMeasure& measure) {
  if (measure.kernel() != Kernel::EuclideanLocation) {
    throw InvalidInput("projection check is defined for the euclidean kernel only");
  }
  if (measure.size() < 2) throw InvalidInput("projection check needs at least two atoms");

  const PairMin chosen = minimal_pair(pairwise_dissimilarity(measure));
  ProjectionCheck out{{0, 1}, {chosen.i, chosen.j}, std::numeric_limits<double>::infinity(),
                      chosen.value, 0.0, {}};
  for (std::size_t i = 0; i < measure.size(); ++i) {
    for (std::size_t j = i + 1; j < measure.size(); ++j) {
      TransportPlan plan = optimal_plan(measure, merge_pair(measure, i, j), 2.0);
      if (plan.cost < out.oracle_minimum) {
        out.oracle_minimum = plan.cost;
        out.oracle_pair = {i, j};
        out.oracle_plan = std::move(plan);
      }
    }
  }
  out.defect = out.algorithm_height - out.oracle_minimum;
  return out;
}

int cut_at(const Dendrogram& tree, double epsilon) {
  if (tree.linkage() != Linkage::Centroid) {
    throw InvalidInput("the cut rule is defined for centroid-linkage dendrograms");
  }
  const int k = tree.order();
  if (k < 2) throw InvalidInput("the cut rule needs at least two atoms");
  if (!(epsilon >= 0.0)) throw InvalidInput("cut threshold must be nonnegative");

  // Tail sums grow as kappa decreases, so the qualifying levels form an
  // interval [kappa_min, k].
  double tail = 0.0;
  int smallest = k + 1;
  for (int kappa = k; kappa >= 2; --kappa) {
    tail += tree.height(kappa);
    if (tail > epsilon) break;
    smallest = kappa;
  }
  return smallest == k + 1 ? k : smallest - 1;
}

std::string to_newick(const Dendrogram& tree) {
  const auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  struct Node {
    std::string text;
    double height;
  };
  std::vector<Node> slots;
  for (int i = 0; i < tree.order(); ++i) slots.push_back({std::to_string(i), 0.0});

  double cumulative = 0.0;
  for (const MergeRecord& r : tree.records()) {
    cumulative += r.height;
    const Node& a = slots[r.left];
    const Node& b = slots[r.right];
    Node merged{"(" + a.text + ":" + fmt(cumulative - a.height) + "," + b.text + ":" +
                    fmt(cumulative - b.height) + ")",
                cumulative};
    slots[r.left] = std::move(merged);
    slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(r.right));
  }
  return slots.front().text + ";";
}

}  // namespace mixdendro
