#pragma once

#include "mixdendro/measures.hpp"
#include "mixdendro/transport.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace mixdendro {

enum class Linkage { Centroid, SingleLinkage };

const char* linkage_name(Linkage linkage);

/// One merge step: the two atoms `left` < `right` of the level-`level`
/// measure are fused into `merged_atom`, which becomes atom `left` of the
/// next level.
struct MergeRecord {
  int level;
  std::size_t left;
  std::size_t right;
  Atom merged_atom;
  double height;
};

/// Merge tree over the atoms of a mixing measure. Records are ordered from
/// level k down to level 2, so record t reduces level k - t.
class Dendrogram {
 public:
  Dendrogram(MixingMeasure base, std::vector<MergeRecord> records, Linkage linkage);

  const MixingMeasure& base() const { return base_; }
  const std::vector<MergeRecord>& records() const { return records_; }
  Linkage linkage() const { return linkage_; }
  /// Number of atoms of the base measure.
  int order() const { return static_cast<int>(base_.size()); }
  /// d^(level) for level in [2, k].
  double height(int level) const;

 private:
  MixingMeasure base_;
  std::vector<MergeRecord> records_;
  Linkage linkage_;
};

/// Repeatedly merges the pair of atoms with minimal dissimilarity
/// (lexicographically smallest pair on ties) until one atom remains.
Dendrogram build_dendrogram(const MixingMeasure& measure);

/// Single-linkage variant on a Euclidean measure: blocks of original atoms
/// are joined through their closest pair of original atoms.
Dendrogram single_linkage_dendrogram(const MixingMeasure& measure);

/// The kappa-atom measure of the dendrogram, 1 <= kappa <= k.
MixingMeasure measure_at_level(const Dendrogram& tree, int kappa);

/// All levels at once; entry kappa - 1 holds the kappa-atom measure.
std::vector<MixingMeasure> all_levels(const Dendrogram& tree);

/// Brute-force check that one merging step is the W2 projection onto
/// measures with one atom fewer.
struct ProjectionCheck {
  std::pair<std::size_t, std::size_t> oracle_pair;     // argmin of W2^2 over pair merges
  std::pair<std::size_t, std::size_t> algorithm_pair;  // minimal-dissimilarity pair
  double oracle_minimum;                               // min W2^2(G, merged)
  double algorithm_height;                             // dissimilarity of the chosen pair
  double defect;                                       // algorithm_height - oracle_minimum
  TransportPlan oracle_plan;                           // optimal plan for the oracle pair
};

ProjectionCheck projection_check(const MixingMeasure& measure);

/// Order chosen by cutting the dendrogram at height epsilon:
/// min{kappa in [2,k] : sum_{i=kappa}^{k} d^(i) <= epsilon} - 1, or k when
/// no level qualifies.
int cut_at(const Dendrogram& tree, double epsilon);

/// Newick string. Leaves are labelled by base-atom index; each branch is as
/// long as the cumulative height between its child node and its parent.
std::string to_newick(const Dendrogram& tree);

}  // namespace mixdendro
