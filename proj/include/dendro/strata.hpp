#pragma once

// Stratification posets Ψ_k of the Fulton–MacPherson compactification,
// their index subcategories, and the configuration coordinates (a, b).

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "dendro/budget.hpp"
#include "dendro/omega.hpp"

namespace dendro {

/// A tree in Ψ_k: k labelled leaves, every vertex with at least two inputs.
/// Stored as its vertex clusters (leaf sets as bitmasks over labels 0..k-1),
/// sorted by decreasing size then value, so clusters[0] is the full set.
struct LabelledTree {
  int k = 0;
  std::vector<std::uint32_t> clusters;

  /// Normalizes the cluster order; throws std::invalid_argument unless the
  /// clusters form a valid Ψ_k tree.
  static LabelledTree from_clusters(int k, std::vector<std::uint32_t> clusters);
  /// Parses a labelled term such as "(*@1(*@2*@3))"; labels are 1..k.
  static LabelledTree parse(std::string_view text);

  int vertex_count() const { return static_cast<int>(clusters.size()); }
  int inner_edges() const { return vertex_count() - 1; }
  /// Number of inputs of each vertex, in cluster order.
  std::vector<int> inputs() const;
  /// Children of cluster c sorted by least label: subclusters and singletons.
  std::vector<std::uint32_t> children(std::size_t c) const;

  Term term() const;
  std::string format() const;
  TreePtr shape() const;

  auto operator<=>(const LabelledTree&) const = default;
};

/// Σ_v (n·(inputs_v − 1) − 1).
int stratum_dim(const LabelledTree& t, int n);
/// n(k−1)−1 for k ≥ 2, 0 for k ∈ {0, 1}.
int fm_dimension(int n, int k);

/// Elements ordered by S ≤ T iff T is obtained from S by contracting inner
/// edges; the k-corolla is the maximum.
struct StratPoset {
  int k = 0;
  std::vector<LabelledTree> elements;
  /// covers[i]: elements obtained from i by contracting one inner edge.
  std::vector<std::vector<int>> covers;

  bool leq(int i, int j) const;
  std::optional<int> find(const LabelledTree& t) const;
  int maximum() const;
  /// Indices of all elements ≤ i.
  std::vector<int> down_set(int i) const;
};

/// Throws std::invalid_argument for k < 2 and BudgetExceeded past the budget.
StratPoset enumerate_psi(int k, const Budget& budget = Budget::defaults());
/// Down-set of the pattern. Throws std::invalid_argument if the pattern is
/// not an element of the poset.
std::vector<int> composition_image(const StratPoset& psi, const LabelledTree& pattern);
/// Ψ_n without its maximum. Throws std::invalid_argument for n < 2.
StratPoset boundary_index(int n, const Budget& budget = Budget::defaults());

struct CoboundIndex {
  int n = 0;
  /// Root-containing proper subtrees of the reduced corolla t̄_n.
  std::vector<SubtreeInclusion> subtrees;
  /// Witness map: the set of stumps (bit j = input j + 1) each subtree keeps.
  std::vector<std::uint32_t> subsets;
  /// Whether the witness is a bijection onto the proper subsets of {1..n}
  /// with subtree inclusion matching subset inclusion.
  bool order_isomorphism = false;
};

CoboundIndex cobound_index(int n);

struct Shortening {
  TreePtr tree;
  /// Degeneracies, applied from the input tree downwards.
  std::vector<Morphism> chain;
  Morphism composite;
};

/// Collapses every unary vertex.
Shortening shorten(const TreePtr& t);

struct FmCoordinates {
  std::map<std::pair<int, int>, std::vector<double>> a;  // 0-based (i, j), i ≠ j
  std::map<std::tuple<int, int, int>, double> b;        // 0-based distinct (i, j, k)
  /// Centroid at the origin, largest pairwise distance 1.
  std::vector<std::vector<double>> normalized;
};

/// Throws std::invalid_argument on coincident points or mismatched dimensions.
FmCoordinates fm_embed(const std::vector<std::vector<double>>& points);

std::string poset_to_dot(const StratPoset& p, int n);
std::string poset_to_json(const StratPoset& p, int n);
std::string fm_to_json(const FmCoordinates& c);

}  // namespace dendro
