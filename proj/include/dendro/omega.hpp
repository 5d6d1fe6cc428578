#pragma once

// The category Ω at finite scale. A morphism S -> T is an edge map that
// extends to a map of the operads generated by the trees; since Ω(T) has at
// most one operation per ordered signature, the edge map determines it.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dendro/budget.hpp"
#include "dendro/tree.hpp"

namespace dendro {

struct Morphism {
  TreePtr source;
  TreePtr target;
  std::vector<Edge> map;  // indexed by source edges

  bool is_injective() const;
  bool is_surjective() const;
  bool is_identity() const;
  /// Strict order used for deterministic output: (source key, target key, map).
  bool operator<(const Morphism& o) const;
  bool operator==(const Morphism& o) const;
};

Morphism identity_morphism(TreePtr t);
/// g ∘ f. Throws std::invalid_argument unless f.target ≅ g.source.
Morphism compose(const Morphism& g, const Morphism& f);

/// Vertices of the target used by an operation; `identity` marks the unit.
struct Witness {
  bool identity = false;
  std::vector<Edge> vertices;  // sorted
};

/// Whether Ω(t)(inputs; output) is nonempty. Throws on unknown edges.
std::optional<Witness> operation_exists(const Tree& t, Edge output, std::span<const Edge> inputs);

bool validate_morphism(const Tree& s, const Tree& t, std::span<const Edge> map);

/// All morphisms S -> T, sorted by edge map.
std::vector<Morphism> hom_set(const TreePtr& s, const TreePtr& t, const Budget& budget = Budget::defaults());

enum class FaceKind { inner, outer };

struct Face {
  Morphism map;
  FaceKind kind = FaceKind::outer;
  Edge contracted = -1;  // target edge missing from the image, inner faces only
};

/// Injective morphisms S -> T with one vertex fewer, one per subobject
/// (representatives are the least edge map in their Aut(S)-orbit).
std::vector<Face> elementary_faces(const TreePtr& t);

/// One morphism T -> S per unary vertex, identifying its input and output.
std::vector<Morphism> degeneracies(const TreePtr& t);

/// m = faces[0] ∘ ... ∘ faces[k-1] ∘ iso ∘ degeneracies[j-1] ∘ ... ∘ degeneracies[0]
struct Factorization {
  std::vector<Morphism> degeneracies;  // applied first, in order
  Morphism iso;
  std::vector<Morphism> faces;  // faces[0] lands in the target of m
  Morphism composite() const;
};

Factorization factorize(const Morphism& m, const Budget& budget = Budget::defaults());

struct SubtreeInclusion {
  TreePtr ambient;
  std::vector<Edge> edges;  // sorted
  TreePtr induced;
  Morphism inclusion;  // induced -> ambient
};

/// Connected edge subsets (a unique lowest edge, every other edge's parent
/// present) whose induced inclusion is a morphism.
std::vector<SubtreeInclusion> subtrees(const TreePtr& t);
/// Induced tree of an arbitrary edge subset, or nullopt if not connected.
std::optional<SubtreeInclusion> induced_subtree(const TreePtr& t, std::vector<Edge> edges);

struct Classification {
  bool in_omega_n = false;
  bool is_reduced = false;
  bool is_reduced_corolla = false;
  bool is_extended_corolla = false;
  /// Degeneracies from the tree down to t̄_n when extended; for n = 1 and
  /// the tree t̄_0 the chain instead runs t̄_1 -> t̄_0 (`chain_reversed`).
  std::vector<Morphism> chain;
  bool chain_reversed = false;
};

Classification classify(const TreePtr& t, int n);

}  // namespace dendro
