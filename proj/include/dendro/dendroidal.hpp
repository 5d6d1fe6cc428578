#pragma once

// Dendroidal sets truncated to a finite carrier of trees. Elements of X(T)
// are indexed 0..size(T)-1; restriction along S -> T maps X(T) to X(S).

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "dendro/budget.hpp"
#include "dendro/omega.hpp"
#include "dendro/operad.hpp"

namespace dendro {

using Element = std::uint64_t;

/// Trees closed under face sources and degeneracy targets, sorted by (edges, key).
/// Faces with a vertex of more than `max_inputs` inputs are left out (-1: no limit).
std::vector<TreePtr> face_closure(const std::vector<TreePtr>& trees, int max_inputs = -1);
/// Elementary faces into, degeneracies out of, and automorphisms of each
/// tree, restricted to morphisms between carrier trees.
std::vector<Morphism> generating_morphisms(const std::vector<TreePtr>& carrier);

/// Leaves plus stumps. Faces and degeneracies never increase it.
int tip_count(const Tree& t);
/// Trees with at most `max_vertices` vertices, every vertex with at most
/// `max_inputs` inputs, and at most `max_tips` tips (-1: no limit).
std::vector<TreePtr> tree_carrier(int max_vertices, int max_inputs, int max_tips = -1);
/// η, the corollas t_0..t_n and every graft t_n ∘_i t_m with n + m - 1 <= bound.
std::vector<TreePtr> reconstruction_carrier(int arity_bound);

class DendroidalSet {
 public:
  DendroidalSet() = default;
  // Caches are not copied.
  DendroidalSet(const DendroidalSet&) {}
  DendroidalSet& operator=(const DendroidalSet&) { return *this; }
  virtual ~DendroidalSet() = default;

  virtual const std::vector<TreePtr>& carrier() const = 0;
  bool contains(const std::string& key) const;
  TreePtr find(const std::string& key) const;

  virtual Element size(const Tree& t) const = 0;
  virtual std::string element_name(const Tree& t, Element x) const = 0;
  /// X(m) applied to x ∈ X(target). Throws std::out_of_range for x too large.
  virtual Element restrict(const Morphism& m, Element x) const;
  /// out[k] = restrict(incl[k], x) for the corolla inclusions of T in vertex order.
  virtual void corolla_restrictions(const Tree& t, const std::vector<Morphism>& incl, Element x,
                                    std::vector<Element>& out) const;

 protected:
  /// X on a face, degeneracy or automorphism as produced by module omega.
  virtual Element restrict_generator(const Morphism& m, Element x) const = 0;

 private:
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const Factorization>> factorizations_;
  mutable std::unordered_map<std::string, TreePtr> index_;
};

/// N_d P: operad maps Ω(T) -> P, one coloring of the edges plus one
/// operation per vertex. Values are computed on demand.
class NerveSet final : public DendroidalSet {
 public:
  /// The carrier is the face closure of `trees` within P's arity bound.
  /// Throws std::invalid_argument if a given tree exceeds the bound.
  NerveSet(std::shared_ptr<const FiniteOperad> p, const std::vector<TreePtr>& trees);

  const std::vector<TreePtr>& carrier() const override { return carrier_; }
  Element size(const Tree& t) const override;
  std::string element_name(const Tree& t, Element x) const override;
  Element restrict(const Morphism& m, Element x) const override;
  void corolla_restrictions(const Tree& t, const std::vector<Morphism>& incl, Element x,
                            std::vector<Element>& out) const override;

  const FiniteOperad& operad() const { return *p_; }

  struct Decoded {
    std::vector<Color> colors;  // per edge
    std::vector<OpId> ops;      // per vertex, in vertex order
  };
  Decoded decode(const Tree& t, Element x) const;
  /// Throws std::invalid_argument if the data is not an operad map.
  Element encode(const Tree& t, const Decoded& d) const;

 protected:
  Element restrict_generator(const Morphism& m, Element x) const override { return restrict(m, x); }

 private:
  struct TreeData;
  struct Plan;
  std::shared_ptr<const TreeData> data(const Tree& t) const;
  std::shared_ptr<const Plan> plan(const Morphism& m) const;

  std::shared_ptr<const FiniteOperad> p_;
  std::vector<TreePtr> carrier_;
  std::vector<int> op_pos_;  // position of an operation within its signature
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::shared_ptr<const TreeData>> data_;
  mutable std::unordered_map<std::string, std::shared_ptr<const Plan>> plans_;
};

/// Explicit values and generator actions, e.g. loaded from JSON.
class TabulatedSet final : public DendroidalSet {
 public:
  TabulatedSet() = default;

  const std::vector<TreePtr>& carrier() const override { return carrier_; }
  Element size(const Tree& t) const override;
  std::string element_name(const Tree& t, Element x) const override;

  void add_tree(TreePtr t, std::vector<std::string> values);
  void set_action(const Morphism& m, std::vector<Element> map);
  const std::vector<std::string>& values(const std::string& key) const;
  std::vector<std::string>& values(const std::string& key);
  /// Action tables keyed by (source key, target key, edge map).
  using ActionKey = std::tuple<std::string, std::string, std::vector<Edge>>;
  std::map<ActionKey, std::vector<Element>>& actions() { return actions_; }
  const std::map<ActionKey, std::vector<Element>>& actions() const { return actions_; }

 protected:
  Element restrict_generator(const Morphism& m, Element x) const override;

 private:
  std::vector<TreePtr> carrier_;
  std::map<std::string, std::vector<std::string>> values_;
  std::map<ActionKey, std::vector<Element>> actions_;
};

/// Explicit copy of X on its carrier with every generator action.
TabulatedSet tabulate(const DendroidalSet& x, const Budget& budget = Budget::defaults());
std::string dendroidal_to_json(const TabulatedSet& x);
/// Throws std::invalid_argument on malformed input.
TabulatedSet dendroidal_from_json(const std::string& text);

/// The inclusion t_k -> T of the corolla at vertex v, leaves in input order.
Morphism corolla_inclusion(const TreePtr& t, Edge v);

/// Families (x_v ∈ X(t_{|v|}))_v matching on shared edges, vertex order.
/// For T = η the families are the elements of X(η).
using Family = std::vector<Element>;
std::vector<Family> segal_core_hom(const DendroidalSet& x, const TreePtr& t, const Budget& budget = Budget::defaults());
/// |segal_core_hom| by dynamic programming over the tree.
std::uint64_t segal_core_count(const DendroidalSet& x, const TreePtr& t);
/// Restriction of x ∈ X(T) to its subcorollas.
Family segal_family(const DendroidalSet& x, const TreePtr& t, Element e);

struct SegalTreeResult {
  std::string tree;
  std::uint64_t values = 0;
  std::uint64_t core = 0;
  bool injective = true;
  bool matching = true;  // every image is a matching family
  bool bijective() const { return injective && matching && values == core; }
  std::string detail;
};

struct SegalReport {
  std::vector<SegalTreeResult> trees;
  bool ok() const;
  std::vector<std::string> failures() const;
};

/// Checks X(T) -> Sc(T) for exact bijectivity on every given tree, or on
/// the whole carrier when `trees` is empty. Results are in input order for
/// any thread count.
SegalReport is_strict_segal(const DendroidalSet& x, std::vector<TreePtr> trees = {}, int threads = 1,
                            const Budget& budget = Budget::defaults());

/// Functoriality of X on composable pairs of morphisms between carrier
/// trees with at most `max_vertices` vertices. Returns the failures.
std::vector<std::string> check_functoriality(const DendroidalSet& x, int max_vertices,
                                             const Budget& budget = Budget::defaults());
/// X(δ) ∘ X(σ) = id for every degeneracy σ and each face δ with σ ∘ δ = id.
std::vector<std::string> check_degeneracy_sections(const DendroidalSet& x);

/// The operad τ_d X of a strict Segal X, up to `arity_bound`.
FiniteOperad reconstruct_operad(const DendroidalSet& x, int arity_bound, const Budget& budget = Budget::defaults());

}  // namespace dendro
