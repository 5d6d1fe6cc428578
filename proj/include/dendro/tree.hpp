#pragma once

// Rooted trees of the dendroidal category: parsing, canonical form,
// automorphisms, grafting and exhaustive enumeration.
//
// Term grammar (whitespace between tokens is ignored):
//
//   tree := ( "*" | "(" tree* ")" ) [ "@" name ]
//
// `*` is a leaf edge, `( ... )` is an edge capped by a vertex whose inputs are
// the listed subtrees, `()` is a stump (nullary vertex). The outermost term is
// the root edge.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dendro {

/// Edge index inside a Tree. Edges are numbered in canonical pre-order, so the
/// root is always 0 and the edges above `e` form the range [e, subtree_end(e)).
using Edge = int;

/// Path of child indices (canonical order) from the root; root = {}.
using Address = std::vector<int>;

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t pos);
  std::size_t position() const noexcept { return pos_; }

 private:
  std::size_t pos_;
};

/// A planar term, children kept in written order.
struct Term {
  bool leaf = true;
  std::vector<Term> children;
  std::string label;

  static Term leaf_edge() { return Term{}; }
  static Term vertex(std::vector<Term> kids) { return Term{false, std::move(kids), {}}; }
};

Term parse_term(std::string_view text);
std::string format_term(const Term& t);

/// Strict order on serialized keys: ')' < '*' < '('.
bool key_less(std::string_view a, std::string_view b);

class Tree;
using TreePtr = std::shared_ptr<const Tree>;

/// Canonical rooted tree. Immutable; children of every vertex are sorted by
/// key_less on their sub-keys, so two trees are isomorphic iff keys match.
class Tree {
 public:
  /// The trivial tree η (one leaf edge, no vertex).
  Tree();

  /// Canonicalizes `t`. If `planar_to_canonical` is given it receives, for
  /// every edge of `t` in planar pre-order, the canonical edge it became.
  static Tree from_term(const Term& t, std::vector<Edge>* planar_to_canonical = nullptr);

  int edge_count() const { return static_cast<int>(parent_.size()); }
  int vertex_count() const { return vertex_count_; }
  int leaf_count() const { return edge_count() - vertex_count_; }
  static constexpr Edge root() { return 0; }

  bool is_leaf(Edge e) const { return leaf_[e] != 0; }
  bool has_vertex(Edge e) const { return leaf_[e] == 0; }
  bool is_inner(Edge e) const { return e != 0 && !is_leaf(e); }
  /// No leaf at or above `e`.
  bool is_closed(Edge e) const { return closed_[e] != 0; }
  const std::vector<Edge>& inputs(Edge e) const { return inputs_[e]; }
  Edge parent(Edge e) const { return parent_[e]; }
  int subtree_end(Edge e) const { return end_[e]; }
  /// a ≤ b in the edge order (a lies on the path from the root to b).
  bool leq(Edge a, Edge b) const { return a <= b && b < end_[a]; }

  const std::string& key() const { return subkey_[0]; }
  const std::string& subkey(Edge e) const { return subkey_[e]; }
  const std::string& label(Edge e) const { return label_[e]; }
  bool has_labels() const;

  Address address(Edge e) const;
  std::optional<Edge> at(const Address& a) const;

  std::vector<Edge> leaves() const;
  /// Edges carrying a vertex (the vertex v_x sits on top of x).
  std::vector<Edge> vertices() const;
  std::vector<Edge> inner_edges() const;
  int max_inputs() const;

  Term to_term(Edge from = 0) const;
  /// Canonical key with `@name` labels re-attached.
  std::string format() const;

  bool operator==(const Tree& o) const { return key() == o.key(); }

 private:
  std::vector<Edge> parent_;
  std::vector<std::vector<Edge>> inputs_;
  std::vector<char> leaf_;
  std::vector<char> closed_;
  std::vector<int> end_;
  std::vector<std::string> subkey_;
  std::vector<std::string> label_;
  int vertex_count_ = 0;
};

Tree parse_tree(std::string_view text);
TreePtr make_tree(std::string_view text);
TreePtr share(Tree t);

/// Canonical representative of a planar term.
Tree canonical_form(const Term& t);

struct TreeStats {
  int n_edges = 0;
  int n_vertices = 0;
  int n_inner_edges = 0;
  std::vector<int> valences;  // inputs + 1, sorted descending
  int max_inputs = 0;
  bool is_reduced = false;
  std::uint64_t aut_order = 1;
};

TreeStats stats(const Tree& t);

std::uint64_t aut_order(const Tree& t);

/// All automorphisms of `t` as edge maps (edge -> edge), identity first.
std::vector<std::vector<Edge>> automorphisms(const Tree& t);

/// Identifies the root of `scion` with leaf `leaf` of `base`.
Tree graft(const Tree& base, Edge leaf, const Tree& scion);
Tree graft(const Tree& base, const Address& leaf, const Tree& scion);

// Named shapes.
Tree eta();
/// Corolla t_n: one vertex, n leaves.
Tree corolla(int n);
/// Reduced corolla: n inputs each capped by a stump.
Tree reduced_corolla(int n);

struct EnumOptions {
  int max_edges = 1;
  int max_inputs = 0;
  bool reduced_only = false;
  int max_vertices = -1;  // -1: unbounded
  int max_leaves = -1;
};

/// One canonical representative per isomorphism class, sorted by
/// (edge count, key).
std::vector<Tree> enumerate_trees(const EnumOptions& opt);
std::vector<Tree> enumerate_trees(int max_edges, int max_inputs, bool reduced_only);

std::string format_address(const Address& a);
Address parse_address(std::string_view s);

}  // namespace dendro
