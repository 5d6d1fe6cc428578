#pragma once

// Finite colored set-valued operads, stored as explicit tables up to an
// arity bound. Compositions are partial (p ∘_i q), inputs are 0-based.
//
// Right action convention: input j of p·σ feeds slot σ(j) of p, so
// (p·σ)·τ = p·(σ∘τ) and p·σ has input colors c_{σ(0)}, …, c_{σ(n-1)}.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dendro/budget.hpp"
#include "dendro/tree.hpp"

namespace dendro {

using Color = int;
using OpId = int;
using Perm = std::vector<int>;

// Permutations of {0..n-1}, rank = position in lexicographic order.
std::vector<Perm> all_permutations(int n);
std::size_t perm_rank(const Perm& p);
Perm perm_compose(const Perm& a, const Perm& b);  // (a∘b)(i) = a[b[i]]
Perm perm_inverse(const Perm& p);
bool is_permutation(const Perm& p);

struct Signature {
  std::vector<Color> inputs;
  Color output = 0;

  int arity() const { return static_cast<int>(inputs.size()); }
  auto operator<=>(const Signature&) const = default;
};

class FiniteOperad {
 public:
  FiniteOperad() = default;
  FiniteOperad(std::string name, std::vector<std::string> colors, int arity_bound);

  OpId add_operation(Signature sig, std::string name = {});
  void set_identity(Color c, OpId op);
  void set_composition(OpId p, int i, OpId q, OpId r);
  void set_action(OpId p, const Perm& sigma, OpId r);

  /// Fill every composition and action entry within the bound from callbacks.
  template <class Comp, class Act>
  void fill_tables(Comp&& comp, Act&& act);

  const std::string& name() const { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }
  int arity_bound() const { return arity_bound_; }
  int color_count() const { return static_cast<int>(colors_.size()); }
  const std::string& color_name(Color c) const { return colors_.at(static_cast<std::size_t>(c)); }
  std::optional<Color> find_color(const std::string& name) const;

  int op_count() const { return static_cast<int>(sigs_.size()); }
  const Signature& signature(OpId p) const { return sigs_.at(static_cast<std::size_t>(p)); }
  int arity(OpId p) const { return signature(p).arity(); }
  const std::string& op_name(OpId p) const { return names_.at(static_cast<std::size_t>(p)); }
  std::optional<OpId> find_op(const std::string& name) const;
  /// Operations with exactly this signature, in id order.
  std::span<const OpId> operations(const Signature& sig) const;
  /// Nonempty signatures, sorted.
  std::vector<Signature> signatures() const;
  OpId identity(Color c) const { return ids_.at(static_cast<std::size_t>(c)); }

  /// Whether p ∘_i q is defined and within the arity bound.
  bool composable(OpId p, int i, OpId q) const;
  /// -1 when the entry is missing. Throws std::invalid_argument when not composable.
  OpId compose(OpId p, int i, OpId q) const;
  OpId act(OpId p, const Perm& sigma) const;

  Signature composite_signature(OpId p, int i, OpId q) const;
  Signature acted_signature(OpId p, const Perm& sigma) const;

  std::size_t composition_entries() const { return comp_.size(); }

 private:
  static std::uint64_t comp_key(OpId p, int i, OpId q) {
    return (static_cast<std::uint64_t>(p) << 36) | (static_cast<std::uint64_t>(i) << 30) |
           static_cast<std::uint64_t>(q);
  }

  std::string name_;
  int arity_bound_ = 0;
  std::vector<std::string> colors_;
  std::vector<Signature> sigs_;
  std::vector<std::string> names_;
  std::map<Signature, std::vector<OpId>> by_sig_;
  std::vector<OpId> ids_;
  std::unordered_map<std::uint64_t, OpId> comp_;
  std::vector<std::vector<OpId>> act_;  // [p][perm_rank(σ)]
};

template <class Comp, class Act>
void FiniteOperad::fill_tables(Comp&& comp, Act&& act) {
  const OpId n = op_count();
  std::vector<std::vector<OpId>> by_arity(static_cast<std::size_t>(arity_bound_) + 1);
  for (OpId q = 0; q < n; ++q) by_arity.at(static_cast<std::size_t>(arity(q))).push_back(q);
  for (OpId p = 0; p < n; ++p) {
    for (const auto& s : all_permutations(arity(p))) set_action(p, s, act(p, s));
    for (int i = 0; i < arity(p); ++i)
      for (int m = 0; arity(p) + m - 1 <= arity_bound_; ++m)
        for (OpId q : by_arity[static_cast<std::size_t>(m)])
          if (composable(p, i, q)) set_composition(p, i, q, comp(p, i, q));
  }
}

struct Violation {
  std::string law;
  std::string detail;
  /// Composition-table entries (p, i, q) the instance looked up.
  std::vector<std::array<OpId, 3>> uses;
};

struct AxiomReport {
  std::vector<Violation> violations;
  std::size_t instances = 0;
  bool ok() const { return violations.empty(); }
};

/// Checks unit, associativity (sequential and parallel), action functoriality
/// and equivariance on every instance within `arity_bound`.
/// Throws std::logic_error on a missing table entry.
AxiomReport check_operad_axioms(const FiniteOperad& p, int arity_bound);

FiniteOperad com_operad(int arity_bound);
FiniteOperad ass_operad(int arity_bound);
/// Functions X^n -> X on X = {0..x_size-1}; elements are value tables.
FiniteOperad end_operad(int x_size, int arity_bound, const Budget& budget = Budget::defaults());
/// Colors are edges; one operation per ordered signature with a witness.
/// arity_bound < 0 means no bound beyond the tree itself.
FiniteOperad omega_operad(const TreePtr& t, int arity_bound = -1);

/// Single-colored collection with Σ_n actions: action[x][perm_rank(σ)] = x·σ.
struct Collection {
  struct Level {
    std::vector<std::string> elements;
    std::vector<std::vector<int>> action;
  };
  std::map<int, Level> levels;

  static Collection trivial(const std::map<int, std::vector<std::string>>& elements);
  int act(int n, int x, const Perm& sigma) const;
  /// Violations of the group action laws, empty if none.
  std::vector<std::string> check() const;
};

/// Leaf-labelled trees decorated by X, modulo decorated isomorphism.
/// Requires X(0) = X(1) = ∅.
FiniteOperad free_operad(const Collection& x, int arity_bound, const Budget& budget = Budget::defaults());
/// The corolla element of free(X)(n) for x ∈ X(n).
OpId free_unit(const FiniteOperad& free, const Collection& x, int n, int element);

struct OperadIsomorphism {
  std::vector<Color> colors;  // P color -> Q color
  std::vector<OpId> ops;      // P op -> Q op
};

/// Searches for an isomorphism P -> Q preserving colors, identities,
/// compositions and actions within the common arity bound.
std::optional<OperadIsomorphism> find_isomorphism(const FiniteOperad& p, const FiniteOperad& q,
                                                  const Budget& budget = Budget::defaults());
/// Checks every table entry against the map. Empty result means it is an isomorphism.
std::vector<std::string> verify_isomorphism(const FiniteOperad& p, const FiniteOperad& q,
                                            const OperadIsomorphism& iso);

std::string operad_to_json(const FiniteOperad& p);
std::string isomorphism_to_json(const FiniteOperad& p, const FiniteOperad& q, const OperadIsomorphism& iso);
/// Throws std::invalid_argument on malformed input.
FiniteOperad operad_from_json(const std::string& text);

}  // namespace dendro
