#include "dendro/operad.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dendro/omega.hpp"
#include "json.hpp"

namespace dendro {

std::vector<Perm> all_permutations(int n) {
  Perm p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  std::vector<Perm> out;
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

std::size_t perm_rank(const Perm& p) {
  std::size_t r = 0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t smaller = 0;
    for (std::size_t j = i + 1; j < n; ++j)
      if (p[j] < p[i]) ++smaller;
    r = r * (n - i) + smaller;
  }
  return r;
}

Perm perm_compose(const Perm& a, const Perm& b) {
  Perm c(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) c[i] = a[static_cast<std::size_t>(b[i])];
  return c;
}

Perm perm_inverse(const Perm& p) {
  Perm q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return q;
}

bool is_permutation(const Perm& p) {
  std::vector<char> seen(p.size(), 0);
  for (int x : p) {
    if (x < 0 || static_cast<std::size_t>(x) >= p.size() || seen[x]) return false;
    seen[x] = 1;
  }
  return true;
}

namespace {

std::size_t factorial(int n) {
  std::size_t f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<std::size_t>(i);
  return f;
}

}  // namespace

FiniteOperad::FiniteOperad(std::string name, std::vector<std::string> colors, int arity_bound)
    : name_(std::move(name)), arity_bound_(arity_bound), colors_(std::move(colors)), ids_(colors_.size(), -1) {
  if (arity_bound < 1) throw std::invalid_argument("arity bound must be at least 1");
}

OpId FiniteOperad::add_operation(Signature sig, std::string name) {
  if (sig.arity() > arity_bound_)
    throw std::invalid_argument("operation of arity " + std::to_string(sig.arity()) + " exceeds the bound");
  auto bad = [&](Color c) { return c < 0 || c >= color_count(); };
  if (bad(sig.output) || std::any_of(sig.inputs.begin(), sig.inputs.end(), bad))
    throw std::invalid_argument("unknown color in signature");
  const OpId id = op_count();
  if (name.empty()) name = "op" + std::to_string(id);
  act_.emplace_back(factorial(sig.arity()), -1);
  by_sig_[sig].push_back(id);
  sigs_.push_back(std::move(sig));
  names_.push_back(std::move(name));
  return id;
}

void FiniteOperad::set_identity(Color c, OpId op) {
  const auto& s = signature(op);
  if (s.output != c || s.inputs != std::vector<Color>{c})
    throw std::invalid_argument("identity of " + color_name(c) + " has the wrong signature");
  ids_.at(static_cast<std::size_t>(c)) = op;
}

bool FiniteOperad::composable(OpId p, int i, OpId q) const {
  if (p < 0 || q < 0 || p >= op_count() || q >= op_count()) return false;
  const auto& sp = signature(p);
  const auto& sq = signature(q);
  if (i < 0 || i >= sp.arity()) return false;
  return sq.output == sp.inputs[static_cast<std::size_t>(i)] && sp.arity() + sq.arity() - 1 <= arity_bound_;
}

Signature FiniteOperad::composite_signature(OpId p, int i, OpId q) const {
  const auto& sp = signature(p);
  const auto& sq = signature(q);
  Signature s;
  s.output = sp.output;
  s.inputs.assign(sp.inputs.begin(), sp.inputs.begin() + i);
  s.inputs.insert(s.inputs.end(), sq.inputs.begin(), sq.inputs.end());
  s.inputs.insert(s.inputs.end(), sp.inputs.begin() + i + 1, sp.inputs.end());
  return s;
}

Signature FiniteOperad::acted_signature(OpId p, const Perm& sigma) const {
  const auto& sp = signature(p);
  Signature s;
  s.output = sp.output;
  for (int j : sigma) s.inputs.push_back(sp.inputs[static_cast<std::size_t>(j)]);
  return s;
}

void FiniteOperad::set_composition(OpId p, int i, OpId q, OpId r) {
  if (!composable(p, i, q)) throw std::invalid_argument("composition entry outside the table");
  if (r < 0 || r >= op_count() || signature(r) != composite_signature(p, i, q))
    throw std::invalid_argument("composite " + op_name(p) + " o_" + std::to_string(i) + " " + op_name(q) +
                                " has the wrong signature");
  comp_[comp_key(p, i, q)] = r;
}

void FiniteOperad::set_action(OpId p, const Perm& sigma, OpId r) {
  if (static_cast<int>(sigma.size()) != arity(p) || !is_permutation(sigma))
    throw std::invalid_argument("not a permutation of the inputs of " + op_name(p));
  if (r < 0 || r >= op_count() || signature(r) != acted_signature(p, sigma))
    throw std::invalid_argument("action on " + op_name(p) + " has the wrong signature");
  act_[static_cast<std::size_t>(p)][perm_rank(sigma)] = r;
}

OpId FiniteOperad::compose(OpId p, int i, OpId q) const {
  if (!composable(p, i, q)) throw std::invalid_argument("not composable");
  auto it = comp_.find(comp_key(p, i, q));
  return it == comp_.end() ? -1 : it->second;
}

OpId FiniteOperad::act(OpId p, const Perm& sigma) const {
  if (static_cast<int>(sigma.size()) != arity(p) || !is_permutation(sigma))
    throw std::invalid_argument("not a permutation of the inputs of " + op_name(p));
  return act_[static_cast<std::size_t>(p)][perm_rank(sigma)];
}

std::optional<Color> FiniteOperad::find_color(const std::string& name) const {
  for (Color c = 0; c < color_count(); ++c)
    if (colors_[static_cast<std::size_t>(c)] == name) return c;
  return std::nullopt;
}

std::optional<OpId> FiniteOperad::find_op(const std::string& name) const {
  for (OpId p = 0; p < op_count(); ++p)
    if (names_[static_cast<std::size_t>(p)] == name) return p;
  return std::nullopt;
}

std::span<const OpId> FiniteOperad::operations(const Signature& sig) const {
  auto it = by_sig_.find(sig);
  if (it == by_sig_.end()) return {};
  return it->second;
}

std::vector<Signature> FiniteOperad::signatures() const {
  std::vector<Signature> out;
  for (const auto& [s, ops] : by_sig_) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// axioms

namespace {

using Uses = std::vector<std::array<OpId, 3>>;

std::string perm_string(const Perm& p) {
  std::string s = "[";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "," : "") + std::to_string(p[i]);
  return s + "]";
}

}  // namespace

AxiomReport check_operad_axioms(const FiniteOperad& P, int arity_bound) {
  const int bound = std::min(arity_bound, P.arity_bound());
  AxiomReport rep;
  std::vector<std::vector<OpId>> by_arity(static_cast<std::size_t>(bound) + 1);
  for (OpId p = 0; p < P.op_count(); ++p)
    if (P.arity(p) <= bound) by_arity[static_cast<std::size_t>(P.arity(p))].push_back(p);

  auto C = [&](OpId p, int i, OpId q, Uses& uses) {
    uses.push_back({p, i, q});
    OpId r = P.compose(p, i, q);
    if (r < 0)
      throw std::logic_error("missing composition " + P.op_name(p) + " o_" + std::to_string(i) + " " + P.op_name(q));
    return r;
  };
  auto A = [&](OpId p, const Perm& s) {
    OpId r = P.act(p, s);
    if (r < 0) throw std::logic_error("missing action on " + P.op_name(p) + " by " + perm_string(s));
    return r;
  };
  auto check = [&](bool ok, const char* law, const std::string& detail, Uses& uses) {
    ++rep.instances;
    if (!ok) rep.violations.push_back({law, detail, uses});
  };
  auto nm = [&](OpId p) { return P.op_name(p); };

  std::vector<OpId> ids(static_cast<std::size_t>(P.color_count()));
  for (Color c = 0; c < P.color_count(); ++c) {
    ids[c] = P.identity(c);
    if (ids[c] < 0) throw std::logic_error("missing identity for color " + P.color_name(c));
  }

  for (OpId p = 0; p < P.op_count(); ++p) {
    const int n = P.arity(p);
    if (n > bound) continue;
    const auto& sp = P.signature(p);

    // units
    {
      Uses u;
      check(C(ids[sp.output], 0, p, u) == p, "left unit", "id o_0 " + nm(p), u);
    }
    for (int i = 0; i < n; ++i) {
      Uses u;
      check(C(p, i, ids[sp.inputs[i]], u) == p, "right unit", nm(p) + " o_" + std::to_string(i) + " id", u);
    }

    for (int i = 0; i < n; ++i)
      for (int m = 0; m <= bound - n + 1; ++m)
        for (OpId q : by_arity[static_cast<std::size_t>(m)]) {
          if (!P.composable(p, i, q)) continue;
          {
            Uses u;
            OpId r = C(p, i, q, u);
            check(P.signature(r) == P.composite_signature(p, i, q), "signature",
                  nm(p) + " o_" + std::to_string(i) + " " + nm(q), u);
          }
          // sequential associativity
          for (int j = 0; j < m; ++j)
            for (int l = 0; n + m + l - 2 <= bound; ++l)
              for (OpId r : by_arity[static_cast<std::size_t>(l)]) {
                if (!P.composable(q, j, r)) continue;
                Uses u;
                OpId lhs = C(C(p, i, q, u), i + j, r, u);
                OpId rhs = C(p, i, C(q, j, r, u), u);
                check(lhs == rhs, "sequential associativity",
                      "(" + nm(p) + " o_" + std::to_string(i) + " " + nm(q) + ") o_" + std::to_string(i + j) + " " +
                          nm(r),
                      u);
              }
          // parallel associativity, i < k
          for (int k = i + 1; k < n; ++k)
            for (int l = 0; n + m + l - 2 <= bound; ++l)
              for (OpId r : by_arity[static_cast<std::size_t>(l)]) {
                if (!P.composable(p, k, r)) continue;
                Uses u;
                OpId lhs = C(C(p, k, r, u), i, q, u);
                OpId rhs = C(C(p, i, q, u), k + m - 1, r, u);
                check(lhs == rhs, "parallel associativity",
                      nm(p) + " with " + nm(q) + " at " + std::to_string(i) + " and " + nm(r) + " at " +
                          std::to_string(k),
                      u);
              }
        }

    // action
    const auto perms = all_permutations(n);
    for (const auto& s : perms) {
      OpId ps = A(p, s);
      Uses none;
      check(P.signature(ps) == P.acted_signature(p, s), "action signature", nm(p) + "." + perm_string(s), none);
      if (std::is_sorted(s.begin(), s.end())) check(ps == p, "action unit", nm(p), none);
      for (const auto& t : perms)
        check(A(ps, t) == A(p, perm_compose(s, t)), "action functoriality",
              nm(p) + "." + perm_string(s) + "." + perm_string(t), none);
    }

    // equivariance
    for (int i = 0; i < n; ++i)
      for (int m = 0; m <= bound - n + 1; ++m)
        for (OpId q : by_arity[static_cast<std::size_t>(m)]) {
          for (const auto& s : perms) {
            OpId ps = A(p, s);
            if (!P.composable(ps, i, q)) continue;
            const int si = s[i];
            auto pos = [&](int t) { return t < si ? t : t + m - 1; };
            Perm s2(static_cast<std::size_t>(n + m - 1));
            for (int j = 0; j < i; ++j) s2[j] = pos(s[j]);
            for (int t = 0; t < m; ++t) s2[i + t] = si + t;
            for (int j = i + 1; j < n; ++j) s2[j + m - 1] = pos(s[j]);
            Uses u;
            OpId lhs = C(ps, i, q, u);
            OpId rhs = A(C(p, si, q, u), s2);
            check(lhs == rhs, "equivariance (outer)",
                  "(" + nm(p) + "." + perm_string(s) + ") o_" + std::to_string(i) + " " + nm(q), u);
          }
          if (!P.composable(p, i, q)) continue;
          for (const auto& t : all_permutations(m)) {
            Perm t2(static_cast<std::size_t>(n + m - 1));
            std::iota(t2.begin(), t2.end(), 0);
            for (int k = 0; k < m; ++k) t2[i + k] = i + t[k];
            Uses u;
            OpId lhs = C(p, i, A(q, t), u);
            OpId rhs = A(C(p, i, q, u), t2);
            check(lhs == rhs, "equivariance (inner)",
                  nm(p) + " o_" + std::to_string(i) + " (" + nm(q) + "." + perm_string(t) + ")", u);
          }
        }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// built-in operads

FiniteOperad com_operad(int arity_bound) {
  FiniteOperad P("Com", {"c"}, arity_bound);
  for (int n = 0; n <= arity_bound; ++n) P.add_operation({std::vector<Color>(static_cast<std::size_t>(n), 0), 0}, "mu" + std::to_string(n));
  P.set_identity(0, 1);
  P.fill_tables([&](OpId p, int, OpId q) { return P.arity(p) + P.arity(q) - 1; }, [](OpId p, const Perm&) { return p; });
  return P;
}

FiniteOperad ass_operad(int arity_bound) {
  FiniteOperad P("Ass", {"c"}, arity_bound);
  std::map<std::vector<int>, OpId> index;
  std::vector<std::vector<int>> words;
  for (int n = 0; n <= arity_bound; ++n)
    for (const auto& w : all_permutations(n)) {
      std::string name = "w";
      for (int x : w) name += std::to_string(x);
      index[w] = P.add_operation({std::vector<Color>(static_cast<std::size_t>(n), 0), 0}, name);
      words.push_back(w);
    }
  P.set_identity(0, index.at({0}));
  P.fill_tables(
      [&](OpId p, int i, OpId q) {
        const auto& wq = words[q];
        const int m = static_cast<int>(wq.size());
        std::vector<int> w;
        for (int s : words[p]) {
          if (s < i) w.push_back(s);
          else if (s > i) w.push_back(s + m - 1);
          else
            for (int t : wq) w.push_back(t + i);
        }
        return index.at(w);
      },
      [&](OpId p, const Perm& s) {
        const Perm inv = perm_inverse(s);
        std::vector<int> w;
        for (int x : words[p]) w.push_back(inv[x]);
        return index.at(w);
      });
  return P;
}

FiniteOperad end_operad(int x_size, int arity_bound, const Budget& budget) {
  if (x_size < 1) throw std::invalid_argument("End(X) needs a nonempty X");
  std::vector<std::string> colors{"X"};
  FiniteOperad P("End(" + std::to_string(x_size) + ")", colors, arity_bound);
  BudgetCounter counter(budget.max_elements, "end_operad");

  // Value tables indexed by tuples (x_0..x_{n-1}), x_0 most significant.
  std::vector<std::size_t> cells(static_cast<std::size_t>(arity_bound) + 1, 1);
  for (int n = 1; n <= arity_bound; ++n) {
    cells[n] = cells[n - 1] * static_cast<std::size_t>(x_size);
    if (cells[n] > 62) throw BudgetExceeded("end_operad: value tables too large");
  }
  std::vector<std::vector<int>> tables;
  std::vector<OpId> base(static_cast<std::size_t>(arity_bound) + 1);
  for (int n = 0; n <= arity_bound; ++n) {
    std::uint64_t count = 1;
    for (std::size_t c = 0; c < cells[n]; ++c) {
      count *= static_cast<std::uint64_t>(x_size);
      if (count > budget.max_elements) throw BudgetExceeded("end_operad: too many operations");
    }
    counter.tick(count);
    base[n] = P.op_count();
    std::vector<int> table(cells[n], 0);
    for (std::uint64_t k = 0; k < count; ++k) {
      std::uint64_t v = k;
      std::string name = "f";
      for (std::size_t c = 0; c < cells[n]; ++c) {
        table[c] = static_cast<int>(v % static_cast<std::uint64_t>(x_size));
        v /= static_cast<std::uint64_t>(x_size);
        name += std::to_string(table[c]);
        if (x_size > 10 && c + 1 < cells[n]) name += ":";
      }
      P.add_operation({std::vector<Color>(static_cast<std::size_t>(n), 0), 0}, name);
      tables.push_back(table);
    }
  }
  auto id_of = [&](int n, const std::vector<int>& table) {
    std::uint64_t k = 0;
    for (std::size_t c = table.size(); c-- > 0;) k = k * static_cast<std::uint64_t>(x_size) + static_cast<std::uint64_t>(table[c]);
    return base[n] + static_cast<OpId>(k);
  };
  auto decode = [&](std::size_t idx, int n) {
    std::vector<int> xs(static_cast<std::size_t>(n));
    for (int j = n; j-- > 0;) {
      xs[j] = static_cast<int>(idx % static_cast<std::size_t>(x_size));
      idx /= static_cast<std::size_t>(x_size);
    }
    return xs;
  };
  auto encode = [&](const std::vector<int>& xs) {
    std::size_t idx = 0;
    for (int x : xs) idx = idx * static_cast<std::size_t>(x_size) + static_cast<std::size_t>(x);
    return idx;
  };
  if (arity_bound >= 1) {
    std::vector<int> id(cells[1]);
    std::iota(id.begin(), id.end(), 0);
    P.set_identity(0, id_of(1, id));
  }
  P.fill_tables(
      [&](OpId p, int i, OpId q) {
        const int n = P.arity(p), m = P.arity(q), r = n + m - 1;
        std::vector<int> out(cells[r]);
        for (std::size_t y = 0; y < cells[r]; ++y) {
          auto ys = decode(y, r);
          std::vector<int> inner(ys.begin() + i, ys.begin() + i + m);
          std::vector<int> xs(ys.begin(), ys.begin() + i);
          xs.push_back(tables[q][encode(inner)]);
          xs.insert(xs.end(), ys.begin() + i + m, ys.end());
          out[y] = tables[p][encode(xs)];
        }
        return id_of(r, out);
      },
      [&](OpId p, const Perm& s) {
        const int n = P.arity(p);
        std::vector<int> out(cells[n]);
        for (std::size_t y = 0; y < cells[n]; ++y) {
          auto ys = decode(y, n);
          std::vector<int> xs(static_cast<std::size_t>(n));
          for (int j = 0; j < n; ++j) xs[s[j]] = ys[j];
          out[y] = tables[p][encode(xs)];
        }
        return id_of(n, out);
      });
  return P;
}

namespace {

using EdgeSet = std::vector<Edge>;

// Input sets of non-identity operations with output e, plus {e} itself.
const std::vector<EdgeSet>& op_sets(const Tree& t, Edge e, std::map<Edge, std::vector<EdgeSet>>& memo) {
  auto it = memo.find(e);
  if (it != memo.end()) return it->second;
  std::vector<EdgeSet> out{{e}};
  if (t.has_vertex(e)) {
    std::vector<EdgeSet> prod{{}};
    for (Edge c : t.inputs(e)) {
      std::vector<EdgeSet> next;
      for (const auto& a : prod)
        for (const auto& b : op_sets(t, c, memo)) {
          EdgeSet s = a;
          s.insert(s.end(), b.begin(), b.end());
          next.push_back(std::move(s));
        }
      prod = std::move(next);
    }
    for (auto& s : prod) {
      std::sort(s.begin(), s.end());
      out.push_back(std::move(s));
    }
  }
  return memo[e] = std::move(out);
}

std::string edge_name(const Tree& t, Edge e) {
  return t.label(e).empty() ? "e" + std::to_string(e) : t.label(e);
}

}  // namespace

FiniteOperad omega_operad(const TreePtr& t, int arity_bound) {
  int bound = arity_bound;
  if (bound < 0) bound = std::max(1, t->leaf_count() + t->edge_count());
  std::vector<std::string> colors;
  for (Edge e = 0; e < t->edge_count(); ++e) colors.push_back(edge_name(*t, e));
  FiniteOperad P("Omega(" + t->format() + ")", colors, std::max(bound, 1));

  std::map<Edge, std::vector<EdgeSet>> memo;
  for (Edge e = 0; e < t->edge_count(); ++e) {
    OpId id = P.add_operation({{e}, e}, "id_" + colors[e]);
    P.set_identity(e, id);
    const auto& sets = op_sets(*t, e, memo);
    for (std::size_t k = 1; k < sets.size(); ++k) {
      const auto& s = sets[k];
      if (static_cast<int>(s.size()) > bound) continue;
      auto w = operation_exists(*t, e, s);
      if (!w) throw std::logic_error("omega_operad: generated signature has no witness");
      std::string name;
      for (Edge v : w->vertices) name += (name.empty() ? "v_" : "∘v_") + colors[v];
      for (const auto& perm : all_permutations(static_cast<int>(s.size()))) {
        Signature sig{{}, e};
        for (int j : perm) sig.inputs.push_back(s[j]);
        P.add_operation(sig, name);
      }
    }
  }
  auto unique_op = [&](const Signature& sig) {
    auto ops = P.operations(sig);
    if (ops.size() != 1) throw std::logic_error("omega_operad: composite signature missing");
    return ops[0];
  };
  P.fill_tables([&](OpId p, int i, OpId q) { return unique_op(P.composite_signature(p, i, q)); },
                [&](OpId p, const Perm& s) { return unique_op(P.acted_signature(p, s)); });
  return P;
}

// ---------------------------------------------------------------------------
// collections and free operads

Collection Collection::trivial(const std::map<int, std::vector<std::string>>& elements) {
  Collection c;
  for (const auto& [n, elts] : elements) {
    Level lv;
    lv.elements = elts;
    const std::size_t f = factorial(n);
    for (std::size_t x = 0; x < elts.size(); ++x) lv.action.emplace_back(f, static_cast<int>(x));
    c.levels[n] = std::move(lv);
  }
  return c;
}

int Collection::act(int n, int x, const Perm& sigma) const {
  return levels.at(n).action.at(static_cast<std::size_t>(x)).at(perm_rank(sigma));
}

std::vector<std::string> Collection::check() const {
  std::vector<std::string> out;
  for (const auto& [n, lv] : levels) {
    const auto perms = all_permutations(n);
    const int size = static_cast<int>(lv.elements.size());
    std::set<std::string> names(lv.elements.begin(), lv.elements.end());
    if (names.size() != lv.elements.size()) out.push_back("level " + std::to_string(n) + ": repeated element names");
    if (static_cast<int>(lv.action.size()) != size) {
      out.push_back("level " + std::to_string(n) + ": action table has the wrong size");
      continue;
    }
    bool shaped = true;
    for (const auto& row : lv.action) {
      if (row.size() != perms.size()) shaped = false;
      for (int y : row)
        if (y < 0 || y >= size) shaped = false;
    }
    if (!shaped) {
      out.push_back("level " + std::to_string(n) + ": malformed action row");
      continue;
    }
    for (int x = 0; x < size; ++x) {
      if (lv.action[x][0] != x) out.push_back("level " + std::to_string(n) + ": identity acts nontrivially");
      for (const auto& s : perms)
        for (const auto& t : perms)
          if (act(n, act(n, x, s), t) != act(n, x, perm_compose(s, t)))
            out.push_back("level " + std::to_string(n) + ": action is not functorial on " + lv.elements[x]);
    }
  }
  return out;
}

namespace {

// A decorated leaf-labelled tree. Child j feeds slot j of the decoration.
struct FNode {
  int deco = -1;   // element of X(kids.size()); -1 for a leaf
  int label = -1;  // leaves only
  std::vector<FNode> kids;
};

std::string fkey(const FNode& t) {
  if (t.deco < 0) return std::to_string(t.label);
  std::string s = std::to_string(t.kids.size()) + "." + std::to_string(t.deco) + "(";
  for (std::size_t j = 0; j < t.kids.size(); ++j) s += (j ? "," : "") + fkey(t.kids[j]);
  return s + ")";
}

std::string fname(const FNode& t, const Collection& x) {
  if (t.deco < 0) return std::to_string(t.label + 1);
  const int k = static_cast<int>(t.kids.size());
  std::string s = x.levels.at(k).elements[static_cast<std::size_t>(t.deco)] + "(";
  for (std::size_t j = 0; j < t.kids.size(); ++j) s += (j ? "," : "") + fname(t.kids[j], x);
  return s + ")";
}

// Least representative over child reorderings (x; c_0..) ~ (x·π; c_π(0)..).
void canonicalize(FNode& t, const Collection& x) {
  if (t.deco < 0) return;
  for (auto& k : t.kids) canonicalize(k, x);
  const int k = static_cast<int>(t.kids.size());
  std::vector<std::string> keys;
  for (const auto& c : t.kids) keys.push_back(fkey(c));
  Perm best;
  std::pair<int, std::vector<std::string>> best_key;
  for (const auto& pi : all_permutations(k)) {
    std::pair<int, std::vector<std::string>> key{x.act(k, t.deco, pi), {}};
    for (int j : pi) key.second.push_back(keys[j]);
    if (best.empty() || key < best_key) {
      best = pi;
      best_key = std::move(key);
    }
  }
  std::vector<FNode> kids;
  for (int j : best) kids.push_back(std::move(t.kids[j]));
  t.kids = std::move(kids);
  t.deco = best_key.first;
}

void relabel(FNode& t, const std::function<int(int)>& f) {
  if (t.deco < 0) {
    t.label = f(t.label);
    return;
  }
  for (auto& k : t.kids) relabel(k, f);
}

// Replace the leaf labelled i by q (labels shifted by i), shifting labels
// above i by m - 1.
FNode substitute(const FNode& p, int i, const FNode& q, int m) {
  if (p.deco < 0) {
    if (p.label == i) {
      FNode r = q;
      relabel(r, [i](int l) { return l + i; });
      return r;
    }
    FNode r = p;
    if (r.label > i) r.label += m - 1;
    return r;
  }
  FNode r;
  r.deco = p.deco;
  for (const auto& k : p.kids) r.kids.push_back(substitute(k, i, q, m));
  return r;
}

// Set partitions of `labels` into exactly k blocks, blocks ordered by least element.
void partitions(const std::vector<int>& labels, int k, std::vector<std::vector<std::vector<int>>>& out) {
  std::vector<std::vector<int>> blocks;
  std::function<void(std::size_t)> rec = [&](std::size_t idx) {
    const std::size_t left = labels.size() - idx;
    if (blocks.size() + left < static_cast<std::size_t>(k)) return;
    if (idx == labels.size()) {
      if (static_cast<int>(blocks.size()) == k) out.push_back(blocks);
      return;
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      blocks[b].push_back(labels[idx]);
      rec(idx + 1);
      blocks[b].pop_back();
    }
    if (static_cast<int>(blocks.size()) < k) {
      blocks.push_back({labels[idx]});
      rec(idx + 1);
      blocks.pop_back();
    }
  };
  rec(0);
}

}  // namespace

FiniteOperad free_operad(const Collection& x, int arity_bound, const Budget& budget) {
  for (const auto& [n, lv] : x.levels)
    if (n <= 1 && !lv.elements.empty()) throw std::invalid_argument("free_operad needs X(0) and X(1) empty");
  if (auto bad = x.check(); !bad.empty()) throw std::invalid_argument("collection: " + bad.front());
  BudgetCounter counter(budget.max_elements, "free_operad");

  std::map<std::vector<int>, std::vector<FNode>> memo;
  std::function<const std::vector<FNode>&(const std::vector<int>&)> trees = [&](const std::vector<int>& labels)
      -> const std::vector<FNode>& {
    auto it = memo.find(labels);
    if (it != memo.end()) return it->second;
    std::vector<FNode> out;
    if (labels.size() == 1) {
      FNode leaf;
      leaf.label = labels[0];
      out.push_back(leaf);
    }
    for (const auto& [k, lv] : x.levels) {
      if (k < 2 || k > static_cast<int>(labels.size()) || lv.elements.empty()) continue;
      std::vector<std::vector<std::vector<int>>> parts;
      partitions(labels, k, parts);
      for (const auto& blocks : parts) {
        std::vector<FNode> partial{FNode{}};
        for (const auto& b : blocks) {
          const auto& sub = trees(b);
          std::vector<FNode> next;
          for (const auto& pre : partial)
            for (const auto& s : sub) {
              FNode n = pre;
              n.kids.push_back(s);
              next.push_back(std::move(n));
            }
          partial = std::move(next);
        }
        for (auto& node : partial)
          for (int d = 0; d < static_cast<int>(lv.elements.size()); ++d) {
            counter.tick();
            FNode n = node;
            n.deco = d;
            out.push_back(std::move(n));
          }
      }
    }
    return memo[labels] = std::move(out);
  };

  FiniteOperad P("free", {"c"}, arity_bound);
  std::vector<FNode> nodes;
  std::map<std::string, OpId> index;
  for (int n = 1; n <= arity_bound; ++n) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::iota(labels.begin(), labels.end(), 0);
    std::map<std::string, FNode> level;
    for (FNode t : trees(labels)) {
      canonicalize(t, x);
      std::string k = fkey(t);
      level.emplace(std::move(k), std::move(t));
    }
    for (auto& [k, t] : level) {
      index[k] = P.add_operation({std::vector<Color>(static_cast<std::size_t>(n), 0), 0}, fname(t, x));
      nodes.push_back(std::move(t));
    }
  }
  P.set_identity(0, 0);
  auto lookup = [&](FNode t) {
    canonicalize(t, x);
    return index.at(fkey(t));
  };
  P.fill_tables([&](OpId p, int i, OpId q) { return lookup(substitute(nodes[p], i, nodes[q], P.arity(q))); },
                [&](OpId p, const Perm& s) {
                  FNode t = nodes[p];
                  const Perm inv = perm_inverse(s);
                  relabel(t, [&](int l) { return inv[l]; });
                  return lookup(std::move(t));
                });
  return P;
}

OpId free_unit(const FiniteOperad& free, const Collection& x, int n, int element) {
  FNode t;
  t.deco = element;
  for (int j = 0; j < n; ++j) {
    FNode leaf;
    leaf.label = j;
    t.kids.push_back(leaf);
  }
  canonicalize(t, x);
  auto op = free.find_op(fname(t, x));
  if (!op) throw std::invalid_argument("free_unit: element outside the arity bound");
  return *op;
}

// ---------------------------------------------------------------------------
// isomorphism search

namespace {

class OpSearch {
 public:
  OpSearch(const FiniteOperad& p, const FiniteOperad& q, const std::vector<Color>& f, BudgetCounter& counter)
      : P(p), Q(q), f_(f), counter_(counter), phi_(static_cast<std::size_t>(p.op_count()), -1),
        inv_(static_cast<std::size_t>(q.op_count()), -1) {
    for (OpId x = 0; x < P.op_count(); ++x) {
      order_.push_back(x);
      perms_[P.arity(x)];
    }
    for (auto& [n, v] : perms_) v = all_permutations(n);
    std::stable_sort(order_.begin(), order_.end(), [&](OpId a, OpId b) { return P.arity(a) < P.arity(b); });
  }

  std::optional<std::vector<OpId>> run() {
    for (Color c = 0; c < P.color_count(); ++c)
      if (!assign(P.identity(c), Q.identity(f_[c]))) return std::nullopt;
    if (!propagate()) return std::nullopt;
    if (!dfs()) return std::nullopt;
    return phi_;
  }

 private:
  Signature image(const Signature& s) const {
    Signature t{{}, f_[s.output]};
    for (Color c : s.inputs) t.inputs.push_back(f_[c]);
    return t;
  }

  bool assign(OpId x, OpId y) {
    if (x < 0 || y < 0) return false;
    if (phi_[x] == y) return true;
    if (phi_[x] != -1 || inv_[y] != -1) return false;
    phi_[x] = y;
    inv_[y] = x;
    trail_.push_back(x);
    work_.push_back(x);
    return true;
  }

  void undo(std::size_t mark) {
    while (trail_.size() > mark) {
      OpId x = trail_.back();
      trail_.pop_back();
      inv_[phi_[x]] = -1;
      phi_[x] = -1;
    }
    work_.clear();
  }

  bool pair_ok(OpId a, OpId b) {
    for (int i = 0; i < P.arity(a); ++i) {
      if (!P.composable(a, i, b)) continue;
      if (!Q.composable(phi_[a], i, phi_[b])) return false;
      if (!assign(P.compose(a, i, b), Q.compose(phi_[a], i, phi_[b]))) return false;
    }
    return true;
  }

  bool propagate() {
    while (!work_.empty()) {
      OpId x = work_.back();
      work_.pop_back();
      counter_.tick();
      for (const auto& s : perms_.at(P.arity(x)))
        if (!assign(P.act(x, s), Q.act(phi_[x], s))) return false;
      for (std::size_t k = 0; k < trail_.size(); ++k) {
        OpId y = trail_[k];
        if (!pair_ok(x, y) || !pair_ok(y, x)) return false;
      }
    }
    return true;
  }

  // Cheap filter: compositions with already mapped operations whose result is mapped.
  bool consistent(OpId x, OpId cand) const {
    for (OpId y : trail_) {
      for (int i = 0; i < P.arity(x); ++i)
        if (P.composable(x, i, y)) {
          OpId r = P.compose(x, i, y);
          if (phi_[r] != -1 && Q.compose(cand, i, phi_[y]) != phi_[r]) return false;
        }
      for (int i = 0; i < P.arity(y); ++i)
        if (P.composable(y, i, x)) {
          OpId r = P.compose(y, i, x);
          if (phi_[r] != -1 && Q.compose(phi_[y], i, cand) != phi_[r]) return false;
        }
    }
    return true;
  }

  bool dfs() {
    counter_.tick();
    OpId x = -1;
    for (OpId o : order_)
      if (phi_[o] == -1) {
        x = o;
        break;
      }
    if (x < 0) return true;
    for (OpId cand : Q.operations(image(P.signature(x)))) {
      if (inv_[cand] != -1 || !consistent(x, cand)) continue;
      const std::size_t mark = trail_.size();
      if (assign(x, cand) && propagate() && dfs()) return true;
      undo(mark);
    }
    return false;
  }

  const FiniteOperad& P;
  const FiniteOperad& Q;
  const std::vector<Color>& f_;
  BudgetCounter& counter_;
  std::vector<OpId> phi_, inv_, trail_, work_, order_;
  std::map<int, std::vector<Perm>> perms_;
};

}  // namespace

std::optional<OperadIsomorphism> find_isomorphism(const FiniteOperad& P, const FiniteOperad& Q,
                                                  const Budget& budget) {
  if (P.color_count() != Q.color_count() || P.op_count() != Q.op_count() || P.arity_bound() != Q.arity_bound())
    return std::nullopt;
  const auto sigs_p = P.signatures();
  if (sigs_p.size() != Q.signatures().size()) return std::nullopt;
  const int nc = P.color_count();
  std::vector<std::vector<Signature>> completes(static_cast<std::size_t>(nc));
  for (const auto& s : sigs_p) {
    Color top = s.output;
    for (Color c : s.inputs) top = std::max(top, c);
    completes[top].push_back(s);
  }
  BudgetCounter counter(budget.max_nodes, "find_isomorphism");
  std::vector<Color> f(static_cast<std::size_t>(nc), -1);
  std::vector<char> used(static_cast<std::size_t>(nc), 0);
  std::optional<OperadIsomorphism> found;

  std::function<bool(Color)> colors = [&](Color c) -> bool {
    if (c == nc) {
      OpSearch search(P, Q, f, counter);
      if (auto ops = search.run()) {
        found = OperadIsomorphism{f, *ops};
        return true;
      }
      return false;
    }
    for (Color d = 0; d < nc; ++d) {
      if (used[d]) continue;
      counter.tick();
      f[c] = d;
      bool ok = true;
      for (const auto& s : completes[c]) {
        Signature t{{}, f[s.output]};
        for (Color x : s.inputs) t.inputs.push_back(f[x]);
        if (Q.operations(t).size() != P.operations(s).size()) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      used[d] = 1;
      if (colors(c + 1)) return true;
      used[d] = 0;
    }
    f[c] = -1;
    return false;
  };
  colors(0);
  if (found && !verify_isomorphism(P, Q, *found).empty()) throw std::logic_error("find_isomorphism: unverified result");
  return found;
}

std::vector<std::string> verify_isomorphism(const FiniteOperad& P, const FiniteOperad& Q, const OperadIsomorphism& iso) {
  std::vector<std::string> out;
  if (static_cast<int>(iso.colors.size()) != P.color_count() || static_cast<int>(iso.ops.size()) != P.op_count() ||
      P.color_count() != Q.color_count() || P.op_count() != Q.op_count()) {
    out.push_back("size mismatch");
    return out;
  }
  std::vector<char> seen_c(static_cast<std::size_t>(Q.color_count()), 0), seen_o(static_cast<std::size_t>(Q.op_count()), 0);
  for (Color c : iso.colors) {
    if (c < 0 || c >= Q.color_count() || seen_c[c]) {
      out.push_back("color map is not a bijection");
      return out;
    }
    seen_c[c] = 1;
  }
  for (OpId o : iso.ops) {
    if (o < 0 || o >= Q.op_count() || seen_o[o]) {
      out.push_back("operation map is not a bijection");
      return out;
    }
    seen_o[o] = 1;
  }
  for (Color c = 0; c < P.color_count(); ++c)
    if (iso.ops[P.identity(c)] != Q.identity(iso.colors[c])) out.push_back("identity of " + P.color_name(c));
  for (OpId p = 0; p < P.op_count(); ++p) {
    const auto& s = P.signature(p);
    Signature t{{}, iso.colors[s.output]};
    for (Color c : s.inputs) t.inputs.push_back(iso.colors[c]);
    if (Q.signature(iso.ops[p]) != t) out.push_back("signature of " + P.op_name(p));
    for (const auto& sg : all_permutations(P.arity(p)))
      if (iso.ops[P.act(p, sg)] != Q.act(iso.ops[p], sg)) out.push_back("action on " + P.op_name(p));
    for (int i = 0; i < P.arity(p); ++i)
      for (OpId q = 0; q < P.op_count(); ++q) {
        if (!P.composable(p, i, q)) continue;
        OpId r = P.compose(p, i, q);
        if (r < 0 || !Q.composable(iso.ops[p], i, iso.ops[q]) || iso.ops[r] != Q.compose(iso.ops[p], i, iso.ops[q]))
          out.push_back("composition " + P.op_name(p) + " o_" + std::to_string(i) + " " + P.op_name(q));
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

namespace {

// JSON numbering: operations in signature order, then id order.
std::vector<OpId> json_order(const FiniteOperad& p) {
  std::vector<OpId> order;
  for (const auto& s : p.signatures())
    for (OpId o : p.operations(s)) order.push_back(o);
  return order;
}

}  // namespace

std::string operad_to_json(const FiniteOperad& p) {
  const auto order = json_order(p);
  std::vector<int> pos(static_cast<std::size_t>(p.op_count()));
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = static_cast<int>(k);
  json j;
  j["name"] = p.name();
  j["arity_bound"] = p.arity_bound();
  j["colors"] = json::array();
  for (Color c = 0; c < p.color_count(); ++c) j["colors"].push_back(p.color_name(c));
  j["homs"] = json::array();
  for (const auto& s : p.signatures()) {
    json h;
    h["inputs"] = json::array();
    for (Color c : s.inputs) h["inputs"].push_back(p.color_name(c));
    h["output"] = p.color_name(s.output);
    h["elements"] = json::array();
    for (OpId o : p.operations(s)) h["elements"].push_back(p.op_name(o));
    j["homs"].push_back(std::move(h));
  }
  j["identities"] = json::array();
  for (Color c = 0; c < p.color_count(); ++c) j["identities"].push_back(pos[p.identity(c)]);
  std::vector<std::array<int, 4>> comp;
  json sym = json::array();
  for (OpId a : order) {
    for (const auto& s : all_permutations(p.arity(a))) {
      OpId r = p.act(a, s);
      if (r >= 0) sym.push_back(json::array({pos[a], s, pos[r]}));
    }
    for (int i = 0; i < p.arity(a); ++i)
      for (OpId b : order)
        if (p.composable(a, i, b)) {
          OpId r = p.compose(a, i, b);
          if (r >= 0) comp.push_back({pos[a], i, pos[b], pos[r]});
        }
  }
  j["comp"] = comp;
  j["sym"] = std::move(sym);
  return j.dump();
}

std::string isomorphism_to_json(const FiniteOperad& p, const FiniteOperad& q, const OperadIsomorphism& iso) {
  json j;
  j["colors"] = json::object();
  for (Color c = 0; c < p.color_count(); ++c) j["colors"][p.color_name(c)] = q.color_name(iso.colors[c]);
  j["operations"] = json::array();
  for (OpId o : json_order(p)) {
    json e;
    e["from"] = p.op_name(o);
    e["to"] = q.op_name(iso.ops[o]);
    e["arity"] = p.arity(o);
    j["operations"].push_back(std::move(e));
  }
  return j.dump();
}

FiniteOperad operad_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("operad JSON: ") + e.what());
  }
  try {
    std::vector<std::string> colors = j.at("colors").get<std::vector<std::string>>();
    int bound = j.value("arity_bound", 0);
    for (const auto& h : j.at("homs")) bound = std::max(bound, static_cast<int>(h.at("inputs").size()));
    FiniteOperad p(j.value("name", std::string("operad")), colors, std::max(bound, 1));
    auto color = [&](const json& v) {
      auto c = p.find_color(v.get<std::string>());
      if (!c) throw std::invalid_argument("operad JSON: unknown color " + v.get<std::string>());
      return *c;
    };
    for (const auto& h : j.at("homs")) {
      Signature s;
      for (const auto& c : h.at("inputs")) s.inputs.push_back(color(c));
      s.output = color(h.at("output"));
      for (const auto& e : h.at("elements")) p.add_operation(s, e.get<std::string>());
    }
    auto op = [&](const json& v) {
      int o = v.get<int>();
      if (o < 0 || o >= p.op_count()) throw std::invalid_argument("operad JSON: operation index out of range");
      return o;
    };
    const auto& ids = j.at("identities");
    if (static_cast<int>(ids.size()) != p.color_count()) throw std::invalid_argument("operad JSON: one identity per color");
    for (Color c = 0; c < p.color_count(); ++c) p.set_identity(c, op(ids[c]));
    for (const auto& e : j.at("comp")) p.set_composition(op(e.at(0)), e.at(1).get<int>(), op(e.at(2)), op(e.at(3)));
    for (const auto& e : j.at("sym")) p.set_action(op(e.at(0)), e.at(1).get<Perm>(), op(e.at(2)));
    return p;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("operad JSON: ") + e.what());
  }
}

}  // namespace dendro
