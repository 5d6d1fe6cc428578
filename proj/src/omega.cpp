#include "dendro/omega.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>

namespace dendro {

bool Morphism::is_injective() const {
  std::vector<char> seen(static_cast<std::size_t>(target->edge_count()), 0);
  for (Edge e : map) {
    if (seen[e]) return false;
    seen[e] = 1;
  }
  return true;
}

bool Morphism::is_surjective() const {
  std::vector<char> seen(static_cast<std::size_t>(target->edge_count()), 0);
  for (Edge e : map) seen[e] = 1;
  return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
}

bool Morphism::is_identity() const {
  if (source->key() != target->key()) return false;
  for (std::size_t i = 0; i < map.size(); ++i)
    if (map[i] != static_cast<Edge>(i)) return false;
  return true;
}

bool Morphism::operator<(const Morphism& o) const {
  if (source->key() != o.source->key()) return key_less(source->key(), o.source->key());
  if (target->key() != o.target->key()) return key_less(target->key(), o.target->key());
  return map < o.map;
}

bool Morphism::operator==(const Morphism& o) const {
  return map == o.map && source->key() == o.source->key() && target->key() == o.target->key();
}

Morphism identity_morphism(TreePtr t) {
  std::vector<Edge> m(static_cast<std::size_t>(t->edge_count()));
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<Edge>(i);
  return Morphism{t, t, std::move(m)};
}

Morphism compose(const Morphism& g, const Morphism& f) {
  if (f.target->key() != g.source->key())
    throw std::invalid_argument("compose: " + f.target->key() + " is not " + g.source->key());
  std::vector<Edge> m(f.map.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = g.map[static_cast<std::size_t>(f.map[i])];
  return Morphism{f.source, g.target, std::move(m)};
}

namespace {

bool rec_exists(const Tree& t, Edge e, const std::vector<Edge>& inputs, std::vector<Edge>& used) {
  // Every input lies strictly above e.
  if (t.is_leaf(e)) return false;
  used.push_back(e);
  for (Edge c : t.inputs(e)) {
    std::vector<Edge> mine;
    for (Edge i : inputs)
      if (t.leq(c, i)) mine.push_back(i);
    if (mine.empty()) {
      if (!t.is_closed(c)) return false;
      for (Edge x = c; x < t.subtree_end(c); ++x)
        if (t.has_vertex(x)) used.push_back(x);
    } else if (mine.size() == 1 && mine[0] == c) {
      continue;
    } else {
      if (std::find(mine.begin(), mine.end(), c) != mine.end()) return false;
      if (!rec_exists(t, c, mine, used)) return false;
    }
  }
  return true;
}

}  // namespace

std::optional<Witness> operation_exists(const Tree& t, Edge output, std::span<const Edge> inputs) {
  auto known = [&](Edge e) { return e >= 0 && e < t.edge_count(); };
  if (!known(output)) throw std::out_of_range("operation_exists: unknown edge " + std::to_string(output));
  for (Edge i : inputs)
    if (!known(i)) throw std::out_of_range("operation_exists: unknown edge " + std::to_string(i));

  if (inputs.size() == 1 && inputs[0] == output) return Witness{true, {}};
  std::vector<Edge> in(inputs.begin(), inputs.end());
  std::sort(in.begin(), in.end());
  if (std::adjacent_find(in.begin(), in.end()) != in.end()) return std::nullopt;
  for (Edge i : in)
    if (i == output || !t.leq(output, i)) return std::nullopt;
  Witness w;
  if (!rec_exists(t, output, in, w.vertices)) return std::nullopt;
  std::sort(w.vertices.begin(), w.vertices.end());
  return w;
}

bool validate_morphism(const Tree& s, const Tree& t, std::span<const Edge> map) {
  if (static_cast<int>(map.size()) != s.edge_count()) return false;
  for (Edge e : map)
    if (e < 0 || e >= t.edge_count()) return false;
  std::vector<Edge> in;
  for (Edge x : s.vertices()) {
    in.clear();
    for (Edge y : s.inputs(x)) in.push_back(map[static_cast<std::size_t>(y)]);
    if (!operation_exists(t, map[static_cast<std::size_t>(x)], in)) return false;
  }
  return true;
}

namespace {

// Unordered input sets I with Ω(t)(I; e) nonempty, per edge, built from the
// generators: the identity {e}, or one admissible set per child of v_e.
class OpTable {
 public:
  explicit OpTable(const Tree& t) : sets_(static_cast<std::size_t>(t.edge_count())) {
    for (Edge e = t.edge_count() - 1; e >= 0; --e) {
      auto& out = sets_[e];
      if (t.is_leaf(e)) {
        out.push_back({e});
        continue;
      }
      std::vector<std::vector<Edge>> acc{{}};
      for (Edge c : t.inputs(e)) {
        std::vector<std::vector<Edge>> next;
        for (const auto& a : acc)
          for (const auto& b : sets_[c]) {
            auto x = a;
            x.insert(x.end(), b.begin(), b.end());
            next.push_back(std::move(x));
          }
        acc = std::move(next);
      }
      out.push_back({e});
      for (auto& a : acc) {
        std::sort(a.begin(), a.end());
        out.push_back(std::move(a));
      }
    }
  }

  const std::vector<std::vector<Edge>>& ordered(Edge e, int arity) {
    auto key = std::make_pair(e, arity);
    auto it = ordered_.find(key);
    if (it != ordered_.end()) return it->second;
    std::vector<std::vector<Edge>> out;
    for (auto s : sets_[e]) {
      if (static_cast<int>(s.size()) != arity) continue;
      std::sort(s.begin(), s.end());
      do out.push_back(s);
      while (std::next_permutation(s.begin(), s.end()));
    }
    std::sort(out.begin(), out.end());
    return ordered_.emplace(key, std::move(out)).first->second;
  }

 private:
  std::vector<std::vector<std::vector<Edge>>> sets_;
  std::map<std::pair<Edge, int>, std::vector<std::vector<Edge>>> ordered_;
};

}  // namespace

std::vector<Morphism> hom_set(const TreePtr& s, const TreePtr& t, const Budget& budget) {
  OpTable ops(*t);
  BudgetCounter counter(budget.max_nodes, "hom_set");
  const auto verts = s->vertices();
  std::vector<Edge> img(static_cast<std::size_t>(s->edge_count()), -1);
  std::vector<Morphism> out;

  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == verts.size()) {
      out.push_back(Morphism{s, t, img});
      return;
    }
    Edge x = verts[k];
    const auto& in = s->inputs(x);
    for (const auto& tuple : ops.ordered(img[x], static_cast<int>(in.size()))) {
      counter.tick();
      for (std::size_t i = 0; i < in.size(); ++i) img[in[i]] = tuple[i];
      rec(k + 1);
    }
  };
  for (Edge e = 0; e < t->edge_count(); ++e) {
    counter.tick();
    img[0] = e;
    rec(0);
  }
  std::sort(out.begin(), out.end(), [](const Morphism& a, const Morphism& b) { return a.map < b.map; });
  return out;
}

namespace {

// A new tree built from pieces of `t`, remembering which edge of `t` every
// new edge came from.
struct Rebuilt {
  Tree tree;
  std::vector<Edge> origin;       // new canonical edge -> t edge
  std::vector<Edge> canon_of;     // t edge -> new canonical edge (-1 if dropped)
};

Rebuilt rebuild(const Tree& t, const std::function<void(Edge, Term&, std::vector<Edge>&)>& make_root) {
  Term term;
  std::vector<Edge> planar_origin;
  make_root(0, term, planar_origin);
  std::vector<Edge> p2c;
  Rebuilt r{Tree::from_term(term, &p2c), {}, {}};
  r.origin.assign(static_cast<std::size_t>(r.tree.edge_count()), -1);
  r.canon_of.assign(static_cast<std::size_t>(t.edge_count()), -1);
  for (std::size_t k = 0; k < p2c.size(); ++k) {
    r.origin[p2c[k]] = planar_origin[k];
    r.canon_of[planar_origin[k]] = p2c[k];
  }
  return r;
}

// Recursive copy of the subtree at e with optional splicing rules.
struct CopyRules {
  Edge splice = -1;     // edge replaced by its inputs (inner contraction)
  Edge truncate = -1;   // edge kept as a leaf, inputs dropped
  Edge merge_into = -1; // unary vertex edge whose input is absorbed
};

void copy_edge(const Tree& t, Edge e, const CopyRules& rules, Term& out, std::vector<Edge>& origin) {
  out = Term{};
  origin.push_back(e);
  if (e == rules.truncate) return;
  Edge body = e;
  if (e == rules.merge_into) body = t.inputs(e)[0];
  out.leaf = t.is_leaf(body);
  for (Edge c : t.inputs(body)) {
    if (c == rules.splice) {
      for (Edge cc : t.inputs(c)) {
        out.children.emplace_back();
        copy_edge(t, cc, rules, out.children.back(), origin);
      }
      continue;
    }
    out.children.emplace_back();
    copy_edge(t, c, rules, out.children.back(), origin);
  }
}

Rebuilt rebuild_from(const Tree& t, Edge start, const CopyRules& rules) {
  return rebuild(t, [&](Edge, Term& term, std::vector<Edge>& origin) { copy_edge(t, start, rules, term, origin); });
}

std::vector<Edge> least_in_orbit(const Tree& s, const std::vector<Edge>& map) {
  std::vector<Edge> best = map;
  for (const auto& alpha : automorphisms(s)) {
    std::vector<Edge> m(map.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = map[static_cast<std::size_t>(alpha[i])];
    if (m < best) best = std::move(m);
  }
  return best;
}

}  // namespace

std::vector<Face> elementary_faces(const TreePtr& t) {
  std::vector<Face> out;
  auto add = [&](const Rebuilt& r, FaceKind kind, Edge contracted) {
    auto src = share(r.tree);
    Face f{Morphism{src, t, least_in_orbit(*src, r.origin)}, kind, contracted};
    out.push_back(std::move(f));
  };

  for (Edge e : t->inner_edges()) {
    CopyRules rules;
    rules.splice = e;
    add(rebuild_from(*t, 0, rules), FaceKind::inner, e);
  }
  // Top faces: a vertex all of whose inputs are leaves (stumps included).
  for (Edge v : t->vertices()) {
    const auto& in = t->inputs(v);
    if (!std::all_of(in.begin(), in.end(), [&](Edge c) { return t->is_leaf(c); })) continue;
    CopyRules rules;
    rules.truncate = v;
    add(rebuild_from(*t, 0, rules), FaceKind::outer, -1);
  }
  // Root faces: keep one input of the root vertex, all others being leaves.
  if (t->has_vertex(0)) {
    const auto& in = t->inputs(0);
    for (Edge keep : in) {
      bool others_leaves = std::all_of(in.begin(), in.end(), [&](Edge c) { return c == keep || t->is_leaf(c); });
      if (!others_leaves) continue;
      add(rebuild_from(*t, keep, CopyRules{}), FaceKind::outer, -1);
    }
  }

  std::sort(out.begin(), out.end(), [](const Face& a, const Face& b) { return a.map < b.map; });
  out.erase(std::unique(out.begin(), out.end(), [](const Face& a, const Face& b) { return a.map == b.map; }),
            out.end());
  return out;
}

std::vector<Morphism> degeneracies(const TreePtr& t) {
  std::vector<Morphism> out;
  for (Edge x : t->vertices()) {
    if (t->inputs(x).size() != 1) continue;
    Edge y = t->inputs(x)[0];
    CopyRules rules;
    rules.merge_into = x;
    Rebuilt r = rebuild_from(*t, 0, rules);
    std::vector<Edge> map(static_cast<std::size_t>(t->edge_count()));
    for (Edge e = 0; e < t->edge_count(); ++e) map[e] = r.canon_of[e == y ? x : e];
    out.push_back(Morphism{t, share(r.tree), std::move(map)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

Morphism Factorization::composite() const {
  Morphism m = degeneracies.empty() ? identity_morphism(iso.source) : degeneracies.front();
  for (std::size_t i = 1; i < degeneracies.size(); ++i) m = compose(degeneracies[i], m);
  m = compose(iso, m);
  for (std::size_t i = faces.size(); i-- > 0;) m = compose(faces[i], m);
  return m;
}

Factorization factorize(const Morphism& m, const Budget& budget) {
  if (!validate_morphism(*m.source, *m.target, m.map))
    throw std::invalid_argument("factorize: not a morphism");
  BudgetCounter counter(budget.max_nodes, "factorize");
  Factorization f;

  // Degeneracies: collapse unary vertices sent to identities.
  Morphism cur = m;
  for (;;) {
    bool collapsed = false;
    for (const auto& sigma : degeneracies(cur.source)) {
      counter.tick();
      // sigma identifies exactly the pair of edges it sends to one edge.
      std::vector<Edge> lifted(static_cast<std::size_t>(sigma.target->edge_count()), -1);
      bool ok = true;
      for (std::size_t e = 0; e < sigma.map.size() && ok; ++e) {
        Edge& slot = lifted[sigma.map[e]];
        if (slot >= 0 && slot != cur.map[e]) ok = false;
        slot = cur.map[e];
      }
      if (!ok) continue;
      f.degeneracies.push_back(sigma);
      cur = Morphism{sigma.target, cur.target, std::move(lifted)};
      collapsed = true;
      break;
    }
    if (!collapsed) break;
  }
  if (!cur.is_injective()) throw std::logic_error("factorize: degeneracy-free part is not injective");

  // Faces: peel codimension-one faces containing the image.
  for (;;) {
    counter.tick();
    if (cur.source->key() == cur.target->key() && cur.is_surjective()) {
      auto autos = automorphisms(*cur.target);
      if (!std::binary_search(autos.begin(), autos.end(), cur.map))
        throw std::logic_error("factorize: bijective part is not an automorphism");
      f.iso = cur;
      break;
    }
    bool stepped = false;
    for (const auto& face : elementary_faces(cur.target)) {
      counter.tick();
      const auto& d = face.map;
      std::vector<Edge> inverse(static_cast<std::size_t>(d.target->edge_count()), -1);
      for (std::size_t i = 0; i < d.map.size(); ++i) inverse[d.map[i]] = static_cast<Edge>(i);
      std::vector<Edge> lift(cur.map.size());
      bool inside = true;
      for (std::size_t i = 0; i < lift.size() && inside; ++i) {
        lift[i] = inverse[cur.map[i]];
        inside = lift[i] >= 0;
      }
      if (!inside || !validate_morphism(*cur.source, *d.source, lift)) continue;
      f.faces.push_back(d);
      cur = Morphism{cur.source, d.source, std::move(lift)};
      stepped = true;
      break;
    }
    if (!stepped) throw std::logic_error("factorize: no elementary face contains the image");
  }
  return f;
}

std::optional<SubtreeInclusion> induced_subtree(const TreePtr& t, std::vector<Edge> edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.empty()) return std::nullopt;
  std::vector<char> in(static_cast<std::size_t>(t->edge_count()), 0);
  for (Edge e : edges) in[e] = 1;
  int bottoms = 0;
  for (Edge e : edges)
    if (t->parent(e) < 0 || !in[t->parent(e)]) ++bottoms;
  if (bottoms != 1) return std::nullopt;
  Edge low = edges.front();  // pre-order: the lowest edge comes first

  std::function<void(Edge, Term&, std::vector<Edge>&)> copy = [&](Edge e, Term& out, std::vector<Edge>& origin) {
    out = Term{};
    origin.push_back(e);
    out.leaf = t->is_leaf(e);
    for (Edge c : t->inputs(e)) {
      if (!in[c]) continue;
      out.children.emplace_back();
      copy(c, out.children.back(), origin);
    }
  };
  Rebuilt r = rebuild(*t, [&](Edge, Term& term, std::vector<Edge>& origin) { copy(low, term, origin); });
  auto induced = share(r.tree);
  return SubtreeInclusion{t, std::move(edges), induced, Morphism{induced, t, r.origin}};
}

std::vector<SubtreeInclusion> subtrees(const TreePtr& t) {
  std::vector<SubtreeInclusion> out;
  std::vector<Edge> chosen;
  // Grow connected sets upward from a fixed lowest edge; `frontier` holds the
  // included edges whose inputs are still undecided.
  std::function<void(std::vector<Edge>)> grow = [&](std::vector<Edge> frontier) {
    if (frontier.empty()) {
      auto sub = induced_subtree(t, chosen);
      if (sub && validate_morphism(*sub->induced, *t, sub->inclusion.map)) out.push_back(std::move(*sub));
      return;
    }
    Edge e = frontier.back();
    frontier.pop_back();
    const auto& in = t->inputs(e);
    const std::size_t n = in.size();
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      auto next = frontier;
      std::size_t before = chosen.size();
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (std::size_t{1} << i)) {
          chosen.push_back(in[i]);
          next.push_back(in[i]);
        }
      grow(next);
      chosen.resize(before);
    }
  };
  for (Edge low = 0; low < t->edge_count(); ++low) {
    chosen.assign(1, low);
    grow({low});
  }
  std::sort(out.begin(), out.end(), [](const SubtreeInclusion& a, const SubtreeInclusion& b) {
    return a.edges < b.edges;
  });
  return out;
}

namespace {

std::vector<Morphism> collapse_all(TreePtr t) {
  std::vector<Morphism> chain;
  for (;;) {
    auto ds = degeneracies(t);
    if (ds.empty()) break;
    chain.push_back(ds.front());
    t = ds.front().target;
  }
  return chain;
}

}  // namespace

Classification classify(const TreePtr& t, int n) {
  Classification c;
  c.in_omega_n = t->max_inputs() <= n;
  c.is_reduced = t->leaf_count() == 0;
  const Tree rc = reduced_corolla(n);
  c.is_reduced_corolla = t->key() == rc.key();
  if (!c.is_reduced) return c;

  if (n == 1) {
    // Linear reduced trees with at least one vertex.
    if (t->max_inputs() > 1) return c;
    c.is_extended_corolla = true;
    if (t->vertex_count() >= 2) {
      TreePtr cur = t;
      while (cur->vertex_count() > 2) {
        auto ds = degeneracies(cur);
        c.chain.push_back(ds.front());
        cur = ds.front().target;
      }
    } else {
      c.chain = degeneracies(share(rc));
      c.chain_reversed = true;
    }
    return c;
  }
  auto chain = collapse_all(t);
  const std::string& shortened = chain.empty() ? t->key() : chain.back().target->key();
  if (shortened == rc.key()) {
    c.is_extended_corolla = true;
    c.chain = std::move(chain);
  }
  return c;
}

}  // namespace dendro
