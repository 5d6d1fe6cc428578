#include "dendro/tree.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <utility>

namespace dendro {

ParseError::ParseError(const std::string& msg, std::size_t pos)
    : std::runtime_error(msg + " at position " + std::to_string(pos)), pos_(pos) {}

namespace {

class TermParser {
 public:
  explicit TermParser(std::string_view text) : text_(text) {}

  Term parse() {
    Term t = parse_tree();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("trailing input", pos_);
    return t;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  Term parse_tree() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input, expected '*' or '('", pos_);
    Term t;
    char c = text_[pos_];
    if (c == '*') {
      ++pos_;
    } else if (c == '(') {
      ++pos_;
      t.leaf = false;
      for (;;) {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unclosed '('", pos_);
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        t.children.push_back(parse_tree());
      }
    } else {
      throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '@') {
      std::size_t at = pos_;
      ++pos_;
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      if (pos_ == start) throw ParseError("empty edge name", at);
      t.label = std::string(text_.substr(start, pos_ - start));
      if (!names_.insert(t.label).second) throw ParseError("duplicate edge name '" + t.label + "'", at);
    }
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::set<std::string> names_;
};

int char_rank(char c) {
  switch (c) {
    case ')': return 0;
    case '*': return 1;
    case '(': return 2;
    default: return 3 + static_cast<unsigned char>(c);
  }
}

void format_into(const Term& t, std::string& out) {
  if (t.leaf) {
    out += '*';
  } else {
    out += '(';
    for (const auto& c : t.children) format_into(c, out);
    out += ')';
  }
  if (!t.label.empty()) {
    out += '@';
    out += t.label;
  }
}

struct Flat {
  std::vector<std::vector<int>> kids;
  std::vector<char> leaf;
  std::vector<std::string> label;
};

int flatten(const Term& t, Flat& f) {
  int id = static_cast<int>(f.leaf.size());
  f.kids.emplace_back();
  f.leaf.push_back(t.leaf ? 1 : 0);
  f.label.push_back(t.label);
  for (const auto& c : t.children) {
    int cid = flatten(c, f);
    f.kids[id].push_back(cid);
  }
  return id;
}

std::uint64_t factorial(int n) {
  std::uint64_t r = 1;
  for (int i = 2; i <= n; ++i) r *= static_cast<std::uint64_t>(i);
  return r;
}

}  // namespace

Term parse_term(std::string_view text) { return TermParser(text).parse(); }

std::string format_term(const Term& t) {
  std::string out;
  format_into(t, out);
  return out;
}

bool key_less(std::string_view a, std::string_view b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(),
                                      [](char x, char y) { return char_rank(x) < char_rank(y); });
}

Tree::Tree()
    : parent_{-1},
      inputs_(1),
      leaf_{1},
      closed_{0},
      end_{1},
      subkey_{"*"},
      label_(1),
      vertex_count_(0) {}

Tree Tree::from_term(const Term& term, std::vector<Edge>* planar_to_canonical) {
  Flat f;
  flatten(term, f);
  const int n = static_cast<int>(f.leaf.size());

  // Planar pre-order puts children after parents, so a reverse sweep sees
  // every child before its parent.
  std::vector<std::string> key(n);
  std::vector<std::vector<int>> sorted(n);
  for (int i = n - 1; i >= 0; --i) {
    if (f.leaf[i]) {
      key[i] = "*";
      continue;
    }
    sorted[i] = f.kids[i];
    std::stable_sort(sorted[i].begin(), sorted[i].end(),
                     [&](int a, int b) { return key_less(key[a], key[b]); });
    std::string k = "(";
    for (int c : sorted[i]) k += key[c];
    k += ')';
    key[i] = std::move(k);
  }

  Tree t;
  t.parent_.assign(n, -1);
  t.inputs_.assign(n, {});
  t.leaf_.assign(n, 0);
  t.closed_.assign(n, 0);
  t.end_.assign(n, 0);
  t.subkey_.assign(n, {});
  t.label_.assign(n, {});
  t.vertex_count_ = 0;
  std::vector<Edge> p2c(n, -1);

  int next = 0;
  std::function<Edge(int, Edge)> emit = [&](int planar, Edge parent) -> Edge {
    Edge e = next++;
    p2c[planar] = e;
    t.parent_[e] = parent;
    t.leaf_[e] = f.leaf[planar];
    t.subkey_[e] = key[planar];
    t.label_[e] = f.label[planar];
    if (!f.leaf[planar]) ++t.vertex_count_;
    for (int c : sorted[planar]) t.inputs_[e].push_back(emit(c, e));
    t.end_[e] = next;
    return e;
  };
  emit(0, -1);

  for (int e = n - 1; e >= 0; --e) {
    if (t.leaf_[e]) continue;
    bool closed = true;
    for (Edge c : t.inputs_[e]) closed = closed && t.closed_[c];
    t.closed_[e] = closed ? 1 : 0;
  }
  if (planar_to_canonical) *planar_to_canonical = std::move(p2c);
  return t;
}

bool Tree::has_labels() const {
  return std::any_of(label_.begin(), label_.end(), [](const std::string& s) { return !s.empty(); });
}

Address Tree::address(Edge e) const {
  Address a;
  while (parent_[e] >= 0) {
    Edge p = parent_[e];
    const auto& in = inputs_[p];
    a.push_back(static_cast<int>(std::find(in.begin(), in.end(), e) - in.begin()));
    e = p;
  }
  std::reverse(a.begin(), a.end());
  return a;
}

std::optional<Edge> Tree::at(const Address& a) const {
  Edge e = 0;
  for (int i : a) {
    if (is_leaf(e) || i < 0 || i >= static_cast<int>(inputs_[e].size())) return std::nullopt;
    e = inputs_[e][i];
  }
  return e;
}

std::vector<Edge> Tree::leaves() const {
  std::vector<Edge> out;
  for (Edge e = 0; e < edge_count(); ++e)
    if (is_leaf(e)) out.push_back(e);
  return out;
}

std::vector<Edge> Tree::vertices() const {
  std::vector<Edge> out;
  for (Edge e = 0; e < edge_count(); ++e)
    if (has_vertex(e)) out.push_back(e);
  return out;
}

std::vector<Edge> Tree::inner_edges() const {
  std::vector<Edge> out;
  for (Edge e = 1; e < edge_count(); ++e)
    if (has_vertex(e)) out.push_back(e);
  return out;
}

int Tree::max_inputs() const {
  int m = 0;
  for (const auto& in : inputs_) m = std::max(m, static_cast<int>(in.size()));
  return m;
}

Term Tree::to_term(Edge from) const {
  Term t;
  t.leaf = is_leaf(from);
  t.label = label_[from];
  for (Edge c : inputs_[from]) t.children.push_back(to_term(c));
  return t;
}

std::string Tree::format() const { return format_term(to_term()); }

Tree parse_tree(std::string_view text) { return Tree::from_term(parse_term(text)); }

TreePtr make_tree(std::string_view text) { return std::make_shared<const Tree>(parse_tree(text)); }

TreePtr share(Tree t) { return std::make_shared<const Tree>(std::move(t)); }

Tree canonical_form(const Term& t) { return Tree::from_term(t); }

std::uint64_t aut_order(const Tree& t) {
  std::uint64_t order = 1;
  for (Edge e : t.vertices()) {
    const auto& in = t.inputs(e);
    // Children are sorted, so equal sub-keys are adjacent.
    std::size_t i = 0;
    while (i < in.size()) {
      std::size_t j = i;
      while (j < in.size() && t.subkey(in[j]) == t.subkey(in[i])) ++j;
      order *= factorial(static_cast<int>(j - i));
      i = j;
    }
  }
  return order;
}

TreeStats stats(const Tree& t) {
  TreeStats s;
  s.n_edges = t.edge_count();
  s.n_vertices = t.vertex_count();
  s.n_inner_edges = static_cast<int>(t.inner_edges().size());
  for (Edge e : t.vertices()) s.valences.push_back(static_cast<int>(t.inputs(e).size()) + 1);
  std::sort(s.valences.rbegin(), s.valences.rend());
  s.max_inputs = t.max_inputs();
  s.is_reduced = t.leaf_count() == 0;
  s.aut_order = aut_order(t);
  return s;
}

namespace {

// All isomorphisms from the subtree at `a` onto the subtree at `b` (equal
// sub-keys), written into maps indexed by edges of the whole tree.
void isos(const Tree& t, Edge a, Edge b, std::vector<std::vector<Edge>>& out) {
  std::vector<Edge> base(t.edge_count(), -1);
  base[a] = b;
  out.assign(1, base);
  const auto& ia = t.inputs(a);
  const auto& ib = t.inputs(b);
  std::size_t i = 0;
  while (i < ia.size()) {
    std::size_t j = i;
    while (j < ia.size() && t.subkey(ia[j]) == t.subkey(ia[i])) ++j;
    // Children i..j-1 of `a` go bijectively onto children i..j-1 of `b`.
    std::vector<int> perm(j - i);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::vector<Edge>> next;
    do {
      std::vector<std::vector<std::vector<Edge>>> per_child;
      for (std::size_t k = 0; k < perm.size(); ++k) {
        std::vector<std::vector<Edge>> sub;
        isos(t, ia[i + k], ib[i + perm[k]], sub);
        per_child.push_back(std::move(sub));
      }
      for (const auto& partial : out) {
        std::vector<std::vector<Edge>> acc{partial};
        for (const auto& sub : per_child) {
          std::vector<std::vector<Edge>> grown;
          for (const auto& x : acc)
            for (const auto& s : sub) {
              auto y = x;
              for (std::size_t e = 0; e < s.size(); ++e)
                if (s[e] >= 0) y[e] = s[e];
              grown.push_back(std::move(y));
            }
          acc = std::move(grown);
        }
        for (auto& x : acc) next.push_back(std::move(x));
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
    out = std::move(next);
    i = j;
  }
}

}  // namespace

std::vector<std::vector<Edge>> automorphisms(const Tree& t) {
  std::vector<std::vector<Edge>> out;
  isos(t, 0, 0, out);
  std::sort(out.begin(), out.end());
  return out;
}

Tree graft(const Tree& base, Edge leaf, const Tree& scion) {
  if (leaf < 0 || leaf >= base.edge_count() || !base.is_leaf(leaf))
    throw std::invalid_argument("graft: edge " + format_address(base.address(std::max(leaf, 0))) +
                                " is not a leaf");
  std::function<Term(Edge)> build = [&](Edge e) -> Term {
    if (e == leaf) {
      Term s = scion.to_term();
      if (s.label.empty()) s.label = base.label(e);
      return s;
    }
    Term t;
    t.leaf = base.is_leaf(e);
    t.label = base.label(e);
    for (Edge c : base.inputs(e)) t.children.push_back(build(c));
    return t;
  };
  return Tree::from_term(build(0));
}

Tree graft(const Tree& base, const Address& leaf, const Tree& scion) {
  auto e = base.at(leaf);
  if (!e) throw std::invalid_argument("graft: no edge at address " + format_address(leaf));
  return graft(base, *e, scion);
}

Tree eta() { return Tree(); }

Tree corolla(int n) {
  std::vector<Term> kids(static_cast<std::size_t>(n), Term::leaf_edge());
  return Tree::from_term(Term::vertex(std::move(kids)));
}

Tree reduced_corolla(int n) {
  std::vector<Term> kids(static_cast<std::size_t>(n), Term::vertex({}));
  return Tree::from_term(Term::vertex(std::move(kids)));
}

namespace {

struct Shape {
  std::string key;
  int edges;
  int vertices;
  int leaves;
};

}  // namespace

std::vector<Tree> enumerate_trees(const EnumOptions& opt) {
  auto fits = [&](int v, int l) {
    return (opt.max_vertices < 0 || v <= opt.max_vertices) && (opt.max_leaves < 0 || l <= opt.max_leaves);
  };
  std::vector<Shape> all;  // ordered by (edges, key)

  for (int e = 1; e <= opt.max_edges; ++e) {
    std::vector<Shape> here;
    if (e == 1 && !opt.reduced_only && fits(0, 1)) here.push_back({"*", 1, 0, 1});
    // Vertex on top of the root with children totalling e-1 edges.
    std::vector<int> pick;
    std::function<void(std::size_t, int)> choose = [&](std::size_t from, int remaining) {
      if (remaining == 0) {
        std::vector<const Shape*> kids;
        int v = 1, l = 0;
        for (int i : pick) {
          kids.push_back(&all[static_cast<std::size_t>(i)]);
          v += all[i].vertices;
          l += all[i].leaves;
        }
        if (!fits(v, l)) return;
        std::sort(kids.begin(), kids.end(),
                  [](const Shape* a, const Shape* b) { return key_less(a->key, b->key); });
        std::string k = "(";
        for (const Shape* s : kids) k += s->key;
        k += ')';
        here.push_back({std::move(k), e, v, l});
        return;
      }
      if (static_cast<int>(pick.size()) >= opt.max_inputs) return;
      for (std::size_t i = from; i < all.size(); ++i) {
        if (all[i].edges > remaining) break;
        pick.push_back(static_cast<int>(i));
        choose(i, remaining - all[i].edges);
        pick.pop_back();
      }
    };
    choose(0, e - 1);
    std::sort(here.begin(), here.end(), [](const Shape& a, const Shape& b) { return key_less(a.key, b.key); });
    for (auto& s : here) all.push_back(std::move(s));
  }

  std::vector<Tree> out;
  out.reserve(all.size());
  for (const auto& s : all) out.push_back(parse_tree(s.key));
  return out;
}

std::vector<Tree> enumerate_trees(int max_edges, int max_inputs, bool reduced_only) {
  EnumOptions o;
  o.max_edges = max_edges;
  o.max_inputs = max_inputs;
  o.reduced_only = reduced_only;
  return enumerate_trees(o);
}

std::string format_address(const Address& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i) s += '.';
    s += std::to_string(a[i]);
  }
  return s;
}

Address parse_address(std::string_view s) {
  Address a;
  if (s.empty()) return a;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = s.find('.', start);
    std::string part(s.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw std::invalid_argument("bad edge address '" + std::string(s) + "'");
    a.push_back(std::stoi(part));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return a;
}

}  // namespace dendro
