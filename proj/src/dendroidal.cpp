#include "dendro/dendroidal.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <set>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace dendro {

namespace {

bool tree_less(const TreePtr& a, const TreePtr& b) {
  if (a->edge_count() != b->edge_count()) return a->edge_count() < b->edge_count();
  return key_less(a->key(), b->key());
}

std::string morphism_key(const Morphism& m) {
  std::string k = m.source->key() + "|" + m.target->key() + "|";
  for (Edge e : m.map) k += std::to_string(e) + ",";
  return k;
}

Element checked_mul(Element a, Element b) {
  Element r;
  if (__builtin_mul_overflow(a, b, &r)) throw BudgetExceeded("value set size overflows 64 bits");
  return r;
}

Element checked_add(Element a, Element b) {
  Element r;
  if (__builtin_add_overflow(a, b, &r)) throw BudgetExceeded("value set size overflows 64 bits");
  return r;
}

Morphism eta_into(const TreePtr& t, Edge e) { return Morphism{share(eta()), t, {e}}; }

}  // namespace

std::vector<TreePtr> face_closure(const std::vector<TreePtr>& trees, int max_inputs) {
  std::map<std::string, TreePtr> seen;
  std::vector<TreePtr> work;
  for (const auto& t : trees)
    if (seen.emplace(t->key(), t).second) work.push_back(t);
  while (!work.empty()) {
    TreePtr t = work.back();
    work.pop_back();
    auto visit = [&](const TreePtr& s) {
      if (max_inputs >= 0 && s->max_inputs() > max_inputs) return;
      if (seen.emplace(s->key(), s).second) work.push_back(s);
    };
    for (const auto& f : elementary_faces(t)) visit(f.map.source);
    for (const auto& d : degeneracies(t)) visit(d.target);
  }
  std::vector<TreePtr> out;
  for (auto& [k, t] : seen) out.push_back(t);
  std::sort(out.begin(), out.end(), tree_less);
  return out;
}

std::vector<Morphism> generating_morphisms(const std::vector<TreePtr>& carrier) {
  std::set<std::string> keys;
  for (const auto& t : carrier) keys.insert(t->key());
  std::vector<Morphism> out;
  for (const auto& t : carrier) {
    for (const auto& f : elementary_faces(t))
      if (keys.count(f.map.source->key())) out.push_back(f.map);
    for (auto& d : degeneracies(t))
      if (keys.count(d.target->key())) out.push_back(std::move(d));
    for (auto& a : automorphisms(*t)) out.push_back(Morphism{t, t, std::move(a)});
  }
  return out;
}

std::vector<TreePtr> tree_carrier(int max_vertices, int max_inputs, int max_tips) {
  EnumOptions o;
  o.max_vertices = max_vertices;
  o.max_inputs = max_inputs;
  o.max_leaves = max_tips;
  o.max_edges = 1 + max_vertices * max_inputs;
  std::vector<TreePtr> out;
  for (auto& t : enumerate_trees(o))
    if (max_tips < 0 || tip_count(t) <= max_tips) out.push_back(share(std::move(t)));
  return out;
}

int tip_count(const Tree& t) {
  int n = 0;
  for (Edge e = 0; e < t.edge_count(); ++e) n += t.inputs(e).empty();
  return n;
}

std::vector<TreePtr> reconstruction_carrier(int arity_bound) {
  std::vector<TreePtr> trees{share(eta())};
  for (int n = 0; n <= arity_bound; ++n) trees.push_back(share(corolla(n)));
  for (int n = 1; n <= arity_bound; ++n)
    for (int m = 0; n + m - 1 <= arity_bound; ++m) trees.push_back(share(graft(corolla(n), Edge{1}, corolla(m))));
  return face_closure(trees);
}

// ---------------------------------------------------------------------------
// DendroidalSet

bool DendroidalSet::contains(const std::string& key) const { return find(key) != nullptr; }

TreePtr DendroidalSet::find(const std::string& key) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (index_.size() != carrier().size()) {
    index_.clear();
    for (const auto& t : carrier()) index_[t->key()] = t;
  }
  auto it = index_.find(key);
  return it == index_.end() ? nullptr : it->second;
}

Element DendroidalSet::restrict(const Morphism& m, Element x) const {
  if (x >= size(*m.target)) throw std::out_of_range("element outside X(" + m.target->key() + ")");
  if (m.is_identity()) return x;
  std::shared_ptr<const Factorization> fz;
  const std::string key = morphism_key(m);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = factorizations_.find(key);
    if (it != factorizations_.end()) fz = it->second;
  }
  if (!fz) {
    fz = std::make_shared<const Factorization>(factorize(m));
    std::lock_guard<std::mutex> lock(mutex_);
    factorizations_.emplace(key, fz);
  }
  Element y = x;
  for (const auto& f : fz->faces) y = restrict_generator(f, y);
  if (!fz->iso.is_identity()) y = restrict_generator(fz->iso, y);
  for (auto it = fz->degeneracies.rbegin(); it != fz->degeneracies.rend(); ++it) y = restrict_generator(*it, y);
  return y;
}

void DendroidalSet::corolla_restrictions(const Tree&, const std::vector<Morphism>& incl, Element x,
                                         std::vector<Element>& out) const {
  out.resize(incl.size());
  for (std::size_t k = 0; k < incl.size(); ++k) out[k] = restrict(incl[k], x);
}

// ---------------------------------------------------------------------------
// NerveSet

struct NerveSet::TreeData {
  TreePtr tree;
  std::vector<Edge> verts;
  std::vector<int> vpos;  // edge -> index in verts, -1 for leaves
  std::vector<std::vector<Color>> colorings;
  std::map<std::vector<Color>, std::size_t> coloring_index;
  std::vector<std::vector<std::span<const OpId>>> ops;  // [coloring][vertex]
  std::vector<Element> offset;                          // colorings.size() + 1 entries
  // Offset of the coloring of vertex k's corolla within X(t_k), per coloring.
  std::vector<std::vector<Element>> corolla_offset;
};

struct NerveSet::Plan {
  struct Vertex {
    bool identity = false;
    Edge out = 0;
    std::vector<char> is_input;  // over target edges
    Perm sigma;                  // p·σ puts the inputs in source order
    bool sorted = true;
  };
  std::vector<Vertex> verts;
};

NerveSet::NerveSet(std::shared_ptr<const FiniteOperad> p, const std::vector<TreePtr>& trees)
    : p_(std::move(p)), carrier_(face_closure(trees, p_->arity_bound())), op_pos_(static_cast<std::size_t>(p_->op_count()), -1) {
  for (const auto& t : trees)
    if (t->max_inputs() > p_->arity_bound())
      throw std::invalid_argument("tree " + t->key() + " exceeds the operad's arity bound");
  for (const auto& s : p_->signatures()) {
    auto ops = p_->operations(s);
    for (std::size_t k = 0; k < ops.size(); ++k) op_pos_[ops[k]] = static_cast<int>(k);
  }
}

std::shared_ptr<const NerveSet::TreeData> NerveSet::data(const Tree& t) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = data_.find(t.key());
    if (it != data_.end()) return it->second;
  }
  auto d = std::make_shared<TreeData>();
  d->tree = share(Tree(t));
  d->verts = t.vertices();
  d->vpos.assign(static_cast<std::size_t>(t.edge_count()), -1);
  for (std::size_t k = 0; k < d->verts.size(); ++k) d->vpos[d->verts[k]] = static_cast<int>(k);
  if (t.max_inputs() > p_->arity_bound())
    throw std::invalid_argument("tree " + t.key() + " exceeds the operad's arity bound");

  const int n = t.edge_count();
  const FiniteOperad& P = *p_;
  auto sig_of = [&](const std::vector<Color>& col, Edge v) {
    Signature s{{}, col[v]};
    for (Edge c : t.inputs(v)) s.inputs.push_back(col[c]);
    return s;
  };
  // A vertex's signature is complete once its last input is colored (or,
  // for a stump, once the vertex edge itself is).
  std::vector<std::vector<Edge>> check_after(static_cast<std::size_t>(n));
  for (Edge v : d->verts) {
    const auto& in = t.inputs(v);
    check_after[in.empty() ? v : in.back()].push_back(v);
  }
  std::vector<Color> col(static_cast<std::size_t>(n), 0);
  Element total = 0;
  std::function<void(Edge)> rec = [&](Edge e) {
    if (e == n) {
      std::vector<std::span<const OpId>> ops;
      Element count = 1;
      for (Edge v : d->verts) {
        ops.push_back(P.operations(sig_of(col, v)));
        count = checked_mul(count, ops.back().size());
      }
      if (count == 0) return;
      d->coloring_index[col] = d->colorings.size();
      d->colorings.push_back(col);
      d->ops.push_back(std::move(ops));
      d->offset.push_back(total);
      total = checked_add(total, count);
      return;
    }
    for (Color c = 0; c < P.color_count(); ++c) {
      col[e] = c;
      bool ok = true;
      for (Edge v : check_after[e])
        if (P.operations(sig_of(col, v)).empty()) ok = false;
      if (ok) rec(e + 1);
    }
  };
  rec(0);
  d->offset.push_back(total);

  if (d->verts.size() > 1 || (d->verts.size() == 1 && t.edge_count() != 1 + t.leaf_count())) {
    std::map<int, std::shared_ptr<const TreeData>> cor;
    for (Edge v : d->verts) {
      const int k = static_cast<int>(t.inputs(v).size());
      if (!cor.count(k)) cor[k] = data(corolla(k));
    }
    for (const auto& c : d->colorings) {
      std::vector<Element> offs;
      for (Edge v : d->verts) {
        std::vector<Color> cc{c[v]};
        for (Edge e : t.inputs(v)) cc.push_back(c[e]);
        const auto& cd = *cor[static_cast<int>(cc.size()) - 1];
        offs.push_back(cd.offset[cd.coloring_index.at(cc)]);
      }
      d->corolla_offset.push_back(std::move(offs));
    }
  } else {
    for (std::size_t ci = 0; ci < d->colorings.size(); ++ci)
      d->corolla_offset.push_back(std::vector<Element>(d->verts.size(), d->offset[ci]));
  }

  std::lock_guard<std::mutex> lock(mutex_);
  return data_.emplace(t.key(), std::move(d)).first->second;
}

Element NerveSet::size(const Tree& t) const { return data(t)->offset.back(); }

NerveSet::Decoded NerveSet::decode(const Tree& t, Element x) const {
  auto d = data(t);
  if (x >= d->offset.back()) throw std::out_of_range("element outside X(" + t.key() + ")");
  const std::size_t ci =
      static_cast<std::size_t>(std::upper_bound(d->offset.begin(), d->offset.end(), x) - d->offset.begin()) - 1;
  Element r = x - d->offset[ci];
  Decoded out;
  out.colors = d->colorings[ci];
  out.ops.resize(d->verts.size());
  for (std::size_t k = d->verts.size(); k-- > 0;) {
    const auto& span = d->ops[ci][k];
    out.ops[k] = span[r % span.size()];
    r /= span.size();
  }
  return out;
}

Element NerveSet::encode(const Tree& t, const Decoded& dec) const {
  auto d = data(t);
  auto it = d->coloring_index.find(dec.colors);
  if (it == d->coloring_index.end() || dec.ops.size() != d->verts.size())
    throw std::invalid_argument("not an operad map on " + t.key());
  const std::size_t ci = it->second;
  Element r = 0;
  for (std::size_t k = 0; k < d->verts.size(); ++k) {
    const auto& span = d->ops[ci][k];
    const OpId op = dec.ops[k];
    const int pos = op >= 0 && op < p_->op_count() ? op_pos_[op] : -1;
    if (pos < 0 || static_cast<std::size_t>(pos) >= span.size() || span[pos] != op)
      throw std::invalid_argument("operation does not match the coloring on " + t.key());
    r = r * span.size() + static_cast<Element>(pos);
  }
  return d->offset[ci] + r;
}

void NerveSet::corolla_restrictions(const Tree& t, const std::vector<Morphism>&, Element x,
                                    std::vector<Element>& out) const {
  // A corolla inclusion sends the vertex to itself with inputs in order, so
  // the restriction keeps the vertex's operation.
  auto d = data(t);
  if (x >= d->offset.back()) throw std::out_of_range("element outside X(" + t.key() + ")");
  const std::size_t ci =
      static_cast<std::size_t>(std::upper_bound(d->offset.begin(), d->offset.end(), x) - d->offset.begin()) - 1;
  Element r = x - d->offset[ci];
  out.resize(d->verts.size());
  for (std::size_t k = d->verts.size(); k-- > 0;) {
    const Element n = d->ops[ci][k].size();
    out[k] = d->corolla_offset[ci][k] + r % n;
    r /= n;
  }
}

std::string NerveSet::element_name(const Tree& t, Element x) const {
  auto dec = decode(t, x);
  const FiniteOperad& P = *p_;
  if (t.vertex_count() == 0) return P.color_name(dec.colors[0]);
  if (t.vertex_count() == 1) return P.op_name(dec.ops[0]);
  std::string s = "[";
  for (std::size_t e = 0; e < dec.colors.size(); ++e) s += (e ? "," : "") + P.color_name(dec.colors[e]);
  s += ";";
  for (std::size_t k = 0; k < dec.ops.size(); ++k) s += (k ? "," : "") + P.op_name(dec.ops[k]);
  return s + "]";
}

std::shared_ptr<const NerveSet::Plan> NerveSet::plan(const Morphism& m) const {
  const std::string key = morphism_key(m);
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
  }
  const Tree& s = *m.source;
  const Tree& t = *m.target;
  auto pl = std::make_shared<Plan>();
  for (Edge v : s.vertices()) {
    Plan::Vertex pv;
    pv.out = m.map[v];
    std::vector<Edge> in;
    for (Edge c : s.inputs(v)) in.push_back(m.map[c]);
    auto w = operation_exists(t, pv.out, in);
    if (!w) throw std::invalid_argument("not a morphism: " + key);
    pv.identity = w->identity;
    if (!pv.identity) {
      pv.is_input.assign(static_cast<std::size_t>(t.edge_count()), 0);
      for (Edge e : in) pv.is_input[e] = 1;
      // The evaluated composite has its inputs in ascending edge order.
      std::vector<Edge> sorted = in;
      std::sort(sorted.begin(), sorted.end());
      for (Edge e : in)
        pv.sigma.push_back(static_cast<int>(std::lower_bound(sorted.begin(), sorted.end(), e) - sorted.begin()));
      pv.sorted = std::is_sorted(in.begin(), in.end());
    }
    pl->verts.push_back(std::move(pv));
  }
  std::lock_guard<std::mutex> lock(mutex_);
  return plans_.emplace(key, std::move(pl)).first->second;
}

Element NerveSet::restrict(const Morphism& m, Element x) const {
  const Tree& s = *m.source;
  const Tree& t = *m.target;
  auto dt = data(t);
  auto pl = plan(m);
  const Decoded in = decode(t, x);
  const FiniteOperad& P = *p_;

  Decoded out;
  out.colors.resize(static_cast<std::size_t>(s.edge_count()));
  for (Edge e = 0; e < s.edge_count(); ++e) out.colors[e] = in.colors[m.map[e]];

  auto compose = [&](OpId a, int i, OpId b) {
    OpId r = P.compose(a, i, b);
    if (r < 0) throw std::logic_error("operad table lacks a composite needed by the nerve");
    return r;
  };
  for (const auto& pv : pl->verts) {
    if (pv.identity) {
      out.ops.push_back(P.identity(in.colors[pv.out]));
      continue;
    }
    // Compose the vertex operations of the witness, nullary branches first
    // so intermediate arities never exceed the final one.
    std::function<OpId(Edge)> eval = [&](Edge e) -> OpId {
      OpId res = in.ops[static_cast<std::size_t>(dt->vpos[e])];
      const auto& kids = t.inputs(e);
      const int k = static_cast<int>(kids.size());
      std::vector<OpId> sub(static_cast<std::size_t>(k), -1);
      for (int j = 0; j < k; ++j)
        if (!pv.is_input[kids[j]]) sub[j] = eval(kids[j]);
      std::vector<char> removed(static_cast<std::size_t>(k), 0);
      for (int j = k; j-- > 0;)
        if (sub[j] >= 0 && P.arity(sub[j]) == 0) {
          res = compose(res, j, sub[j]);
          removed[j] = 1;
        }
      for (int j = k; j-- > 0;) {
        if (sub[j] < 0 || removed[j]) continue;
        int pos = j;
        for (int l = 0; l < j; ++l) pos -= removed[l];
        res = compose(res, pos, sub[j]);
      }
      return res;
    };
    OpId op = eval(pv.out);
    if (!pv.sorted) op = P.act(op, pv.sigma);
    out.ops.push_back(op);
  }
  return encode(s, out);
}

// ---------------------------------------------------------------------------
// TabulatedSet

void TabulatedSet::add_tree(TreePtr t, std::vector<std::string> values) {
  if (values_.count(t->key())) throw std::invalid_argument("tree " + t->key() + " listed twice");
  values_[t->key()] = std::move(values);
  carrier_.push_back(std::move(t));
}

const std::vector<std::string>& TabulatedSet::values(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("tree " + key + " is not in the carrier");
  return it->second;
}

std::vector<std::string>& TabulatedSet::values(const std::string& key) {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::out_of_range("tree " + key + " is not in the carrier");
  return it->second;
}

Element TabulatedSet::size(const Tree& t) const { return values(t.key()).size(); }

std::string TabulatedSet::element_name(const Tree& t, Element x) const { return values(t.key()).at(x); }

void TabulatedSet::set_action(const Morphism& m, std::vector<Element> map) {
  actions_[ActionKey{m.source->key(), m.target->key(), m.map}] = std::move(map);
}

Element TabulatedSet::restrict_generator(const Morphism& m, Element x) const {
  auto it = actions_.find(ActionKey{m.source->key(), m.target->key(), m.map});
  if (it == actions_.end()) throw std::logic_error("no action recorded for " + morphism_key(m));
  return it->second.at(x);
}

TabulatedSet tabulate(const DendroidalSet& x, const Budget& budget) {
  BudgetCounter counter(budget.max_elements, "tabulate");
  TabulatedSet out;
  for (const auto& t : x.carrier()) {
    const Element n = x.size(*t);
    counter.tick(n);
    std::vector<std::string> names;
    names.reserve(n);
    for (Element e = 0; e < n; ++e) names.push_back(x.element_name(*t, e));
    out.add_tree(t, std::move(names));
  }
  for (const auto& m : generating_morphisms(x.carrier())) {
    const Element n = x.size(*m.target);
    counter.tick(n);
    std::vector<Element> map(n);
    for (Element e = 0; e < n; ++e) map[e] = x.restrict(m, e);
    out.set_action(m, std::move(map));
  }
  return out;
}

using nlohmann::json;

std::string dendroidal_to_json(const TabulatedSet& x) {
  json j;
  j["trees"] = json::array();
  j["values"] = json::object();
  for (const auto& t : x.carrier()) {
    j["trees"].push_back(t->key());
    j["values"][t->key()] = x.values(t->key());
  }
  j["actions"] = json::array();
  for (const auto& [k, map] : x.actions()) {
    json a;
    a["source"] = std::get<0>(k);
    a["target"] = std::get<1>(k);
    a["edge_map"] = std::get<2>(k);
    a["map"] = map;
    j["actions"].push_back(std::move(a));
  }
  return j.dump();
}

TabulatedSet dendroidal_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("dendroidal JSON: ") + e.what());
  }
  TabulatedSet x;
  try {
    for (const auto& k : j.at("trees")) {
      auto t = make_tree(k.get<std::string>());
      if (t->key() != k.get<std::string>()) throw std::invalid_argument("dendroidal JSON: non-canonical key " + t->key());
      x.add_tree(t, j.at("values").at(t->key()).get<std::vector<std::string>>());
    }
    for (const auto& a : j.at("actions")) {
      auto s = x.find(a.at("source").get<std::string>());
      auto t = x.find(a.at("target").get<std::string>());
      if (!s || !t) throw std::invalid_argument("dendroidal JSON: action between trees outside the carrier");
      Morphism m{s, t, a.at("edge_map").get<std::vector<Edge>>()};
      if (static_cast<int>(m.map.size()) != s->edge_count() || !validate_morphism(*s, *t, m.map))
        throw std::invalid_argument("dendroidal JSON: invalid edge map " + s->key() + " -> " + t->key());
      auto map = a.at("map").get<std::vector<Element>>();
      if (map.size() != x.size(*t)) throw std::invalid_argument("dendroidal JSON: action has the wrong length");
      for (Element e : map)
        if (e >= x.size(*s)) throw std::invalid_argument("dendroidal JSON: action value out of range");
      x.set_action(m, std::move(map));
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("dendroidal JSON: ") + e.what());
  } catch (const ParseError& e) {
    throw std::invalid_argument(std::string("dendroidal JSON: ") + e.what());
  }
  return x;
}

// ---------------------------------------------------------------------------
// Segal cores

Morphism corolla_inclusion(const TreePtr& t, Edge v) {
  const auto& in = t->inputs(v);
  std::vector<Edge> map{v};
  map.insert(map.end(), in.begin(), in.end());
  return Morphism{share(corolla(static_cast<int>(in.size()))), t, std::move(map)};
}

namespace {

// η-restrictions of corolla elements: root colour and leaf colours.
struct CorollaTables {
  std::vector<Element> root;
  std::vector<std::vector<Element>> leaf;  // [j][y]
  std::vector<std::vector<Element>> by_root;
};

class CoreContext {
 public:
  CoreContext(const DendroidalSet& x, const TreePtr& t) : x_(x), t_(t) {
    if (!x.contains("*")) throw std::invalid_argument("carrier incomplete: η missing");
    eta_size_ = x.size(eta());
    for (Edge v : t->vertices()) {
      verts_.push_back(v);
      incl_.push_back(corolla_inclusion(t, v));
      const int k = static_cast<int>(t->inputs(v).size());
      if (!x.contains(corolla(k).key())) throw std::invalid_argument("carrier incomplete: t_" + std::to_string(k) + " missing");
      if (!tables_.count(k)) tables_[k] = build(k);
    }
    vpos_.assign(static_cast<std::size_t>(t->edge_count()), -1);
    for (std::size_t k = 0; k < verts_.size(); ++k) vpos_[verts_[k]] = static_cast<int>(k);
  }

  const CorollaTables& table(Edge v) const { return tables_.at(static_cast<int>(t_->inputs(v).size())); }
  const std::vector<Edge>& verts() const { return verts_; }
  const std::vector<Morphism>& inclusions() const { return incl_; }
  Element eta_size() const { return eta_size_; }
  int vpos(Edge e) const { return vpos_[e]; }

  bool matching(const Family& f) const {
    for (std::size_t k = 0; k < verts_.size(); ++k) {
      Edge v = verts_[k];
      if (v == 0) continue;
      Edge w = t_->parent(v);
      const auto& in = t_->inputs(w);
      const std::size_t j = static_cast<std::size_t>(std::find(in.begin(), in.end(), v) - in.begin());
      if (table(v).root[f[k]] != table(w).leaf[j][f[vpos_[w]]]) return false;
    }
    return true;
  }

 private:
  CorollaTables build(int k) const {
    auto tk = share(corolla(k));
    CorollaTables c;
    const Element n = x_.size(*tk);
    c.leaf.resize(static_cast<std::size_t>(k));
    c.by_root.resize(eta_size_);
    for (Element y = 0; y < n; ++y) {
      c.root.push_back(x_.restrict(eta_into(tk, 0), y));
      c.by_root.at(c.root.back()).push_back(y);
      for (int j = 0; j < k; ++j) c.leaf[j].push_back(x_.restrict(eta_into(tk, 1 + j), y));
    }
    return c;
  }

  const DendroidalSet& x_;
  TreePtr t_;
  Element eta_size_ = 0;
  std::vector<Edge> verts_;
  std::vector<int> vpos_;
  std::vector<Morphism> incl_;
  std::map<int, CorollaTables> tables_;
};

}  // namespace

Family segal_family(const DendroidalSet& x, const TreePtr& t, Element e) {
  if (t->vertex_count() == 0) return {e};
  std::vector<Morphism> incl;
  for (Edge v : t->vertices()) incl.push_back(corolla_inclusion(t, v));
  Family f;
  x.corolla_restrictions(*t, incl, e, f);
  return f;
}

std::uint64_t segal_core_count(const DendroidalSet& x, const TreePtr& t) {
  if (t->vertex_count() == 0) return x.size(*t);
  CoreContext ctx(x, t);
  const Element ne = ctx.eta_size();
  // count[e][a]: families on the part above e whose value on e is a.
  std::vector<std::vector<Element>> count(static_cast<std::size_t>(t->edge_count()));
  for (Edge e = t->edge_count(); e-- > 0;) {
    count[e].assign(ne, 0);
    if (t->is_leaf(e)) {
      std::fill(count[e].begin(), count[e].end(), 1);
      continue;
    }
    const auto& tab = ctx.table(e);
    const auto& in = t->inputs(e);
    for (Element y = 0; y < tab.root.size(); ++y) {
      Element c = 1;
      for (std::size_t j = 0; j < in.size() && c; ++j) c = checked_mul(c, count[in[j]][tab.leaf[j][y]]);
      count[e][tab.root[y]] = checked_add(count[e][tab.root[y]], c);
    }
  }
  Element total = 0;
  for (Element c : count[0]) total = checked_add(total, c);
  return total;
}

std::vector<Family> segal_core_hom(const DendroidalSet& x, const TreePtr& t, const Budget& budget) {
  std::vector<Family> out;
  BudgetCounter counter(budget.max_elements, "segal_core_hom");
  if (t->vertex_count() == 0) {
    for (Element e = 0; e < x.size(*t); ++e) out.push_back({e});
    return out;
  }
  CoreContext ctx(x, t);
  const auto& verts = ctx.verts();
  Family f(verts.size());
  // Vertices are in pre-order, so each vertex's parent is chosen first.
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == verts.size()) {
      counter.tick();
      out.push_back(f);
      return;
    }
    const Edge v = verts[k];
    const auto& tab = ctx.table(v);
    if (v == 0) {
      for (Element y = 0; y < tab.root.size(); ++y) {
        f[k] = y;
        rec(k + 1);
      }
      return;
    }
    const Edge w = t->parent(v);
    const auto& in = t->inputs(w);
    const std::size_t j = static_cast<std::size_t>(std::find(in.begin(), in.end(), v) - in.begin());
    const Element want = ctx.table(w).leaf[j][f[ctx.vpos(w)]];
    for (Element y : tab.by_root[want]) {
      f[k] = y;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

bool SegalReport::ok() const {
  return std::all_of(trees.begin(), trees.end(), [](const SegalTreeResult& r) { return r.bijective(); });
}

std::vector<std::string> SegalReport::failures() const {
  std::vector<std::string> out;
  for (const auto& r : trees)
    if (!r.bijective()) out.push_back(r.tree);
  return out;
}

namespace {

SegalTreeResult segal_at(const DendroidalSet& x, const TreePtr& t, const Budget& budget) {
  SegalTreeResult r;
  r.tree = t->key();
  r.values = x.size(*t);
  r.core = segal_core_count(x, t);
  if (r.values > budget.max_elements) throw BudgetExceeded("Segal check at " + t->key() + ": value set too large");
  if (t->vertex_count() == 0) return r;

  CoreContext ctx(x, t);
  const auto& incl = ctx.inclusions();
  // Families are packed into one integer when the product of corolla sizes fits.
  std::vector<Element> radix;
  bool packed = true;
  Element prod = 1;
  for (Edge v : ctx.verts()) {
    radix.push_back(std::max<Element>(ctx.table(v).root.size(), 1));
    if (__builtin_mul_overflow(prod, radix.back(), &prod)) packed = false;
  }
  std::vector<Element> codes;
  std::set<Family> families;
  Family f(incl.size());
  if (packed) codes.reserve(r.values);
  for (Element e = 0; e < r.values; ++e) {
    x.corolla_restrictions(*t, incl, e, f);
    Element code = 0;
    for (std::size_t k = 0; k < incl.size(); ++k) code = code * radix[k] + f[k];
    if (!ctx.matching(f)) {
      if (r.matching) r.detail = "element " + std::to_string(e) + " restricts to a non-matching family";
      r.matching = false;
    }
    if (packed) codes.push_back(code);
    else if (!families.insert(f).second && r.injective) {
      r.injective = false;
      r.detail = "two elements share the family of element " + std::to_string(e);
    }
  }
  if (packed) {
    std::sort(codes.begin(), codes.end());
    if (std::adjacent_find(codes.begin(), codes.end()) != codes.end()) {
      r.injective = false;
      if (r.detail.empty()) r.detail = "two elements restrict to the same family";
    }
  }
  if (r.detail.empty() && r.values != r.core)
    r.detail = std::to_string(r.values) + " elements but " + std::to_string(r.core) + " matching families";
  return r;
}

}  // namespace

SegalReport is_strict_segal(const DendroidalSet& x, std::vector<TreePtr> trees, int threads, const Budget& budget) {
  if (trees.empty()) trees = x.carrier();
  SegalReport rep;
  rep.trees.resize(trees.size());
  std::vector<std::exception_ptr> errors(trees.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < trees.size();) {
      try {
        rep.trees[k] = segal_at(x, trees[k], budget);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(trees.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rep;
}

std::vector<std::string> check_functoriality(const DendroidalSet& x, int max_vertices, const Budget& budget) {
  std::vector<TreePtr> trees;
  for (const auto& t : x.carrier())
    if (t->vertex_count() <= max_vertices) trees.push_back(t);
  BudgetCounter counter(budget.max_nodes, "check_functoriality");
  std::vector<std::string> out;
  std::map<std::pair<std::string, std::string>, std::vector<Morphism>> homs;
  auto hom = [&](const TreePtr& a, const TreePtr& b) -> const std::vector<Morphism>& {
    auto key = std::make_pair(a->key(), b->key());
    auto it = homs.find(key);
    if (it == homs.end()) it = homs.emplace(key, hom_set(a, b, budget)).first;
    return it->second;
  };
  for (const auto& a : trees)
    for (const auto& b : trees)
      for (const auto& f : hom(a, b))
        for (const auto& c : trees)
          for (const auto& g : hom(b, c)) {
            const Morphism gf = compose(g, f);
            for (Element e = 0; e < x.size(*c); ++e) {
              counter.tick();
              if (x.restrict(gf, e) != x.restrict(f, x.restrict(g, e))) {
                out.push_back("X(g∘f) ≠ X(f)X(g) for " + a->key() + " -> " + b->key() + " -> " + c->key());
                break;
              }
            }
          }
  return out;
}

std::vector<std::string> check_degeneracy_sections(const DendroidalSet& x) {
  std::vector<std::string> out;
  for (const auto& t : x.carrier())
    for (const auto& sigma : degeneracies(t)) {
      if (!x.contains(sigma.target->key())) continue;
      for (const auto& face : elementary_faces(t)) {
        const auto& delta = face.map;
        if (delta.source->key() != sigma.target->key() || !compose(sigma, delta).is_identity()) continue;
        for (Element y = 0; y < x.size(*sigma.target); ++y)
          if (x.restrict(delta, x.restrict(sigma, y)) != y) {
            out.push_back("section fails on " + t->key());
            break;
          }
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// reconstruction

FiniteOperad reconstruct_operad(const DendroidalSet& x, int arity_bound, const Budget& budget) {
  auto need = [&](const Tree& t) {
    auto p = x.find(t.key());
    if (!p) throw std::invalid_argument("carrier incomplete: " + t.key() + " missing");
    return p;
  };
  auto eta_t = need(eta());
  std::vector<std::string> colors;
  for (Element c = 0; c < x.size(*eta_t); ++c) colors.push_back(x.element_name(*eta_t, c));
  FiniteOperad P("reconstructed", colors, arity_bound);
  BudgetCounter counter(budget.max_elements, "reconstruct_operad");

  std::vector<TreePtr> tn;
  std::vector<std::vector<OpId>> ops(static_cast<std::size_t>(arity_bound) + 1);
  for (int n = 0; n <= arity_bound; ++n) {
    tn.push_back(need(corolla(n)));
    const Element size = x.size(*tn[n]);
    counter.tick(size);
    for (Element y = 0; y < size; ++y) {
      Signature s;
      s.output = static_cast<Color>(x.restrict(eta_into(tn[n], 0), y));
      for (int j = 0; j < n; ++j) s.inputs.push_back(static_cast<Color>(x.restrict(eta_into(tn[n], 1 + j), y)));
      ops[n].push_back(P.add_operation(s, x.element_name(*tn[n], y)));
    }
  }
  const Morphism unit = degeneracies(tn[1]).at(0);
  for (Color c = 0; c < P.color_count(); ++c) P.set_identity(c, ops[1][x.restrict(unit, static_cast<Element>(c))]);

  auto aut = [&](int n, const Perm& s) {
    std::vector<Edge> map{0};
    for (int j : s) map.push_back(1 + j);
    return Morphism{tn[n], tn[n], std::move(map)};
  };
  for (int n = 0; n <= arity_bound; ++n)
    for (const auto& s : all_permutations(n)) {
      const Morphism a = aut(n, s);
      for (std::size_t y = 0; y < ops[n].size(); ++y) P.set_action(ops[n][y], s, ops[n][x.restrict(a, y)]);
    }

  // Inverse of the Segal map on each graft, built once per tree.
  std::map<std::string, std::map<Family, Element>> inverse;
  auto invert = [&](const TreePtr& g) -> const std::map<Family, Element>& {
    auto it = inverse.find(g->key());
    if (it != inverse.end()) return it->second;
    std::map<Family, Element> inv;
    for (Element z = 0; z < x.size(*g); ++z) {
      counter.tick();
      if (!inv.emplace(segal_family(x, g, z), z).second)
        throw std::invalid_argument("not strict Segal at " + g->key());
    }
    return inverse[g->key()] = std::move(inv);
  };

  for (int n = 1; n <= arity_bound; ++n)
    for (int m = 0; n + m - 1 <= arity_bound; ++m)
      for (int i = 0; i < n; ++i) {
        // Planar graft t_n ∘_i t_m. Planar pre-order: root 0, root children
        // 1..i, the grafted vertex 1+i with leaves 2+i.., then the rest.
        std::vector<Term> kids(static_cast<std::size_t>(n), Term::leaf_edge());
        kids[i] = Term::vertex(std::vector<Term>(static_cast<std::size_t>(m), Term::leaf_edge()));
        std::vector<Edge> p2c;
        Tree graft_tree = Tree::from_term(Term::vertex(kids), &p2c);
        auto g = need(graft_tree);
        auto planar_child = [&](int j) { return p2c[j < i ? 1 + j : (j == i ? 1 + i : 1 + j + m)]; };
        const Edge inner = planar_child(i);

        // π(j) = planar position of canonical input j.
        std::vector<int> pi_root, pi_top;
        for (Edge c : g->inputs(0))
          for (int j = 0; j < n; ++j)
            if (planar_child(j) == c) pi_root.push_back(j);
        for (Edge c : g->inputs(inner))
          for (int t = 0; t < m; ++t)
            if (p2c[2 + i + t] == c) pi_top.push_back(t);
        const Morphism a_root = aut(n, pi_root), a_top = aut(m, pi_top);

        std::vector<Edge> face_map{0};
        for (int j = 0; j < n; ++j) {
          if (j != i) face_map.push_back(planar_child(j));
          else
            for (int t = 0; t < m; ++t) face_map.push_back(p2c[2 + i + t]);
        }
        const Morphism face{tn[n + m - 1], g, face_map};
        const auto& inv = invert(g);
        const std::vector<Edge> gv = g->vertices();
        const std::size_t root_pos = 0;
        const std::size_t top_pos = static_cast<std::size_t>(std::find(gv.begin(), gv.end(), inner) - gv.begin());

        for (std::size_t yp = 0; yp < ops[n].size(); ++yp)
          for (std::size_t yq = 0; yq < ops[m].size(); ++yq) {
            if (!P.composable(ops[n][yp], i, ops[m][yq])) continue;
            Family f(2);
            f[root_pos] = x.restrict(a_root, yp);
            f[top_pos] = x.restrict(a_top, yq);
            auto it = inv.find(f);
            if (it == inv.end()) throw std::invalid_argument("not strict Segal at " + g->key());
            const Element r = x.restrict(face, it->second);
            P.set_composition(ops[n][yp], i, ops[m][yq], ops[n + m - 1][r]);
          }
      }
  return P;
}

}  // namespace dendro
