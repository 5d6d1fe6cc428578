#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "dendro/dendroidal.hpp"

using namespace dendro;

namespace {

std::shared_ptr<const FiniteOperad> op(FiniteOperad p) { return std::make_shared<const FiniteOperad>(std::move(p)); }

std::uint64_t factorial(int n) { return n <= 1 ? 1 : n * factorial(n - 1); }

// |Hom(Ω(T), P)| for single-colored P: a product over vertices.
std::uint64_t product_over_vertices(const Tree& t, const std::function<std::uint64_t(int)>& per_arity) {
  std::uint64_t c = 1;
  for (Edge v : t.vertices()) c *= per_arity(static_cast<int>(t.inputs(v).size()));
  return c;
}

// Matching families by brute force over the full product of corolla values.
std::uint64_t brute_core(const DendroidalSet& x, const TreePtr& t) {
  std::vector<Edge> verts = t->vertices();
  std::vector<Element> sizes;
  for (Edge v : verts) sizes.push_back(x.size(corolla(static_cast<int>(t->inputs(v).size()))));
  std::uint64_t count = 0;
  Family f(verts.size(), 0);
  for (;;) {
    bool ok = true;
    for (std::size_t k = 0; k < verts.size() && ok; ++k) {
      Edge v = verts[k];
      if (v == 0) continue;
      Edge w = t->parent(v);
      std::size_t kw = static_cast<std::size_t>(std::find(verts.begin(), verts.end(), w) - verts.begin());
      const auto& in = t->inputs(w);
      int j = static_cast<int>(std::find(in.begin(), in.end(), v) - in.begin());
      auto tv = share(corolla(static_cast<int>(t->inputs(v).size())));
      auto tw = share(corolla(static_cast<int>(in.size())));
      Element a = x.restrict(Morphism{share(eta()), tv, {0}}, f[k]);
      Element b = x.restrict(Morphism{share(eta()), tw, {static_cast<Edge>(1 + j)}}, f[kw]);
      ok = a == b;
    }
    count += ok;
    std::size_t k = 0;
    while (k < f.size() && ++f[k] == sizes[k]) f[k++] = 0;
    if (k == f.size()) break;
  }
  return count;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("carrier helpers") {
  auto c = face_closure({make_tree("((**)*)")});
  std::vector<std::string> keys;
  for (const auto& t : c) keys.push_back(t->key());
  CHECK(std::find(keys.begin(), keys.end(), "*") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "(***)") != keys.end());
  CHECK(std::find(keys.begin(), keys.end(), "(**)") != keys.end());
  for (const auto& t : c) {
    for (const auto& f : elementary_faces(t)) CHECK(std::find(keys.begin(), keys.end(), f.map.source->key()) != keys.end());
  }
  auto r = reconstruction_carrier(2);
  for (const char* k : {"*", "()", "(*)", "(**)", "(()*)", "((*)*)", "((**))", "(())", "((*))"}) {
    bool found = false;
    for (const auto& t : r) found |= t->key() == make_tree(k)->key();
    CHECK_MESSAGE(found, std::string(k));
  }
}

TEST_CASE("nerve sizes match vertex products") {
  auto trees = tree_carrier(3, 3);
  NerveSet com(op(com_operad(3)), trees), ass(op(ass_operad(3)), trees), end(op(end_operad(2, 3)), trees);
  for (const auto& t : com.carrier()) {
    CHECK(com.size(*t) == 1);
    CHECK(ass.size(*t) == product_over_vertices(*t, [](int k) { return factorial(k); }));
    // End({0,1}): one coloring, 2^(2^k) functions per vertex.
    CHECK(end.size(*t) == product_over_vertices(*t, [](int k) { return std::uint64_t{1} << (1u << k); }));
  }
  CHECK(end.size(corolla(2)) == 16);
  CHECK(ass.size(corolla(3)) == 6);
}

TEST_CASE("encode and decode are inverse") {
  NerveSet x(op(omega_operad(make_tree("((**)(*))"))), {make_tree("((**)*)"), make_tree("(*(*))")});
  for (const auto& t : x.carrier())
    for (Element e = 0; e < x.size(*t); ++e) CHECK(x.encode(*t, x.decode(*t, e)) == e);
  auto t = make_tree("(**)");
  auto d = x.decode(*t, 0);
  d.colors[0] = d.colors[1];
  CHECK_THROWS_AS(x.encode(*t, d), std::invalid_argument);
}

TEST_CASE("nerve restriction along automorphisms is the action") {
  auto p = op(ass_operad(3));
  NerveSet x(p, {share(corolla(3))});
  auto t3 = x.find("(***)");
  for (const auto& s : all_permutations(3)) {
    std::vector<Edge> map{0};
    for (int j : s) map.push_back(1 + j);
    Morphism a{t3, t3, map};
    for (Element y = 0; y < x.size(*t3); ++y) {
      OpId o = x.decode(*t3, y).ops[0];
      CHECK(x.decode(*t3, x.restrict(a, y)).ops[0] == p->act(o, s));
    }
  }
}

TEST_CASE("inner face of a graft composes") {
  auto p = op(ass_operad(3));
  auto g = make_tree("((**)*)");
  NerveSet x(p, {g});
  auto t3 = share(corolla(3));
  // Leaves in pre-order list the top vertex's inputs at its slot of the root.
  std::vector<Edge> map{0};
  for (Edge e : g->leaves()) map.push_back(e);
  Morphism d{t3, g, map};
  const auto& in = g->inputs(0);
  const int slot = static_cast<int>(std::find_if(in.begin(), in.end(), [&](Edge e) { return !g->is_leaf(e); }) - in.begin());
  for (Element z = 0; z < x.size(*g); ++z) {
    auto dz = x.decode(*g, z);
    OpId expect = p->compose(dz.ops[0], slot, dz.ops[1]);
    CHECK(x.decode(*t3, x.restrict(d, z)).ops[0] == expect);
  }
}

TEST_CASE("functoriality and degeneracy sections") {
  for (auto p : {op(com_operad(2)), op(ass_operad(2)), op(end_operad(2, 2))}) {
    NerveSet x(p, tree_carrier(2, 2));
    CHECK(check_functoriality(x, 2).empty());
    CHECK(check_degeneracy_sections(x).empty());
  }
}

TEST_CASE("restriction to corollas is natural") {
  NerveSet x(op(ass_operad(3)), tree_carrier(3, 2));
  for (const auto& s : x.carrier())
    for (const auto& t : x.carrier()) {
      if (s->vertex_count() == 0 || t->vertex_count() > 2) continue;
      for (const auto& f : hom_set(s, t))
        for (Element e = 0; e < x.size(*t); ++e) {
          Family fam = segal_family(x, s, x.restrict(f, e));
          auto verts = s->vertices();
          for (std::size_t k = 0; k < verts.size(); ++k)
            CHECK(fam[k] == x.restrict(compose(f, corolla_inclusion(s, verts[k])), e));
        }
    }
}

TEST_CASE("Segal cores") {
  NerveSet x(op(ass_operad(3)), tree_carrier(3, 3));
  for (const auto& t : x.carrier()) {
    CHECK(segal_core_count(x, t) == brute_core(x, t));
    if (t->vertex_count() <= 2) CHECK(segal_core_hom(x, t).size() == segal_core_count(x, t));
  }
  auto t3 = x.find("(***)");
  CHECK(segal_core_count(x, t3) == x.size(*t3));
  auto eta_t = x.find("*");
  CHECK(segal_core_hom(x, eta_t).size() == 1);
}

TEST_CASE("nerves are strict Segal") {
  const Collection bin = Collection::trivial({{2, {"m"}}});
  for (auto p : {op(com_operad(3)), op(ass_operad(3)), op(end_operad(2, 3)), op(free_operad(bin, 3)),
                 op(omega_operad(make_tree("((**)(*))")))}) {
    NerveSet x(p, tree_carrier(3, 3, 3));
    auto rep = is_strict_segal(x);
    CHECK_MESSAGE(rep.ok(), p->name());
    CHECK(rep.trees.size() == x.carrier().size());
  }
}

TEST_CASE("Segal check is thread independent") {
  NerveSet x(op(end_operad(2, 3)), tree_carrier(3, 3, 3));
  auto a = is_strict_segal(x, {}, 1), b = is_strict_segal(x, {}, 4);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t k = 0; k < a.trees.size(); ++k) {
    CHECK(a.trees[k].tree == b.trees[k].tree);
    CHECK(a.trees[k].values == b.trees[k].values);
    CHECK(a.trees[k].core == b.trees[k].core);
  }
}

TEST_CASE("a duplicated element breaks injectivity") {
  NerveSet nerve(op(com_operad(3)), {make_tree("((**)*)")});
  TabulatedSet x = tabulate(nerve);
  // Two copies of the single element of X((*(**))) acting identically.
  x.values("(*(**))").push_back("copy");
  for (auto& [k, map] : x.actions())
    if (std::get<1>(k) == "(*(**))") map.push_back(map.at(0));
  auto rep = is_strict_segal(x);
  CHECK_FALSE(rep.ok());
  CHECK(rep.failures() == std::vector<std::string>{"(*(**))"});
  CHECK_FALSE(rep.trees.back().injective);
}

TEST_CASE("trivial carrier is vacuously Segal") {
  NerveSet x(op(com_operad(2)), {share(eta())});
  auto rep = is_strict_segal(x);
  REQUIRE(rep.trees.size() == 1);
  CHECK(rep.ok());
}

TEST_CASE("tabulated sets agree with nerves and round-trip through JSON") {
  NerveSet nerve(op(ass_operad(3)), tree_carrier(2, 3));
  TabulatedSet tab = tabulate(nerve);
  TabulatedSet back = dendroidal_from_json(dendroidal_to_json(tab));
  CHECK(dendroidal_to_json(back) == dendroidal_to_json(tab));
  for (const auto& s : nerve.carrier())
    for (const auto& t : nerve.carrier())
      for (const auto& f : hom_set(s, t))
        for (Element e = 0; e < nerve.size(*t); ++e) CHECK(back.restrict(f, e) == nerve.restrict(f, e));
  CHECK(is_strict_segal(back).ok());
  CHECK_THROWS_AS(dendroidal_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(dendroidal_from_json(R"({"trees":["(**"],"values":{},"actions":[]})"), std::invalid_argument);
}

TEST_CASE("reconstruction recovers the operad") {
  const Collection bin = Collection::trivial({{2, {"m"}}});
  std::vector<FiniteOperad> ops{com_operad(3), ass_operad(3), end_operad(2, 3), free_operad(bin, 3)};
  for (const char* k : {"(**)", "((**)*)", "((*)(*))", "(()*)"}) ops.push_back(omega_operad(make_tree(k), 3));
  for (auto& p : ops) {
    auto shared = op(p);
    NerveSet x(shared, reconstruction_carrier(3));
    FiniteOperad r = reconstruct_operad(x, 3);
    CHECK(check_operad_axioms(r, 3).ok());
    auto iso = find_isomorphism(p, r);
    REQUIRE_MESSAGE(iso.has_value(), p.name());
    CHECK(verify_isomorphism(p, r, *iso).empty());
  }
}

TEST_CASE("reconstruction needs the graft trees") {
  NerveSet x(op(ass_operad(2)), {share(corolla(2))});
  CHECK_THROWS_AS(reconstruct_operad(x, 2), std::invalid_argument);
}

TEST_CASE("corrupted fixture") {
  auto text = slurp(std::string(DENDRO_DATA_DIR) + "/corrupted_com.json");
  REQUIRE_FALSE(text.empty());
  auto x = dendroidal_from_json(text);
  auto rep = is_strict_segal(x);
  CHECK(rep.failures() == std::vector<std::string>{"(*(**))"});
}

TEST_CASE("nerve corolla restrictions agree with generic restriction") {
  const Collection bin = Collection::trivial({{2, {"m"}}});
  for (auto p : {op(ass_operad(3)), op(end_operad(2, 3)), op(free_operad(bin, 3)),
                 op(omega_operad(make_tree("((**)(*))")))}) {
    NerveSet x(p, tree_carrier(3, 3, 3));
    for (const auto& t : x.carrier()) {
      if (t->vertex_count() == 0) continue;
      std::vector<Morphism> incl;
      for (Edge v : t->vertices()) incl.push_back(corolla_inclusion(t, v));
      Family fast;
      for (Element e = 0; e < x.size(*t); ++e) {
        x.corolla_restrictions(*t, incl, e, fast);
        for (std::size_t k = 0; k < incl.size(); ++k) CHECK(fast[k] == x.restrict(incl[k], e));
      }
    }
  }
}

TEST_CASE("operad maps induce natural maps of nerves") {
  auto ass = op(ass_operad(3));
  auto com = op(com_operad(3));
  auto trees = tree_carrier(3, 3, 3);
  NerveSet x(ass, trees), y(com, trees);
  // Ass -> Com sends every operation to the one of its arity.
  auto f = [&](const Tree& t, Element e) {
    auto d = x.decode(t, e);
    for (auto& o : d.ops) o = com->operations(ass->signature(o))[0];
    return y.encode(t, d);
  };
  for (const auto& s : x.carrier())
    for (const auto& t : x.carrier()) {
      if (t->vertex_count() > 2) continue;
      for (const auto& m : hom_set(s, t))
        for (Element e = 0; e < x.size(*t); ++e) CHECK(f(*s, x.restrict(m, e)) == y.restrict(m, f(*t, e)));
    }
}
