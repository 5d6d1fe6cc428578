#include <algorithm>
#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "dendro/omega.hpp"
#include "dendro/operad.hpp"

using namespace dendro;

namespace {

// Leaf-labelled binary (or k-ary) trees on labels 0..n-1, children sorted
// as strings, deduplicated. Independent of the free-operad term code.
std::set<std::string> labelled_trees(const std::vector<int>& labels, int k) {
  std::set<std::string> out;
  if (labels.size() == 1) {
    out.insert(std::to_string(labels[0]));
    return out;
  }
  // assign every label to one of k slots, all slots nonempty
  std::vector<int> slot(labels.size(), 0);
  for (;;) {
    std::vector<std::vector<int>> blocks(static_cast<std::size_t>(k));
    for (std::size_t j = 0; j < labels.size(); ++j) blocks[slot[j]].push_back(labels[j]);
    if (std::none_of(blocks.begin(), blocks.end(), [](const auto& b) { return b.empty(); })) {
      std::vector<std::vector<std::string>> subs;
      for (const auto& b : blocks) {
        auto s = labelled_trees(b, k);
        subs.emplace_back(s.begin(), s.end());
      }
      bool any_empty = std::any_of(subs.begin(), subs.end(), [](const auto& v) { return v.empty(); });
      std::vector<std::size_t> pick(static_cast<std::size_t>(k), 0);
      while (!any_empty) {
        std::vector<std::string> kids;
        for (int j = 0; j < k; ++j) kids.push_back(subs[j][pick[j]]);
        std::sort(kids.begin(), kids.end());
        std::string t = "(";
        for (const auto& c : kids) t += c + " ";
        out.insert(t + ")");
        int j = 0;
        while (j < k && ++pick[j] == subs[j].size()) pick[j++] = 0;
        if (j == k) break;
      }
    }
    std::size_t j = 0;
    while (j < slot.size() && ++slot[j] == k) slot[j++] = 0;
    if (j == slot.size()) break;
  }
  return out;
}

std::size_t level_size(const FiniteOperad& p, int n) {
  std::size_t c = 0;
  for (OpId o = 0; o < p.op_count(); ++o)
    if (p.arity(o) == n) ++c;
  return c;
}

// Value table of an End({0,1}) element from its name "f<values>".
std::vector<int> table_of(const FiniteOperad& p, OpId o) {
  std::vector<int> t;
  for (char c : p.op_name(o).substr(1)) t.push_back(c - '0');
  return t;
}

// A copy of p with operations added in a shuffled order.
FiniteOperad shuffled(const FiniteOperad& p, unsigned seed) {
  std::vector<OpId> order(static_cast<std::size_t>(p.op_count()));
  for (OpId o = 0; o < p.op_count(); ++o) order[o] = o;
  std::mt19937 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::string> colors;
  for (Color c = 0; c < p.color_count(); ++c) colors.push_back(p.color_name(c));
  FiniteOperad q(p.name(), colors, p.arity_bound());
  std::vector<OpId> to(static_cast<std::size_t>(p.op_count()));
  for (OpId o : order) to[o] = q.add_operation(p.signature(o), p.op_name(o));
  for (Color c = 0; c < p.color_count(); ++c) q.set_identity(c, to[p.identity(c)]);
  for (OpId a = 0; a < p.op_count(); ++a) {
    for (const auto& s : all_permutations(p.arity(a))) q.set_action(to[a], s, to[p.act(a, s)]);
    for (int i = 0; i < p.arity(a); ++i)
      for (OpId b = 0; b < p.op_count(); ++b)
        if (p.composable(a, i, b)) q.set_composition(to[a], i, to[b], to[p.compose(a, i, b)]);
  }
  return q;
}

}  // namespace

TEST_CASE("permutation helpers") {
  auto perms = all_permutations(4);
  CHECK(perms.size() == 24);
  for (std::size_t k = 0; k < perms.size(); ++k) {
    CHECK(perm_rank(perms[k]) == k);
    CHECK(perm_compose(perms[k], perm_inverse(perms[k])) == Perm{0, 1, 2, 3});
  }
  CHECK(all_permutations(0).size() == 1);
  CHECK_FALSE(is_permutation({0, 0}));
}

TEST_CASE("Com") {
  auto com = com_operad(4);
  for (int n = 0; n <= 4; ++n) CHECK(level_size(com, n) == 1);
  CHECK(check_operad_axioms(com, 4).ok());
}

TEST_CASE("Ass") {
  auto ass = ass_operad(4);
  CHECK(level_size(ass, 3) == 6);
  CHECK(level_size(ass, 0) == 1);
  auto rep = check_operad_axioms(ass, 4);
  CHECK(rep.ok());
  CHECK(rep.instances > 1000);
  // free action on each level
  for (OpId p = 0; p < ass.op_count(); ++p) {
    std::set<OpId> orbit;
    for (const auto& s : all_permutations(ass.arity(p))) orbit.insert(ass.act(p, s));
    CHECK(orbit.size() == all_permutations(ass.arity(p)).size());
  }
}

TEST_CASE("End({0,1})") {
  auto end = end_operad(2, 3);
  CHECK(level_size(end, 0) == 2);
  CHECK(level_size(end, 1) == 4);
  CHECK(level_size(end, 2) == 16);
  CHECK(level_size(end, 3) == 256);
  CHECK(check_operad_axioms(end, 2).ok());
  CHECK(check_operad_axioms(end, 3).ok());

  // First projection x ↦ x_0 swapped becomes the second projection.
  OpId first = *end.find_op("f0011");
  CHECK(end.act(first, {1, 0}) == *end.find_op("f0101"));

  // Composition against direct evaluation of the value tables.
  for (OpId p = 0; p < end.op_count(); ++p) {
    if (end.arity(p) != 2) continue;
    for (OpId q = 0; q < end.op_count(); ++q) {
      if (end.arity(q) != 2) continue;
      auto tp = table_of(end, p), tq = table_of(end, q);
      auto tr = table_of(end, end.compose(p, 1, q));
      for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
          for (int z = 0; z < 2; ++z) CHECK(tr[x * 4 + y * 2 + z] == tp[x * 2 + tq[y * 2 + z]]);
    }
  }
  CHECK_THROWS_AS(end_operad(2, 6), BudgetExceeded);
}

TEST_CASE("a corrupted composite is reported exactly where it is used") {
  auto ass = ass_operad(3);
  OpId m = *ass.find_op("w01");
  OpId good = ass.compose(m, 0, m);
  OpId bad = *ass.find_op("w021");
  REQUIRE(good != bad);
  ass.set_composition(m, 0, m, bad);
  auto rep = check_operad_axioms(ass, 3);
  REQUIRE_FALSE(rep.ok());
  const std::array<OpId, 3> key{m, 0, m};
  for (const auto& v : rep.violations) {
    bool uses_it = std::find(v.uses.begin(), v.uses.end(), key) != v.uses.end();
    CHECK_MESSAGE(uses_it, v.law << ": " << v.detail);
  }
  // Restoring the entry clears every report.
  ass.set_composition(m, 0, m, good);
  CHECK(check_operad_axioms(ass, 3).ok());
}

TEST_CASE("missing table entries are errors") {
  FiniteOperad p("partial", {"c"}, 2);
  OpId id = p.add_operation({{0}, 0}, "id");
  p.set_identity(0, id);
  p.set_action(id, {0}, id);
  CHECK_THROWS_AS(check_operad_axioms(p, 2), std::logic_error);
}

TEST_CASE("Omega(T) of the six-edge example") {
  auto t = make_tree("((( *@a *@c )@b)@d *@e)@f");
  auto om = omega_operad(t);
  CHECK(om.color_count() == 6);
  std::set<std::pair<std::set<std::string>, std::string>> unordered;
  for (OpId o = 0; o < om.op_count(); ++o) {
    const auto& s = om.signature(o);
    if (s.inputs == std::vector<Color>{s.output}) continue;
    std::set<std::string> in;
    for (Color c : s.inputs) in.insert(om.color_name(c));
    unordered.insert({in, om.color_name(s.output)});
  }
  using U = std::pair<std::set<std::string>, std::string>;
  std::set<U> expected{U{{"a", "c"}, "b"}, U{{"b"}, "d"}, U{{"d", "e"}, "f"},
                       U{{"a", "c"}, "d"}, U{{"b", "e"}, "f"}, U{{"a", "c", "e"}, "f"}};
  CHECK(unordered == expected);
  CHECK(check_operad_axioms(om, om.arity_bound()).ok());
}

TEST_CASE("Omega(T) invariants") {
  CHECK(omega_operad(share(eta())).op_count() == 1);
  for (auto& tr : enumerate_trees(5, 3, false)) {
    auto t = share(std::move(tr));
    auto om = omega_operad(t);
    for (const auto& s : om.signatures()) CHECK(om.operations(s).size() == 1);
    for (Color c = 0; c < om.color_count(); ++c) CHECK(om.operations({{c}, c}).size() == 1);

    // Brute force: every ordered tuple of edges, each tried with operation_exists.
    std::set<Signature> brute;
    const int n = t->edge_count();
    for (Edge out = 0; out < n; ++out)
      for (int k = 0; k <= n; ++k) {
        std::vector<Edge> in(static_cast<std::size_t>(k), 0);
        for (;;) {
          if (operation_exists(*t, out, in)) brute.insert(Signature{in, out});
          int j = 0;
          while (j < k && ++in[j] == n) in[j++] = 0;
          if (j == k) break;
        }
      }
    auto sigs = om.signatures();
    CHECK(std::set<Signature>(sigs.begin(), sigs.end()) == brute);

    // Saturation: identities and vertex operations generate everything.
    std::set<OpId> closure;
    std::vector<OpId> work;
    for (Color c = 0; c < om.color_count(); ++c) work.push_back(om.identity(c));
    for (Edge v : t->vertices()) {
      auto in = t->inputs(v);
      work.push_back(om.operations(Signature{{in.begin(), in.end()}, v})[0]);
    }
    while (!work.empty()) {
      OpId x = work.back();
      work.pop_back();
      if (!closure.insert(x).second) continue;
      for (const auto& s : all_permutations(om.arity(x))) work.push_back(om.act(x, s));
      for (OpId y : std::vector<OpId>(closure.begin(), closure.end()))
        for (auto [a, b] : {std::pair{x, y}, std::pair{y, x}})
          for (int i = 0; i < om.arity(a); ++i)
            if (om.composable(a, i, b)) work.push_back(om.compose(a, i, b));
    }
    CHECK(closure.size() == static_cast<std::size_t>(om.op_count()));
    CHECK(check_operad_axioms(om, om.arity_bound()).ok());
  }
}

TEST_CASE("hom_set counts operad maps between tree operads") {
  EnumOptions o;
  o.max_vertices = 3;
  o.max_inputs = 3;
  o.max_edges = 7;
  std::vector<TreePtr> trees;
  for (auto& t : enumerate_trees(o)) trees.push_back(share(std::move(t)));
  for (const auto& s : trees)
    for (const auto& t : trees) {
      if (s->edge_count() > 5 || t->edge_count() > 6) continue;
      auto om = omega_operad(t);
      // Ω(S) is free on its vertices: a map is a color map sending each
      // generator's signature to a nonempty hom-set.
      std::size_t maps = 0;
      std::vector<Edge> f(static_cast<std::size_t>(s->edge_count()), 0);
      for (;;) {
        bool ok = true;
        for (Edge v : s->vertices()) {
          Signature sig{{}, f[v]};
          for (Edge c : s->inputs(v)) sig.inputs.push_back(f[c]);
          if (om.operations(sig).empty()) {
            ok = false;
            break;
          }
        }
        if (ok) ++maps;
        std::size_t j = 0;
        while (j < f.size() && ++f[j] == t->edge_count()) f[j++] = 0;
        if (j == f.size()) break;
      }
      CHECK(hom_set(s, t).size() == maps);
    }
}

TEST_CASE("free operad on one binary operation") {
  auto x = Collection::trivial({{2, {"m"}}});
  auto fr = free_operad(x, 5);
  const std::size_t expected[] = {0, 1, 1, 3, 15, 105};
  for (int n = 2; n <= 5; ++n) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) labels[j] = j;
    CHECK(labelled_trees(labels, 2).size() == expected[n]);
    CHECK(level_size(fr, n) == expected[n]);
  }
  CHECK(check_operad_axioms(fr, 4).ok());
}

TEST_CASE("free operad on one ternary operation") {
  auto x = Collection::trivial({{3, {"w"}}});
  auto fr = free_operad(x, 5);
  CHECK(level_size(fr, 5) == labelled_trees({0, 1, 2, 3, 4}, 3).size());
  CHECK(level_size(fr, 4) == 0);
  CHECK(level_size(fr, 3) == 1);
  CHECK(check_operad_axioms(fr, 5).ok());
}

TEST_CASE("free operad edge cases") {
  auto empty = free_operad(Collection{}, 4);
  CHECK(empty.op_count() == 1);
  CHECK(check_operad_axioms(empty, 4).ok());
  CHECK_THROWS_AS(free_operad(Collection::trivial({{1, {"u"}}}), 3), std::invalid_argument);
  CHECK_THROWS_AS(free_operad(Collection::trivial({{0, {"z"}}}), 3), std::invalid_argument);
}

TEST_CASE("free unit is injective and equivariant") {
  // X(2) = {a, b} with the swap exchanging them; X(3) = {w} trivial.
  Collection x = Collection::trivial({{3, {"w"}}});
  x.levels[2].elements = {"a", "b"};
  x.levels[2].action = {{0, 1}, {1, 0}};
  REQUIRE(x.check().empty());
  auto fr = free_operad(x, 4);
  CHECK(check_operad_axioms(fr, 4).ok());
  for (const auto& [n, lv] : x.levels) {
    std::set<OpId> images;
    for (int e = 0; e < static_cast<int>(lv.elements.size()); ++e) {
      OpId u = free_unit(fr, x, n, e);
      images.insert(u);
      for (const auto& s : all_permutations(n)) CHECK(free_unit(fr, x, n, x.act(n, e, s)) == fr.act(u, s));
    }
    CHECK(images.size() == lv.elements.size());
  }
}

TEST_CASE("isomorphism search") {
  auto ass = ass_operad(3);
  auto iso = find_isomorphism(ass, shuffled(ass, 7));
  REQUIRE(iso);
  CHECK(verify_isomorphism(ass, shuffled(ass, 7), *iso).empty());
  CHECK_FALSE(find_isomorphism(ass, com_operad(3)));

  auto end = end_operad(2, 3);
  auto end2 = shuffled(end, 3);
  auto e = find_isomorphism(end, end2);
  REQUIRE(e);
  CHECK(verify_isomorphism(end, end2, *e).empty());

  auto om = omega_operad(make_tree("((**)(*))"));
  auto om2 = shuffled(om, 11);
  CHECK(find_isomorphism(om, om2));
  CHECK(find_isomorphism(om, omega_operad(make_tree("((*)(**))"))));
  CHECK_FALSE(find_isomorphism(om, omega_operad(make_tree("(((**)))"))));
}

TEST_CASE("operad JSON round trip") {
  for (const auto& p : {com_operad(3), ass_operad(3), end_operad(2, 2), omega_operad(make_tree("((**)*)"))}) {
    auto text = operad_to_json(p);
    auto back = operad_from_json(text);
    CHECK(operad_to_json(back) == text);
    CHECK(check_operad_axioms(back, back.arity_bound()).ok());
    CHECK(find_isomorphism(p, back));
  }
  CHECK_THROWS_AS(operad_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(operad_from_json(R"({"colors":["c"],"homs":[{"inputs":["d"],"output":"c","elements":["x"]}]})"),
                  std::invalid_argument);
}
