#include <algorithm>
#include <functional>
#include <numeric>
#include <set>

#include "doctest.h"
#include "dendro/tree.hpp"

using namespace dendro;

namespace {

// Brute-force automorphism count: edge permutations preserving parent links
// and the leaf/vertex distinction.
std::uint64_t brute_aut(const Tree& t) {
  std::vector<int> p(static_cast<std::size_t>(t.edge_count()));
  std::iota(p.begin(), p.end(), 0);
  std::uint64_t count = 0;
  do {
    bool ok = p[0] == 0;
    for (Edge e = 1; ok && e < t.edge_count(); ++e)
      ok = t.parent(p[e]) == p[t.parent(e)] && t.is_leaf(p[e]) == t.is_leaf(e);
    for (Edge e = 0; ok && e < t.edge_count(); ++e) ok = t.is_leaf(p[e]) == t.is_leaf(e);
    if (ok) ++count;
  } while (std::next_permutation(p.begin(), p.end()));
  return count;
}

// Naive generator: every planar term with at most `max_edges` edges, then
// canonicalize and dedup by key.
std::set<std::string> naive_keys(int max_edges, int max_inputs, bool reduced_only) {
  std::vector<std::vector<Term>> by_size(static_cast<std::size_t>(max_edges) + 1);
  for (int e = 1; e <= max_edges; ++e) {
    if (e == 1 && !reduced_only) by_size[1].push_back(Term::leaf_edge());
    // ordered sequences of children with sizes summing to e-1
    std::vector<Term> kids;
    std::function<void(int)> rec = [&](int remaining) {
      if (remaining == 0) {
        by_size[e].push_back(Term::vertex(kids));
        return;
      }
      if (static_cast<int>(kids.size()) >= max_inputs) return;
      for (int s = 1; s <= remaining; ++s)
        for (const auto& c : by_size[s]) {
          kids.push_back(c);
          rec(remaining - s);
          kids.pop_back();
        }
    };
    rec(e - 1);
  }
  std::set<std::string> keys;
  for (const auto& level : by_size)
    for (const auto& t : level) keys.insert(canonical_form(t).key());
  return keys;
}

}  // namespace

TEST_CASE("parse basic shapes") {
  Tree e = parse_tree("*");
  CHECK(e.edge_count() == 1);
  CHECK(e.vertex_count() == 0);
  CHECK(e.key() == "*");

  Tree rc3 = parse_tree("(()()())");
  CHECK(rc3.edge_count() == 4);
  auto st = stats(rc3);
  CHECK(st.valences == std::vector<int>{4, 1, 1, 1});
  CHECK(st.is_reduced);

  Tree t2 = parse_tree("(**)");
  CHECK(t2.edge_count() == 3);
  CHECK(stats(t2).valences == std::vector<int>{3});

  CHECK(parse_tree(" ( * ( * * ) ) ").key() == parse_tree("((**)*)").key());
}

TEST_CASE("parse errors carry positions") {
  auto pos = [](const char* s) {
    try {
      parse_term(s);
    } catch (const ParseError& e) {
      return static_cast<long>(e.position());
    }
    return -1L;
  };
  CHECK(pos("(*") == 2);
  CHECK(pos("(*x)") == 2);
  CHECK(pos("**") == 1);
  CHECK(pos("") == 0);
  CHECK(pos("(*@a *@a)") == 6);
  CHECK(pos("(*@)") == 2);
}

TEST_CASE("labels survive but never change keys") {
  Tree t = parse_tree("((*@a *@c)@b *@e)@f");
  CHECK(t.key() == "(*(**))");
  CHECK(t.has_labels());
  CHECK(t.label(0) == "f");
  Tree again = parse_tree(t.format());
  CHECK(again.key() == t.key());
  CHECK(again.format() == t.format());
}

TEST_CASE("canonical form is order independent") {
  CHECK(parse_tree("((**)*)").key() == parse_tree("(*(**))").key());
  CHECK(parse_tree("*").key() == "*");
  std::set<std::string> keys;
  for (const char* s : {"((**)(**))", "((**)(**))", "((* *)(* *))"}) keys.insert(parse_tree(s).key());
  CHECK(keys.size() == 1);
  // '*' sorts before '(' and a closed prefix before either.
  CHECK(parse_tree("((*)*)").key() == "(*(*))");
  CHECK(parse_tree("(()*)").key() == "(*())");
}

TEST_CASE("automorphism orders match brute force") {
  CHECK(aut_order(eta()) == 1);
  std::uint64_t fact = 1;
  for (int n = 1; n <= 5; ++n) {
    fact *= static_cast<std::uint64_t>(n);
    CHECK(aut_order(corolla(n)) == fact);
    CHECK(brute_aut(corolla(n)) == fact);
  }
  Tree t = parse_tree("((**)(**))");
  CHECK(brute_aut(t) == 8);
  CHECK(aut_order(t) == 8);
  for (const auto& tr : enumerate_trees(6, 3, false)) {
    CHECK(aut_order(tr) == brute_aut(tr));
    CHECK(automorphisms(tr).size() == aut_order(tr));
  }
}

TEST_CASE("graft") {
  Tree t2 = corolla(2);
  CHECK(graft(t2, Address{0}, eta()).key() == t2.key());
  CHECK(graft(t2, Address{0}, t2).key() == "(*(**))");
  CHECK_THROWS_AS(graft(t2, Address{}, t2), std::invalid_argument);
  CHECK_THROWS_AS(graft(reduced_corolla(2), Address{0}, t2), std::invalid_argument);
}

TEST_CASE("enumerate_trees examples") {
  // exactly one vertex, max_inputs m: corollas t_0..t_m
  for (int m = 0; m <= 4; ++m) {
    EnumOptions o;
    o.max_edges = m + 1;
    o.max_inputs = m;
    o.max_vertices = 1;
    auto trees = enumerate_trees(o);
    int one_vertex = static_cast<int>(std::count_if(trees.begin(), trees.end(),
                                                    [](const Tree& t) { return t.vertex_count() == 1; }));
    CHECK(one_vertex == m + 1);
  }
  auto single = enumerate_trees(1, 3, false);
  REQUIRE(single.size() == 2);  // η and the 0-corolla
  CHECK(single[0].key() == "*");

  // Reduced trees with at most 4 edges and at most 3 inputs: value frozen
  // from the naive generate-and-canonicalize oracle below.
  auto reduced = enumerate_trees(4, 3, true);
  CHECK(reduced.size() == naive_keys(4, 3, true).size());
  CHECK(reduced.size() == 8);
}

TEST_CASE("enumerate_trees agrees with naive generation") {
  for (int max_inputs = 1; max_inputs <= 4; ++max_inputs)
    for (bool reduced : {false, true}) {
      auto trees = enumerate_trees(6, max_inputs, reduced);
      std::set<std::string> keys;
      for (const auto& t : trees) keys.insert(t.key());
      CHECK(keys.size() == trees.size());
      CHECK(keys == naive_keys(6, max_inputs, reduced));
    }
}

TEST_CASE("structural invariants over enumerated trees") {
  for (const auto& t : enumerate_trees(7, 4, false)) {
    CHECK(parse_tree(t.format()).key() == t.key());
    CHECK(canonical_form(t.to_term()).key() == t.key());
    int inputs = 0;
    for (Edge v : t.vertices()) inputs += static_cast<int>(t.inputs(v).size());
    CHECK(inputs == t.edge_count() - 1);
    auto st = stats(t);
    CHECK(st.n_vertices == st.n_edges - t.leaf_count());
    CHECK(st.is_reduced == (t.leaf_count() == 0));
    for (Edge e = 0; e < t.edge_count(); ++e) CHECK(t.at(t.address(e)) == e);
  }
}

TEST_CASE("addresses") {
  CHECK(format_address({}).empty());
  CHECK(format_address({0, 2}) == "0.2");
  CHECK(parse_address("0.2") == Address{0, 2});
  CHECK(parse_address("").empty());
  CHECK_THROWS(parse_address("0..1"));
}
