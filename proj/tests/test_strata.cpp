#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <random>
#include <set>

#include "doctest.h"
#include "json.hpp"
#include "dendro/strata.hpp"

using namespace dendro;

namespace {

// Laminar families of subsets of {0..k-1} with 2..k-1 elements, by DFS over
// all such subsets. Each family plus the full set is one tree in Ψ_k.
std::vector<std::vector<std::uint32_t>> laminar_families(int k) {
  std::vector<std::uint32_t> sets;
  const std::uint32_t full = (1u << k) - 1;
  for (std::uint32_t s = 1; s < full; ++s)
    if (std::popcount(s) >= 2) sets.push_back(s);
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t from) {
    out.push_back(cur);
    for (std::size_t i = from; i < sets.size(); ++i) {
      bool ok = true;
      for (std::uint32_t c : cur) {
        const std::uint32_t m = c & sets[i];
        if (m && m != c && m != sets[i]) ok = false;
      }
      if (!ok) continue;
      cur.push_back(sets[i]);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
  return out;
}

std::set<std::vector<std::uint32_t>> as_cluster_sets(int k, const std::vector<std::vector<std::uint32_t>>& fams) {
  std::set<std::vector<std::uint32_t>> out;
  for (auto f : fams) {
    f.push_back((1u << k) - 1);
    out.insert(LabelledTree::from_clusters(k, f).clusters);
  }
  return out;
}

}  // namespace

TEST_CASE("labelled tree parsing and formatting") {
  auto t = LabelledTree::parse("(*@3(*@1*@2))");
  CHECK(t.k == 3);
  CHECK(t.vertex_count() == 2);
  CHECK(t.format() == "((*@1*@2)*@3)");
  CHECK(LabelledTree::parse(t.format()) == t);
  CHECK(t.shape()->key() == make_tree("(*(**))")->key());
  CHECK_THROWS_AS(LabelledTree::parse("((*@1)*@2)"), std::invalid_argument);
  CHECK_THROWS_AS(LabelledTree::parse("(*@1*@1)"), std::invalid_argument);
  CHECK_THROWS_AS(LabelledTree::parse("(*@1*@3)"), std::invalid_argument);
  CHECK_THROWS_AS(LabelledTree::parse("(*@1*@x)"), std::invalid_argument);
  CHECK_THROWS_AS(LabelledTree::parse("(()*@1*@2)"), std::invalid_argument);
  CHECK_THROWS_AS(LabelledTree::from_clusters(4, {0b1111, 0b0011, 0b0110}), std::invalid_argument);
}

TEST_CASE("Ψ_k sizes") {
  CHECK(enumerate_psi(2).elements.size() == 1);
  CHECK(enumerate_psi(3).elements.size() == 4);
  CHECK(enumerate_psi(4).elements.size() == 26);
  CHECK_THROWS_AS(enumerate_psi(1), std::invalid_argument);
  Budget tiny;
  tiny.max_elements = 10;
  CHECK_THROWS_AS(enumerate_psi(5, tiny), BudgetExceeded);
}

TEST_CASE("Ψ_k equals the laminar-family oracle") {
  for (int k = 2; k <= 6; ++k) {
    auto psi = enumerate_psi(k);
    std::set<std::vector<std::uint32_t>> got;
    for (const auto& e : psi.elements) got.insert(e.clusters);
    CHECK(got.size() == psi.elements.size());
    CHECK(got == as_cluster_sets(k, laminar_families(k)));
  }
}

TEST_CASE("dimension law") {
  int violations = 0;
  for (int k = 2; k <= 6; ++k)
    for (const auto& e : enumerate_psi(k).elements)
      for (int n = 1; n <= 3; ++n)
        if (fm_dimension(n, k) - stratum_dim(e, n) != e.inner_edges()) ++violations;
  CHECK(violations == 0);
}

TEST_CASE("dimensions") {
  CHECK(fm_dimension(2, 3) == 3);
  CHECK(fm_dimension(5, 1) == 0);
  CHECK(fm_dimension(5, 0) == 0);
  CHECK(fm_dimension(1, 4) == 2);
  for (int k = 2; k <= 5; ++k) {
    auto psi = enumerate_psi(k);
    CHECK(stratum_dim(psi.elements[psi.maximum()], 3) == 3 * (k - 1) - 1);
  }
  CHECK(stratum_dim(LabelledTree::parse("((*@1*@2)(*@3*@4))"), 2) == 3);
  auto psi3 = enumerate_psi(3);
  int others = 0;
  for (int i = 0; i < 4; ++i) {
    if (i == psi3.maximum()) continue;
    ++others;
    for (int n = 1; n <= 6; ++n) CHECK(stratum_dim(psi3.elements[i], n) == 2 * (n - 1));
  }
  CHECK(others == 3);
}

TEST_CASE("contraction order") {
  for (int k = 2; k <= 5; ++k) {
    auto psi = enumerate_psi(k);
    const int n = static_cast<int>(psi.elements.size());
    const int top = psi.maximum();
    // Reflexive-transitive closure of the covers.
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i) {
      reach[i][i] = 1;
      for (int j : psi.covers[i]) reach[i][j] = 1;
    }
    for (int m = 0; m < n; ++m)
      for (int i = 0; i < n; ++i)
        if (reach[i][m])
          for (int j = 0; j < n; ++j)
            if (reach[m][j]) reach[i][j] = 1;
    for (int i = 0; i < n; ++i) {
      CHECK(psi.leq(i, top));
      if (i != top) CHECK_FALSE(psi.covers[i].empty());
      CHECK(psi.elements[i].inner_edges() == static_cast<int>(psi.covers[i].size()));
      for (int j = 0; j < n; ++j) CHECK(static_cast<bool>(reach[i][j]) == psi.leq(i, j));
    }
  }
}

TEST_CASE("composition images") {
  auto psi = enumerate_psi(4);
  CHECK(composition_image(psi, psi.elements[psi.maximum()]).size() == 26);
  auto bin = LabelledTree::parse("((*@1*@2)(*@3*@4))");
  CHECK(composition_image(psi, bin) == std::vector<int>{*psi.find(bin)});
  // Trees below (1 2 (3 4)) are exactly those with a cluster {3, 4}.
  auto pat = LabelledTree::parse("(*@1*@2(*@3*@4))");
  std::size_t expect = 0;
  for (const auto& f : laminar_families(4)) expect += std::count(f.begin(), f.end(), 0b1100u);
  CHECK(composition_image(psi, pat).size() == expect);
  CHECK_THROWS_AS(composition_image(psi, LabelledTree::parse("(*@1*@2)")), std::invalid_argument);
}

TEST_CASE("boundary index") {
  CHECK(boundary_index(2).elements.empty());
  CHECK(boundary_index(3).elements.size() == 3);
  CHECK(boundary_index(4).elements.size() == 25);
  CHECK_THROWS_AS(boundary_index(1), std::invalid_argument);
  auto b = boundary_index(4);
  for (const auto& c : b.covers)
    for (int j : c) CHECK(j < static_cast<int>(b.elements.size()));
}

TEST_CASE("cobound index is a punctured cube") {
  for (int n = 1; n <= 5; ++n) {
    auto c = cobound_index(n);
    CHECK(c.subtrees.size() == (std::size_t{1} << n) - 1);
    CHECK(c.order_isomorphism);
    for (std::size_t i = 0; i < c.subtrees.size(); ++i)
      CHECK(c.subtrees[i].induced->key() == reduced_corolla(std::popcount(c.subsets[i])).key());
  }
  auto one = cobound_index(1);
  REQUIRE(one.subtrees.size() == 1);
  CHECK(one.subtrees[0].induced->key() == "()");
  CHECK(cobound_index(2).subsets == std::vector<std::uint32_t>{0, 1, 2});
}

TEST_CASE("shorten") {
  auto same = make_tree("(*(**))");
  CHECK(shorten(same).tree->key() == same->key());
  CHECK(shorten(same).chain.empty());
  auto ext = make_tree("((())(()))");
  auto s = shorten(ext);
  CHECK(s.tree->key() == reduced_corolla(2).key());
  CHECK(s.chain.size() == 2);
  CHECK(s.composite.source->key() == ext->key());
  CHECK(s.composite.target->key() == s.tree->key());
  CHECK(shorten(make_tree("((*))")).tree->key() == "*");
  CHECK(shorten(make_tree("(((())))")).tree->key() == "()");
  CHECK(shorten(s.tree).chain.empty());
  Morphism m = identity_morphism(ext);
  for (const auto& d : s.chain) m = compose(d, m);
  CHECK(m.map == s.composite.map);
}

TEST_CASE("fm coordinates on fixed points") {
  auto c = fm_embed({{0.0}, {1.0}, {2.0}});
  CHECK(c.b.at({0, 1, 2}) == doctest::Approx(0.5));
  auto d = fm_embed({{1.0, 0.0}, {0.0, 0.0}});
  CHECK(d.a.at({0, 1}) == std::vector<double>{1.0, 0.0});
  CHECK_THROWS_AS(fm_embed({{0.0, 1.0}, {0.0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(fm_embed({{0.0, 1.0}, {0.0}}), std::invalid_argument);
  auto j = nlohmann::json::parse(fm_to_json(c));
  CHECK(j["b"].size() == 6);
}

TEST_CASE("fm coordinate identities on random configurations") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int bad = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 3 + trial % 3, n = 1 + trial % 3;
    std::vector<std::vector<double>> pts(k, std::vector<double>(n));
    for (auto& p : pts)
      for (auto& x : p) x = u(rng);
    auto c = fm_embed(pts);
    for (const auto& [ij, a] : c.a) {
      const auto& r = c.a.at({ij.second, ij.first});
      for (int t = 0; t < n; ++t) bad += std::abs(a[t] + r[t]) > 1e-12;
    }
    for (const auto& [ijk, b] : c.b) {
      const auto& [i, j, l] = ijk;
      bad += std::abs(b * c.b.at({i, l, j}) - 1.0) > 1e-12;
    }
    // Translation and positive scaling leave (a, b) fixed.
    const double lambda = 0.1 + 5 * (u(rng) + 1);
    std::vector<double> v(n);
    for (auto& x : v) x = 10 * u(rng);
    auto moved = pts;
    for (auto& p : moved)
      for (int t = 0; t < n; ++t) p[t] = lambda * p[t] + v[t];
    auto cm = fm_embed(moved);
    for (const auto& [ij, a] : c.a)
      for (int t = 0; t < n; ++t) bad += std::abs(a[t] - cm.a.at(ij)[t]) > 1e-9;
    for (const auto& [ijk, b] : c.b) bad += std::abs(b - cm.b.at(ijk)) > 1e-9 * std::max(1.0, b);
    for (int p = 0; p < k; ++p)
      for (int t = 0; t < n; ++t) bad += std::abs(c.normalized[p][t] - cm.normalized[p][t]) > 1e-9;
  }
  CHECK(bad == 0);
}

TEST_CASE("collision limit") {
  const std::vector<double> xi{0.3, -0.2}, dir{0.6, 0.8}, xk{1.5, 2.0};
  double last = INFINITY;
  for (double t : {1e-1, 1e-3, 1e-6}) {
    std::vector<double> xj{xi[0] + t * dir[0], xi[1] + t * dir[1]};
    auto c = fm_embed({xi, xj, xk});
    // The difference x_i - x_j loses digits to cancellation as t shrinks.
    CHECK(std::abs(c.a.at({0, 1})[0] + dir[0]) < 1e-9);
    CHECK(std::abs(c.a.at({0, 1})[1] + dir[1]) < 1e-9);
    const double b = c.b.at({0, 1, 2});
    CHECK(b < last);
    last = b;
  }
  CHECK(last < 1e-5);
}

TEST_CASE("poset exports") {
  auto psi = enumerate_psi(3);
  auto j = nlohmann::json::parse(poset_to_json(psi, 2));
  CHECK(j["elements"].size() == 4);
  CHECK(j["covers"].size() == 3);
  auto dot = poset_to_dot(psi, 2);
  CHECK(dot.find("digraph") == 0);
  CHECK(std::count(dot.begin(), dot.end(), '>') == 3);
}
