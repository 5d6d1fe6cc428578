#include "dendro/strata.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dendro {

namespace {

bool cluster_before(std::uint32_t a, std::uint32_t b) {
  const int pa = std::popcount(a), pb = std::popcount(b);
  return pa != pb ? pa > pb : a < b;
}

std::uint32_t full_set(int k) { return k >= 32 ? ~0u : (1u << k) - 1; }

// Set partitions of the bits of `mask` into blocks, block order by least bit.
void partitions(std::uint32_t mask, std::vector<std::uint32_t>& cur,
                const std::function<void(const std::vector<std::uint32_t>&)>& f) {
  if (mask == 0) {
    f(cur);
    return;
  }
  const std::uint32_t low = mask & (~mask + 1);
  const std::uint32_t rest = mask ^ low;
  // Every block containing the lowest remaining bit.
  for (std::uint32_t sub = rest;; sub = (sub - 1) & rest) {
    cur.push_back(low | sub);
    partitions(rest ^ sub, cur, f);
    cur.pop_back();
    if (sub == 0) break;
  }
}

}  // namespace

LabelledTree LabelledTree::from_clusters(int k, std::vector<std::uint32_t> clusters) {
  if (k < 2 || k > 31) throw std::invalid_argument("labelled trees need 2 <= k <= 31 leaves");
  const std::uint32_t full = full_set(k);
  std::sort(clusters.begin(), clusters.end(), cluster_before);
  if (std::adjacent_find(clusters.begin(), clusters.end()) != clusters.end())
    throw std::invalid_argument("a vertex has a single input");
  if (clusters.empty() || clusters[0] != full) throw std::invalid_argument("the root must see every leaf");
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if ((clusters[i] & ~full) || std::popcount(clusters[i]) < 2)
      throw std::invalid_argument("a vertex has fewer than two inputs");
    for (std::size_t j = 0; j < i; ++j) {
      const std::uint32_t a = clusters[i], b = clusters[j];
      if ((a & b) && (a & b) != a) throw std::invalid_argument("vertex leaf sets overlap");
    }
  }
  return LabelledTree{k, std::move(clusters)};
}

LabelledTree LabelledTree::parse(std::string_view text) {
  Term t;
  try {
    t = parse_term(text);
  } catch (const ParseError& e) {
    throw std::invalid_argument(e.what());
  }
  std::vector<std::uint32_t> clusters;
  std::vector<int> labels;
  std::function<std::uint32_t(const Term&)> walk = [&](const Term& s) -> std::uint32_t {
    if (s.leaf) {
      int l = 0;
      try {
        std::size_t used = 0;
        l = std::stoi(s.label, &used);
        if (used != s.label.size()) l = 0;
      } catch (const std::exception&) {
        l = 0;
      }
      if (l < 1 || l > 31) throw std::invalid_argument("leaf label must be an integer 1..k: '" + s.label + "'");
      labels.push_back(l);
      return 1u << (l - 1);
    }
    std::uint32_t m = 0;
    for (const auto& c : s.children) {
      const std::uint32_t cm = walk(c);
      if (m & cm) throw std::invalid_argument("repeated leaf label");
      m |= cm;
    }
    clusters.push_back(m);
    return m;
  };
  walk(t);
  const int k = static_cast<int>(labels.size());
  if (*std::max_element(labels.begin(), labels.end()) != k)
    throw std::invalid_argument("leaf labels must be exactly 1..k");
  return from_clusters(k, std::move(clusters));
}

std::vector<std::uint32_t> LabelledTree::children(std::size_t c) const {
  const std::uint32_t me = clusters.at(c);
  std::vector<std::uint32_t> out;
  std::uint32_t covered = 0;
  // Larger clusters come first, so the first proper subcluster met is maximal.
  for (std::uint32_t s : clusters)
    if (s != me && (s & me) == s && !(s & covered)) {
      out.push_back(s);
      covered |= s;
    }
  for (std::uint32_t rest = me & ~covered; rest; rest &= rest - 1) out.push_back(rest & (~rest + 1));
  std::sort(out.begin(), out.end(), [](std::uint32_t a, std::uint32_t b) { return std::countr_zero(a) < std::countr_zero(b); });
  return out;
}

std::vector<int> LabelledTree::inputs() const {
  std::vector<int> out;
  for (std::size_t c = 0; c < clusters.size(); ++c) out.push_back(static_cast<int>(children(c).size()));
  return out;
}

Term LabelledTree::term() const {
  std::function<Term(std::uint32_t)> build = [&](std::uint32_t m) {
    if (std::popcount(m) == 1) {
      Term leaf = Term::leaf_edge();
      leaf.label = std::to_string(std::countr_zero(m) + 1);
      return leaf;
    }
    const std::size_t c = static_cast<std::size_t>(std::find(clusters.begin(), clusters.end(), m) - clusters.begin());
    std::vector<Term> kids;
    for (std::uint32_t s : children(c)) kids.push_back(build(s));
    return Term::vertex(std::move(kids));
  };
  return build(clusters.at(0));
}

std::string LabelledTree::format() const { return format_term(term()); }

TreePtr LabelledTree::shape() const {
  Term t = term();
  std::function<void(Term&)> strip = [&](Term& s) {
    s.label.clear();
    for (auto& c : s.children) strip(c);
  };
  strip(t);
  return share(Tree::from_term(t));
}

int stratum_dim(const LabelledTree& t, int n) {
  int d = 0;
  for (int in : t.inputs()) d += n * (in - 1) - 1;
  return d;
}

int fm_dimension(int n, int k) { return k >= 2 ? n * (k - 1) - 1 : 0; }

bool StratPoset::leq(int i, int j) const {
  const auto& a = elements.at(static_cast<std::size_t>(i)).clusters;
  const auto& b = elements.at(static_cast<std::size_t>(j)).clusters;
  return std::includes(a.begin(), a.end(), b.begin(), b.end(), cluster_before);
}

std::optional<int> StratPoset::find(const LabelledTree& t) const {
  auto it = std::lower_bound(elements.begin(), elements.end(), t, [](const LabelledTree& a, const LabelledTree& b) {
    if (a.clusters.size() != b.clusters.size()) return a.clusters.size() < b.clusters.size();
    return std::lexicographical_compare(a.clusters.begin(), a.clusters.end(), b.clusters.begin(), b.clusters.end(),
                                        cluster_before);
  });
  if (it == elements.end() || *it != t) return std::nullopt;
  return static_cast<int>(it - elements.begin());
}

int StratPoset::maximum() const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].clusters.size() == 1) return static_cast<int>(i);
  return -1;
}

std::vector<int> StratPoset::down_set(int i) const {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(elements.size()); ++j)
    if (leq(j, i)) out.push_back(j);
  return out;
}

StratPoset enumerate_psi(int k, const Budget& budget) {
  if (k < 2) throw std::invalid_argument("Ψ_k needs k >= 2");
  if (k > 31) throw BudgetExceeded("Ψ_k: k too large");
  BudgetCounter counter(budget.max_elements, "enumerate_psi");
  // Trees on a leaf set: choose the root's partition, then recurse per block.
  std::map<std::uint32_t, std::vector<std::vector<std::uint32_t>>> memo;
  std::function<const std::vector<std::vector<std::uint32_t>>&(std::uint32_t)> trees =
      [&](std::uint32_t mask) -> const std::vector<std::vector<std::uint32_t>>& {
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    std::vector<std::vector<std::uint32_t>> out;
    if (std::popcount(mask) == 1) {
      out.push_back({});
    } else {
      std::vector<std::uint32_t> cur;
      partitions(mask, cur, [&](const std::vector<std::uint32_t>& blocks) {
        if (blocks.size() < 2) return;
        std::vector<std::vector<std::vector<std::uint32_t>>> subs;
        for (std::uint32_t b : blocks) subs.push_back(trees(b));
        std::vector<std::size_t> pick(blocks.size(), 0);
        for (;;) {
          counter.tick();
          std::vector<std::uint32_t> cl{mask};
          for (std::size_t j = 0; j < blocks.size(); ++j)
            cl.insert(cl.end(), subs[j][pick[j]].begin(), subs[j][pick[j]].end());
          out.push_back(std::move(cl));
          std::size_t j = 0;
          while (j < pick.size() && ++pick[j] == subs[j].size()) pick[j++] = 0;
          if (j == pick.size()) break;
        }
      });
    }
    return memo[mask] = std::move(out);
  };

  StratPoset p;
  p.k = k;
  for (const auto& cl : trees(full_set(k))) p.elements.push_back(LabelledTree::from_clusters(k, cl));
  std::sort(p.elements.begin(), p.elements.end(), [](const LabelledTree& a, const LabelledTree& b) {
    if (a.clusters.size() != b.clusters.size()) return a.clusters.size() < b.clusters.size();
    return std::lexicographical_compare(a.clusters.begin(), a.clusters.end(), b.clusters.begin(), b.clusters.end(),
                                        cluster_before);
  });
  p.covers.resize(p.elements.size());
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    const auto& cl = p.elements[i].clusters;
    for (std::size_t c = 1; c < cl.size(); ++c) {
      std::vector<std::uint32_t> fewer = cl;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(c));
      p.covers[i].push_back(*p.find(LabelledTree{k, std::move(fewer)}));
    }
    std::sort(p.covers[i].begin(), p.covers[i].end());
  }
  return p;
}

std::vector<int> composition_image(const StratPoset& psi, const LabelledTree& pattern) {
  auto i = psi.find(pattern);
  if (!i) throw std::invalid_argument("pattern " + pattern.format() + " is not in Ψ_" + std::to_string(psi.k));
  return psi.down_set(*i);
}

StratPoset boundary_index(int n, const Budget& budget) {
  StratPoset p = enumerate_psi(n, budget);
  const int top = p.maximum();
  StratPoset out;
  out.k = n;
  std::vector<int> remap(p.elements.size(), -1);
  for (std::size_t i = 0; i < p.elements.size(); ++i)
    if (static_cast<int>(i) != top) {
      remap[i] = static_cast<int>(out.elements.size());
      out.elements.push_back(p.elements[i]);
    }
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    if (remap[i] < 0) continue;
    std::vector<int> c;
    for (int j : p.covers[i])
      if (remap[j] >= 0) c.push_back(remap[j]);
    out.covers.push_back(std::move(c));
  }
  return out;
}

CoboundIndex cobound_index(int n) {
  if (n < 1 || n > 20) throw std::invalid_argument("cobound_index needs 1 <= n <= 20");
  CoboundIndex out;
  out.n = n;
  auto t = share(reduced_corolla(n));
  for (auto& s : subtrees(t)) {
    if (s.edges.empty() || s.edges[0] != 0 || static_cast<int>(s.edges.size()) == t->edge_count()) continue;
    std::uint32_t bits = 0;
    for (Edge e : s.edges)
      if (e != 0) bits |= 1u << (e - 1);
    out.subtrees.push_back(std::move(s));
    out.subsets.push_back(bits);
  }
  // Sort by subset for a stable presentation.
  std::vector<std::size_t> order(out.subsets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::uint32_t x = out.subsets[a], y = out.subsets[b];
    return std::popcount(x) != std::popcount(y) ? std::popcount(x) < std::popcount(y) : x < y;
  });
  CoboundIndex sorted;
  sorted.n = n;
  for (std::size_t i : order) {
    sorted.subtrees.push_back(out.subtrees[i]);
    sorted.subsets.push_back(out.subsets[i]);
  }

  const std::uint32_t full = (1u << n) - 1;
  std::vector<char> hit(std::size_t{1} << n, 0);
  bool ok = sorted.subsets.size() == full;
  for (std::uint32_t s : sorted.subsets) {
    if (s >= full || hit[s]) ok = false;
    else hit[s] = 1;
  }
  for (std::size_t a = 0; a < sorted.subsets.size() && ok; ++a)
    for (std::size_t b = 0; b < sorted.subsets.size() && ok; ++b) {
      const auto& ea = sorted.subtrees[a].edges;
      const auto& eb = sorted.subtrees[b].edges;
      const bool sub_tree = std::includes(eb.begin(), eb.end(), ea.begin(), ea.end());
      const bool sub_set = (sorted.subsets[a] & sorted.subsets[b]) == sorted.subsets[a];
      if (sub_tree != sub_set) ok = false;
    }
  sorted.order_isomorphism = ok;
  return sorted;
}

Shortening shorten(const TreePtr& t) {
  Shortening s;
  s.tree = t;
  s.composite = identity_morphism(t);
  for (;;) {
    auto ds = degeneracies(s.tree);
    if (ds.empty()) break;
    s.composite = compose(ds[0], s.composite);
    s.tree = ds[0].target;
    s.chain.push_back(std::move(ds[0]));
  }
  return s;
}

FmCoordinates fm_embed(const std::vector<std::vector<double>>& points) {
  const std::size_t k = points.size();
  if (k == 0) throw std::invalid_argument("empty configuration");
  const std::size_t n = points[0].size();
  if (n == 0) throw std::invalid_argument("points need at least one coordinate");
  for (const auto& p : points) {
    if (p.size() != n) throw std::invalid_argument("points have different dimensions");
    for (double v : p)
      if (!std::isfinite(v)) throw std::invalid_argument("coordinates must be finite");
  }
  auto dist = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += (points[i][c] - points[j][c]) * (points[i][c] - points[j][c]);
    return std::sqrt(s);
  };
  std::vector<std::vector<double>> d(k, std::vector<double>(k, 0.0));
  double dmax = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j) {
        d[i][j] = dist(i, j);
        if (d[i][j] == 0) {
          throw std::invalid_argument("points " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                      " coincide");
        }
        dmax = std::max(dmax, d[i][j]);
      }

  FmCoordinates out;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      std::vector<double> u(n);
      for (std::size_t c = 0; c < n; ++c) u[c] = (points[i][c] - points[j][c]) / d[i][j];
      out.a[{static_cast<int>(i), static_cast<int>(j)}] = std::move(u);
      for (std::size_t l = 0; l < k; ++l)
        if (l != i && l != j) out.b[{static_cast<int>(i), static_cast<int>(j), static_cast<int>(l)}] = d[i][j] / d[i][l];
    }

  std::vector<double> centroid(n, 0.0);
  for (const auto& p : points)
    for (std::size_t c = 0; c < n; ++c) centroid[c] += p[c] / static_cast<double>(k);
  const double scale = dmax > 0 ? dmax : 1.0;
  for (const auto& p : points) {
    std::vector<double> q(n);
    for (std::size_t c = 0; c < n; ++c) q[c] = (p[c] - centroid[c]) / scale;
    out.normalized.push_back(std::move(q));
  }
  return out;
}

using nlohmann::json;

std::string poset_to_dot(const StratPoset& p, int n) {
  std::ostringstream os;
  os << "digraph psi" << p.k << " {\n  node [shape=box];\n";
  for (std::size_t i = 0; i < p.elements.size(); ++i)
    os << "  e" << i << " [label=\"" << p.elements[i].format() << "\\ndim " << stratum_dim(p.elements[i], n)
       << "\"];\n";
  for (std::size_t i = 0; i < p.covers.size(); ++i)
    for (int j : p.covers[i]) os << "  e" << i << " -> e" << j << ";\n";
  os << "}\n";
  return os.str();
}

std::string poset_to_json(const StratPoset& p, int n) {
  json j;
  j["k"] = p.k;
  j["n"] = n;
  j["elements"] = json::array();
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    const auto& e = p.elements[i];
    j["elements"].push_back({{"id", i},
                             {"term", e.format()},
                             {"inner_edges", e.inner_edges()},
                             {"stratum_dim", stratum_dim(e, n)}});
  }
  j["covers"] = json::array();
  for (std::size_t i = 0; i < p.covers.size(); ++i)
    for (int c : p.covers[i]) j["covers"].push_back({i, c});
  return j.dump(2);
}

std::string fm_to_json(const FmCoordinates& c) {
  auto num = [](double v) -> json {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
  };
  json j;
  j["a"] = json::array();
  for (const auto& [ij, u] : c.a) {
    json v = json::array();
    for (double x : u) v.push_back(num(x));
    j["a"].push_back({{"i", ij.first + 1}, {"j", ij.second + 1}, {"value", v}});
  }
  j["b"] = json::array();
  for (const auto& [ijk, v] : c.b)
    j["b"].push_back(
        {{"i", std::get<0>(ijk) + 1}, {"j", std::get<1>(ijk) + 1}, {"k", std::get<2>(ijk) + 1}, {"value", num(v)}});
  j["normalized"] = c.normalized;
  return j.dump(2);
}

}  // namespace dendro
