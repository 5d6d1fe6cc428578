#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "dendro/dendroidal.hpp"
#include "dendro/omega.hpp"
#include "dendro/operad.hpp"
#include "dendro/strata.hpp"
#include "dendro/tower.hpp"
#include "dendro/tree.hpp"

namespace dendro::cli {

namespace {

using nlohmann::json;

// A check that ran and failed: exit 1 with the report as detail.
struct CheckFailed : std::runtime_error {
  json detail;
  CheckFailed(const std::string& what, json d) : std::runtime_error(what), detail(std::move(d)) {}
};

std::string read_file(const std::string& path) {
  if (path == "-") {
    std::stringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int to_int(const std::string& s) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

/// A tree term given inline, or "@path" to read it from a file.
TreePtr load_tree(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') {
    std::string text = read_file(arg.substr(1));
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    return make_tree(text);
  }
  return make_tree(arg);
}

/// An operad JSON file, or a builtin: com[:B], ass[:B], end[:X[:B]],
/// free2[:B] (free on one binary operation), omega:TREE[:B].
std::shared_ptr<const FiniteOperad> load_operad(const std::string& spec, const Budget& budget) {
  if (spec == "-" || std::filesystem::is_regular_file(spec)) return std::make_shared<FiniteOperad>(operad_from_json(read_file(spec)));
  auto parts = split(spec, ':');
  const std::string& name = parts[0];
  auto arg = [&](std::size_t i, int dflt) { return parts.size() > i ? to_int(parts[i]) : dflt; };
  if (name == "com" && parts.size() <= 2) return std::make_shared<FiniteOperad>(com_operad(arg(1, 3)));
  if (name == "ass" && parts.size() <= 2) return std::make_shared<FiniteOperad>(ass_operad(arg(1, 3)));
  if (name == "end" && parts.size() <= 3) return std::make_shared<FiniteOperad>(end_operad(arg(1, 2), arg(2, 3), budget));
  if (name == "free2" && parts.size() <= 2)
    return std::make_shared<FiniteOperad>(free_operad(Collection::trivial({{2, {"m"}}}), arg(1, 3), budget));
  if (name == "omega" && (parts.size() == 2 || parts.size() == 3))
    return std::make_shared<FiniteOperad>(omega_operad(load_tree(parts[1]), arg(2, -1)));
  throw std::invalid_argument("unknown operad '" + spec + "' (file, com, ass, end, free2 or omega:TREE)");
}

json address_json(const Tree& t, Edge e) { return format_address(t.address(e)); }

json morphism_json(const Morphism& m) {
  json map = json::object();
  for (Edge e = 0; e < m.source->edge_count(); ++e)
    map[format_address(m.source->address(e))] = format_address(m.target->address(m.map[e]));
  return {{"source_key", m.source->key()}, {"target_key", m.target->key()}, {"edge_map", map}};
}

json factorization_json(const Factorization& f) {
  json j;
  j["degeneracies"] = json::array();
  for (const auto& d : f.degeneracies) j["degeneracies"].push_back(morphism_json(d));
  j["iso"] = morphism_json(f.iso);
  j["faces"] = json::array();
  for (const auto& d : f.faces) j["faces"].push_back(morphism_json(d));
  return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct Options {
  // enum-trees
  int max_edges = 4;
  int max_inputs = -1;
  bool reduced = false;
  bool count = false;
  bool json_out = false;
  bool dot_out = false;
  // shared positional arguments
  std::string a, b;
  int number = 0;
  std::string map;
  std::uint64_t max_maps = 0;
  int n = 1, d = 0, k = 2, kmax = 0;
  int threads = 1;
  int max_vertices = 2, carrier_inputs = 2, max_tips = -1;
  int bound = 3;
  int check_bound = 0;
  std::vector<std::string> trees;
  std::vector<std::string> generators;
  std::string compare;
  std::string points;
  bool selftest = false;
  std::uint64_t seed = 1;
  int trials = 1000;
  bool summary = false;
};

void cmd_enum_trees(const Options& o, std::ostream& out) {
  EnumOptions e;
  e.max_edges = o.max_edges;
  e.max_inputs = o.max_inputs < 0 ? o.max_edges : o.max_inputs;
  e.reduced_only = o.reduced;
  auto trees = enumerate_trees(e);
  if (o.count) {
    out << trees.size() << "\n";
    return;
  }
  if (o.json_out) {
    json j = json::array();
    for (const auto& t : trees) j.push_back(t.key());
    out << dump(j);
    return;
  }
  for (const auto& t : trees) out << t.key() << "\n";
}

void cmd_hom(const Options& o, const Budget& budget, std::ostream& out) {
  auto homs = hom_set(load_tree(o.a), load_tree(o.b), budget);
  if (o.count) {
    out << homs.size() << "\n";
    return;
  }
  json j = json::array();
  for (const auto& m : homs) j.push_back(morphism_json(m));
  out << dump(j);
}

void cmd_faces(const Options& o, std::ostream& out) {
  auto t = load_tree(o.a);
  auto faces = elementary_faces(t);
  if (o.count) {
    out << faces.size() << "\n";
    return;
  }
  json j = json::array();
  for (const auto& f : faces) {
    json e = morphism_json(f.map);
    e["kind"] = f.kind == FaceKind::inner ? "inner" : "outer";
    if (f.kind == FaceKind::inner) e["contracted"] = address_json(*t, f.contracted);
    j.push_back(std::move(e));
  }
  out << dump(j);
}

void cmd_factorize(const Options& o, const Budget& budget, std::ostream& out) {
  auto s = load_tree(o.a), t = load_tree(o.b);
  std::vector<Morphism> ms;
  if (!o.map.empty()) {
    std::vector<Edge> map;
    for (const auto& p : split(o.map, ',')) map.push_back(to_int(p));
    if (static_cast<int>(map.size()) != s->edge_count() || !validate_morphism(*s, *t, map))
      throw std::invalid_argument("--map is not a morphism " + s->key() + " -> " + t->key());
    ms.push_back(Morphism{s, t, map});
  } else {
    ms = hom_set(s, t, budget);
  }
  json j = json::array();
  std::size_t failures = 0;
  for (const auto& m : ms) {
    auto f = factorize(m, budget);
    const bool ok = f.composite().map == m.map;
    failures += !ok;
    json e = {{"morphism", morphism_json(m)}, {"factorization", factorization_json(f)}, {"composite_equal", ok}};
    j.push_back(std::move(e));
  }
  if (failures) throw CheckFailed(std::to_string(failures) + " factorizations do not compose back", j);
  out << dump(j);
}

void cmd_subtrees(const Options& o, std::ostream& out) {
  auto t = load_tree(o.a);
  auto subs = subtrees(t);
  if (o.count) {
    out << subs.size() << "\n";
    return;
  }
  json j = json::array();
  for (const auto& s : subs) {
    json edges = json::array();
    for (Edge e : s.edges) edges.push_back(address_json(*t, e));
    j.push_back({{"edges", edges}, {"induced", s.induced->key()}});
  }
  out << dump(j);
}

void cmd_classify(const Options& o, std::ostream& out) {
  auto t = load_tree(o.a);
  auto c = classify(t, o.n);
  json chain = json::array();
  for (const auto& m : c.chain) chain.push_back(morphism_json(m));
  json j = {{"tree", t->key()},
            {"n", o.n},
            {"in_omega_n", c.in_omega_n},
            {"reduced", c.is_reduced},
            {"reduced_corolla", c.is_reduced_corolla},
            {"extended_corolla", c.is_extended_corolla},
            {"chain", chain},
            {"chain_reversed", c.chain_reversed}};
  out << dump(j);
}

void cmd_operad_check(const Options& o, const Budget& budget, std::ostream& out) {
  auto p = load_operad(o.a, budget);
  const int bound = o.check_bound > 0 ? std::min(o.check_bound, p->arity_bound()) : p->arity_bound();
  auto rep = check_operad_axioms(*p, bound);
  json v = json::array();
  for (const auto& x : rep.violations) v.push_back({{"law", x.law}, {"detail", x.detail}});
  json j = {{"operad", p->name()}, {"arity_bound", bound}, {"instances", rep.instances}, {"ok", rep.ok()},
            {"violations", v}};
  if (!rep.ok()) throw CheckFailed("operad axioms fail", j);
  out << dump(j);
}

void cmd_operad_build_free(const Options& o, const Budget& budget, std::ostream& out) {
  std::map<int, std::vector<std::string>> gens;
  for (const auto& g : o.generators) {
    auto parts = split(g, ':');
    if (parts.size() != 2 || parts[1].empty()) throw std::invalid_argument("generator must be ARITY:NAME, got " + g);
    gens[to_int(parts[0])].push_back(parts[1]);
  }
  auto f = free_operad(Collection::trivial(gens), o.bound, budget);
  if (o.count) {
    std::map<int, int> levels;
    for (OpId p = 0; p < f.op_count(); ++p) ++levels[f.arity(p)];
    for (const auto& [n, c] : levels) out << n << " " << c << "\n";
    return;
  }
  out << operad_to_json(f) << "\n";
}

void cmd_operad_show(const Options& o, const Budget& budget, std::ostream& out) {
  auto p = load_operad(o.a, budget);
  out << operad_to_json(*p) << "\n";
}

/// A dendroidal JSON file (recognized by its "trees" key), or the nerve of an
/// operad source on `carrier` (default: the carrier flags).
std::unique_ptr<DendroidalSet> load_dendroidal(const Options& o, const Budget& budget,
                                               std::vector<TreePtr> carrier = {}) {
  std::shared_ptr<const FiniteOperad> p;
  if (o.a == "-" || std::filesystem::is_regular_file(o.a)) {
    const std::string text = read_file(o.a);
    json probe = json::parse(text, nullptr, false);
    if (probe.is_discarded()) throw std::invalid_argument(o.a + ": not JSON");
    if (probe.is_object() && probe.contains("trees")) return std::make_unique<TabulatedSet>(dendroidal_from_json(text));
    p = std::make_shared<FiniteOperad>(operad_from_json(text));
  } else {
    p = load_operad(o.a, budget);
  }
  for (const auto& t : o.trees) carrier.push_back(load_tree(t));
  if (carrier.empty())
    carrier = tree_carrier(o.max_vertices, std::min(o.carrier_inputs, p->arity_bound()), o.max_tips);
  return std::make_unique<NerveSet>(p, carrier);
}

void cmd_nerve(const Options& o, const Budget& budget, std::ostream& out) {
  auto x = load_dendroidal(o, budget);
  if (o.summary) {
    for (const auto& t : x->carrier()) out << t->key() << " " << x->size(*t) << "\n";
    return;
  }
  out << json::parse(dendroidal_to_json(tabulate(*x, budget))).dump(2) << "\n";
}

void cmd_segal(const Options& o, const Budget& budget, std::ostream& out) {
  auto x = load_dendroidal(o, budget);
  auto rep = is_strict_segal(*x, {}, o.threads, budget);
  json trees = json::array();
  for (const auto& r : rep.trees) {
    json e = {{"tree", r.tree}, {"values", r.values}, {"core", r.core}, {"injective", r.injective},
              {"matching", r.matching}, {"bijective", r.bijective()}};
    if (!r.detail.empty()) e["detail"] = r.detail;
    trees.push_back(std::move(e));
  }
  json j = {{"ok", rep.ok()}, {"failures", rep.failures()}, {"trees", trees}};
  if (!rep.ok()) throw CheckFailed("not strict Segal at " + rep.failures().front(), j);
  out << dump(j);
}

void cmd_reconstruct(const Options& o, const Budget& budget, std::ostream& out) {
  auto x = load_dendroidal(o, budget, reconstruction_carrier(o.bound));
  auto seg = is_strict_segal(*x, {}, o.threads, budget);
  if (!seg.ok()) throw CheckFailed("not strict Segal at " + seg.failures().front(), json{{"failures", seg.failures()}});
  FiniteOperad r = reconstruct_operad(*x, o.bound, budget);
  if (o.compare.empty()) {
    out << operad_to_json(r) << "\n";
    return;
  }
  auto p = load_operad(o.compare, budget);
  auto iso = find_isomorphism(*p, r, budget);
  if (!iso) throw CheckFailed("no isomorphism to " + p->name(), json{{"operad", p->name()}});
  out << json::parse(isomorphism_to_json(*p, r, *iso)).dump(2) << "\n";
}

void cmd_psi(const Options& o, const Budget& budget, std::ostream& out) {
  auto p = enumerate_psi(o.number, budget);
  if (o.count) out << p.elements.size() << "\n";
  else if (o.dot_out) out << poset_to_dot(p, o.n);
  else out << poset_to_json(p, o.n) << "\n";
}

void cmd_boundary(const Options& o, const Budget& budget, std::ostream& out) {
  auto p = boundary_index(o.number, budget);
  if (o.count) out << p.elements.size() << "\n";
  else if (o.dot_out) out << poset_to_dot(p, o.n);
  else out << poset_to_json(p, o.n) << "\n";
}

void cmd_cobound(const Options& o, std::ostream& out) {
  auto c = cobound_index(o.number);
  if (o.count) {
    out << c.subtrees.size() << "\n";
    return;
  }
  json el = json::array();
  for (std::size_t i = 0; i < c.subtrees.size(); ++i) {
    json edges = json::array(), subset = json::array();
    for (Edge e : c.subtrees[i].edges) edges.push_back(address_json(*c.subtrees[i].ambient, e));
    for (int j = 0; j < c.n; ++j)
      if (c.subsets[i] >> j & 1u) subset.push_back(j + 1);
    el.push_back({{"subtree", c.subtrees[i].induced->key()}, {"edges", edges}, {"subset", subset}});
  }
  json j = {{"n", c.n}, {"ambient", reduced_corolla(c.n).key()}, {"elements", el},
            {"order_isomorphism", c.order_isomorphism}};
  if (!c.order_isomorphism) throw CheckFailed("witness is not an order isomorphism", j);
  out << dump(j);
}

std::vector<std::vector<double>> read_points(const std::string& path) {
  const std::string text = read_file(path);
  json j = json::parse(text, nullptr, false);
  std::vector<std::vector<double>> pts;
  if (!j.is_discarded()) {
    try {
      pts = j.get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(path + ": " + e.what());
    }
    return pts;
  }
  // One point per line, coordinates separated by whitespace.
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> p;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || used == 0) throw std::invalid_argument(path + ": bad coordinate '" + tok + "'");
      p.push_back(v);
    }
    if (!p.empty()) pts.push_back(std::move(p));
  }
  return pts;
}

void cmd_fm_selftest(const Options& o, std::ostream& out) {
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_anti = 0, worst_recip = 0, worst_inv = 0;
  for (int trial = 0; trial < o.trials; ++trial) {
    const int k = 3 + trial % 3, n = 1 + trial % 3;
    std::vector<std::vector<double>> pts(static_cast<std::size_t>(k), std::vector<double>(static_cast<std::size_t>(n)));
    for (auto& p : pts)
      for (auto& x : p) x = u(rng);
    auto c = fm_embed(pts);
    for (const auto& [ij, a] : c.a)
      for (int t = 0; t < n; ++t) worst_anti = std::max(worst_anti, std::abs(a[t] + c.a.at({ij.second, ij.first})[t]));
    for (const auto& [ijk, b] : c.b) {
      const auto& [i, j, l] = ijk;
      worst_recip = std::max(worst_recip, std::abs(b * c.b.at({i, l, j}) - 1.0));
    }
    const double lambda = 0.1 + 5 * (u(rng) + 1);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = 10 * u(rng);
    for (auto& p : pts)
      for (int t = 0; t < n; ++t) p[t] = lambda * p[t] + v[t];
    auto cm = fm_embed(pts);
    for (const auto& [ij, a] : c.a)
      for (int t = 0; t < n; ++t) worst_inv = std::max(worst_inv, std::abs(a[t] - cm.a.at(ij)[t]));
    for (const auto& [ijk, b] : c.b) worst_inv = std::max(worst_inv, std::abs(b - cm.b.at(ijk)) / std::max(1.0, b));
  }
  const bool ok = worst_anti <= 1e-12 && worst_recip <= 1e-12 && worst_inv <= 1e-9;
  json j = {{"seed", o.seed}, {"trials", o.trials}, {"antisymmetry", worst_anti}, {"reciprocity", worst_recip},
            {"invariance", worst_inv}, {"ok", ok}};
  if (!ok) throw CheckFailed("fm identities fail", j);
  out << dump(j);
}

void cmd_fm(const Options& o, std::ostream& out) {
  if (o.selftest) return cmd_fm_selftest(o, out);
  if (o.points.empty()) throw CLI::RequiredError("--points or --selftest");
  out << fm_to_json(fm_embed(read_points(o.points))) << "\n";
}

void cmd_connectivity(const Options& o, std::ostream& out) {
  if (o.kmax <= 0) validate(TowerQuery{o.n, o.d, o.k});
  const int kmax = o.kmax > 0 ? o.kmax : o.k;
  const int kmin = o.kmax > 0 ? 2 : o.k;
  std::vector<ConnectivityRow> rows;
  for (const auto& r : connectivity_table(o.n, o.d, kmax))
    if (r.k >= kmin) rows.push_back(r);
  if (o.json_out) out << connectivity_json(o.n, o.d, rows) << "\n";
  else out << connectivity_text(o.n, o.d, rows);
}

void print_error(std::ostream& err, const std::string& kind, const json& detail) {
  err << json{{"error", kind}, {"detail", detail}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Trees, operads, dendroidal sets and Fulton-MacPherson strata", "dendro"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "Worker threads for Segal checks")->check(CLI::PositiveNumber);

  auto* et = app.add_subcommand("enum-trees", "Enumerate canonical trees");
  et->add_option("--max-edges", o.max_edges, "Edge bound")->check(CLI::Range(1, 12));
  et->add_option("--max-inputs", o.max_inputs, "Inputs per vertex (default: edge bound)");
  et->add_flag("--reduced", o.reduced, "Only reduced trees");
  et->add_flag("--count", o.count, "Print the count only");
  et->add_flag("--json", o.json_out, "JSON array of keys");

  auto* hom = app.add_subcommand("hom", "Morphisms S -> T");
  hom->add_option("source", o.a, "Tree term or @file")->required();
  hom->add_option("target", o.b, "Tree term or @file")->required();
  hom->add_option("--max-maps", o.max_maps, "Search budget");
  hom->add_flag("--count", o.count, "Print the count only");

  auto* faces = app.add_subcommand("faces", "Elementary faces into T");
  faces->add_option("tree", o.a, "Tree term or @file")->required();
  faces->add_flag("--count", o.count, "Print the count only");

  auto* fac = app.add_subcommand("factorize", "Degeneracy-iso-face factorization");
  fac->add_option("source", o.a, "Tree term or @file")->required();
  fac->add_option("target", o.b, "Tree term or @file")->required();
  fac->add_option("--map", o.map, "Target edge of each source edge, comma separated (default: all of hom)");
  fac->add_option("--max-maps", o.max_maps, "Search budget");

  auto* sub = app.add_subcommand("subtrees", "Subtrees of T");
  sub->add_option("tree", o.a, "Tree term or @file")->required();
  sub->add_flag("--count", o.count, "Print the count only");

  auto* cls = app.add_subcommand("classify", "Truncation and corolla predicates");
  cls->add_option("tree", o.a, "Tree term or @file")->required();
  cls->add_option("--n", o.n, "Truncation level")->check(CLI::NonNegativeNumber);

  auto* op = app.add_subcommand("operad", "Operad tools");
  op->require_subcommand(1);
  auto* opc = op->add_subcommand("check", "Check the operad axioms");
  opc->add_option("operad", o.a, "Operad JSON or builtin")->required();
  opc->add_option("--bound", o.check_bound, "Arity bound for the check (default: the operad's)");
  auto* opf = op->add_subcommand("build-free", "Free operad on generators");
  opf->add_option("--gen", o.generators, "ARITY:NAME, repeatable")->required();
  opf->add_option("--bound", o.bound, "Arity bound")->check(CLI::Range(1, 8));
  opf->add_flag("--count", o.count, "Print level sizes only");
  auto* ops = op->add_subcommand("show", "Print an operad as JSON");
  ops->add_option("operad", o.a, "Operad JSON or builtin")->required();

  auto carrier_opts = [&](CLI::App* c) {
    c->add_option("--max-vertices", o.max_vertices, "Carrier: vertices per tree")->check(CLI::Range(0, 6));
    c->add_option("--max-inputs", o.carrier_inputs, "Carrier: inputs per vertex")->check(CLI::Range(0, 8));
    c->add_option("--max-tips", o.max_tips, "Carrier: leaves plus stumps (-1: no limit)");
    c->add_option("--tree", o.trees, "Carrier trees instead of the bounds, repeatable");
  };
  auto* nerve = app.add_subcommand("nerve", "Dendroidal nerve of an operad");
  nerve->add_option("operad", o.a, "Operad JSON or builtin")->required();
  carrier_opts(nerve);
  nerve->add_flag("--summary", o.summary, "Print tree sizes only");

  auto* seg = app.add_subcommand("segal-check", "Strict Segal check");
  seg->add_option("input", o.a, "Dendroidal JSON, operad JSON or builtin")->required();
  carrier_opts(seg);

  auto* rec = app.add_subcommand("reconstruct", "Operad of a strict Segal dendroidal set");
  rec->add_option("input", o.a, "Dendroidal JSON, operad JSON or builtin")->required();
  rec->add_option("--bound", o.bound, "Arity bound")->check(CLI::Range(1, 4));
  rec->add_option("--compare", o.compare, "Emit an isomorphism to this operad");

  auto* psi = app.add_subcommand("psi", "Stratification poset Ψ_K");
  psi->add_option("K", o.number, "Number of leaves")->required();
  psi->add_option("--n", o.n, "Ambient dimension for stratum dimensions")->check(CLI::PositiveNumber);
  auto* psi_fmt = psi->add_option_group("format");
  psi_fmt->add_flag("--count", o.count, "Element count");
  psi_fmt->add_flag("--dot", o.dot_out, "Graphviz");
  psi_fmt->add_flag("--json", o.json_out, "JSON (default)");
  psi_fmt->require_option(0, 1);

  auto* bnd = app.add_subcommand("boundary-index", "Ψ_N without its corolla");
  bnd->add_option("N", o.number, "Number of leaves")->required();
  bnd->add_option("--n", o.n, "Ambient dimension")->check(CLI::PositiveNumber);
  auto* bnd_fmt = bnd->add_option_group("format");
  bnd_fmt->add_flag("--count", o.count, "Element count");
  bnd_fmt->add_flag("--dot", o.dot_out, "Graphviz");
  bnd_fmt->add_flag("--json", o.json_out, "JSON (default)");
  bnd_fmt->require_option(0, 1);

  auto* cob = app.add_subcommand("cobound-index", "Root subtrees of the reduced corolla");
  cob->add_option("N", o.number, "Corolla size")->required();
  cob->add_flag("--count", o.count, "Element count");

  auto* fm = app.add_subcommand("fm-embed", "Configuration coordinates (a, b)");
  fm->add_option("--points", o.points, "JSON array or whitespace table of points");
  fm->add_flag("--selftest", o.selftest, "Check the coordinate identities on random configurations");
  fm->add_option("--seed", o.seed, "Seed for --selftest");
  fm->add_option("--trials", o.trials, "Configurations for --selftest")->check(CLI::PositiveNumber);

  auto* con = app.add_subcommand("connectivity", "Tower connectivity formulas");
  con->add_option("--n", o.n, "Source dimension")->required();
  con->add_option("--d", o.d, "Codimension")->required();
  con->add_option("--k", o.k, "Arity level");
  con->add_option("--table", o.kmax, "Rows k = 2..KMAX");
  con->add_flag("--json", o.json_out, "JSON rows");

  std::vector<const char*> argv{"dendro"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream buf;
  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return 0;
    }
    Budget budget = Budget::defaults();
    if (o.max_maps > 0) budget.max_nodes = o.max_maps;

    if (*et) cmd_enum_trees(o, buf);
    else if (*hom) cmd_hom(o, budget, buf);
    else if (*faces) cmd_faces(o, buf);
    else if (*fac) cmd_factorize(o, budget, buf);
    else if (*sub) cmd_subtrees(o, buf);
    else if (*cls) cmd_classify(o, buf);
    else if (*opc) cmd_operad_check(o, budget, buf);
    else if (*opf) cmd_operad_build_free(o, budget, buf);
    else if (*ops) cmd_operad_show(o, budget, buf);
    else if (*nerve) cmd_nerve(o, budget, buf);
    else if (*seg) cmd_segal(o, budget, buf);
    else if (*rec) cmd_reconstruct(o, budget, buf);
    else if (*psi) cmd_psi(o, budget, buf);
    else if (*bnd) cmd_boundary(o, budget, buf);
    else if (*cob) cmd_cobound(o, buf);
    else if (*fm) cmd_fm(o, buf);
    else if (*con) cmd_connectivity(o, buf);
  } catch (const CLI::ParseError& e) {
    print_error(err, "usage", e.what());
    return 2;
  } catch (const CheckFailed& e) {
    print_error(err, e.what(), e.detail);
    return 1;
  } catch (const BudgetExceeded& e) {
    print_error(err, "budget", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error(err, "domain", e.what());
    return 1;
  }
  out << buf.str();
  return 0;
}

}  // namespace dendro::cli
