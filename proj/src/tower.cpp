#include "dendro/tower.hpp"

#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dendro {

void validate(const TowerQuery& q) {
  if (q.n < 1) throw std::invalid_argument("n must be at least 1");
  if (q.d < 0) throw std::invalid_argument("d must be at least 0");
  if (q.k < 2) throw std::invalid_argument("k must be at least 2");
}

int layer_connectivity(const TowerQuery& q) {
  validate(q);
  return (q.k - 1) * (q.d - 2) + 1;
}

int global_connectivity(int d) {
  if (d < 2) throw std::domain_error("d = " + std::to_string(d) + " is outside the hypothesis d >= 2");
  return d - 1;
}

int cobound_connectivity(int k, int n) {
  validate(TowerQuery{n, 0, k});
  return (k - 1) * (n - 2) + 1;
}

int relative_cell_dim(int n, int k) {
  validate(TowerQuery{n, 0, k});
  return n * (k - 1) - 1;
}

LayerParts layer_from_parts(const TowerQuery& q) {
  validate(q);
  LayerParts p;
  p.cobound = (q.k - 1) * (q.n + q.d - 2);
  p.cell_dim = relative_cell_dim(q.n, q.k);
  p.value = p.cobound - p.cell_dim;
  auto s = [](int v) { return std::to_string(v); };
  p.audit.push_back("cobound part (k-1)(n+d-2) = " + s(q.k - 1) + "*" + s(q.n + q.d - 2) + " = " + s(p.cobound));
  p.audit.push_back("relative cells up to n(k-1)-1 = " + s(q.n) + "*" + s(q.k - 1) + "-1 = " + s(p.cell_dim));
  p.audit.push_back("difference = " + s(p.value) + ", layer formula (k-1)(d-2)+1 = " + s(layer_connectivity(q)));
  if (q.d < 2) p.audit.push_back("d < 2: outside the hypothesis of the connectivity theorem");
  if (p.value < 0) p.audit.push_back("negative connectivity: no claim");
  return p;
}

std::vector<ConnectivityRow> connectivity_table(int n, int d, int kmax) {
  if (kmax < 2) throw std::invalid_argument("kmax must be at least 2");
  std::vector<ConnectivityRow> rows;
  for (int k = 2; k <= kmax; ++k) {
    TowerQuery q{n, d, k};
    rows.push_back(ConnectivityRow{k, layer_connectivity(q), layer_from_parts(q)});
  }
  return rows;
}

std::string connectivity_text(int n, int d, const std::vector<ConnectivityRow>& rows) {
  std::ostringstream os;
  os << "n=" << n << " d=" << d << "\n";
  os << std::setw(4) << "k" << std::setw(8) << "layer" << std::setw(10) << "cobound" << std::setw(10) << "celldim"
     << "\n";
  for (const auto& r : rows)
    os << std::setw(4) << r.k << std::setw(8) << r.layer << std::setw(10) << r.parts.cobound << std::setw(10)
       << r.parts.cell_dim << "\n";
  if (d >= 2) os << "global connectivity: " << global_connectivity(d) << "\n";
  else os << "global connectivity: none (d < 2)\n";
  return os.str();
}

std::string connectivity_json(int n, int d, const std::vector<ConnectivityRow>& rows) {
  nlohmann::json j;
  j["n"] = n;
  j["d"] = d;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"k", r.k},
                         {"layer", r.layer},
                         {"parts", {{"cobound", r.parts.cobound}, {"celldim", r.parts.cell_dim}}},
                         {"audit", r.parts.audit}});
  if (d >= 2) j["global"] = global_connectivity(d);
  else j["global"] = nullptr;
  return j.dump(2);
}

}  // namespace dendro
