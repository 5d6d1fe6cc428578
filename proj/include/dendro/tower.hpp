#pragma once

// Connectivity bookkeeping for the tower of mapping spaces from E_n to
// E_{n+d}. Connectivities are plain integers with no floor at -1.

#include <string>
#include <vector>

namespace dendro {

struct TowerQuery {
  int n = 1;  // source little-disk dimension, >= 1
  int d = 0;  // codimension, >= 0
  int k = 2;  // arity level, >= 2
};

/// Throws std::invalid_argument when a field is out of range.
void validate(const TowerQuery& q);

/// (k−1)(d−2)+1.
int layer_connectivity(const TowerQuery& q);
/// d−1. Throws std::domain_error for d < 2, outside the hypothesis.
int global_connectivity(int d);
/// (k−1)(n−2)+1 for E_n(k) -> Cobound_k(E_n).
int cobound_connectivity(int k, int n);
/// n(k−1)−1.
int relative_cell_dim(int n, int k);

struct LayerParts {
  int cobound = 0;   // (k−1)(n+d−2)
  int cell_dim = 0;  // n(k−1)−1
  int value = 0;     // cobound − cell_dim
  std::vector<std::string> audit;
};

LayerParts layer_from_parts(const TowerQuery& q);

struct ConnectivityRow {
  int k = 0;
  int layer = 0;
  LayerParts parts;
};

/// Rows for k = 2..kmax at fixed n, d.
std::vector<ConnectivityRow> connectivity_table(int n, int d, int kmax);
std::string connectivity_text(int n, int d, const std::vector<ConnectivityRow>& rows);
std::string connectivity_json(int n, int d, const std::vector<ConnectivityRow>& rows);

}  // namespace dendro
