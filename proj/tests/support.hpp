#pragma once

#include <cstdint>
#include <vector>

#include "proxyaudit/misclass.hpp"
#include "proxyaudit/rng.hpp"

namespace testsupport {

// Published confusion-matrix cell counts (prediction rows, reference
// columns) in Asian / Black / Hispanic / Others / White order.
inline const std::vector<std::vector<std::int64_t>>& published_flow_cells() {
  static const std::vector<std::vector<std::int64_t>> cells = {
      {17907, 448, 380, 6298, 1815},
      {1836, 280480, 3983, 11346, 82036},
      {1087, 2765, 74506, 6997, 15313},
      {4089, 10060, 2496, 7327, 12737},
      {6533, 140072, 12409, 22671, 1126267},
  };
  return cells;
}

struct ReversibleInstance {
  proxyaudit::Matrix c;
  proxyaudit::Vector n;
  proxyaudit::Vector beta;
};

// Random neutral + reversible instance built from a symmetric flow matrix
// with prescribed margins: start from diag(n) and repeatedly move mass
// delta from two diagonal cells to the symmetric off-diagonal pair, which
// preserves symmetry, margins and nonnegativity. Column-normalizing by the
// margins then yields a column-stochastic reversible (hence neutral) C.
inline ReversibleInstance random_reversible_instance(proxyaudit::Rng& rng,
                                                     int p_min = 2, int p_max = 6) {
  const int p = p_min + static_cast<int>(rng.uniform_index(p_max - p_min + 1));
  proxyaudit::Vector n(p);
  for (int j = 0; j < p; ++j)
    n[j] = 20.0 + static_cast<double>(rng.uniform_index(101));

  proxyaudit::Matrix f(p, p);
  for (int j = 0; j < p; ++j) f(j, j) = n[j];
  const int moves = 3 * p * p;
  for (int m = 0; m < moves; ++m) {
    const int j = static_cast<int>(rng.uniform_index(p));
    int k = static_cast<int>(rng.uniform_index(p));
    if (j == k) continue;
    const double cap = 0.45 * std::min(f(j, j), f(k, k));
    if (cap <= 0.0) continue;
    const double delta = rng.uniform(0.0, cap);
    f(j, j) -= delta;
    f(k, k) -= delta;
    f(j, k) += delta;
    f(k, j) += delta;
  }

  ReversibleInstance inst;
  inst.n = n;
  inst.c = proxyaudit::Matrix(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) inst.c(j, k) = f(j, k) / n[k];
  inst.beta.resize(p);
  for (int j = 0; j < p; ++j) inst.beta[j] = rng.uniform(-3.0, 3.0);
  return inst;
}

// Generic column-stochastic matrix; almost surely violates detailed balance.
inline proxyaudit::Matrix random_column_stochastic(proxyaudit::Rng& rng, int p) {
  proxyaudit::Matrix c(p, p);
  for (int k = 0; k < p; ++k) {
    double sum = 0.0;
    for (int j = 0; j < p; ++j) {
      c(j, k) = -std::log(1.0 - rng.uniform());
      sum += c(j, k);
    }
    for (int j = 0; j < p; ++j) c(j, k) /= sum;
  }
  return c;
}

}  // namespace testsupport
