#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "evcharge/ingest.hpp"
#include "evcharge/matrix.hpp"

namespace evcharge::test {

inline charging_matrix uniform_matrix() {
  charging_matrix::cells_t c;
  c.fill(1.0 / 576.0);
  return charging_matrix::from_cells(c, 576);
}

inline charging_matrix one_hot(std::size_t i, std::size_t j) {
  charging_matrix::cells_t c{};
  c[i * 24 + j] = 1.0;
  return charging_matrix::from_cells(c, 1);
}

inline charging_matrix from_entries(
    std::vector<std::pair<std::pair<std::size_t, std::size_t>, double>> const& e) {
  charging_matrix::cells_t c{};
  for (auto const& [ij, v] : e) {
    c[ij.first * 24 + ij.second] = v;
  }
  return charging_matrix::from_cells(c, 1);
}

// Random normalized matrix; `sparsity` is the chance a cell is zero, to mimic
// the mostly empty real matrices.
inline charging_matrix random_matrix(std::mt19937_64& rng, double sparsity = 0.8) {
  std::uniform_real_distribution<double> u{0.0, 1.0};
  charging_matrix::cells_t c{};
  double sum = 0.0;
  for (auto& v : c) {
    v = u(rng) < sparsity ? 0.0 : u(rng);
    sum += v;
  }
  if (sum == 0.0) {
    c[0] = 1.0;
    sum = 1.0;
  }
  for (auto& v : c) {
    v /= sum;
  }
  // Renormalizing can leave the sum a few ulps off 1; that is within tolerance.
  return charging_matrix::from_cells(c, 100);
}

inline transaction make_tx(std::string id, double lat, double lon,
                           std::string const& arrival, double duration_s) {
  return {std::move(id), lat, lon, *parse_timestamp(arrival), duration_s};
}

}  // namespace evcharge::test
