#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "evcharge/error.hpp"
#include "evcharge/ingest.hpp"

namespace evcharge {

// 24×24 empirical probability matrix. Row i is the local arrival hour
// [i, i+1) o'clock, column j the connection duration bin [j, j+1) hours.
class charging_matrix {
public:
  static constexpr std::size_t kDim = 24;
  static constexpr std::size_t kCells = kDim * kDim;
  static constexpr double kSumTolerance = 1e-9;
  using cells_t = std::array<double, kCells>;

  // Validates nonnegativity, unit mass and source_count ≥ 1.
  static charging_matrix from_cells(cells_t const& cells,
                                    std::size_t source_count) {
    if (source_count < 1) {
      throw data_error{"charging matrix needs at least one source transaction"};
    }
    double sum = 0.0;
    for (auto const v : cells) {
      if (!std::isfinite(v) || v < 0.0) {
        throw data_error{"charging matrix cells must be finite and nonnegative"};
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw data_error{"charging matrix cells must sum to 1"};
    }
    charging_matrix m;
    m.cells_ = cells;
    m.source_count_ = source_count;
    return m;
  }

  double operator()(std::size_t arrival_hour, std::size_t duration_bin) const {
    return cells_[arrival_hour * kDim + duration_bin];
  }
  cells_t const& cells() const { return cells_; }
  std::size_t source_count() const { return source_count_; }

  double sum() const {
    double s = 0.0;
    for (auto const v : cells_) {
      s += v;
    }
    return s;
  }

  friend bool operator==(charging_matrix const&, charging_matrix const&) = default;

private:
  charging_matrix() = default;

  cells_t cells_{};
  std::size_t source_count_{0};
};

struct labeled_matrix {
  std::string pool_id_;
  charging_matrix matrix_;
};

inline std::size_t duration_bin(transaction const& tx) {
  return static_cast<std::size_t>(std::floor(tx.duration_s_ / 3600.0));
}

inline charging_matrix build_matrix(std::span<transaction const> txs) {
  if (txs.empty()) {
    throw data_error{"no usable transactions"};
  }
  std::array<std::size_t, charging_matrix::kCells> counts{};
  for (auto const& tx : txs) {
    if (!(tx.duration_s_ >= 0.0)) {
      throw data_error{"negative duration in matrix input"};
    }
    auto const j = duration_bin(tx);
    if (j >= charging_matrix::kDim) {
      throw data_error{"session of 24 h or longer in matrix input"};
    }
    auto const i = static_cast<std::size_t>(tx.arrival_.hour_of_day());
    ++counts[i * charging_matrix::kDim + j];
  }
  charging_matrix::cells_t cells{};
  auto const n = static_cast<double>(txs.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    cells[k] = static_cast<double>(counts[k]) / n;
  }
  return charging_matrix::from_cells(cells, txs.size());
}

enum class mean_weighting { unweighted, by_transactions };

// Normalized element-wise sum of the given matrices.
inline charging_matrix aggregate_mean(
    std::span<charging_matrix const> matrices,
    mean_weighting weighting = mean_weighting::unweighted) {
  if (matrices.empty()) {
    throw data_error{"cannot aggregate an empty set of matrices"};
  }
  charging_matrix::cells_t cells{};
  std::size_t total = 0;
  double weight_sum = 0.0;
  for (auto const& m : matrices) {
    auto const w = weighting == mean_weighting::unweighted
                       ? 1.0
                       : static_cast<double>(m.source_count());
    for (std::size_t k = 0; k < cells.size(); ++k) {
      cells[k] += w * m.cells()[k];
    }
    total += m.source_count();
    weight_sum += w;
  }
  for (auto& v : cells) {
    v /= weight_sum;
  }
  return charging_matrix::from_cells(cells, total);
}

// Cell counts over the bins {0}, (0, 0.01], (0.01, 0.1], (0.1, inf).
using value_frequencies = std::array<std::size_t, 4>;

inline value_frequencies value_frequency_report(
    std::span<charging_matrix const> matrices) {
  value_frequencies f{};
  for (auto const& m : matrices) {
    for (auto const v : m.cells()) {
      if (v == 0.0) {
        ++f[0];
      } else if (v <= 0.01) {
        ++f[1];
      } else if (v <= 0.1) {
        ++f[2];
      } else {
        ++f[3];
      }
    }
  }
  return f;
}

inline void write_value_frequencies(std::ostream& out,
                                    value_frequencies const& f) {
  out << "bin,count\n"
      << "zero," << f[0] << '\n'
      << "(0;0.01]," << f[1] << '\n'
      << "(0.01;0.1]," << f[2] << '\n'
      << "(0.1;inf)," << f[3] << '\n';
}

inline nlohmann::json to_json(labeled_matrix const& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < charging_matrix::kDim; ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < charging_matrix::kDim; ++j) {
      row.push_back(m.matrix_(i, j));
    }
    rows.push_back(std::move(row));
  }
  return {{"pool_id", m.pool_id_},
          {"source_count", m.matrix_.source_count()},
          {"layout", "row = arrival hour, column = duration bin"},
          {"cells", std::move(rows)}};
}

inline labeled_matrix matrix_from_json(nlohmann::json const& j) {
  try {
    auto const& rows = j.at("cells");
    if (!rows.is_array() || rows.size() != charging_matrix::kDim) {
      throw data_error{"matrix JSON must have 24 rows"};
    }
    charging_matrix::cells_t cells{};
    for (std::size_t i = 0; i < charging_matrix::kDim; ++i) {
      if (!rows[i].is_array() || rows[i].size() != charging_matrix::kDim) {
        throw data_error{"matrix JSON rows must have 24 columns"};
      }
      for (std::size_t k = 0; k < charging_matrix::kDim; ++k) {
        cells[i * charging_matrix::kDim + k] = rows[i][k].get<double>();
      }
    }
    return {j.at("pool_id").get<std::string>(),
            charging_matrix::from_cells(cells,
                                        j.at("source_count").get<std::size_t>())};
  } catch (nlohmann::json::exception const& e) {
    throw data_error{std::string{"malformed matrix JSON: "} + e.what()};
  }
}

// Flat CSV of the nonzero cells.
inline void write_nonzero_cells(std::ostream& out,
                                std::span<labeled_matrix const> matrices) {
  out << "pool_id,i,j,value\n";
  for (auto const& m : matrices) {
    for (std::size_t i = 0; i < charging_matrix::kDim; ++i) {
      for (std::size_t j = 0; j < charging_matrix::kDim; ++j) {
        if (auto const v = m.matrix_(i, j); v != 0.0) {
          out << csv::escape(m.pool_id_) << ',' << i << ',' << j << ','
              << format_double(v) << '\n';
        }
      }
    }
  }
}

}  // namespace evcharge
