#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"

#include "evcharge/csv.hpp"
#include "evcharge/error.hpp"
#include "evcharge/matrix.hpp"

namespace evcharge {

// Exponents of the matrix dissimilarity
//   d(A, B) = (sum_ij |A_ij - B_ij|^p)^(1/o),  o >= 1, p > 0.
class dissim_params {
public:
  dissim_params(double o, double p) : o_{o}, p_{p} {
    if (!(o >= 1.0) || !std::isfinite(o)) {
      throw config_error{"dissimilarity parameter o must be >= 1"};
    }
    if (!(p > 0.0) || !std::isfinite(p)) {
      throw config_error{"dissimilarity parameter p must be > 0"};
    }
  }

  double o() const { return o_; }
  double p() const { return p_; }

  friend bool operator==(dissim_params const&, dissim_params const&) = default;

private:
  double o_, p_;
};

// o = p in {1, 2, 3}, then o = 1 with p in {1/2, 1/3, 2/3, 2, 3}.
inline std::vector<dissim_params> reference_sweep_params() {
  return {{1.0, 2.0 / 3.0}, {1.0, 0.5}, {1.0, 1.0 / 3.0}, {1.0, 2.0},
          {1.0, 3.0},       {1.0, 1.0}, {2.0, 2.0},       {3.0, 3.0}};
}

inline double dissimilarity(charging_matrix const& a, charging_matrix const& b,
                            dissim_params const& params) {
  auto const p = params.p();
  double sum = 0.0;
  auto const& ca = a.cells();
  auto const& cb = b.cells();
  if (p == 1.0) {
    for (std::size_t k = 0; k < ca.size(); ++k) {
      sum += std::abs(ca[k] - cb[k]);
    }
  } else if (p == 2.0) {
    for (std::size_t k = 0; k < ca.size(); ++k) {
      auto const x = ca[k] - cb[k];
      sum += x * x;
    }
  } else {
    for (std::size_t k = 0; k < ca.size(); ++k) {
      if (auto const x = std::abs(ca[k] - cb[k]); x != 0.0) {
        sum += std::pow(x, p);
      }
    }
  }
  if (params.o() == 1.0) {
    return sum;
  }
  if (params.o() == 2.0) {
    return std::sqrt(sum);
  }
  return std::pow(sum, 1.0 / params.o());
}

// Dense symmetric n×n distances with zero diagonal, rows labeled by pool id.
class distance_matrix {
public:
  distance_matrix(std::vector<std::string> labels, std::vector<double> entries,
                  std::optional<dissim_params> params = std::nullopt)
      : labels_{std::move(labels)},
        entries_{std::move(entries)},
        params_{params} {
    auto const n = labels_.size();
    if (entries_.size() != n * n) {
      throw data_error{"distance matrix must be square and match its labels"};
    }
    for (std::size_t a = 0; a < n; ++a) {
      if ((*this)(a, a) != 0.0) {
        throw data_error{"distance matrix diagonal must be zero"};
      }
      for (auto b = a + 1; b < n; ++b) {
        auto const x = (*this)(a, b);
        auto const y = (*this)(b, a);
        if (!(x == y || (std::isnan(x) && std::isnan(y)))) {
          throw data_error{"distance matrix must be symmetric"};
        }
        if (x < 0.0) {
          throw data_error{"distance matrix entries must be nonnegative"};
        }
      }
    }
  }

  std::size_t size() const { return labels_.size(); }
  double operator()(std::size_t a, std::size_t b) const {
    return entries_[a * labels_.size() + b];
  }
  std::vector<std::string> const& labels() const { return labels_; }
  std::optional<dissim_params> const& params() const { return params_; }

private:
  std::vector<std::string> labels_;
  std::vector<double> entries_;
  std::optional<dissim_params> params_;
};

// Evaluates `kernel` once per unordered pair.
template <typename Kernel>
  requires std::invocable<Kernel&, charging_matrix const&, charging_matrix const&>
distance_matrix make_distance_matrix(std::span<labeled_matrix const> matrices,
                                     Kernel&& kernel,
                                     std::optional<dissim_params> params = {}) {
  auto const n = matrices.size();
  if (n < 2) {
    throw data_error{"need at least 2 matrices for a distance matrix"};
  }
  std::vector<double> entries(n * n, 0.0);
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t a = 0; a < n; ++a) {
    labels.push_back(matrices[a].pool_id_);
    for (auto b = a + 1; b < n; ++b) {
      auto const d = kernel(matrices[a].matrix_, matrices[b].matrix_);
      entries[a * n + b] = d;
      entries[b * n + a] = d;
    }
  }
  return {std::move(labels), std::move(entries), params};
}

inline distance_matrix make_distance_matrix(
    std::span<labeled_matrix const> matrices, dissim_params const& params) {
  return make_distance_matrix(
      matrices,
      [&](charging_matrix const& a, charging_matrix const& b) {
        return dissimilarity(a, b, params);
      },
      params);
}

// x^p for each x, the per-cell contribution of a difference x.
inline std::vector<double> sensitivity_curve(double p,
                                             std::span<double const> xs) {
  if (!(p > 0.0)) {
    throw config_error{"sensitivity exponent must be > 0"};
  }
  std::vector<double> out;
  out.reserve(xs.size());
  for (auto const x : xs) {
    out.push_back(std::pow(x, p));
  }
  return out;
}

inline void write_distance_csv(std::ostream& out, distance_matrix const& d) {
  out << "pool_id";
  for (auto const& l : d.labels()) {
    out << ',' << csv::escape(l);
  }
  out << '\n';
  for (std::size_t a = 0; a < d.size(); ++a) {
    out << csv::escape(d.labels()[a]);
    for (std::size_t b = 0; b < d.size(); ++b) {
      out << ',' << format_double(d(a, b));
    }
    out << '\n';
  }
}

inline nlohmann::json to_json(dissim_params const& p) {
  return {{"o", p.o()}, {"p", p.p()}};
}

}  // namespace evcharge
