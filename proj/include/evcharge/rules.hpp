#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstddef>
#include <map>
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

struct band {
  std::string name_;
  std::vector<std::size_t> bins_;  // arrival hours or duration bins
};

// Named, pairwise disjoint bands along each matrix axis. Bins not covered by
// any band are ignored by the rules.
class band_scheme {
public:
  band_scheme(std::vector<band> arrival, std::vector<band> duration)
      : arrival_{std::move(arrival)}, duration_{std::move(duration)} {
    check_axis(arrival_, "arrival");
    check_axis(duration_, "duration");
  }

  std::vector<band> const& arrival_bands() const { return arrival_; }
  std::vector<band> const& duration_bands() const { return duration_; }
  std::size_t submatrix_count() const { return arrival_.size() * duration_.size(); }

private:
  static void check_axis(std::vector<band> const& bands, char const* axis) {
    if (bands.empty()) {
      throw config_error{std::string{"band scheme needs at least one "} + axis +
                         " band"};
    }
    std::array<bool, charging_matrix::kDim> used{};
    for (auto const& b : bands) {
      if (b.bins_.empty()) {
        throw config_error{"band '" + b.name_ + "' is empty"};
      }
      for (auto const i : b.bins_) {
        if (i >= charging_matrix::kDim) {
          throw config_error{"band '" + b.name_ + "' has a bin outside 0..23"};
        }
        if (used[i]) {
          throw config_error{std::string{axis} + " bands overlap at bin " +
                             std::to_string(i)};
        }
        used[i] = true;
      }
    }
  }

  std::vector<band> arrival_, duration_;
};

namespace detail {
inline std::vector<std::size_t> bin_range(std::size_t first, std::size_t last) {
  std::vector<std::size_t> v;
  for (auto i = first; i <= last; ++i) {
    v.push_back(i);
  }
  return v;
}
}  // namespace detail

// Morning 4-10, noon 11-13, afternoon 14-16, evening 17-23; short < 6 h,
// long >= 6 h. Arrivals at 0-3 belong to no band.
inline band_scheme default_band_scheme() {
  using detail::bin_range;
  return {{{"morning", bin_range(4, 10)},
           {"noon", bin_range(11, 13)},
           {"afternoon", bin_range(14, 16)},
           {"evening", bin_range(17, 23)}},
          {{"short", bin_range(0, 5)}, {"long", bin_range(6, 23)}}};
}

constexpr double kDefaultTheta = 0.06;

struct rule_config {
  rule_config(band_scheme scheme, double theta = kDefaultTheta)
      : scheme_{std::move(scheme)}, theta_{theta} {
    if (!(theta > 0.0 && theta < 1.0)) {
      throw config_error{"theta must lie in (0, 1)"};
    }
  }

  band_scheme scheme_;
  double theta_;
};

// One flag per (arrival band, duration band) submatrix, arrival band outer.
struct pattern_signature {
  std::vector<bool> flags_;

  std::string to_string() const {
    std::string s;
    for (auto const f : flags_) {
      s.push_back(f ? '1' : '0');
    }
    return s;
  }

  friend auto operator<=>(pattern_signature const&,
                          pattern_signature const&) = default;
};

inline double band_mass(charging_matrix const& m,
                        std::span<std::size_t const> arrival_bins,
                        std::span<std::size_t const> duration_bins) {
  double s = 0.0;
  for (auto const i : arrival_bins) {
    for (auto const j : duration_bins) {
      s += m(i, j);
    }
  }
  return s;
}

inline pattern_signature signature(charging_matrix const& m,
                                   rule_config const& cfg) {
  pattern_signature sig;
  sig.flags_.reserve(cfg.scheme_.submatrix_count());
  for (auto const& a : cfg.scheme_.arrival_bands()) {
    for (auto const& d : cfg.scheme_.duration_bands()) {
      sig.flags_.push_back(band_mass(m, a.bins_, d.bins_) > cfg.theta_);
    }
  }
  return sig;
}

using signature_groups = std::map<pattern_signature, std::vector<std::string>>;

inline signature_groups group_by_signature(
    std::span<labeled_matrix const> matrices, rule_config const& cfg) {
  signature_groups groups;
  for (auto const& m : matrices) {
    groups[signature(m.matrix_, cfg)].push_back(m.pool_id_);
  }
  return groups;
}

// Largest groups first; equal sizes ordered by signature bitstring.
inline std::vector<std::pair<pattern_signature, std::size_t>> top_k_groups(
    signature_groups const& groups, std::size_t k) {
  if (k < 1) {
    throw config_error{"k must be at least 1"};
  }
  std::vector<std::pair<pattern_signature, std::size_t>> out;
  for (auto const& [sig, ids] : groups) {
    out.emplace_back(sig, ids.size());
  }
  std::stable_sort(begin(out), end(out), [](auto const& a, auto const& b) {
    return a.second > b.second;
  });
  out.resize(std::min(k, out.size()));
  return out;
}

inline band_scheme band_scheme_from_json(nlohmann::json const& j) {
  auto const read_axis = [&](char const* key) {
    std::vector<band> bands;
    for (auto const& b : j.at(key)) {
      bands.push_back({b.at("name").get<std::string>(),
                       b.at(b.contains("hours") ? "hours" : "bins")
                           .get<std::vector<std::size_t>>()});
    }
    return bands;
  };
  try {
    return {read_axis("arrival_bands"), read_axis("duration_bands")};
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"malformed band scheme: "} + e.what()};
  }
}

inline nlohmann::json to_json(band_scheme const& s) {
  auto const axis = [](std::vector<band> const& bands, char const* key) {
    auto arr = nlohmann::json::array();
    for (auto const& b : bands) {
      arr.push_back({{"name", b.name_}, {key, b.bins_}});
    }
    return arr;
  };
  return {{"arrival_bands", axis(s.arrival_bands(), "hours")},
          {"duration_bands", axis(s.duration_bands(), "hours")}};
}

inline void write_signatures(std::ostream& out,
                             std::span<labeled_matrix const> matrices,
                             rule_config const& cfg) {
  out << "pool_id,signature\n";
  for (auto const& m : matrices) {
    out << csv::escape(m.pool_id_) << ',' << signature(m.matrix_, cfg).to_string()
        << '\n';
  }
}

// All groups, ordered as top_k_groups; pool ids separated by ';'.
inline void write_groups(std::ostream& out, signature_groups const& groups) {
  out << "signature,size,pool_ids\n";
  for (auto const& [sig, size] : top_k_groups(groups, groups.size() + 1)) {
    std::string ids;
    for (auto const& id : groups.at(sig)) {
      if (!ids.empty()) {
        ids.push_back(';');
      }
      ids += id;
    }
    out << sig.to_string() << ',' << size << ',' << csv::escape(ids) << '\n';
  }
}

}  // namespace evcharge
