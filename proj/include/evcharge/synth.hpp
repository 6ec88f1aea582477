#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nlohmann/json.hpp"

#include "evcharge/error.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/preprocess.hpp"

namespace evcharge {

struct mixture_component {
  double mean_;    // hours
  double std_;     // hours, 0 gives a point mass
  double weight_;
};

// Gaussian mixtures over arrival hour (wrapped mod 24) and connection
// duration (truncated to [0, 24)).
struct archetype {
  std::string name_;
  std::vector<mixture_component> arrival_;
  std::vector<mixture_component> duration_;

  void validate() const {
    auto const check = [&](std::vector<mixture_component> const& mix,
                           char const* axis) {
      if (mix.empty()) {
        throw config_error{"archetype '" + name_ + "' has no " + axis +
                           " components"};
      }
      double w = 0.0;
      for (auto const& c : mix) {
        if (!(c.mean_ >= 0.0 && c.mean_ < 24.0) || !(c.std_ >= 0.0) ||
            !std::isfinite(c.std_) || !(c.weight_ >= 0.0)) {
          throw config_error{"archetype '" + name_ + "' has an invalid " +
                             axis + " component"};
        }
        w += c.weight_;
      }
      if (std::abs(w - 1.0) > 1e-9) {
        throw config_error{"archetype '" + name_ + "' " + axis +
                           " weights must sum to 1"};
      }
    };
    check(arrival_, "arrival");
    check(duration_, "duration");
  }
};

// Sampling primitives on top of std::mt19937_64, whose output sequence is
// fixed by the standard. Distributions are computed here rather than with
// <random> distributions, which differ between standard libraries.
class sampler {
public:
  explicit sampler(std::uint64_t seed) : engine_{seed} {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Box-Muller, one variate per call.
  double normal() {
    auto const u1 = 1.0 - uniform();  // (0, 1]
    auto const u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::size_t pick(std::vector<mixture_component> const& mix) {
    auto u = uniform();
    for (std::size_t i = 0; i + 1 < mix.size(); ++i) {
      if (u < mix[i].weight_) {
        return i;
      }
      u -= mix[i].weight_;
    }
    return mix.size() - 1;
  }

  std::uint64_t next() { return engine_(); }

private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

struct station_spec {
  std::string station_id_{"S"};
  lat_lon pos_{52.0, 5.1};
  std::chrono::sys_days first_day_{std::chrono::year{2015} / 1 / 1};
  int days_{365};
};

// Arrival days are uniform over the station's period; times are whole seconds.
inline std::vector<transaction> generate_station(archetype const& arch,
                                                 std::size_t n_tx,
                                                 std::uint64_t seed,
                                                 station_spec const& spec = {}) {
  arch.validate();
  if (n_tx < 1) {
    throw config_error{"a generated station needs at least one transaction"};
  }
  if (spec.days_ < 1) {
    throw config_error{"generation period must span at least one day"};
  }
  constexpr std::int64_t kDayS = 86'400;
  sampler rng{seed};
  std::vector<transaction> txs;
  txs.reserve(n_tx);
  for (std::size_t i = 0; i < n_tx; ++i) {
    auto const day = static_cast<std::int64_t>(rng.uniform() * spec.days_);

    auto const& a = arch.arrival_[rng.pick(arch.arrival_)];
    auto hour = std::fmod(a.mean_ + a.std_ * rng.normal(), 24.0);
    if (hour < 0.0) {
      hour += 24.0;
    }
    auto const arrival_s =
        std::min(static_cast<std::int64_t>(std::floor(hour * 3600.0)), kDayS - 1);

    auto const& d = arch.duration_[rng.pick(arch.duration_)];
    double dur = 0.0;
    do {
      dur = d.mean_ + d.std_ * rng.normal();
    } while (!(dur >= 0.0 && dur < 24.0));
    auto const duration_s =
        std::min(static_cast<std::int64_t>(std::floor(dur * 3600.0)), kDayS - 1);

    txs.push_back({spec.station_id_, spec.pos_.lat_, spec.pos_.lon_,
                   timestamp::from_local(spec.first_day_ + std::chrono::days{day},
                                         arrival_s * 1000),
                   static_cast<double>(duration_s)});
  }
  return txs;
}

// Work: morning arrival for a working day, some short errands. Home:
// evening arrival overnight, some short stops. Shopping: midday or mid-
// afternoon arrival, short stay. Every archetype spreads at least a fifth
// of its mass outside its main submatrix.
inline std::vector<archetype> default_archetypes() {
  return {{"work", {{8.0, 1.0, 1.0}}, {{9.0, 1.0, 0.8}, {3.0, 1.0, 0.2}}},
          {"home", {{19.5, 1.0, 1.0}}, {{12.0, 2.0, 0.8}, {2.5, 1.0, 0.2}}},
          {"shopping", {{12.5, 0.6, 0.8}, {15.5, 0.4, 0.2}}, {{2.0, 1.0, 1.0}}}};
}

struct fixture {
  std::vector<transaction> transactions_;
  std::map<std::string, std::size_t> truth_;  // station id -> archetype index
};

// Stations are laid out on a grid with roughly 700 m spacing so that none of
// them pool at the default merge radius.
inline fixture generate_fixture(std::span<archetype const> archetypes,
                                std::size_t stations_per_archetype,
                                std::size_t n_tx, std::uint64_t seed) {
  fixture f;
  std::size_t station = 0;
  for (std::size_t a = 0; a < archetypes.size(); ++a) {
    for (std::size_t s = 0; s < stations_per_archetype; ++s, ++station) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%03zu", archetypes[a].name_.c_str(), s);
      station_spec spec;
      spec.station_id_ = id;
      spec.pos_ = {52.0 + 0.01 * static_cast<double>(a),
                   4.0 + 0.01 * static_cast<double>(s)};
      auto txs = generate_station(archetypes[a], n_tx,
                                  splitmix64(seed ^ splitmix64(station)), spec);
      f.transactions_.insert(end(f.transactions_), begin(txs), end(txs));
      f.truth_.emplace(spec.station_id_, a);
    }
  }
  return f;
}

inline double adjusted_rand_index(std::span<std::size_t const> a,
                                  std::span<std::size_t const> b) {
  if (a.size() != b.size()) {
    throw data_error{"labelings must have equal length"};
  }
  if (a.size() < 2) {
    throw data_error{"adjusted Rand index needs at least 2 items"};
  }
  std::map<std::pair<std::size_t, std::size_t>, double> cells;
  std::map<std::size_t, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++cells[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  auto const pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (auto const& [_, c] : cells) {
    index += pairs(c);
  }
  for (auto const& [_, c] : rows) {
    sum_a += pairs(c);
  }
  for (auto const& [_, c] : cols) {
    sum_b += pairs(c);
  }
  auto const expected = sum_a * sum_b / pairs(static_cast<double>(a.size()));
  auto const max_index = (sum_a + sum_b) / 2.0;
  if (max_index == expected) {
    return 1.0;
  }
  return (index - expected) / (max_index - expected);
}

inline std::vector<archetype> archetypes_from_json(nlohmann::json const& j) {
  auto const mix = [](nlohmann::json const& arr) {
    std::vector<mixture_component> out;
    for (auto const& c : arr) {
      out.push_back({c.at("mean").get<double>(), c.at("std").get<double>(),
                     c.at("weight").get<double>()});
    }
    return out;
  };
  std::vector<archetype> out;
  try {
    for (auto const& a : j) {
      out.push_back({a.at("name").get<std::string>(), mix(a.at("arrival")),
                     mix(a.at("duration"))});
      out.back().validate();
    }
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"malformed archetype file: "} + e.what()};
  }
  if (out.empty()) {
    throw config_error{"archetype file lists no archetypes"};
  }
  return out;
}

}  // namespace evcharge
