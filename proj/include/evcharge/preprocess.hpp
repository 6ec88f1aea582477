#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "evcharge/error.hpp"
#include "evcharge/ingest.hpp"
#include "evcharge/union_find.hpp"

namespace evcharge {

constexpr double kEarthRadiusM = 6'371'000.0;
constexpr double kDefaultMergeRadiusM = 30.0;
constexpr std::size_t kDefaultMinTransactions = 30;
constexpr double kDefaultMaxDurationHours = 24.0;

struct lat_lon {
  double lat_{0.0}, lon_{0.0};
};

// Great-circle distance in meters on a sphere of radius kEarthRadiusM.
inline double haversine_distance(lat_lon const& a, lat_lon const& b) {
  constexpr auto kToRad = std::numbers::pi / 180.0;
  auto const u = std::sin((b.lat_ - a.lat_) * kToRad / 2.0);
  auto const v = std::sin((b.lon_ - a.lon_) * kToRad / 2.0);
  auto const h = u * u + std::cos(a.lat_ * kToRad) * std::cos(b.lat_ * kToRad) * v * v;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::min(1.0, h)));
}

struct station_site {
  std::string station_id_;
  lat_lon pos_;
};

struct station_pool {
  std::string pool_id_;               // smallest member id
  std::vector<std::string> members_;  // sorted
  std::vector<transaction> transactions_;
};

// One site per station, located at the station's first observed coordinate.
inline std::vector<station_site> sites_from(std::vector<transaction> const& txs) {
  std::vector<station_site> sites;
  std::unordered_set<std::string> seen;
  for (auto const& tx : txs) {
    if (seen.insert(tx.station_id_).second) {
      sites.push_back({tx.station_id_, {tx.latitude_, tx.longitude_}});
    }
  }
  return sites;
}

// Connected components of the graph joining sites closer than `radius_m`
// (strict). Pools are returned sorted by pool id and carry no transactions.
inline std::vector<station_pool> pool_stations(
    std::vector<station_site> const& sites,
    double radius_m = kDefaultMergeRadiusM) {
  if (!(radius_m > 0.0)) {
    throw config_error{"merge radius must be positive"};
  }
  {
    std::unordered_set<std::string> ids;
    for (auto const& s : sites) {
      if (!ids.insert(s.station_id_).second) {
        throw data_error{"duplicate station site '" + s.station_id_ + "'"};
      }
    }
  }

  // Sweep in latitude order: the latitude arc alone bounds the distance.
  std::vector<std::size_t> order(sites.size());
  std::iota(begin(order), end(order), std::size_t{0});
  std::sort(begin(order), end(order), [&](auto a, auto b) {
    return sites[a].pos_.lat_ < sites[b].pos_.lat_;
  });
  constexpr auto kMetersPerDegree = kEarthRadiusM * std::numbers::pi / 180.0;

  union_find uf{sites.size()};
  for (std::size_t x = 0; x < order.size(); ++x) {
    auto const& a = sites[order[x]];
    for (auto y = x + 1; y < order.size(); ++y) {
      auto const& b = sites[order[y]];
      if ((b.pos_.lat_ - a.pos_.lat_) * kMetersPerDegree >= radius_m) {
        break;
      }
      if (haversine_distance(a.pos_, b.pos_) < radius_m) {
        uf.unite(order[x], order[y]);
      }
    }
  }

  std::unordered_map<std::size_t, std::size_t> root_to_pool;
  std::vector<station_pool> pools;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    auto const [it, inserted] = root_to_pool.emplace(uf.find(i), pools.size());
    if (inserted) {
      pools.emplace_back();
    }
    pools[it->second].members_.push_back(sites[i].station_id_);
  }
  for (auto& p : pools) {
    std::sort(begin(p.members_), end(p.members_));
    p.pool_id_ = p.members_.front();
  }
  std::sort(begin(pools), end(pools),
            [](auto const& a, auto const& b) { return a.pool_id_ < b.pool_id_; });
  return pools;
}

// Distributes transactions to the pools containing their stations, keeping
// input order. Transactions of stations outside every pool are ignored.
inline std::vector<station_pool> attach_transactions(
    std::vector<station_pool> pools, std::vector<transaction> const& txs) {
  std::unordered_map<std::string, std::size_t> pool_of;
  for (std::size_t i = 0; i < pools.size(); ++i) {
    pools[i].transactions_.clear();
    for (auto const& m : pools[i].members_) {
      pool_of.emplace(m, i);
    }
  }
  for (auto const& tx : txs) {
    if (auto const it = pool_of.find(tx.station_id_); it != end(pool_of)) {
      pools[it->second].transactions_.push_back(tx);
    }
  }
  return pools;
}

// Keeps sessions strictly shorter than `limit_hours`.
inline std::vector<transaction> discard_long_sessions(
    std::vector<transaction> txs, double limit_hours = kDefaultMaxDurationHours) {
  if (!(limit_hours > 0.0)) {
    throw config_error{"maximum duration must be positive"};
  }
  auto const limit_s = limit_hours * 3600.0;
  std::erase_if(txs, [&](transaction const& tx) { return !(tx.duration_s_ < limit_s); });
  return txs;
}

// Keeps pools with at least `min_count` transactions.
inline std::vector<station_pool> filter_min_transactions(
    std::vector<station_pool> pools,
    std::size_t min_count = kDefaultMinTransactions) {
  if (min_count < 1) {
    throw config_error{"minimum transaction count must be at least 1"};
  }
  std::erase_if(pools, [&](station_pool const& p) {
    return p.transactions_.size() < min_count;
  });
  return pools;
}

struct preprocess_config {
  std::optional<period_filter> period_;
  double merge_radius_m_{kDefaultMergeRadiusM};
  std::size_t min_transactions_{kDefaultMinTransactions};
  double max_duration_hours_{kDefaultMaxDurationHours};
};

struct preprocess_result {
  std::vector<station_pool> pools_;       // surviving pools, sorted by id
  std::vector<station_pool> all_pools_;   // every pool before the count filter
  std::size_t in_period_{0};
  std::size_t long_discarded_{0};
};

// Period filter, pooling, long-session discard, then the minimum-count
// filter, so the count only sees usable transactions.
inline preprocess_result preprocess(std::vector<transaction> txs,
                                    preprocess_config const& cfg) {
  preprocess_result r;
  if (cfg.period_) {
    txs = filter_period(std::move(txs), *cfg.period_);
  }
  r.in_period_ = txs.size();
  auto pools = pool_stations(sites_from(txs), cfg.merge_radius_m_);
  auto const before = txs.size();
  txs = discard_long_sessions(std::move(txs), cfg.max_duration_hours_);
  r.long_discarded_ = before - txs.size();
  r.all_pools_ = attach_transactions(std::move(pools), txs);
  r.pools_ = filter_min_transactions(r.all_pools_, cfg.min_transactions_);
  return r;
}

}  // namespace evcharge
