#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "nlohmann/json.hpp"

#include "evcharge/dissim.hpp"
#include "evcharge/error.hpp"
#include "evcharge/matrix.hpp"
#include "evcharge/union_find.hpp"

namespace evcharge {

// Only complete linkage is validated; the other two use the same machinery.
enum class linkage { complete, single, average };

struct merge_step {
  std::size_t left_;   // smaller node id
  std::size_t right_;  // larger node id
  double height_;

  friend bool operator==(merge_step const&, merge_step const&) = default;
};

// Leaves are nodes 0..n-1; merge step s creates node n + s.
struct dendrogram {
  std::size_t n_{0};
  std::vector<merge_step> merges_;
};

// Agglomerative clustering. Each step merges the pair of current clusters
// with the smallest linkage distance; ties go to the pair with the smallest
// (lower node id, higher node id).
inline dendrogram agglomerate(distance_matrix const& d,
                              linkage method = linkage::complete) {
  auto const n = d.size();
  if (n < 2) {
    throw data_error{"need at least 2 observations to cluster"};
  }
  std::vector<double> dist(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      auto const v = d(a, b);
      if (!std::isfinite(v)) {
        throw data_error{"distance matrix contains non-finite entries"};
      }
      dist[a * n + b] = v;
    }
  }
  auto const at = [&](std::size_t a, std::size_t b) -> double& {
    return dist[a * n + b];
  };

  constexpr auto kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> node(n), members(n, 1), best(n, kNone);
  std::vector<bool> active(n, true);
  std::iota(begin(node), end(node), std::size_t{0});

  // Nearest active slot of `s`, ties to the smaller node id.
  auto const refresh = [&](std::size_t s) {
    best[s] = kNone;
    for (std::size_t t = 0; t < n; ++t) {
      if (t == s || !active[t]) {
        continue;
      }
      if (best[s] == kNone || at(s, t) < at(s, best[s]) ||
          (at(s, t) == at(s, best[s]) && node[t] < node[best[s]])) {
        best[s] = t;
      }
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    refresh(s);
  }

  dendrogram tree{n, {}};
  tree.merges_.reserve(n - 1);
  for (std::size_t step = 0; step + 1 < n; ++step) {
    auto pick = kNone;
    auto key = std::tuple{std::numeric_limits<double>::infinity(), kNone, kNone};
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s]) {
        continue;
      }
      auto const t = best[s];
      auto const cand = std::tuple{at(s, t), std::min(node[s], node[t]),
                                   std::max(node[s], node[t])};
      if (pick == kNone || cand < key) {
        pick = s;
        key = cand;
      }
    }
    auto sa = pick;
    auto sb = best[pick];
    if (node[sb] < node[sa]) {
      std::swap(sa, sb);
    }
    tree.merges_.push_back({node[sa], node[sb], std::get<0>(key)});

    // The merged cluster lives on in slot sa.
    for (std::size_t t = 0; t < n; ++t) {
      if (!active[t] || t == sa || t == sb) {
        continue;
      }
      double v = 0.0;
      switch (method) {
        case linkage::complete: v = std::max(at(sa, t), at(sb, t)); break;
        case linkage::single: v = std::min(at(sa, t), at(sb, t)); break;
        case linkage::average:
          v = (static_cast<double>(members[sa]) * at(sa, t) +
               static_cast<double>(members[sb]) * at(sb, t)) /
              static_cast<double>(members[sa] + members[sb]);
          break;
      }
      at(sa, t) = v;
      at(t, sa) = v;
    }
    active[sb] = false;
    members[sa] += members[sb];
    node[sa] = n + step;

    // The new node id is larger than every other, so it never wins a tie.
    for (std::size_t t = 0; t < n; ++t) {
      if (!active[t] || t == sa) {
        continue;
      }
      if (best[t] == sa || best[t] == sb) {
        refresh(t);
      } else if (at(t, sa) < at(t, best[t])) {
        best[t] = sa;
      }
    }
    refresh(sa);
  }
  return tree;
}

// Clusters numbered by decreasing size, then by smallest member leaf.
struct cluster_assignment {
  std::size_t k_{0};
  std::vector<std::size_t> labels_;

  std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s(k_, 0);
    for (auto const l : labels_) {
      ++s[l];
    }
    return s;
  }

  std::vector<std::size_t> members(std::size_t cluster) const {
    std::vector<std::size_t> m;
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == cluster) {
        m.push_back(i);
      }
    }
    return m;
  }
};

// Components left after undoing the last k - 1 merges.
inline cluster_assignment cut(dendrogram const& tree, std::size_t k) {
  auto const n = tree.n_;
  if (k < 1 || k > n) {
    throw config_error{"cluster count k must lie in [1, " + std::to_string(n) +
                       "]"};
  }
  union_find uf{n};
  std::vector<std::size_t> leaf_of(2 * n - 1);
  std::iota(begin(leaf_of), begin(leaf_of) + static_cast<std::ptrdiff_t>(n),
            std::size_t{0});
  for (std::size_t s = 0; s < n - k; ++s) {
    auto const& m = tree.merges_[s];
    uf.unite(leaf_of[m.left_], leaf_of[m.right_]);
    leaf_of[n + s] = leaf_of[m.left_];
  }

  // (size, smallest leaf, root) per component.
  std::vector<std::size_t> size(n, 0), first(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto const r = uf.find(i);
    ++size[r];
    first[r] = std::min(first[r], i);
  }
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i) {
    if (uf.find(i) == i) {
      roots.push_back(i);
    }
  }
  std::sort(begin(roots), end(roots), [&](auto a, auto b) {
    return std::tie(size[b], first[a]) < std::tie(size[a], first[b]);
  });
  std::vector<std::size_t> label_of_root(n, 0);
  for (std::size_t c = 0; c < roots.size(); ++c) {
    label_of_root[roots[c]] = c;
  }
  cluster_assignment out{k, std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    out.labels_[i] = label_of_root[uf.find(i)];
  }
  return out;
}

// Member with the smallest summed distance to the other members; ties go
// to the smallest leaf index.
inline std::size_t medoid(std::span<std::size_t const> members,
                          distance_matrix const& d) {
  if (members.empty()) {
    throw data_error{"medoid of an empty cluster"};
  }
  auto best = members.front();
  auto best_sum = std::numeric_limits<double>::infinity();
  for (auto const a : members) {
    double sum = 0.0;
    for (auto const b : members) {
      sum += d(a, b);
    }
    if (sum < best_sum || (sum == best_sum && a < best)) {
      best = a;
      best_sum = sum;
    }
  }
  return best;
}

inline charging_matrix cluster_representative_mean(
    std::span<charging_matrix const> members) {
  return aggregate_mean(members);
}

struct sweep_row {
  dissim_params params_;
  std::vector<std::size_t> sizes_;  // descending
};

struct sweep_result {
  std::vector<sweep_row> rows_;
};

inline sweep_result sweep(std::span<labeled_matrix const> matrices,
                          std::span<dissim_params const> params, std::size_t k) {
  if (params.empty()) {
    throw config_error{"sweep needs at least one parameter setting"};
  }
  sweep_result r;
  for (auto const& p : params) {
    auto const tree = agglomerate(make_distance_matrix(matrices, p));
    r.rows_.push_back({p, cut(tree, k).sizes()});
  }
  return r;
}

struct balance {
  double entropy_;  // normalized to [0, 1]; 1 for a single cluster
  double ratio_;    // largest / smallest
};

inline balance balance_metrics(std::span<std::size_t const> sizes) {
  if (sizes.empty()) {
    throw data_error{"balance of an empty size list"};
  }
  double n = 0.0;
  for (auto const s : sizes) {
    if (s < 1) {
      throw data_error{"cluster sizes must be at least 1"};
    }
    n += static_cast<double>(s);
  }
  auto const [lo, hi] = std::minmax_element(begin(sizes), end(sizes));
  auto const ratio = static_cast<double>(*hi) / static_cast<double>(*lo);
  if (sizes.size() == 1) {
    return {1.0, ratio};
  }
  double h = 0.0;
  for (auto const s : sizes) {
    auto const q = static_cast<double>(s) / n;
    h -= q * std::log(q);
  }
  return {h / std::log(static_cast<double>(sizes.size())), ratio};
}

inline nlohmann::json to_json(dendrogram const& t) {
  auto merges = nlohmann::json::array();
  for (auto const& m : t.merges_) {
    merges.push_back({{"left", m.left_}, {"right", m.right_}, {"height", m.height_}});
  }
  return merges;
}

inline void write_assignment(std::ostream& out,
                             std::vector<std::string> const& labels,
                             cluster_assignment const& a) {
  out << "pool_id,cluster\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << csv::escape(labels[i]) << ',' << a.labels_[i] << '\n';
  }
}

inline void write_sweep(std::ostream& out, sweep_result const& r, std::size_t k) {
  out << "o,p";
  for (std::size_t i = 1; i <= k; ++i) {
    out << ",size_" << i;
  }
  out << ",entropy,ratio\n";
  for (auto const& row : r.rows_) {
    auto const b = balance_metrics(row.sizes_);
    out << format_double(row.params_.o()) << ',' << format_double(row.params_.p());
    for (auto const s : row.sizes_) {
      out << ',' << s;
    }
    out << ',' << format_double(b.entropy_) << ',' << format_double(b.ratio_)
        << '\n';
  }
}

}  // namespace evcharge
