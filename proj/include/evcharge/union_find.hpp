#pragma once

#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

namespace evcharge {

class union_find {
public:
  explicit union_find(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(begin(parent_), end(parent_), std::size_t{0});
  }

  std::size_t find(std::size_t i) {
    auto root = i;
    while (parent_[root] != root) {
      root = parent_[root];
    }
    while (parent_[i] != root) {  // path compression
      i = std::exchange(parent_[i], root);
    }
    return root;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) {
      return false;
    }
    if (rank_[a] < rank_[b]) {
      std::swap(a, b);
    }
    parent_[b] = a;
    if (rank_[a] == rank_[b]) {
      ++rank_[a];
    }
    return true;
  }

  std::size_t size() const { return parent_.size(); }

private:
  std::vector<std::size_t> parent_;
  std::vector<unsigned> rank_;
};

}  // namespace evcharge
