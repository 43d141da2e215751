#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/vertex.hpp"

namespace perfsim {

/// Dynamic set of vertices with positive weights supporting weighted
/// selection in O(log n). Elements live in a compact array (swap-remove) and
/// a Fenwick tree holds prefix sums over array slots. The tree is rebuilt
/// from scratch periodically so rounding does not accumulate.
class WeightedSet {
 public:
  static constexpr std::uint64_t rebuild_period = 1u << 16;

  bool contains(const Vertex& v) const { return index_.contains(v); }
  std::size_t size() const noexcept { return items_.size(); }
  bool empty() const noexcept { return items_.empty(); }
  const std::vector<Vertex>& items() const noexcept { return items_; }

  /// Inserts v with weight w; false if already present.
  bool insert(const Vertex& v, double w) {
    if (index_.contains(v)) return false;
    if (!(w > 0.0)) throw error(errc::internal_invariant_violation, "weights must be positive");
    index_.emplace(v, items_.size());
    items_.push_back(v);
    weights_.push_back(w);
    if (items_.size() > tree_.size()) {
      rebuild(std::max<std::size_t>(16, 2 * tree_.size()));
    } else {
      add(items_.size() - 1, w);
    }
    tick();
    return true;
  }

  bool erase(const Vertex& v) {
    auto it = index_.find(v);
    if (it == index_.end()) return false;
    const std::size_t i = it->second;
    const std::size_t last = items_.size() - 1;
    add(i, -weights_[i]);
    if (i != last) {
      add(last, -weights_[last]);
      items_[i] = items_[last];
      weights_[i] = weights_[last];
      index_[items_[i]] = i;
      add(i, weights_[i]);
    }
    items_.pop_back();
    weights_.pop_back();
    index_.erase(it);
    tick();
    return true;
  }

  double total() const {
    double s = 0.0;
    for (std::size_t i = items_.size(); i > 0; i -= i & (~i + 1)) s += tree_[i - 1];
    return s;
  }

  /// Element selected with probability weight / total, driven by u in [0, 1).
  const Vertex& select(double u) const {
    if (items_.empty()) throw error(errc::internal_invariant_violation, "selection from an empty set");
    double target = u * total();
    std::size_t pos = 0;
    std::size_t step = 1;
    while (step * 2 <= tree_.size()) step *= 2;
    for (; step > 0; step /= 2) {
      if (pos + step <= tree_.size() && tree_[pos + step - 1] <= target) {
        pos += step;
        target -= tree_[pos - 1];
      }
    }
    // Rounding may push the search past the live range.
    return items_[std::min(pos, items_.size() - 1)];
  }

 private:
  void add(std::size_t i, double w) {
    for (std::size_t k = i + 1; k <= tree_.size(); k += k & (~k + 1)) tree_[k - 1] += w;
  }

  void rebuild(std::size_t capacity) {
    tree_.assign(capacity, 0.0);
    for (std::size_t i = 0; i < weights_.size(); ++i) tree_[i] = weights_[i];
    for (std::size_t k = 1; k <= capacity; ++k) {
      const std::size_t parent = k + (k & (~k + 1));
      if (parent <= capacity) tree_[parent - 1] += tree_[k - 1];
    }
  }

  void tick() {
    if (++ops_ % rebuild_period == 0) rebuild(tree_.size());
  }

  std::vector<Vertex> items_;
  std::vector<double> weights_;
  std::vector<double> tree_;
  std::unordered_map<Vertex, std::size_t, VertexHash> index_;
  std::uint64_t ops_ = 0;
};

}  // namespace perfsim
