#pragma once

#include <cstdint>
#include <span>
#include <sstream>
#include <unordered_map>

#include "perfsim/error.hpp"
#include "perfsim/vertex.hpp"

namespace perfsim {

/// Partial assignment of ±1 spins. A vertex absent from the map is in the
/// cemetery state (unassigned), reported as 0 by `get`.
class SpinConfig {
 public:
  int get(const Vertex& v) const {
    auto it = spins_.find(v);
    return it == spins_.end() ? 0 : it->second;
  }

  int at(const Vertex& v) const {
    const int s = get(v);
    if (s == 0) {
      std::ostringstream os;
      os << "vertex " << v << " has no spin";
      throw error(errc::unassigned_spin, os.str());
    }
    return s;
  }

  bool assigned(const Vertex& v) const { return spins_.contains(v); }

  void set(const Vertex& v, int spin) {
    if (spin != 1 && spin != -1) throw error(errc::internal_invariant_violation, "spin must be +1 or -1");
    spins_[v] = static_cast<std::int8_t>(spin);
  }

  void flip(const Vertex& v) { spins_[v] = static_cast<std::int8_t>(-at(v)); }
  void clear(const Vertex& v) { spins_.erase(v); }

  std::size_t size() const { return spins_.size(); }
  auto begin() const { return spins_.begin(); }
  auto end() const { return spins_.end(); }

 private:
  std::unordered_map<Vertex, std::int8_t, VertexHash> spins_;
};

/// Product of the spins over `vertices`; throws if any is unassigned.
inline int chi(std::span<const Vertex> vertices, const SpinConfig& sigma) {
  int p = 1;
  for (const auto& v : vertices) p *= sigma.at(v);
  return p;
}

}  // namespace perfsim
