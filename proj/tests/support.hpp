#pragma once

#include <algorithm>
#include <memory>
#include <set>
#include <vector>

#include "perfsim/perfsim.hpp"

namespace perfsim::fixtures {

inline Vertex v1(std::int64_t x) { return Vertex{x}; }
inline Vertex v2(std::int64_t x, std::int64_t y) { return Vertex{x, y}; }

inline std::int64_t uniform_int(CounterRng& rng, std::int64_t lo, std::int64_t hi) {
  return lo + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(hi - lo + 1));
}

inline Vertex random_vertex(CounterRng& rng, int d, std::int64_t radius) {
  Vertex u = Vertex::origin(d);
  for (int i = 0; i < d; ++i) u[i] = uniform_int(rng, -radius, radius);
  return u;
}

/// Random explicit interaction in d in {1, 2} with `n_at_center` hyperedges
/// through the origin (sizes 2 or 3) plus a few elsewhere; |J| <= 1.
inline std::shared_ptr<ExplicitFinite> random_explicit(CounterRng& rng, int d, std::size_t n_at_center,
                                                       bool pairwise = false, std::size_t n_other = 2) {
  const Vertex o = Vertex::origin(d);
  std::set<Hyperedge> seen;
  std::vector<Coupling> cs;
  auto add = [&](std::vector<Vertex> vs) {
    std::sort(vs.begin(), vs.end());
    if (std::adjacent_find(vs.begin(), vs.end()) != vs.end()) return false;
    Hyperedge b(vs);
    if (!seen.insert(b).second) return false;
    double j = 0.0;
    while (j == 0.0) j = 2.0 * rng.uniform() - 1.0;
    cs.push_back({b, j});
    return true;
  };
  const std::int64_t radius = d == 1 ? 4 : 2;
  std::size_t made = 0;
  while (made < n_at_center) {
    std::vector<Vertex> vs{o, random_vertex(rng, d, radius)};
    if (!pairwise && rng.uniform() < 0.4) vs.push_back(random_vertex(rng, d, radius));
    if (add(vs)) ++made;
  }
  made = 0;
  while (made < n_other) {
    std::vector<Vertex> vs{random_vertex(rng, d, radius), random_vertex(rng, d, radius)};
    if (std::find(vs.begin(), vs.end(), o) != vs.end()) continue;
    if (add(vs)) ++made;
  }
  return std::make_shared<ExplicitFinite>(d, std::move(cs));
}

/// Random valid finite sequence at the origin covering every hyperedge
/// through it, with a few extra vertices sprinkled in.
inline RegionSequence random_covering_sequence(CounterRng& rng, const Interaction& j, const Vertex& v) {
  std::vector<Vertex> pool;
  for (const auto& c : j.hyperedges_at(v))
    for (const auto& u : c.edge.vertices())
      if (u != v) pool.push_back(u);
  const std::size_t extra = static_cast<std::size_t>(uniform_int(rng, 0, 2));
  for (std::size_t i = 0; i < extra; ++i) pool.push_back(random_vertex(rng, v.dimension(), 3));
  Region uniq = make_region(pool);
  uniq.erase(std::remove(uniq.begin(), uniq.end(), v), uniq.end());
  std::vector<Vertex> order(uniq.begin(), uniq.end());
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)))]);
  std::vector<std::vector<Vertex>> incs;
  for (std::size_t i = 0; i < order.size();) {
    const std::size_t take = std::min<std::size_t>(order.size() - i, static_cast<std::size_t>(uniform_int(rng, 1, 3)));
    incs.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i), order.begin() + static_cast<std::ptrdiff_t>(i + take));
    i += take;
  }
  return RegionSequence::from_increments(v, std::move(incs), false);
}

inline void materialize_all(const RegionSequence& s) {
  for (std::size_t k = 0; s.materialize(k); ++k) {
  }
}

/// A random coarsening: keeps B(0), the last set and a random subset of the rest.
inline RegionSequence random_coarsening(CounterRng& rng, const RegionSequence& b) {
  materialize_all(b);
  const std::size_t n = *b.length();
  std::vector<Region> sets{b.region(0)};
  for (std::size_t k = 1; k + 1 < n; ++k)
    if (rng.uniform() < 0.5) sets.push_back(b.region(k));
  if (n > 1) sets.push_back(b.region(n - 1));
  return RegionSequence::from_sets(b.center(), sets);
}

}  // namespace perfsim::fixtures
