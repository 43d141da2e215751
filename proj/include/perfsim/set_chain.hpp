#pragma once

#include <algorithm>
#include <cstddef>
#include <sstream>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/rng.hpp"
#include "perfsim/vertex.hpp"
#include "perfsim/weighted_set.hpp"

namespace perfsim {

struct ChainStats {
  std::size_t steps = 0;
  std::size_t max_set_size = 0;
  std::size_t visited = 0;
  bool extinct = false;
};

/// The set-valued chain shared by the backward sketch and the extinction
/// processes. Each step picks w in C with probability mass(w) / total mass
/// (first uniform), draws k from w's law (second uniform), then removes w
/// when k = 0 or adds w's k-th region otherwise.
///
/// `Rules` provides
///   double mass(const Vertex&)
///   std::size_t draw(const Vertex&, double u)
///   template <class F> void region(const Vertex&, std::size_t k, F&& add)
/// where `region` calls add(u) for every vertex of the k-th region in a
/// fixed order. `on_event(w, k)` observes each step before it is applied.
template <class Rules, class OnEvent>
ChainStats run_set_chain(const std::vector<Vertex>& initial, Rules& rules, CounterRng& rng, std::size_t max_steps,
                         OnEvent&& on_event, VertexSet* visited_out = nullptr) {
  ChainStats stats;
  WeightedSet c;
  VertexSet visited;
  for (const auto& v : initial) {
    if (c.insert(v, rules.mass(v))) visited.insert(v);
  }
  stats.max_set_size = c.size();
  while (!c.empty()) {
    if (stats.steps >= max_steps) break;
    const Vertex w = c.select(rng.uniform());
    const std::size_t k = rules.draw(w, rng.uniform());
    on_event(w, k);
    if (k == 0) {
      c.erase(w);
    } else {
      rules.region(w, k, [&](const Vertex& u) {
        if (c.insert(u, rules.mass(u))) visited.insert(u);
      });
    }
    ++stats.steps;
    stats.max_set_size = std::max(stats.max_set_size, c.size());
  }
  stats.extinct = c.empty();
  stats.visited = visited.size();
  if (visited_out) *visited_out = std::move(visited);
  return stats;
}

}  // namespace perfsim
