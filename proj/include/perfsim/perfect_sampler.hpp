#pragma once

#include <cstdint>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/lambda_distribution.hpp"
#include "perfsim/rng.hpp"
#include "perfsim/sequence_optimizer.hpp"
#include "perfsim/set_chain.hpp"
#include "perfsim/spin_config.hpp"

namespace perfsim {

/// One step of the backward sketch. For k = 0 both regions are empty; for
/// k >= 1, inner = B_v(k-1) and outer = B_v(k).
struct EventRecord {
  Vertex vertex;
  std::size_t k = 0;
  Region inner;
  Region outer;
};

struct BackwardTrace {
  std::vector<EventRecord> events;
  Region initial_window;
  std::size_t max_set_size = 0;
  std::size_t visited = 0;

  std::size_t n_stop() const noexcept { return events.size(); }
};

/// Per-vertex laws and regions for the sampler. In `translated` mode one
/// distribution is built per translation class and shifted to each vertex;
/// in `direct` mode every vertex gets its own, computed from scratch.
class SamplerRules {
 public:
  enum class Mode { translated, direct };

  SamplerRules(InteractionPtr j, SequenceSpec spec, Mode mode = Mode::translated)
      : j_(std::move(j)), spec_(std::move(spec)), mode_(mode) {
    if (!j_) throw error(errc::invalid_model, "null interaction");
    for (const auto& v : j_->exceptional_vertices()) exceptional_.insert(v);
    far_ = j_->far_field_representative();
  }

  const InteractionPtr& interaction() const noexcept { return j_; }
  const SequenceSpec& spec() const noexcept { return spec_; }

  double mass(const Vertex& w) { return lookup(w).entry->dist->mass(); }

  std::size_t draw(const Vertex& w, double u) { return lookup(w).entry->dist->sample_k(u); }

  /// Calls add(u) for each vertex of B_w(k) \ {w}, in increment order.
  template <class F>
  void region(const Vertex& w, std::size_t k, F&& add) {
    Entry* e = lookup(w).entry;
    extend(*e, k);
    for (std::size_t i = 0; i < e->ends[k]; ++i) add(w + e->order[i]);
  }

  Region region_set(const Vertex& w, std::size_t k) {
    std::vector<Vertex> out{w};
    region(w, k, [&](const Vertex& u) { out.push_back(u); });
    return make_region(std::move(out));
  }

  double update_prob(const Vertex& w, std::size_t k, const SpinConfig& sigma) {
    auto [e, offset] = lookup(w);
    return e->dist->update_prob(k, sigma, offset);
  }

  const LambdaDistribution& distribution(const Vertex& w) { return *lookup(w).entry->dist; }

 private:
  struct Entry {
    std::unique_ptr<LambdaDistribution> dist;
    Vertex center;
    std::vector<Vertex> order;          // B(k) \ {center}, relative to center
    std::vector<std::size_t> ends{0};   // ends[k] = |B(k)| - 1
  };

  struct Found {
    Entry* entry;
    Vertex offset;
  };

  Found lookup(const Vertex& w) {
    const Vertex rep = (mode_ == Mode::direct || exceptional_.contains(w)) ? w : far_;
    auto it = entries_.find(rep);
    if (it == entries_.end()) {
      Entry e;
      e.center = rep;
      e.dist = std::make_unique<LambdaDistribution>(j_, make_sequence(spec_, *j_, rep));
      it = entries_.emplace(rep, std::move(e)).first;
    }
    return {&it->second, w - rep};
  }

  void extend(Entry& e, std::size_t k) {
    const auto& seq = e.dist->sequence();
    while (e.ends.size() <= k) {
      const std::size_t step = e.ends.size();
      if (!seq.materialize(step)) throw error(errc::internal_invariant_violation, "drawn step beyond the sequence");
      for (const auto& u : seq.increment(step)) e.order.push_back(u - e.center);
      e.ends.push_back(e.order.size());
    }
  }

  InteractionPtr j_;
  SequenceSpec spec_;
  Mode mode_;
  VertexSet exceptional_;
  Vertex far_;
  std::unordered_map<Vertex, Entry, VertexHash> entries_;
};

/// Algorithm 1: runs the set chain from `window` until it is empty.
inline BackwardTrace backward_sketch(const Region& window, SamplerRules& rules, CounterRng& rng,
                                     std::size_t max_steps = 10'000'000) {
  if (window.empty()) throw error(errc::empty_window, "window must contain at least one vertex");
  if (max_steps < 1) throw error(errc::config_error, "max_steps must be at least 1");
  BackwardTrace trace;
  trace.initial_window = make_region(window);
  auto stats = run_set_chain(trace.initial_window, rules, rng, max_steps, [&](const Vertex& w, std::size_t k) {
    EventRecord e{w, k, {}, {}};
    if (k >= 1) {
      e.inner = rules.region_set(w, k - 1);
      e.outer = rules.region_set(w, k);
    }
    trace.events.push_back(std::move(e));
  });
  if (!stats.extinct) {
    std::ostringstream os;
    os << "backward sketch did not finish within " << max_steps << " steps";
    throw error(errc::step_limit_exceeded, os.str());
  }
  trace.max_set_size = stats.max_set_size;
  trace.visited = stats.visited;
  return trace;
}

/// Replays the set chain from the events; true iff every event is applied to
/// a member and the final set is empty.
inline bool replay(const BackwardTrace& trace) {
  VertexSet c(trace.initial_window.begin(), trace.initial_window.end());
  for (const auto& e : trace.events) {
    if (!c.contains(e.vertex)) return false;
    if (e.k == 0) {
      c.erase(e.vertex);
    } else {
      if (!region_contains(e.outer, e.vertex) || !region_subset(e.inner, e.outer)) return false;
      c.insert(e.outer.begin(), e.outer.end());
    }
  }
  return c.empty();
}

/// Algorithm 2: walks the trace backwards assigning spins.
inline SpinConfig forward_spin(const BackwardTrace& trace, SamplerRules& rules, CounterRng& rng) {
  SpinConfig sigma;
  for (auto it = trace.events.rbegin(); it != trace.events.rend(); ++it) {
    const auto& e = *it;
    if (e.k == 0) {
      sigma.set(e.vertex, rng.uniform() < 0.5 ? 1 : -1);
      continue;
    }
    for (const auto& u : e.outer) {
      if (!sigma.assigned(u)) {
        std::ostringstream os;
        os << "event at " << e.vertex << " with k=" << e.k << " reads unassigned vertex " << u;
        throw error(errc::internal_invariant_violation, os.str());
      }
    }
    const double p = rules.update_prob(e.vertex, e.k, sigma);
    if (rng.uniform() < p) sigma.flip(e.vertex);
  }
  return sigma;
}

struct SampleResult {
  SpinConfig spins;  // restricted to the window
  std::size_t n_stop = 0;
  std::size_t max_set_size = 0;
  std::size_t visited = 0;
};

/// Backward sketch followed by forward spin, both drawing from `rng`.
inline SampleResult perfect_sample(const Region& window, SamplerRules& rules, CounterRng& rng,
                                   std::size_t max_steps = 10'000'000) {
  auto trace = backward_sketch(window, rules, rng, max_steps);
#ifndef NDEBUG
  if (!replay(trace)) throw error(errc::internal_invariant_violation, "trace does not replay to the empty set");
#endif
  auto all = forward_spin(trace, rules, rng);
  SampleResult out;
  for (const auto& v : trace.initial_window) out.spins.set(v, all.at(v));
  out.n_stop = trace.n_stop();
  out.max_set_size = trace.max_set_size;
  out.visited = trace.visited;
  return out;
}

}  // namespace perfsim
