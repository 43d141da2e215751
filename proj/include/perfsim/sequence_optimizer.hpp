#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/interval.hpp"
#include "perfsim/lambda_distribution.hpp"
#include "perfsim/region_sequence.hpp"

namespace perfsim {

/// Increments B(1) \ B(0), B(2) \ B(1), ... each sorted.
using SequenceDescriptor = std::vector<std::vector<Vertex>>;

enum class SequencePolicy { ising_optimal, l1_balls, explicit_offsets };

/// How to build the sequence at each vertex. Explicit increments are offsets
/// from the center and are continued with L1 shells.
struct SequenceSpec {
  SequencePolicy policy = SequencePolicy::ising_optimal;
  std::vector<std::vector<Vertex>> offsets;
};

inline std::string to_string(SequencePolicy p) {
  switch (p) {
    case SequencePolicy::ising_optimal: return "ising_optimal";
    case SequencePolicy::l1_balls: return "l1_balls";
    case SequencePolicy::explicit_offsets: return "explicit";
  }
  return "unknown";
}

namespace detail {

// Slack certifying the position of each vertex in a strength-ordered
// sequence relative to L1 balls; nullopt if the family gives no certificate.
inline std::optional<double> ising_growth_slack(const Interaction& j, const Vertex& v) {
  if (j.support_size(v)) return 0.0;
  if (dynamic_cast<const PairGeometric*>(&j)) return 0.0;
  if (auto m = dynamic_cast<const Modified*>(&j)) {
    auto base = ising_growth_slack(*m->base(), v);
    if (!base) return base;
    return *base + static_cast<double>(m->overrides_at(v));
  }
  return std::nullopt;
}

/// Steps of `base` after `skip`, reported as increments.
class TailSource final : public IncrementSource {
 public:
  TailSource(RegionSequence base, std::size_t skip) : base_(std::move(base)), next_(skip + 1) {}
  std::optional<std::vector<Vertex>> next(const VertexSet&) override {
    if (!base_.materialize(next_)) return std::nullopt;
    return base_.increment(next_++);
  }

 private:
  RegionSequence base_;
  std::size_t next_;
};

}  // namespace detail

/// z_v: single-vertex increments w_1, w_2, ... with |J_{v,w_i}| non-increasing;
/// ties go to the nearer vertex, then the lexicographically smaller one.
inline RegionSequence ising_optimal_sequence(const Vertex& v, const Interaction& j) {
  if (!j.is_pairwise()) throw error(errc::not_pairwise, "sorted-coupling sequence needs a pair interaction");
  return RegionSequence::from_source(v, std::make_unique<detail::PartnerSource>(j.partners(v)),
                                     detail::ising_growth_slack(j, v), "ising_optimal");
}

inline RegionSequence make_sequence(const SequenceSpec& spec, const Interaction& j, const Vertex& v) {
  switch (spec.policy) {
    case SequencePolicy::ising_optimal: return ising_optimal_sequence(v, j);
    case SequencePolicy::l1_balls: return RegionSequence::l1_balls(v);
    case SequencePolicy::explicit_offsets: {
      std::vector<std::vector<Vertex>> incs;
      for (const auto& inc : spec.offsets) {
        std::vector<Vertex> abs;
        for (const auto& r : inc) abs.push_back(v + r);
        incs.push_back(std::move(abs));
      }
      return RegionSequence::from_increments(v, std::move(incs), true);
    }
  }
  throw error(errc::config_error, "unknown sequence policy");
}

/// mu for the sorted-coupling sequence of a pair interaction:
///   -2 e^{-2 S_1} + e^{-S_2} + sum_{l>=2} l (e^{-S_{l+1}} - e^{-S_l}),
/// S_l the sum of the sorted magnitudes from the l-th on.
inline Interval mu_ising_closed_form(const Vertex& v, const Interaction& j, double tolerance,
                                     std::size_t max_terms = 5'000'000) {
  if (!j.is_pairwise()) throw error(errc::not_pairwise, "closed form needs a pair interaction");
  if (!(tolerance > 0.0)) throw error(errc::config_error, "tolerance must be positive");
  const double s1 = j.total_strength(v);
  auto stream = j.partners(v);
  const bool finite = j.support_size(v).has_value();

  std::vector<double> mags;
  if (finite) {
    while (auto p = stream->next()) mags.push_back(p->strength);
    // Suffix sums S_l, l = 1..n+1, summed from the small end.
    std::vector<double> s(mags.size() + 2, 0.0);
    for (std::size_t l = mags.size(); l >= 1; --l) s[l] = s[l + 1] + mags[l - 1];
    s[1] = s1;
    double mu = -2.0 * std::exp(-2.0 * s[1]) + std::exp(-s[std::min<std::size_t>(2, mags.size() + 1)]);
    for (std::size_t l = 2; l <= mags.size(); ++l)
      mu += static_cast<double>(l) * (std::exp(-s[l + 1]) - std::exp(-s[l]));
    return Interval::point(mu);
  }

  const auto slack = detail::ising_growth_slack(j, v);
  if (!slack) throw error(errc::tail_not_boundable, "no growth certificate for this family");
  // Running S_l = total - sum of the first l-1 magnitudes.
  VertexSet seen{v};
  std::int64_t covered = 0;
  std::vector<Vertex> shell;
  std::size_t shell_pos = 0;
  double prefix = 0.0;
  double s_prev = s1;  // S_1
  auto p = stream->next();
  prefix += p->strength;
  seen.insert(p->vertex);
  double s_cur = std::max(0.0, s1 - prefix);  // S_2
  double mu = -2.0 * std::exp(-2.0 * s1) + std::exp(-s_cur);
  for (std::size_t l = 2; l <= max_terms; ++l) {
    s_prev = s_cur;
    p = stream->next();
    prefix += p->strength;
    seen.insert(p->vertex);
    s_cur = std::max(0.0, s1 - prefix);
    mu += static_cast<double>(l) * (std::exp(-s_cur) - std::exp(-s_prev));
    for (;;) {
      if (shell.empty()) shell = l1_sphere(v, covered + 1);
      while (shell_pos < shell.size() && seen.contains(shell[shell_pos])) ++shell_pos;
      if (shell_pos < shell.size()) break;
      ++covered;
      shell.clear();
      shell_pos = 0;
    }
    // Remaining terms are at most sum_{l'>l} l' J^{(l')}.
    if (auto b = j.tail_moment_bound(v, covered + 1, *slack); b && *b <= tolerance) return Interval{mu, mu + *b};
  }
  throw error(errc::tail_not_boundable, "tail bound did not reach the requested tolerance");
}

struct OptimizationResult {
  Interval best_mu;
  std::vector<SequenceDescriptor> argmin;
  std::vector<RegionSequence> argmin_sequences;
  std::size_t candidates_evaluated = 0;
};

/// Exhaustive search over E_v: running unions of the hyperedges through v in
/// every order, with non-growing steps dropped and duplicates merged.
inline OptimizationResult brute_force_min(const Vertex& v, const InteractionPtr& j, std::size_t cap = 8) {
  const auto n = j->support_size(v);
  if (!n) throw error(errc::infinite_support, "exhaustive search needs finitely many hyperedges");
  if (*n > cap) {
    std::ostringstream os;
    os << *n << " hyperedges at the vertex exceed the cap of " << cap;
    throw error(errc::too_many_hyperedges, os.str());
  }
  const auto edges = j->hyperedges_at(v);
  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  std::set<SequenceDescriptor> distinct;
  do {
    SequenceDescriptor d;
    VertexSet have{v};
    for (auto i : order) {
      std::vector<Vertex> inc;
      for (const auto& u : edges[i].edge.vertices())
        if (have.insert(u).second) inc.push_back(u);
      if (inc.empty()) continue;
      std::sort(inc.begin(), inc.end());
      d.push_back(std::move(inc));
    }
    distinct.insert(std::move(d));
  } while (std::next_permutation(order.begin(), order.end()));

  OptimizationResult out;
  out.candidates_evaluated = distinct.size();
  std::vector<std::pair<double, const SequenceDescriptor*>> scored;
  for (const auto& d : distinct) {
    LambdaDistribution dist(j, RegionSequence::from_increments(v, d, false));
    scored.emplace_back(dist.birth_death_mu(1.0).lo, &d);
  }
  double best = scored.front().first;
  for (const auto& [mu, _] : scored) best = std::min(best, mu);
  out.best_mu = Interval::point(best);
  for (const auto& [mu, d] : scored) {
    if (mu <= best + 1e-12) {
      out.argmin.push_back(*d);
      out.argmin_sequences.push_back(RegionSequence::from_increments(v, *d, false));
    }
  }
  return out;
}

/// Refines the first N steps of `base` into single-vertex steps, trying every
/// order of B(N) \ {v}; later steps are kept. Uses
///   mu(x) = mu(base) - sum_{l<=N} |B(l)| lambda_B(l) + sum_{l<=L} |x(l)| lambda_x(l).
inline OptimizationResult upsilon_refine(const RegionSequence& base, std::size_t n, const InteractionPtr& j,
                                         std::size_t cap = 8, double tolerance = 1e-10) {
  const auto& v = base.center();
  if (!base.materialize(n)) throw error(errc::invalid_sequence, "base sequence is shorter than N");
  const Region block_region = base.region(n);
  std::vector<Vertex> block;
  for (const auto& u : block_region)
    if (u != v) block.push_back(u);
  if (block.size() > cap) {
    std::ostringstream os;
    os << "block of " << block.size() << " vertices exceeds the cap of " << cap;
    throw error(errc::block_too_large, os.str());
  }
  LambdaDistribution base_dist(j, base);
  const Interval base_mu = base_dist.birth_death_mu(tolerance);
  double base_prefix = 0.0;
  for (std::size_t l = 1; l <= n; ++l) base_prefix += static_cast<double>(base_dist.region_size(l)) * base_dist.pmf(l);

  std::optional<double> slack;
  if (auto s = base.growth_slack()) slack = std::max(*s, static_cast<double>(block_region.size()));

  auto build = [&](const std::vector<Vertex>& order) {
    std::vector<std::vector<Vertex>> incs;
    for (const auto& u : order) incs.push_back({u});
    auto src = std::make_unique<detail::ListSource>(std::move(incs), std::make_unique<detail::TailSource>(base, n));
    return RegionSequence::from_source(v, std::move(src), slack, "upsilon");
  };

  OptimizationResult out;
  std::vector<std::pair<double, std::vector<Vertex>>> scored;
  std::sort(block.begin(), block.end());
  do {
    LambdaDistribution x(j, build(block));
    double prefix = 0.0;
    for (std::size_t l = 1; l <= block.size(); ++l) prefix += static_cast<double>(l + 1) * x.pmf(l);
    scored.emplace_back(prefix - base_prefix, block);
    ++out.candidates_evaluated;
  } while (std::next_permutation(block.begin(), block.end()));

  double best = scored.front().first;
  for (const auto& [d, _] : scored) best = std::min(best, d);
  out.best_mu = base_mu + best;
  for (const auto& [d, order] : scored) {
    if (d <= best + 1e-12) {
      SequenceDescriptor desc;
      for (const auto& u : order) desc.push_back({u});
      out.argmin.push_back(std::move(desc));
      out.argmin_sequences.push_back(build(order));
    }
  }
  return out;
}

struct ConditionReport {
  std::string condition;
  bool holds = false;
  Interval witness;
  std::string evaluation_vertex_class;
  std::vector<std::pair<Vertex, Interval>> per_vertex;
};

/// (H1): sup over vertices of sum_k |B*_v(k)| lambda_v(k) < 1 with L1 balls.
/// Evaluated at every exceptional vertex and one far-field vertex.
inline ConditionReport check_H1(const InteractionPtr& j, double tolerance = 1e-9) {
  ConditionReport r;
  r.condition = "H1";
  auto vertices = j->exceptional_vertices();
  vertices.push_back(j->far_field_representative());
  r.witness = Interval{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& v : vertices) {
    LambdaDistribution dist(j, RegionSequence::l1_balls(v));
    const Interval value = dist.birth_death_mu(tolerance) + 1.0;
    r.per_vertex.emplace_back(v, value);
    r.witness.lo = std::max(r.witness.lo, value.lo);
    r.witness.hi = std::max(r.witness.hi, value.hi);
  }
  r.holds = r.witness.hi < 1.0;
  std::ostringstream os;
  os << vertices.size() - 1 << " exceptional vertices plus far field at " << vertices.back();
  r.evaluation_vertex_class = os.str();
  return r;
}

/// (H2): mu < 0 in the far field, evaluated at a vertex outside every
/// modification with the chosen sequence policy. The witness is mu + 1.
inline ConditionReport check_H2(const InteractionPtr& j, const SequenceSpec& spec, double tolerance = 1e-9) {
  ConditionReport r;
  r.condition = "H2";
  const Vertex v = j->far_field_representative();
  LambdaDistribution dist(j, make_sequence(spec, *j, v));
  const Interval mu = dist.birth_death_mu(tolerance);
  r.witness = mu + 1.0;
  r.per_vertex.emplace_back(v, mu);
  r.holds = mu.hi < 0.0;
  std::ostringstream os;
  os << "far field at " << v << " with " << to_string(spec.policy) << " sequences";
  r.evaluation_vertex_class = os.str();
  return r;
}

}  // namespace perfsim
