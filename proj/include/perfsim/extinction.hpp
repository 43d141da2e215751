#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/lambda_distribution.hpp"
#include "perfsim/perfect_sampler.hpp"
#include "perfsim/rng.hpp"
#include "perfsim/set_chain.hpp"
#include "perfsim/vertex.hpp"

namespace perfsim {

/// psi_v, S_v and M_v for one class of vertices. `regions[l-1]` lists the
/// offsets of S_v(l) from v in the order they are added.
struct VertexLaw {
  std::vector<double> cdf;
  std::vector<std::vector<Vertex>> regions;
  double mass = 1.0;

  static VertexLaw from_pmf(const std::vector<double>& pmf, std::vector<std::vector<Vertex>> regions, double mass) {
    VertexLaw law;
    double acc = 0.0;
    for (double p : pmf) {
      if (!(p >= 0.0)) throw error(errc::config_error, "psi values must be non-negative");
      acc += p;
      law.cdf.push_back(acc);
    }
    if (!law.cdf.empty() && std::abs(law.cdf.back() - 1.0) <= 1e-12) law.cdf.back() = 1.0;
    law.regions = std::move(regions);
    law.mass = mass;
    law.validate();
    return law;
  }

  void validate() const {
    if (cdf.empty()) throw error(errc::config_error, "psi must have at least one value");
    if (!(cdf.front() > 0.0)) throw error(errc::config_error, "psi(0) must be positive");
    for (std::size_t i = 1; i < cdf.size(); ++i)
      if (cdf[i] < cdf[i - 1]) throw error(errc::config_error, "psi cumulative values must be non-decreasing");
    if (std::abs(cdf.back() - 1.0) > 1e-12) throw error(errc::config_error, "psi must sum to 1");
    if (regions.size() + 1 != cdf.size()) throw error(errc::config_error, "need one region per positive psi index");
    if (!(mass >= 1.0)) throw error(errc::config_error, "masses must be at least 1");
  }

  double pmf(std::size_t k) const {
    if (k >= cdf.size()) return 0.0;
    return k == 0 ? cdf[0] : cdf[k] - cdf[k - 1];
  }

  std::size_t draw(double u) const {
    auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
    return it == cdf.end() ? cdf.size() - 1 : static_cast<std::size_t>(it - cdf.begin());
  }

  /// eta = -psi(0) + sum_{l>=1} |S(l)| psi(l).
  double eta() const {
    double e = -pmf(0);
    for (std::size_t l = 1; l < cdf.size(); ++l) e += static_cast<double>(make_region(regions[l - 1]).size()) * pmf(l);
    return e;
  }
};

/// A generalized birth-death process: a default law for every vertex plus
/// finitely many exceptional vertices assigned to named classes.
struct ExtinctionSpec {
  int dimension = 1;
  VertexLaw default_law;
  std::map<std::string, VertexLaw> classes;
  std::map<Vertex, std::string> exceptional;
  Region initial_set;

  const VertexLaw& law(const Vertex& v) const {
    if (auto it = exceptional.find(v); it != exceptional.end()) return classes.at(it->second);
    return default_law;
  }

  void validate() const {
    default_law.validate();
    for (const auto& [name, l] : classes) l.validate();
    for (const auto& [v, name] : exceptional) {
      if (!classes.contains(name)) throw error(errc::config_error, "unknown vertex class '" + name + "'");
      if (v.dimension() != dimension) throw error(errc::config_error, "exceptional vertex has the wrong dimension");
    }
  }
};

inline double eta(const ExtinctionSpec& spec, const Vertex& v) { return spec.law(v).eta(); }

namespace detail {

struct SpecRules {
  const ExtinctionSpec& spec;
  double mass(const Vertex& v) const { return spec.law(v).mass; }
  std::size_t draw(const Vertex& v, double u) const { return spec.law(v).draw(u); }
  template <class F>
  void region(const Vertex& v, std::size_t k, F&& add) const {
    for (const auto& r : spec.law(v).regions[k - 1]) add(v + r);
  }
};

}  // namespace detail

struct ExtinctionOutcome {
  bool extinct = false;
  std::size_t time = 0;  // steps taken; the cap when the process survived
  std::size_t max_set_size = 0;
};

/// Runs the D_n chain until it is empty or `max_steps` steps were taken.
/// `on_event(v, k)` sees every step.
template <class OnEvent>
ExtinctionOutcome simulate(const ExtinctionSpec& spec, CounterRng& rng, std::size_t max_steps, OnEvent&& on_event) {
  detail::SpecRules rules{spec};
  auto stats = run_set_chain(spec.initial_set, rules, rng, max_steps, std::forward<OnEvent>(on_event));
  return {stats.extinct, stats.steps, stats.max_set_size};
}

inline ExtinctionOutcome simulate(const ExtinctionSpec& spec, CounterRng& rng, std::size_t max_steps) {
  return simulate(spec, rng, max_steps, [](const Vertex&, std::size_t) {});
}

/// psi_v = lambda_v, S_v(l) = B_v(l) \ {v}, M_v = mass(v), with the same
/// per-class structure the sampler uses. Requires finitely many hyperedges
/// at every vertex so each psi has finite support.
inline ExtinctionSpec spec_from_lambda(const InteractionPtr& j, const SequenceSpec& seq, const Region& initial) {
  auto law_at = [&](const Vertex& v) {
    if (!j->support_size(v)) throw error(errc::infinite_support, "psi must have finite support");
    LambdaDistribution dist(j, make_sequence(seq, *j, v));
    VertexLaw law;
    law.mass = dist.mass();
    std::vector<Vertex> acc;
    for (std::size_t k = 0;; ++k) {
      law.cdf.push_back(dist.cdf(k));
      if (law.cdf.back() >= 1.0) break;
      const auto inc = dist.sequence().increment(k + 1);
      for (const auto& u : inc) acc.push_back(u - v);
      law.regions.push_back(acc);
    }
    return law;
  };
  ExtinctionSpec spec;
  spec.dimension = j->dimension();
  spec.default_law = law_at(j->far_field_representative());
  for (const auto& v : j->exceptional_vertices()) {
    std::ostringstream name;
    name << v;
    spec.classes.emplace(name.str(), law_at(v));
    spec.exceptional.emplace(v, name.str());
  }
  spec.initial_set = make_region(initial);
  spec.validate();
  return spec;
}

struct GaltonWatsonRun {
  std::vector<std::uint64_t> population;  // Z_0, Z_1, ...
  bool extinct = false;
  std::size_t extinction_generation = 0;
};

/// Classical Galton-Watson process with one ancestor. A run is declared a
/// survivor when it reaches `generation_cap` generations or the population
/// exceeds `population_cap`.
inline GaltonWatsonRun galton_watson(const std::vector<double>& offspring, std::size_t generation_cap, CounterRng& rng,
                                     std::uint64_t population_cap = 10'000) {
  const auto law = VertexLaw::from_pmf(offspring, std::vector<std::vector<Vertex>>(offspring.size() - 1), 1.0);
  GaltonWatsonRun run;
  std::uint64_t z = 1;
  run.population.push_back(z);
  for (std::size_t g = 1; g <= generation_cap; ++g) {
    std::uint64_t next = 0;
    for (std::uint64_t i = 0; i < z; ++i) next += law.draw(rng.uniform());
    z = next;
    run.population.push_back(z);
    if (z == 0) {
      run.extinct = true;
      run.extinction_generation = g;
      return run;
    }
    if (z > population_cap) return run;
  }
  return run;
}

struct HypothesisRow {
  double delta = 0.0;
  bool region_finite = true;
  std::vector<Vertex> region;  // R_delta
  double a = 0.0;
  std::uint64_t threshold = 0;  // N
};

struct HypothesisReport {
  bool holds = false;
  double far_field_eta = 0.0;
  double xi = 0.0;  // inf psi_v(0)
  std::map<std::string, double> class_eta;
  HypothesisRow primary;
  std::vector<HypothesisRow> sensitivity;  // delta / 2 and 2 delta
};

/// Sufficient condition for extinction: the far-field eta is negative. Also
/// reports R_delta = {v : eta_v > -delta}, a = max(0, M_v eta_v : v in R_delta)
/// and N = ceil(a |R_delta| / delta + |R_delta|).
inline HypothesisReport check_hypotheses(const ExtinctionSpec& spec, double delta = 0.05) {
  if (!(delta > 0.0)) throw error(errc::config_error, "delta must be positive");
  spec.validate();
  HypothesisReport r;
  r.far_field_eta = spec.default_law.eta();
  r.xi = spec.default_law.pmf(0);
  for (const auto& [name, law] : spec.classes) {
    r.class_eta[name] = law.eta();
    r.xi = std::min(r.xi, law.pmf(0));
  }
  auto row = [&](double d) {
    HypothesisRow h;
    h.delta = d;
    if (r.far_field_eta > -d) {
      h.region_finite = false;
      return h;
    }
    for (const auto& [v, name] : spec.exceptional) {
      const auto& law = spec.classes.at(name);
      if (law.eta() > -d) {
        h.region.push_back(v);
        h.a = std::max(h.a, law.mass * law.eta());
      }
    }
    const double n = static_cast<double>(h.region.size());
    h.threshold = static_cast<std::uint64_t>(std::ceil(h.a * n / d + n));
    return h;
  };
  r.holds = r.far_field_eta < 0.0;
  r.primary = row(delta);
  r.sensitivity = {row(delta / 2.0), row(2.0 * delta)};
  if (r.holds && !r.primary.region_finite) {
    std::ostringstream os;
    os << "far-field eta " << r.far_field_eta << " is within delta " << delta << " of zero";
    throw error(errc::infinite_exceptional_region, os.str());
  }
  return r;
}

}  // namespace perfsim
