#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "perfsim/error.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/lambda_distribution.hpp"
#include "perfsim/rng.hpp"
#include "perfsim/spin_config.hpp"

namespace perfsim {

/// Exact law of the spins on a finite region. Pattern bit i set means the
/// i-th vertex of `region` (sorted order) has spin +1.
///
/// When every hyperedge lies inside the region, the infinite-volume Gibbs
/// measure is this law times independent fair spins elsewhere: the
/// specification of any vertex outside only sees the empty field, and the
/// product measure satisfies every local specification.
struct ExactMarginal {
  Region region;
  std::vector<double> prob;

  std::uint64_t pattern_of(const SpinConfig& sigma) const {
    std::uint64_t p = 0;
    for (std::size_t i = 0; i < region.size(); ++i)
      if (sigma.at(region[i]) == 1) p |= std::uint64_t{1} << i;
    return p;
  }

  SpinConfig config_of(std::uint64_t pattern) const {
    SpinConfig s;
    for (std::size_t i = 0; i < region.size(); ++i) s.set(region[i], (pattern >> i) & 1 ? 1 : -1);
    return s;
  }

  /// P(sigma(region[i]) = +1).
  double marginal_plus(std::size_t i) const {
    double p = 0.0;
    for (std::uint64_t m = 0; m < prob.size(); ++m)
      if ((m >> i) & 1) p += prob[m];
    return p;
  }
};

/// Enumerates all 2^|region| patterns. `region` defaults to the union of
/// the hyperedges; a given region must contain every hyperedge.
inline ExactMarginal exact_gibbs_finite_support(const ExplicitFinite& j, Region region = {},
                                                std::size_t max_spins = 20) {
  std::vector<Vertex> all(region.begin(), region.end());
  if (region.empty())
    for (const auto& c : j.couplings()) all.insert(all.end(), c.edge.vertices().begin(), c.edge.vertices().end());
  ExactMarginal m;
  m.region = make_region(std::move(all));
  for (const auto& c : j.couplings())
    if (!region_subset(c.edge.vertices(), m.region)) throw error(errc::config_error, "a hyperedge leaves the region");
  if (m.region.size() > max_spins) throw error(errc::region_too_large, "exact enumeration is limited to 20 spins");

  // Hyperedges as bit masks; chi = (-1)^(number of minus spins).
  std::vector<std::pair<std::uint64_t, double>> masks;
  for (const auto& c : j.couplings()) {
    std::uint64_t mask = 0;
    for (const auto& u : c.edge.vertices())
      mask |= std::uint64_t{1} << (std::lower_bound(m.region.begin(), m.region.end(), u) - m.region.begin());
    masks.emplace_back(mask, c.value);
  }
  const std::uint64_t n = std::uint64_t{1} << m.region.size();
  std::vector<double> logw(n);
  double top = -INFINITY;
  for (std::uint64_t p = 0; p < n; ++p) {
    double h = 0.0;
    for (const auto& [mask, value] : masks) h += (std::popcount(~p & mask) % 2 ? -value : value);
    logw[p] = h;
    top = std::max(top, h);
  }
  m.prob.resize(n);
  double z = 0.0;
  for (std::uint64_t p = 0; p < n; ++p) z += (m.prob[p] = std::exp(logw[p] - top));
  for (auto& x : m.prob) x /= z;
  return m;
}

/// max over random sigma of |c_v(sigma) - M_v [lambda(0)/2 + sum_k lambda(k) p^[k](sigma)]|.
inline double verify_decomposition(const LambdaDistribution& dist, std::size_t trials, CounterRng& rng) {
  const auto& j = *dist.interaction();
  const auto& v = dist.center();
  if (!j.support_size(v)) throw error(errc::infinite_support, "decomposition check needs finitely many hyperedges");
  std::size_t last = 0;
  while (dist.cdf(last) < 1.0) ++last;
  std::vector<Vertex> vertices{v};
  for (const auto& c : j.hyperedges_at(v)) vertices.insert(vertices.end(), c.edge.vertices().begin(), c.edge.vertices().end());
  if (last > 0) {
    const auto r = dist.sequence().region(last);
    vertices.insert(vertices.end(), r.begin(), r.end());
  }
  const Region support = make_region(std::move(vertices));
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    SpinConfig sigma;
    for (const auto& u : support) sigma.set(u, rng.uniform() < 0.5 ? 1 : -1);
    double rhs = dist.pmf(0) / 2.0;
    for (std::size_t k = 1; k <= last; ++k) rhs += dist.pmf(k) * dist.update_prob(k, sigma);
    worst = std::max(worst, std::abs(j.flip_rate(v, sigma) - dist.mass() * rhs));
  }
  return worst;
}

struct GoodnessOfFit {
  double chi_square = 0.0;
  std::size_t degrees_of_freedom = 0;
  double p_value = 1.0;
  std::vector<double> marginal_z;
  double z_critical = 0.0;
  bool pass = false;
};

/// Chi-square test over patterns (cells with expected count below 5 pooled)
/// plus Bonferroni-corrected z-tests on the single-site marginals.
inline GoodnessOfFit compare_empirical(const std::vector<std::uint64_t>& counts, const ExactMarginal& oracle,
                                       double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw error(errc::config_error, "alpha must lie in (0, 1)");
  if (counts.size() != oracle.prob.size()) throw error(errc::config_error, "count table does not match the oracle");
  double n = 0.0;
  for (auto c : counts) n += static_cast<double>(c);
  if (n == 0.0) throw error(errc::config_error, "no samples");

  GoodnessOfFit r;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  std::size_t cells = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * oracle.prob[i];
    const double o = static_cast<double>(counts[i]);
    if (e < 5.0) {
      pooled_obs += o;
      pooled_exp += e;
      continue;
    }
    r.chi_square += (o - e) * (o - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    r.chi_square += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  } else if (pooled_obs > 0.0) {
    r.chi_square = INFINITY;  // mass on impossible patterns
  }
  r.degrees_of_freedom = cells > 1 ? cells - 1 : 0;
  if (std::isinf(r.chi_square)) {
    r.p_value = 0.0;
  } else if (r.degrees_of_freedom > 0) {
    boost::math::chi_squared dist(static_cast<double>(r.degrees_of_freedom));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.chi_square));
  }

  const std::size_t m = oracle.region.size();
  boost::math::normal std_normal;
  r.z_critical = m ? boost::math::quantile(boost::math::complement(std_normal, alpha / (2.0 * static_cast<double>(m)))) : 0.0;
  bool marginals_ok = true;
  for (std::size_t i = 0; i < m; ++i) {
    const double p = oracle.marginal_plus(i);
    double hits = 0.0;
    for (std::size_t c = 0; c < counts.size(); ++c)
      if ((c >> i) & 1) hits += static_cast<double>(counts[c]);
    const double sd = std::sqrt(p * (1.0 - p) / n);
    const double z = sd > 0.0 ? (hits / n - p) / sd : (hits / n == p ? 0.0 : INFINITY);
    r.marginal_z.push_back(z);
    if (std::abs(z) > r.z_critical) marginals_ok = false;
  }
  r.pass = r.p_value >= alpha && marginals_ok;
  return r;
}

}  // namespace perfsim
