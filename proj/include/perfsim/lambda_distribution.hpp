#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/interval.hpp"
#include "perfsim/region_sequence.hpp"

namespace perfsim {

/// The law of the growth index K at a vertex v for a given sequence B_v:
///   CDF(0) = exp(-2 G), CDF(n) = exp(-T_n) for n >= 1,
/// with G the total strength at v and T_n the strength of hyperedges through
/// v not inside B_v(n). Steps are computed lazily and cached.
class LambdaDistribution {
 public:
  static constexpr double negative_tolerance = 1e-12;

  LambdaDistribution(InteractionPtr j, RegionSequence seq) : j_(std::move(j)), seq_(std::move(seq)) {
    if (!j_) throw error(errc::invalid_model, "null interaction");
    const auto& v = seq_.center();
    if (v.dimension() != j_->dimension()) throw error(errc::invalid_sequence, "sequence center has the wrong dimension");
    if (!seq_.defects().empty()) throw error(errc::invalid_sequence, seq_.defects().front().message);
    finite_ = j_->support_size(v).has_value();
    if (finite_) {
      auto report = validate_sequence(seq_, *j_, 1);
      if (!report.ok) throw error(errc::invalid_sequence, report.violations.front().message);
      sorted_.push_back(v);
    }
    total_ = j_->total_strength(v);
    mass_ = 2.0 * std::exp(total_);
    included_.insert(v);
    Step s0;
    s0.size = 1;
    s0.tail = total_;
    s0.cdf = std::exp(-2.0 * total_);
    steps_.push_back(std::move(s0));
  }

  const Vertex& center() const noexcept { return seq_.center(); }
  const RegionSequence& sequence() const noexcept { return seq_; }
  const InteractionPtr& interaction() const noexcept { return j_; }
  double total() const noexcept { return total_; }
  double mass() const noexcept { return mass_; }
  bool finite_support() const noexcept { return finite_; }

  double cdf(std::size_t n) const {
    std::lock_guard lock(mu_);
    return steps_[clamp_locked(n)].cdf;
  }

  double pmf(std::size_t k) const {
    std::lock_guard lock(mu_);
    return pmf_locked(k);
  }

  /// T_n; for n = 0 this is the total strength.
  double tail(std::size_t n) const {
    std::lock_guard lock(mu_);
    return steps_[clamp_locked(n)].tail;
  }

  /// |B_v(n)|; throws when the sequence has no step n.
  std::size_t region_size(std::size_t n) const {
    std::lock_guard lock(mu_);
    require_locked(n);
    return steps_[n].size;
  }

  /// Hyperedges through v inside B_v(k) but not B_v(k-1), k >= 1.
  std::vector<Coupling> ring(std::size_t k) const {
    std::lock_guard lock(mu_);
    require_locked(k);
    return steps_[k].ring;
  }

  double ring_strength(std::size_t k) const {
    std::lock_guard lock(mu_);
    require_locked(k);
    return steps_[k].ring_abs;
  }

  /// Largest available step index when the sequence is finite and exhausted.
  std::optional<std::size_t> last_step() const {
    std::lock_guard lock(mu_);
    if (!ended_) return std::nullopt;
    return steps_.size() - 1;
  }

  /// Smallest k with CDF(k) >= u.
  std::size_t sample_k(double u) const {
    std::lock_guard lock(mu_);
    if (steps_[0].cdf >= u) return 0;
    for (std::size_t k = 1;; ++k) {
      if (!extend_locked(k)) return steps_.size() - 1;
      if (steps_[k].cdf >= u) return k;
    }
  }

  /// Reindexed law: mass lambda(l) sits at |B_v(l)| - 1.
  double lambda_hat(std::size_t i) const {
    std::lock_guard lock(mu_);
    for (std::size_t l = 0;; ++l) {
      if (!extend_locked(l)) return 0.0;
      const std::size_t at = steps_[l].size - 1;
      if (at == i) return pmf_locked(l);
      if (at > i) return 0.0;
    }
  }

  double cdf_hat(std::size_t n) const {
    std::lock_guard lock(mu_);
    std::size_t best = 0;
    for (std::size_t l = 1; extend_locked(l) && steps_[l].size - 1 <= n; ++l) best = l;
    return steps_[best].cdf;
  }

  /// p^[k](-sigma(v) | sigma): the probability that event k flips the spin
  /// at v. `offset` translates the stored hyperedges (center + offset is the
  /// actual vertex); only spins inside B_v(k) are read.
  double update_prob(std::size_t k, const SpinConfig& sigma, const Vertex& offset) const {
    if (k == 0) return 0.5;
    std::lock_guard lock(mu_);
    require_locked(k);
    double inner = 0.0;  // sum of J chi over hyperedges inside B_v(k-1)
    for (std::size_t j = 1; j < k; ++j) inner += field(steps_[j].ring, sigma, offset);
    const auto& st = steps_[k];
    if (st.ring.empty()) return 0.0;
    const double s = field(st.ring, sigma, offset);
    const double d = st.ring_abs;
    double p;
    if (k == 1) {
      const double denom = -std::expm1(-2.0 * d - steps_[1].tail);
      if (denom <= 0.0) return 0.0;
      p = (std::exp(-s) - std::exp(-d)) / (mass_ * denom);
    } else {
      const double denom = -std::expm1(-d);
      if (denom <= 0.0) return 0.0;
      p = std::exp(-inner) / mass_ * (std::exp(-s) - std::exp(-d)) / denom;
    }
    if (p < -negative_tolerance || p > 1.0 + negative_tolerance) {
      std::ostringstream os;
      os << "update probability " << p << " outside [0, 1] at step " << k;
      throw error(errc::numerical_inconsistency, os.str());
    }
    return std::clamp(p, 0.0, 1.0);
  }

  double update_prob(std::size_t k, const SpinConfig& sigma) const {
    return update_prob(k, sigma, Vertex::origin(center().dimension()));
  }

  /// mu = sum_{l>=1} |B_v(l)| lambda(l) - 1, enclosed in an interval of
  /// width at most `tolerance`. Exact (a point) for finitely many hyperedges.
  Interval birth_death_mu(double tolerance, std::size_t max_steps = 5'000'000) const {
    if (!(tolerance > 0.0)) throw error(errc::config_error, "tolerance must be positive");
    std::lock_guard lock(mu_);
    double sum = 0.0;
    if (finite_) {
      for (std::size_t l = 1; steps_[l - 1].cdf < 1.0 && extend_locked(l); ++l)
        sum += static_cast<double>(steps_[l].size) * pmf_locked(l);
      return Interval::point(sum - 1.0);
    }
    const auto slack = seq_.growth_slack();
    if (!slack) throw error(errc::tail_not_boundable, "the sequence carries no growth bound and lambda has infinite support");
    for (std::size_t l = 1; l <= max_steps; ++l) {
      if (!extend_locked(l)) break;
      sum += static_cast<double>(steps_[l].size) * pmf_locked(l);
      if (auto bound = j_->tail_moment_bound(center(), covered_radius_ + 1, *slack); bound && *bound <= tolerance)
        return Interval{sum - 1.0, sum - 1.0 + *bound};
    }
    throw error(errc::tail_not_boundable, "tail bound did not reach the requested tolerance");
  }

 private:
  struct Step {
    std::size_t size = 0;
    double tail = 0.0;
    double cdf = 0.0;
    double ring_abs = 0.0;
    std::vector<Coupling> ring;
  };

  static double field(const std::vector<Coupling>& ring, const SpinConfig& sigma, const Vertex& offset) {
    double s = 0.0;
    for (const auto& c : ring) {
      int p = 1;
      for (const auto& u : c.edge.vertices()) p *= sigma.at(u + offset);
      s += c.value * p;
    }
    return s;
  }

  double pmf_locked(std::size_t k) const {
    if (k == 0) return steps_[0].cdf;
    if (!extend_locked(k)) return 0.0;
    double p = steps_[k].cdf - steps_[k - 1].cdf;
    if (p < 0.0) {
      if (p < -negative_tolerance) throw error(errc::numerical_inconsistency, "negative lambda value");
      p = 0.0;
    }
    return p;
  }

  std::size_t clamp_locked(std::size_t n) const { return extend_locked(n) ? n : steps_.size() - 1; }

  void require_locked(std::size_t k) const {
    if (!extend_locked(k)) throw error(errc::invalid_sequence, "sequence has no such step");
  }

  bool extend_locked(std::size_t n) const {
    const auto& v = center();
    while (steps_.size() <= n) {
      if (ended_) return false;
      const std::size_t k = steps_.size();
      if (!seq_.materialize(k)) {
        ended_ = true;
        return false;
      }
      const auto inc = seq_.increment(k);
      for (const auto& u : inc) included_.insert(u);
      Step st;
      st.size = seq_.size(k);
      st.ring = j_->ring(v, included_, inc);
      for (const auto& c : st.ring) st.ring_abs += std::abs(c.value);
      if (finite_) {
        for (const auto& u : inc) sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), u), u);
        st.tail = j_->tail_strength(v, sorted_);
      } else {
        inside_ += st.ring_abs;
        st.tail = std::max(0.0, total_ - inside_);
      }
      st.cdf = std::exp(-st.tail);
      steps_.push_back(std::move(st));
      advance_coverage();
    }
    return true;
  }

  // Tracks the largest r with the L1 ball of radius r inside B_v(n).
  void advance_coverage() const {
    for (;;) {
      if (shell_.empty()) shell_ = l1_sphere(center(), covered_radius_ + 1);
      while (shell_pos_ < shell_.size() && included_.contains(shell_[shell_pos_])) ++shell_pos_;
      if (shell_pos_ < shell_.size()) return;
      ++covered_radius_;
      shell_.clear();
      shell_pos_ = 0;
    }
  }

  InteractionPtr j_;
  RegionSequence seq_;
  bool finite_ = false;
  double total_ = 0.0;
  double mass_ = 2.0;

  mutable std::mutex mu_;
  mutable std::vector<Step> steps_;
  mutable VertexSet included_;
  mutable Region sorted_;
  mutable double inside_ = 0.0;
  mutable bool ended_ = false;
  mutable std::int64_t covered_radius_ = 0;
  mutable std::vector<Vertex> shell_;
  mutable std::size_t shell_pos_ = 0;
};

/// Result of comparing two CDFs pointwise up to a horizon.
struct DominanceReport {
  /// CDF_a(n) <= CDF_b(n) + slack for every n: b is stochastically smaller.
  bool a_cdf_below_b = true;
  /// CDF_b(n) <= CDF_a(n) + slack for every n: a is stochastically smaller.
  bool b_cdf_below_a = true;
  std::optional<std::size_t> first_violation;
};

/// Compares the reindexed laws (lambda hat) of two distributions for
/// n = 0..horizon.
inline DominanceReport compare_cdf_hat(const LambdaDistribution& a, const LambdaDistribution& b,
                                       std::size_t horizon = 64, double slack = 0.0) {
  DominanceReport r;
  for (std::size_t n = 0; n <= horizon; ++n) {
    const double fa = a.cdf_hat(n);
    const double fb = b.cdf_hat(n);
    if (fa > fb + slack) {
      if (r.a_cdf_below_b && !r.first_violation) r.first_violation = n;
      r.a_cdf_below_b = false;
    }
    if (fb > fa + slack) r.b_cdf_below_a = false;
  }
  return r;
}

/// True iff CDF_a(n) <= CDF_b(n) (+ slack) for all n <= horizon on the
/// reindexed scale, i.e. lambda hat of b is stochastically no larger than a's.
inline bool stochastically_dominates(const LambdaDistribution& a, const LambdaDistribution& b,
                                     std::size_t horizon = 64, double slack = 0.0) {
  return compare_cdf_hat(a, b, horizon, slack).a_cdf_below_b;
}

}  // namespace perfsim
