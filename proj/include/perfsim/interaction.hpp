#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/spin_config.hpp"
#include "perfsim/vertex.hpp"

namespace perfsim {

/// Finite vertex set with at least two elements, kept sorted.
class Hyperedge {
 public:
  Hyperedge() = default;

  explicit Hyperedge(std::vector<Vertex> vs) : vertices_(std::move(vs)) {
    std::sort(vertices_.begin(), vertices_.end());
    if (vertices_.size() < 2) throw error(errc::invalid_model, "a hyperedge needs at least two vertices");
    if (std::adjacent_find(vertices_.begin(), vertices_.end()) != vertices_.end())
      throw error(errc::invalid_model, "hyperedge lists a vertex twice");
    for (const auto& v : vertices_)
      if (v.dimension() != vertices_.front().dimension())
        throw error(errc::invalid_model, "hyperedge mixes dimensions");
  }

  Hyperedge(const Vertex& a, const Vertex& b) : Hyperedge(std::vector<Vertex>{a, b}) {}

  const Region& vertices() const noexcept { return vertices_; }
  std::size_t size() const noexcept { return vertices_.size(); }
  bool contains(const Vertex& v) const { return region_contains(vertices_, v); }
  int dimension() const { return vertices_.front().dimension(); }

  /// Largest L1 distance from `v` to a vertex of the hyperedge.
  std::int64_t reach_from(const Vertex& v) const {
    std::int64_t r = 0;
    for (const auto& u : vertices_) r = std::max(r, l1_distance(u, v));
    return r;
  }

  friend auto operator<=>(const Hyperedge&, const Hyperedge&) = default;
  friend bool operator==(const Hyperedge&, const Hyperedge&) = default;

  friend std::ostream& operator<<(std::ostream& os, const Hyperedge& b) {
    os << '{';
    for (std::size_t i = 0; i < b.vertices_.size(); ++i) os << (i ? "," : "") << b.vertices_[i];
    return os << '}';
  }

 private:
  Region vertices_;
};

struct Coupling {
  Hyperedge edge;
  double value = 0.0;
};

inline int chi(const Hyperedge& b, const SpinConfig& sigma) { return chi(std::span<const Vertex>(b.vertices()), sigma); }

/// Partner of `center` in a pair interaction together with |J|.
struct Partner {
  Vertex vertex;
  double strength = 0.0;
};

/// Ordering used to sort pair partners: larger |J| first, then smaller L1
/// distance, then lexicographically smaller coordinates.
inline bool partner_before(const Vertex& center, const Partner& a, const Partner& b) {
  if (a.strength != b.strength) return a.strength > b.strength;
  const auto da = l1_distance(a.vertex, center);
  const auto db = l1_distance(b.vertex, center);
  if (da != db) return da < db;
  return a.vertex < b.vertex;
}

/// Lazy stream of pair partners in `partner_before` order.
class PartnerStream {
 public:
  virtual ~PartnerStream() = default;
  virtual std::optional<Partner> next() = 0;
};

class VectorPartnerStream final : public PartnerStream {
 public:
  explicit VectorPartnerStream(std::vector<Partner> sorted) : items_(std::move(sorted)) {}
  std::optional<Partner> next() override {
    if (pos_ == items_.size()) return std::nullopt;
    return items_[pos_++];
  }

 private:
  std::vector<Partner> items_;
  std::size_t pos_ = 0;
};

namespace detail {

inline bool touches(const Hyperedge& b, std::span<const Vertex> increment) {
  for (const auto& u : b.vertices())
    if (std::find(increment.begin(), increment.end(), u) != increment.end()) return true;
  return false;
}

inline bool inside(const Hyperedge& b, const VertexSet& s) {
  return std::all_of(b.vertices().begin(), b.vertices().end(), [&](const Vertex& u) { return s.contains(u); });
}

inline bool inside(const Hyperedge& b, const Region& s) { return region_subset(b.vertices(), s); }

inline void require_member(const Vertex& v, const Region& s) {
  if (!region_contains(s, v)) {
    std::ostringstream os;
    os << "vertex " << v << " is not in the given set";
    throw error(errc::vertex_not_in_set, os.str());
  }
}

}  // namespace detail

/// Interaction J = {J_B} on Z^d. Immutable after construction; all queries
/// are const and safe to call concurrently.
class Interaction {
 public:
  virtual ~Interaction() = default;

  virtual int dimension() const = 0;
  virtual std::string_view family() const = 0;

  virtual double coupling(const Hyperedge& b) const = 0;

  /// N_v, or nullopt when v lies in infinitely many hyperedges.
  virtual std::optional<std::size_t> support_size(const Vertex& v) const = 0;

  /// All (B, J_B) with v in B and J_B != 0, sorted by hyperedge.
  virtual std::vector<Coupling> hyperedges_at(const Vertex& v) const = 0;

  /// Sum of |J_B| over B containing v.
  virtual double total_strength(const Vertex& v) const = 0;

  /// Sum of |J_B| over B containing v with B not inside `s`; requires v in s.
  double tail_strength(const Vertex& v, const Region& s) const {
    detail::require_member(v, s);
    return tail_impl(v, s);
  }

  /// Hyperedges through v that lie inside `after` and meet `increment`.
  /// These are exactly the B with B inside after but not inside after \ increment.
  virtual std::vector<Coupling> ring(const Vertex& v, const VertexSet& after,
                                     std::span<const Vertex> increment) const = 0;

  virtual bool is_pairwise() const = 0;

  /// Pair partners of v in decreasing |J|; throws NotPairwise otherwise.
  virtual std::unique_ptr<PartnerStream> partners(const Vertex& v) const = 0;

  /// Finite set of vertices whose local law may differ from the far field.
  virtual std::vector<Vertex> exceptional_vertices() const = 0;

  /// Upper bound on sum over B through v not inside the L1 ball of radius
  /// r0 - 1 of (|ball(reach_v(B))| + slack) |J_B|. Nullopt when the family
  /// offers no such bound.
  virtual std::optional<double> tail_moment_bound(const Vertex& v, std::int64_t r0, double slack) const = 0;

  double mass(const Vertex& v) const { return 2.0 * std::exp(total_strength(v)); }

  /// Glauber flip rate exp(-sum_B J_B chi_B(sigma)); needs finite N_v.
  double flip_rate(const Vertex& v, const SpinConfig& sigma) const {
    if (!support_size(v)) throw error(errc::infinite_support, "flip rate needs finitely many hyperedges at the vertex");
    double s = 0.0;
    for (const auto& c : hyperedges_at(v)) s += c.value * chi(c.edge, sigma);
    return std::exp(-s);
  }

  /// A vertex outside every exceptional vertex; it represents the
  /// translation class that fills the far field.
  Vertex far_field_representative() const {
    const auto ex = exceptional_vertices();
    Vertex rep = Vertex::origin(dimension());
    if (ex.empty()) return rep;
    std::int64_t top = ex.front()[0];
    for (const auto& u : ex) top = std::max(top, u[0]);
    rep[0] = top + 1;
    return rep;
  }

  /// Representative vertex of v's translation class: v itself when v is
  /// exceptional, the far-field representative otherwise.
  Vertex class_representative(const Vertex& v) const {
    const auto ex = exceptional_vertices();
    if (std::binary_search(ex.begin(), ex.end(), v)) return v;
    return far_field_representative();
  }

 protected:
  virtual double tail_impl(const Vertex& v, const Region& s) const = 0;
};

using InteractionPtr = std::shared_ptr<const Interaction>;

// ---------------------------------------------------------------------------

/// Explicit finite list of hyperedges.
class ExplicitFinite final : public Interaction {
 public:
  ExplicitFinite(int dimension, std::vector<Coupling> couplings) : dim_(dimension) {
    Vertex::origin(dimension);  // validates d
    std::sort(couplings.begin(), couplings.end(), [](const auto& a, const auto& b) { return a.edge < b.edge; });
    for (std::size_t i = 0; i + 1 < couplings.size(); ++i) {
      if (couplings[i].edge == couplings[i + 1].edge) {
        std::ostringstream os;
        os << "hyperedge " << couplings[i].edge << " listed twice";
        throw error(errc::invalid_model, os.str());
      }
    }
    for (auto& c : couplings) {
      if (c.edge.dimension() != dim_) throw error(errc::invalid_model, "hyperedge dimension differs from the model");
      if (!std::isfinite(c.value)) throw error(errc::invalid_model, "coupling must be finite");
      if (c.value == 0.0) continue;
      const std::size_t idx = edges_.size();
      for (const auto& u : c.edge.vertices()) incidence_[u].push_back(idx);
      edges_.push_back(std::move(c));
    }
  }

  int dimension() const override { return dim_; }
  std::string_view family() const override { return "explicit"; }

  double coupling(const Hyperedge& b) const override {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), b, [](const Coupling& c, const Hyperedge& e) { return c.edge < e; });
    return (it != edges_.end() && it->edge == b) ? it->value : 0.0;
  }

  std::optional<std::size_t> support_size(const Vertex& v) const override {
    auto it = incidence_.find(v);
    return it == incidence_.end() ? 0 : it->second.size();
  }

  std::vector<Coupling> hyperedges_at(const Vertex& v) const override {
    std::vector<Coupling> out;
    if (auto it = incidence_.find(v); it != incidence_.end())
      for (auto i : it->second) out.push_back(edges_[i]);
    return out;
  }

  double total_strength(const Vertex& v) const override {
    double s = 0.0;
    if (auto it = incidence_.find(v); it != incidence_.end())
      for (auto i : it->second) s += std::abs(edges_[i].value);
    return s;
  }

  std::vector<Coupling> ring(const Vertex& v, const VertexSet& after, std::span<const Vertex> increment) const override {
    std::vector<Coupling> out;
    if (auto it = incidence_.find(v); it != incidence_.end())
      for (auto i : it->second)
        if (detail::inside(edges_[i].edge, after) && detail::touches(edges_[i].edge, increment)) out.push_back(edges_[i]);
    return out;
  }

  bool is_pairwise() const override {
    return std::all_of(edges_.begin(), edges_.end(), [](const Coupling& c) { return c.edge.size() == 2; });
  }

  std::unique_ptr<PartnerStream> partners(const Vertex& v) const override {
    std::vector<Partner> ps;
    for (const auto& c : hyperedges_at(v)) {
      if (c.edge.size() != 2) throw error(errc::not_pairwise, "interaction has a hyperedge with more than two vertices");
      const auto& vs = c.edge.vertices();
      ps.push_back({vs[0] == v ? vs[1] : vs[0], std::abs(c.value)});
    }
    std::sort(ps.begin(), ps.end(), [&](const Partner& a, const Partner& b) { return partner_before(v, a, b); });
    return std::make_unique<VectorPartnerStream>(std::move(ps));
  }

  std::vector<Vertex> exceptional_vertices() const override {
    std::vector<Vertex> out;
    out.reserve(incidence_.size());
    for (const auto& [v, _] : incidence_) out.push_back(v);
    return out;
  }

  std::optional<double> tail_moment_bound(const Vertex& v, std::int64_t r0, double slack) const override {
    double s = 0.0;
    for (const auto& c : hyperedges_at(v)) {
      const auto reach = c.edge.reach_from(v);
      if (reach >= r0) s += (l1_ball_size(dim_, reach) + slack) * std::abs(c.value);
    }
    return s;
  }

  const std::vector<Coupling>& couplings() const noexcept { return edges_; }

 protected:
  double tail_impl(const Vertex& v, const Region& s) const override {
    double t = 0.0;
    if (auto it = incidence_.find(v); it != incidence_.end())
      for (auto i : it->second)
        if (!detail::inside(edges_[i].edge, s)) t += std::abs(edges_[i].value);
    return t;
  }

 private:
  int dim_;
  std::vector<Coupling> edges_;
  std::map<Vertex, std::vector<std::size_t>> incidence_;
};

// ---------------------------------------------------------------------------

/// Translation-invariant pair interaction of finite range: J_{v, v+r} = table[r].
/// An offset and its negative name the same pair and may be listed once.
class PairTable final : public Interaction {
 public:
  PairTable(int dimension, std::vector<std::pair<Vertex, double>> table) : dim_(dimension) {
    Vertex::origin(dimension);
    const Vertex zero = Vertex::origin(dimension);
    for (auto& [r, j] : table) {
      if (r.dimension() != dim_) throw error(errc::invalid_model, "offset dimension differs from the model");
      if (r == zero) throw error(errc::invalid_model, "pair offset must be non-zero");
      if (!std::isfinite(j)) throw error(errc::invalid_model, "coupling must be finite");
      const Vertex key = canonical(r);
      if (table_.contains(key)) throw error(errc::invalid_model, "pair offset listed twice (r and -r name one pair)");
      if (j != 0.0) table_.emplace(key, j);
      else zero_keys_.push_back(key);
    }
    // Zero couplings are dropped but still count for duplicate detection.
    for (const auto& k : zero_keys_)
      if (table_.contains(k)) throw error(errc::invalid_model, "pair offset listed twice (r and -r name one pair)");
    for (const auto& [r, j] : table_) total_ += 2.0 * std::abs(j);
  }

  int dimension() const override { return dim_; }
  std::string_view family() const override { return "pair_table"; }

  double coupling(const Hyperedge& b) const override {
    if (b.size() != 2) return 0.0;
    return lookup(b.vertices()[1] - b.vertices()[0]);
  }

  std::optional<std::size_t> support_size(const Vertex&) const override { return 2 * table_.size(); }

  std::vector<Coupling> hyperedges_at(const Vertex& v) const override {
    std::vector<Coupling> out;
    for (const auto& [r, j] : table_) {
      out.push_back({Hyperedge(v, v + r), j});
      out.push_back({Hyperedge(v, v - r), j});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.edge < b.edge; });
    return out;
  }

  double total_strength(const Vertex&) const override { return total_; }

  std::vector<Coupling> ring(const Vertex& v, const VertexSet&, std::span<const Vertex> increment) const override {
    std::vector<Coupling> out;
    for (const auto& u : increment) {
      if (u == v) continue;
      if (double j = lookup(u - v); j != 0.0) out.push_back({Hyperedge(v, u), j});
    }
    return out;
  }

  bool is_pairwise() const override { return true; }

  std::unique_ptr<PartnerStream> partners(const Vertex& v) const override {
    std::vector<Partner> ps;
    for (const auto& [r, j] : table_) {
      ps.push_back({v + r, std::abs(j)});
      ps.push_back({v - r, std::abs(j)});
    }
    std::sort(ps.begin(), ps.end(), [&](const Partner& a, const Partner& b) { return partner_before(v, a, b); });
    return std::make_unique<VectorPartnerStream>(std::move(ps));
  }

  std::vector<Vertex> exceptional_vertices() const override { return {}; }

  std::optional<double> tail_moment_bound(const Vertex&, std::int64_t r0, double slack) const override {
    double s = 0.0;
    for (const auto& [r, j] : table_)
      if (r.l1_norm() >= r0) s += 2.0 * (l1_ball_size(dim_, r.l1_norm()) + slack) * std::abs(j);
    return s;
  }

 protected:
  double tail_impl(const Vertex& v, const Region& s) const override {
    double t = 0.0;
    for (const auto& [r, j] : table_) {
      if (!region_contains(s, v + r)) t += std::abs(j);
      if (!region_contains(s, v - r)) t += std::abs(j);
    }
    return t;
  }

 private:
  Vertex canonical(const Vertex& r) const { return r < Vertex::origin(dim_) ? -r : r; }

  double lookup(const Vertex& r) const {
    auto it = table_.find(canonical(r));
    return it == table_.end() ? 0.0 : it->second;
  }

  int dim_;
  std::map<Vertex, double> table_;
  std::vector<Vertex> zero_keys_;
  double total_ = 0.0;
};

// ---------------------------------------------------------------------------

/// Infinite-range pair interaction J_{v, v+r} = beta * gamma^{|r|_1}, 0 < gamma < 1.
class PairGeometric final : public Interaction {
 public:
  PairGeometric(int dimension, double beta, double gamma) : dim_(dimension), beta_(beta), gamma_(gamma) {
    Vertex::origin(dimension);
    if (!std::isfinite(beta)) throw error(errc::invalid_model, "beta must be finite");
    if (!(gamma > 0.0 && gamma < 1.0)) throw error(errc::invalid_model, "gamma must lie in (0, 1)");
    const double g = gamma_;
    double series = 0.0;  // sum over r >= 1 of |sphere(r)| gamma^r
    switch (dim_) {
      case 1: series = 2.0 * g / (1.0 - g); break;
      case 2: series = 4.0 * g / ((1.0 - g) * (1.0 - g)); break;
      default: series = 4.0 * g * (1.0 + g) / std::pow(1.0 - g, 3) + 2.0 * g / (1.0 - g); break;
    }
    total_ = std::abs(beta_) * series;
  }

  int dimension() const override { return dim_; }
  std::string_view family() const override { return "pair_geometric"; }
  double beta() const noexcept { return beta_; }
  double gamma() const noexcept { return gamma_; }

  double pair_value(const Vertex& a, const Vertex& b) const {
    return beta_ * std::pow(gamma_, static_cast<double>(l1_distance(a, b)));
  }

  double coupling(const Hyperedge& b) const override {
    if (b.size() != 2) return 0.0;
    return pair_value(b.vertices()[0], b.vertices()[1]);
  }

  std::optional<std::size_t> support_size(const Vertex&) const override {
    if (beta_ == 0.0) return 0;
    return std::nullopt;
  }

  std::vector<Coupling> hyperedges_at(const Vertex&) const override {
    if (beta_ == 0.0) return {};
    throw error(errc::infinite_support, "pair_geometric has infinitely many hyperedges at every vertex");
  }

  double total_strength(const Vertex&) const override { return total_; }

  std::vector<Coupling> ring(const Vertex& v, const VertexSet&, std::span<const Vertex> increment) const override {
    std::vector<Coupling> out;
    if (beta_ == 0.0) return out;
    for (const auto& u : increment)
      if (u != v) out.push_back({Hyperedge(v, u), pair_value(v, u)});
    return out;
  }

  bool is_pairwise() const override { return true; }

  std::unique_ptr<PartnerStream> partners(const Vertex& v) const override;

  std::vector<Vertex> exceptional_vertices() const override { return {}; }

  std::optional<double> tail_moment_bound(const Vertex&, std::int64_t r0, double slack) const override {
    if (beta_ == 0.0) return 0.0;
    // Terms are polynomial(r) * gamma^r; the ratio of consecutive terms is
    // non-increasing in r, so once it drops below one the rest is bounded by
    // a geometric series.
    auto term = [&](std::int64_t r) {
      return l1_sphere_size(dim_, r) * (l1_ball_size(dim_, r) + slack) * std::pow(gamma_, static_cast<double>(r));
    };
    std::int64_t r = std::max<std::int64_t>(r0, 1);
    double sum = 0.0;
    for (;;) {
      const double t = term(r);
      const double ratio = term(r + 1) / t;
      sum += t;
      if (ratio < 1.0 && t * ratio / (1.0 - ratio) <= 1e-3 * sum + 1e-300) {
        sum += t * ratio / (1.0 - ratio);
        break;
      }
      ++r;
    }
    return std::abs(beta_) * sum;
  }

 protected:
  double tail_impl(const Vertex& v, const Region& s) const override {
    if (beta_ == 0.0) return 0.0;
    double inside = 0.0;
    for (const auto& u : s)
      if (u != v) inside += std::abs(pair_value(v, u));
    return std::max(0.0, total_ - inside);
  }

 private:
  int dim_;
  double beta_;
  double gamma_;
  double total_ = 0.0;
};

namespace detail {

/// Vertices of Z^d around a center, shell by shell, lexicographic inside a shell.
class ShellWalker {
 public:
  explicit ShellWalker(Vertex center, std::int64_t first_radius = 1) : center_(center), radius_(first_radius) {}

  Vertex next() {
    while (pos_ >= shell_.size()) {
      shell_ = l1_sphere(center_, radius_++);
      pos_ = 0;
    }
    return shell_[pos_++];
  }

 private:
  Vertex center_;
  std::int64_t radius_;
  std::vector<Vertex> shell_;
  std::size_t pos_ = 0;
};

class GeometricPartnerStream final : public PartnerStream {
 public:
  GeometricPartnerStream(const PairGeometric& j, Vertex center) : j_(j), center_(center), walk_(center) {}
  std::optional<Partner> next() override {
    if (j_.beta() == 0.0) return std::nullopt;
    const Vertex u = walk_.next();
    return Partner{u, std::abs(j_.pair_value(center_, u))};
  }

 private:
  const PairGeometric& j_;
  Vertex center_;
  ShellWalker walk_;
};

}  // namespace detail

inline std::unique_ptr<PartnerStream> PairGeometric::partners(const Vertex& v) const {
  return std::make_unique<detail::GeometricPartnerStream>(*this, v);
}

// ---------------------------------------------------------------------------

/// A base interaction with finitely many couplings replaced.
class Modified : public Interaction {
 public:
  Modified(InteractionPtr base, std::vector<Coupling> overrides) : base_(std::move(base)) {
    if (!base_) throw error(errc::invalid_model, "modified interaction needs a base");
    for (auto& c : overrides) {
      if (c.edge.dimension() != base_->dimension()) throw error(errc::invalid_model, "override dimension differs from base");
      if (!std::isfinite(c.value)) throw error(errc::invalid_model, "coupling must be finite");
      if (!overrides_.emplace(c.edge, c.value).second) throw error(errc::invalid_model, "override hyperedge listed twice");
    }
    for (const auto& [b, j] : overrides_)
      for (const auto& u : b.vertices()) incidence_[u].push_back(b);
  }

  int dimension() const override { return base_->dimension(); }
  std::string_view family() const override { return "modified"; }
  const InteractionPtr& base() const noexcept { return base_; }
  const std::map<Hyperedge, double>& overrides() const noexcept { return overrides_; }

  double coupling(const Hyperedge& b) const override {
    if (auto it = overrides_.find(b); it != overrides_.end()) return it->second;
    return base_->coupling(b);
  }

  std::optional<std::size_t> support_size(const Vertex& v) const override {
    auto n = base_->support_size(v);
    if (!n) return n;
    std::size_t count = *n;
    for (const auto& b : touching(v)) {
      const bool was = base_->coupling(b) != 0.0;
      const bool is = overrides_.at(b) != 0.0;
      if (was && !is) --count;
      if (!was && is) ++count;
    }
    return count;
  }

  std::vector<Coupling> hyperedges_at(const Vertex& v) const override {
    std::vector<Coupling> out;
    for (auto& c : base_->hyperedges_at(v)) {
      if (auto it = overrides_.find(c.edge); it != overrides_.end()) c.value = it->second;
      if (c.value != 0.0) out.push_back(std::move(c));
    }
    for (const auto& b : touching(v)) {
      const double j = overrides_.at(b);
      if (j != 0.0 && base_->coupling(b) == 0.0) out.push_back({b, j});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.edge < b.edge; });
    return out;
  }

  double total_strength(const Vertex& v) const override {
    double t = base_->total_strength(v);
    for (const auto& b : touching(v)) t += std::abs(overrides_.at(b)) - std::abs(base_->coupling(b));
    return t;
  }

  std::vector<Coupling> ring(const Vertex& v, const VertexSet& after, std::span<const Vertex> increment) const override {
    auto out = base_->ring(v, after, increment);
    const auto& mine = touching(v);
    if (mine.empty()) return out;
    std::vector<Coupling> kept;
    for (auto& c : out) {
      if (auto it = overrides_.find(c.edge); it != overrides_.end()) c.value = it->second;
      if (c.value != 0.0) kept.push_back(std::move(c));
    }
    for (const auto& b : mine) {
      const double j = overrides_.at(b);
      if (j == 0.0 || base_->coupling(b) != 0.0) continue;
      if (detail::inside(b, after) && detail::touches(b, increment)) kept.push_back({b, j});
    }
    return kept;
  }

  bool is_pairwise() const override {
    if (!base_->is_pairwise()) return false;
    return std::all_of(overrides_.begin(), overrides_.end(),
                       [](const auto& kv) { return kv.first.size() == 2 || kv.second == 0.0; });
  }

  std::unique_ptr<PartnerStream> partners(const Vertex& v) const override;

  std::vector<Vertex> exceptional_vertices() const override {
    auto ex = base_->exceptional_vertices();
    for (const auto& [u, _] : incidence_) ex.push_back(u);
    return make_region(std::move(ex));
  }

  std::optional<double> tail_moment_bound(const Vertex& v, std::int64_t r0, double slack) const override {
    // An override may move its partner later in a strength-ordered
    // sequence, so no bound is offered until every override is inside.
    for (const auto& e : touching(v))
      if (e.reach_from(v) >= r0) return std::nullopt;
    return base_->tail_moment_bound(v, r0, slack);
  }

  /// Number of overridden hyperedges containing v.
  std::size_t overrides_at(const Vertex& v) const { return touching(v).size(); }

 protected:
  double tail_impl(const Vertex& v, const Region& s) const override {
    double t = base_->tail_strength(v, s);
    for (const auto& b : touching(v))
      if (!detail::inside(b, s)) t += std::abs(overrides_.at(b)) - std::abs(base_->coupling(b));
    return std::max(0.0, t);
  }

  const std::vector<Hyperedge>& touching(const Vertex& v) const {
    static const std::vector<Hyperedge> none;
    auto it = incidence_.find(v);
    return it == incidence_.end() ? none : it->second;
  }

 private:
  InteractionPtr base_;
  std::map<Hyperedge, double> overrides_;
  std::map<Vertex, std::vector<Hyperedge>> incidence_;
};

namespace detail {

/// Base partner stream with overridden pairs removed, merged with the
/// overridden partners in the same order.
class MergedPartnerStream final : public PartnerStream {
 public:
  MergedPartnerStream(std::unique_ptr<PartnerStream> base, std::vector<Partner> extra, VertexSet skip, Vertex center)
      : base_(std::move(base)), extra_(std::move(extra)), skip_(std::move(skip)), center_(center) {
    advance_base();
  }

  std::optional<Partner> next() override {
    const bool have_extra = pos_ < extra_.size();
    if (!pending_ && !have_extra) return std::nullopt;
    if (pending_ && (!have_extra || partner_before(center_, *pending_, extra_[pos_]))) {
      auto out = *pending_;
      advance_base();
      return out;
    }
    return extra_[pos_++];
  }

 private:
  void advance_base() {
    pending_.reset();
    while (auto p = base_->next()) {
      if (!skip_.contains(p->vertex)) {
        pending_ = p;
        return;
      }
    }
  }

  std::unique_ptr<PartnerStream> base_;
  std::vector<Partner> extra_;
  std::size_t pos_ = 0;
  VertexSet skip_;
  Vertex center_;
  std::optional<Partner> pending_;
};

}  // namespace detail

inline std::unique_ptr<PartnerStream> Modified::partners(const Vertex& v) const {
  if (!is_pairwise()) throw error(errc::not_pairwise, "interaction has a hyperedge with more than two vertices");
  std::vector<Partner> extra;
  VertexSet skip;
  for (const auto& b : touching(v)) {
    const auto& vs = b.vertices();
    const Vertex u = vs[0] == v ? vs[1] : vs[0];
    skip.insert(u);
    if (double j = overrides_.at(b); j != 0.0) extra.push_back({u, std::abs(j)});
  }
  std::sort(extra.begin(), extra.end(), [&](const Partner& a, const Partner& b) { return partner_before(v, a, b); });
  return std::make_unique<detail::MergedPartnerStream>(base_->partners(v), std::move(extra), std::move(skip), v);
}

// ---------------------------------------------------------------------------

/// A base interaction with finitely many couplings multiplied by factors of
/// modulus at most one.
class Scaled final : public Modified {
 public:
  Scaled(InteractionPtr base, const std::vector<std::pair<Hyperedge, double>>& factors)
      : Modified(base, scaled_overrides(base, factors)), factors_(factors.begin(), factors.end()) {}

  std::string_view family() const override { return "scaled"; }
  const std::map<Hyperedge, double>& factors() const noexcept { return factors_; }

 private:
  static std::vector<Coupling> scaled_overrides(const InteractionPtr& base,
                                                const std::vector<std::pair<Hyperedge, double>>& factors) {
    if (!base) throw error(errc::invalid_model, "scaled interaction needs a base");
    std::vector<Coupling> out;
    for (const auto& [b, f] : factors) {
      if (!(std::abs(f) <= 1.0)) throw error(errc::invalid_model, "scale factors must satisfy |factor| <= 1");
      out.push_back({b, f * base->coupling(b)});
    }
    return out;
  }

  std::map<Hyperedge, double> factors_;
};

inline InteractionPtr make_zero_interaction(int dimension) {
  return std::make_shared<ExplicitFinite>(dimension, std::vector<Coupling>{});
}

}  // namespace perfsim
