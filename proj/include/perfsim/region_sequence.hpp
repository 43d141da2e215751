#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/vertex.hpp"

namespace perfsim {

/// Produces the increments B(k) \ B(k-1) of a region sequence, one per call.
/// Returning nullopt ends the sequence.
class IncrementSource {
 public:
  virtual ~IncrementSource() = default;
  virtual std::optional<std::vector<Vertex>> next(const VertexSet& included) = 0;
};

namespace detail {

/// L1 shells around the center minus what is already included; empty
/// shells are skipped so every increment is non-empty.
class ShellSource final : public IncrementSource {
 public:
  explicit ShellSource(Vertex center) : center_(center) {}

  std::optional<std::vector<Vertex>> next(const VertexSet& included) override {
    for (;;) {
      std::vector<Vertex> inc;
      for (auto& u : l1_sphere(center_, radius_))
        if (!included.contains(u)) inc.push_back(u);
      ++radius_;
      if (!inc.empty()) return inc;
    }
  }

 private:
  Vertex center_;
  std::int64_t radius_ = 1;
};

class ListSource final : public IncrementSource {
 public:
  ListSource(std::vector<std::vector<Vertex>> incs, std::unique_ptr<IncrementSource> then)
      : incs_(std::move(incs)), then_(std::move(then)) {}

  std::optional<std::vector<Vertex>> next(const VertexSet& included) override {
    if (pos_ < incs_.size()) return incs_[pos_++];
    if (then_) return then_->next(included);
    return std::nullopt;
  }

 private:
  std::vector<std::vector<Vertex>> incs_;
  std::size_t pos_ = 0;
  std::unique_ptr<IncrementSource> then_;
};

/// One partner per step, in decreasing |J| order.
class PartnerSource final : public IncrementSource {
 public:
  explicit PartnerSource(std::unique_ptr<PartnerStream> s) : stream_(std::move(s)) {}
  std::optional<std::vector<Vertex>> next(const VertexSet&) override {
    if (auto p = stream_->next()) return std::vector<Vertex>{p->vertex};
    return std::nullopt;
  }

 private:
  std::unique_ptr<PartnerStream> stream_;
};

}  // namespace detail

enum class SequenceProperty { starts_at_center = 1, strict_growth = 2, exhaustive = 3 };

struct SequenceDefect {
  SequenceProperty property;
  std::size_t step = 0;
  std::string message;
};

/// Increasing sequence of finite sets B(0) = {center} ⊂ B(1) ⊂ ... produced
/// lazily. Copies share the materialized prefix; extension is serialized.
class RegionSequence {
 public:
  /// A finite list of sets exactly as given. Violations of the nesting rules
  /// are recorded, not thrown, so `validate_sequence` can report them.
  static RegionSequence from_sets(const Vertex& center, const std::vector<Region>& sets) {
    std::vector<SequenceDefect> defects;
    std::vector<std::vector<Vertex>> incs;
    const Region start{center};
    if (sets.empty() || make_region(sets.front()) != start)
      defects.push_back({SequenceProperty::starts_at_center, 0, "B(0) must be exactly the center"});
    Region prev = start;
    for (std::size_t k = 1; k < sets.size(); ++k) {
      Region cur = make_region(sets[k]);
      if (!region_subset(prev, cur))
        defects.push_back({SequenceProperty::strict_growth, k, "B(k-1) is not contained in B(k)"});
      std::vector<Vertex> inc;
      std::set_difference(cur.begin(), cur.end(), prev.begin(), prev.end(), std::back_inserter(inc));
      if (inc.empty()) defects.push_back({SequenceProperty::strict_growth, k, "increment is empty"});
      incs.push_back(std::move(inc));
      prev = std::move(cur);
    }
    RegionSequence s(center, std::make_unique<detail::ListSource>(std::move(incs), nullptr), std::move(defects));
    s.kind_ = "explicit";
    return s;
  }

  /// Explicit increments; when `shell_continuation` is set the sequence
  /// continues with L1 shells, which makes it exhaustive on Z^d.
  static RegionSequence from_increments(const Vertex& center, std::vector<std::vector<Vertex>> incs,
                                        bool shell_continuation) {
    std::vector<SequenceDefect> defects;
    VertexSet seen{center};
    for (std::size_t k = 0; k < incs.size(); ++k) {
      auto& inc = incs[k];
      std::vector<Vertex> fresh;
      for (const auto& u : inc) {
        if (u.dimension() != center.dimension()) throw error(errc::invalid_sequence, "increment vertex has the wrong dimension");
        if (!seen.insert(u).second) {
          defects.push_back({SequenceProperty::strict_growth, k + 1, "increment repeats an included vertex"});
          continue;
        }
        fresh.push_back(u);
      }
      if (inc.empty()) defects.push_back({SequenceProperty::strict_growth, k + 1, "increment is empty"});
      inc = std::move(fresh);
    }
    const double slack = static_cast<double>(seen.size());
    std::unique_ptr<IncrementSource> then;
    if (shell_continuation) then = std::make_unique<detail::ShellSource>(center);
    RegionSequence s(center, std::make_unique<detail::ListSource>(std::move(incs), std::move(then)), std::move(defects));
    s.kind_ = "explicit";
    if (shell_continuation) s.growth_slack_ = slack;
    return s;
  }

  /// B(k) = L1 ball of radius k around the center.
  static RegionSequence l1_balls(const Vertex& center) {
    RegionSequence s(center, std::make_unique<detail::ShellSource>(center), {});
    s.kind_ = "l1_balls";
    s.growth_slack_ = 0.0;
    return s;
  }

  /// General lazy sequence. `growth_slack`, when given, certifies that any
  /// vertex u is added at a step l with |B(l)| <= |ball(|u - center|_1)| + slack.
  static RegionSequence from_source(const Vertex& center, std::unique_ptr<IncrementSource> source,
                                    std::optional<double> growth_slack, std::string kind) {
    RegionSequence s(center, std::move(source), {});
    s.kind_ = std::move(kind);
    s.growth_slack_ = growth_slack;
    return s;
  }

  const Vertex& center() const noexcept { return center_; }
  const std::string& kind() const noexcept { return kind_; }
  std::optional<double> growth_slack() const noexcept { return growth_slack_; }
  const std::vector<SequenceDefect>& defects() const noexcept { return state_->defects; }

  /// Makes B(k) available; false when the sequence ends before step k.
  bool materialize(std::size_t k) const {
    std::lock_guard lock(state_->mu);
    return extend_locked(k);
  }

  /// Number of sets currently known to exist (B(0) ... B(n-1)).
  std::size_t materialized() const {
    std::lock_guard lock(state_->mu);
    return state_->sizes.size();
  }

  /// Total number of sets when the sequence is finite and fully read.
  std::optional<std::size_t> length() const {
    std::lock_guard lock(state_->mu);
    if (!state_->ended) return std::nullopt;
    return state_->sizes.size();
  }

  std::size_t size(std::size_t k) const {
    std::lock_guard lock(state_->mu);
    require_locked(k);
    return state_->sizes[k];
  }

  /// B(k) \ B(k-1) for k >= 1; {center} for k = 0.
  std::vector<Vertex> increment(std::size_t k) const {
    std::lock_guard lock(state_->mu);
    require_locked(k);
    if (k == 0) return {center_};
    return state_->incs[k - 1];
  }

  Region region(std::size_t k) const {
    std::lock_guard lock(state_->mu);
    require_locked(k);
    std::vector<Vertex> all{center_};
    for (std::size_t i = 0; i < k; ++i) all.insert(all.end(), state_->incs[i].begin(), state_->incs[i].end());
    return make_region(std::move(all));
  }

  /// B(0), ..., B(min(horizon, last)).
  std::vector<Region> sets(std::size_t horizon) const {
    std::vector<Region> out;
    for (std::size_t k = 0; k <= horizon && materialize(k); ++k) out.push_back(region(k));
    return out;
  }

  /// Increments 1..n as written in output records.
  std::vector<std::vector<Vertex>> increments(std::size_t n) const {
    std::vector<std::vector<Vertex>> out;
    for (std::size_t k = 1; k <= n && materialize(k); ++k) out.push_back(increment(k));
    return out;
  }

 private:
  RegionSequence(const Vertex& center, std::unique_ptr<IncrementSource> source, std::vector<SequenceDefect> defects)
      : center_(center), state_(std::make_shared<State>()) {
    state_->source = std::move(source);
    state_->included.insert(center);
    state_->sizes.push_back(1);
    state_->defects = std::move(defects);
  }

  struct State {
    std::mutex mu;
    std::unique_ptr<IncrementSource> source;
    std::deque<std::vector<Vertex>> incs;
    std::vector<std::size_t> sizes;
    VertexSet included;
    std::vector<SequenceDefect> defects;
    bool ended = false;
  };

  bool extend_locked(std::size_t k) const {
    auto& st = *state_;
    while (st.sizes.size() <= k) {
      if (st.ended) return false;
      auto inc = st.source->next(st.included);
      if (!inc) {
        st.ended = true;
        return false;
      }
      std::size_t added = 0;
      for (const auto& u : *inc) added += st.included.insert(u).second ? 1 : 0;
      st.sizes.push_back(st.sizes.back() + added);
      st.incs.push_back(std::move(*inc));
    }
    return true;
  }

  void require_locked(std::size_t k) const {
    if (!extend_locked(k)) {
      std::ostringstream os;
      os << "sequence has no set at step " << k;
      throw error(errc::invalid_sequence, os.str());
    }
  }

  Vertex center_;
  std::shared_ptr<State> state_;
  std::string kind_;
  std::optional<double> growth_slack_;
};

// ---------------------------------------------------------------------------

struct SequenceValidation {
  bool ok = true;
  std::vector<SequenceDefect> violations;
  /// "exact" when coverage was checked against a finite hyperedge list,
  /// "by_construction" for exhaustive built-in sequences on infinite families.
  std::string exhaustiveness;
};

/// Checks B(0) = {v}, strict growth up to `horizon`, and coverage of every
/// hyperedge through v.
inline SequenceValidation validate_sequence(const RegionSequence& seq, const Interaction& j, std::size_t horizon) {
  if (horizon < 1) throw error(errc::invalid_sequence, "horizon must be at least 1");
  SequenceValidation out;
  const auto& v = seq.center();
  for (const auto& d : seq.defects())
    if (d.step <= horizon) out.violations.push_back(d);

  const auto n_v = j.support_size(v);
  if (n_v) {
    out.exhaustiveness = "exact";
    // Read the sequence until every hyperedge is covered, it ends, or it
    // stops being able to cover more (finite lists end eventually).
    VertexSet included{v};
    auto edges = j.hyperedges_at(v);
    auto covered = [&] {
      return std::all_of(edges.begin(), edges.end(), [&](const Coupling& c) { return detail::inside(c.edge, included); });
    };
    std::size_t k = 1;
    std::size_t cap = horizon;
    for (const auto& c : edges) cap = std::max<std::size_t>(cap, static_cast<std::size_t>(l1_ball_size(v.dimension(), c.edge.reach_from(v))));
    while (!covered() && k <= cap && seq.materialize(k)) {
      for (const auto& u : seq.increment(k)) included.insert(u);
      ++k;
    }
    if (!covered()) {
      for (const auto& c : edges) {
        if (!detail::inside(c.edge, included)) {
          std::ostringstream os;
          os << "hyperedge " << c.edge << " is never covered";
          out.violations.push_back({SequenceProperty::exhaustive, k, os.str()});
          break;
        }
      }
    }
  } else {
    out.exhaustiveness = "by_construction";
    if (!seq.growth_slack() && seq.kind() != "ising_optimal") {
      out.violations.push_back({SequenceProperty::exhaustive, 0,
                                "exhaustiveness cannot be certified for this sequence on an infinite family"});
    }
  }
  std::sort(out.violations.begin(), out.violations.end(),
            [](const auto& a, const auto& b) { return static_cast<int>(a.property) < static_cast<int>(b.property); });
  out.ok = out.violations.empty();
  return out;
}

/// True when B(0..horizon) of `a` occurs, in order, as a subsequence of `b`.
inline bool is_less_refined(const RegionSequence& a, const RegionSequence& b, std::size_t horizon) {
  if (a.center() != b.center()) throw error(errc::center_mismatch, "sequences have different centers");
  std::size_t j = 0;
  for (std::size_t i = 0; i <= horizon && a.materialize(i); ++i) {
    const std::size_t want = a.size(i);
    while (b.materialize(j) && b.size(j) < want) ++j;
    if (!b.materialize(j) || b.size(j) != want) return false;
    if (a.region(i) != b.region(j)) return false;
    ++j;
  }
  return true;
}

}  // namespace perfsim
