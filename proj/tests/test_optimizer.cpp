#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace perfsim;
using perfsim::fixtures::v1;
using perfsim::fixtures::v2;

namespace {

InteractionPtr nn_ising(double beta) {
  return std::make_shared<PairTable>(1, std::vector<std::pair<Vertex, double>>{{v1(1), beta}});
}

double mu_of(const InteractionPtr& j, const RegionSequence& s) { return LambdaDistribution(j, s).birth_death_mu(1e-10).mid(); }

}  // namespace

TEST(IsingOptimal, SortsByMagnitude) {
  auto j = std::make_shared<ExplicitFinite>(1, std::vector<Coupling>{{Hyperedge(v1(0), v1(1)), 0.5},
                                                                     {Hyperedge(v1(0), v1(2)), -0.2},
                                                                     {Hyperedge(v1(0), v1(3)), 0.4}});
  auto s = ising_optimal_sequence(v1(0), *j);
  EXPECT_EQ(s.increments(5), (std::vector<std::vector<Vertex>>{{v1(1)}, {v1(3)}, {v1(2)}}));
}

TEST(IsingOptimal, TiesBrokenByDistanceThenCoordinates) {
  auto j = std::make_shared<ExplicitFinite>(2, std::vector<Coupling>{{Hyperedge(v2(0, 0), v2(2, 0)), 0.3},
                                                                     {Hyperedge(v2(0, 0), v2(0, 1)), 0.3},
                                                                     {Hyperedge(v2(0, 0), v2(-1, 0)), 0.3}});
  auto s = ising_optimal_sequence(v2(0, 0), *j);
  EXPECT_EQ(s.increments(5), (std::vector<std::vector<Vertex>>{{v2(-1, 0)}, {v2(0, 1)}, {v2(2, 0)}}));
  auto nn = ising_optimal_sequence(v1(4), *nn_ising(0.05));
  EXPECT_EQ(nn.increments(2), (std::vector<std::vector<Vertex>>{{v1(3)}, {v1(5)}}));
}

TEST(IsingOptimal, RejectsHigherOrderInteractions) {
  auto j = std::make_shared<ExplicitFinite>(1, std::vector<Coupling>{{Hyperedge({v1(0), v1(1), v1(2)}), 0.1}});
  try {
    (void)ising_optimal_sequence(v1(0), *j);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::not_pairwise);
  }
  EXPECT_THROW(mu_ising_closed_form(v1(0), *j, 1e-9), error);
}

TEST(ClosedForm, Examples) {
  EXPECT_EQ(mu_ising_closed_form(v1(0), *make_zero_interaction(1), 1e-9).lo, -1.0);
  EXPECT_NEAR(mu_ising_closed_form(v1(0), *nn_ising(0.05), 1e-9).mid(), -0.588691, 1e-6);
  auto edge = std::make_shared<ExplicitFinite>(1, std::vector<Coupling>{{Hyperedge(v1(0), v1(1)), 0.5}});
  EXPECT_NEAR(mu_ising_closed_form(v1(0), *edge, 1e-9).mid(), 0.264241, 1e-6);
}

TEST(ClosedForm, MatchesLambdaOnInfiniteSupport) {
  for (int d = 1; d <= 2; ++d) {
    auto g = std::make_shared<PairGeometric>(d, 0.03, 0.4);
    const Vertex o = Vertex::origin(d);
    const Interval closed = mu_ising_closed_form(o, *g, 1e-9);
    const Interval direct = LambdaDistribution(g, ising_optimal_sequence(o, *g)).birth_death_mu(1e-9);
    EXPECT_LE(closed.width(), 1e-9);
    EXPECT_TRUE(closed.overlaps(direct, 1e-12)) << closed << " vs " << direct;
  }
}

TEST(BruteForce, SingleHyperedge) {
  auto j = std::make_shared<ExplicitFinite>(1, std::vector<Coupling>{{Hyperedge({v1(0), v1(1), v1(2)}), 0.5}});
  auto r = brute_force_min(v1(0), j);
  EXPECT_EQ(r.candidates_evaluated, 1u);
  EXPECT_NEAR(r.best_mu.lo, 3.0 * (1.0 - std::exp(-1.0)) - 1.0, 1e-15);
}

TEST(BruteForce, NestedHyperedgesCollapse) {
  auto j = std::make_shared<ExplicitFinite>(1, std::vector<Coupling>{{Hyperedge(v1(0), v1(1)), 0.3},
                                                                     {Hyperedge({v1(0), v1(1), v1(2)}), 0.2}});
  auto r = brute_force_min(v1(0), j);
  EXPECT_EQ(r.candidates_evaluated, 2u);
}

TEST(BruteForce, Errors) {
  auto g = std::make_shared<PairGeometric>(1, 0.1, 0.5);
  try {
    (void)brute_force_min(v1(0), g);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::infinite_support);
  }
  CounterRng rng(2);
  auto big = fixtures::random_explicit(rng, 2, 9);
  try {
    (void)brute_force_min(v2(0, 0), big);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::too_many_hyperedges);
  }
}

TEST(BruteForce, SortedOrderIsOptimalForPairs) {
  CounterRng rng(31);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = 1 + trial % 2;
    auto j = fixtures::random_explicit(rng, d, 2 + static_cast<std::size_t>(trial) % 5, true);
    const Vertex o = Vertex::origin(d);
    auto r = brute_force_min(o, j);
    auto sorted = ising_optimal_sequence(o, *j);
    EXPECT_NEAR(r.best_mu.lo, mu_of(j, sorted), 1e-12);
    EXPECT_NEAR(r.best_mu.lo, mu_ising_closed_form(o, *j, 1e-9).mid(), 1e-12);
    bool found = false;
    for (const auto& s : r.argmin_sequences) found = found || (is_less_refined(s, sorted, 64) && is_less_refined(sorted, s, 64));
    EXPECT_TRUE(found);
    for (const auto& s : r.argmin_sequences) EXPECT_TRUE(validate_sequence(s, *j, 16).ok);
  }
}

TEST(Upsilon, SingleVertexBaseUnchanged) {
  auto j = nn_ising(0.05);
  auto base = ising_optimal_sequence(v1(0), *j);
  auto r = upsilon_refine(base, 2, j);
  EXPECT_EQ(r.candidates_evaluated, 2u);
  EXPECT_NEAR(r.best_mu.mid(), mu_of(j, base), 1e-12);
}

TEST(Upsilon, ZeroInteraction) {
  auto j = make_zero_interaction(2);
  auto r = upsilon_refine(RegionSequence::l1_balls(v2(0, 0)), 1, j);
  EXPECT_EQ(r.candidates_evaluated, 24u);
  EXPECT_EQ(r.argmin.size(), 24u);
  EXPECT_EQ(r.best_mu.lo, -1.0);
}

TEST(Upsilon, TwoDimensionalBallImprovementIdentity) {
  auto j = std::make_shared<PairGeometric>(2, 0.05, 0.3);
  const auto base = RegionSequence::l1_balls(v2(0, 0));
  const double base_mu = mu_of(j, base);
  auto r = upsilon_refine(base, 1, j);
  EXPECT_EQ(r.candidates_evaluated, 24u);
  ASSERT_FALSE(r.argmin_sequences.empty());
  LambdaDistribution best(j, r.argmin_sequences.front());
  double gain = 0.0;
  for (std::size_t i = 1; i <= 3; ++i) gain += static_cast<double>(5 - best.region_size(i)) * best.pmf(i);
  EXPECT_NEAR(r.best_mu.mid(), base_mu - gain, 1e-9);
  EXPECT_NEAR(r.best_mu.mid(), mu_of(j, r.argmin_sequences.front()), 1e-9);
  EXPECT_LE(r.best_mu.hi, base_mu + 1e-12);
  EXPECT_GT(gain, 0.0);
}

TEST(Upsilon, BlockTooLarge) {
  auto j = std::make_shared<PairGeometric>(2, 0.05, 0.3);
  try {
    (void)upsilon_refine(RegionSequence::l1_balls(v2(0, 0)), 2, j);
    FAIL();
  } catch (const error& e) {
    EXPECT_EQ(e.code(), errc::block_too_large);
  }
}

TEST(Upsilon, NeverWorseOnRandomInstances) {
  CounterRng rng(13);
  for (int trial = 0; trial < 15; ++trial) {
    auto j = fixtures::random_explicit(rng, 1, 4);
    auto base = fixtures::random_covering_sequence(rng, *j, v1(0));
    fixtures::materialize_all(base);
    const std::size_t n = std::min<std::size_t>(2, *base.length() - 1);
    if (base.size(n) - 1 > 8) continue;
    auto r = upsilon_refine(base, n, j);
    EXPECT_LE(r.best_mu.hi, mu_of(j, base) + 1e-12);
  }
}

TEST(CheckH1, Examples) {
  EXPECT_TRUE(check_H1(make_zero_interaction(1)).holds);
  auto r = check_H1(nn_ising(0.05));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.witness.mid(), 3.0 * (1.0 - std::exp(-0.2)), 1e-9);
  EXPECT_NEAR(r.witness.mid(), 0.543807, 1e-6);
  auto hot = check_H1(nn_ising(0.2));
  EXPECT_FALSE(hot.holds);
  EXPECT_NEAR(hot.witness.mid(), 1.652, 1e-3);
}

TEST(CheckH2, Examples) {
  SequenceSpec ising;
  auto r = check_H2(nn_ising(0.05), ising);
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.per_vertex.front().second.mid(), -0.5887, 1e-4);
  EXPECT_TRUE(check_H2(make_zero_interaction(2), SequenceSpec{SequencePolicy::l1_balls, {}}).holds);
}

TEST(CheckH2, SeparationExample) {
  auto base = std::make_shared<PairGeometric>(1, 0.02, 0.5);
  auto j = std::make_shared<Modified>(base, std::vector<Coupling>{{Hyperedge(v1(0), v1(1)), 1.0}});
  auto h1 = check_H1(j);
  auto h2 = check_H2(j, SequenceSpec{});
  EXPECT_FALSE(h1.holds);
  EXPECT_TRUE(h2.holds);
  EXPECT_EQ(h1.per_vertex.size(), 3u);
  EXPECT_FALSE(region_contains(Region{v1(0), v1(1)}, h2.per_vertex.front().first));
}

TEST(CheckH2, WeakerThanH1) {
  for (double beta : {0.01, 0.03, 0.05, 0.1}) {
    auto j = std::make_shared<PairGeometric>(2, beta, 0.3);
    if (check_H1(j, 1e-8).holds) {
      EXPECT_TRUE(check_H2(j, SequenceSpec{SequencePolicy::l1_balls, {}}, 1e-8).holds);
    }
  }
}

TEST(MakeSequence, ExplicitOffsetsAreRelative) {
  SequenceSpec spec{SequencePolicy::explicit_offsets, {{v1(1)}, {v1(-1), v1(2)}}};
  auto s = make_sequence(spec, *nn_ising(0.1), v1(10));
  EXPECT_EQ(s.increment(1), (std::vector<Vertex>{v1(11)}));
  EXPECT_EQ(s.increment(2), (std::vector<Vertex>{v1(9), v1(12)}));
  EXPECT_TRUE(s.materialize(6));
}
