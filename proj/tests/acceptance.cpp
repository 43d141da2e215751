// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace perfsim;
using perfsim::fixtures::v1;
using perfsim::fixtures::v2;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << x;
  return os.str();
}

// 1. c_v = M [lambda(0)/2 + sum_k lambda(k) p^[k]] on random finite instances.
Verdict decomposition() {
  CounterRng rng(101);
  double worst = 0.0;
  int instances = 0;
  for (int t = 0; t < 25; ++t) {
    const int d = 1 + t % 2;
    auto j = fixtures::random_explicit(rng, d, 1 + static_cast<std::size_t>(t) % 6, false, 2);
    if (j->couplings().size() > 8) continue;
    LambdaDistribution l(j, fixtures::random_covering_sequence(rng, *j, Vertex::origin(d)));
    worst = std::max(worst, verify_decomposition(l, 100, rng));
    ++instances;
  }
  return {instances == 25 && worst <= 1e-10, std::to_string(instances) + " instances x 100 configurations, max residual " + fmt(worst)};
}

// 2. pmf sums to one and the CDF telescopes to exp(-T_n).
Verdict normalization() {
  CounterRng rng(202);
  double worst_sum = 0.0, worst_cdf = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int d = 1 + t % 2;
    auto j = fixtures::random_explicit(rng, d, 1 + static_cast<std::size_t>(t) % 7);
    LambdaDistribution l(j, fixtures::random_covering_sequence(rng, *j, Vertex::origin(d)));
    l.cdf(1000);
    double acc = 0.0;
    for (std::size_t n = 0; n <= *l.last_step(); ++n) {
      acc += l.pmf(n);
      const double want = n == 0 ? std::exp(-2.0 * l.total()) : std::exp(-l.tail(n));
      worst_cdf = std::max({worst_cdf, std::abs(acc - l.cdf(n)), std::abs(want - l.cdf(n))});
    }
    worst_sum = std::max(worst_sum, std::abs(acc - 1.0));
  }
  for (int d = 1; d <= 3; ++d) {
    auto g = std::make_shared<PairGeometric>(d, 0.05, 0.4);
    LambdaDistribution l(g, RegionSequence::l1_balls(Vertex::origin(d)));
    double acc = 0.0;
    for (std::size_t n = 0; n < 25; ++n) {
      acc += l.pmf(n);
      const double want = n == 0 ? std::exp(-2.0 * l.total()) : std::exp(-l.tail(n));
      worst_cdf = std::max({worst_cdf, std::abs(acc - l.cdf(n)), std::abs(want - l.cdf(n))});
      if (n > 0 && l.cdf(n) < l.cdf(n - 1)) worst_cdf = INFINITY;
    }
  }
  return {worst_sum <= 1e-12 && worst_cdf <= 1e-12,
          "max |sum - 1| " + fmt(worst_sum) + ", max CDF mismatch " + fmt(worst_cdf)};
}

// 3. A refinement has a pointwise larger reindexed CDF and no larger mu.
Verdict refinement() {
  CounterRng rng(303);
  int pairs = 0, violations = 0;
  for (int t = 0; pairs < 60; ++t) {
    const int d = 1 + t % 2;
    auto j = fixtures::random_explicit(rng, d, 1 + static_cast<std::size_t>(t) % 6);
    auto fine = fixtures::random_covering_sequence(rng, *j, Vertex::origin(d));
    auto coarse = fixtures::random_coarsening(rng, fine);
    if (!is_less_refined(coarse, fine, 64)) {
      ++violations;
      continue;
    }
    LambdaDistribution a(j, coarse), b(j, fine);
    if (!stochastically_dominates(a, b, 64)) ++violations;
    if (b.birth_death_mu(1e-9).hi > a.birth_death_mu(1e-9).lo + 1e-12) ++violations;
    ++pairs;
  }
  return {pairs >= 50 && violations == 0, std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations"};
}

// 4. Shrinking couplings raises the CDF and does not raise mu.
Verdict scaled() {
  CounterRng rng(404);
  int pairs = 0, violations = 0;
  for (int t = 0; t < 60; ++t) {
    const int d = 1 + t % 2;
    auto base = fixtures::random_explicit(rng, d, 1 + static_cast<std::size_t>(t) % 6);
    std::vector<std::pair<Hyperedge, double>> factors;
    for (const auto& c : base->couplings())
      if (rng.uniform() < 0.7) factors.emplace_back(c.edge, 2.0 * rng.uniform() - 1.0);
    auto tilde = std::make_shared<Scaled>(base, factors);
    auto seq = fixtures::random_covering_sequence(rng, *base, Vertex::origin(d));
    LambdaDistribution a(base, seq), b(tilde, seq);
    if (!stochastically_dominates(a, b, 64)) ++violations;
    if (b.birth_death_mu(1e-9).hi > a.birth_death_mu(1e-9).lo + 1e-12) ++violations;
    ++pairs;
  }
  return {pairs >= 50 && violations == 0, std::to_string(pairs) + " pairs, " + std::to_string(violations) + " violations"};
}

// 5. For pair interactions the sorted-coupling sequence minimizes mu.
Verdict sorted_optimal() {
  CounterRng rng(505);
  int instances = 0, failures = 0;
  double worst = 0.0;
  for (int t = 0; t < 30; ++t) {
    const int d = 1 + t % 2;
    auto j = fixtures::random_explicit(rng, d, 2 + static_cast<std::size_t>(t) % 6, true);
    const Vertex o = Vertex::origin(d);
    auto r = brute_force_min(o, j, 7);
    auto sorted = ising_optimal_sequence(o, *j);
    const double mu_sorted = LambdaDistribution(j, sorted).birth_death_mu(1e-9).lo;
    worst = std::max(worst, std::abs(r.best_mu.lo - mu_sorted));
    bool found = false;
    for (const auto& s : r.argmin_sequences) found = found || (is_less_refined(s, sorted, 64) && is_less_refined(sorted, s, 64));
    if (!found || std::abs(r.best_mu.lo - mu_sorted) > 1e-12) ++failures;
    ++instances;
  }
  return {instances >= 25 && failures == 0,
          std::to_string(instances) + " instances, max |min - mu(sorted)| " + fmt(worst) + ", " + std::to_string(failures) + " failures"};
}

// 6. A finite modification leaves lambda and mu untouched away from it.
Verdict far_field() {
  int vertices = 0, mismatches = 0;
  for (int d = 1; d <= 2; ++d) {
    auto base = std::make_shared<PairGeometric>(d, 0.03, 0.45);
    const Vertex o = Vertex::origin(d);
    Vertex e1 = o, e2 = o;
    e1[0] = 1;
    e2[d - 1] += 2;
    auto mod = std::make_shared<Modified>(base, std::vector<Coupling>{{Hyperedge(o, e1), 0.9}, {Hyperedge(o, e2), -0.5}});
    const auto touched = mod->exceptional_vertices();
    for (std::int64_t x = -6; x <= 6; ++x) {
      Vertex v = o;
      v[0] = x;
      if (d == 2) v[1] = x % 3;
      if (std::find(touched.begin(), touched.end(), v) != touched.end()) continue;
      for (auto policy : {SequencePolicy::ising_optimal, SequencePolicy::l1_balls}) {
        const SequenceSpec spec{policy, {}};
        LambdaDistribution a(base, make_sequence(spec, *base, v)), b(mod, make_sequence(spec, *mod, v));
        for (std::size_t n = 0; n < 30; ++n)
          if (a.cdf(n) != b.cdf(n) || a.pmf(n) != b.pmf(n)) ++mismatches;
        const auto ma = a.birth_death_mu(1e-9), mb = b.birth_death_mu(1e-9);
        if (ma.lo != mb.lo || ma.hi != mb.hi) ++mismatches;
      }
      ++vertices;
    }
  }
  return {mismatches == 0, std::to_string(vertices) + " vertices, " + std::to_string(mismatches) + " mismatches"};
}

// 7. A model failing H1 but satisfying H2 still samples.
Verdict separation() {
  auto base = std::make_shared<PairGeometric>(1, 0.02, 0.5);
  auto j = std::make_shared<Modified>(base, std::vector<Coupling>{{Hyperedge(v1(0), v1(1)), 1.0}});
  const auto h1 = check_H1(j);
  const auto h2 = check_H2(j, SequenceSpec{});
  SamplerRules rules(j, SequenceSpec{});
  int done = 0;
  std::size_t worst = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto rng = CounterRng::for_replica(707, i);
    try {
      worst = std::max(worst, perfect_sample({v1(0), v1(1)}, rules, rng).n_stop);
      ++done;
    } catch (const error& e) {
      if (e.code() != errc::step_limit_exceeded) throw;
    }
  }
  return {!h1.holds && h2.holds && done == 1000,
          "H1 value " + fmt(h1.witness.hi) + " (fails), far-field mu " + fmt(h2.witness.hi - 1.0) + " (H2 holds), " +
              std::to_string(done) + "/1000 replicas, max n_stop " + std::to_string(worst)};
}

// 8. Single edge beta = 0.3 against exact enumeration.
Verdict single_edge() {
  auto j = std::make_shared<ExplicitFinite>(1, std::vector<Coupling>{{Hyperedge(v1(0), v1(1)), 0.3}});
  SamplerRules rules(j, SequenceSpec{});
  const auto oracle = exact_gibbs_finite_support(*j);
  const std::size_t n = 100000;
  std::vector<std::uint64_t> counts(oracle.prob.size());
  for (std::uint64_t i = 0; i < n; ++i) {
    auto rng = CounterRng::for_replica(808, i);
    ++counts[oracle.pattern_of(perfect_sample(oracle.region, rules, rng).spins)];
  }
  const double p_equal = static_cast<double>(counts[0] + counts[3]) / static_cast<double>(n);
  const double target = 0.645656;
  const double sd = std::sqrt(target * (1.0 - target) / static_cast<double>(n));
  const auto fit = compare_empirical(counts, oracle, 0.001);
  return {std::abs(p_equal - target) <= 3.0 * sd && fit.p_value >= 0.001,
          "P(equal) " + fmt(p_equal) + " vs " + fmt(target) + " (3 sd " + fmt(3.0 * sd, 3) + "), chi-square p " + fmt(fit.p_value, 4)};
}

// 9. Nearest-neighbour Ising on Z: E[s0 s1] = tanh(beta).
Verdict nn_ising() {
  auto j = std::make_shared<PairTable>(1, std::vector<std::pair<Vertex, double>>{{v1(1), 0.05}});
  SamplerRules rules(j, SequenceSpec{});
  const std::size_t n = 100000;
  double sum = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto rng = CounterRng::for_replica(909, i);
    const auto s = perfect_sample({v1(0), v1(1)}, rules, rng).spins;
    sum += s.at(v1(0)) * s.at(v1(1));
  }
  const double mean = sum / static_cast<double>(n);
  const double target = std::tanh(0.05);
  return {std::abs(mean - target) <= 0.0095, "E[s0 s1] " + fmt(mean) + " vs tanh(0.05) " + fmt(target)};
}

// 10. Extinction of a subcritical spec and Galton-Watson sanity checks.
Verdict extinction() {
  ExtinctionSpec spec;
  spec.dimension = 1;
  spec.default_law = VertexLaw::from_pmf({0.6, 0.4}, {{v1(1)}}, 1.0);
  for (int i = 0; i < 10; ++i) spec.initial_set.push_back(v1(i));
  int died = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto rng = CounterRng::for_replica(1010, i);
    died += simulate(spec, rng, 1'000'000).extinct;
  }
  int gw_sub = 0, gw_super = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    auto a = CounterRng::for_replica(1011, i);
    gw_sub += galton_watson({0.3, 0.5, 0.2}, 100'000, a).extinct;
    auto b = CounterRng::for_replica(1012, i);
    gw_super += !galton_watson({0.2, 0.5, 0.3}, 200, b).extinct;
  }
  return {std::abs(eta(spec, v1(0)) + 0.2) < 1e-15 && died == 1000 && gw_sub == 1000 && gw_super >= 50,
          "eta -0.2 spec " + std::to_string(died) + "/1000 extinct, GW(0.9) " + std::to_string(gw_sub) +
              "/1000 extinct, GW(1.1) " + std::to_string(gw_super) + "/1000 survive"};
}

// 11. The extinction process built from lambda replays the backward sketch.
Verdict reduction() {
  auto j = std::make_shared<ExplicitFinite>(
      2, std::vector<Coupling>{{Hyperedge(v2(0, 0), v2(1, 0)), 0.5},
                               {Hyperedge({v2(0, 0), v2(0, 1), v2(1, 1)}), -0.4},
                               {Hyperedge(v2(3, 0), v2(3, 1)), 0.7}});
  const SequenceSpec seq{SequencePolicy::l1_balls, {}};
  const Region window{v2(0, 0), v2(1, 1), v2(3, 0)};
  const auto spec = spec_from_lambda(j, seq, window);
  int identical = 0;
  std::size_t events = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SamplerRules rules(j, seq);
    CounterRng a(seed), b(seed);
    const auto trace = backward_sketch(window, rules, a);
    std::vector<std::pair<Vertex, std::size_t>> ev;
    const auto out = simulate(spec, b, 10'000'000, [&](const Vertex& v, std::size_t k) { ev.emplace_back(v, k); });
    bool same = out.extinct && ev.size() == trace.events.size() && a.counter() == b.counter() &&
                out.max_set_size == trace.max_set_size;
    for (std::size_t i = 0; same && i < ev.size(); ++i)
      same = ev[i].first == trace.events[i].vertex && ev[i].second == trace.events[i].k;
    identical += same;
    events += ev.size();
  }
  return {identical == 10, std::to_string(identical) + "/10 seeds bit-identical (" + std::to_string(events) + " events)"};
}

std::string capture(const std::string& command) {
  std::string out;
  FILE* p = popen(command.c_str(), "r");
  if (!p) return "<popen failed>";
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return out + "\n<status " + std::to_string(status) + ">";
}

// 12. Every CLI command prints the same bytes when repeated with one seed.
Verdict reproducibility() {
  const std::string cli = PERFSIM_CLI;
  const std::string m = std::string(PERFSIM_MODELS_DIR) + "/";
  const std::vector<std::string> commands = {
      "sample --model " + m + "geometric_1d.json --window '0;1;2' --replicas 50 --seed 12",
      "sample --model " + m + "plaquette_2d.json --window '0,0;1,1' --replicas 50 --seed 12 --threads 2",
      "mu --model " + m + "separation.json --vertex 0",
      "optimize-seq --model " + m + "geometric_1d.json --method upsilon --seq l1_balls --n 2",
      "optimize-seq --model " + m + "triangle.json --method brute --vertex 0,0",
      "check --model " + m + "separation.json",
      "extinct --spec " + m + "extinction_subcritical.json --replicas 30 --seed 12",
      "validate --model " + m + "single_edge.json --replicas 2000 --seed 12",
  };
  int same = 0;
  for (const auto& c : commands) {
    const std::string line = cli + " " + c + " 2>/dev/null";
    const auto a = capture(line), b = capture(line);
    same += a == b && a.find("<status 0>") != std::string::npos && a.size() > 20;
  }
  return {same == static_cast<int>(commands.size()),
          std::to_string(same) + "/" + std::to_string(commands.size()) + " commands byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "decomposition identity", 10, decomposition},
      {2, "lambda normalization and CDF telescoping", 1, normalization},
      {3, "refinement dominance and mu monotonicity", 10, refinement},
      {4, "scaled couplings dominance", 10, scaled},
      {5, "sorted-coupling sequence is optimal", 60, sorted_optimal},
      {6, "far-field invariance under finite modification", 5, far_field},
      {7, "separation example: H1 fails, H2 holds, sampler runs", 60, separation},
      {8, "single edge beta=0.3 matches exact law", 120, single_edge},
      {9, "1D nearest-neighbour Ising correlation", 300, nn_ising},
      {10, "extinction and Galton-Watson", 60, extinction},
      {11, "extinction process reproduces the backward sketch", 5, reduction},
      {12, "CLI reproducibility", 10, reproducibility},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && secs <= c.budget_s;
    failed += !pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << c.id << " " << c.name << ": " << v.detail << " (" << std::fixed
              << std::setprecision(2) << secs << " s of " << std::setprecision(0) << c.budget_s << " s)" << std::endl;
    std::cout.unsetf(std::ios::fixed);
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all 12 criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
