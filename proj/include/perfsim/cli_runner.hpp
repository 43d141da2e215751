#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "perfsim/error.hpp"
#include "perfsim/exact_oracle.hpp"
#include "perfsim/extinction.hpp"
#include "perfsim/model_io.hpp"
#include "perfsim/perfect_sampler.hpp"
#include "perfsim/sequence_optimizer.hpp"

namespace perfsim {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;
inline constexpr int step_limit = 3;
inline constexpr int condition_failed = 4;
inline constexpr int validation_failed = 5;
}  // namespace exit_code

struct ExperimentConfig {
  std::string model_path;
  std::string spec_path;
  std::uint64_t seed = 0;
  std::size_t replicas = 1;
  std::string window;  // "0;1" or "0,0;1,0"
  std::string vertex;  // same syntax, single vertex
  std::string seq;     // overrides the model's sequence policy
  std::size_t max_steps = 10'000'000;
  unsigned threads = 0;  // 0: all cores
  std::string require;   // "", "h1" or "h2"
  double tolerance = 1e-9;
  double alpha = 0.001;
  std::string method;    // optimize-seq: ising | brute | upsilon
  std::size_t n = 1;     // upsilon block index
  std::size_t cap = 8;
  std::size_t horizon = 16;
  double delta = 0.05;
};

namespace cli {

inline std::vector<Vertex> parse_vertex_list(const std::string& text, int dimension) {
  std::vector<Vertex> out;
  std::stringstream all(text);
  std::string item;
  while (std::getline(all, item, ';')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<std::int64_t> c;
    std::stringstream coords(item);
    std::string x;
    while (std::getline(coords, x, ',')) {
      try {
        std::size_t used = 0;
        c.push_back(std::stoll(x, &used));
        if (x.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(x);
      } catch (const std::exception&) {
        throw error(errc::config_error, "bad coordinate '" + x + "' in '" + text + "'");
      }
    }
    if (static_cast<int>(c.size()) != dimension)
      throw error(errc::config_error, "vertex '" + item + "' needs " + std::to_string(dimension) + " coordinates");
    out.push_back(Vertex::from_span(c));
  }
  return out;
}

inline int code_for(errc e) {
  switch (e) {
    case errc::step_limit_exceeded: return exit_code::step_limit;
    case errc::internal_invariant_violation:
    case errc::numerical_inconsistency:
    case errc::unassigned_spin: return exit_code::internal;
    default: return exit_code::config;
  }
}

inline json interval_json(const Interval& i) { return {{"lo", i.lo}, {"hi", i.hi}}; }

inline json descriptor_json(const SequenceDescriptor& d) {
  json a = json::array();
  for (const auto& inc : d) {
    json b = json::array();
    for (const auto& u : inc) b.push_back(io::vertex_json(u));
    a.push_back(std::move(b));
  }
  return a;
}

inline json record(const std::string& type) { return {{"schema", 1}, {"type", type}}; }

inline void emit(std::ostream& out, const json& j) { out << j.dump() << '\n'; }

inline Model load(const ExperimentConfig& c) {
  if (c.model_path.empty()) throw error(errc::config_error, "--model is required");
  auto m = load_model(c.model_path);
  if (!c.seq.empty()) m.sequence = io::parse_sequence(json(c.seq), m.interaction->dimension());
  return m;
}

inline Vertex vertex_or_far_field(const ExperimentConfig& c, const Interaction& j) {
  if (c.vertex.empty()) return j.far_field_representative();
  auto vs = parse_vertex_list(c.vertex, j.dimension());
  if (vs.size() != 1) throw error(errc::config_error, "--vertex takes exactly one vertex");
  return vs.front();
}

inline json condition_json(const ConditionReport& r) {
  json j = record("check");
  j["condition"] = r.condition;
  j["holds"] = r.holds;
  j["witness"] = interval_json(r.witness);
  j["evaluated_at"] = r.evaluation_vertex_class;
  json per = json::array();
  for (const auto& [v, i] : r.per_vertex) per.push_back({{"vertex", io::vertex_json(v)}, {"value", interval_json(i)}});
  j["per_vertex"] = std::move(per);
  return j;
}

/// Runs `work(i, state)` for i in [0, n) over `threads` workers, each with its
/// own state from `make_state()`. Results land in index order.
template <class Result, class MakeState, class Work>
std::vector<Result> parallel_replicas(std::size_t n, unsigned threads, MakeState make_state, Work work) {
  std::vector<Result> results(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> failures(threads);
  auto body = [&](unsigned t) {
    try {
      auto state = make_state();
      for (std::size_t i = t; i < n; i += threads) results[i] = work(i, state);
    } catch (...) {
      failures[t] = std::current_exception();
    }
  };
  if (threads == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(body, t);
    for (auto& th : pool) th.join();
  }
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);
  return results;
}

struct ReplicaResult {
  std::optional<SampleResult> sample;
  std::string failure;
};

inline std::vector<ReplicaResult> sample_replicas(const Model& m, const Region& window, const ExperimentConfig& c) {
  return parallel_replicas<ReplicaResult>(
      c.replicas, c.threads, [&] { return SamplerRules(m.interaction, m.sequence); },
      [&](std::size_t i, SamplerRules& rules) {
        ReplicaResult r;
        auto rng = CounterRng::for_replica(c.seed, i);
        try {
          r.sample = perfect_sample(window, rules, rng, c.max_steps);
        } catch (const error& e) {
          if (e.code() != errc::step_limit_exceeded) throw;
          r.failure = e.what();
        }
        return r;
      });
}

inline bool require_conditions(const Model& m, const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  if (c.require.empty()) return true;
  if (c.require != "h1" && c.require != "h2") throw error(errc::config_error, "--require takes h1 or h2");
  const auto r = c.require == "h1" ? check_H1(m.interaction, c.tolerance) : check_H2(m.interaction, m.sequence, c.tolerance);
  if (!r.holds) {
    emit(out, condition_json(r));
    err << "condition " << r.condition << " fails (witness " << r.witness << "); refusing to run\n";
  }
  return r.holds;
}

inline int cmd_sample(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto m = load(c);
  const int d = m.interaction->dimension();
  auto window = c.window.empty() ? std::vector<Vertex>{Vertex::origin(d)} : parse_vertex_list(c.window, d);
  if (window.empty()) throw error(errc::empty_window, "window must contain at least one vertex");
  const Region w = make_region(window);
  if (!require_conditions(m, c, out, err)) return exit_code::condition_failed;

  const auto results = sample_replicas(m, w, c);
  bool limit_hit = false;
  double n_stop_sum = 0.0;
  std::size_t n_stop_max = 0, done = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    json j = record("sample");
    j["replica"] = i;
    j["seed"] = c.seed;
    if (!results[i].sample) {
      j["error"] = results[i].failure;
      limit_hit = true;
      emit(out, j);
      continue;
    }
    const auto& s = *results[i].sample;
    json spins = json::array();
    for (const auto& v : w) spins.push_back({io::vertex_json(v), s.spins.at(v)});
    j["spins"] = std::move(spins);
    j["n_stop"] = s.n_stop;
    j["max_set_size"] = s.max_set_size;
    j["visited"] = s.visited;
    emit(out, j);
    n_stop_sum += static_cast<double>(s.n_stop);
    n_stop_max = std::max(n_stop_max, s.n_stop);
    ++done;
  }
  err << "sample: " << done << "/" << results.size() << " replicas finished";
  if (done) err << ", mean n_stop " << n_stop_sum / static_cast<double>(done) << ", max n_stop " << n_stop_max;
  err << '\n';
  return limit_hit ? exit_code::step_limit : exit_code::ok;
}

inline int cmd_mu(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto m = load(c);
  const Vertex v = vertex_or_far_field(c, *m.interaction);
  LambdaDistribution dist(m.interaction, make_sequence(m.sequence, *m.interaction, v));
  const auto mu = dist.birth_death_mu(c.tolerance);
  json j = record("mu");
  j["vertex"] = io::vertex_json(v);
  j["sequence"] = to_string(m.sequence.policy);
  j["mu"] = interval_json(mu);
  j["lambda_0"] = dist.pmf(0);
  j["mass"] = dist.mass();
  emit(out, j);
  err << "mu at " << v << " = " << mu << '\n';
  return exit_code::ok;
}

inline int cmd_optimize(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto m = load(c);
  const auto& jp = m.interaction;
  const Vertex v = vertex_or_far_field(c, *jp);
  std::string method = c.method;
  if (method.empty()) method = jp->is_pairwise() ? "ising" : "brute";
  json j = record("optimize");
  j["vertex"] = io::vertex_json(v);
  j["method"] = method;
  if (method == "ising") {
    auto seq = ising_optimal_sequence(v, *jp);
    LambdaDistribution dist(jp, seq);
    j["best_mu"] = interval_json(dist.birth_death_mu(c.tolerance));
    j["closed_form_mu"] = interval_json(mu_ising_closed_form(v, *jp, c.tolerance));
    j["argmin"] = json::array({descriptor_json(seq.increments(c.horizon))});
    j["candidates_evaluated"] = 1;
  } else if (method == "brute" || method == "upsilon") {
    const auto r = method == "brute"
                       ? brute_force_min(v, jp, c.cap)
                       : upsilon_refine(make_sequence(m.sequence, *jp, v), c.n, jp, c.cap, c.tolerance);
    j["best_mu"] = interval_json(r.best_mu);
    json a = json::array();
    for (const auto& d : r.argmin) a.push_back(descriptor_json(d));
    j["argmin"] = std::move(a);
    j["candidates_evaluated"] = r.candidates_evaluated;
  } else {
    throw error(errc::config_error, "--method takes ising, brute or upsilon");
  }
  emit(out, j);
  err << "optimize-seq (" << method << ") at " << v << ": mu in [" << j["best_mu"]["lo"].get<double>() << ", "
      << j["best_mu"]["hi"].get<double>() << "]\n";
  return exit_code::ok;
}

inline int cmd_check(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto m = load(c);
  const auto h1 = check_H1(m.interaction, c.tolerance);
  const auto h2 = check_H2(m.interaction, m.sequence, c.tolerance);
  emit(out, condition_json(h1));
  emit(out, condition_json(h2));
  err << "H1 " << (h1.holds ? "holds" : "fails") << " (value " << h1.witness << ")\n";
  err << "H2 " << (h2.holds ? "holds" : "fails") << " (mu + 1 " << h2.witness << ")\n";
  if (c.require == "h1" && !h1.holds) return exit_code::condition_failed;
  if (c.require == "h2" && !h2.holds) return exit_code::condition_failed;
  if (!c.require.empty() && c.require != "h1" && c.require != "h2")
    throw error(errc::config_error, "--require takes h1 or h2");
  return exit_code::ok;
}

inline int cmd_extinct(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const std::string path = c.spec_path.empty() ? c.model_path : c.spec_path;
  if (path.empty()) throw error(errc::config_error, "--spec is required");
  const auto spec = load_extinction_spec(path);

  json h = record("hypotheses");
  try {
    const auto r = check_hypotheses(spec, c.delta);
    h["holds"] = r.holds;
    h["far_field_eta"] = r.far_field_eta;
    h["xi"] = r.xi;
    h["class_eta"] = r.class_eta;
    json rows = json::array();
    for (const auto& row : {r.primary, r.sensitivity[0], r.sensitivity[1]}) {
      json x = {{"delta", row.delta}, {"region_finite", row.region_finite}};
      if (row.region_finite) {
        json reg = json::array();
        for (const auto& v : row.region) reg.push_back(io::vertex_json(v));
        x["region"] = std::move(reg);
        x["a"] = row.a;
        x["threshold"] = row.threshold;
      }
      rows.push_back(std::move(x));
    }
    h["rows"] = std::move(rows);
  } catch (const error& e) {
    if (e.code() != errc::infinite_exceptional_region) throw;
    h["holds"] = false;
    h["error"] = e.what();
  }
  emit(out, h);

  struct Run {
    ExtinctionOutcome outcome;
  };
  const auto runs = parallel_replicas<Run>(
      c.replicas, c.threads, [] { return 0; },
      [&](std::size_t i, int&) {
        auto rng = CounterRng::for_replica(c.seed, i);
        return Run{simulate(spec, rng, c.max_steps)};
      });
  std::size_t extinct = 0;
  double time_sum = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& o = runs[i].outcome;
    json j = record("extinct");
    j["run"] = i;
    j["extinct"] = o.extinct;
    j["time"] = o.time;
    j["max_set_size"] = o.max_set_size;
    emit(out, j);
    if (o.extinct) {
      ++extinct;
      time_sum += static_cast<double>(o.time);
    }
  }
  json s = record("extinct_summary");
  s["runs"] = runs.size();
  s["extinction_fraction"] = runs.empty() ? 0.0 : static_cast<double>(extinct) / static_cast<double>(runs.size());
  s["mean_time_extinct"] = extinct ? time_sum / static_cast<double>(extinct) : 0.0;
  emit(out, s);
  err << "extinct: " << extinct << "/" << runs.size() << " runs died out\n";
  return exit_code::ok;
}

inline int cmd_validate(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
  const auto m = load(c);
  const auto* ef = dynamic_cast<const ExplicitFinite*>(m.interaction.get());
  if (!ef) throw error(errc::unsupported_model_class, "validate needs an explicit finite model");
  Region region;
  if (!c.window.empty()) region = make_region(parse_vertex_list(c.window, ef->dimension()));
  const auto oracle = exact_gibbs_finite_support(*ef, region);
  if (oracle.region.empty()) throw error(errc::empty_window, "nothing to validate: no hyperedges and no window");

  const auto results = sample_replicas(m, oracle.region, c);
  std::vector<std::uint64_t> counts(oracle.prob.size(), 0);
  for (const auto& r : results) {
    if (!r.sample) {
      err << "validate: " << r.failure << '\n';
      return exit_code::step_limit;
    }
    ++counts[oracle.pattern_of(r.sample->spins)];
  }
  const auto g = compare_empirical(counts, oracle, c.alpha);
  json j = record("validate");
  json reg = json::array();
  for (const auto& v : oracle.region) reg.push_back(io::vertex_json(v));
  j["region"] = std::move(reg);
  j["replicas"] = results.size();
  j["counts"] = counts;
  j["expected"] = oracle.prob;
  j["chi_square"] = g.chi_square;
  j["dof"] = g.degrees_of_freedom;
  j["p_value"] = g.p_value;
  j["marginal_z"] = g.marginal_z;
  j["z_critical"] = g.z_critical;
  j["alpha"] = c.alpha;
  j["pass"] = g.pass;
  emit(out, j);
  err << "validate: chi-square " << g.chi_square << " on " << g.degrees_of_freedom << " dof, p = " << g.p_value
      << (g.pass ? " (pass)" : " (FAIL)") << '\n';
  return g.pass ? exit_code::ok : exit_code::validation_failed;
}

}  // namespace cli

/// Dispatches a subcommand. JSON lines go to `out`, a summary to `err`.
inline int run(const std::string& command, const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  try {
    if (command == "sample") return cli::cmd_sample(config, out, err);
    if (command == "mu") return cli::cmd_mu(config, out, err);
    if (command == "optimize-seq") return cli::cmd_optimize(config, out, err);
    if (command == "check") return cli::cmd_check(config, out, err);
    if (command == "extinct") return cli::cmd_extinct(config, out, err);
    if (command == "validate") return cli::cmd_validate(config, out, err);
    err << "unknown command '" << command << "'\n";
    return exit_code::config;
  } catch (const error& e) {
    err << "error: " << e.what() << '\n';
    return cli::code_for(e.code());
  } catch (const json::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::config;
  }
}

}  // namespace perfsim
