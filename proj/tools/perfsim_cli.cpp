#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "perfsim/cli_runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Perfect sampling of Gibbs measures on Z^d"};
  app.require_subcommand(1);
  perfsim::ExperimentConfig c;

  auto common = [&](CLI::App* s) {
    s->add_option("--model", c.model_path, "Model file (JSON)");
    s->add_option("--seed", c.seed, "Seed; replica i uses the stream derived from (seed, i)");
    s->add_option("--seq", c.seq, "Sequence policy override: ising_optimal or l1_balls");
    s->add_option("--tolerance", c.tolerance, "Width bound for mu intervals");
  };

  auto* sample = app.add_subcommand("sample", "Draw perfect samples on a window");
  common(sample);
  sample->add_option("--window", c.window, "Vertices, e.g. '0;1' or '0,0;1,0'");
  sample->add_option("--replicas", c.replicas);
  sample->add_option("--max-steps", c.max_steps);
  sample->add_option("--threads", c.threads, "Worker threads (0: all cores)");
  sample->add_option("--require", c.require, "Refuse to run unless h1 or h2 holds");

  auto* mu = app.add_subcommand("mu", "Birth-death expectation at a vertex");
  common(mu);
  mu->add_option("--vertex", c.vertex, "Vertex (default: far field)");

  auto* opt = app.add_subcommand("optimize-seq", "Optimize the region sequence at a vertex");
  common(opt);
  opt->add_option("--vertex", c.vertex);
  opt->add_option("--method", c.method, "ising, brute or upsilon");
  opt->add_option("--n", c.n, "Block index N for upsilon");
  opt->add_option("--cap", c.cap, "Enumeration cap");
  opt->add_option("--horizon", c.horizon, "Increments to print for infinite sequences");

  auto* check = app.add_subcommand("check", "Evaluate conditions H1 and H2");
  common(check);
  check->add_option("--require", c.require, "Exit 4 unless h1 or h2 holds");

  auto* extinct = app.add_subcommand("extinct", "Simulate a generalized birth-death process");
  extinct->add_option("--spec", c.spec_path, "Extinction spec file (JSON)");
  extinct->add_option("--seed", c.seed);
  extinct->add_option("--replicas", c.replicas, "Number of runs");
  extinct->add_option("--max-steps", c.max_steps);
  extinct->add_option("--threads", c.threads);
  extinct->add_option("--delta", c.delta, "delta for the exceptional region");

  auto* validate = app.add_subcommand("validate", "Compare perfect samples with exact enumeration");
  common(validate);
  validate->add_option("--window", c.window, "Region (default: union of the hyperedges)");
  validate->add_option("--replicas", c.replicas);
  validate->add_option("--max-steps", c.max_steps);
  validate->add_option("--threads", c.threads);
  validate->add_option("--alpha", c.alpha);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : perfsim::exit_code::config;
  }
  return perfsim::run(app.get_subcommands().front()->get_name(), c, std::cout, std::cerr);
}
