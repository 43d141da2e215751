#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perfsim/error.hpp"
#include "perfsim/extinction.hpp"
#include "perfsim/interaction.hpp"
#include "perfsim/sequence_optimizer.hpp"

namespace perfsim {

using json = nlohmann::json;

struct Model {
  InteractionPtr interaction;
  SequenceSpec sequence;
};

namespace io {

[[noreturn]] inline void bad(const std::string& what) { throw error(errc::config_error, what); }

/// A vertex is a list of coordinates; in one dimension a bare integer works too.
inline Vertex parse_vertex(const json& j, int dimension) {
  std::vector<std::int64_t> c;
  if (j.is_number_integer()) {
    c.push_back(j.get<std::int64_t>());
  } else if (j.is_array()) {
    for (const auto& x : j) {
      if (!x.is_number_integer()) bad("vertex coordinates must be integers");
      c.push_back(x.get<std::int64_t>());
    }
  } else {
    bad("vertex must be an integer list");
  }
  if (static_cast<int>(c.size()) != dimension) bad("vertex " + j.dump() + " does not have " + std::to_string(dimension) + " coordinates");
  return Vertex::from_span(c);
}

inline json vertex_json(const Vertex& v) {
  json a = json::array();
  for (int i = 0; i < v.dimension(); ++i) a.push_back(v[i]);
  return a;
}

inline std::vector<Vertex> parse_vertices(const json& j, int dimension) {
  if (!j.is_array()) bad("expected a list of vertices");
  std::vector<Vertex> out;
  for (const auto& x : j) out.push_back(parse_vertex(x, dimension));
  return out;
}

inline double number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) bad(std::string("missing numeric field '") + key + "'");
  return j[key].get<double>();
}

/// [[vertices...], value] pairs.
inline std::vector<Coupling> parse_couplings(const json& j, int dimension) {
  if (!j.is_array()) bad("expected a list of [[vertices], value] entries");
  std::vector<Coupling> out;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[1].is_number()) bad("entry " + e.dump() + " is not [[vertices], value]");
    try {
      out.push_back({Hyperedge(parse_vertices(e[0], dimension)), e[1].get<double>()});
    } catch (const error& ex) {
      bad(ex.what());
    }
  }
  return out;
}

inline InteractionPtr parse_interaction(const json& j, int dimension) {
  if (!j.is_object()) bad("model must be an object");
  if (j.contains("dimension")) {
    if (!j["dimension"].is_number_integer()) bad("dimension must be an integer");
    dimension = j["dimension"].get<int>();
  }
  if (dimension < 1 || dimension > 3) bad("dimension must be 1, 2 or 3");
  if (!j.contains("family") || !j["family"].is_string()) bad("missing 'family'");
  const auto family = j["family"].get<std::string>();
  try {
    if (family == "explicit") {
      return std::make_shared<ExplicitFinite>(dimension, parse_couplings(j.value("edges", json::array()), dimension));
    }
    if (family == "pair_table") {
      std::vector<std::pair<Vertex, double>> table;
      for (const auto& e : j.value("table", json::array())) {
        if (!e.is_array() || e.size() != 2 || !e[1].is_number()) bad("table entry " + e.dump() + " is not [offset, value]");
        table.emplace_back(parse_vertex(e[0], dimension), e[1].get<double>());
      }
      return std::make_shared<PairTable>(dimension, std::move(table));
    }
    if (family == "pair_geometric") {
      return std::make_shared<PairGeometric>(dimension, number(j, "beta"), number(j, "gamma"));
    }
    if (family == "modified" || family == "scaled") {
      if (!j.contains("base")) bad("'" + family + "' needs a 'base' model");
      auto base = parse_interaction(j["base"], dimension);
      if (family == "modified")
        return std::make_shared<Modified>(base, parse_couplings(j.value("overrides", json::array()), dimension));
      std::vector<std::pair<Hyperedge, double>> factors;
      for (auto& c : parse_couplings(j.value("factors", json::array()), dimension)) factors.emplace_back(c.edge, c.value);
      return std::make_shared<Scaled>(base, factors);
    }
  } catch (const error& ex) {
    if (ex.code() == errc::config_error) throw;
    bad(ex.what());
  }
  bad("unknown family '" + family + "'");
}

inline SequenceSpec parse_sequence(const json& j, int dimension) {
  SequenceSpec s;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "ising_optimal") s.policy = SequencePolicy::ising_optimal;
    else if (name == "l1_balls") s.policy = SequencePolicy::l1_balls;
    else bad("unknown sequence policy '" + name + "'");
    return s;
  }
  if (j.is_object() && j.contains("explicit")) {
    s.policy = SequencePolicy::explicit_offsets;
    for (const auto& inc : j["explicit"]) s.offsets.push_back(parse_vertices(inc, dimension));
    return s;
  }
  bad("sequence must be 'ising_optimal', 'l1_balls' or {\"explicit\": [...]}");
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) bad("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    bad("cannot parse '" + path + "': " + ex.what());
  }
}

}  // namespace io

/// Model document: dimension, family and payload, optional sequence policy
/// (default ising_optimal for pair interactions, l1_balls otherwise).
inline Model parse_model(const json& j) {
  Model m;
  m.interaction = io::parse_interaction(j, 0);
  const int d = m.interaction->dimension();
  if (j.contains("sequence")) {
    m.sequence = io::parse_sequence(j["sequence"], d);
  } else {
    m.sequence.policy = m.interaction->is_pairwise() ? SequencePolicy::ising_optimal : SequencePolicy::l1_balls;
  }
  return m;
}

inline Model load_model(const std::string& path) { return parse_model(io::read_json_file(path)); }

namespace io {

inline VertexLaw parse_law(const json& j, int dimension) {
  if (!j.is_object() || !j.contains("psi")) bad("a vertex law needs 'psi'");
  const auto psi = j["psi"].get<std::vector<double>>();
  std::vector<std::vector<Vertex>> regions;
  if (j.contains("regions")) {
    for (const auto& r : j["regions"]) regions.push_back(parse_vertices(r, dimension));
  } else if (j.contains("region_sizes")) {
    // S(l) of the given size along the first axis.
    for (const auto& n : j["region_sizes"]) {
      std::vector<Vertex> r;
      for (std::int64_t i = 1; i <= n.get<std::int64_t>(); ++i) {
        Vertex u = Vertex::origin(dimension);
        u[0] = i;
        r.push_back(u);
      }
      regions.push_back(std::move(r));
    }
  } else {
    regions.resize(psi.empty() ? 0 : psi.size() - 1);
  }
  return VertexLaw::from_pmf(psi, std::move(regions), j.value("mass", 1.0));
}

}  // namespace io

/// Extinction document: dimension, default law, optional named classes and
/// exceptional vertices, and the initial set.
inline ExtinctionSpec parse_extinction_spec(const json& j) {
  ExtinctionSpec s;
  try {
    s.dimension = j.value("dimension", 1);
    if (s.dimension < 1 || s.dimension > 3) io::bad("dimension must be 1, 2 or 3");
    if (!j.contains("default")) io::bad("missing 'default' law");
    s.default_law = io::parse_law(j["default"], s.dimension);
    const json classes = j.value("classes", json::object());
    for (const auto& [name, law] : classes.items()) s.classes[name] = io::parse_law(law, s.dimension);
    for (const auto& e : j.value("exceptional", json::array())) {
      if (!e.is_array() || e.size() != 2 || !e[1].is_string()) io::bad("exceptional entry must be [vertex, class]");
      s.exceptional[io::parse_vertex(e[0], s.dimension)] = e[1].get<std::string>();
    }
    s.initial_set = make_region(io::parse_vertices(j.value("initial_set", json::array()), s.dimension));
    s.validate();
  } catch (const json::exception& ex) {
    io::bad(ex.what());
  }
  return s;
}

inline ExtinctionSpec load_extinction_spec(const std::string& path) {
  return parse_extinction_spec(io::read_json_file(path));
}

}  // namespace perfsim
