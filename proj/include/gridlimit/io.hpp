#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gridlimit/extension.hpp"
#include "gridlimit/grid_function.hpp"
#include "gridlimit/lattice.hpp"
#include "gridlimit/radial.hpp"

namespace gridlimit {

using nlohmann::json;

inline json spec_to_json(const GridSpec& s) {
  return json{{"lattice", to_string(s.lattice)},
              {"dim", s.dim},
              {"epsilon", s.epsilon},
              {"window", s.window},
              {"truncation", "dirichlet_zero"}};
}

inline GridSpec spec_from_json(const json& j) {
  GridSpec s;
  s.lattice = lattice_from_string(j.at("lattice").get<std::string>());
  s.dim = j.at("dim").get<int>();
  s.epsilon = j.at("epsilon").get<double>();
  s.window = j.at("window").get<int>();
  s.validate();
  return s;
}

inline json quad_to_json(const EdgeQuadrature& q) {
  return json{{"n", q.n}, {"rule", to_string(q.rule)}};
}

inline EdgeQuadrature quad_from_json(const json& j) {
  EdgeQuadrature q;
  q.n = j.at("n").get<int>();
  q.rule = quad_rule_from_string(j.at("rule").get<std::string>());
  q.validate();
  return q;
}

/// Full listing of the grid: vertices, edges, cells and simplexes with the
/// construction ids.
inline json grid_to_json(const MetricGrid& g) {
  json j;
  j["spec"] = spec_to_json(g.spec);
  json verts = json::array();
  for (int v = 0; v < g.num_vertices(); ++v) {
    json coord = json::array(), key = json::array();
    for (int k = 0; k < g.dim; ++k) coord.push_back(g.vertex_coords[v][k]);
    for (int k = 0; k < (g.spec.lattice == Lattice::cubic ? g.dim : 2); ++k)
      key.push_back(g.vertex_keys[v][k]);
    verts.push_back(json{{"id", v}, {"key", key}, {"coord", coord},
                         {"boundary", static_cast<bool>(g.boundary_vertex[v])}});
  }
  j["vertices"] = std::move(verts);
  json edges = json::array();
  for (int e = 0; e < g.num_edges(); ++e) {
    json dir = json::array();
    for (int k = 0; k < g.dim; ++k) dir.push_back(g.edges[e].dir[k]);
    edges.push_back(json{{"id", e},
                         {"tail", g.edges[e].tail},
                         {"head", g.edges[e].head},
                         {"dir", dir},
                         {"length", g.edges[e].length}});
  }
  j["edges"] = std::move(edges);
  json cells = json::array();
  for (std::size_t c = 0; c < g.cells.size(); ++c)
    cells.push_back(json{{"id", c}, {"vertices", g.cells[c].vertices}});
  j["cells"] = std::move(cells);
  json simps = json::array();
  for (std::size_t s = 0; s < g.simplexes.size(); ++s)
    simps.push_back(json{{"id", s},
                         {"cell", g.simplexes[s].cell},
                         {"vertices", g.simplexes[s].vertices},
                         {"edges", g.simplexes[s].edges}});
  j["simplexes"] = std::move(simps);
  j["boundary_vertices"] = g.boundary_vertices();
  return j;
}

/// Grid functions serialize as the spec plus edge id -> sample array; the
/// grid itself is rebuilt deterministically on load.
inline json gridfn_to_json(const GridFunction& u) {
  json j;
  j["spec"] = spec_to_json(u.grid().spec);
  j["quad"] = quad_to_json(u.quad());
  json values = json::object();
  for (int e = 0; e < u.grid().num_edges(); ++e) {
    auto s = u.edge(e);
    values[std::to_string(e)] = std::vector<double>(s.begin(), s.end());
  }
  j["values"] = std::move(values);
  return j;
}

inline GridFunction gridfn_from_json(const json& j) {
  auto grid = make_grid(spec_from_json(j.at("spec")));
  GridFunction u(grid, quad_from_json(j.at("quad")));
  const auto& values = j.at("values");
  for (int e = 0; e < grid->num_edges(); ++e) {
    auto arr = values.at(std::to_string(e)).get<std::vector<double>>();
    if (arr.size() != static_cast<std::size_t>(u.quad().n + 1))
      throw std::invalid_argument("gridfn_from_json: sample count mismatch");
    auto s = u.edge(e);
    std::copy(arr.begin(), arr.end(), s.begin());
  }
  return u;
}

inline json extfn_to_json(const ExtendedFunction& f) {
  json j;
  j["spec"] = spec_to_json(f.grid().spec);
  j["vertex_values"] = f.vertex_values();
  return j;
}

inline ExtendedFunction extfn_from_json(const json& j) {
  auto grid = make_grid(spec_from_json(j.at("spec")));
  auto vv = j.at("vertex_values").get<std::vector<double>>();
  return ExtendedFunction(grid, std::move(vv));
}

inline json profile_to_json(const RadialProfile& p) {
  return json{{"d", p.d},           {"p", p.p},
              {"omega", p.omega},   {"u0", p.u0},
              {"h", p.h},           {"r", p.r},
              {"u", p.u},           {"du", p.du},
              {"decay_rate", p.decay_rate},
              {"tail_amplitude", p.tail_amplitude},
              {"mass", p.mass},     {"kinetic", p.kinetic},
              {"lp", p.lp},         {"energy", p.energy},
              {"action", p.action}};
}

inline RadialProfile profile_from_json(const json& j) {
  RadialProfile p;
  p.d = j.at("d").get<int>();
  p.p = j.at("p").get<double>();
  p.omega = j.at("omega").get<double>();
  p.u0 = j.at("u0").get<double>();
  p.h = j.at("h").get<double>();
  p.r = j.at("r").get<std::vector<double>>();
  p.u = j.at("u").get<std::vector<double>>();
  p.du = j.at("du").get<std::vector<double>>();
  p.decay_rate = j.at("decay_rate").get<double>();
  p.tail_amplitude = j.at("tail_amplitude").get<double>();
  p.mass = j.at("mass").get<double>();
  p.kinetic = j.at("kinetic").get<double>();
  p.lp = j.at("lp").get<double>();
  p.energy = j.at("energy").get<double>();
  p.action = j.at("action").get<double>();
  return p;
}

inline void save_json(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(1, '\t') << "\n";
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  json j;
  in >> j;
  return j;
}

/// Per-edge norm summary for debugging.
inline void export_edge_norms_csv(const GridFunction& u, std::ostream& out) {
  out << "edge,tail,head,l2_sq,h1_sq,linf\n";
  for (int e = 0; e < u.grid().num_edges(); ++e) {
    auto s = u.edge(e);
    double mx = 0.0;
    for (double v : s) mx = std::max(mx, std::abs(v));
    out << e << ',' << u.grid().edges[e].tail << ',' << u.grid().edges[e].head << ','
        << edge_sq_l2(u, e) << ',' << edge_sq_h1(u, e) << ',' << mx << "\n";
  }
}

}  // namespace gridlimit
