#pragma once

// Generators of test functions on metric grids, shared across suites.

#include <cmath>
#include <random>

#include "gridlimit/grid_function.hpp"
#include "gridlimit/lattice.hpp"

namespace testutil {

// Random compactly supported, vertex-consistent grid function: random vertex
// values inside a support box plus smooth random per-edge profiles vanishing
// at the endpoints. support_margin is the number of boundary layers (in units
// of eps) forced to zero.
inline gridlimit::GridFunction random_grid_function(
    std::shared_ptr<const gridlimit::MetricGrid> grid, gridlimit::EdgeQuadrature quad,
    std::mt19937_64& rng, double support_radius = -1.0, double amplitude = 1.0) {
  using namespace gridlimit;
  GridFunction u(grid, quad);
  const MetricGrid& g = *grid;
  std::uniform_real_distribution<double> unif(-amplitude, amplitude);

  auto inside = [&](int v) {
    if (support_radius < 0) return !static_cast<bool>(g.boundary_vertex[v]);
    double m = 0;
    for (int k = 0; k < g.dim; ++k) m = std::max(m, std::abs(g.vertex_coords[v][k]));
    return m <= support_radius && !g.boundary_vertex[v];
  };

  std::vector<double> vval(g.num_vertices(), 0.0);
  for (int v = 0; v < g.num_vertices(); ++v)
    if (inside(v)) vval[v] = unif(rng);

  const int n = quad.n;
  for (int e = 0; e < g.num_edges(); ++e) {
    auto s = u.edge(e);
    double a = vval[g.edges[e].tail], b = vval[g.edges[e].head];
    double bump1 = (a != 0.0 || b != 0.0) ? 0.5 * unif(rng) : 0.0;
    double bump2 = (a != 0.0 || b != 0.0) ? 0.25 * unif(rng) : 0.0;
    s[0] = a;
    s[n] = b;
    for (int i = 1; i < n; ++i) {
      double t = static_cast<double>(i) / n;
      s[i] = a + (b - a) * t + bump1 * std::sin(M_PI * t) + bump2 * std::sin(2.0 * M_PI * t);
    }
  }
  return u;
}

// Random function whose support keeps one full layer of interior edges
// around it: every edge incident to a nonzero vertex, or to a neighbour of
// one, has its full complement of cells inside the window. Extension
// identities then see no truncation artefacts.
inline gridlimit::GridFunction random_interior_supported(
    std::shared_ptr<const gridlimit::MetricGrid> grid, gridlimit::EdgeQuadrature quad,
    std::mt19937_64& rng, double amplitude = 1.0) {
  using namespace gridlimit;
  const MetricGrid& g = *grid;
  std::vector<char> edge_ok(g.num_edges());
  for (int e = 0; e < g.num_edges(); ++e) edge_ok[e] = g.edge_is_interior(e) ? 1 : 0;
  std::vector<char> ring_ok(g.num_vertices(), 1);
  for (int v = 0; v < g.num_vertices(); ++v)
    for (const auto& ie : g.incidence[v])
      if (!edge_ok[ie.edge]) ring_ok[v] = 0;
  std::vector<char> deep(g.num_vertices(), 1);
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (!ring_ok[v]) deep[v] = 0;
    for (const auto& ie : g.incidence[v]) {
      const Edge& ed = g.edges[ie.edge];
      int w = ie.sign > 0 ? ed.head : ed.tail;
      if (!ring_ok[w]) deep[v] = 0;
    }
  }

  GridFunction u(grid, quad);
  std::uniform_real_distribution<double> unif(-amplitude, amplitude);
  std::vector<double> vval(g.num_vertices(), 0.0);
  for (int v = 0; v < g.num_vertices(); ++v)
    if (deep[v]) vval[v] = unif(rng);
  const int n = quad.n;
  for (int e = 0; e < g.num_edges(); ++e) {
    auto s = u.edge(e);
    double a = vval[g.edges[e].tail], b = vval[g.edges[e].head];
    double bump = (a != 0.0 || b != 0.0) ? 0.5 * unif(rng) : 0.0;
    s[0] = a;
    s[n] = b;
    for (int i = 1; i < n; ++i) {
      double t = static_cast<double>(i) / n;
      s[i] = a + (b - a) * t + bump * std::sin(M_PI * t);
    }
  }
  return u;
}

inline gridlimit::GridFunction gaussian_on_grid(
    std::shared_ptr<const gridlimit::MetricGrid> grid, gridlimit::EdgeQuadrature quad,
    double width = 1.0, const gridlimit::Point& center = {}) {
  using gridlimit::Point;
  int d = grid->dim;
  return gridlimit::sample_on_grid(
      [d, width, center](const Point& x) {
        double r2 = 0;
        for (int k = 0; k < d; ++k) r2 += (x[k] - center[k]) * (x[k] - center[k]);
        return std::exp(-0.5 * r2 / (width * width));
      },
      grid, quad);
}

}  // namespace testutil
