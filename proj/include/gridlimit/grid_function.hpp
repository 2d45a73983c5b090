#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "gridlimit/lattice.hpp"

namespace gridlimit {

enum class QuadRule { trapezoid, simpson };

inline std::string to_string(QuadRule r) {
  return r == QuadRule::trapezoid ? "trapezoid" : "simpson";
}

inline QuadRule quad_rule_from_string(const std::string& s) {
  if (s == "trapezoid") return QuadRule::trapezoid;
  if (s == "simpson") return QuadRule::simpson;
  throw std::invalid_argument("unknown quadrature rule: " + s);
}

struct EdgeQuadrature {
  int n = 16;  // subintervals per edge
  QuadRule rule = QuadRule::simpson;

  void validate() const {
    if (n < 2) throw std::invalid_argument("EdgeQuadrature: n must be >= 2");
    if (rule == QuadRule::simpson && n % 2 != 0)
      throw std::invalid_argument("EdgeQuadrature: simpson requires even n");
  }
  bool operator==(const EdgeQuadrature&) const = default;
};

namespace detail {

/// Composite quadrature weights and finite-difference stencils on the
/// uniform per-edge mesh. The derivative order matches the quadrature order:
/// trapezoid pairs with 2nd-order differences, simpson with 4th-order
/// (falling back to 2nd order when n < 4).
struct EdgeOps {
  int n = 0;
  double h = 0.0;
  std::vector<double> w;
  int fd_order = 2;

  EdgeOps() = default;
  EdgeOps(const EdgeQuadrature& q, double length) : n(q.n), h(length / q.n) {
    q.validate();
    w.assign(n + 1, 0.0);
    if (q.rule == QuadRule::trapezoid) {
      for (int i = 0; i <= n; ++i) w[i] = h;
      w[0] = w[n] = 0.5 * h;
    } else {
      for (int i = 0; i <= n; ++i) w[i] = (i % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
      w[0] = w[n] = h / 3.0;
    }
    fd_order = (q.rule == QuadRule::simpson && n >= 4) ? 4 : 2;
  }

  void derivative(const double* u, double* du) const {
    if (fd_order == 2) {
      du[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
      for (int i = 1; i < n; ++i) du[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
      du[n] = (3.0 * u[n] - 4.0 * u[n - 1] + u[n - 2]) / (2.0 * h);
    } else {
      du[0] = (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h);
      du[1] = (-3.0 * u[0] - 10.0 * u[1] + 18.0 * u[2] - 6.0 * u[3] + u[4]) / (12.0 * h);
      for (int i = 2; i <= n - 2; ++i)
        du[i] = (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * h);
      du[n - 1] =
          -(-3.0 * u[n] - 10.0 * u[n - 1] + 18.0 * u[n - 2] - 6.0 * u[n - 3] + u[n - 4]) / (12.0 * h);
      du[n] =
          -(-25.0 * u[n] + 48.0 * u[n - 1] - 36.0 * u[n - 2] + 16.0 * u[n - 3] - 3.0 * u[n - 4]) /
          (12.0 * h);
    }
  }

  /// One-sided derivative at an endpoint, pointing into the edge.
  double outward_derivative_at(const double* u, bool at_tail) const {
    if (fd_order == 2) {
      if (at_tail) return (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
      return (-3.0 * u[n] + 4.0 * u[n - 1] - u[n - 2]) / (2.0 * h);
    }
    if (at_tail)
      return (-25.0 * u[0] + 48.0 * u[1] - 36.0 * u[2] + 16.0 * u[3] - 3.0 * u[4]) / (12.0 * h);
    return (-25.0 * u[n] + 48.0 * u[n - 1] - 36.0 * u[n - 2] + 16.0 * u[n - 3] - 3.0 * u[n - 4]) /
           (12.0 * h);
  }
};

}  // namespace detail

/// Real-valued function sampled at n+1 uniform abscissae on every edge,
/// with samples at shared vertices agreeing exactly. Immutable in all
/// library operations; new values produce a new GridFunction.
class GridFunction {
 public:
  GridFunction(std::shared_ptr<const MetricGrid> grid, EdgeQuadrature quad)
      : grid_(std::move(grid)), quad_(quad) {
    quad_.validate();
    data_.assign(static_cast<std::size_t>(grid_->num_edges()) * (quad_.n + 1), 0.0);
  }

  const MetricGrid& grid() const { return *grid_; }
  const std::shared_ptr<const MetricGrid>& grid_ptr() const { return grid_; }
  const EdgeQuadrature& quad() const { return quad_; }
  int samples_per_edge() const { return quad_.n + 1; }

  std::span<double> edge(int e) {
    return {data_.data() + static_cast<std::size_t>(e) * (quad_.n + 1),
            static_cast<std::size_t>(quad_.n + 1)};
  }
  std::span<const double> edge(int e) const {
    return {data_.data() + static_cast<std::size_t>(e) * (quad_.n + 1),
            static_cast<std::size_t>(quad_.n + 1)};
  }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  double vertex_value(int v) const {
    const auto& inc = grid_->incidence[v];
    if (inc.empty()) return 0.0;
    auto s = edge(inc[0].edge);
    return inc[0].sign > 0 ? s.front() : s.back();
  }

  /// Exact agreement of endpoint samples at every vertex.
  bool vertex_consistent() const {
    for (int v = 0; v < grid_->num_vertices(); ++v) {
      double ref = vertex_value(v);
      for (const auto& ie : grid_->incidence[v]) {
        auto s = edge(ie.edge);
        if ((ie.sign > 0 ? s.front() : s.back()) != ref) return false;
      }
    }
    return true;
  }

  bool satisfies_dirichlet() const {
    for (int v = 0; v < grid_->num_vertices(); ++v)
      if (grid_->boundary_vertex[v] && vertex_value(v) != 0.0) return false;
    return true;
  }

  /// Overwrite the endpoint samples of every edge incident to v.
  void set_vertex_value(int v, double value) {
    for (const auto& ie : grid_->incidence[v]) {
      auto s = edge(ie.edge);
      if (ie.sign > 0) s.front() = value;
      else s.back() = value;
    }
  }

  bool compatible_with(const GridFunction& other) const {
    return grid_.get() == other.grid_.get() && quad_ == other.quad_;
  }

 private:
  std::shared_ptr<const MetricGrid> grid_;
  EdgeQuadrature quad_;
  std::vector<double> data_;
};

inline std::shared_ptr<const MetricGrid> make_grid(const GridSpec& spec) {
  return std::make_shared<const MetricGrid>(build_grid(spec));
}

/// Restrict a scalar field on R^d to the grid. Vertex samples are evaluated
/// once per vertex so shared endpoints agree exactly.
template <class F>
GridFunction sample_on_grid(F&& f, std::shared_ptr<const MetricGrid> grid,
                            EdgeQuadrature quad) {
  GridFunction u(grid, quad);
  const MetricGrid& g = u.grid();
  const int n = quad.n;
  std::vector<double> vval(g.num_vertices());
  for (int v = 0; v < g.num_vertices(); ++v) {
    vval[v] = f(g.vertex_coords[v]);
    if (!std::isfinite(vval[v]))
      throw std::runtime_error("sample_on_grid: non-finite value at a vertex");
  }
  Point x{};
  for (int e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edges[e];
    auto s = u.edge(e);
    s[0] = vval[ed.tail];
    s[n] = vval[ed.head];
    for (int i = 1; i < n; ++i) {
      double t = ed.length * static_cast<double>(i) / n;
      for (int k = 0; k < g.dim; ++k) x[k] = g.vertex_coords[ed.tail][k] + t * ed.dir[k];
      s[i] = f(x);
      if (!std::isfinite(s[i]))
        throw std::runtime_error("sample_on_grid: non-finite value on an edge");
    }
  }
  return u;
}

enum class NormKind { l2, lp, h1_semi, w11_semi, linf };

namespace detail {

template <class PerEdge>
double accumulate_edges(const GridFunction& u, PerEdge&& per_edge) {
  double total = 0.0;
  for (int e = 0; e < u.grid().num_edges(); ++e) total += per_edge(e);
  return total;
}

}  // namespace detail

inline double sq_norm_l2(const GridFunction& u) {
  detail::EdgeOps ops(u.quad(), u.grid().edges.empty() ? 1.0 : u.grid().edges[0].length);
  return detail::accumulate_edges(u, [&](int e) {
    auto s = u.edge(e);
    double acc = 0.0;
    for (int i = 0; i <= ops.n; ++i) acc += ops.w[i] * s[i] * s[i];
    return acc;
  });
}

inline double norm_lp_pow(const GridFunction& u, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("norm: p must be positive");
  detail::EdgeOps ops(u.quad(), u.grid().edges.empty() ? 1.0 : u.grid().edges[0].length);
  return detail::accumulate_edges(u, [&](int e) {
    auto s = u.edge(e);
    double acc = 0.0;
    for (int i = 0; i <= ops.n; ++i) acc += ops.w[i] * std::pow(std::abs(s[i]), p);
    return acc;
  });
}

inline double sq_h1_semi(const GridFunction& u) {
  detail::EdgeOps ops(u.quad(), u.grid().edges[0].length);
  std::vector<double> du(ops.n + 1);
  return detail::accumulate_edges(u, [&](int e) {
    ops.derivative(u.edge(e).data(), du.data());
    double acc = 0.0;
    for (int i = 0; i <= ops.n; ++i) acc += ops.w[i] * du[i] * du[i];
    return acc;
  });
}

inline double w11_semi(const GridFunction& u) {
  detail::EdgeOps ops(u.quad(), u.grid().edges[0].length);
  std::vector<double> du(ops.n + 1);
  return detail::accumulate_edges(u, [&](int e) {
    ops.derivative(u.edge(e).data(), du.data());
    double acc = 0.0;
    for (int i = 0; i <= ops.n; ++i) acc += ops.w[i] * std::abs(du[i]);
    return acc;
  });
}

inline double norm_linf(const GridFunction& u) {
  double m = 0.0;
  for (double v : u.data()) m = std::max(m, std::abs(v));
  return m;
}

inline double norm(const GridFunction& u, NormKind kind, double p = 0.0) {
  switch (kind) {
    case NormKind::l2: return std::sqrt(sq_norm_l2(u));
    case NormKind::lp: return std::pow(norm_lp_pow(u, p), 1.0 / p);
    case NormKind::h1_semi: return std::sqrt(sq_h1_semi(u));
    case NormKind::w11_semi: return w11_semi(u);
    case NormKind::linf: return norm_linf(u);
  }
  throw std::invalid_argument("norm: unknown kind");
}

/// Quadrature contribution of a single edge to the squared L2 norm.
inline double edge_sq_l2(const GridFunction& u, int e) {
  detail::EdgeOps ops(u.quad(), u.grid().edges[e].length);
  auto s = u.edge(e);
  double acc = 0.0;
  for (int i = 0; i <= ops.n; ++i) acc += ops.w[i] * s[i] * s[i];
  return acc;
}

inline double edge_sq_h1(const GridFunction& u, int e) {
  detail::EdgeOps ops(u.quad(), u.grid().edges[e].length);
  std::vector<double> du(ops.n + 1);
  ops.derivative(u.edge(e).data(), du.data());
  double acc = 0.0;
  for (int i = 0; i <= ops.n; ++i) acc += ops.w[i] * du[i] * du[i];
  return acc;
}

/// a*u + v
inline GridFunction axpy(const GridFunction& u, const GridFunction& v, double a) {
  if (!u.compatible_with(v))
    throw std::invalid_argument("axpy: grid/quadrature mismatch");
  GridFunction out = v;
  auto& o = out.data();
  const auto& uu = u.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += a * uu[i];
  return out;
}

inline GridFunction scaled(const GridFunction& u, double c) {
  GridFunction out = u;
  for (double& x : out.data()) x *= c;
  return out;
}

/// sqrt(m / ||u||_L2^2) * u, so the result has squared L2 norm m.
inline GridFunction rescale_to_mass(const GridFunction& u, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("rescale_to_mass: mass must be positive");
  double m0 = sq_norm_l2(u);
  if (m0 <= 0.0) throw std::invalid_argument("rescale_to_mass: zero function");
  return scaled(u, std::sqrt(m / m0));
}

struct KirchhoffResidual {
  std::vector<double> vertex;    // sum of outward derivatives, 0 on the boundary
  std::vector<double> edge_max;  // max |u'' + c_nl |u|^{p-2} u - c_lin u| per edge
  double max_vertex() const {
    double m = 0.0;
    for (double v : vertex) m = std::max(m, std::abs(v));
    return m;
  }
  double mean_edge() const {
    if (edge_max.empty()) return 0.0;
    double s = 0.0;
    for (double v : edge_max) s += v;
    return s / static_cast<double>(edge_max.size());
  }
};

/// Residuals of the stationary NLS system on the grid:
/// u'' + c_nl |u|^{p-2} u = c_lin u on edges, Kirchhoff balance at vertices.
inline KirchhoffResidual kirchhoff_residual(const GridFunction& u, double p,
                                            double c_nl, double c_lin) {
  if (u.quad().n < 4) throw std::invalid_argument("kirchhoff_residual: n >= 4 required");
  if (!u.vertex_consistent())
    throw std::invalid_argument("kirchhoff_residual: vertex-inconsistent input");
  const MetricGrid& g = u.grid();
  detail::EdgeOps ops(u.quad(), g.edges[0].length);
  KirchhoffResidual r;
  r.vertex.assign(g.num_vertices(), 0.0);
  r.edge_max.assign(g.num_edges(), 0.0);

  for (int v = 0; v < g.num_vertices(); ++v) {
    if (g.boundary_vertex[v]) continue;
    double acc = 0.0;
    for (const auto& ie : g.incidence[v])
      acc += ops.outward_derivative_at(u.edge(ie.edge).data(), ie.sign > 0);
    r.vertex[v] = acc;
  }

  const double h2 = ops.h * ops.h;
  for (int e = 0; e < g.num_edges(); ++e) {
    auto s = u.edge(e);
    double worst = 0.0;
    for (int i = 1; i < ops.n; ++i) {
      double upp = (s[i - 1] - 2.0 * s[i] + s[i + 1]) / h2;
      double res = upp + c_nl * std::pow(std::abs(s[i]), p - 2.0) * s[i] - c_lin * s[i];
      worst = std::max(worst, std::abs(res));
    }
    r.edge_max[e] = worst;
  }
  return r;
}

}  // namespace gridlimit
