#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gridlimit/extension.hpp"
#include "gridlimit/functionals.hpp"
#include "gridlimit/operator.hpp"
#include "gridlimit/radial.hpp"

namespace gridlimit {

enum class InitKind { gaussian_bump, restriction_of_reference, random_values };

struct SolveConfig {
  double step = 1.0;          // initial line-search step
  double tol_grad = 1e-6;     // on the projected gradient, relative to the first iterate
  double tol_level = 1e-11;   // relative stall of the functional
  int max_iters = 600;
  std::uint64_t seed = 1234;
  InitKind init = InitKind::gaussian_bump;
  double init_width = 0.0;    // 0: automatic
  EdgeQuadrature quad{16, QuadRule::simpson};
  const RadialProfile* reference = nullptr;  // required for restriction_of_reference

  void validate() const {
    if (!(tol_grad > 0.0) || !(tol_level > 0.0))
      throw std::invalid_argument("SolveConfig: tolerances must be positive");
    if (max_iters < 1) throw std::invalid_argument("SolveConfig: max_iters >= 1");
    quad.validate();
    if (init == InitKind::restriction_of_reference && reference == nullptr)
      throw std::invalid_argument("SolveConfig: reference profile required");
  }
};

struct SolveResult {
  GridFunction u;
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;      // final projected-gradient measure
  double grad_norm_rel = 0.0;  // relative to the first iterate
  double level = 0.0;
  NormTriple norms{};
  double multiplier = 0.0;  // Lagrange multiplier of the converged state
  std::vector<double> level_trace;
  std::string message;
};

namespace detail {

inline GridFunction initial_guess(const DiscreteOperator& op, const ProblemParams& pp,
                                  const SolveConfig& cfg, double box_halfwidth) {
  auto grid = op.grid_ptr();
  switch (cfg.init) {
    case InitKind::restriction_of_reference: {
      const RadialProfile* ref = cfg.reference;
      return sample_on_grid(
          [ref, d = grid->dim](const Point& x) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) r2 += x[k] * x[k];
            return ref->value(std::sqrt(r2));
          },
          grid, cfg.quad);
    }
    case InitKind::random_values: {
      std::mt19937_64 rng(cfg.seed);
      std::uniform_real_distribution<double> unif(0.1, 1.0);
      GridFunction u(grid, cfg.quad);
      const MetricGrid& g = *grid;
      std::vector<double> vv(g.num_vertices(), 0.0);
      for (int v = 0; v < g.num_vertices(); ++v)
        if (!g.boundary_vertex[v]) vv[v] = unif(rng);
      for (int e = 0; e < g.num_edges(); ++e) {
        auto s = u.edge(e);
        double a = vv[g.edges[e].tail], b = vv[g.edges[e].head];
        s[0] = a;
        s[cfg.quad.n] = b;
        for (int i = 1; i < cfg.quad.n; ++i)
          s[i] = a + (b - a) * static_cast<double>(i) / cfg.quad.n;
      }
      return u;
    }
    case InitKind::gaussian_bump:
    default: {
      double width = cfg.init_width;
      if (!(width > 0.0)) {
        if (pp.omega > 0.0) width = 0.8 / std::sqrt(pp.c_el() * pp.omega);
        else width = box_halfwidth / 4.0;
        width = std::max(width, 2.0 * grid->spec.epsilon);
      }
      return sample_on_grid(
          [width, d = grid->dim](const Point& x) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) r2 += x[k] * x[k];
            return std::exp(-0.5 * r2 / (width * width));
          },
          grid, cfg.quad);
    }
  }
}

inline double box_halfwidth(const MetricGrid& g) {
  double m = 0.0;
  for (int k = 0; k < g.dim; ++k)
    m = std::max(m, std::abs(g.vertex_coords[0][k]));
  for (int v = 0; v < g.num_vertices(); ++v)
    for (int k = 0; k < g.dim; ++k) m = std::max(m, std::abs(g.vertex_coords[v][k]));
  return m;
}

inline GridFunction absolute_value(const GridFunction& u) {
  GridFunction out = u;
  for (double& x : out.data()) x = std::abs(x);
  return out;
}

// Shared projected-descent loop. `project` renormalizes a trial onto the
// constraint set, `value` evaluates the objective from the norms triple and
// `normal` assembles the dof gradient of the constraint functional.
template <class Project, class Value, class Gradient, class Normal>
SolveResult descend(DiscreteOperator& op, const ProblemParams& pp, const SolveConfig& cfg,
                    GridFunction u, Project&& project, Value&& value, Gradient&& gradient,
                    Normal&& normal, double omega_hat0) {
  u = op.to_function(op.gather(u));  // pin Dirichlet values
  u = project(u);

  double omega_hat = omega_hat0;
  op.build_preconditioner(pp.c_grad, omega_hat);

  std::vector<double> g, c, v, w1;
  SolveResult res{u};
  NormTriple t = op.norms(u, pp.p);
  double E = value(t);
  res.level_trace.push_back(E);

  double r0 = -1.0, r = 0.0;
  double step = cfg.step;
  int ok_streak = 0;
  bool level_ok = false;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    gradient(u, g);
    normal(u, c);
    op.apply_inverse(g, v);
    op.apply_inverse(c, w1);
    double cw = dot(c, w1);
    double lam = cw != 0.0 ? dot(c, v) / cw : 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lam * w1[i];
    double r2 = std::max(0.0, dot(g, v));
    r = std::sqrt(r2);
    if (r0 < 0.0) r0 = std::max(r, 1e-300);

    bool grad_ok = r <= cfg.tol_grad * r0;
    ok_streak = (grad_ok && level_ok) ? ok_streak + 1 : 0;
    if (ok_streak >= 3) {
      res.converged = true;
      break;
    }

    GridFunction dir = op.to_function(v);
    double E_prev = E;
    bool accepted = false;
    for (int bt = 0; bt < 50; ++bt) {
      GridFunction trial = axpy(dir, u, -step);
      NormTriple tt;
      try {
        trial = project(trial);
        tt = op.norms(trial, pp.p);
      } catch (const std::exception&) {
        step *= 0.5;
        continue;
      }
      double Et = value(tt);
      if (Et <= E - 1e-4 * step * r2 || (Et < E && step < 1e-8)) {
        // keep iterates one-signed whenever it does not raise the level
        double neg = 0.0;
        for (double x : trial.data()) neg = std::min(neg, x);
        if (neg < 0.0) {
          GridFunction pos = project(absolute_value(trial));
          NormTriple tp = op.norms(pos, pp.p);
          if (value(tp) <= Et) {
            trial = std::move(pos);
            tt = tp;
            Et = value(tp);
          }
        }
        u = std::move(trial);
        t = tt;
        E = Et;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = iter + 1;
    if (!accepted) {
      // descent exhausted within round-off of the level; the gradient
      // criterion decides whether this counts as convergence
      res.converged = grad_ok;
      res.message = "line search stalled at round-off";
      break;
    }
    res.level_trace.push_back(E);
    step = std::min(step * 1.5, 8.0);
    level_ok = std::abs(E - E_prev) <= cfg.tol_level * std::max(1.0, std::abs(E));

    // keep the H1 metric roughly tuned to the current multiplier scale
    if (iter % 20 == 19) {
      double mult = (pp.c_el() * t.lp_pow - t.grad_sq) / t.mass_sq;
      double target = std::max(2.0 * pp.c_mass * std::abs(mult), 1e-4);
      if (target > 1.7 * omega_hat || target < omega_hat / 1.7) {
        omega_hat = target;
        op.build_preconditioner(pp.c_grad, omega_hat);
      }
    }
  }

  res.u = u;
  res.norms = t;
  res.level = E;
  res.grad_norm = r;
  res.grad_norm_rel = r0 > 0.0 ? r / r0 : 0.0;
  res.multiplier = (pp.c_el() * t.lp_pow - t.grad_sq) / t.mass_sq;
  if (res.message.empty() && !res.converged) res.message = "max_iters reached";
  return res;
}

}  // namespace detail

/// Mass-constrained ground state of the energy by projected, preconditioned
/// gradient descent with backtracking; iterates are renormalized to the
/// target mass after every step.
inline SolveResult solve_energy_ground_state(std::shared_ptr<const MetricGrid> grid,
                                             ProblemParams pp, double grid_mass,
                                             const SolveConfig& cfg = {}) {
  cfg.validate();
  pp.mu = grid_mass;
  pp.validate_energy();
  DiscreteOperator op(grid, cfg.quad);

  auto project = [&](const GridFunction& w) { return rescale_to_mass(w, grid_mass); };
  auto value = [&](const NormTriple& t) {
    return pp.c_grad * t.grad_sq - pp.c_nl * t.lp_pow;
  };
  auto gradient = [&](const GridFunction& w, std::vector<double>& out) {
    op.gradient(w, pp.p, pp.c_grad, 0.0, -pp.c_nl, out);
  };
  auto normal = [&](const GridFunction& w, std::vector<double>& out) {
    op.gradient(w, pp.p, 0.0, 1.0, 0.0, out);
  };

  GridFunction u0 = detail::initial_guess(op, pp, cfg, detail::box_halfwidth(*grid));
  u0 = detail::absolute_value(u0);

  // H1-metric scale: start from the multiplier of the initial guess
  GridFunction pin = op.to_function(op.gather(u0));
  GridFunction proj = rescale_to_mass(pin, grid_mass);
  NormTriple t0 = op.norms(proj, pp.p);
  double mult0 = (pp.c_el() * t0.lp_pow - t0.grad_sq) / t0.mass_sq;
  double omega_hat = std::max(2.0 * pp.c_mass * std::abs(mult0), 1e-4);

  auto res = detail::descend(op, pp, cfg, u0, project, value, gradient, normal, omega_hat);
  // report in the quadrature norms: renormalize the mass there and restate
  // the level, norms and multiplier accordingly
  res.u = rescale_to_mass(res.u, grid_mass);
  res.norms = NormTriple{sq_h1_semi(res.u), sq_norm_l2(res.u), norm_lp_pow(res.u, pp.p)};
  res.level = pp.c_grad * res.norms.grad_sq - pp.c_nl * res.norms.lp_pow;
  res.multiplier = (pp.c_el() * res.norms.lp_pow - res.norms.grad_sq) / res.norms.mass_sq;
  return res;
}

/// Action ground state on the Nehari manifold: descent interleaved with the
/// exact projection.
inline SolveResult solve_action_ground_state(std::shared_ptr<const MetricGrid> grid,
                                             ProblemParams pp, const SolveConfig& cfg = {}) {
  cfg.validate();
  pp.validate_action();
  DiscreteOperator op(grid, cfg.quad);

  auto project = [&](const GridFunction& w) { return nehari_project(w, pp); };
  auto value = [&](const NormTriple& t) {
    return pp.c_grad * t.grad_sq + pp.c_mass * pp.omega * t.mass_sq - pp.c_nl * t.lp_pow;
  };
  auto gradient = [&](const GridFunction& w, std::vector<double>& out) {
    op.gradient(w, pp.p, pp.c_grad, pp.c_mass * pp.omega, -pp.c_nl, out);
  };
  auto normal = [&](const GridFunction& w, std::vector<double>& out) {
    op.gradient(w, pp.p, 1.0 / pp.c_el(), pp.omega, -1.0, out);
  };

  GridFunction u0 = detail::initial_guess(op, pp, cfg, detail::box_halfwidth(*grid));
  u0 = detail::absolute_value(u0);
  double omega_hat = std::max(2.0 * pp.c_mass * pp.omega, 1e-4);
  auto res = detail::descend(op, pp, cfg, u0, project, value, gradient, normal, omega_hat);
  // final exact projection onto the Nehari manifold of the quadrature norms
  res.u = nehari_project(res.u, pp);
  res.norms = NormTriple{sq_h1_semi(res.u), sq_norm_l2(res.u), norm_lp_pow(res.u, pp.p)};
  res.level = pp.c_grad * res.norms.grad_sq + pp.c_mass * pp.omega * res.norms.mass_sq -
              pp.c_nl * res.norms.lp_pow;
  res.multiplier = (pp.c_el() * res.norms.lp_pow - res.norms.grad_sq) / res.norms.mass_sq;
  return res;
}

struct AscentResult {
  GridFunction u;
  std::vector<double> quotient_trace;
  std::vector<double> grad_norm_trace;  // |u'|_2 along the iteration
  double best_quotient = 0.0;
  std::string message;
};

/// Mass-normalized gradient ascent of the Gagliardo-Nirenberg quotient.
inline AscentResult quotient_ascent(const GridFunction& start, double q, int iters) {
  auto grid = start.grid_ptr();
  DiscreteOperator op(grid, start.quad(), Discretization::p1_exact);
  const int d = grid->dim;
  const double A = (d + (2.0 - d) * q / 2.0) / 2.0;
  const double B = (q / 2.0 - 1.0) * d / 2.0;

  GridFunction u = rescale_to_mass(op.to_function(op.gather(start)), 1.0);
  op.build_preconditioner(0.5, 1.0);

  AscentResult res{u};
  std::vector<double> g, v;
  double step = 1.0;
  for (int it = 0; it < iters; ++it) {
    NormTriple t = op.norms(u, q);
    double Q = t.lp_pow / (std::pow(t.mass_sq, A) * std::pow(t.grad_sq, B));
    res.quotient_trace.push_back(Q);
    res.grad_norm_trace.push_back(std::sqrt(t.grad_sq));
    res.best_quotient = std::max(res.best_quotient, Q);

    op.gradient(u, q, -Q * B / t.grad_sq, -Q * A / t.mass_sq, Q / t.lp_pow, g);
    op.apply_inverse(g, v);
    double gv = dot(g, v);

    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      GridFunction trial = rescale_to_mass(axpy(op.to_function(v), u, step), 1.0);
      NormTriple tt = op.norms(trial, q);
      double Qt = tt.lp_pow / (std::pow(tt.mass_sq, A) * std::pow(tt.grad_sq, B));
      if (Qt >= Q + 1e-4 * step * gv) {
        u = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.message = "ascent plateau";
      break;
    }
    step = std::min(step * 1.4, 64.0);
  }
  res.u = u;
  return res;
}

}  // namespace gridlimit
