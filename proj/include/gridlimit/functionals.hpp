#pragma once

#include <cmath>
#include <stdexcept>

#include "gridlimit/grid_function.hpp"
#include "gridlimit/lattice.hpp"

namespace gridlimit {

/// Coefficients of the modified action/energy functionals. The three lattices
/// share one code path; only the numerology differs:
///   cubic       E = 1/2 |u'|^2 - 1/(dp) |u|_p^p,      EL: u'' + (1/d)|u|^{p-2}u = (L/d')u
///   triangular  E = 1/(2 sqrt3) |u'|^2 - 1/(2 sqrt3 p) |u|_p^p
///   hexagonal   E = sqrt3/2 |u'|^2 - sqrt3/(2p) |u|_p^p
/// c_el = c_mass / c_grad is the coefficient of the nonlinearity in the
/// Euler-Lagrange equation (1/d cubic, 1/2 triangular and hexagonal).
struct ProblemParams {
  Lattice lattice = Lattice::cubic;
  int d = 2;        // ambient dimension
  double p = 3.0;   // nonlinearity power
  double omega = 0.0;  // frequency (action problem)
  double mu = 0.0;     // mass (energy problem)
  double c_grad = 0.5;
  double c_mass = 0.25;
  double c_nl = 1.0 / 6.0;

  static ProblemParams cubic(int d, double p) {
    ProblemParams pp;
    pp.lattice = Lattice::cubic;
    pp.d = d;
    pp.p = p;
    pp.c_grad = 0.5;
    pp.c_mass = 0.5 / d;
    pp.c_nl = 1.0 / (d * p);
    return pp;
  }
  static ProblemParams triangular(double p) {
    ProblemParams pp;
    pp.lattice = Lattice::triangular;
    pp.d = 2;
    pp.p = p;
    pp.c_grad = 0.5 / std::sqrt(3.0);
    pp.c_mass = 0.25 / std::sqrt(3.0);
    pp.c_nl = 0.5 / (std::sqrt(3.0) * p);
    return pp;
  }
  static ProblemParams hexagonal(double p) {
    ProblemParams pp;
    pp.lattice = Lattice::hexagonal;
    pp.d = 2;
    pp.p = p;
    pp.c_grad = 0.5 * std::sqrt(3.0);
    pp.c_mass = 0.25 * std::sqrt(3.0);
    pp.c_nl = 0.5 * std::sqrt(3.0) / p;
    return pp;
  }
  static ProblemParams for_lattice(Lattice l, int d, double p) {
    switch (l) {
      case Lattice::cubic: return cubic(d, p);
      case Lattice::triangular: return triangular(p);
      case Lattice::hexagonal: return hexagonal(p);
    }
    throw std::invalid_argument("ProblemParams: unknown lattice");
  }

  double c_el() const { return c_mass / c_grad; }
  double sobolev_critical() const {
    return d >= 3 ? 2.0 * d / (d - 2.0) : std::numeric_limits<double>::infinity();
  }
  double mass_critical() const { return 2.0 + 4.0 / d; }
  double kappa() const { return 0.5 - 1.0 / p; }

  void validate_action() const {
    if (!(p > 2.0) || !(p < sobolev_critical()))
      throw std::invalid_argument("action problem requires p in (2, 2*)");
    if (!(omega > 0.0)) throw std::invalid_argument("action problem requires omega > 0");
  }
  void validate_energy() const {
    if (!(p > 2.0) || !(p < mass_critical()))
      throw std::invalid_argument("energy problem requires p in (2, 2+4/d)");
    if (!(mu > 0.0)) throw std::invalid_argument("energy problem requires mu > 0");
  }
};

inline double energy_tilde(const GridFunction& u, const ProblemParams& pp) {
  return pp.c_grad * sq_h1_semi(u) - pp.c_nl * norm_lp_pow(u, pp.p);
}

inline double action_tilde(const GridFunction& u, const ProblemParams& pp) {
  return pp.c_grad * sq_h1_semi(u) + pp.c_mass * pp.omega * sq_norm_l2(u) -
         pp.c_nl * norm_lp_pow(u, pp.p);
}

/// Nehari constraint in the normalized form
///   |u'|^2 / c_el + omega |u|^2 - |u|_p^p   (cubic: d|u'|^2 + omega|u|^2 - |u|_p^p)
inline double nehari_residual(const GridFunction& u, const ProblemParams& pp) {
  return sq_h1_semi(u) / pp.c_el() + pp.omega * sq_norm_l2(u) - norm_lp_pow(u, pp.p);
}

/// Projection coefficient from the measured quantities.
inline double nehari_coefficient(double grad_sq, double mass_sq, double lp_pow_p,
                                 const ProblemParams& pp) {
  if (!(lp_pow_p > 0.0))
    throw std::invalid_argument("nehari_project: |u|_p = 0");
  return std::pow((grad_sq / pp.c_el() + pp.omega * mass_sq) / lp_pow_p,
                  1.0 / (pp.p - 2.0));
}

inline GridFunction nehari_project(const GridFunction& u, const ProblemParams& pp) {
  double pi = nehari_coefficient(sq_h1_semi(u), sq_norm_l2(u), norm_lp_pow(u, pp.p), pp);
  return scaled(u, pi);
}

/// Lagrange multiplier of a mass-constrained critical point:
///   (c_el |u|_p^p - |u'|^2) / |u|^2.
inline double lagrange_multiplier(const GridFunction& u, const ProblemParams& pp) {
  double m = sq_norm_l2(u);
  if (!(m > 0.0)) throw std::invalid_argument("lagrange_multiplier: zero mass");
  return (pp.c_el() * norm_lp_pow(u, pp.p) - sq_h1_semi(u)) / m;
}

/// Same multiplier written through the energy, the form used in the
/// convergence analysis: (1 - 2/p) c_el |u|_p^p / |u|^2 - E(u)/(c_grad |u|^2).
inline double lagrange_multiplier_energy_form(const GridFunction& u,
                                              const ProblemParams& pp) {
  double m = sq_norm_l2(u);
  if (!(m > 0.0)) throw std::invalid_argument("lagrange_multiplier: zero mass");
  return (1.0 - 2.0 / pp.p) * pp.c_el() * norm_lp_pow(u, pp.p) / m -
         energy_tilde(u, pp) / (pp.c_grad * m);
}

/// Scale-invariant Gagliardo-Nirenberg quotient
///   |u|_q^q / ( |u|_2^{d+(2-d)q/2} |u'|_2^{(q/2-1)d} ).
inline double gn_quotient_grid(const GridFunction& u, double q) {
  const int d = u.grid().dim;
  double l2 = std::sqrt(sq_norm_l2(u));
  double h1 = std::sqrt(sq_h1_semi(u));
  if (!(h1 > 0.0)) throw std::invalid_argument("gn_quotient_grid: |u'| = 0");
  if (!(l2 > 0.0)) throw std::invalid_argument("gn_quotient_grid: zero function");
  return norm_lp_pow(u, q) /
         (std::pow(l2, d + (2.0 - d) * q / 2.0) * std::pow(h1, (q / 2.0 - 1.0) * d));
}

/// Exponents of the scaling transform u(x) -> t^alpha u(t^beta x).
inline double scaling_alpha(double p) {
  if (p == 6.0) throw std::invalid_argument("scaling transform undefined at p = 6");
  return 2.0 / (6.0 - p);
}
inline double scaling_beta(double p) {
  if (p == 6.0) throw std::invalid_argument("scaling transform undefined at p = 6");
  return (p - 2.0) / (6.0 - p);
}

enum class ScaleDirection { to_unit, from_unit };

/// Transport between edgelength-eps and edgelength-1 grids with t = eps^{1/beta}.
/// Samples map one-to-one under the affine change of variables, so all the
/// norm identities hold at the level of quadrature sums.
inline GridFunction scale_between_grids(const GridFunction& u, double p,
                                        ScaleDirection dir, double eps_target = 0.0) {
  if (p == 6.0) throw std::invalid_argument("scale_between_grids: p = 6 is singular");
  const GridSpec& src = u.grid().spec;
  GridSpec dst = src;
  double eps;
  if (dir == ScaleDirection::to_unit) {
    eps = src.epsilon;
    dst.epsilon = 1.0;
  } else {
    if (src.epsilon != 1.0)
      throw std::invalid_argument("scale_between_grids: from_unit expects a unit grid");
    if (!(eps_target > 0.0))
      throw std::invalid_argument("scale_between_grids: eps_target required");
    eps = eps_target;
    dst.epsilon = eps_target;
  }
  double amp = std::pow(eps, 2.0 / (p - 2.0));  // t^alpha with t = eps^{1/beta}
  if (dir == ScaleDirection::from_unit) amp = 1.0 / amp;

  GridFunction out(make_grid(dst), u.quad());
  // identical lattice and window: edge ids coincide, samples transport 1:1
  const auto& src_data = u.data();
  auto& dst_data = out.data();
  for (std::size_t i = 0; i < src_data.size(); ++i) dst_data[i] = amp * src_data[i];
  return out;
}

}  // namespace gridlimit
