#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace gridlimit {

/// Radial ground-state profile of  u'' + ((d-1)/r) u' + |u|^{p-2} u = omega u
/// on R^d: r-samples on a uniform grid, values, derivatives, and the derived
/// norms and functional values.
struct RadialProfile {
  int d = 2;
  double p = 3.0;
  double omega = 1.0;
  double u0 = 0.0;

  std::vector<double> r, u, du;
  double h = 0.0;  // uniform r step

  double decay_rate = 0.0;      // fitted kappa, approximately sqrt(omega)
  double tail_amplitude = 0.0;  // A with u(r) ~ A exp(-kappa r) past the window

  double mass = 0.0;     // |u|_{L2(R^d)}^2
  double kinetic = 0.0;  // |grad u|_{L2(R^d)}^2
  double lp = 0.0;       // |u|_p^p
  double energy = 0.0;   // 1/2 kinetic - 1/p |u|_p^p
  double action = 0.0;   // energy + omega/2 mass

  double r_max() const { return r.empty() ? 0.0 : r.back(); }

  double value(double rr) const {
    if (rr >= r_max()) return tail_amplitude * std::exp(-decay_rate * rr);
    if (rr <= 0.0) return u0;
    std::size_t i = static_cast<std::size_t>(rr / h);
    if (i + 1 >= u.size()) i = u.size() - 2;
    double t = (rr - r[i]) / h;
    // cubic Hermite with the integrator's exact slopes
    double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return h00 * u[i] + h * h10 * du[i] + h01 * u[i + 1] + h * h11 * du[i + 1];
  }

  double derivative(double rr) const {
    if (rr >= r_max())
      return -decay_rate * tail_amplitude * std::exp(-decay_rate * rr);
    if (rr <= 0.0) return 0.0;
    std::size_t i = static_cast<std::size_t>(rr / h);
    if (i + 1 >= u.size()) i = u.size() - 2;
    double t = (rr - r[i]) / h;
    double d00 = 6 * t * (t - 1), d10 = (1 - t) * (1 - 3 * t);
    double d01 = 6 * t * (1 - t), d11 = t * (3 * t - 2);
    return d00 / h * u[i] + d10 * du[i] + d01 / h * u[i + 1] + d11 * du[i + 1];
  }

  double surface_area() const {  // |S^{d-1}|
    return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
  }

  /// |u|_q^q over R^d: composite Simpson on the sample grid plus the
  /// analytic exponential tail.
  double lq_pow(double q) const {
    double acc = 0.0;
    const std::size_t n = u.size() - 1;
    for (std::size_t i = 0; i <= n; ++i) {
      double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * std::pow(std::abs(u[i]), q) * std::pow(r[i], d - 1);
    }
    acc *= h / 3.0;
    acc += tail_integral(q);
    return surface_area() * acc;
  }

  /// int_R^inf (A e^{-k r})^q r^{d-1} dr, closed form for d = 2, 3
  /// (and a conservative bound otherwise, the term is negligible anyway).
  double tail_integral_from(double q, double R) const {
    double k = q * decay_rate;
    double aq = std::pow(tail_amplitude, q), e = std::exp(-k * R);
    if (d == 2) return aq * e * (R / k + 1.0 / (k * k));
    if (d == 3) return aq * e * (R * R / k + 2.0 * R / (k * k) + 2.0 / (k * k * k));
    return aq * e * std::pow(R, d - 1) / k * 2.0;
  }
  double tail_integral(double q) const { return tail_integral_from(q, r_max()); }
};

struct ShootConfig {
  double r_max_factor = 12.0;  // r_max = factor / sqrt(omega)
  double step_factor = 1e-3;   // h = step_factor * r_max
  int max_bracket = 80;
  int max_bisect = 200;
};

namespace detail {

enum class ShotClass { overshoot, undershoot, clean };

struct ShotResult {
  ShotClass cls = ShotClass::clean;
  double u_end = 0.0;
  double v_end = 0.0;
  std::vector<double> u, du;
};

// RK4 on (u, v): u' = v, v' = omega u - |u|^{p-2} u - (d-1) v / r, with the
// regular limit v'(0) = (omega u - |u|^{p-2} u) / d at the origin.
inline ShotResult integrate_shot(int d, double p, double omega, double a, double h,
                                 int steps, bool record) {
  auto fv = [&](double rr, double uu, double vv) {
    double f = omega * uu - std::pow(std::abs(uu), p - 2.0) * uu;
    if (rr <= 0.0) return f / d;
    return f - (d - 1.0) * vv / rr;
  };
  // rest point of the profile equation; the ground-state value sits above it
  // and undershooting trajectories turn upward strictly below it
  const double rest = std::pow(omega, 1.0 / (p - 2.0));
  ShotResult out;
  if (record) {
    out.u.reserve(steps + 1);
    out.du.reserve(steps + 1);
  }
  double u = a, v = 0.0, r = 0.0;
  if (record) {
    out.u.push_back(u);
    out.du.push_back(v);
  }
  for (int i = 0; i < steps; ++i) {
    double k1u = v, k1v = fv(r, u, v);
    double k2u = v + 0.5 * h * k1v, k2v = fv(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
    double k3u = v + 0.5 * h * k2v, k3v = fv(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
    double k4u = v + h * k3v, k4v = fv(r + h, u + h * k3u, v + h * k3v);
    u += h / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
    v += h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
    r += h;
    if (record) {
      out.u.push_back(u);
      out.du.push_back(v);
    }
    if (u <= 0.0) {
      out.cls = ShotClass::overshoot;
      out.u_end = u;
      out.v_end = v;
      return out;
    }
    if (v >= 0.0 && u < 0.999 * rest) {
      out.cls = ShotClass::undershoot;
      out.u_end = u;
      out.v_end = v;
      return out;
    }
    if (u > 3.0 * std::max(a, rest)) {
      out.cls = ShotClass::undershoot;
      out.u_end = u;
      out.v_end = v;
      return out;
    }
  }
  out.cls = ShotClass::clean;
  out.u_end = u;
  out.v_end = v;
  return out;
}

}  // namespace detail

/// Ground state of the radial NLS profile equation by shooting on u(0):
/// bisect between sign-crossing and turn-around trajectories until the
/// solution tracks exponential decay out to r_max.
inline RadialProfile solve_rd_ground_state(int d, double p, double omega,
                                           ShootConfig cfg = {}) {
  if (d < 2) throw std::invalid_argument("solve_rd_ground_state: d >= 2 required");
  double two_star = d >= 3 ? 2.0 * d / (d - 2.0) : std::numeric_limits<double>::infinity();
  if (!(p > 2.0) || !(p < two_star))
    throw std::invalid_argument("solve_rd_ground_state: p must lie in (2, 2*)");
  if (!(omega > 0.0)) throw std::invalid_argument("solve_rd_ground_state: omega > 0");

  const double r_max = cfg.r_max_factor / std::sqrt(omega);
  int steps = static_cast<int>(std::lround(1.0 / cfg.step_factor));
  if (steps % 2 == 1) ++steps;  // Simpson wants an even step count
  const double h = r_max / steps;

  using detail::ShotClass;
  // trajectories with no event by r_max are classified by the terminal
  // logarithmic decay rate: faster than the linearized rate means the shot
  // is about to cross zero, slower means it is about to turn back up
  const double lam_lin = std::sqrt(omega) + 0.5 * (d - 1) / r_max;
  auto classify = [&](double a) {
    auto res = detail::integrate_shot(d, p, omega, a, h, steps, false);
    if (res.cls != ShotClass::clean) return res.cls;
    double lam = -res.v_end / res.u_end;
    if (lam > 1.2 * lam_lin) return ShotClass::overshoot;
    if (lam < 0.8 * lam_lin) return ShotClass::undershoot;
    return ShotClass::clean;
  };

  double lo = 0.0, hi = 0.0, a = 1.0;
  ShotClass c = classify(a);
  if (c == ShotClass::overshoot) {
    hi = a;
    for (int i = 0; i < cfg.max_bracket && lo == 0.0; ++i) {
      a *= 0.5;
      if (classify(a) != ShotClass::overshoot) lo = a;
      else hi = a;
    }
  } else {
    lo = a;
    for (int i = 0; i < cfg.max_bracket && hi == 0.0; ++i) {
      a *= 2.0;
      if (classify(a) == ShotClass::overshoot) hi = a;
      else lo = a;
    }
  }
  if (lo == 0.0 || hi == 0.0)
    throw std::runtime_error("solve_rd_ground_state: no shooting bracket found");

  for (int i = 0; i < cfg.max_bisect && (hi - lo) > 1e-15 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    ShotClass cm = classify(mid);
    if (cm == ShotClass::overshoot) hi = mid;
    else if (cm == ShotClass::undershoot) lo = mid;
    else break;
  }

  double a_star = 0.5 * (lo + hi);
  auto shot = detail::integrate_shot(d, p, omega, a_star, h, steps, true);
  if (shot.u.size() < static_cast<std::size_t>(static_cast<int>(0.95 * steps)))
    throw std::runtime_error("solve_rd_ground_state: bracketed shot leaves the "
                             "decay regime before r_max");

  RadialProfile prof;
  prof.d = d;
  prof.p = p;
  prof.omega = omega;
  prof.u0 = a_star;
  prof.h = h;
  prof.r.resize(steps + 1);
  for (int i = 0; i <= steps; ++i) prof.r[i] = i * h;
  prof.u = std::move(shot.u);
  prof.du = std::move(shot.du);
  prof.u.resize(steps + 1, 0.0);
  prof.du.resize(steps + 1, 0.0);

  // exponential fit on a fixed fraction of the tail
  int i0 = static_cast<int>(0.60 * steps), i1 = static_cast<int>(0.90 * steps);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (int i = i0; i <= i1; ++i) {
    if (!(prof.u[i] > 0.0)) break;
    double x = prof.r[i], y = std::log(prof.u[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  if (n < 8) throw std::runtime_error("solve_rd_ground_state: tail not resolved");
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double intercept = (sy - slope * sx) / n;
  prof.decay_rate = -slope;
  prof.tail_amplitude = std::exp(intercept);
  if (!(prof.decay_rate > 0.0))
    throw std::runtime_error("solve_rd_ground_state: r_max too small, tail not decayed");

  // past the fit window the trajectory leaves the separatrix at round-off
  // scale; replace it by the fitted exponential so the profile is positive
  // and decreasing throughout
  for (int i = i1; i <= steps; ++i) {
    double fit = prof.tail_amplitude * std::exp(-prof.decay_rate * prof.r[i]);
    bool bad = !(prof.u[i] > 0.0) || !(prof.du[i] < 0.0) ||
               std::abs(prof.u[i] - fit) > 0.25 * fit;
    if (bad) {
      for (int j = i; j <= steps; ++j) {
        prof.u[j] = prof.tail_amplitude * std::exp(-prof.decay_rate * prof.r[j]);
        prof.du[j] = -prof.decay_rate * prof.u[j];
      }
      break;
    }
  }
  for (int i = 1; i <= steps; ++i)
    if (!(prof.u[i] > 0.0) || !(prof.u[i] < prof.u[i - 1]))
      throw std::runtime_error("solve_rd_ground_state: profile not positive decreasing");

  auto radial_integral = [&](auto f) {
    double acc = 0.0;
    for (int i = 0; i <= steps; ++i) {
      double w = (i == 0 || i == steps) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      acc += w * f(i) * std::pow(prof.r[i], d - 1);
    }
    return acc * h / 3.0;
  };
  double S = prof.surface_area();
  prof.mass = S * radial_integral([&](int i) { return prof.u[i] * prof.u[i]; }) +
              prof.tail_integral(2.0) * S;
  prof.kinetic = S * radial_integral([&](int i) { return prof.du[i] * prof.du[i]; }) +
                 prof.tail_integral(2.0) * prof.decay_rate * prof.decay_rate * S;
  prof.lp = prof.lq_pow(p);
  prof.energy = 0.5 * prof.kinetic - prof.lp / p;
  prof.action = prof.energy + 0.5 * omega * prof.mass;
  return prof;
}

/// Exponent of mass against frequency: mu(omega) = mu(1) omega^{(4-d(p-2))/(2(p-2))}.
inline double mass_frequency_exponent(int d, double p) {
  return (4.0 - d * (p - 2.0)) / (2.0 * (p - 2.0));
}

/// Exponent of the action level: J(omega) = J(1) omega^{(2p-d(p-2))/(2(p-2))}.
inline double action_level_exponent(int d, double p) {
  return (2.0 * p - d * (p - 2.0)) / (2.0 * (p - 2.0));
}

/// Exponent of the energy level: E(mu) = E(1) mu^{(2p-d(p-2))/(4-d(p-2))}.
inline double energy_level_exponent(int d, double p) {
  return (2.0 * p - d * (p - 2.0)) / (4.0 - d * (p - 2.0));
}

namespace detail {

inline double reference_mass_at_unit_frequency(int d, double p) {
  static std::map<std::pair<int, double>, double> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(d, p);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  double m = solve_rd_ground_state(d, p, 1.0).mass;
  cache.emplace(key, m);
  return m;
}

}  // namespace detail

/// Invert the one-to-one mass-frequency correspondence of the R^d ground
/// state family (mass-subcritical p only).
inline double omega_of_mass(int d, double p, double mu) {
  if (!(p > 2.0) || !(p < 2.0 + 4.0 / d))
    throw std::invalid_argument("omega_of_mass: requires p in (2, 2+4/d)");
  if (!(mu > 0.0)) throw std::invalid_argument("omega_of_mass: mu > 0 required");
  double mu1 = detail::reference_mass_at_unit_frequency(d, p);
  return std::pow(mu / mu1, 1.0 / mass_frequency_exponent(d, p));
}

/// Sharp R^d Gagliardo-Nirenberg constant K_{q,R^d}: the quotient is
/// maximized by the NLS ground state with nonlinearity q, so shoot at
/// omega = 1 and evaluate.
inline double estimate_k_q_rd(int d, double q) {
  auto prof = solve_rd_ground_state(d, q, 1.0);
  double A = (d + (2.0 - d) * q / 2.0) / 2.0;  // exponent of |u|_2^2
  double B = (q / 2.0 - 1.0) * d / 2.0;        // exponent of |u'|_2^2
  return prof.lq_pow(q) / (std::pow(prof.mass, A) * std::pow(prof.kinetic, B));
}

struct SobolevConstants {
  double s_grid;  // sharp constant on the unit grid: (2d)^{-1/d}
  double s_rd;    // sharp constant on R^d: Gamma(1+d/2)^{1/d} / (d sqrt(pi))
};

inline SobolevConstants sobolev_constants(int d) {
  if (d < 2) throw std::invalid_argument("sobolev_constants: d >= 2");
  SobolevConstants c;
  c.s_grid = std::pow(2.0 * d, -1.0 / d);
  c.s_rd = std::pow(std::tgamma(1.0 + 0.5 * d), 1.0 / d) / (d * std::sqrt(M_PI));
  if (!(c.s_grid > c.s_rd))
    throw std::logic_error("sobolev_constants: grid constant not larger");
  return c;
}

}  // namespace gridlimit
