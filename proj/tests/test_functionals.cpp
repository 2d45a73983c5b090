#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "grid_test_utils.hpp"
#include "gridlimit/functionals.hpp"
#include "test_helpers.hpp"

using namespace gridlimit;

namespace {

std::shared_ptr<const MetricGrid> cubic_grid(int d, double eps, int W) {
  GridSpec s;
  s.lattice = Lattice::cubic;
  s.dim = d;
  s.epsilon = eps;
  s.window = W;
  return make_grid(s);
}

}  // namespace

TEST_CASE("lattice coefficients", "[functionals]") {
  auto c2 = ProblemParams::cubic(2, 3.0);
  CHECK(c2.c_grad == 0.5);
  CHECK(c2.c_mass == 0.25);
  CHECK(c2.c_nl == Catch::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(c2.c_el() == Catch::Approx(0.5).epsilon(1e-15));

  auto c3 = ProblemParams::cubic(3, 4.0);
  CHECK(c3.c_mass == Catch::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(c3.c_nl == Catch::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(c3.c_el() == Catch::Approx(1.0 / 3.0).epsilon(1e-15));

  auto tri = ProblemParams::triangular(3.0);
  CHECK(tri.c_grad == Catch::Approx(0.5 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(tri.c_nl == Catch::Approx(1.0 / (2.0 * std::sqrt(3.0) * 3.0)).epsilon(1e-15));
  CHECK(tri.c_el() == Catch::Approx(0.5).epsilon(1e-15));

  auto hex = ProblemParams::hexagonal(5.0);
  CHECK(hex.c_grad == Catch::Approx(0.5 * std::sqrt(3.0)).epsilon(1e-15));
  CHECK(hex.c_nl == Catch::Approx(std::sqrt(3.0) / 10.0).epsilon(1e-15));
  CHECK(hex.c_el() == Catch::Approx(0.5).epsilon(1e-15));

  // validity windows
  auto bad = ProblemParams::cubic(3, 6.0);
  bad.omega = 1.0;
  CHECK_THROWS_AS(bad.validate_action(), std::invalid_argument);
  auto ok = ProblemParams::cubic(2, 6.0);  // 2* = inf at d = 2
  ok.omega = 1.0;
  CHECK_NOTHROW(ok.validate_action());
  auto crit = ProblemParams::cubic(2, 4.0);  // 2 + 4/d = 4 at d = 2
  crit.mu = 1.0;
  CHECK_THROWS_AS(crit.validate_energy(), std::invalid_argument);
}

TEST_CASE("functional values on zero and coefficient wiring", "[functionals]") {
  auto g = cubic_grid(2, 1.0, 2);
  EdgeQuadrature q{8, QuadRule::simpson};
  GridFunction z(g, q);
  auto pp = ProblemParams::cubic(2, 4.0);
  pp.omega = 1.0;
  CHECK(energy_tilde(z, pp) == 0.0);
  CHECK(action_tilde(z, pp) == 0.0);

  std::mt19937_64 rng(42);
  auto u = testutil::random_grid_function(g, q, rng);
  double gsq = sq_h1_semi(u), l4 = norm_lp_pow(u, 4.0), l2 = sq_norm_l2(u);
  CHECK(energy_tilde(u, pp) == Catch::Approx(0.5 * gsq - 0.125 * l4).epsilon(1e-14));
  CHECK(action_tilde(u, pp) ==
        Catch::Approx(0.5 * gsq + 0.25 * l2 - 0.125 * l4).epsilon(1e-14));
}

TEST_CASE("nehari projection", "[functionals]") {
  auto g = cubic_grid(2, 0.5, 3);
  EdgeQuadrature q{8, QuadRule::simpson};
  std::mt19937_64 rng(7);

  for (double p : {3.0, 4.0}) {
    auto pp = ProblemParams::cubic(2, p);
    pp.omega = 0.8;
    for (int trial = 0; trial < 25; ++trial) {
      auto u = testutil::random_grid_function(g, q, rng);
      auto v = nehari_project(u, pp);
      double scale = sq_h1_semi(v) / pp.c_el() + pp.omega * sq_norm_l2(v);
      CHECK(std::abs(nehari_residual(v, pp)) <= 1e-12 * scale);

      // projection is invariant under positive rescaling of the input
      auto w = nehari_project(scaled(u, 3.7), pp);
      for (std::size_t i = 0; i < v.data().size(); ++i)
        CHECK(w.data()[i] == Catch::Approx(v.data()[i]).margin(1e-12).epsilon(1e-12));

      // a projected function projects to itself
      auto v2 = nehari_project(v, pp);
      for (std::size_t i = 0; i < v.data().size(); ++i)
        CHECK(v2.data()[i] == Catch::Approx(v.data()[i]).margin(1e-13).epsilon(1e-13));

      // on-manifold action value (kappa/d) |u|_p^p
      double J = action_tilde(v, pp);
      double target = 2.0 * pp.c_grad * pp.c_el() * pp.kappa() * norm_lp_pow(v, p);
      CHECK(J == Catch::Approx(target).epsilon(1e-12));
      CHECK(target ==
            Catch::Approx(pp.kappa() / pp.d * norm_lp_pow(v, p)).epsilon(1e-14));
    }
  }

  // arithmetic of the projection coefficient: d=2, omega=1, (1,1,3), p=4
  auto pp = ProblemParams::cubic(2, 4.0);
  pp.omega = 1.0;
  CHECK(nehari_coefficient(1.0, 1.0, 3.0, pp) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(nehari_coefficient(1.0, 1.0, 0.0, pp), std::invalid_argument);
}

TEST_CASE("multiplier forms agree and scale correctly", "[functionals]") {
  auto g = cubic_grid(2, 0.5, 3);
  EdgeQuadrature q{8, QuadRule::simpson};
  std::mt19937_64 rng(11);

  std::vector<ProblemParams> cases = {ProblemParams::cubic(2, 3.0),
                                      ProblemParams::cubic(3, 3.5),
                                      ProblemParams::triangular(3.0),
                                      ProblemParams::hexagonal(3.0)};
  for (auto& pp : cases) {
    std::shared_ptr<const MetricGrid> grid = g;
    if (pp.lattice != Lattice::cubic) {
      GridSpec s;
      s.lattice = pp.lattice;
      s.epsilon = 0.5;
      s.window = 3;
      grid = make_grid(s);
    } else if (pp.d == 3) {
      grid = cubic_grid(3, 0.5, 2);
    }
    for (int trial = 0; trial < 20; ++trial) {
      auto u = testutil::random_grid_function(grid, q, rng);
      double l1 = lagrange_multiplier(u, pp);
      double l2 = lagrange_multiplier_energy_form(u, pp);
      CHECK(l1 == Catch::Approx(l2).margin(1e-12).epsilon(1e-12));

      // homogeneity: L(cu) = c^{p-2} c_el |u|_p^p / |u|^2 - |u'|^2 / |u|^2
      double c = 2.3;
      double expect = std::pow(c, pp.p - 2.0) * pp.c_el() * norm_lp_pow(u, pp.p) /
                          sq_norm_l2(u) -
                      sq_h1_semi(u) / sq_norm_l2(u);
      CHECK(lagrange_multiplier(scaled(u, c), pp) ==
            Catch::Approx(expect).epsilon(1e-11));
    }
  }

  GridFunction z(g, q);
  CHECK_THROWS_AS(lagrange_multiplier(z, ProblemParams::cubic(2, 3.0)),
                  std::invalid_argument);
}

TEST_CASE("gn quotient amplitude invariance and hat-function oracle", "[functionals]") {
  auto g = cubic_grid(2, 1.0, 2);
  EdgeQuadrature q{64, QuadRule::simpson};
  std::mt19937_64 rng(13);
  auto u = testutil::random_grid_function(g, q, rng);
  for (double qq : {3.0, 4.0, 6.0})
    CHECK(gn_quotient_grid(scaled(u, 2.0), qq) ==
          Catch::Approx(gn_quotient_grid(u, qq)).epsilon(1e-12));

  // hat function: 1 at the origin vertex, linear to 0 along the 4 incident
  // edges. Piecewise-polynomial integrals done by hand:
  //   |u|_4^4 = 4 * int_0^1 (1-t)^4 = 4/5,  |u|_2^2 = 4/3,  |u'|_2^2 = 4.
  GridFunction hat(g, q);
  int origin = -1;
  for (int v = 0; v < g->num_vertices(); ++v)
    if (g->vertex_coords[v][0] == 0 && g->vertex_coords[v][1] == 0) origin = v;
  REQUIRE(origin >= 0);
  for (const auto& ie : g->incidence[origin]) {
    auto s = hat.edge(ie.edge);
    for (int i = 0; i <= q.n; ++i) {
      double t = static_cast<double>(i) / q.n;
      s[i] = ie.sign > 0 ? 1.0 - t : t;
    }
  }
  double oracle = (4.0 / 5.0) / ((4.0 / 3.0) * 4.0);
  CHECK(gn_quotient_grid(hat, 4.0) == Catch::Approx(oracle).epsilon(1e-7));

  GridFunction flat(g, q);
  for (double& x : flat.data()) x = 1.0;
  CHECK_THROWS_AS(gn_quotient_grid(flat, 4.0), std::invalid_argument);
}

TEST_CASE("edgelength scaling of the GN quotient is an exact identity", "[functionals]") {
  EdgeQuadrature q{8, QuadRule::simpson};
  std::mt19937_64 rng(17);
  for (int d : {2, 3}) {
    double eps = 0.35;
    auto ge = cubic_grid(d, eps, 2);
    auto g1 = cubic_grid(d, 1.0, 2);
    auto ue = testutil::random_grid_function(ge, q, rng);
    GridFunction v1(g1, q);
    v1.data() = ue.data();  // same samples, unit grid
    for (double qq : {3.0, 4.0}) {
      double lhs = gn_quotient_grid(ue, qq);
      double rhs = std::pow(eps, (qq / 2.0 - 1.0) * (d - 1.0)) * gn_quotient_grid(v1, qq);
      CHECK(lhs == Catch::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("scaling transform exponents and identities", "[functionals]") {
  CHECK(scaling_alpha(3.0) == Catch::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(scaling_beta(3.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(scaling_alpha(4.0) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(scaling_beta(4.0) == Catch::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(scaling_alpha(6.0), std::invalid_argument);
  CHECK_THROWS_AS(scaling_beta(6.0), std::invalid_argument);

  const double p = 3.0, eps = 0.5, omega = 0.9;
  auto ge = cubic_grid(2, eps, 3);
  EdgeQuadrature q{8, QuadRule::simpson};
  std::mt19937_64 rng(23);
  auto u = testutil::random_grid_function(ge, q, rng);

  auto uhat = scale_between_grids(u, p, ScaleDirection::to_unit);
  CHECK(uhat.grid().spec.epsilon == 1.0);

  const double inv_beta = 1.0 / scaling_beta(p);
  CHECK(sq_norm_l2(uhat) ==
        Catch::Approx(std::pow(eps, inv_beta) * sq_norm_l2(u)).epsilon(1e-12));
  CHECK(sq_h1_semi(uhat) ==
        Catch::Approx(std::pow(eps, 2.0 + inv_beta) * sq_h1_semi(u)).epsilon(1e-12));
  CHECK(norm_lp_pow(uhat, p) ==
        Catch::Approx(std::pow(eps, 2.0 + inv_beta) * norm_lp_pow(u, p)).epsilon(1e-12));

  // action transports at frequency eps^2 omega, energy as-is
  auto pp_eps = ProblemParams::cubic(2, p);
  pp_eps.omega = omega;
  auto pp_unit = ProblemParams::cubic(2, p);
  pp_unit.omega = eps * eps * omega;
  CHECK(action_tilde(uhat, pp_unit) ==
        Catch::Approx(std::pow(eps, 2.0 + inv_beta) * action_tilde(u, pp_eps))
            .epsilon(1e-12));
  CHECK(energy_tilde(uhat, pp_unit) ==
        Catch::Approx(std::pow(eps, 2.0 + inv_beta) * energy_tilde(u, pp_eps))
            .epsilon(1e-12));

  // round trip reproduces the samples
  auto back = scale_between_grids(uhat, p, ScaleDirection::from_unit, eps);
  for (std::size_t i = 0; i < u.data().size(); ++i)
    CHECK(back.data()[i] == Catch::Approx(u.data()[i]).margin(1e-15).epsilon(1e-14));

  CHECK_THROWS_AS(scale_between_grids(u, 6.0, ScaleDirection::to_unit),
                  std::invalid_argument);
  CHECK_THROWS_AS(scale_between_grids(uhat, p, ScaleDirection::from_unit, 0.0),
                  std::invalid_argument);
}

TEST_CASE("interpolated GN ratio is bounded uniformly in eps", "[functionals]") {
  // d = 3, q = 8 > 2* = 6; ratio |u|_q^q / (eps^{q/2+1-a} |u|_2^a |u'|_2^{q-a})
  const double qq = 8.0;
  EdgeQuadrature quad{8, QuadRule::simpson};
  const double L = 6.0;

  auto family_max = [&](double eps) {
    GridSpec s;
    s.lattice = Lattice::cubic;
    s.dim = 3;
    s.epsilon = eps;
    s.window = static_cast<int>(std::lround(L / eps));
    auto g = make_grid(s);
    std::map<double, double> best;  // alpha -> max ratio
    for (double width : {0.6, 1.0, 1.6}) {
      auto u = testutil::gaussian_on_grid(g, quad, width);
      double num = norm_lp_pow(u, qq);
      double l2 = std::sqrt(sq_norm_l2(u)), h1 = std::sqrt(sq_h1_semi(u));
      for (double a : {0.5, 1.0, 2.0}) {
        double ratio = num / (std::pow(eps, qq / 2.0 + 1.0 - a) * std::pow(l2, a) *
                              std::pow(h1, qq - a));
        best[a] = std::max(best[a], ratio);
      }
    }
    return best;
  };

  auto cal = family_max(1.0);
  for (double eps : {0.5, 0.25}) {
    auto got = family_max(eps);
    for (auto& [a, r] : got) CHECK(r <= 1.05 * cal[a] + 1e-12);
  }
}
