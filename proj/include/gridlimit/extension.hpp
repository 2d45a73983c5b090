#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gridlimit/grid_function.hpp"
#include "gridlimit/lattice.hpp"
#include "gridlimit/radial.hpp"

namespace gridlimit {

namespace detail {

// Gaussian elimination with partial pivoting for the tiny per-simplex systems.
template <int N>
inline void solve_small(double A[N][N], double b[N], int n) {
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(A[c][k], A[piv][k]);
      std::swap(b[c], b[piv]);
    }
    if (A[c][c] == 0.0) throw std::runtime_error("degenerate simplex");
    for (int r = c + 1; r < n; ++r) {
      double f = A[r][c] / A[c][c];
      for (int k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  for (int r = n - 1; r >= 0; --r) {
    for (int k = r + 1; k < n; ++k) b[r] -= A[r][k] * b[k];
    b[r] /= A[r][r];
  }
}

/// Gradient of the affine interpolant on a simplex, from the linear system
/// built out of the consecutive vertex differences (the simplex edges).
inline Point simplex_gradient(const MetricGrid& g, const Simplex& s,
                              const std::vector<double>& vertex_values) {
  const int d = g.dim;
  double A[kMaxDim][kMaxDim];
  double b[kMaxDim];
  for (int t = 0; t < d; ++t) {
    const Point& p0 = g.vertex_coords[s.vertices[t]];
    const Point& p1 = g.vertex_coords[s.vertices[t + 1]];
    for (int k = 0; k < d; ++k) A[t][k] = p1[k] - p0[k];
    b[t] = vertex_values[s.vertices[t + 1]] - vertex_values[s.vertices[t]];
  }
  solve_small<kMaxDim>(A, b, d);
  Point grad{};
  for (int k = 0; k < d; ++k) grad[k] = b[k];
  return grad;
}

inline double simplex_volume(const MetricGrid& g, const Simplex& s) {
  const int d = g.dim;
  double A[kMaxDim][kMaxDim];
  for (int t = 0; t < d; ++t) {
    const Point& p0 = g.vertex_coords[s.vertices[t]];
    const Point& p1 = g.vertex_coords[s.vertices[t + 1]];
    for (int k = 0; k < d; ++k) A[t][k] = p1[k] - p0[k];
  }
  double det = 1.0;
  for (int c = 0; c < d; ++c) {
    int piv = c;
    for (int r = c + 1; r < d; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (piv != c) {
      for (int k = 0; k < d; ++k) std::swap(A[c][k], A[piv][k]);
      det = -det;
    }
    if (A[c][c] == 0.0) return 0.0;
    det *= A[c][c];
    for (int r = c + 1; r < d; ++r) {
      double f = A[r][c] / A[c][c];
      for (int k = c; k < d; ++k) A[r][k] -= f * A[c][k];
    }
  }
  double fact = 1.0;
  for (int i = 2; i <= d; ++i) fact *= i;
  return std::abs(det) / fact;
}

/// Symmetric simplex quadrature of Grundmann-Moller type, degree 2s+1,
/// stored as barycentric coordinates with weights summing to one.
struct SimplexRule {
  int d = 0;
  std::vector<std::vector<double>> bary;  // each of size d+1
  std::vector<double> weight;
};

inline void compositions(int total, int parts, std::vector<int>& cur,
                         std::vector<std::vector<int>>& out) {
  if (parts == 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int v = 0; v <= total; ++v) {
    cur.push_back(v);
    compositions(total - v, parts - 1, cur, out);
    cur.pop_back();
  }
}

inline const SimplexRule& simplex_rule(int d, int s) {
  static std::map<std::pair<int, int>, SimplexRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(d, s);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  SimplexRule rule;
  rule.d = d;
  double total_weight = 0.0;
  for (int i = 0; i <= s; ++i) {
    double num = std::pow(static_cast<double>(d + 2 * s + 1 - 2 * i), 2 * s + 1);
    double den = 1.0;
    for (int k = 2; k <= i; ++k) den *= k;
    for (int k = 2; k <= d + 2 * s + 1 - i; ++k) den *= k;
    double ci = ((i % 2 == 0) ? 1.0 : -1.0) * std::pow(2.0, -2.0 * s) * num / den;

    std::vector<std::vector<int>> comps;
    std::vector<int> cur;
    compositions(s - i, d + 1, cur, comps);
    double denom = d + 2.0 * (s - i) + 1.0;
    for (auto& beta : comps) {
      std::vector<double> lam(d + 1);
      for (int j = 0; j <= d; ++j) lam[j] = (2.0 * beta[j] + 1.0) / denom;
      rule.bary.push_back(std::move(lam));
      rule.weight.push_back(ci);
      total_weight += ci;
    }
  }
  for (double& w : rule.weight) w /= total_weight;
  return cache.emplace(key, std::move(rule)).first->second;
}

}  // namespace detail

/// Piecewise-affine extension of a grid function to R^d: determined by the
/// vertex values and the simplex decomposition of the cells.
class ExtendedFunction {
 public:
  ExtendedFunction(std::shared_ptr<const MetricGrid> grid, std::vector<double> vertex_values)
      : grid_(std::move(grid)), values_(std::move(vertex_values)) {
    if (values_.size() != static_cast<std::size_t>(grid_->num_vertices()))
      throw std::invalid_argument("ExtendedFunction: value count mismatch");
  }

  const MetricGrid& grid() const { return *grid_; }
  const std::shared_ptr<const MetricGrid>& grid_ptr() const { return grid_; }
  const std::vector<double>& vertex_values() const { return values_; }

  double evaluate(const Point& x) const {
    const MetricGrid& g = *grid_;
    switch (g.spec.lattice) {
      case Lattice::cubic: return eval_cubic(x);
      case Lattice::triangular:
      case Lattice::hexagonal: return eval_planar(x);
    }
    throw std::logic_error("unreachable");
  }

 private:
  double eval_cubic(const Point& x) const {
    const MetricGrid& g = *grid_;
    const int d = g.dim, W = g.spec.window;
    const double eps = g.spec.epsilon;
    LatticeKey corner{};
    double y[kMaxDim];
    for (int k = 0; k < d; ++k) {
      double t = x[k] / eps;
      if (t < -W - 1e-12 || t > W + 1e-12)
        throw std::domain_error("ExtendedFunction: point outside the window");
      int c = static_cast<int>(std::floor(t));
      c = std::clamp(c, -W, W - 1);
      corner[k] = c;
      y[k] = std::clamp(t - c, 0.0, 1.0);
    }
    // permutation sorting the offsets ascending identifies the simplex;
    // interpolate along the monotone path (largest offset fills first)
    int idx[kMaxDim];
    std::iota(idx, idx + d, 0);
    std::stable_sort(idx, idx + d, [&](int a, int b) { return y[a] > y[b]; });

    LatticeKey key = corner;
    double val = (1.0 - y[idx[0]]) * values_[g.vertex_id(key)];
    for (int t = 0; t < d; ++t) {
      ++key[idx[t]];
      double lam = (t + 1 < d) ? (y[idx[t]] - y[idx[t + 1]]) : y[idx[d - 1]];
      val += lam * values_[g.vertex_id(key)];
    }
    return val;
  }

  double eval_planar(const Point& x) const {
    const MetricGrid& g = *grid_;
    const int W = g.spec.window;
    const double eps = g.spec.epsilon;
    std::vector<int> cand;
    if (g.spec.lattice == Lattice::triangular) {
      double j = x[1] / (0.5 * std::sqrt(3.0) * eps);
      double i = x[0] / eps - 0.5 * j;
      int i0 = static_cast<int>(std::floor(i)), j0 = static_cast<int>(std::floor(j));
      for (int di = -1; di <= 1; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          int ii = i0 + di, jj = j0 + dj;
          if (ii < -W || ii >= W || jj < -W || jj >= W) continue;
          int base = 2 * ((ii + W) * 2 * W + (jj + W));
          cand.push_back(base);
          cand.push_back(base + 1);
        }
    } else {
      double m = (x[0] / 3.0 + x[1] / std::sqrt(3.0)) / eps;
      double n = (x[0] / 3.0 - x[1] / std::sqrt(3.0)) / eps;
      int m0 = static_cast<int>(std::floor(m)), n0 = static_cast<int>(std::floor(n));
      for (int dm = 0; dm <= 1; ++dm)
        for (int dn = 0; dn <= 1; ++dn) {
          int mm = m0 + dm, nn = n0 + dn;
          if (mm < -W || mm > W || nn < -W || nn > W) continue;
          cand.push_back((mm + W) * (2 * W + 1) + (nn + W));
        }
    }
    for (int c : cand) {
      for (int si : g.cell_simplexes[c]) {
        const Simplex& s = g.simplexes[si];
        double lam[3];
        if (!barycentric2(s, x, lam)) continue;
        return lam[0] * values_[s.vertices[0]] + lam[1] * values_[s.vertices[1]] +
               lam[2] * values_[s.vertices[2]];
      }
    }
    throw std::domain_error("ExtendedFunction: point outside the window");
  }

  bool barycentric2(const Simplex& s, const Point& x, double lam[3]) const {
    const MetricGrid& g = *grid_;
    const Point& a = g.vertex_coords[s.vertices[0]];
    const Point& b = g.vertex_coords[s.vertices[1]];
    const Point& c = g.vertex_coords[s.vertices[2]];
    double det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    lam[1] = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
    lam[2] = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
    lam[0] = 1.0 - lam[1] - lam[2];
    const double tol = -1e-12;
    return lam[0] >= tol && lam[1] >= tol && lam[2] >= tol;
  }

  std::shared_ptr<const MetricGrid> grid_;
  std::vector<double> values_;
};

inline ExtendedFunction extend(const GridFunction& u) {
  if (!u.vertex_consistent())
    throw std::invalid_argument("extend: vertex-inconsistent grid function");
  const MetricGrid& g = u.grid();
  std::vector<double> vv(g.num_vertices());
  for (int v = 0; v < g.num_vertices(); ++v) vv[v] = u.vertex_value(v);
  return ExtendedFunction(u.grid_ptr(), std::move(vv));
}

/// Edgewise linear interpolant between the endpoint values: the restriction
/// of the piecewise-affine extension back to the grid.
inline GridFunction tilde_restrict(const GridFunction& u) {
  GridFunction out(u.grid_ptr(), u.quad());
  const int n = u.quad().n;
  for (int e = 0; e < u.grid().num_edges(); ++e) {
    auto s = u.edge(e);
    auto t = out.edge(e);
    double a = s[0], b = s[n];
    for (int i = 0; i <= n; ++i)
      t[i] = a + (b - a) * (static_cast<double>(i) / n);
  }
  return out;
}

enum class RdNormKind { l2, grad_l2, lq };

namespace detail {

template <class F>
double gm_integrate_simplex(const Point* verts, const double* vals, int d, int s, F&& f) {
  const SimplexRule& rule = simplex_rule(d, s);
  // volume via the difference matrix
  double A[kMaxDim][kMaxDim];
  for (int t = 0; t < d; ++t)
    for (int k = 0; k < d; ++k) A[t][k] = verts[t + 1][k] - verts[0][k];
  double det = 1.0;
  {
    double M[kMaxDim][kMaxDim];
    std::copy(&A[0][0], &A[0][0] + kMaxDim * kMaxDim, &M[0][0]);
    for (int c = 0; c < d; ++c) {
      int piv = c;
      for (int r = c + 1; r < d; ++r)
        if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
      if (piv != c) {
        for (int k = 0; k < d; ++k) std::swap(M[c][k], M[piv][k]);
        det = -det;
      }
      det *= M[c][c];
      for (int r = c + 1; r < d; ++r) {
        double fmul = M[r][c] / M[c][c];
        for (int k = c; k < d; ++k) M[r][k] -= fmul * M[c][k];
      }
    }
  }
  double fact = 1.0;
  for (int i = 2; i <= d; ++i) fact *= i;
  double vol = std::abs(det) / fact;

  double acc = 0.0;
  Point x{};
  for (std::size_t k = 0; k < rule.weight.size(); ++k) {
    double v = 0.0;
    for (int j = 0; j <= d; ++j) v += rule.bary[k][j] * vals[j];
    for (int c = 0; c < d; ++c) {
      x[c] = 0.0;
      for (int j = 0; j <= d; ++j) x[c] += rule.bary[k][j] * verts[j][c];
    }
    acc += rule.weight[k] * f(x, v);
  }
  return vol * acc;
}

// one refinement level: longest-edge bisection applied d times
template <class F>
double gm_integrate_refined(Point* verts, double* vals, int d, int s, int level, F&& f) {
  if (level == 0) return gm_integrate_simplex(verts, vals, d, s, f);
  int ia = 0, ib = 1;
  double best = -1.0;
  for (int a = 0; a <= d; ++a)
    for (int b = a + 1; b <= d; ++b) {
      double l2 = 0.0;
      for (int k = 0; k < d; ++k)
        l2 += (verts[a][k] - verts[b][k]) * (verts[a][k] - verts[b][k]);
      if (l2 > best) {
        best = l2;
        ia = a;
        ib = b;
      }
    }
  Point mid{};
  for (int k = 0; k < d; ++k) mid[k] = 0.5 * (verts[ia][k] + verts[ib][k]);
  double vmid = 0.5 * (vals[ia] + vals[ib]);

  Point saved_v = verts[ib];
  double saved_val = vals[ib];
  verts[ib] = mid;
  vals[ib] = vmid;
  double left = gm_integrate_refined(verts, vals, d, s, level - 1, f);
  verts[ib] = saved_v;
  vals[ib] = saved_val;

  saved_v = verts[ia];
  saved_val = vals[ia];
  verts[ia] = mid;
  vals[ia] = vmid;
  double right = gm_integrate_refined(verts, vals, d, s, level - 1, f);
  verts[ia] = saved_v;
  vals[ia] = saved_val;
  return left + right;
}

}  // namespace detail

/// R^d norms of the extension. grad_l2 and l2 use the exact per-simplex
/// formulas for affine functions; lq uses a degree-7 symmetric simplex rule
/// with one refinement-level error check.
inline double rd_norms(const ExtendedFunction& Au, RdNormKind kind, double q = 0.0) {
  const MetricGrid& g = Au.grid();
  const auto& vv = Au.vertex_values();
  const int d = g.dim;

  if (kind == RdNormKind::grad_l2) {
    double acc = 0.0;
    for (const auto& s : g.simplexes) {
      Point grad = detail::simplex_gradient(g, s, vv);
      double g2 = 0.0;
      for (int k = 0; k < d; ++k) g2 += grad[k] * grad[k];
      acc += detail::simplex_volume(g, s) * g2;
    }
    return acc;
  }

  if (kind == RdNormKind::l2) {
    // exact integral of the square of an affine function:
    // |S| ((sum b)^2 + sum b^2) / ((d+1)(d+2))
    double acc = 0.0;
    for (const auto& s : g.simplexes) {
      double sum = 0.0, sq = 0.0;
      for (int v : s.vertices) {
        sum += vv[v];
        sq += vv[v] * vv[v];
      }
      acc += detail::simplex_volume(g, s) * (sum * sum + sq) /
             ((d + 1.0) * (d + 2.0));
    }
    return acc;
  }

  if (!(q >= 1.0)) throw std::invalid_argument("rd_norms: q >= 1 required");
  double coarse = 0.0, fine = 0.0;
  Point verts[kMaxDim + 1];
  double vals[kMaxDim + 1];
  auto integrand = [q](const Point&, double v) { return std::pow(std::abs(v), q); };
  for (const auto& s : g.simplexes) {
    for (int j = 0; j <= d; ++j) {
      verts[j] = g.vertex_coords[s.vertices[j]];
      vals[j] = vv[s.vertices[j]];
    }
    coarse += detail::gm_integrate_simplex(verts, vals, d, 3, integrand);
    fine += detail::gm_integrate_refined(verts, vals, d, 3, d, integrand);
  }
  if (std::abs(fine - coarse) > 1e-8 * (std::abs(fine) + 1e-300) && std::abs(fine) > 1e-290)
    throw std::runtime_error("rd_norms: refinement check failed for lq quadrature");
  return fine;
}

/// Translate samples by an integer lattice vector given in lattice-key units.
/// Samples moved in from outside the window are zero (Dirichlet fill).
inline GridFunction translate_by_key(const GridFunction& u, const LatticeKey& shift) {
  const MetricGrid& g = u.grid();
  GridFunction out(u.grid_ptr(), u.quad());
  const int n = u.quad().n;
  for (int e = 0; e < g.num_edges(); ++e) {
    LatticeKey tk = g.vertex_keys[g.edges[e].tail];
    LatticeKey hk = g.vertex_keys[g.edges[e].head];
    for (int k = 0; k < kMaxDim; ++k) {
      tk[k] -= shift[k];
      hk[k] -= shift[k];
    }
    int tv = g.vertex_id(tk), hv = g.vertex_id(hk);
    if (tv < 0 || hv < 0) continue;  // source outside the window: stay zero
    int src = -1;
    for (const auto& ie : g.incidence[tv]) {
      const Edge& se = g.edges[ie.edge];
      if ((se.tail == tv && se.head == hv) || (se.tail == hv && se.head == tv)) src = ie.edge;
    }
    if (src < 0) continue;
    auto si = u.edge(src);
    auto so = out.edge(e);
    // lexicographic orientation is translation invariant
    for (int i = 0; i <= n; ++i) so[i] = si[i];
  }
  return out;
}

struct RecenterResult {
  GridFunction u;
  LatticeKey shift_key{};  // translation applied, in key units: result(x) = input(x - shift)
  Point shift{};           // the same translation in physical coordinates
};

/// Translate by a lattice vector so that the cell carrying the largest L2
/// mass lands at the origin. Mass is binned at the tail vertex of each edge,
/// which makes the choice equivariant under lattice translations, so
/// recentering inverts a lattice shift exactly. Ties break to the smallest
/// lexicographic bin key.
inline RecenterResult recenter(const GridFunction& u) {
  const MetricGrid& g = u.grid();
  if (!(sq_norm_l2(u) > 0.0)) throw std::invalid_argument("recenter: zero function");

  std::vector<double> mass(g.num_vertices(), 0.0);
  for (int e = 0; e < g.num_edges(); ++e) mass[g.edges[e].tail] += edge_sq_l2(u, e);
  int best = 0;
  for (int v = 1; v < g.num_vertices(); ++v) {
    if (mass[v] > mass[best] ||
        (mass[v] == mass[best] && g.vertex_keys[v] < g.vertex_keys[best]))
      best = v;
  }
  const LatticeKey& bk = g.vertex_keys[best];

  LatticeKey shift{};
  if (g.spec.lattice == Lattice::hexagonal) {
    // snap to the Bravais sublattice: only (3(m+n), m-n) keys are honest
    // translations of the honeycomb
    double mr = (bk[0] / 3.0 + bk[1]) / 2.0, nr = (bk[0] / 3.0 - bk[1]) / 2.0;
    double bestd = std::numeric_limits<double>::max();
    for (int m = static_cast<int>(std::floor(mr)) - 1; m <= static_cast<int>(std::ceil(mr)) + 1; ++m)
      for (int n = static_cast<int>(std::floor(nr)) - 1; n <= static_cast<int>(std::ceil(nr)) + 1; ++n) {
        double dp = 3.0 * (m + n) - bk[0], dq = static_cast<double>(m - n) - bk[1];
        double dist = dp * dp * 0.25 + dq * dq * 0.75;
        if (dist < bestd) {
          bestd = dist;
          shift[0] = -3 * (m + n);
          shift[1] = -(m - n);
        }
      }
  } else {
    for (int k = 0; k < kMaxDim; ++k) shift[k] = -bk[k];
  }

  Point phys{};
  if (g.spec.lattice == Lattice::cubic) {
    for (int k = 0; k < g.dim; ++k) phys[k] = g.spec.epsilon * shift[k];
  } else {
    phys[0] = 0.5 * g.spec.epsilon * shift[0];
    phys[1] = 0.5 * std::sqrt(3.0) * g.spec.epsilon * shift[1];
  }
  return RecenterResult{translate_by_key(u, shift), shift, phys};
}

/// int_{|x| > R} phi^2 + |grad phi|^2 for the profile: Simpson over the
/// stored samples past R plus the analytic exponential end.
inline double profile_h1_tail(const RadialProfile& ref, double R) {
  const int d = ref.d;
  double S = ref.surface_area();
  double acc = 0.0;
  if (R >= ref.r_max())
    return S * (1.0 + ref.decay_rate * ref.decay_rate) * ref.tail_integral_from(2.0, R);
  std::size_t i0 = static_cast<std::size_t>(R / ref.h) + 1;
  if (i0 + 2 < ref.u.size()) {
    if ((ref.u.size() - i0) % 2 == 0) ++i0;  // keep an even interval count
    double simp = 0.0;
    for (std::size_t i = i0; i < ref.u.size(); ++i) {
      std::size_t loc = i - i0;
      double w = (loc == 0 || i + 1 == ref.u.size()) ? 1.0 : (loc % 2 == 1 ? 4.0 : 2.0);
      simp += w * (ref.u[i] * ref.u[i] + ref.du[i] * ref.du[i]) *
              std::pow(ref.r[i], d - 1);
    }
    acc += S * simp * ref.h / 3.0;
  }
  acc += S * (1.0 + ref.decay_rate * ref.decay_rate) * ref.tail_integral(2.0);
  return acc;
}

/// H1(R^d) distance between the extension and a radial profile evaluated
/// over the window, plus the analytic exponential tail of the profile
/// outside the largest centered ball covered by the truncation.
inline double h1_distance_to_profile(const ExtendedFunction& Au, const RadialProfile& ref) {
  const MetricGrid& g = Au.grid();
  const int d = g.dim;
  if (ref.d != d) throw std::invalid_argument("h1_distance_to_profile: dimension mismatch");
  const auto& vv = Au.vertex_values();

  double acc = 0.0;
  Point verts[kMaxDim + 1];
  double vals[kMaxDim + 1];
  for (const auto& s : g.simplexes) {
    for (int j = 0; j <= d; ++j) {
      verts[j] = g.vertex_coords[s.vertices[j]];
      vals[j] = vv[s.vertices[j]];
    }
    Point grad = detail::simplex_gradient(g, s, vv);
    acc += detail::gm_integrate_simplex(
        verts, vals, d, 2, [&](const Point& x, double v) {
          double r2 = 0.0;
          for (int k = 0; k < d; ++k) r2 += x[k] * x[k];
          double r = std::sqrt(r2);
          double phi = ref.value(r);
          double dphi = ref.derivative(r);
          double diff2 = (v - phi) * (v - phi);
          for (int k = 0; k < d; ++k) {
            double gphi = r > 1e-14 ? dphi * x[k] / r : 0.0;
            diff2 += (grad[k] - gphi) * (grad[k] - gphi);
          }
          return diff2;
        });
  }

  // tail of phi outside the inscribed ball of the covered region
  double rmin = std::numeric_limits<double>::max();
  for (int v = 0; v < g.num_vertices(); ++v) {
    if (!g.boundary_vertex[v]) continue;
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) r2 += g.vertex_coords[v][k] * g.vertex_coords[v][k];
    rmin = std::min(rmin, std::sqrt(r2));
  }
  double R = std::max(0.0, rmin - g.spec.epsilon);
  acc += profile_h1_tail(ref, R);
  return std::sqrt(acc);
}

}  // namespace gridlimit
