#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace gridlimit {

inline constexpr int kMaxDim = 8;

/// Point in R^d, d <= kMaxDim; unused trailing coordinates are zero.
using Point = std::array<double, kMaxDim>;

/// Integer lattice coordinates of a vertex. Cubic grids store the lattice
/// multi-index directly; triangular/hexagonal grids store coordinates in
/// half-units, (p, q) -> (p*eps/2, q*eps*sqrt(3)/2), so that gluing of
/// shared vertices is exact integer arithmetic.
using LatticeKey = std::array<int, kMaxDim>;

enum class Lattice { cubic, triangular, hexagonal };
enum class Truncation { dirichlet_zero };

inline std::string to_string(Lattice l) {
  switch (l) {
    case Lattice::cubic: return "cubic";
    case Lattice::triangular: return "triangular";
    case Lattice::hexagonal: return "hexagonal";
  }
  return "?";
}

inline Lattice lattice_from_string(const std::string& s) {
  if (s == "cubic") return Lattice::cubic;
  if (s == "triangular" || s == "tri") return Lattice::triangular;
  if (s == "hexagonal" || s == "hex") return Lattice::hexagonal;
  throw std::invalid_argument("unknown lattice: " + s);
}

struct GridSpec {
  Lattice lattice = Lattice::cubic;
  int dim = 2;  // ambient dimension; must be 2 for triangular/hexagonal
  double epsilon = 1.0;
  int window = 1;  // cells per half-side of the truncation box
  Truncation truncation = Truncation::dirichlet_zero;
  std::size_t max_vertices = 20'000'000;  // resource guard
  std::size_t max_simplexes = 20'000'000;

  void validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
      throw std::invalid_argument("GridSpec: epsilon must be positive");
    if (window < 1) throw std::invalid_argument("GridSpec: window must be >= 1");
    if (lattice == Lattice::cubic) {
      if (dim < 2 || dim > kMaxDim)
        throw std::invalid_argument("GridSpec: cubic dim must be in [2, " +
                                    std::to_string(kMaxDim) + "]");
    } else if (dim != 2) {
      throw std::invalid_argument("GridSpec: triangular/hexagonal imply dim = 2");
    }
  }
};

struct Edge {
  int tail = -1;
  int head = -1;
  Point dir{};  // unit vector from tail to head
  double length = 0.0;
};

struct IncidentEdge {
  int edge = -1;
  int sign = 0;  // +1 if the vertex is the tail, -1 if the head
};

struct Cell {
  std::vector<int> vertices;  // corner ids in canonical order
};

struct Simplex {
  int cell = -1;
  std::vector<int> vertices;  // d+1 vertex ids, ordered along the lattice path
  std::vector<int> edges;     // grid edges contained in the closed simplex
};

namespace detail {
inline std::uint64_t pack_pair(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}
}  // namespace detail

/// Finite truncation of a periodic metric grid. Immutable after build_grid.
struct MetricGrid {
  GridSpec spec;
  int dim = 2;

  std::vector<LatticeKey> vertex_keys;
  std::vector<Point> vertex_coords;
  std::vector<Edge> edges;
  std::vector<std::vector<IncidentEdge>> incidence;
  std::vector<char> boundary_vertex;  // 1 = on the truncation boundary
  std::vector<Cell> cells;
  std::vector<Simplex> simplexes;
  std::vector<std::vector<int>> cell_simplexes;  // cell id -> simplex ids
  std::vector<int> edge_cell_count;     // cells of the truncation containing e
  std::vector<int> edge_simplex_total;  // simplexes containing e, all cells
  std::unordered_map<std::uint64_t, int> planar_vertex_ids;  // hexagonal only

  int num_vertices() const { return static_cast<int>(vertex_coords.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int degree(int v) const { return static_cast<int>(incidence[v].size()); }

  int full_degree() const {
    switch (spec.lattice) {
      case Lattice::cubic: return 2 * dim;
      case Lattice::triangular: return 6;
      case Lattice::hexagonal: return 3;
    }
    return 0;
  }

  /// Number of cells of the infinite lattice that contain a given edge.
  int full_edge_cell_count() const {
    return spec.lattice == Lattice::cubic ? (1 << (dim - 1)) : 2;
  }

  bool edge_is_interior(int e) const {
    return edge_cell_count[e] == full_edge_cell_count();
  }

  std::vector<int> boundary_vertices() const {
    std::vector<int> out;
    for (int v = 0; v < num_vertices(); ++v)
      if (boundary_vertex[v]) out.push_back(v);
    return out;
  }

  /// Vertex id for a lattice key, or -1 when the key is outside the window.
  /// Cubic and triangular ids are lexicographic ranks; hexagonal ids go
  /// through the construction map.
  int vertex_id(const LatticeKey& k) const {
    const int W = spec.window;
    if (spec.lattice == Lattice::cubic) {
      std::size_t id = 0, stride = 1;
      for (int i = dim - 1; i >= 0; --i) {
        if (k[i] < -W || k[i] > W) return -1;
        id += static_cast<std::size_t>(k[i] + W) * stride;
        stride *= 2 * W + 1;
      }
      return static_cast<int>(id);
    }
    if (spec.lattice == Lattice::triangular) {
      int j = k[1];
      if ((k[0] - j) % 2 != 0) return -1;
      int i = (k[0] - j) / 2;
      if (i < -W || i > W || j < -W || j > W) return -1;
      return (i + W) * (2 * W + 1) + (j + W);
    }
    auto it = planar_vertex_ids.find(detail::pack_pair(k[0], k[1]));
    return it == planar_vertex_ids.end() ? -1 : it->second;
  }
};

namespace detail {

struct GridBuilder {
  GridSpec spec;
  MetricGrid g;
  std::unordered_map<std::uint64_t, int> edge_ids;

  explicit GridBuilder(const GridSpec& s) : spec(s) {
    g.spec = s;
    g.dim = s.dim;
  }

  Point coordinate(const LatticeKey& k) const {
    Point p{};
    if (spec.lattice == Lattice::cubic) {
      for (int i = 0; i < spec.dim; ++i) p[i] = spec.epsilon * k[i];
    } else {
      p[0] = 0.5 * spec.epsilon * k[0];
      p[1] = 0.5 * std::sqrt(3.0) * spec.epsilon * k[1];
    }
    return p;
  }

  int add_vertex(const LatticeKey& k) {
    g.vertex_keys.push_back(k);
    g.vertex_coords.push_back(coordinate(k));
    return static_cast<int>(g.vertex_keys.size()) - 1;
  }

  // Orientation convention: tail is the vertex with lexicographically
  // smaller lattice key, so ids and directions are reproducible.
  int get_or_add_edge(int a, int b) {
    if (g.vertex_keys[b] < g.vertex_keys[a]) std::swap(a, b);
    auto key = pack_pair(a, b);
    auto it = edge_ids.find(key);
    if (it != edge_ids.end()) return it->second;
    Edge e;
    e.tail = a;
    e.head = b;
    double len2 = 0.0;
    for (int i = 0; i < spec.dim; ++i) {
      e.dir[i] = g.vertex_coords[b][i] - g.vertex_coords[a][i];
      len2 += e.dir[i] * e.dir[i];
    }
    e.length = std::sqrt(len2);
    for (int i = 0; i < spec.dim; ++i) e.dir[i] /= e.length;
    int id = static_cast<int>(g.edges.size());
    g.edges.push_back(e);
    edge_ids.emplace(key, id);
    return id;
  }

  void count_cell_edge(int a, int b) {
    int e = get_or_add_edge(a, b);
    if (static_cast<std::size_t>(e) >= g.edge_cell_count.size())
      g.edge_cell_count.resize(e + 1, 0);
    ++g.edge_cell_count[e];
  }

  void finalize() {
    g.edge_cell_count.resize(g.edges.size(), 0);
    g.edge_simplex_total.assign(g.edges.size(), 0);
    for (const auto& s : g.simplexes)
      for (int e : s.edges) ++g.edge_simplex_total[e];

    g.incidence.assign(g.num_vertices(), {});
    for (int e = 0; e < g.num_edges(); ++e) {
      g.incidence[g.edges[e].tail].push_back({e, +1});
      g.incidence[g.edges[e].head].push_back({e, -1});
    }
    const int full = g.full_degree();
    g.boundary_vertex.assign(g.num_vertices(), 0);
    for (int v = 0; v < g.num_vertices(); ++v)
      if (g.degree(v) < full) g.boundary_vertex[v] = 1;

    // connectedness check (construction should always produce one component)
    std::vector<char> seen(g.num_vertices(), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t reached = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (const auto& ie : g.incidence[v]) {
        const Edge& e = g.edges[ie.edge];
        int w = ie.sign > 0 ? e.head : e.tail;
        if (!seen[w]) {
          seen[w] = 1;
          ++reached;
          stack.push_back(w);
        }
      }
    }
    if (reached != static_cast<std::size_t>(g.num_vertices()))
      throw std::runtime_error("build_grid: grid is not connected");
  }
};

inline std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > std::size_t(1) << 60) return std::size_t(1) << 62;
    r *= base;
  }
  return r;
}

inline std::size_t factorial(int n) {
  std::size_t r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline MetricGrid build_cubic(const GridSpec& spec) {
  const int d = spec.dim, W = spec.window;
  const std::size_t side = 2 * std::size_t(W) + 1;
  const std::size_t nv = ipow(side, d);
  if (nv > spec.max_vertices)
    throw std::invalid_argument("build_grid: vertex count " + std::to_string(nv) +
                                " exceeds cap " + std::to_string(spec.max_vertices));
  const std::size_t ns = ipow(2 * std::size_t(W), d) * factorial(d);
  if (ns > spec.max_simplexes)
    throw std::invalid_argument("build_grid: simplex count exceeds cap");

  GridBuilder b(spec);
  b.g.vertex_keys.reserve(nv);
  b.g.vertex_coords.reserve(nv);

  // vertices in lexicographic key order; id is the lexicographic rank
  std::vector<std::size_t> stride(d);
  stride[d - 1] = 1;
  for (int i = d - 2; i >= 0; --i) stride[i] = stride[i + 1] * side;
  LatticeKey k{};
  for (int i = 0; i < d; ++i) k[i] = -W;
  for (;;) {
    b.add_vertex(k);
    int i = d - 1;
    while (i >= 0 && k[i] == W) k[i--] = -W;
    if (i < 0) break;
    ++k[i];
  }
  auto vid = [&](const LatticeKey& key) {
    std::size_t id = 0;
    for (int i = 0; i < d; ++i) id += static_cast<std::size_t>(key[i] + W) * stride[i];
    return static_cast<int>(id);
  };

  // edges: nearest lattice neighbours inside the window
  for (int v = 0; v < b.g.num_vertices(); ++v) {
    LatticeKey kv = b.g.vertex_keys[v];
    for (int j = 0; j < d; ++j) {
      if (kv[j] == W) continue;
      LatticeKey kn = kv;
      ++kn[j];
      b.get_or_add_edge(v, vid(kn));
    }
  }

  // cells and their Kuhn simplexes, one per permutation
  std::vector<int> perm(d);
  for (int i = 0; i < d; ++i) k[i] = -W;
  for (;;) {
    Cell cell;
    for (std::size_t bits = 0; bits < (std::size_t(1) << d); ++bits) {
      LatticeKey c = k;
      for (int j = 0; j < d; ++j)
        if (bits & (std::size_t(1) << (d - 1 - j))) ++c[j];
      cell.vertices.push_back(vid(c));
    }
    int cell_id = static_cast<int>(b.g.cells.size());
    b.g.cells.push_back(cell);
    b.g.cell_simplexes.emplace_back();

    for (std::size_t i = 0; i + 1 < cell.vertices.size(); ++i)
      for (int j = 0; j < d; ++j) {
        std::size_t other = i | (std::size_t(1) << j);
        if (other != i) b.count_cell_edge(cell.vertices[i], cell.vertices[other]);
      }

    std::iota(perm.begin(), perm.end(), 0);
    do {
      Simplex s;
      s.cell = cell_id;
      LatticeKey w = k;
      s.vertices.push_back(vid(w));
      // monotone lattice path: from the low corner, coordinates fill in the
      // order sigma(d), sigma(d-1), ..., sigma(1)
      for (int t = d - 1; t >= 0; --t) {
        int prev = s.vertices.back();
        ++w[perm[t]];
        int next = vid(w);
        s.vertices.push_back(next);
        s.edges.push_back(b.get_or_add_edge(prev, next));
      }
      b.g.cell_simplexes[cell_id].push_back(static_cast<int>(b.g.simplexes.size()));
      b.g.simplexes.push_back(std::move(s));
    } while (std::next_permutation(perm.begin(), perm.end()));

    int i = d - 1;
    while (i >= 0 && k[i] == W - 1) k[i--] = -W;
    if (i < 0) break;
    ++k[i];
  }

  b.finalize();
  return std::move(b.g);
}

inline MetricGrid build_triangular(const GridSpec& spec) {
  const int W = spec.window;
  const std::size_t side = 2 * std::size_t(W) + 1;
  const std::size_t nv = side * side;
  if (nv > spec.max_vertices)
    throw std::invalid_argument("build_grid: vertex count exceeds cap");

  GridBuilder b(spec);
  // vertex (i, j) at i*a1 + j*a2, a1 = eps*(1, 0), a2 = eps*(1/2, sqrt(3)/2);
  // half-unit key (2i + j, j)
  for (int i = -W; i <= W; ++i)
    for (int j = -W; j <= W; ++j) {
      LatticeKey k{};
      k[0] = 2 * i + j;
      k[1] = j;
      b.add_vertex(k);
    }
  auto vid = [&](int i, int j) {
    return static_cast<int>((i + W) * side + (j + W));
  };

  auto add_triangle = [&](int v0, int v1, int v2) {
    Cell cell;
    cell.vertices = {v0, v1, v2};
    int cell_id = static_cast<int>(b.g.cells.size());
    b.g.cells.push_back(cell);
    Simplex s;
    s.cell = cell_id;
    s.vertices = {v0, v1, v2};
    for (int t = 0; t < 3; ++t) {
      int a = cell.vertices[t], c = cell.vertices[(t + 1) % 3];
      b.count_cell_edge(a, c);
      s.edges.push_back(b.get_or_add_edge(a, c));
    }
    b.g.cell_simplexes.push_back({static_cast<int>(b.g.simplexes.size())});
    b.g.simplexes.push_back(std::move(s));
  };

  for (int i = -W; i < W; ++i)
    for (int j = -W; j < W; ++j) {
      add_triangle(vid(i, j), vid(i + 1, j), vid(i, j + 1));          // upward
      add_triangle(vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1));  // downward
    }

  b.finalize();
  return std::move(b.g);
}

inline MetricGrid build_hexagonal(const GridSpec& spec) {
  const int W = spec.window;
  GridBuilder b(spec);
  std::unordered_map<std::uint64_t, int> vids;
  auto vertex = [&](int p, int q) {
    auto key = pack_pair(p, q);
    auto it = vids.find(key);
    if (it != vids.end()) return it->second;
    LatticeKey k{};
    k[0] = p;
    k[1] = q;
    int id = b.add_vertex(k);
    if (static_cast<std::size_t>(id) + 1 > spec.max_vertices)
      throw std::invalid_argument("build_grid: vertex count exceeds cap");
    vids.emplace(key, id);
    return id;
  };

  // hexagon (m, n) centered at m*(3,1) + n*(3,-1) in half-units; corners
  // ordered L, TL, TR, R, BR, BL
  static constexpr int off[6][2] = {{-2, 0}, {-1, 1}, {1, 1}, {2, 0}, {1, -1}, {-1, -1}};
  for (int m = -W; m <= W; ++m)
    for (int n = -W; n <= W; ++n) {
      int cp = 3 * (m + n), cq = m - n;
      Cell cell;
      for (auto& o : off) cell.vertices.push_back(vertex(cp + o[0], cq + o[1]));
      int cell_id = static_cast<int>(b.g.cells.size());
      b.g.cells.push_back(cell);
      const auto& c = b.g.cells[cell_id].vertices;
      for (int t = 0; t < 6; ++t) b.count_cell_edge(c[t], c[(t + 1) % 6]);

      // split into four triangles: leftmost, bottom-left + two top,
      // two bottom + top-right, rightmost
      const int tri[4][3] = {{c[0], c[1], c[5]}, {c[5], c[1], c[2]},
                             {c[5], c[4], c[2]}, {c[4], c[3], c[2]}};
      const std::vector<std::vector<std::pair<int, int>>> tri_edges = {
          {{c[0], c[1]}, {c[5], c[0]}},
          {{c[1], c[2]}},
          {{c[4], c[5]}},
          {{c[4], c[3]}, {c[3], c[2]}}};
      b.g.cell_simplexes.emplace_back();
      for (int t = 0; t < 4; ++t) {
        Simplex s;
        s.cell = cell_id;
        s.vertices = {tri[t][0], tri[t][1], tri[t][2]};
        for (auto& pr : tri_edges[t]) s.edges.push_back(b.get_or_add_edge(pr.first, pr.second));
        b.g.cell_simplexes[cell_id].push_back(static_cast<int>(b.g.simplexes.size()));
        b.g.simplexes.push_back(std::move(s));
      }
    }

  b.g.planar_vertex_ids = std::move(vids);
  b.finalize();
  return std::move(b.g);
}

}  // namespace detail

inline MetricGrid build_grid(const GridSpec& spec) {
  spec.validate();
  switch (spec.lattice) {
    case Lattice::cubic: return detail::build_cubic(spec);
    case Lattice::triangular: return detail::build_triangular(spec);
    case Lattice::hexagonal: return detail::build_hexagonal(spec);
  }
  throw std::invalid_argument("build_grid: unknown lattice");
}

/// Number of simplexes, across all cells of the truncation, containing the
/// given edge. Cubic lattice only; the edge must be interior so the count is
/// not clipped by the window.
inline int edge_simplex_count(const MetricGrid& grid, int edge) {
  if (grid.spec.lattice != Lattice::cubic)
    throw std::invalid_argument("edge_simplex_count: cubic lattice only");
  if (edge < 0 || edge >= grid.num_edges())
    throw std::invalid_argument("edge_simplex_count: bad edge id");
  if (!grid.edge_is_interior(edge))
    throw std::invalid_argument("edge_simplex_count: edge is truncated by the window");
  return grid.edge_simplex_total[edge];
}

}  // namespace gridlimit
