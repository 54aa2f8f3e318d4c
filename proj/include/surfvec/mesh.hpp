#pragma once

// Structured torus triangulations, random vertex perturbation, closest-point
// lifting to order-k_g parametric meshes, and per-quadrature-point element
// geometry.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "surfvec/error.hpp"
#include "surfvec/geometry.hpp"
#include "surfvec/reference_element.hpp"

namespace surfvec {

class ParametricMesh {
 public:
  ParametricMesh() = default;
  ParametricMesh(int order, std::vector<Point3> nodes, std::vector<int> connectivity, int n_vertices)
      : order_(order),
        nodes_(std::move(nodes)),
        connectivity_(std::move(connectivity)),
        n_vertices_(n_vertices) {
    if (connectivity_.size() % lattice_size(order_) != 0)
      throw MeshError("connectivity length is not a multiple of the cell size");
    h_ = compute_h();
  }

  int geometry_order() const { return order_; }
  int nodes_per_cell() const { return lattice_size(order_); }
  int num_cells() const { return static_cast<int>(connectivity_.size()) / nodes_per_cell(); }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  /// Corner vertices occupy node indices [0, num_vertices()).
  int num_vertices() const { return n_vertices_; }
  double h() const { return h_; }

  const std::vector<Point3>& nodes() const { return nodes_; }
  const Point3& node(int i) const { return nodes_[i]; }
  const std::vector<int>& connectivity() const { return connectivity_; }

  std::span<const int> cell(int c) const {
    return {connectivity_.data() + static_cast<std::size_t>(c) * nodes_per_cell(),
            static_cast<std::size_t>(nodes_per_cell())};
  }
  std::array<int, 3> corners(int c) const {
    const auto cl = cell(c);
    return {cl[0], cl[1], cl[2]};
  }

  /// Corner-triangle (flat) cells, usable as the base of a re-lifting.
  std::vector<std::array<int, 3>> corner_cells() const {
    std::vector<std::array<int, 3>> out(num_cells());
    for (int c = 0; c < num_cells(); ++c) out[c] = corners(c);
    return out;
  }

  friend bool operator==(const ParametricMesh& a, const ParametricMesh& b) {
    return a.order_ == b.order_ && a.n_vertices_ == b.n_vertices_ && a.nodes_ == b.nodes_ &&
           a.connectivity_ == b.connectivity_;
  }

 private:
  double compute_h() const {
    double h = 0.0;
    for (int c = 0; c < num_cells(); ++c) {
      const auto [a, b, d] = corners(c);
      h = std::max({h, (nodes_[a] - nodes_[b]).norm(), (nodes_[b] - nodes_[d]).norm(),
                    (nodes_[d] - nodes_[a]).norm()});
    }
    return h;
  }

  int order_ = 1;
  std::vector<Point3> nodes_;
  std::vector<int> connectivity_;
  int n_vertices_ = 0;
  double h_ = 0.0;
};

/// Global mesh parameter: maximum corner-triangle diameter.
inline double mesh_parameter(const ParametricMesh& m) { return m.h(); }

/// Cell-to-node numbering of an order-k Lagrange lattice over a triangulation
/// given by corner vertices. Vertices keep their indices; edge nodes are
/// shared through a map keyed by the sorted vertex pair; interior nodes are
/// private to their cell.
struct LatticeNumbering {
  int order = 1;
  int n_nodes = 0;
  std::vector<int> connectivity;  // stride lattice_size(order)
  /// For nodes >= n_vertices: (cell, local index) of the first cell that created the node.
  std::vector<std::pair<int, int>> owner;
};

inline LatticeNumbering number_lattice(const std::vector<std::array<int, 3>>& cells, int n_vertices,
                                       int k) {
  LatticeNumbering out;
  out.order = k;
  const int nloc = lattice_size(k);
  out.connectivity.assign(cells.size() * nloc, -1);
  int next = n_vertices;
  std::map<std::pair<int, int>, std::vector<int>> edge_nodes;
  const int edge_ends[3][2] = {{0, 1}, {1, 2}, {2, 0}};
  for (std::size_t c = 0; c < cells.size(); ++c) {
    int* conn = out.connectivity.data() + c * nloc;
    for (int v = 0; v < 3; ++v) conn[v] = cells[c][v];
    for (int e = 0; e < 3; ++e) {
      const int a = cells[c][edge_ends[e][0]], b = cells[c][edge_ends[e][1]];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_nodes.try_emplace({key.first, key.second});
      if (inserted) {
        it->second.resize(k - 1);
        for (int m = 1; m < k; ++m) {
          // Local node m along a->b sits at fraction m/k from a.
          const int from_min = a < b ? m : k - m;
          it->second[from_min - 1] = next;
          out.owner.emplace_back(static_cast<int>(c), 3 + e * (k - 1) + (m - 1));
          ++next;
        }
      }
      for (int m = 1; m < k; ++m) {
        const int from_min = a < b ? m : k - m;
        conn[3 + e * (k - 1) + (m - 1)] = it->second[from_min - 1];
      }
    }
    for (int l = 3 + 3 * (k - 1); l < nloc; ++l) {
      conn[l] = next++;
      out.owner.emplace_back(static_cast<int>(c), l);
    }
  }
  out.n_nodes = next;
  return out;
}

/// Structured (theta, phi) grid on the torus, each quad split along its
/// diagonal. phi (index i) runs around the z-axis, theta (index j) around the tube.
inline ParametricMesh build_torus_mesh(const TorusSurface& s, int n_major, int n_minor) {
  if (n_major < 8 || n_minor < 8) throw MeshError("torus grid needs n_major >= 8 and n_minor >= 8");
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<Point3> nodes;
  nodes.reserve(static_cast<std::size_t>(n_major) * n_minor);
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j)
      nodes.push_back(s.parametrize(two_pi * j / n_minor, two_pi * i / n_major));
  auto vid = [&](int i, int j) { return (i % n_major) * n_minor + (j % n_minor); };
  std::vector<int> conn;
  conn.reserve(6 * static_cast<std::size_t>(n_major) * n_minor);
  for (int i = 0; i < n_major; ++i)
    for (int j = 0; j < n_minor; ++j) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      // d(gamma)/d(phi) x d(gamma)/d(theta) points outward.
      conn.insert(conn.end(), {a, b, c, a, c, d});
    }
  const int nv = static_cast<int>(nodes.size());
  return ParametricMesh(1, std::move(nodes), std::move(conn), nv);
}

namespace detail {
inline double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
}  // namespace detail

/// Moves each vertex by a random tangential vector (uniform on the tangent
/// disk) of length <= amplitude * (shortest incident edge) and projects it
/// back onto the torus.
inline ParametricMesh perturb_mesh(const ParametricMesh& m, double amplitude, std::uint64_t seed,
                                   const TorusSurface& s) {
  if (m.geometry_order() != 1) throw MeshError("perturb_mesh expects a flat (k_g = 1) mesh");
  if (!(amplitude >= 0.0 && amplitude <= 0.3))
    throw MeshError("perturbation amplitude must be in [0, 0.3]");
  if (amplitude == 0.0) return m;

  std::vector<double> local_h(m.num_vertices(), std::numeric_limits<double>::infinity());
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto v = m.corners(c);
    for (int e = 0; e < 3; ++e) {
      const double len = (m.node(v[e]) - m.node(v[(e + 1) % 3])).norm();
      local_h[v[e]] = std::min(local_h[v[e]], len);
      local_h[v[(e + 1) % 3]] = std::min(local_h[v[(e + 1) % 3]], len);
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<Point3> nodes = m.nodes();
  for (int k = 0; k < m.num_vertices(); ++k) {
    Point3& x = nodes[k];
    const double max_len = amplitude * local_h[k];
    const Point3 n = s.normal(x);
    const Point3 e_phi = Point3(-x.y(), x.x(), 0.0).normalized();
    const Point3 e_theta = n.cross(e_phi);
    const double angle = 2.0 * std::numbers::pi * detail::unit_uniform(rng);
    const double len = max_len * std::sqrt(detail::unit_uniform(rng));
    x = s.closest_point(x + len * (std::cos(angle) * e_phi + std::sin(angle) * e_theta));
  }
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto [a, b, d] = m.corners(c);
    const double before = detail::triangle_area(m.node(a), m.node(b), m.node(d));
    const double after = detail::triangle_area(nodes[a], nodes[b], nodes[d]);
    const Point3 n_new = (nodes[b] - nodes[a]).cross(nodes[d] - nodes[a]);
    const Point3 n_old = (m.node(b) - m.node(a)).cross(m.node(d) - m.node(a));
    if (after < 1e-3 * before || n_new.dot(n_old) <= 0.0)
      throw MeshError("perturbation produced degenerate cell");
  }
  return ParametricMesh(1, std::move(nodes), m.connectivity(), m.num_vertices());
}

/// Inserts lagrange_lattice(k_g) nodes on each flat cell and lifts them to
/// the torus with the closest-point map.
inline ParametricMesh elevate_geometry(const ParametricMesh& m, int k_g, const TorusSurface& s) {
  if (k_g < 1 || k_g > kMaxOrder) throw MeshError("geometry order must be in [1,4]");
  if (m.geometry_order() != 1) throw MeshError("elevate_geometry expects a flat (k_g = 1) mesh");
  if (k_g == 1) return m;
  const auto cells = m.corner_cells();
  LatticeNumbering num = number_lattice(cells, m.num_vertices(), k_g);
  const auto lattice = lagrange_lattice(k_g);
  std::vector<Point3> nodes(num.n_nodes);
  for (int v = 0; v < m.num_vertices(); ++v) nodes[v] = m.node(v);
  for (std::size_t k = 0; k < num.owner.size(); ++k) {
    const auto [c, l] = num.owner[k];
    const auto& [a, b, d] = cells[c];
    const Point3 x = m.node(a) + lattice[l][0] * (m.node(b) - m.node(a)) +
                     lattice[l][1] * (m.node(d) - m.node(a));
    nodes[m.num_vertices() + k] = s.closest_point(x);
  }
  return ParametricMesh(k_g, std::move(nodes), std::move(num.connectivity), m.num_vertices());
}

/// Geometry of the element map at one reference point.
struct QuadPointGeometry {
  Point3 x;                          // point on Gamma_h
  Eigen::Matrix<double, 3, 2> J;     // reference -> embedding Jacobian
  Eigen::Matrix<double, 3, 2> JGinv; // J (J^T J)^{-1}; surface gradient = JGinv * ref gradient
  Point3 n_h;                        // outward facet normal
  double area_factor;                // sqrt(det(J^T J))
  Tensor3 P_h;
};

using ElementGeometry = std::vector<QuadPointGeometry>;

/// Element geometry with the geometry basis pre-tabulated at the evaluation points.
inline ElementGeometry element_geometry(const ParametricMesh& m, int cell, const BasisTable& geo,
                                        const TorusSurface& s) {
  if (cell < 0 || cell >= m.num_cells()) throw MeshError("cell index out of range");
  const auto conn = m.cell(cell);
  ElementGeometry out(geo.n_points);
  for (int q = 0; q < geo.n_points; ++q) {
    const double* phi = geo.values_at(q);
    const RefPoint* dphi = geo.gradients_at(q);
    QuadPointGeometry& g = out[q];
    g.x.setZero();
    g.J.setZero();
    for (int i = 0; i < geo.n_basis; ++i) {
      const Point3& X = m.node(conn[i]);
      g.x += phi[i] * X;
      g.J.col(0) += dphi[i][0] * X;
      g.J.col(1) += dphi[i][1] * X;
    }
    const Eigen::Matrix2d G = g.J.transpose() * g.J;
    const double det = G.determinant();
    if (!(det > 1e-28)) throw GeometryError("degenerate element");
    g.area_factor = std::sqrt(det);
    g.JGinv = g.J * G.inverse();
    g.n_h = g.J.col(0).cross(g.J.col(1)).normalized();
    if (g.n_h.dot(s.normal(g.x)) < 0.0) g.n_h = -g.n_h;
    g.P_h = Tensor3::Identity() - g.n_h * g.n_h.transpose();
  }
  return out;
}

inline ElementGeometry element_geometry(const ParametricMesh& m, int cell,
                                        const QuadratureRule& rule, const TorusSurface& s) {
  const BasisTable geo = tabulate(ReferenceElement(m.geometry_order()), rule.points);
  return element_geometry(m, cell, geo, s);
}

/// Total area of Gamma_h under a quadrature rule.
inline double discrete_area(const ParametricMesh& m, const QuadratureRule& rule,
                            const TorusSurface& s) {
  const BasisTable geo = tabulate(ReferenceElement(m.geometry_order()), rule.points);
  double area = 0.0;
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto eg = element_geometry(m, c, geo, s);
    for (std::size_t q = 0; q < eg.size(); ++q) area += rule.weights[q] * eg[q].area_factor;
  }
  return area;
}

/// Sampled L-infinity geometry errors of Gamma_h at quadrature points.
struct GeometryErrors {
  double h = 0.0;
  double max_distance = 0.0;      // max |rho(x)|
  double max_normal_error = 0.0;  // max |n(p(x)) - n_h(x)|
  double min_orientation = 1.0;   // min n_h . n(p(x))
};

inline GeometryErrors geometry_errors(const ParametricMesh& m, const QuadratureRule& rule,
                                      const TorusSurface& s) {
  const BasisTable geo = tabulate(ReferenceElement(m.geometry_order()), rule.points);
  GeometryErrors e;
  e.h = m.h();
  for (int c = 0; c < m.num_cells(); ++c) {
    for (const auto& g : element_geometry(m, c, geo, s)) {
      e.max_distance = std::max(e.max_distance, std::abs(s.signed_distance(g.x)));
      const Point3 n = s.normal(g.x);
      e.max_normal_error = std::max(e.max_normal_error, (n - g.n_h).norm());
      // Orientation from the raw Jacobian cross product, before sign correction.
      const Point3 raw = g.J.col(0).cross(g.J.col(1)).normalized();
      e.min_orientation = std::min(e.min_orientation, raw.dot(n));
    }
  }
  return e;
}

/// Every corner edge shared by exactly two cells.
inline bool is_watertight(const ParametricMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto v = m.corners(c);
    for (int e = 0; e < 3; ++e) {
      const auto key = std::minmax(v[e], v[(e + 1) % 3]);
      ++count[{key.first, key.second}];
    }
  }
  return std::all_of(count.begin(), count.end(), [](const auto& kv) { return kv.second == 2; });
}

inline int count_edges(const ParametricMesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto v = m.corners(c);
    for (int e = 0; e < 3; ++e) {
      const auto key = std::minmax(v[e], v[(e + 1) % 3]);
      ++count[{key.first, key.second}];
    }
  }
  return static_cast<int>(count.size());
}

/// Plain-text dump: "k_g <int> nodes <int> cells <int>", coordinates, then
/// zero-based cell tuples in lagrange_lattice order.
inline void write_mesh(std::ostream& os, const ParametricMesh& m) {
  os << "k_g " << m.geometry_order() << " nodes " << m.num_nodes() << " cells " << m.num_cells()
     << '\n';
  os << std::setprecision(17);
  for (const auto& x : m.nodes()) os << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
  for (int c = 0; c < m.num_cells(); ++c) {
    const auto cl = m.cell(c);
    for (std::size_t i = 0; i < cl.size(); ++i) os << (i ? " " : "") << cl[i];
    os << '\n';
  }
}

inline ParametricMesh read_mesh(std::istream& is) {
  std::string t1, t2, t3;
  int order = 0, n_nodes = 0, n_cells = 0;
  if (!(is >> t1 >> order >> t2 >> n_nodes >> t3 >> n_cells) || t1 != "k_g" || t2 != "nodes" ||
      t3 != "cells")
    throw MeshError("malformed mesh header");
  std::vector<Point3> nodes(n_nodes);
  for (auto& x : nodes)
    if (!(is >> x.x() >> x.y() >> x.z())) throw MeshError("truncated mesh node block");
  std::vector<int> conn(static_cast<std::size_t>(n_cells) * lattice_size(order));
  int max_corner = -1;
  for (std::size_t i = 0; i < conn.size(); ++i) {
    if (!(is >> conn[i])) throw MeshError("truncated mesh cell block");
    if (i % lattice_size(order) < 3) max_corner = std::max(max_corner, conn[i]);
  }
  return ParametricMesh(order, std::move(nodes), std::move(conn), max_corner + 1);
}

}  // namespace surfvec
