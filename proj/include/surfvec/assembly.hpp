#pragma once

// Discrete forms of the surface vector Laplacian: covariant-derivative (or
// tangential-strain) stiffness, normal-component penalty and load, scattered
// into a compressed-row system over Euclidean vector components.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "surfvec/error.hpp"
#include "surfvec/geometry.hpp"
#include "surfvec/mesh.hpp"
#include "surfvec/reference_element.hpp"
#include "surfvec/solver.hpp"
#include "surfvec/sparse.hpp"

namespace surfvec {

enum class Formulation { Standard, Symmetric };
enum class NormalSource { Discrete, ExactInterpolated };

inline std::string to_string(Formulation f) {
  return f == Formulation::Standard ? "standard" : "symmetric";
}
inline std::string to_string(NormalSource n) {
  return n == NormalSource::Discrete ? "discrete" : "exact-interpolated";
}

using VectorField = std::function<Point3(const Point3&)>;

/// Rotation about the torus axis; tangential everywhere on the torus.
inline Point3 killing_field(const Point3& x) { return {-x.y(), x.x(), 0.0}; }

/// Order-k_u solution nodes with three consecutive dofs (x, y, z components) each.
class DofMap {
 public:
  DofMap(const ParametricMesh& m, int k_u) : order_(k_u) {
    if (k_u < 1 || k_u > kMaxOrder) throw DomainError("solution order must be in [1,4]");
    numbering_ = number_lattice(m.corner_cells(), m.num_vertices(), k_u);
    positions_.resize(numbering_.n_nodes);
    for (int v = 0; v < m.num_vertices(); ++v) positions_[v] = m.node(v);
    const BasisTable geo = tabulate(ReferenceElement(m.geometry_order()), lagrange_lattice(k_u));
    for (std::size_t k = 0; k < numbering_.owner.size(); ++k) {
      const auto [c, l] = numbering_.owner[k];
      const auto conn = m.cell(c);
      Point3 x = Point3::Zero();
      for (int i = 0; i < geo.n_basis; ++i) x += geo.values_at(l)[i] * m.node(conn[i]);
      positions_[m.num_vertices() + k] = x;
    }
  }

  int order() const { return order_; }
  int nodes_per_cell() const { return lattice_size(order_); }
  int num_nodes() const { return numbering_.n_nodes; }
  int num_dofs() const { return 3 * numbering_.n_nodes; }

  std::span<const int> cell_nodes(int c) const {
    return {numbering_.connectivity.data() + static_cast<std::size_t>(c) * nodes_per_cell(),
            static_cast<std::size_t>(nodes_per_cell())};
  }

  /// Node locations on Gamma_h (images of the reference lattice under the element map).
  const std::vector<Point3>& positions() const { return positions_; }

 private:
  int order_;
  LatticeNumbering numbering_;
  std::vector<Point3> positions_;
};

/// Nodal interpolation of a field sampled at the solution nodes.
inline Vector interpolate(const DofMap& dofs, const VectorField& field) {
  Vector v(dofs.num_dofs());
  for (int i = 0; i < dofs.num_nodes(); ++i) {
    const Point3 f = field(dofs.positions()[i]);
    for (int c = 0; c < 3; ++c) v[3 * i + c] = f[c];
  }
  return v;
}

/// Quadrature degree used for assembly: 2 k_u + 2 (k_g - 1) + 2, capped at 14.
inline int assembly_quadrature_degree(int k_u, int k_g) {
  return std::min(2 * k_u + 2 * (k_g - 1) + 2, kMaxQuadratureDegree);
}

/// Everything element routines need for one mesh / solution order pair.
class AssemblyContext {
 public:
  AssemblyContext(const ParametricMesh& mesh, const TorusSurface& surface, int k_u)
      : AssemblyContext(mesh, surface, k_u,
                        quadrature_for(assembly_quadrature_degree(k_u, mesh.geometry_order()))) {}

  AssemblyContext(const ParametricMesh& mesh, const TorusSurface& surface, int k_u,
                  QuadratureRule rule)
      : mesh_(&mesh),
        surface_(surface),
        dofs_(mesh, k_u),
        rule_(std::move(rule)),
        geo_table_(tabulate(ReferenceElement(mesh.geometry_order()), rule_.points)),
        sol_table_(tabulate(ReferenceElement(k_u), rule_.points)) {}

  const ParametricMesh& mesh() const { return *mesh_; }
  const TorusSurface& surface() const { return surface_; }
  const DofMap& dofs() const { return dofs_; }
  const QuadratureRule& rule() const { return rule_; }
  const BasisTable& solution_table() const { return sol_table_; }
  int k_u() const { return dofs_.order(); }
  double h() const { return mesh_->h(); }

  ElementGeometry geometry(int cell) const {
    return element_geometry(*mesh_, cell, geo_table_, surface_);
  }

 private:
  const ParametricMesh* mesh_;
  TorusSurface surface_;
  DofMap dofs_;
  QuadratureRule rule_;
  BasisTable geo_table_;
  BasisTable sol_table_;
};

using LocalMatrix = Eigen::MatrixXd;
using LocalVector = Eigen::VectorXd;

/// Surface gradients of the scalar solution basis at one quadrature point.
inline void surface_gradients(const QuadPointGeometry& g, const RefPoint* ref_grads, int n,
                              std::vector<Point3>& out) {
  out.resize(n);
  for (int i = 0; i < n; ++i) out[i] = g.JGinv * Eigen::Vector2d(ref_grads[i][0], ref_grads[i][1]);
}

/// (D v, D w) or (eps(v), eps(w)) over one cell; local dof 3 i + c.
inline LocalMatrix local_stiffness(const AssemblyContext& ctx, int cell, const ElementGeometry& eg,
                                   Formulation kind) {
  const auto& tab = ctx.solution_table();
  const int n = tab.n_basis;
  LocalMatrix K = LocalMatrix::Zero(3 * n, 3 * n);
  std::vector<Point3> grads;
  for (int q = 0; q < tab.n_points; ++q) {
    const auto& g = eg[q];
    const double w = ctx.rule().weights[q] * g.area_factor;
    surface_gradients(g, tab.gradients_at(q), n, grads);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double gg = grads[i].dot(grads[j]);
        for (int c = 0; c < 3; ++c)
          for (int d = (i == j ? c : 0); d < 3; ++d) {
            // D(psi_i e_c) : D(psi_j e_d) = (P_h)_cd (g_i . g_j)
            double val = g.P_h(c, d) * gg;
            if (kind == Formulation::Symmetric)
              val = 0.5 * (val + grads[j][c] * grads[i][d]);
            K(3 * i + c, 3 * j + d) += w * val;
          }
      }
  }
  for (int a = 0; a < 3 * n; ++a)
    for (int b = 0; b < a; ++b) K(a, b) = K(b, a);
  (void)cell;
  return K;
}

inline LocalMatrix local_stiffness(const AssemblyContext& ctx, int cell, Formulation kind) {
  return local_stiffness(ctx, cell, ctx.geometry(cell), kind);
}

/// Normal used by the penalty at each quadrature point of a cell.
inline std::vector<Point3> penalty_normals(const AssemblyContext& ctx, int cell,
                                           const ElementGeometry& eg, NormalSource src) {
  std::vector<Point3> normals(eg.size());
  if (src == NormalSource::Discrete) {
    for (std::size_t q = 0; q < eg.size(); ++q) normals[q] = eg[q].n_h;
    return normals;
  }
  const auto& tab = ctx.solution_table();
  const auto nodes = ctx.dofs().cell_nodes(cell);
  std::vector<Point3> nodal(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    nodal[i] = ctx.surface().normal(ctx.dofs().positions()[nodes[i]]);
  for (int q = 0; q < tab.n_points; ++q) {
    Point3 nq = Point3::Zero();
    for (int i = 0; i < tab.n_basis; ++i) nq += tab.values_at(q)[i] * nodal[i];
    normals[q] = nq.normalized();
  }
  return normals;
}

/// beta h^-2 (n . v, n . w) over one cell, with the global h.
inline LocalMatrix local_penalty(const AssemblyContext& ctx, int cell, const ElementGeometry& eg,
                                 double beta, NormalSource src) {
  const auto& tab = ctx.solution_table();
  const int n = tab.n_basis;
  const auto normals = penalty_normals(ctx, cell, eg, src);
  const double scale = beta / (ctx.h() * ctx.h());
  LocalMatrix S = LocalMatrix::Zero(3 * n, 3 * n);
  for (int q = 0; q < tab.n_points; ++q) {
    const double w = scale * ctx.rule().weights[q] * eg[q].area_factor;
    const double* psi = tab.values_at(q);
    const Point3& nq = normals[q];
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double pp = w * psi[i] * psi[j];
        for (int c = 0; c < 3; ++c)
          for (int d = (i == j ? c : 0); d < 3; ++d) S(3 * i + c, 3 * j + d) += pp * nq[c] * nq[d];
      }
  }
  for (int a = 0; a < 3 * n; ++a)
    for (int b = 0; b < a; ++b) S(a, b) = S(b, a);
  return S;
}

inline LocalMatrix local_penalty(const AssemblyContext& ctx, int cell, double beta,
                                 NormalSource src) {
  return local_penalty(ctx, cell, ctx.geometry(cell), beta, src);
}

/// (f o p, v) over one cell.
inline LocalVector local_load(const AssemblyContext& ctx, const ElementGeometry& eg,
                              const VectorField& f) {
  const auto& tab = ctx.solution_table();
  const int n = tab.n_basis;
  LocalVector F = LocalVector::Zero(3 * n);
  for (int q = 0; q < tab.n_points; ++q) {
    const Point3 fq = f(ctx.surface().closest_point(eg[q].x));
    const double w = ctx.rule().weights[q] * eg[q].area_factor;
    const double* psi = tab.values_at(q);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < 3; ++c) F(3 * i + c) += w * psi[i] * fq[c];
  }
  return F;
}

inline LocalVector local_load(const AssemblyContext& ctx, int cell, const VectorField& f) {
  return local_load(ctx, ctx.geometry(cell), f);
}

/// Sparsity pattern of the vector-valued system: node couplings times 3x3 blocks.
inline CsrMatrix vector_pattern(const DofMap& dofs, int n_cells) {
  std::vector<std::vector<int>> node_adj(dofs.num_nodes());
  for (int c = 0; c < n_cells; ++c) {
    const auto nodes = dofs.cell_nodes(c);
    for (int a : nodes) node_adj[a].insert(node_adj[a].end(), nodes.begin(), nodes.end());
  }
  std::vector<std::vector<int>> rows(dofs.num_dofs());
  for (int a = 0; a < dofs.num_nodes(); ++a) {
    auto& adj = node_adj[a];
    std::sort(adj.begin(), adj.end());
    adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    std::vector<int> cols;
    cols.reserve(3 * adj.size());
    for (int b : adj)
      for (int d = 0; d < 3; ++d) cols.push_back(3 * b + d);
    for (int c = 0; c < 3; ++c) rows[3 * a + c] = cols;
    std::vector<int>().swap(adj);
  }
  return CsrMatrix(std::move(rows));
}

/// Adds a local 3n x 3n block into the global matrix.
inline void scatter(CsrMatrix& A, std::span<const int> nodes, const LocalMatrix& local) {
  auto& vals = A.values();
  const int n = static_cast<int>(nodes.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int c = 0; c < 3; ++c) {
        const auto base = A.find(3 * nodes[i] + c, 3 * nodes[j]);
        if (base < 0) throw Error("dof map inconsistent with sparsity pattern");
        for (int d = 0; d < 3; ++d) vals[base + d] += local(3 * i + c, 3 * j + d);
      }
}

struct AssemblyOptions {
  Formulation kind = Formulation::Standard;
  double beta = 100.0;
  NormalSource normal_source = NormalSource::Discrete;
  /// Also keep the stiffness and penalty matrices separately.
  bool keep_parts = false;
};

struct SparseSystem {
  CsrMatrix A;
  Vector b;
  std::vector<Vector> nullspace;
  CsrMatrix stiffness;  // only with keep_parts
  CsrMatrix penalty;    // only with keep_parts
};

/// Global system A = a_h + s_h, b = l_h. For the symmetric formulation the
/// interpolated Killing field is attached as the nullspace.
inline SparseSystem assemble(const AssemblyContext& ctx, const VectorField& f,
                             const AssemblyOptions& opt = {}) {
  if (!(opt.beta > 0.0)) throw DomainError("penalty parameter beta must be positive");
  const auto& mesh = ctx.mesh();
  const auto& dofs = ctx.dofs();
  SparseSystem sys;
  sys.A = vector_pattern(dofs, mesh.num_cells());
  if (opt.keep_parts) {
    sys.stiffness = sys.A;
    sys.penalty = sys.A;
  }
  sys.b.assign(dofs.num_dofs(), 0.0);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto eg = ctx.geometry(c);
    const LocalMatrix K = local_stiffness(ctx, c, eg, opt.kind);
    const LocalMatrix S = local_penalty(ctx, c, eg, opt.beta, opt.normal_source);
    const auto nodes = dofs.cell_nodes(c);
    if (opt.keep_parts) {
      scatter(sys.stiffness, nodes, K);
      scatter(sys.penalty, nodes, S);
    }
    scatter(sys.A, nodes, K + S);
    if (f) {
      const LocalVector F = local_load(ctx, eg, f);
      for (std::size_t i = 0; i < nodes.size(); ++i)
        for (int d = 0; d < 3; ++d) sys.b[3 * nodes[i] + d] += F(3 * i + d);
    }
  }
  if (opt.kind == Formulation::Symmetric) sys.nullspace.push_back(interpolate(dofs, killing_field));
  return sys;
}

}  // namespace surfvec
