#pragma once

// Legacy ASCII VTK (3.0) output of high-order fields, with each curved cell
// subsampled into flat triangles on its geometry lattice.

#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "surfvec/assembly.hpp"
#include "surfvec/error.hpp"
#include "surfvec/manufactured.hpp"
#include "surfvec/mesh.hpp"

namespace surfvec {

/// Sub-triangles of the order-k lattice as local lattice indices; k^2 of them.
inline std::vector<std::array<int, 3>> lattice_subtriangles(int k) {
  const auto idx = lattice_indices(k);
  std::map<std::pair<int, int>, int> at;
  for (std::size_t n = 0; n < idx.size(); ++n) at[{idx[n][0], idx[n][1]}] = static_cast<int>(n);
  std::vector<std::array<int, 3>> tris;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i + j < k; ++i) {
      tris.push_back({at[{i, j}], at[{i + 1, j}], at[{i, j + 1}]});
      if (i + j + 2 <= k) tris.push_back({at[{i + 1, j}], at[{i + 1, j + 1}], at[{i, j + 1}]});
    }
  return tris;
}

struct VtkData {
  std::vector<Point3> points;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Point3> u;
  std::vector<double> error_magnitude;
};

/// Samples u_h (and |u^e - u_h| when `exact` is given) at every cell's geometry lattice.
inline VtkData sample_for_vtk(const ParametricMesh& mesh, int k_u,
                              std::span<const double> coeffs, const ExactField* exact) {
  const int kg = mesh.geometry_order();
  const DofMap dofs(mesh, k_u);
  if (static_cast<int>(coeffs.size()) != dofs.num_dofs())
    throw Error("coefficient vector does not match the dof map");
  const BasisTable sol = tabulate(ReferenceElement(k_u), lagrange_lattice(kg));
  const auto sub = lattice_subtriangles(kg);
  VtkData out;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int base = static_cast<int>(out.points.size());
    const auto geo_nodes = mesh.cell(c);
    const auto nodes = dofs.cell_nodes(c);
    for (int l = 0; l < sol.n_points; ++l) {
      const Point3& x = mesh.node(geo_nodes[l]);
      Point3 uh = Point3::Zero();
      for (int i = 0; i < sol.n_basis; ++i)
        uh += sol.values_at(l)[i] *
              Point3(coeffs[3 * nodes[i]], coeffs[3 * nodes[i] + 1], coeffs[3 * nodes[i] + 2]);
      out.points.push_back(x);
      out.u.push_back(uh);
      out.error_magnitude.push_back(exact ? ((*exact)(x) - uh).norm() : 0.0);
    }
    for (const auto& t : sub) out.triangles.push_back({base + t[0], base + t[1], base + t[2]});
  }
  return out;
}

inline void write_vtk(std::ostream& os, const VtkData& d, const std::string& title) {
  os << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(17);
  os << "POINTS " << d.points.size() << " double\n";
  for (const auto& p : d.points) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  os << "CELLS " << d.triangles.size() << ' ' << 4 * d.triangles.size() << '\n';
  for (const auto& t : d.triangles) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << d.triangles.size() << '\n';
  for (std::size_t i = 0; i < d.triangles.size(); ++i) os << "5\n";
  os << "POINT_DATA " << d.points.size() << '\n';
  os << "VECTORS u double\n";
  for (const auto& u : d.u) os << u.x() << ' ' << u.y() << ' ' << u.z() << '\n';
  os << "SCALARS error_magnitude double 1\nLOOKUP_TABLE default\n";
  for (double e : d.error_magnitude) os << e << '\n';
}

inline void export_vtk(const ParametricMesh& mesh, int k_u, std::span<const double> coeffs,
                       const ExactField* exact, const std::filesystem::path& path) {
  const VtkData d = sample_for_vtk(mesh, k_u, coeffs, exact);
  std::ofstream os(path);
  if (!os) throw Error("cannot open VTK output file: " + path.string());
  write_vtk(os, d, "surfvec field");
  if (!os) throw Error("failed writing VTK output file: " + path.string());
}

/// Exports an analytic field (nodally interpolated at order k_u).
inline void export_vtk(const ParametricMesh& mesh, int k_u, const VectorField& field,
                       const std::filesystem::path& path) {
  const Vector coeffs = interpolate(DofMap(mesh, k_u), field);
  export_vtk(mesh, k_u, coeffs, nullptr, path);
}

/// Minimal reader for files produced by write_vtk.
inline VtkData read_vtk(std::istream& is) {
  VtkData d;
  std::string line, tok;
  auto expect = [&](const std::string& key) {
    while (is >> tok)
      if (tok == key) return;
    throw Error("VTK keyword not found: " + key);
  };
  std::size_t n = 0, m = 0, total = 0;
  expect("POINTS");
  is >> n >> tok;
  d.points.resize(n);
  for (auto& p : d.points) is >> p.x() >> p.y() >> p.z();
  expect("CELLS");
  is >> m >> total;
  d.triangles.resize(m);
  for (auto& t : d.triangles) {
    int three = 0;
    is >> three >> t[0] >> t[1] >> t[2];
  }
  expect("VECTORS");
  is >> tok >> tok;
  d.u.resize(n);
  for (auto& u : d.u) is >> u.x() >> u.y() >> u.z();
  expect("LOOKUP_TABLE");
  is >> tok;
  d.error_magnitude.resize(n);
  for (auto& e : d.error_magnitude) is >> e;
  if (!is) throw Error("truncated VTK file");
  return d;
}

}  // namespace surfvec
