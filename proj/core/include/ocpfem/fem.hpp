#pragma once

#include "ocpfem/mesh.hpp"
#include "ocpfem/sparse.hpp"

#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace ocpfem::fem {

using la::Vector;
using mesh::Mesh;
using mesh::Point;

/// Numbering of the P1 unknowns. Dirichlet maps keep only interior vertices.
class DofMap {
public:
  DofMap() = default;
  static DofMap dirichlet(const Mesh& m);
  static DofMap all(std::size_t n_vertices);

  std::size_t n_vertices() const { return full_to_free_.size(); }
  std::size_t size() const { return free_.size(); }
  std::span<const int> free() const { return free_; }
  /// -1 for eliminated (boundary) vertices.
  int full_to_free(std::size_t v) const { return full_to_free_[v]; }

  Vector restrict_vector(std::span<const double> full) const;
  /// Eliminated vertices get zero.
  Vector extend_vector(std::span<const double> free_values) const;

private:
  std::vector<int> free_;
  std::vector<int> full_to_free_;
};

/// Mesh, dof numbering and the data shared by all assembly routines
/// (vertex-element incidence and the free-dof sparsity pattern).
class FeSpace {
public:
  FeSpace(std::shared_ptr<const Mesh> m, DofMap dofs);
  /// Homogeneous Dirichlet space on m.
  explicit FeSpace(std::shared_ptr<const Mesh> m);

  const Mesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const Mesh>& mesh_ptr() const { return mesh_; }
  const DofMap& dofmap() const { return dofs_; }
  std::size_t size() const { return dofs_.size(); }
  const mesh::VertexIncidence& incidence() const { return incidence_; }
  std::span<const std::size_t> pattern_offsets() const { return offsets_; }
  std::span<const int> pattern_columns() const { return columns_; }

private:
  std::shared_ptr<const Mesh> mesh_;
  DofMap dofs_;
  mesh::VertexIncidence incidence_;
  std::vector<std::size_t> offsets_;
  std::vector<int> columns_;
};

/// Volume and barycentric gradients of one simplex.
struct ElementGeometry {
  double volume = 0.0;
  std::array<std::array<double, 3>, 4> grad{};
};
ElementGeometry element_geometry(const Mesh& m, std::size_t e);

/// Dense (d+1)x(d+1) element matrices, row-major in a 4x4 array.
using ElementMatrix = std::array<std::array<double, 4>, 4>;
ElementMatrix element_stiffness(const Mesh& m, std::size_t e, double coeff = 1.0);
ElementMatrix element_mass(const Mesh& m, std::size_t e);

/// sum_tau kappa_tau K_tau + sigma_tau M_tau restricted to the free dofs.
/// An empty span means the term is absent; a span of size one is a constant.
la::SparseMatrix assemble_diffusion_reaction(const FeSpace& space, std::span<const double> kappa,
                                             std::span<const double> sigma);
/// K with per-element coefficient (empty: coefficient one). Throws
/// ParameterError on a nonpositive coefficient.
la::SparseMatrix assemble_stiffness(const FeSpace& space, std::span<const double> coeff = {});
la::SparseMatrix assemble_mass(const FeSpace& space);
/// Mass matrix weighted by a positive per-element coefficient.
la::SparseMatrix assemble_weighted_mass(const FeSpace& space, std::span<const double> coeff);

/// Row sums. Throws NumericalError on a nonpositive row sum.
la::DiagonalMatrix lump_mass(const la::SparseMatrix& m);
/// diag(M).
la::DiagonalMatrix mass_diagonal(const la::SparseMatrix& m);

/// Piecewise constant target: inside_value on the open box, outside_value elsewhere.
struct BoxTarget {
  Point lower{0.25, 0.25, 0.25};
  Point upper{0.75, 0.75, 0.75};
  double inside_value = 1.0;
  double outside_value = 0.0;

  /// The box (0.25, 0.75)^d with values 1 inside and 0 outside.
  static BoxTarget centered(int dim);
  void validate(int dim) const;
};

/// (y_d, phi_i) for every free dof, integrated exactly by clipping each
/// simplex against the box.
Vector assemble_load_box_target(const FeSpace& space, const BoxTarget& target);

/// ||y_h - y_d||_{L2(tau)} per element; y holds free-dof values.
std::vector<double> element_error_indicators(const FeSpace& space, std::span<const double> y,
                                             const BoxTarget& target);
/// ||y_h - y_d||_{L2(Omega)}.
double l2_error_box_target(const FeSpace& space, std::span<const double> y, const BoxTarget& target);

/// (u_h, v_h)_{L2} for free-dof vectors, via the element mass formula.
double l2_inner(const FeSpace& space, std::span<const double> u, std::span<const double> v);

/// Restricts an all-vertex matrix to the free dofs of `dofs`.
la::SparseMatrix apply_dirichlet(const la::SparseMatrix& full, const DofMap& dofs);

/// Maps coarse free-dof values to fine free-dof values (boundary values zero
/// on both levels).
Vector prolongate(const mesh::Prolongation& p, const DofMap& coarse, const DofMap& fine,
                  std::span<const double> coarse_values);

/// Nodal values f(x_v) for every vertex.
Vector interpolate(const Mesh& m, const std::function<double(const Point&)>& f);

} // namespace ocpfem::fem
