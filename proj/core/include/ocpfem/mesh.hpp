#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace ocpfem::mesh {

/// Coordinates beyond the mesh dimension are zero.
using Point = std::array<double, 3>;
/// d+1 vertex indices; unused slots hold -1.
using Simplex = std::array<int, 4>;

inline constexpr double kBoundaryTol = 1e-14;

/// Conforming simplicial mesh of the unit d-cube, d in {1,2,3}.
///
/// Element vertex order carries the bisection state: the refinement edge of
/// element e joins local vertices 0 and bisection_tag(e) (Maubach labelling).
class Mesh {
public:
  Mesh() = default;
  Mesh(int dim, std::vector<Point> vertices, std::vector<Simplex> elements,
       std::vector<std::uint8_t> bisection_tags = {}, std::vector<std::uint16_t> generations = {});

  int dim() const { return dim_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_elements() const { return elements_.size(); }
  int vertices_per_element() const { return dim_ + 1; }

  const Point& vertex(std::size_t v) const { return vertices_[v]; }
  std::span<const Point> vertices() const { return vertices_; }
  const Simplex& element(std::size_t e) const { return elements_[e]; }
  std::span<const Simplex> elements() const { return elements_; }

  bool is_boundary(std::size_t v) const { return boundary_[v] != 0; }
  std::span<const std::uint8_t> boundary_flags() const { return boundary_; }
  std::size_t num_boundary_vertices() const;

  std::uint16_t generation(std::size_t e) const { return generations_[e]; }
  std::uint8_t bisection_tag(std::size_t e) const { return tags_[e]; }
  /// Local vertex pair of the refinement edge.
  std::pair<int, int> refinement_edge(std::size_t e) const { return {0, tags_[e]}; }

private:
  int dim_ = 0;
  std::vector<Point> vertices_;
  std::vector<Simplex> elements_;
  std::vector<std::uint8_t> boundary_;
  std::vector<std::uint8_t> tags_;
  std::vector<std::uint16_t> generations_;
};

/// (n+1)^d lattice vertices, each cell split into d! Kuhn simplices sharing
/// the cell's main diagonal. Vertices of each simplex follow the Kuhn path
/// from the cell's lower corner.
Mesh build_unit_cube_mesh(int n, int d);

/// Unsigned element measure.
double element_volume(const Mesh& m, std::size_t e);
/// Signed measure det[x1-x0,...,xd-x0]/d!.
double element_signed_volume(const Mesh& m, std::size_t e);
/// Element diameter (longest edge).
double element_size(const Mesh& m, std::size_t e);
/// (d! |tau|)^{1/d}: the edge length of the reference-equivalent simplex.
/// Equals the lattice spacing for Kuhn simplices.
double element_volume_size(const Mesh& m, std::size_t e);

/// How the local mesh size h_tau is measured.
enum class SizeMeasure { Diameter, VolumeBased };
double element_size(const Mesh& m, std::size_t e, SizeMeasure measure);
std::vector<double> element_sizes(const Mesh& m, SizeMeasure measure);

/// Maps coarse P1 nodal values to fine P1 nodal values. Row i lists
/// (coarse vertex, weight) pairs; weights of each row sum to one.
struct Prolongation {
  std::size_t coarse_dofs = 0;
  std::size_t fine_dofs = 0;
  std::vector<std::size_t> row_offsets{0};
  std::vector<int> columns;
  std::vector<double> weights;

  static Prolongation identity(std::size_t n);
  std::size_t row_size(std::size_t i) const { return row_offsets[i + 1] - row_offsets[i]; }
  std::vector<double> apply(std::span<const double> coarse) const;
};

struct Refinement {
  Mesh mesh;
  Prolongation prolongation;
};

/// How 3D red refinement cuts the inner octahedron.
/// ShortestDiagonal: shortest of the three diagonals, ties towards the Bey
/// diagonal x02-x13 (keeps Kuhn simplices Kuhn).
/// BestAspectRatio: the split whose worst inner child has the smallest
/// singular value ratio relative to the regular tetrahedron, same tie rule.
enum class OctahedronSplit { ShortestDiagonal, BestAspectRatio };

/// Red refinement: 2^d children per simplex.
Refinement refine_uniform(const Mesh& m, OctahedronSplit split = OctahedronSplit::ShortestDiagonal);

/// Newest-vertex bisection of every marked element, followed by closure
/// bisections until no element carries a hanging node.
Refinement refine_adaptive(const Mesh& m, std::span<const int> marked);

/// Minimal greedy set carrying theta of the squared indicator sum.
/// Ties in indicator value are broken by lower element index.
std::vector<int> mark_doerfler(std::span<const double> indicators, double theta);

struct ConformityReport {
  bool conforming = true;
  std::size_t unmatched_interior_faces = 0;
  std::size_t overshared_faces = 0;
  std::size_t degenerate_elements = 0;
  double volume_sum = 0.0;
};

/// Shared-face test: every interior facet is shared by exactly two elements,
/// every facet seen once lies on the boundary of the cube.
ConformityReport check_conformity(const Mesh& m);

/// Vertex -> incident elements, CSR with increasing element indices.
struct VertexIncidence {
  std::vector<std::size_t> offsets;
  std::vector<int> elements;
  std::span<const int> of(std::size_t v) const {
    return {elements.data() + offsets[v], offsets[v + 1] - offsets[v]};
  }
};
VertexIncidence vertex_incidence(const Mesh& m);

/// Plain-text dump: header `dim nv ne`, vertex lines, 0-based element lines.
void write_mesh(std::ostream& os, const Mesh& m);
Mesh read_mesh(std::istream& is);

} // namespace ocpfem::mesh
