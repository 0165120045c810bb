#pragma once

#include "ocpfem/mesh.hpp"

#include <span>
#include <vector>

namespace ocpfem::fem {

using mesh::Point;

/// Simplex given by its d+1 vertex coordinates.
struct SubSimplex {
  std::array<Point, 4> v{};
};

double simplex_measure(const SubSimplex& s, int dim);

/// Intersection of a simplex with the axis-aligned box [lower, upper],
/// returned as a set of simplices (successive half-space clipping with
/// re-triangulation of each clipped piece). Pieces with measure below
/// drop_rel times the input measure are dropped.
std::vector<SubSimplex> clip_simplex_to_box(const SubSimplex& s, int dim, const Point& lower,
                                            const Point& upper, double drop_rel = 1e-15);

} // namespace ocpfem::fem
