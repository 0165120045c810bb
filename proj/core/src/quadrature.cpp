#include "ocpfem/quadrature.hpp"

#include "ocpfem/error.hpp"

#include <cmath>

namespace ocpfem::fem {

QuadratureRule simplex_rule(int dim, int degree) {
  if (dim < 1 || dim > 3) throw ParameterError("quadrature dimension must be 1, 2 or 3");
  if (degree < 0 || degree > 2) throw ParameterError("quadrature degree must be at most 2");
  QuadratureRule q;
  q.dim = dim;
  if (degree <= 1) {
    q.degree = 1;
    std::array<double, 4> c{0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k <= dim; ++k) c[static_cast<std::size_t>(k)] = 1.0 / (dim + 1);
    q.points.push_back(c);
    q.weights.push_back(1.0);
    return q;
  }
  q.degree = 2;
  switch (dim) {
  case 1: {
    // Gauss-Legendre, 2 points (exact to degree 3).
    const double g = 0.5 * (1.0 - 1.0 / std::sqrt(3.0));
    q.points = {{1.0 - g, g, 0.0, 0.0}, {g, 1.0 - g, 0.0, 0.0}};
    q.weights = {0.5, 0.5};
    q.degree = 3;
    break;
  }
  case 2:
    q.points = {{2.0 / 3, 1.0 / 6, 1.0 / 6, 0.0}, {1.0 / 6, 2.0 / 3, 1.0 / 6, 0.0}, {1.0 / 6, 1.0 / 6, 2.0 / 3, 0.0}};
    q.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    break;
  default: {
    const double a = (5.0 + 3.0 * std::sqrt(5.0)) / 20.0;
    const double b = (5.0 - std::sqrt(5.0)) / 20.0;
    q.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
    q.weights = {0.25, 0.25, 0.25, 0.25};
    break;
  }
  }
  return q;
}

} // namespace ocpfem::fem
