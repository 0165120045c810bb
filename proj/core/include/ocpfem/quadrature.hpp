#pragma once

#include <array>
#include <vector>

namespace ocpfem::fem {

/// Simplex rule in barycentric coordinates; weights sum to one, so an
/// integral is |tau| * sum_q w_q f(x_q).
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

/// Lowest-cost rule of at least the requested degree (supported: 1, 2).
QuadratureRule simplex_rule(int dim, int degree);

} // namespace ocpfem::fem
