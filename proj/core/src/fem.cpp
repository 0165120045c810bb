#include "ocpfem/fem.hpp"

#include "ocpfem/clip.hpp"
#include "ocpfem/error.hpp"
#include "ocpfem/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ocpfem::fem {

namespace {

constexpr double mass_factor(int d) { return 1.0 / ((d + 1.0) * (d + 2.0)); }

SubSimplex element_simplex(const Mesh& m, std::size_t e) {
  SubSimplex s;
  const auto& el = m.element(e);
  for (int k = 0; k <= m.dim(); ++k) s.v[static_cast<std::size_t>(k)] = m.vertex(static_cast<std::size_t>(el[k]));
  return s;
}

enum class BoxRelation { Inside, Outside, Cut };

BoxRelation classify(const Mesh& m, std::size_t e, const BoxTarget& t) {
  const int d = m.dim();
  const auto& el = m.element(e);
  bool inside = true;
  for (int a = 0; a < d; ++a) {
    double lo = 2.0, hi = -1.0;
    for (int k = 0; k <= d; ++k) {
      const double x = m.vertex(static_cast<std::size_t>(el[k]))[static_cast<std::size_t>(a)];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    const auto au = static_cast<std::size_t>(a);
    if (hi <= t.lower[au] || lo >= t.upper[au]) return BoxRelation::Outside;
    if (lo < t.lower[au] || hi > t.upper[au]) inside = false;
  }
  return inside ? BoxRelation::Inside : BoxRelation::Cut;
}

// Barycentric coordinates of x in element e, from its geometry.
std::array<double, 4> barycentric(const Mesh& m, std::size_t e, const ElementGeometry& g, const Point& x) {
  const int d = m.dim();
  const auto& x0 = m.vertex(static_cast<std::size_t>(m.element(e)[0]));
  std::array<double, 4> lam{};
  double rest = 1.0;
  for (int k = 1; k <= d; ++k) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += g.grad[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] * (x[static_cast<std::size_t>(a)] - x0[static_cast<std::size_t>(a)]);
    lam[static_cast<std::size_t>(k)] = s;
    rest -= s;
  }
  lam[0] = rest;
  return lam;
}

Point centroid(const SubSimplex& s, int d) {
  Point c{0.0, 0.0, 0.0};
  for (int k = 0; k <= d; ++k) {
    for (int a = 0; a < 3; ++a) c[static_cast<std::size_t>(a)] += s.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] / (d + 1);
  }
  return c;
}

Point map_point(const SubSimplex& s, int d, const std::array<double, 4>& bary) {
  Point x{0.0, 0.0, 0.0};
  for (int k = 0; k <= d; ++k) {
    for (int a = 0; a < 3; ++a) x[static_cast<std::size_t>(a)] += bary[static_cast<std::size_t>(k)] * s.v[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)];
  }
  return x;
}

int local_index(const mesh::Simplex& s, int nvpe, int v) {
  for (int k = 0; k < nvpe; ++k) {
    if (s[k] == v) return k;
  }
  return -1;
}

double coeff_at(std::span<const double> c, std::size_t e) { return c.size() == 1 ? c[0] : c[e]; }

void check_coefficients(std::span<const double> c, std::size_t ne, const char* what) {
  if (c.empty()) return;
  if (c.size() != 1 && c.size() != ne) throw ParameterError(std::string(what) + " coefficient size mismatch");
  for (double v : c) {
    if (!(v > 0.0)) throw ParameterError(std::string(what) + " coefficient must be positive");
  }
}

// ∫_τ u^2 for the linear function with nodal values u.
double local_l2_squared(const std::array<double, 4>& u, int nvpe, double vol, int d) {
  double s2 = 0.0, s1 = 0.0;
  for (int k = 0; k < nvpe; ++k) {
    s2 += u[static_cast<std::size_t>(k)] * u[static_cast<std::size_t>(k)];
    s1 += u[static_cast<std::size_t>(k)];
  }
  return vol * mass_factor(d) * (s2 + s1 * s1);
}

} // namespace

// ---------------------------------------------------------------------------
// DofMap / FeSpace

DofMap DofMap::dirichlet(const Mesh& m) {
  DofMap d;
  d.full_to_free_.assign(m.num_vertices(), -1);
  for (std::size_t v = 0; v < m.num_vertices(); ++v) {
    if (!m.is_boundary(v)) {
      d.full_to_free_[v] = static_cast<int>(d.free_.size());
      d.free_.push_back(static_cast<int>(v));
    }
  }
  return d;
}

DofMap DofMap::all(std::size_t n_vertices) {
  DofMap d;
  d.full_to_free_.resize(n_vertices);
  d.free_.resize(n_vertices);
  for (std::size_t v = 0; v < n_vertices; ++v) {
    d.full_to_free_[v] = static_cast<int>(v);
    d.free_[v] = static_cast<int>(v);
  }
  return d;
}

Vector DofMap::restrict_vector(std::span<const double> full) const {
  if (full.size() != n_vertices()) throw ParameterError("restrict: vector size mismatch");
  Vector out(size());
  for (std::size_t i = 0; i < size(); ++i) out[i] = full[static_cast<std::size_t>(free_[i])];
  return out;
}

Vector DofMap::extend_vector(std::span<const double> free_values) const {
  if (free_values.size() != size()) throw ParameterError("extend: vector size mismatch");
  Vector out(n_vertices(), 0.0);
  for (std::size_t i = 0; i < size(); ++i) out[static_cast<std::size_t>(free_[i])] = free_values[i];
  return out;
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> m) : FeSpace(m, DofMap::dirichlet(*m)) {}

FeSpace::FeSpace(std::shared_ptr<const Mesh> m, DofMap dofs)
    : mesh_(std::move(m)), dofs_(std::move(dofs)), incidence_(mesh::vertex_incidence(*mesh_)) {
  if (dofs_.n_vertices() != mesh_->num_vertices()) throw ParameterError("dof map does not match mesh");
  const std::size_t n = dofs_.size();
  const int nvpe = mesh_->vertices_per_element();
  std::vector<std::size_t> count(n + 1, 0);
  // Two passes over rows: neighbour counts, then neighbour lists.
  auto row_columns = [&](std::size_t i, std::vector<int>& cols) {
    cols.clear();
    const auto v = static_cast<std::size_t>(dofs_.free()[i]);
    for (int e : incidence_.of(v)) {
      const auto& s = mesh_->element(static_cast<std::size_t>(e));
      for (int k = 0; k < nvpe; ++k) {
        const int c = dofs_.full_to_free(static_cast<std::size_t>(s[k]));
        if (c >= 0) cols.push_back(c);
      }
    }
    std::sort(cols.begin(), cols.end());
    cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  };
  const long nl = static_cast<long>(n);
#pragma omp parallel
  {
    std::vector<int> cols;
#pragma omp for schedule(dynamic, 1024)
    for (long i = 0; i < nl; ++i) {
      row_columns(static_cast<std::size_t>(i), cols);
      count[static_cast<std::size_t>(i) + 1] = cols.size();
    }
  }
  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + count[i + 1];
  columns_.resize(offsets_.back());
#pragma omp parallel
  {
    std::vector<int> cols;
#pragma omp for schedule(dynamic, 1024)
    for (long i = 0; i < nl; ++i) {
      row_columns(static_cast<std::size_t>(i), cols);
      std::copy(cols.begin(), cols.end(), columns_.begin() + static_cast<std::ptrdiff_t>(offsets_[static_cast<std::size_t>(i)]));
    }
  }
}

// ---------------------------------------------------------------------------
// Element level

ElementGeometry element_geometry(const Mesh& m, std::size_t e) {
  const int d = m.dim();
  const auto& s = m.element(e);
  const auto& x0 = m.vertex(static_cast<std::size_t>(s[0]));
  double j[3][3] = {};
  for (int k = 0; k < d; ++k) {
    const auto& xk = m.vertex(static_cast<std::size_t>(s[k + 1]));
    for (int a = 0; a < d; ++a) j[a][k] = xk[static_cast<std::size_t>(a)] - x0[static_cast<std::size_t>(a)];
  }
  ElementGeometry g;
  // Rows of inv(J) are the gradients of barycentric coordinates 1..d.
  double inv[3][3] = {};
  double det = 0.0;
  if (d == 1) {
    det = j[0][0];
    inv[0][0] = 1.0 / det;
  } else if (d == 2) {
    det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    inv[0][0] = j[1][1] / det;
    inv[0][1] = -j[0][1] / det;
    inv[1][0] = -j[1][0] / det;
    inv[1][1] = j[0][0] / det;
  } else {
    det = j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) - j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
          j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
    inv[0][0] = (j[1][1] * j[2][2] - j[1][2] * j[2][1]) / det;
    inv[0][1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) / det;
    inv[0][2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) / det;
    inv[1][0] = (j[1][2] * j[2][0] - j[1][0] * j[2][2]) / det;
    inv[1][1] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) / det;
    inv[1][2] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) / det;
    inv[2][0] = (j[1][0] * j[2][1] - j[1][1] * j[2][0]) / det;
    inv[2][1] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) / det;
    inv[2][2] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) / det;
  }
  const double fact = d == 1 ? 1.0 : (d == 2 ? 2.0 : 6.0);
  g.volume = std::abs(det) / fact;
  for (int a = 0; a < d; ++a) {
    double s0 = 0.0;
    for (int k = 0; k < d; ++k) {
      g.grad[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(a)] = inv[k][a];
      s0 += inv[k][a];
    }
    g.grad[0][static_cast<std::size_t>(a)] = -s0;
  }
  return g;
}

ElementMatrix element_stiffness(const Mesh& m, std::size_t e, double coeff) {
  const auto g = element_geometry(m, e);
  const int nvpe = m.vertices_per_element();
  ElementMatrix k{};
  for (int i = 0; i < nvpe; ++i) {
    for (int j = 0; j < nvpe; ++j) {
      double s = 0.0;
      for (int a = 0; a < m.dim(); ++a) s += g.grad[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] * g.grad[static_cast<std::size_t>(j)][static_cast<std::size_t>(a)];
      k[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = coeff * g.volume * s;
    }
  }
  return k;
}

ElementMatrix element_mass(const Mesh& m, std::size_t e) {
  const double vol = element_volume(m, e);
  const int d = m.dim();
  ElementMatrix k{};
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; j <= d; ++j) k[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = vol * (i == j ? 2.0 : 1.0) / ((d + 1) * (d + 2));
  }
  return k;
}

// ---------------------------------------------------------------------------
// Global assembly

la::SparseMatrix assemble_diffusion_reaction(const FeSpace& space, std::span<const double> kappa,
                                             std::span<const double> sigma) {
  const Mesh& m = space.mesh();
  check_coefficients(kappa, m.num_elements(), "diffusion");
  check_coefficients(sigma, m.num_elements(), "reaction");
  const int d = m.dim();
  const int nvpe = d + 1;
  const auto& dofs = space.dofmap();
  const auto off = space.pattern_offsets();
  const auto cols = space.pattern_columns();
  std::vector<std::size_t> offsets(off.begin(), off.end());
  std::vector<int> columns(cols.begin(), cols.end());
  Vector values(columns.size(), 0.0);
  const double mass_denominator = (d + 1.0) * (d + 2.0);

  const long n = static_cast<long>(dofs.size());
#pragma omp parallel for schedule(dynamic, 512)
  for (long il = 0; il < n; ++il) {
    const auto i = static_cast<std::size_t>(il);
    const int v = dofs.free()[i];
    const int* row_cols = columns.data() + offsets[i];
    const std::size_t row_len = offsets[i + 1] - offsets[i];
    double* row_vals = values.data() + offsets[i];
    for (int e : space.incidence().of(static_cast<std::size_t>(v))) {
      const auto eu = static_cast<std::size_t>(e);
      const auto& s = m.element(eu);
      const int li = local_index(s, nvpe, v);
      const auto g = element_geometry(m, eu);
      const double ke = kappa.empty() ? 0.0 : coeff_at(kappa, eu);
      const double se = sigma.empty() ? 0.0 : coeff_at(sigma, eu);
      for (int lj = 0; lj < nvpe; ++lj) {
        const int c = dofs.full_to_free(static_cast<std::size_t>(s[lj]));
        if (c < 0) continue;
        double val = 0.0;
        if (ke != 0.0) {
          double gg = 0.0;
          for (int a = 0; a < d; ++a) gg += g.grad[static_cast<std::size_t>(li)][static_cast<std::size_t>(a)] * g.grad[static_cast<std::size_t>(lj)][static_cast<std::size_t>(a)];
          val += ke * g.volume * gg;
        }
        if (se != 0.0) val += se * g.volume * (li == lj ? 2.0 : 1.0) / mass_denominator;
        const auto pos = static_cast<std::size_t>(std::lower_bound(row_cols, row_cols + row_len, c) - row_cols);
        row_vals[pos] += val;
      }
    }
  }
  return la::SparseMatrix(dofs.size(), std::move(offsets), std::move(columns), std::move(values));
}

la::SparseMatrix assemble_stiffness(const FeSpace& space, std::span<const double> coeff) {
  const double one = 1.0;
  return assemble_diffusion_reaction(space, coeff.empty() ? std::span<const double>(&one, 1) : coeff, {});
}

la::SparseMatrix assemble_mass(const FeSpace& space) {
  const double one = 1.0;
  return assemble_diffusion_reaction(space, {}, std::span<const double>(&one, 1));
}

la::SparseMatrix assemble_weighted_mass(const FeSpace& space, std::span<const double> coeff) {
  if (coeff.empty()) return assemble_mass(space);
  return assemble_diffusion_reaction(space, {}, coeff);
}

la::DiagonalMatrix lump_mass(const la::SparseMatrix& m) {
  Vector d = m.row_sums();
  for (double x : d) {
    if (!(x > 0.0)) throw NumericalError("lumped mass has a nonpositive row sum");
  }
  return la::DiagonalMatrix(std::move(d));
}

la::DiagonalMatrix mass_diagonal(const la::SparseMatrix& m) { return la::DiagonalMatrix(m.diagonal_entries()); }

// ---------------------------------------------------------------------------
// Box target

BoxTarget BoxTarget::centered(int dim) {
  BoxTarget t;
  for (int a = dim; a < 3; ++a) {
    t.lower[static_cast<std::size_t>(a)] = 0.0;
    t.upper[static_cast<std::size_t>(a)] = 0.0;
  }
  return t;
}

void BoxTarget::validate(int dim) const {
  for (int a = 0; a < dim; ++a) {
    const auto au = static_cast<std::size_t>(a);
    if (!(lower[au] < upper[au])) throw ParameterError("box target needs lower < upper");
    if (lower[au] < 0.0 || upper[au] > 1.0) throw ParameterError("box target must lie in the unit cube");
  }
}

Vector assemble_load_box_target(const FeSpace& space, const BoxTarget& target) {
  const Mesh& m = space.mesh();
  target.validate(m.dim());
  const int d = m.dim();
  const int nvpe = d + 1;
  const auto& dofs = space.dofmap();
  const double jump = target.inside_value - target.outside_value;
  Vector load(dofs.size(), 0.0);
  const long n = static_cast<long>(dofs.size());
#pragma omp parallel for schedule(dynamic, 512)
  for (long il = 0; il < n; ++il) {
    const auto i = static_cast<std::size_t>(il);
    const int v = dofs.free()[i];
    double acc = 0.0;
    for (int e : space.incidence().of(static_cast<std::size_t>(v))) {
      const auto eu = static_cast<std::size_t>(e);
      const double vol = element_volume(m, eu);
      double part = target.outside_value * vol / nvpe;
      switch (classify(m, eu, target)) {
      case BoxRelation::Outside: break;
      case BoxRelation::Inside: part += jump * vol / nvpe; break;
      case BoxRelation::Cut: {
        const int li = local_index(m.element(eu), nvpe, v);
        const auto g = element_geometry(m, eu);
        for (const auto& piece : clip_simplex_to_box(element_simplex(m, eu), d, target.lower, target.upper)) {
          const auto lam = barycentric(m, eu, g, centroid(piece, d));
          part += jump * simplex_measure(piece, d) * lam[static_cast<std::size_t>(li)];
        }
        break;
      }
      }
      acc += part;
    }
    load[i] = acc;
  }
  return load;
}

std::vector<double> element_error_indicators(const FeSpace& space, std::span<const double> y,
                                             const BoxTarget& target) {
  const Mesh& m = space.mesh();
  target.validate(m.dim());
  const int d = m.dim();
  const int nvpe = d + 1;
  const Vector full = space.dofmap().extend_vector(y);
  const auto rule = simplex_rule(d, 2);
  std::vector<double> eta(m.num_elements());
  const long ne = static_cast<long>(m.num_elements());
#pragma omp parallel for schedule(dynamic, 1024)
  for (long el = 0; el < ne; ++el) {
    const auto e = static_cast<std::size_t>(el);
    const auto& s = m.element(e);
    std::array<double, 4> u{};
    for (int k = 0; k < nvpe; ++k) u[static_cast<std::size_t>(k)] = full[static_cast<std::size_t>(s[k])];
    const double vol = element_volume(m, e);
    const auto rel = classify(m, e, target);
    double e2 = 0.0;
    if (rel != BoxRelation::Cut) {
      const double c = rel == BoxRelation::Inside ? target.inside_value : target.outside_value;
      std::array<double, 4> diff{};
      for (int k = 0; k < nvpe; ++k) diff[static_cast<std::size_t>(k)] = u[static_cast<std::size_t>(k)] - c;
      e2 = local_l2_squared(diff, nvpe, vol, d);
    } else {
      // Inside pieces integrated directly; the outside part is the whole
      // element minus the inside pieces, both against outside_value.
      const auto g = element_geometry(m, e);
      std::array<double, 4> diff{};
      for (int k = 0; k < nvpe; ++k) diff[static_cast<std::size_t>(k)] = u[static_cast<std::size_t>(k)] - target.outside_value;
      double outside = local_l2_squared(diff, nvpe, vol, d);
      double inside = 0.0;
      for (const auto& piece : clip_simplex_to_box(element_simplex(m, e), d, target.lower, target.upper)) {
        const double pv = simplex_measure(piece, d);
        for (std::size_t q = 0; q < rule.weights.size(); ++q) {
          const auto lam = barycentric(m, e, g, map_point(piece, d, rule.points[q]));
          double yh = 0.0;
          for (int k = 0; k < nvpe; ++k) yh += lam[static_cast<std::size_t>(k)] * u[static_cast<std::size_t>(k)];
          inside += pv * rule.weights[q] * (yh - target.inside_value) * (yh - target.inside_value);
          outside -= pv * rule.weights[q] * (yh - target.outside_value) * (yh - target.outside_value);
        }
      }
      e2 = inside + std::max(outside, 0.0);
    }
    eta[e] = std::sqrt(e2);
  }
  return eta;
}

double l2_error_box_target(const FeSpace& space, std::span<const double> y, const BoxTarget& target) {
  const auto eta = element_error_indicators(space, y, target);
  Vector sq(eta.size());
  for (std::size_t e = 0; e < eta.size(); ++e) sq[e] = eta[e] * eta[e];
  return std::sqrt(la::sum(sq));
}

double l2_inner(const FeSpace& space, std::span<const double> u, std::span<const double> v) {
  const auto mass = assemble_mass(space);
  return la::dot(u, mass.apply(v));
}

la::SparseMatrix apply_dirichlet(const la::SparseMatrix& full, const DofMap& dofs) {
  if (full.size() != dofs.n_vertices()) throw ParameterError("apply_dirichlet: size mismatch");
  const auto off = full.row_offsets();
  const auto col = full.col_indices();
  const auto val = full.values();
  std::vector<std::size_t> o(dofs.size() + 1, 0);
  std::vector<int> c;
  Vector x;
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    const auto r = static_cast<std::size_t>(dofs.free()[i]);
    for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
      const int j = dofs.full_to_free(static_cast<std::size_t>(col[k]));
      if (j >= 0) {
        c.push_back(j);
        x.push_back(val[k]);
      }
    }
    o[i + 1] = c.size();
  }
  return la::SparseMatrix(dofs.size(), std::move(o), std::move(c), std::move(x));
}

Vector prolongate(const mesh::Prolongation& p, const DofMap& coarse, const DofMap& fine,
                  std::span<const double> coarse_values) {
  if (p.coarse_dofs != coarse.n_vertices() || p.fine_dofs != fine.n_vertices()) {
    throw ParameterError("prolongation does not match dof maps");
  }
  return fine.restrict_vector(p.apply(coarse.extend_vector(coarse_values)));
}

Vector interpolate(const Mesh& m, const std::function<double(const Point&)>& f) {
  Vector out(m.num_vertices());
  for (std::size_t v = 0; v < m.num_vertices(); ++v) out[v] = f(m.vertex(v));
  return out;
}

} // namespace ocpfem::fem
