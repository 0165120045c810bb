#include "ocpfem/mesh.hpp"

#include "ocpfem/error.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <string>

namespace ocpfem::mesh {

namespace {

bool on_cube_boundary(const Point& p, int dim) {
  for (int a = 0; a < dim; ++a) {
    if (std::abs(p[a]) <= kBoundaryTol || std::abs(p[a] - 1.0) <= kBoundaryTol) return true;
  }
  return false;
}

double det(const std::array<std::array<double, 3>, 3>& j, int d) {
  switch (d) {
  case 1: return j[0][0];
  case 2: return j[0][0] * j[1][1] - j[0][1] * j[1][0];
  default:
    return j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
           j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
           j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0]);
  }
}

constexpr double factorial(int d) { return d == 1 ? 1.0 : (d == 2 ? 2.0 : 6.0); }

} // namespace

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<Simplex> elements,
           std::vector<std::uint8_t> bisection_tags, std::vector<std::uint16_t> generations)
    : dim_(dim), vertices_(std::move(vertices)), elements_(std::move(elements)),
      tags_(std::move(bisection_tags)), generations_(std::move(generations)) {
  if (dim_ < 1 || dim_ > 3) throw ParameterError("mesh dimension must be 1, 2 or 3");
  if (tags_.empty()) tags_.assign(elements_.size(), static_cast<std::uint8_t>(dim_));
  if (generations_.empty()) generations_.assign(elements_.size(), 0);
  if (tags_.size() != elements_.size() || generations_.size() != elements_.size()) {
    throw ParameterError("per-element arrays do not match element count");
  }
  const auto nv = static_cast<int>(vertices_.size());
  for (const auto& s : elements_) {
    for (int k = 0; k <= dim_; ++k) {
      if (s[k] < 0 || s[k] >= nv) throw ParameterError("element vertex index out of range");
    }
  }
  boundary_.resize(vertices_.size());
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    boundary_[v] = on_cube_boundary(vertices_[v], dim_) ? 1 : 0;
  }
}

std::size_t Mesh::num_boundary_vertices() const {
  return static_cast<std::size_t>(std::count(boundary_.begin(), boundary_.end(), std::uint8_t{1}));
}

Mesh build_unit_cube_mesh(int n, int d) {
  if (d < 1 || d > 3) throw ParameterError("dimension must be 1, 2 or 3");
  if (n < 1) throw ParameterError("cells per axis must be at least 1");
  const std::size_t np = static_cast<std::size_t>(n) + 1;
  std::size_t nv = 1;
  for (int a = 0; a < d; ++a) nv *= np;

  std::vector<Point> verts(nv, Point{0.0, 0.0, 0.0});
  for (std::size_t v = 0; v < nv; ++v) {
    std::size_t r = v;
    for (int a = 0; a < d; ++a) {
      verts[v][a] = static_cast<double>(r % np) / n;
      r /= np;
    }
  }

  std::array<std::size_t, 3> stride{1, np, np * np};
  std::array<int, 3> perm{0, 1, 2};
  std::vector<std::array<int, 3>> perms;
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.begin() + d));

  std::size_t ncells = 1;
  for (int a = 0; a < d; ++a) ncells *= static_cast<std::size_t>(n);
  std::vector<Simplex> elems;
  elems.reserve(ncells * perms.size());
  for (std::size_t c = 0; c < ncells; ++c) {
    std::size_t r = c, corner = 0;
    for (int a = 0; a < d; ++a) {
      corner += (r % static_cast<std::size_t>(n)) * stride[a];
      r /= static_cast<std::size_t>(n);
    }
    for (const auto& p : perms) {
      Simplex s{-1, -1, -1, -1};
      std::size_t v = corner;
      s[0] = static_cast<int>(v);
      for (int k = 0; k < d; ++k) {
        v += stride[p[k]];
        s[k + 1] = static_cast<int>(v);
      }
      elems.push_back(s);
    }
  }
  return Mesh(d, std::move(verts), std::move(elems));
}

double element_signed_volume(const Mesh& m, std::size_t e) {
  const int d = m.dim();
  const auto& s = m.element(e);
  const auto& x0 = m.vertex(static_cast<std::size_t>(s[0]));
  std::array<std::array<double, 3>, 3> j{};
  for (int k = 0; k < d; ++k) {
    const auto& xk = m.vertex(static_cast<std::size_t>(s[k + 1]));
    for (int a = 0; a < d; ++a) j[a][k] = xk[a] - x0[a];
  }
  return det(j, d) / factorial(d);
}

double element_volume(const Mesh& m, std::size_t e) { return std::abs(element_signed_volume(m, e)); }

double element_size(const Mesh& m, std::size_t e) {
  const auto& s = m.element(e);
  const int nvpe = m.vertices_per_element();
  double h2 = 0.0;
  for (int i = 0; i < nvpe; ++i) {
    for (int j = i + 1; j < nvpe; ++j) {
      const auto& a = m.vertex(static_cast<std::size_t>(s[i]));
      const auto& b = m.vertex(static_cast<std::size_t>(s[j]));
      double l2 = 0.0;
      for (int c = 0; c < m.dim(); ++c) l2 += (a[c] - b[c]) * (a[c] - b[c]);
      h2 = std::max(h2, l2);
    }
  }
  return std::sqrt(h2);
}

double element_volume_size(const Mesh& m, std::size_t e) {
  const int d = m.dim();
  return std::pow(factorial(d) * element_volume(m, e), 1.0 / d);
}

double element_size(const Mesh& m, std::size_t e, SizeMeasure measure) {
  return measure == SizeMeasure::Diameter ? element_size(m, e) : element_volume_size(m, e);
}

std::vector<double> element_sizes(const Mesh& m, SizeMeasure measure) {
  std::vector<double> h(m.num_elements());
  const long ne = static_cast<long>(h.size());
#pragma omp parallel for schedule(static)
  for (long e = 0; e < ne; ++e) h[static_cast<std::size_t>(e)] = element_size(m, static_cast<std::size_t>(e), measure);
  return h;
}

std::vector<int> mark_doerfler(std::span<const double> indicators, double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("Doerfler theta must lie in (0,1]");
  for (double eta : indicators) {
    if (!(eta >= 0.0)) throw ParameterError("error indicators must be nonnegative");
  }
  std::vector<int> order(indicators.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return indicators[static_cast<std::size_t>(a)] > indicators[static_cast<std::size_t>(b)]; });
  double total = 0.0;
  for (int e : order) total += indicators[static_cast<std::size_t>(e)] * indicators[static_cast<std::size_t>(e)];
  if (total == 0.0) return {};
  if (theta >= 1.0) {
    std::vector<int> all(indicators.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
  std::vector<int> marked;
  double acc = 0.0;
  for (int e : order) {
    if (acc >= theta * total) break;
    acc += indicators[static_cast<std::size_t>(e)] * indicators[static_cast<std::size_t>(e)];
    marked.push_back(e);
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

ConformityReport check_conformity(const Mesh& m) {
  ConformityReport rep;
  const int d = m.dim();
  const int nvpe = d + 1;
  std::vector<std::array<int, 3>> faces;
  faces.reserve(m.num_elements() * static_cast<std::size_t>(nvpe));
  // Compensated sum: plain accumulation over ~1e6 elements drifts past 1e-12.
  double comp = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const double vol = element_volume(m, e);
    const double t = rep.volume_sum + vol;
    comp += std::abs(rep.volume_sum) >= vol ? (rep.volume_sum - t) + vol : (vol - t) + rep.volume_sum;
    rep.volume_sum = t;
    if (!(vol > 0.0)) ++rep.degenerate_elements;
    const auto& s = m.element(e);
    for (int skip = 0; skip < nvpe; ++skip) {
      std::array<int, 3> f{-1, -1, -1};
      int k = 0;
      for (int i = 0; i < nvpe; ++i) {
        if (i != skip) f[static_cast<std::size_t>(k++)] = s[i];
      }
      std::sort(f.begin(), f.begin() + d);
      faces.push_back(f);
    }
  }
  rep.volume_sum += comp;
  std::sort(faces.begin(), faces.end());
  for (std::size_t i = 0; i < faces.size();) {
    std::size_t j = i;
    while (j < faces.size() && faces[j] == faces[i]) ++j;
    const std::size_t count = j - i;
    if (count > 2) {
      ++rep.overshared_faces;
    } else if (count == 1) {
      // A boundary facet lies in one face plane of the cube.
      bool on_plane = false;
      for (int a = 0; a < d && !on_plane; ++a) {
        for (double c : {0.0, 1.0}) {
          bool all = true;
          for (int k = 0; k < d; ++k) {
            if (std::abs(m.vertex(static_cast<std::size_t>(faces[i][static_cast<std::size_t>(k)]))[a] - c) >
                kBoundaryTol) {
              all = false;
              break;
            }
          }
          if (all) on_plane = true;
        }
      }
      if (!on_plane) ++rep.unmatched_interior_faces;
    }
    i = j;
  }
  rep.conforming = rep.overshared_faces == 0 && rep.unmatched_interior_faces == 0 &&
                   rep.degenerate_elements == 0 && std::abs(rep.volume_sum - 1.0) <= 1e-12;
  return rep;
}

VertexIncidence vertex_incidence(const Mesh& m) {
  VertexIncidence inc;
  const int nvpe = m.vertices_per_element();
  inc.offsets.assign(m.num_vertices() + 1, 0);
  for (const auto& s : m.elements()) {
    for (int k = 0; k < nvpe; ++k) ++inc.offsets[static_cast<std::size_t>(s[k]) + 1];
  }
  for (std::size_t v = 0; v < m.num_vertices(); ++v) inc.offsets[v + 1] += inc.offsets[v];
  inc.elements.resize(inc.offsets.back());
  std::vector<std::size_t> fill(inc.offsets.begin(), inc.offsets.end() - 1);
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    const auto& s = m.element(e);
    for (int k = 0; k < nvpe; ++k) inc.elements[fill[static_cast<std::size_t>(s[k])]++] = static_cast<int>(e);
  }
  return inc;
}

void write_mesh(std::ostream& os, const Mesh& m) {
  os << m.dim() << ' ' << m.num_vertices() << ' ' << m.num_elements() << '\n';
  os << std::setprecision(17);
  for (const auto& p : m.vertices()) {
    for (int a = 0; a < m.dim(); ++a) os << (a ? " " : "") << p[a];
    os << '\n';
  }
  for (const auto& s : m.elements()) {
    for (int k = 0; k <= m.dim(); ++k) os << (k ? " " : "") << s[k];
    os << '\n';
  }
}

Mesh read_mesh(std::istream& is) {
  int dim = 0;
  std::size_t nv = 0, ne = 0;
  if (!(is >> dim >> nv >> ne)) throw ParameterError("malformed mesh header");
  if (dim < 1 || dim > 3) throw ParameterError("mesh dimension must be 1, 2 or 3");
  std::vector<Point> verts(nv, Point{0.0, 0.0, 0.0});
  for (auto& p : verts) {
    for (int a = 0; a < dim; ++a) {
      if (!(is >> p[a])) throw ParameterError("malformed mesh vertex");
    }
  }
  std::vector<Simplex> elems(ne, Simplex{-1, -1, -1, -1});
  for (auto& s : elems) {
    for (int k = 0; k <= dim; ++k) {
      if (!(is >> s[k])) throw ParameterError("malformed mesh element");
    }
  }
  return Mesh(dim, std::move(verts), std::move(elems));
}

} // namespace ocpfem::mesh
