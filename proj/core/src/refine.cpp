#include "ocpfem/mesh.hpp"

#include "ocpfem/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace ocpfem::mesh {

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

Point midpoint(const Point& a, const Point& b) {
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

double dist2(const Point& a, const Point& b) {
  return (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]);
}

// Expands per-vertex parent pairs (new vertices only, possibly chained) into
// rows over coarse vertices.
Prolongation build_prolongation(std::size_t coarse, const std::vector<std::array<int, 2>>& parents) {
  Prolongation p;
  p.coarse_dofs = coarse;
  p.fine_dofs = coarse + parents.size();
  p.row_offsets.assign(p.fine_dofs + 1, 0);
  p.columns.reserve(coarse + 2 * parents.size());
  p.weights.reserve(p.columns.capacity());
  for (std::size_t v = 0; v < coarse; ++v) {
    p.columns.push_back(static_cast<int>(v));
    p.weights.push_back(1.0);
    p.row_offsets[v + 1] = p.columns.size();
  }
  std::vector<std::pair<int, double>> row;
  for (std::size_t k = 0; k < parents.size(); ++k) {
    row.clear();
    for (int parent : parents[k]) {
      const auto pv = static_cast<std::size_t>(parent);
      for (std::size_t q = p.row_offsets[pv]; q < p.row_offsets[pv + 1]; ++q) {
        row.emplace_back(p.columns[q], 0.5 * p.weights[q]);
      }
    }
    std::sort(row.begin(), row.end());
    std::size_t start = p.columns.size();
    for (const auto& [c, w] : row) {
      if (p.columns.size() > start && p.columns.back() == c) {
        p.weights.back() += w;
      } else {
        p.columns.push_back(c);
        p.weights.push_back(w);
      }
    }
    p.row_offsets[coarse + k + 1] = p.columns.size();
  }
  return p;
}

// Worst singular value ratio of the four inner children when the octahedron
// of s is cut along x02-x13.
double inner_aspect(const std::array<Point, 4>& x) {
  static const Eigen::Matrix3d w_inv = [] {
    Eigen::Matrix3d w;
    w << 1.0, 0.5, 0.5, 0.0, std::sqrt(3.0) / 2.0, std::sqrt(3.0) / 6.0, 0.0, 0.0, std::sqrt(2.0 / 3.0);
    return Eigen::Matrix3d(w.inverse());
  }();
  auto m = [&](int a, int b) { return midpoint(x[static_cast<std::size_t>(a)], x[static_cast<std::size_t>(b)]); };
  const Point m01 = m(0, 1), m02 = m(0, 2), m03 = m(0, 3), m12 = m(1, 2), m13 = m(1, 3), m23 = m(2, 3);
  const std::array<std::array<Point, 4>, 4> kids{{{m01, m02, m03, m13}, {m01, m02, m12, m13},
                                                   {m02, m03, m13, m23}, {m02, m12, m13, m23}}};
  double worst = 0.0;
  for (const auto& k : kids) {
    Eigen::Matrix3d j;
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < 3; ++r) j(r, c) = k[static_cast<std::size_t>(c + 1)][static_cast<std::size_t>(r)] - k[0][static_cast<std::size_t>(r)];
    }
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(j * w_inv).singularValues();
    worst = std::max(worst, sv(0) / sv(2));
  }
  return worst;
}

} // namespace

Prolongation Prolongation::identity(std::size_t n) { return build_prolongation(n, {}); }

std::vector<double> Prolongation::apply(std::span<const double> coarse) const {
  if (coarse.size() != coarse_dofs) throw ParameterError("prolongation input size mismatch");
  std::vector<double> fine(fine_dofs);
  const long n = static_cast<long>(fine_dofs);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t q = row_offsets[static_cast<std::size_t>(i)]; q < row_offsets[static_cast<std::size_t>(i) + 1]; ++q) {
      s += weights[q] * coarse[static_cast<std::size_t>(columns[q])];
    }
    fine[static_cast<std::size_t>(i)] = s;
  }
  return fine;
}

Refinement refine_uniform(const Mesh& m, OctahedronSplit split) {
  const int d = m.dim();
  const int nvpe = d + 1;
  const std::size_t nv = m.num_vertices();

  std::vector<std::uint64_t> keys;
  keys.reserve(m.num_elements() * static_cast<std::size_t>(nvpe * d / 2));
  for (const auto& s : m.elements()) {
    for (int i = 0; i < nvpe; ++i) {
      for (int j = i + 1; j < nvpe; ++j) keys.push_back(edge_key(s[i], s[j]));
    }
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<Point> verts(m.vertices().begin(), m.vertices().end());
  verts.reserve(nv + keys.size());
  std::vector<std::array<int, 2>> parents(keys.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    const int a = static_cast<int>(keys[k] >> 32);
    const int b = static_cast<int>(keys[k] & 0xffffffffu);
    parents[k] = {a, b};
    verts.push_back(midpoint(m.vertex(static_cast<std::size_t>(a)), m.vertex(static_cast<std::size_t>(b))));
  }
  auto mid = [&](int a, int b) {
    const auto it = std::lower_bound(keys.begin(), keys.end(), edge_key(a, b));
    return static_cast<int>(nv + static_cast<std::size_t>(it - keys.begin()));
  };

  const std::size_t nchild = d == 1 ? 2 : (d == 2 ? 4 : 8);
  std::vector<Simplex> elems;
  elems.reserve(m.num_elements() * nchild);
  std::vector<std::uint16_t> gens;
  gens.reserve(elems.capacity());

  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    Simplex s = m.element(e);
    if (d == 1) {
      const int x01 = mid(s[0], s[1]);
      elems.push_back({s[0], x01, -1, -1});
      elems.push_back({x01, s[1], -1, -1});
    } else if (d == 2) {
      const int x01 = mid(s[0], s[1]), x02 = mid(s[0], s[2]), x12 = mid(s[1], s[2]);
      elems.push_back({s[0], x01, x02, -1});
      elems.push_back({x01, s[1], x12, -1});
      elems.push_back({x02, x12, s[2], -1});
      elems.push_back({x01, x02, x12, -1});
    } else {
      // Relabel so the chosen inner diagonal is x02-x13, then apply Bey's rule.
      // Candidate relabellings: Bey (x02-x13), x03-x12, x01-x23.
      const std::array<Simplex, 3> cand{{s, {s[0], s[1], s[3], s[2]}, {s[0], s[2], s[1], s[3]}}};
      std::array<double, 3> score{};
      for (std::size_t c = 0; c < 3; ++c) {
        std::array<Point, 4> x;
        for (std::size_t k = 0; k < 4; ++k) x[k] = m.vertex(static_cast<std::size_t>(cand[c][k]));
        score[c] = split == OctahedronSplit::ShortestDiagonal
                       ? dist2(midpoint(x[0], x[2]), midpoint(x[1], x[3]))
                       : inner_aspect(x);
      }
      const double tol = 1e-12 * std::max({score[0], score[1], score[2]});
      std::size_t best = 0;
      for (std::size_t c = 1; c < 3; ++c) {
        if (score[c] < score[best] - tol) best = c;
      }
      s = cand[best];
      const int x0 = s[0], x1 = s[1], x2 = s[2], x3 = s[3];
      const int x01 = mid(x0, x1), x02 = mid(x0, x2), x03 = mid(x0, x3);
      const int x12 = mid(x1, x2), x13 = mid(x1, x3), x23 = mid(x2, x3);
      elems.push_back({x0, x01, x02, x03});
      elems.push_back({x01, x1, x12, x13});
      elems.push_back({x02, x12, x2, x23});
      elems.push_back({x03, x13, x23, x3});
      elems.push_back({x01, x02, x03, x13});
      elems.push_back({x01, x02, x12, x13});
      elems.push_back({x02, x03, x13, x23});
      elems.push_back({x02, x12, x13, x23});
    }
    for (std::size_t c = 0; c < nchild; ++c) gens.push_back(static_cast<std::uint16_t>(m.generation(e) + 1));
  }

  std::vector<std::uint8_t> tags(elems.size(), static_cast<std::uint8_t>(d));
  Refinement out{Mesh(d, std::move(verts), std::move(elems), std::move(tags), std::move(gens)),
                 build_prolongation(nv, parents)};
  return out;
}

Refinement refine_adaptive(const Mesh& m, std::span<const int> marked) {
  const int d = m.dim();
  const int nvpe = d + 1;
  const std::size_t nv0 = m.num_vertices();
  for (int e : marked) {
    if (e < 0 || static_cast<std::size_t>(e) >= m.num_elements()) throw ParameterError("marked element out of range");
  }

  std::vector<Point> verts(m.vertices().begin(), m.vertices().end());
  std::vector<Simplex> elems(m.elements().begin(), m.elements().end());
  std::vector<std::uint8_t> tags(m.num_elements());
  std::vector<std::uint16_t> gens(m.num_elements());
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    tags[e] = m.bisection_tag(e);
    gens[e] = m.generation(e);
  }

  std::vector<std::vector<int>> inc(nv0);
  {
    const auto ci = vertex_incidence(m);
    for (std::size_t v = 0; v < nv0; ++v) inc[v].assign(ci.of(v).begin(), ci.of(v).end());
  }
  std::unordered_map<std::uint64_t, int> midpoints;
  std::vector<std::array<int, 2>> parents;

  auto contains = [&](int e, int v) {
    const auto& s = elems[static_cast<std::size_t>(e)];
    for (int k = 0; k < nvpe; ++k) {
      if (s[k] == v) return true;
    }
    return false;
  };
  auto has_split_edge = [&](int e) {
    const auto& s = elems[static_cast<std::size_t>(e)];
    for (int i = 0; i < nvpe; ++i) {
      for (int j = i + 1; j < nvpe; ++j) {
        if (midpoints.count(edge_key(s[i], s[j]))) return true;
      }
    }
    return false;
  };

  std::vector<int> queue(marked.begin(), marked.end());
  std::sort(queue.begin(), queue.end());
  queue.erase(std::unique(queue.begin(), queue.end()), queue.end());

  const std::size_t max_rounds = 100000;
  std::size_t rounds = 0;
  std::vector<int> next;
  while (!queue.empty()) {
    if (++rounds > max_rounds) throw NumericalError("bisection closure did not terminate");
    next.clear();
    for (int e : queue) {
      const auto eu = static_cast<std::size_t>(e);
      const Simplex s = elems[eu];
      const int k = tags[eu];
      const int a = s[0], b = s[k];
      const auto key = edge_key(a, b);
      int z;
      bool fresh = false;
      if (auto it = midpoints.find(key); it != midpoints.end()) {
        z = it->second;
      } else {
        z = static_cast<int>(verts.size());
        verts.push_back(midpoint(verts[static_cast<std::size_t>(a)], verts[static_cast<std::size_t>(b)]));
        parents.push_back({a, b});
        inc.emplace_back();
        midpoints.emplace(key, z);
        fresh = true;
      }

      Simplex c1 = s;
      c1[k] = z;
      Simplex c2{-1, -1, -1, -1};
      for (int i = 0; i < k; ++i) c2[i] = s[i + 1];
      c2[k] = z;
      for (int i = k + 1; i <= d; ++i) c2[i] = s[i];
      const auto new_tag = static_cast<std::uint8_t>(k > 1 ? k - 1 : d);
      const int ne = static_cast<int>(elems.size());

      elems[eu] = c1;
      tags[eu] = new_tag;
      ++gens[eu];
      elems.push_back(c2);
      tags.push_back(new_tag);
      gens.push_back(gens[eu]);

      auto& ib = inc[static_cast<std::size_t>(b)];
      ib.erase(std::find(ib.begin(), ib.end(), e));
      inc[static_cast<std::size_t>(z)].push_back(e);
      for (int i = 0; i <= d; ++i) inc[static_cast<std::size_t>(c2[i])].push_back(ne);

      if (fresh) {
        for (int t : inc[static_cast<std::size_t>(a)]) {
          if (contains(t, b)) next.push_back(t);
        }
      }
      if (has_split_edge(e)) next.push_back(e);
      if (has_split_edge(ne)) next.push_back(ne);
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    std::swap(queue, next);
  }

  Refinement out{Mesh(d, std::move(verts), std::move(elems), std::move(tags), std::move(gens)),
                 build_prolongation(nv0, parents)};
  return out;
}

} // namespace ocpfem::mesh
