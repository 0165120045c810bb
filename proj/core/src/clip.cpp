#include "ocpfem/clip.hpp"

#include <cmath>

namespace ocpfem::fem {

namespace {

Point lerp(const Point& a, const Point& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

// Triangular prism (A0 A1 A2 | B0 B1 B2) with lateral edges Ai-Bi.
void push_prism(std::vector<SubSimplex>& out, const Point& a0, const Point& a1, const Point& a2,
                const Point& b0, const Point& b1, const Point& b2) {
  out.push_back({{a0, a1, a2, b0}});
  out.push_back({{a1, a2, b0, b1}});
  out.push_back({{a2, b0, b1, b2}});
}

// Keeps the part of s where sign * (x[axis] - c) >= 0.
void clip_half_space(const SubSimplex& s, int dim, int axis, double c, double sign,
                     std::vector<SubSimplex>& out) {
  const int n = dim + 1;
  std::array<double, 4> dist{};
  int in[4], out_idx[4];
  int nin = 0, nout = 0;
  for (int i = 0; i < n; ++i) {
    dist[static_cast<std::size_t>(i)] = sign * (s.v[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] - c);
    if (dist[static_cast<std::size_t>(i)] >= 0.0) {
      in[nin++] = i;
    } else {
      out_idx[nout++] = i;
    }
  }
  if (nout == 0) {
    out.push_back(s);
    return;
  }
  if (nin == 0) return;
  auto cut = [&](int i, int o) {
    const double di = dist[static_cast<std::size_t>(i)], dout = dist[static_cast<std::size_t>(o)];
    return lerp(s.v[static_cast<std::size_t>(i)], s.v[static_cast<std::size_t>(o)], di / (di - dout));
  };
  auto v = [&](int i) { return s.v[static_cast<std::size_t>(i)]; };

  if (dim == 1) {
    out.push_back({{v(in[0]), cut(in[0], out_idx[0])}});
  } else if (dim == 2) {
    if (nin == 1) {
      out.push_back({{v(in[0]), cut(in[0], out_idx[0]), cut(in[0], out_idx[1])}});
    } else {
      const Point pa = cut(in[0], out_idx[0]), pb = cut(in[1], out_idx[0]);
      out.push_back({{v(in[0]), v(in[1]), pb}});
      out.push_back({{v(in[0]), pb, pa}});
    }
  } else {
    if (nin == 1) {
      const int a = in[0];
      out.push_back({{v(a), cut(a, out_idx[0]), cut(a, out_idx[1]), cut(a, out_idx[2])}});
    } else if (nin == 2) {
      const int a = in[0], b = in[1], c0 = out_idx[0], d0 = out_idx[1];
      push_prism(out, v(a), cut(a, c0), cut(a, d0), v(b), cut(b, c0), cut(b, d0));
    } else {
      const int o = out_idx[0];
      push_prism(out, v(in[0]), v(in[1]), v(in[2]), cut(in[0], o), cut(in[1], o), cut(in[2], o));
    }
  }
}

} // namespace

double simplex_measure(const SubSimplex& s, int dim) {
  const auto& x0 = s.v[0];
  double j[3][3] = {};
  for (int k = 0; k < dim; ++k) {
    for (int a = 0; a < dim; ++a) j[a][k] = s.v[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(a)] - x0[static_cast<std::size_t>(a)];
  }
  switch (dim) {
  case 1: return std::abs(j[0][0]);
  case 2: return std::abs(j[0][0] * j[1][1] - j[0][1] * j[1][0]) / 2.0;
  default:
    return std::abs(j[0][0] * (j[1][1] * j[2][2] - j[1][2] * j[2][1]) -
                    j[0][1] * (j[1][0] * j[2][2] - j[1][2] * j[2][0]) +
                    j[0][2] * (j[1][0] * j[2][1] - j[1][1] * j[2][0])) /
           6.0;
  }
}

std::vector<SubSimplex> clip_simplex_to_box(const SubSimplex& s, int dim, const Point& lower,
                                            const Point& upper, double drop_rel) {
  std::vector<SubSimplex> cur{s}, nxt;
  for (int axis = 0; axis < dim; ++axis) {
    for (int side = 0; side < 2; ++side) {
      nxt.clear();
      const double c = side == 0 ? lower[static_cast<std::size_t>(axis)] : upper[static_cast<std::size_t>(axis)];
      const double sign = side == 0 ? 1.0 : -1.0;
      for (const auto& piece : cur) clip_half_space(piece, dim, axis, c, sign, nxt);
      std::swap(cur, nxt);
      if (cur.empty()) return cur;
    }
  }
  const double floor = drop_rel * simplex_measure(s, dim);
  std::vector<SubSimplex> kept;
  kept.reserve(cur.size());
  for (const auto& p : cur) {
    if (simplex_measure(p, dim) >= floor && simplex_measure(p, dim) > 0.0) kept.push_back(p);
  }
  return kept;
}

} // namespace ocpfem::fem
