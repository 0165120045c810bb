#pragma once

#include "ocpfem/fem.hpp"
#include "ocpfem/mesh.hpp"
#include "ocpfem/sparse.hpp"

#include <Eigen/Dense>

#include <memory>
#include <random>

namespace testing_support {

using DenseMat = Eigen::MatrixXd;

inline DenseMat dense(const ocpfem::la::SparseMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  DenseMat d = DenseMat::Zero(n, n);
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t q = off[i]; q < off[i + 1]; ++q) d(static_cast<Eigen::Index>(i), col[q]) += val[q];
  }
  return d;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline std::shared_ptr<const ocpfem::fem::FeSpace> space(int n, int d, int refinements = 0) {
  auto m = ocpfem::mesh::build_unit_cube_mesh(n, d);
  for (int k = 0; k < refinements; ++k) m = ocpfem::mesh::refine_uniform(m).mesh;
  return std::make_shared<const ocpfem::fem::FeSpace>(std::make_shared<const ocpfem::mesh::Mesh>(std::move(m)));
}

} // namespace testing_support
