#pragma once

#include "ocpfem/sparse.hpp"

#include <iosfwd>
#include <string>

namespace ocpfem::la {

// Matrix Market: matrices as `coordinate real general`, vectors as
// `array real general` with one column.
void write_matrix_market(std::ostream& os, const SparseMatrix& a);
void write_matrix_market(std::ostream& os, std::span<const double> v);
SparseMatrix read_matrix_market_matrix(std::istream& is);
Vector read_matrix_market_vector(std::istream& is);

void save_matrix_market(const std::string& path, const SparseMatrix& a);
void save_matrix_market(const std::string& path, std::span<const double> v);

} // namespace ocpfem::la
