#include "ocpfem/matrix_market.hpp"

#include "ocpfem/error.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace ocpfem::la {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Returns the banner tokens and leaves the stream at the size line.
std::vector<std::string> read_banner(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0) {
    throw ParameterError("missing MatrixMarket banner");
  }
  std::istringstream ss(lower(line));
  std::vector<std::string> tok;
  for (std::string t; ss >> t;) tok.push_back(t);
  if (tok.size() < 5 || tok[1] != "matrix") throw ParameterError("unsupported MatrixMarket banner");
  return tok;
}

std::string next_data_line(std::istream& is) {
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] != '%') return line;
  }
  throw ParameterError("unexpected end of MatrixMarket data");
}

} // namespace

void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << a.size() << ' ' << a.size() << ' ' << a.nnz() << '\n';
  os << std::setprecision(17);
  const auto off = a.row_offsets();
  const auto col = a.col_indices();
  const auto val = a.values();
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
      os << i + 1 << ' ' << col[k] + 1 << ' ' << val[k] << '\n';
    }
  }
}

void write_matrix_market(std::ostream& os, std::span<const double> v) {
  os << "%%MatrixMarket matrix array real general\n";
  os << v.size() << " 1\n" << std::setprecision(17);
  for (double x : v) os << x << '\n';
}

SparseMatrix read_matrix_market_matrix(std::istream& is) {
  const auto tok = read_banner(is);
  if (tok[2] != "coordinate" || tok[3] != "real") throw ParameterError("expected coordinate real matrix");
  const bool symmetric = tok[4] == "symmetric";
  std::istringstream size_line(next_data_line(is));
  std::size_t rows = 0, cols = 0, nnz = 0;
  size_line >> rows >> cols >> nnz;
  if (rows != cols) throw ParameterError("only square matrices are supported");
  std::vector<Triplet> trips;
  trips.reserve(symmetric ? 2 * nnz : nnz);
  for (std::size_t k = 0; k < nnz; ++k) {
    std::istringstream ss(next_data_line(is));
    long i = 0, j = 0;
    double v = 0.0;
    if (!(ss >> i >> j >> v)) throw ParameterError("malformed MatrixMarket entry");
    trips.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
    if (symmetric && i != j) trips.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), v});
  }
  return SparseMatrix::from_triplets(rows, std::move(trips));
}

Vector read_matrix_market_vector(std::istream& is) {
  const auto tok = read_banner(is);
  if (tok[2] != "array") throw ParameterError("expected array vector");
  std::istringstream size_line(next_data_line(is));
  std::size_t rows = 0, cols = 0;
  size_line >> rows >> cols;
  if (cols != 1) throw ParameterError("expected a single column");
  Vector v(rows);
  for (auto& x : v) {
    std::istringstream ss(next_data_line(is));
    if (!(ss >> x)) throw ParameterError("malformed MatrixMarket value");
  }
  return v;
}

void save_matrix_market(const std::string& path, const SparseMatrix& a) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open " + path);
  write_matrix_market(os, a);
}

void save_matrix_market(const std::string& path, std::span<const double> v) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open " + path);
  write_matrix_market(os, v);
}

} // namespace ocpfem::la
