#pragma once

#include <span>
#include <vector>

namespace ocpfem::la {

using Vector = std::vector<double>;

// Reductions go through a fixed blocked tree (see par::strict_deterministic).
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double sum(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
/// z = x - y
void subtract(std::span<const double> x, std::span<const double> y, std::span<double> z);
void scale(double alpha, std::span<double> x);
void copy(std::span<const double> x, std::span<double> y);
void fill(std::span<double> x, double value);

} // namespace ocpfem::la
