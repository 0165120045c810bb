#pragma once

#include <stdexcept>
#include <string>

namespace ocpfem {

/// Invalid argument or configuration (bad dimension, nonpositive coefficient, ...).
class ParameterError : public std::invalid_argument {
public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// A numerical assumption failed at runtime (indefinite operator, breakdown,
/// negative lumped mass, inner-solve failure).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ocpfem
