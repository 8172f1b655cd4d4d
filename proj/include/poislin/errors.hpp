#ifndef POISLIN_ERRORS_HPP
#define POISLIN_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace poislin {

// Mismatched dimensions, truncation orders or index layouts between operands.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called outside its contract (e.g. a flow of a vector
// field with nonzero first jet, a rescaling with t <= 0).
struct PreconditionError : std::runtime_error {
  explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// A linear-algebra factorization or solve failed beyond the configured
// tolerances.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// The degree-2 complex has a nonzero harmonic component on some slice, so
// the homotopy inversion is obstructed there.
struct HarmonicObstructionError : std::runtime_error {
  explicit HarmonicObstructionError(const std::string& what) : std::runtime_error(what) {}
};

// Random Poisson deformation generation did not converge.
struct GenerationError : std::runtime_error {
  explicit GenerationError(const std::string& what) : std::runtime_error(what) {}
};

// The initial perturbation is too large for the iteration schedule.
struct PerturbationTooLargeError : std::runtime_error {
  explicit PerturbationTooLargeError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace poislin

#endif
