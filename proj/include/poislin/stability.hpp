#ifndef POISLIN_STABILITY_HPP
#define POISLIN_STABILITY_HPP

// Finite-dimensional leaf-stability criterion for trivial symplectic
// foliations: rank conditions on the cohomological variation and the wedge
// map, together with the dimension bookkeeping of the degree-2 Lie algebroid
// cohomology they control.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "poislin/errors.hpp"

namespace poislin {

struct FoliationData {
  int n = 0;   // normal directions
  int b1 = 0;  // dim H^1(S)
  int b2 = 0;  // dim H^2(S)
  int b3 = 0;  // dim H^3(S)
  Eigen::MatrixXd var;    // b2 x n, the cohomological variation
  Eigen::MatrixXd wedge;  // b3 x (b1 * n), eta (x) y -> eta ^ var(y)
};

void validate(const FoliationData& data);

struct StabilityReport {
  bool c1 = false;  // var surjective
  bool c2 = false;  // ker var at most 1-dimensional
  bool c3 = false;  // wedge map injective
  bool equivalent_H2_AS_zero = false;
  int kernel_dim = 0;      // dim ker var
  int rank_var = 0;
  int rank_wedge = 0;
  // a kernel vector of the first failing map, when any condition fails
  std::optional<Eigen::VectorXd> certificate;
};

// c1: rank(var) = b2; c2: n - rank(var) <= 1; c3: rank(wedge) = b1 * n.
// Rank decisions use singular values with a relative threshold.
StabilityReport check_conditions(const FoliationData& data, double tol = 1e-10);

// dim H^2(A_S) from the exact sequences: coker(var) + ker(wedge) +
// dim Lambda^2(ker var); equals 0 iff check_conditions passes.
int h2_AS_kernel_dim(const FoliationData& data, double tol = 1e-10);

}  // namespace poislin

#endif
