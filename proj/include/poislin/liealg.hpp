#ifndef POISLIN_LIEALG_HPP
#define POISLIN_LIEALG_HPP

// Compact Lie algebra data, the linear Poisson model, isotropy-algebra
// extraction and the compact-center structure test.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "poislin/jet.hpp"

namespace poislin {

struct LieAlgebraSpec {
  int dim = 0;
  std::string name;
  // structure constants C^k_{ij}, flattened as c[(i*dim + j)*dim + k]
  std::vector<double> c;
  std::optional<Eigen::MatrixXd> inner_product;

  double structure(int i, int j, int k) const {
    return c[static_cast<size_t>((i * dim + j) * dim + k)];
  }
  double& structure(int i, int j, int k) {
    return c[static_cast<size_t>((i * dim + j) * dim + k)];
  }
};

// Throws on violated invariants: antisymmetry, the Jacobi identity, a
// non-SPD inner product, or a non-ad-invariant inner product.
void validate_spec(const LieAlgebraSpec& g, double tol = 1e-12);

LieAlgebraSpec lie_so3();
LieAlgebraSpec lie_su2();
LieAlgebraSpec lie_so3_so3();
LieAlgebraSpec lie_so3_r();
LieAlgebraSpec lie_abelian(int n);
// Built-in algebra by name: so3, su2, so3+so3, so3+R, abelian<n>.
LieAlgebraSpec lie_by_name(const std::string& name);
LieAlgebraSpec direct_sum(const LieAlgebraSpec& a, const LieAlgebraSpec& b,
                          const std::string& name);

struct CompactCenterReport {
  bool is_compact_type = false;
  int center_dim = 0;
  int derived_dim = 0;
  bool admissible = false;
  Eigen::VectorXd killing_eigenvalues;
};

// Center and derived algebra by rank computations; compact type means the
// Killing form is negative semidefinite with kernel exactly the center.
// Admissible additionally requires the center to be at most one-dimensional.
CompactCenterReport compact_center_check(const LieAlgebraSpec& g, double tol = 1e-10);

// The linear Poisson structure pi_g: the coefficient of d_i ^ d_j at the
// monomial x_k is C^k_{ij}.
template <class S>
PolyMultivector<S> linear_poisson(const LieAlgebraSpec& g, int trunc_order) {
  PolyMultivector<S> pi(g.dim, 2, trunc_order);
  for (int i = 0; i < g.dim; ++i)
    for (int j = i + 1; j < g.dim; ++j)
      for (int k = 0; k < g.dim; ++k) {
        double v = g.structure(i, j, k);
        if (v == 0.0) continue;
        pi.add_term((std::uint32_t(1) << i) | (std::uint32_t(1) << j), mono_unit(k), S(v));
      }
  return pi;
}

// Extracts the linear part of a bivector as structure constants (no inner
// product); the Jacobi identity of the result holds iff the linear part is
// Poisson, so no validation is performed here.
template <class S>
LieAlgebraSpec isotropy_at_origin(const PolyMultivector<S>& pi) {
  if (pi.mv_degree() != 2) throw PreconditionError("isotropy_at_origin expects a bivector");
  if (pi.vanishing_order() < 1)
    throw PreconditionError("isotropy_at_origin: bivector must vanish at the origin");
  LieAlgebraSpec g;
  g.dim = pi.dim();
  g.name = "isotropy";
  g.c.assign(static_cast<size_t>(g.dim) * g.dim * g.dim, 0.0);
  for (const auto& [key, coeff] : pi.terms()) {
    if (mono_degree(key.mono) != 1) continue;
    int k = 0;
    while (mono_exp(key.mono, k) == 0) ++k;
    int i = std::countr_zero(key.mask);
    int j = std::countr_zero(key.mask & (key.mask - 1));
    double v = ScalarTraits<S>::to_double(coeff);
    g.structure(i, j, k) = v;
    g.structure(j, i, k) = -v;
  }
  return g;
}

}  // namespace poislin

#endif
