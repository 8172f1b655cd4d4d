#ifndef POISLIN_COHOMOLOGY_HPP
#define POISLIN_COHOMOLOGY_HPP

// Degree-wise finite-dimensional realization of the Poisson complex of a
// linear model pi_g, with homotopy operators h1, h2 built from the slice
// Laplacian Delta = delta delta* + delta* delta and its Green operator.
//
// Fixing the multivector degree q and the polynomial degree k of the
// coefficients cuts the complex into finite-dimensional slices; [pi_g, .]
// preserves k exactly because pi_g is linear.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <optional>
#include <vector>

#include "poislin/jet.hpp"
#include "poislin/liealg.hpp"

namespace poislin {

struct SliceBasis {
  int dim = 0;  // ambient coordinates
  int q = 0;    // multivector degree
  int k = 0;    // polynomial degree
  std::vector<TermKey> elems;
  std::map<TermKey, int> index;

  int size() const { return static_cast<int>(elems.size()); }
};

SliceBasis build_slice_basis(int dim, int q, int k);

// [pi_g, x^mono theta_mask] as a list of (mask', mono', coefficient); valid
// for any q up to the ambient dimension (the slices are plain matrices, not
// PolyMultivector values).
std::vector<std::tuple<std::uint32_t, Mono, double>> linear_delta_terms(
    const LieAlgebraSpec& g, std::uint32_t mask, Mono mono);

Eigen::SparseMatrix<double> build_delta_matrix(const LieAlgebraSpec& g, const SliceBasis& from,
                                               const SliceBasis& to);

// One slice of the complex: basis of (q, k) and the matrix of [pi_g, .]
// into (q+1, k). delta^2 = 0 holds whenever g satisfies the Jacobi identity.
struct ComplexSlice {
  int q = 0;
  int k = 0;
  SliceBasis basis;
  SliceBasis target;
  Eigen::SparseMatrix<double> delta;
};

ComplexSlice build_slice(const LieAlgebraSpec& g, int q, int k);

struct SliceDiagnostic {
  int q = 0;
  int k = 0;
  int dim = 0;
  int harmonic_dim = 0;
  double min_nonzero_eig = 0;
  double green_norm = 0;
};

// Per polynomial degree: the three bases, the two differentials and the
// blockwise eigendecomposition of the degree-2 Laplacian.
struct DegreeOperators {
  int k = 0;
  SliceBasis b0, b1, b2, b3;
  Eigen::SparseMatrix<double> d01, d12, d23;
  struct Block {
    std::vector<int> idx;
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
  };
  std::vector<Block> blocks;  // Laplacian on (2, k)
  double lambda_max_q2 = 0;
  int harmonic_dim_q1 = 0;
  int harmonic_dim_q2 = 0;
  double min_nonzero_q1 = 0;
  double min_nonzero_q2 = 0;
  double green_norm = 0;  // operator norm of the Green operator on (2, k)
};

struct HomotopyOperators {
  int dim = 0;
  int k_max = 0;
  double rank_tol = 1e-10;
  LieAlgebraSpec g_frame;  // structure constants in the orthonormal frame
  // frame change f = e * M when the inner product is not the identity;
  // coordinates transform as y = M^T x
  std::optional<Eigen::MatrixXd> frame;
  std::vector<DegreeOperators> per_k;  // index = polynomial degree

  std::vector<SliceDiagnostic> diagnostics() const;
};

// Assembles delta matrices and factorizes the degree-2 Laplacians for all
// polynomial degrees k <= k_max. Singular values below rank_tol times the
// largest are treated as harmonic.
HomotopyOperators build_homotopy(const LieAlgebraSpec& g, int k_max, double rank_tol = 1e-10);

// h1 = delta* G on bivectors; preserves the polynomial degree (hence the
// vanishing order) slice by slice. Throws HarmonicObstructionError naming
// the slice when the input has a nonzero harmonic component in q = 2.
PolyMv homotopy_apply(const HomotopyOperators& h, const PolyMv& z);

// h2 = G delta* on trivectors.
PolyMv homotopy_apply_h2(const HomotopyOperators& h, const PolyMv& v);

// Harmonic dimensions and extremal Laplacian eigenvalues per slice without
// storing operators. For algebras that split as direct sums the spectra are
// combined from the factors (the slice Laplacian is the sum of the factor
// Laplacians acting on disjoint variables); the combination is cross-checked
// against directly assembled slices in the test suite, and the reported
// minimal eigenvalue is residual-verified against the assembled matrix.
std::vector<SliceDiagnostic> cohomology_diagnostics(const LieAlgebraSpec& g, int k_max,
                                                    int q_min = 1, int q_max = 2,
                                                    double rank_tol = 1e-10);

// Residual |Delta v - lambda v| / |v| of the reported minimal nonzero
// eigenvalue of the (q, k) slice, computed against the directly assembled
// sparse Laplacian. Used to spot-check the combined diagnostics.
double diagnostics_residual_check(const LieAlgebraSpec& g, int q, int k);

}  // namespace poislin

#endif
