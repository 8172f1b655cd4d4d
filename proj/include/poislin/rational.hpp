#ifndef POISLIN_RATIONAL_HPP
#define POISLIN_RATIONAL_HPP

// Exact-rational mode: the same slice complexes and iteration as the double
// path, with exact Gauss elimination in place of the eigenvalue Green
// operator. Serves as the zero-tolerance oracle for the float mode; only
// harmonic-free degree-2 slices are invertible here, singular Laplacians
// are reported as obstructions.

#include <vector>

#include "poislin/cohomology.hpp"
#include "poislin/jet.hpp"
#include "poislin/liealg.hpp"
#include "poislin/scalars.hpp"

namespace poislin {

using RatMat = std::vector<std::vector<Rational>>;
using RatVec = std::vector<Rational>;

inline RatMat rat_from_sparse(const Eigen::SparseMatrix<double>& m) {
  RatMat out(static_cast<size_t>(m.rows()), RatVec(static_cast<size_t>(m.cols()), Rational(0)));
  for (int col = 0; col < m.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it)
      out[static_cast<size_t>(it.row())][static_cast<size_t>(col)] = Rational(it.value());
  return out;
}

inline RatVec rat_matvec(const RatMat& m, const RatVec& v) {
  RatVec out(m.size(), Rational(0));
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < v.size(); ++j)
      if (m[i][j] != 0 && v[j] != 0) out[i] += m[i][j] * v[j];
  return out;
}

inline RatVec rat_matvec_t(const RatMat& m, const RatVec& v) {
  size_t cols = m.empty() ? 0 : m[0].size();
  RatVec out(cols, Rational(0));
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < cols; ++j)
      if (m[i][j] != 0 && v[i] != 0) out[j] += m[i][j] * v[i];
  return out;
}

// Exact solve by Gauss-Jordan; throws HarmonicObstructionError when the
// matrix is singular (nonzero harmonic part of the slice).
inline RatVec rat_solve(RatMat a, RatVec b, const std::string& slice_name) {
  const size_t n = a.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    while (piv < n && a[piv][col] == 0) ++piv;
    if (piv == n)
      throw HarmonicObstructionError("exact Laplacian is singular on slice " + slice_name);
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    Rational d = a[col][col];
    for (size_t c = 0; c < n; ++c) a[col][c] /= d;
    b[col] /= d;
    for (size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0) continue;
      Rational f = a[r][col];
      for (size_t c = 0; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  return b;
}

struct RationalHomotopy {
  int dim = 0;
  int k_max = 0;
  struct Deg {
    SliceBasis b1, b2, b3;
    RatMat d12, d23, lap2;
  };
  std::vector<Deg> per_k;
};

inline RationalHomotopy build_rational_homotopy(const LieAlgebraSpec& g, int k_max) {
  if (g.inner_product &&
      (*g.inner_product - Eigen::MatrixXd::Identity(g.dim, g.dim)).norm() > 0)
    throw PreconditionError("rational mode requires the identity inner product");
  RationalHomotopy h;
  h.dim = g.dim;
  h.k_max = k_max;
  h.per_k.resize(static_cast<size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    auto& deg = h.per_k[static_cast<size_t>(k)];
    deg.b1 = build_slice_basis(g.dim, 1, k);
    deg.b2 = build_slice_basis(g.dim, 2, k);
    deg.b3 = (g.dim >= 3) ? build_slice_basis(g.dim, 3, k) : SliceBasis{g.dim, 3, k, {}, {}};
    deg.d12 = rat_from_sparse(build_delta_matrix(g, deg.b1, deg.b2));
    deg.d23 = (g.dim >= 3)
                  ? rat_from_sparse(build_delta_matrix(g, deg.b2, deg.b3))
                  : RatMat(0, RatVec(static_cast<size_t>(deg.b2.size()), Rational(0)));
    // lap2 = d12 d12^T + d23^T d23
    size_t n2 = static_cast<size_t>(deg.b2.size());
    deg.lap2.assign(n2, RatVec(n2, Rational(0)));
    size_t n1 = static_cast<size_t>(deg.b1.size());
    for (size_t i = 0; i < n2; ++i)
      for (size_t j = 0; j < n2; ++j) {
        Rational s(0);
        for (size_t l = 0; l < n1; ++l) s += deg.d12[i][l] * deg.d12[j][l];
        for (size_t r = 0; r < deg.d23.size(); ++r) s += deg.d23[r][i] * deg.d23[r][j];
        deg.lap2[i][j] = s;
      }
  }
  return h;
}

inline PolyMultivector<Rational> homotopy_apply(const RationalHomotopy& h,
                                                const PolyMultivector<Rational>& z) {
  if (z.mv_degree() != 2) throw PreconditionError("homotopy_apply expects a bivector");
  if (z.max_degree() > h.k_max)
    throw PreconditionError("homotopy_apply: input degree exceeds the operator table");
  PolyMultivector<Rational> out(z.dim(), 1, z.trunc_order());
  for (int k = 0; k <= std::max(0, z.max_degree()); ++k) {
    const auto& deg = h.per_k[static_cast<size_t>(k)];
    RatVec w(static_cast<size_t>(deg.b2.size()), Rational(0));
    bool any = false;
    for (const auto& [key, c] : z.terms())
      if (mono_degree(key.mono) == k) {
        w[static_cast<size_t>(deg.b2.index.at(key))] = c;
        any = true;
      }
    if (!any) continue;
    RatVec y = rat_solve(deg.lap2, w, "(q=2, k=" + std::to_string(k) + ")");
    RatVec x = rat_matvec_t(deg.d12, y);
    for (size_t i = 0; i < x.size(); ++i)
      if (x[i] != 0) out.add_term(deg.b1.elems[i].mask, deg.b1.elems[i].mono, x[i]);
  }
  return out;
}

inline PolyMultivector<Rational> homotopy_apply_h2(const RationalHomotopy& h,
                                                   const PolyMultivector<Rational>& v) {
  if (v.mv_degree() != 3) throw PreconditionError("homotopy_apply_h2 expects a trivector");
  PolyMultivector<Rational> out(v.dim(), 2, v.trunc_order());
  for (int k = 0; k <= std::max(0, v.max_degree()); ++k) {
    const auto& deg = h.per_k[static_cast<size_t>(k)];
    if (deg.b3.size() == 0) continue;
    RatVec w(static_cast<size_t>(deg.b3.size()), Rational(0));
    bool any = false;
    for (const auto& [key, c] : v.terms())
      if (mono_degree(key.mono) == k) {
        w[static_cast<size_t>(deg.b3.index.at(key))] = c;
        any = true;
      }
    if (!any) continue;
    RatVec w2 = rat_matvec_t(deg.d23, w);
    RatVec y = rat_solve(deg.lap2, w2, "(q=2, k=" + std::to_string(k) + ")");
    for (size_t i = 0; i < y.size(); ++i)
      if (y[i] != 0) out.add_term(deg.b2.elems[i].mask, deg.b2.elems[i].mono, y[i]);
  }
  return out;
}

template <class S>
PolyMultivector<double> to_double_mv(const PolyMultivector<S>& w) {
  PolyMultivector<double> out(w.dim(), w.mv_degree(), w.trunc_order());
  for (const auto& [key, c] : w.terms())
    out.add_term(key.mask, key.mono, ScalarTraits<S>::to_double(c));
  return out;
}

inline PolyMultivector<Rational> to_rational_mv(const PolyMultivector<double>& w) {
  PolyMultivector<Rational> out(w.dim(), w.mv_degree(), w.trunc_order());
  for (const auto& [key, c] : w.terms()) out.add_term(key.mask, key.mono, Rational(c));
  return out;
}

inline FormalDiffeo<double> to_double_diffeo(const FormalDiffeo<Rational>& phi) {
  FormalDiffeo<double> out;
  out.dim = phi.dim;
  out.trunc = phi.trunc;
  out.cls = phi.cls;
  for (const auto& c : phi.components) out.components.push_back(to_double_mv(c));
  return out;
}

}  // namespace poislin

#endif
