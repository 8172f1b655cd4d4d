#include "poislin/cohomology.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace poislin {

namespace {

void enumerate_monomials(int dim, int degree, int var, Mono current,
                         std::vector<Mono>& out) {
  if (var == dim - 1) {
    out.push_back(current + (Mono(degree) << (8 * var)));
    return;
  }
  for (int e = degree; e >= 0; --e)
    enumerate_monomials(dim, degree - e, var + 1, current + (Mono(e) << (8 * var)), out);
}

std::vector<std::uint32_t> enumerate_masks(int dim, int q) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t m = 0; m < (1u << dim); ++m)
    if (std::popcount(m) == q) out.push_back(m);
  return out;
}

// Union-find over coordinate indices; i ~ j when they interact through a
// nonzero structure constant.
std::vector<std::vector<int>> variable_factors(const LieAlgebraSpec& g) {
  const int d = g.dim;
  std::vector<int> parent(d);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  auto unite = [&](int a, int b) { parent[find(a)] = find(b); };
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        if (g.structure(i, j, k) != 0.0) {
          unite(i, j);
          unite(i, k);
        }
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < d; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, vars] : groups) out.push_back(vars);
  return out;
}

LieAlgebraSpec restrict_to_vars(const LieAlgebraSpec& g, const std::vector<int>& vars) {
  LieAlgebraSpec sub;
  sub.dim = static_cast<int>(vars.size());
  sub.name = g.name + "|factor";
  sub.c.assign(static_cast<size_t>(sub.dim) * sub.dim * sub.dim, 0.0);
  for (int i = 0; i < sub.dim; ++i)
    for (int j = 0; j < sub.dim; ++j)
      for (int k = 0; k < sub.dim; ++k)
        sub.structure(i, j, k) = g.structure(vars[i], vars[j], vars[k]);
  return sub;
}

// Connected components of the sparsity graph of a symmetric sparse matrix.
std::vector<std::vector<int>> sparsity_components(const Eigen::SparseMatrix<double>& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int col = 0; col < m.outerSize(); ++col)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it)
      if (it.value() != 0.0) parent[find(static_cast<int>(it.row()))] = find(col);
  std::map<int, std::vector<int>> groups;
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& [root, idx] : groups) out.push_back(idx);
  return out;
}

Eigen::MatrixXd dense_submatrix(const Eigen::SparseMatrix<double>& m,
                                const std::vector<int>& idx) {
  std::vector<int> where(m.rows(), -1);
  for (size_t i = 0; i < idx.size(); ++i) where[static_cast<size_t>(idx[i])] = static_cast<int>(i);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(idx.size()),
                                              static_cast<Eigen::Index>(idx.size()));
  for (int col = 0; col < m.outerSize(); ++col) {
    if (where[static_cast<size_t>(col)] < 0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, col); it; ++it) {
      int r = where[static_cast<size_t>(it.row())];
      if (r >= 0) out(r, where[static_cast<size_t>(col)]) = it.value();
    }
  }
  return out;
}

// All eigenvalues of a sparse symmetric PSD matrix, per sparsity component.
std::vector<double> sparse_psd_eigenvalues(const Eigen::SparseMatrix<double>& m) {
  std::vector<double> vals;
  vals.reserve(static_cast<size_t>(m.rows()));
  for (const auto& comp : sparsity_components(m)) {
    if (comp.size() == 1) {
      vals.push_back(m.coeff(comp[0], comp[0]));
      continue;
    }
    Eigen::MatrixXd block = dense_submatrix(m, comp);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(block, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      vals.push_back(es.eigenvalues()(i));
  }
  std::sort(vals.begin(), vals.end());
  return vals;
}

SliceDiagnostic diagnostic_from_spectrum(int q, int k, std::vector<double> spectrum,
                                         double rank_tol) {
  SliceDiagnostic d;
  d.q = q;
  d.k = k;
  d.dim = static_cast<int>(spectrum.size());
  double lmax = spectrum.empty() ? 0.0 : *std::max_element(spectrum.begin(), spectrum.end());
  double thresh = rank_tol * (lmax > 0 ? lmax : 1.0);
  double minnz = 0;
  int harm = 0;
  for (double l : spectrum) {
    if (l <= thresh)
      ++harm;
    else if (minnz == 0 || l < minnz)
      minnz = l;
  }
  d.harmonic_dim = harm;
  d.min_nonzero_eig = minnz;
  d.green_norm = (q == 2 && minnz > 0) ? 1.0 / minnz : 0.0;
  return d;
}

}  // namespace

SliceBasis build_slice_basis(int dim, int q, int k) {
  if (dim < 1 || dim > kMaxDim) throw StructuralError("build_slice_basis: dim out of range");
  if (q < 0 || q > dim) throw StructuralError("build_slice_basis: q out of range");
  SliceBasis b;
  b.dim = dim;
  b.q = q;
  b.k = k;
  std::vector<Mono> monos;
  enumerate_monomials(dim, k, 0, 0, monos);
  std::sort(monos.begin(), monos.end());
  for (std::uint32_t mask : enumerate_masks(dim, q))
    for (Mono m : monos) b.elems.push_back(TermKey{mask, m});
  std::sort(b.elems.begin(), b.elems.end());
  for (size_t i = 0; i < b.elems.size(); ++i) b.index.emplace(b.elems[i], static_cast<int>(i));
  return b;
}

std::vector<std::tuple<std::uint32_t, Mono, double>> linear_delta_terms(
    const LieAlgebraSpec& g, std::uint32_t mask, Mono mono) {
  // [pi_g, W] for W = x^mono theta_mask, following the biderivation formula
  // of schouten_bracket with a = 2, b = q:
  //   [pi, W] = -sum_u D_u(pi) d_u(W) - sum_u D_u(W) d_u(pi).
  const int d = g.dim;
  std::vector<std::tuple<std::uint32_t, Mono, double>> out;
  // -pi * W: D_u(pi) = sum_{v != u, k} C^k_{uv} x_k theta_v
  for (int u = 0; u < d; ++u) {
    int au = mono_exp(mono, u);
    if (au == 0) continue;
    for (int v = 0; v < d; ++v) {
      if (v == u) continue;
      std::uint32_t vbit = std::uint32_t(1) << v;
      if (mask & vbit) continue;
      for (int k = 0; k < d; ++k) {
        double c = g.structure(u, v, k);
        if (c == 0.0) continue;
        Mono m2 = mono - mono_unit(u) + mono_unit(k);
        double sgn = merge_sign(vbit, mask);
        out.emplace_back(mask | vbit, m2, -au * c * sgn);
      }
    }
  }
  // -W * pi: D_u(W) for u in mask, times d_u(pi) = sum_{i<j} C^u_{ij}
  // theta_i theta_j
  for (int u = 0; u < d; ++u) {
    std::uint32_t ubit = std::uint32_t(1) << u;
    if (!(mask & ubit)) continue;
    double su = theta_derivative_sign(mask, u);
    std::uint32_t rest = mask ^ ubit;
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) {
        double c = g.structure(i, j, u);
        if (c == 0.0) continue;
        std::uint32_t ij = (std::uint32_t(1) << i) | (std::uint32_t(1) << j);
        if (rest & ij) continue;
        double sgn = merge_sign(rest, ij);
        out.emplace_back(rest | ij, mono, -su * c * sgn);
      }
  }
  return out;
}

Eigen::SparseMatrix<double> build_delta_matrix(const LieAlgebraSpec& g, const SliceBasis& from,
                                               const SliceBasis& to) {
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t col = 0; col < from.elems.size(); ++col) {
    const TermKey& e = from.elems[col];
    for (const auto& [mask2, mono2, coeff] : linear_delta_terms(g, e.mask, e.mono)) {
      auto it = to.index.find(TermKey{mask2, mono2});
      if (it == to.index.end())
        throw StructuralError("build_delta_matrix: image leaves the target slice");
      trips.emplace_back(it->second, static_cast<int>(col), coeff);
    }
  }
  Eigen::SparseMatrix<double> m(to.size(), from.size());
  m.setFromTriplets(trips.begin(), trips.end());
  m.prune(0.0);
  return m;
}

ComplexSlice build_slice(const LieAlgebraSpec& g, int q, int k) {
  ComplexSlice s;
  s.q = q;
  s.k = k;
  s.basis = build_slice_basis(g.dim, q, k);
  if (q + 1 <= g.dim) {
    s.target = build_slice_basis(g.dim, q + 1, k);
    s.delta = build_delta_matrix(g, s.basis, s.target);
  } else {
    s.target = SliceBasis{g.dim, q + 1, k, {}, {}};
    s.delta = Eigen::SparseMatrix<double>(0, s.basis.size());
  }
  return s;
}

HomotopyOperators build_homotopy(const LieAlgebraSpec& g, int k_max, double rank_tol) {
  HomotopyOperators h;
  h.dim = g.dim;
  h.k_max = k_max;
  h.rank_tol = rank_tol;

  // Work in a frame in which the inner product is the identity; the slice
  // metric is then the one that makes the monomial basis orthonormal.
  if (g.inner_product &&
      (g.inner_product->rows() != g.dim ||
       (*g.inner_product - Eigen::MatrixXd::Identity(g.dim, g.dim)).norm() > 1e-14)) {
    Eigen::LLT<Eigen::MatrixXd> llt(*g.inner_product);
    if (llt.info() != Eigen::Success)
      throw NumericalError("build_homotopy: inner product is not positive definite");
    Eigen::MatrixXd l = llt.matrixL();
    Eigen::MatrixXd m = l.transpose().inverse();  // new basis f = e * M is orthonormal
    Eigen::MatrixXd minv = m.inverse();
    LieAlgebraSpec gf;
    gf.dim = g.dim;
    gf.name = g.name + "|orthonormal";
    gf.c.assign(g.c.size(), 0.0);
    for (int a = 0; a < g.dim; ++a)
      for (int b = 0; b < g.dim; ++b)
        for (int c = 0; c < g.dim; ++c) {
          double s = 0;
          for (int i = 0; i < g.dim; ++i)
            for (int j = 0; j < g.dim; ++j)
              for (int k = 0; k < g.dim; ++k)
                s += m(i, a) * m(j, b) * minv(c, k) * g.structure(i, j, k);
          gf.structure(a, b, c) = s;
        }
    h.g_frame = gf;
    h.frame = m;
  } else {
    h.g_frame = g;
    h.frame.reset();
  }
  const LieAlgebraSpec& gf = h.g_frame;

  h.per_k.resize(static_cast<size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    DegreeOperators& ops = h.per_k[static_cast<size_t>(k)];
    ops.k = k;
    ops.b0 = build_slice_basis(gf.dim, 0, k);
    ops.b1 = build_slice_basis(gf.dim, 1, k);
    ops.b2 = build_slice_basis(gf.dim, 2, k);
    ops.b3 = (gf.dim >= 3) ? build_slice_basis(gf.dim, 3, k) : SliceBasis{gf.dim, 3, k, {}, {}};
    ops.d01 = build_delta_matrix(gf, ops.b0, ops.b1);
    ops.d12 = build_delta_matrix(gf, ops.b1, ops.b2);
    ops.d23 = (gf.dim >= 3)
                  ? build_delta_matrix(gf, ops.b2, ops.b3)
                  : Eigen::SparseMatrix<double>(0, ops.b2.size());

    Eigen::SparseMatrix<double> lap2 =
        Eigen::SparseMatrix<double>(ops.d12 * ops.d12.transpose()) +
        Eigen::SparseMatrix<double>(ops.d23.transpose() * ops.d23);
    double lambda_max = 0;
    for (const auto& comp : sparsity_components(lap2)) {
      DegreeOperators::Block blk;
      blk.idx = comp;
      Eigen::MatrixXd dense = dense_submatrix(lap2, comp);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
      if (es.info() != Eigen::Success)
        throw NumericalError("build_homotopy: eigendecomposition failed on slice (q=2, k=" +
                             std::to_string(k) + ")");
      blk.vecs = es.eigenvectors();
      blk.vals = es.eigenvalues();
      lambda_max = std::max(lambda_max, blk.vals.size() ? blk.vals.maxCoeff() : 0.0);
      ops.blocks.push_back(std::move(blk));
    }
    ops.lambda_max_q2 = lambda_max;
    double thresh = rank_tol * (lambda_max > 0 ? lambda_max : 1.0);
    double minnz = 0;
    int harm = 0;
    for (const auto& blk : ops.blocks)
      for (Eigen::Index i = 0; i < blk.vals.size(); ++i) {
        double l = blk.vals(i);
        if (l <= thresh)
          ++harm;
        else if (minnz == 0 || l < minnz)
          minnz = l;
      }
    ops.harmonic_dim_q2 = harm;
    ops.min_nonzero_q2 = minnz;
    ops.green_norm = minnz > 0 ? 1.0 / minnz : 0.0;

    Eigen::SparseMatrix<double> lap1 =
        Eigen::SparseMatrix<double>(ops.d01 * ops.d01.transpose()) +
        Eigen::SparseMatrix<double>(ops.d12.transpose() * ops.d12);
    auto diag1 = diagnostic_from_spectrum(1, k, sparse_psd_eigenvalues(lap1), rank_tol);
    ops.harmonic_dim_q1 = diag1.harmonic_dim;
    ops.min_nonzero_q1 = diag1.min_nonzero_eig;
  }
  return h;
}

std::vector<SliceDiagnostic> HomotopyOperators::diagnostics() const {
  std::vector<SliceDiagnostic> out;
  for (const auto& ops : per_k) {
    SliceDiagnostic d1;
    d1.q = 1;
    d1.k = ops.k;
    d1.dim = ops.b1.size();
    d1.harmonic_dim = ops.harmonic_dim_q1;
    d1.min_nonzero_eig = ops.min_nonzero_q1;
    d1.green_norm = 0;
    out.push_back(d1);
    SliceDiagnostic d2;
    d2.q = 2;
    d2.k = ops.k;
    d2.dim = ops.b2.size();
    d2.harmonic_dim = ops.harmonic_dim_q2;
    d2.min_nonzero_eig = ops.min_nonzero_q2;
    d2.green_norm = ops.green_norm;
    out.push_back(d2);
  }
  return out;
}

namespace {

// Shared frame conversion for the homotopy applications.
PolyMv to_frame(const HomotopyOperators& h, const PolyMv& w) {
  if (!h.frame) return w;
  Eigen::MatrixXd t = h.frame->transpose().inverse();  // y -> x map
  Diffeo psi;
  psi.dim = w.dim();
  psi.trunc = w.trunc_order();
  psi.cls = DiffeoClass::linear_part_invertible;
  for (int i = 0; i < w.dim(); ++i) {
    PolyMv c(w.dim(), 0, w.trunc_order());
    for (int j = 0; j < w.dim(); ++j)
      if (t(i, j) != 0.0) c.add_term(0, mono_unit(j), t(i, j));
    psi.components.push_back(std::move(c));
  }
  return pullback(psi, w);
}

PolyMv from_frame(const HomotopyOperators& h, const PolyMv& w) {
  if (!h.frame) return w;
  Eigen::MatrixXd t = h.frame->transpose();  // x -> y map
  Diffeo phi;
  phi.dim = w.dim();
  phi.trunc = w.trunc_order();
  phi.cls = DiffeoClass::linear_part_invertible;
  for (int i = 0; i < w.dim(); ++i) {
    PolyMv c(w.dim(), 0, w.trunc_order());
    for (int j = 0; j < w.dim(); ++j)
      if (t(i, j) != 0.0) c.add_term(0, mono_unit(j), t(i, j));
    phi.components.push_back(std::move(c));
  }
  return pullback(phi, w);
}

Eigen::VectorXd slice_vector(const PolyMv& w, const SliceBasis& basis, int k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(basis.size());
  for (const auto& [key, c] : w.terms()) {
    if (mono_degree(key.mono) != k) continue;
    auto it = basis.index.find(key);
    if (it == basis.index.end()) throw StructuralError("slice_vector: term outside the slice");
    v(it->second) = c;
  }
  return v;
}

// Applies the Green operator on (2, k): blockwise eigen-projection with a
// harmonic-residual check.
Eigen::VectorXd green_apply(const HomotopyOperators& h, const DegreeOperators& ops,
                            const Eigen::VectorXd& w) {
  double thresh = h.rank_tol * (ops.lambda_max_q2 > 0 ? ops.lambda_max_q2 : 1.0);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(w.size());
  double harmonic_sq = 0;
  for (const auto& blk : ops.blocks) {
    Eigen::VectorXd wb(blk.idx.size());
    for (size_t i = 0; i < blk.idx.size(); ++i) wb(static_cast<Eigen::Index>(i)) = w(blk.idx[i]);
    Eigen::VectorXd coords = blk.vecs.transpose() * wb;
    for (Eigen::Index i = 0; i < coords.size(); ++i) {
      if (blk.vals(i) <= thresh) {
        harmonic_sq += coords(i) * coords(i);
        coords(i) = 0;
      } else {
        coords(i) /= blk.vals(i);
      }
    }
    Eigen::VectorXd yb = blk.vecs * coords;
    for (size_t i = 0; i < blk.idx.size(); ++i) y(blk.idx[i]) = yb(static_cast<Eigen::Index>(i));
  }
  double wn = w.norm();
  if (wn > 0 && std::sqrt(harmonic_sq) > 1e-9 * wn) {
    std::ostringstream os;
    os << "homotopy operators obstructed: nonzero harmonic component on slice (q=2, k=" << ops.k
       << "), relative amplitude " << std::sqrt(harmonic_sq) / wn;
    throw HarmonicObstructionError(os.str());
  }
  return y;
}

}  // namespace

PolyMv homotopy_apply(const HomotopyOperators& h, const PolyMv& z) {
  if (z.mv_degree() != 2) throw PreconditionError("homotopy_apply expects a bivector");
  if (z.dim() != h.dim) throw StructuralError("homotopy_apply: dimension mismatch");
  if (z.max_degree() > h.k_max)
    throw PreconditionError("homotopy_apply: input degree exceeds the operator table");
  PolyMv zf = to_frame(h, z);
  PolyMv out(z.dim(), 1, z.trunc_order());
  for (int k = 0; k <= std::min(h.k_max, zf.max_degree()); ++k) {
    const DegreeOperators& ops = h.per_k[static_cast<size_t>(k)];
    Eigen::VectorXd w = slice_vector(zf, ops.b2, k);
    if (w.norm() == 0) continue;
    Eigen::VectorXd y = green_apply(h, ops, w);
    Eigen::VectorXd x = ops.d12.transpose() * y;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (x(i) != 0.0)
        out.add_term(ops.b1.elems[static_cast<size_t>(i)].mask,
                     ops.b1.elems[static_cast<size_t>(i)].mono, x(i));
  }
  return from_frame(h, out);
}

PolyMv homotopy_apply_h2(const HomotopyOperators& h, const PolyMv& v) {
  if (v.mv_degree() != 3) throw PreconditionError("homotopy_apply_h2 expects a trivector");
  if (v.dim() != h.dim) throw StructuralError("homotopy_apply_h2: dimension mismatch");
  if (v.max_degree() > h.k_max)
    throw PreconditionError("homotopy_apply_h2: input degree exceeds the operator table");
  PolyMv vf = to_frame(h, v);
  PolyMv out(v.dim(), 2, v.trunc_order());
  for (int k = 0; k <= std::min(h.k_max, vf.max_degree()); ++k) {
    const DegreeOperators& ops = h.per_k[static_cast<size_t>(k)];
    if (ops.b3.size() == 0) continue;
    Eigen::VectorXd w = slice_vector(vf, ops.b3, k);
    if (w.norm() == 0) continue;
    Eigen::VectorXd w2 = ops.d23.transpose() * w;
    Eigen::VectorXd y = green_apply(h, ops, w2);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (y(i) != 0.0)
        out.add_term(ops.b2.elems[static_cast<size_t>(i)].mask,
                     ops.b2.elems[static_cast<size_t>(i)].mono, y(i));
  }
  return from_frame(h, out);
}

namespace {

using Spectra = std::map<std::pair<int, int>, std::vector<double>>;  // (q,k) -> eigenvalues

Spectra direct_spectra(const LieAlgebraSpec& g, int k_max, int q_min, int q_max) {
  Spectra out;
  std::map<std::pair<int, int>, SliceBasis> bases;
  auto basis_of = [&](int q, int k) -> const SliceBasis& {
    auto key = std::make_pair(q, k);
    auto it = bases.find(key);
    if (it == bases.end()) it = bases.emplace(key, build_slice_basis(g.dim, q, k)).first;
    return it->second;
  };
  for (int k = 0; k <= k_max; ++k) {
    std::map<int, Eigen::SparseMatrix<double>> deltas;  // q -> delta_{q,k}
    for (int q = std::max(0, q_min - 1); q <= std::min(g.dim, q_max + 1); ++q) {
      if (q + 1 <= g.dim)
        deltas[q] = build_delta_matrix(g, basis_of(q, k), basis_of(q + 1, k));
      else
        deltas[q] = Eigen::SparseMatrix<double>(0, basis_of(q, k).size());
    }
    for (int q = q_min; q <= std::min(q_max, g.dim); ++q) {
      Eigen::SparseMatrix<double> lap(basis_of(q, k).size(), basis_of(q, k).size());
      lap = Eigen::SparseMatrix<double>(deltas[q].transpose() * deltas[q]);
      if (q - 1 >= 0 && deltas.count(q - 1))
        lap = lap + Eigen::SparseMatrix<double>(deltas[q - 1] * deltas[q - 1].transpose());
      out[{q, k}] = sparse_psd_eigenvalues(lap);
    }
  }
  return out;
}

Spectra combine_spectra(const Spectra& a, const Spectra& b, int k_max, int q_max) {
  Spectra out;
  for (int q = 0; q <= q_max; ++q)
    for (int k = 0; k <= k_max; ++k) {
      std::vector<double> vals;
      for (int q1 = 0; q1 <= q; ++q1)
        for (int k1 = 0; k1 <= k; ++k1) {
          auto ia = a.find({q1, k1});
          auto ib = b.find({q - q1, k - k1});
          if (ia == a.end() || ib == b.end()) continue;
          for (double x : ia->second)
            for (double y : ib->second) vals.push_back(x + y);
        }
      std::sort(vals.begin(), vals.end());
      out[{q, k}] = std::move(vals);
    }
  return out;
}

}  // namespace

std::vector<SliceDiagnostic> cohomology_diagnostics(const LieAlgebraSpec& g, int k_max, int q_min,
                                                    int q_max, double rank_tol) {
  auto factors = variable_factors(g);
  Spectra spectra;
  if (factors.size() <= 1) {
    spectra = direct_spectra(g, k_max, q_min, q_max);
  } else {
    // full factor spectra from 0 up to q_max, then pairwise combination
    bool first = true;
    for (const auto& vars : factors) {
      LieAlgebraSpec sub = restrict_to_vars(g, vars);
      Spectra fs = direct_spectra(sub, k_max, 0, std::min(q_max, sub.dim));
      // pad missing (q, k) pairs with empty-dimension handling: q beyond the
      // factor dimension has no slices, which combine as absent terms
      if (first) {
        spectra = std::move(fs);
        first = false;
      } else {
        spectra = combine_spectra(spectra, fs, k_max, q_max);
      }
    }
  }
  std::vector<SliceDiagnostic> out;
  for (int q = q_min; q <= std::min(q_max, g.dim); ++q)
    for (int k = 0; k <= k_max; ++k) {
      auto it = spectra.find({q, k});
      if (it == spectra.end()) continue;
      out.push_back(diagnostic_from_spectrum(q, k, it->second, rank_tol));
    }
  return out;
}

double diagnostics_residual_check(const LieAlgebraSpec& g, int q, int k) {
  auto factors = variable_factors(g);
  if (factors.size() != 2)
    throw PreconditionError("diagnostics_residual_check expects exactly two factors");

  struct FactorEig {
    SliceBasis basis;
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
  };
  // Eigendecompose all factor slices contributing to (q, k).
  auto factor_eigs = [&](const std::vector<int>& vars) {
    LieAlgebraSpec sub = restrict_to_vars(g, vars);
    std::map<std::pair<int, int>, FactorEig> out;
    for (int q1 = 0; q1 <= std::min(q, sub.dim); ++q1)
      for (int k1 = 0; k1 <= k; ++k1) {
        FactorEig fe;
        fe.basis = build_slice_basis(sub.dim, q1, k1);
        SliceBasis up = (q1 + 1 <= sub.dim) ? build_slice_basis(sub.dim, q1 + 1, k1)
                                            : SliceBasis{sub.dim, q1 + 1, k1, {}, {}};
        SliceBasis down = (q1 - 1 >= 0) ? build_slice_basis(sub.dim, q1 - 1, k1)
                                        : SliceBasis{sub.dim, q1 - 1, k1, {}, {}};
        Eigen::SparseMatrix<double> dup =
            (q1 + 1 <= sub.dim) ? build_delta_matrix(sub, fe.basis, up)
                                : Eigen::SparseMatrix<double>(0, fe.basis.size());
        Eigen::SparseMatrix<double> ddown =
            (q1 - 1 >= 0) ? build_delta_matrix(sub, down, fe.basis)
                          : Eigen::SparseMatrix<double>(fe.basis.size(), 0);
        Eigen::MatrixXd lap = Eigen::MatrixXd(dup.transpose() * dup) +
                              Eigen::MatrixXd(ddown * ddown.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
        fe.vecs = es.eigenvectors();
        fe.vals = es.eigenvalues();
        out.emplace(std::make_pair(q1, k1), std::move(fe));
      }
    return out;
  };
  auto ea = factor_eigs(factors[0]);
  auto eb = factor_eigs(factors[1]);

  // locate the minimal nonzero combined eigenvalue and its factor pair
  double lmax = 0;
  for (auto& [qk, fe] : ea)
    for (auto& [qk2, fe2] : eb) {
      if (qk.first + qk2.first != q || qk.second + qk2.second != k) continue;
      if (fe.vals.size() && fe2.vals.size())
        lmax = std::max(lmax, fe.vals.maxCoeff() + fe2.vals.maxCoeff());
    }
  double thresh = 1e-10 * (lmax > 0 ? lmax : 1.0);
  double best = 0;
  std::pair<int, int> best_a, best_b;
  int best_i = -1, best_j = -1;
  for (auto& [qka, fa] : ea)
    for (auto& [qkb, fb] : eb) {
      if (qka.first + qkb.first != q || qka.second + qkb.second != k) continue;
      for (Eigen::Index i = 0; i < fa.vals.size(); ++i)
        for (Eigen::Index j = 0; j < fb.vals.size(); ++j) {
          double l = fa.vals(i) + fb.vals(j);
          if (l > thresh && (best == 0 || l < best)) {
            best = l;
            best_a = qka;
            best_b = qkb;
            best_i = static_cast<int>(i);
            best_j = static_cast<int>(j);
          }
        }
    }
  if (best_i < 0) throw NumericalError("diagnostics_residual_check: no nonzero eigenvalue found");

  // assemble the predicted eigenvector in the global slice
  const auto& fa = ea.at(best_a);
  const auto& fb = eb.at(best_b);
  SliceBasis global = build_slice_basis(g.dim, q, k);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(global.size());
  const auto& va = factors[0];
  const auto& vb = factors[1];
  for (int ia = 0; ia < fa.basis.size(); ++ia) {
    double ca = fa.vecs(ia, best_i);
    if (ca == 0.0) continue;
    const TermKey& ta = fa.basis.elems[static_cast<size_t>(ia)];
    std::uint32_t gmask_a = 0;
    Mono gmono_a = 0;
    for (int loc = 0; loc < static_cast<int>(va.size()); ++loc) {
      if (ta.mask & (1u << loc)) gmask_a |= 1u << va[static_cast<size_t>(loc)];
      gmono_a += Mono(mono_exp(ta.mono, loc)) << (8 * va[static_cast<size_t>(loc)]);
    }
    for (int ib = 0; ib < fb.basis.size(); ++ib) {
      double cb = fb.vecs(ib, best_j);
      if (cb == 0.0) continue;
      const TermKey& tb = fb.basis.elems[static_cast<size_t>(ib)];
      std::uint32_t gmask_b = 0;
      Mono gmono_b = 0;
      for (int loc = 0; loc < static_cast<int>(vb.size()); ++loc) {
        if (tb.mask & (1u << loc)) gmask_b |= 1u << vb[static_cast<size_t>(loc)];
        gmono_b += Mono(mono_exp(tb.mono, loc)) << (8 * vb[static_cast<size_t>(loc)]);
      }
      int sgn = merge_sign(gmask_a, gmask_b);
      v(global.index.at(TermKey{gmask_a | gmask_b, gmono_a + gmono_b})) += sgn * ca * cb;
    }
  }

  // residual against the directly assembled Laplacian
  SliceBasis up = (q + 1 <= g.dim) ? build_slice_basis(g.dim, q + 1, k)
                                   : SliceBasis{g.dim, q + 1, k, {}, {}};
  SliceBasis down = (q - 1 >= 0) ? build_slice_basis(g.dim, q - 1, k)
                                 : SliceBasis{g.dim, q - 1, k, {}, {}};
  Eigen::SparseMatrix<double> dup = (q + 1 <= g.dim)
                                        ? build_delta_matrix(g, global, up)
                                        : Eigen::SparseMatrix<double>(0, global.size());
  Eigen::SparseMatrix<double> ddown = (q - 1 >= 0)
                                          ? build_delta_matrix(g, down, global)
                                          : Eigen::SparseMatrix<double>(global.size(), 0);
  Eigen::VectorXd lap_v = dup.transpose() * (dup * v) + ddown * (ddown.transpose() * v);
  return (lap_v - best * v).norm() / v.norm();
}

}  // namespace poislin
