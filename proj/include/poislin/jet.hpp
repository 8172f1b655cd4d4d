#ifndef POISLIN_JET_HPP
#define POISLIN_JET_HPP

// Exact arithmetic of truncated polynomial multivector fields on R^d:
// Schouten bracket, Lie-series flows, pullbacks, rescalings and formal
// diffeomorphism composition. Everything lives in the jet ring at the
// origin, truncated at a global order, so all series terminate.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "poislin/errors.hpp"
#include "poislin/scalars.hpp"

namespace poislin {

// Monomials are packed 8 bits per exponent, so the ambient dimension is
// capped at 8 coordinates and exponents at 255.
inline constexpr int kMaxDim = 8;

using Mono = std::uint64_t;

inline int mono_exp(Mono m, int i) { return static_cast<int>((m >> (8 * i)) & 0xffu); }

inline Mono mono_unit(int i) { return Mono(1) << (8 * i); }

inline int mono_degree(Mono m) {
  int deg = 0;
  while (m) {
    deg += static_cast<int>(m & 0xffu);
    m >>= 8;
  }
  return deg;
}

inline Mono mono_mul(Mono a, Mono b) { return a + b; }

// Key of one stored term: an index-set bitmask (strictly increasing index
// sets are canonical as bitmasks) plus a packed monomial.
struct TermKey {
  std::uint32_t mask = 0;
  Mono mono = 0;

  friend bool operator<(const TermKey& a, const TermKey& b) {
    if (a.mask != b.mask) return a.mask < b.mask;
    return a.mono < b.mono;
  }
  friend bool operator==(const TermKey& a, const TermKey& b) {
    return a.mask == b.mask && a.mono == b.mono;
  }
};

// Parity of merging two disjoint ascending index sets: counts the pairs
// (a in A, b in B) with a > b.
inline int merge_sign(std::uint32_t a, std::uint32_t b) {
  int inversions = 0;
  while (b) {
    std::uint32_t low = b & (~b + 1);  // lowest set bit of b
    int pos = std::countr_zero(low);
    inversions += std::popcount(a >> (pos + 1));
    b ^= low;
  }
  return (inversions & 1) ? -1 : 1;
}

// Sign of the left derivative d/d theta_u applied to theta_I (u in I).
inline int theta_derivative_sign(std::uint32_t mask, int u) {
  int below = std::popcount(mask & ((std::uint32_t(1) << u) - 1));
  return (below & 1) ? -1 : 1;
}

template <class S>
class PolyMultivector {
 public:
  using Scalar = S;
  using Terms = std::map<TermKey, S>;

  PolyMultivector() = default;
  PolyMultivector(int dim, int mv_degree, int trunc_order)
      : dim_(dim), q_(mv_degree), trunc_(trunc_order) {
    if (dim < 1 || dim > kMaxDim) throw StructuralError("PolyMultivector: dim out of range");
    if (mv_degree < 0 || mv_degree > 3)
      throw StructuralError("PolyMultivector: mv_degree must be in 0..3");
    if (trunc_order < 0 || trunc_order > 64)
      throw StructuralError("PolyMultivector: trunc_order out of range");
  }

  int dim() const { return dim_; }
  int mv_degree() const { return q_; }
  int trunc_order() const { return trunc_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  // Adds c * x^mono d_mask, dropping truncated and zero contributions.
  void add_term(std::uint32_t mask, Mono mono, const S& c) {
    if (std::popcount(mask) != q_)
      throw StructuralError("PolyMultivector: index set size != mv_degree");
    if (mask >> dim_) throw StructuralError("PolyMultivector: index out of range");
    if (mono_degree(mono) > trunc_) return;
    auto it = terms_.find(TermKey{mask, mono});
    if (it == terms_.end()) {
      if (!ScalarTraits<S>::is_zero(c)) terms_.emplace(TermKey{mask, mono}, c);
    } else {
      it->second += c;
      if (ScalarTraits<S>::is_zero(it->second)) terms_.erase(it);
    }
  }

  S coeff(std::uint32_t mask, Mono mono) const {
    auto it = terms_.find(TermKey{mask, mono});
    return it == terms_.end() ? S(0) : it->second;
  }

  // Lowest total degree of a stored monomial; trunc_order() + 1 when zero.
  int vanishing_order() const {
    int best = trunc_ + 1;
    for (const auto& [key, c] : terms_) best = std::min(best, mono_degree(key.mono));
    return best;
  }

  // Vanishing order counting only coefficients above the given magnitude;
  // the float pipeline reports filtration degrees relative to its zero
  // tolerance.
  int vanishing_order_above(double tol) const {
    int best = trunc_ + 1;
    for (const auto& [key, c] : terms_)
      if (std::abs(ScalarTraits<S>::to_double(c)) > tol)
        best = std::min(best, mono_degree(key.mono));
    return best;
  }

  int max_degree() const {
    int best = -1;
    for (const auto& [key, c] : terms_) best = std::max(best, mono_degree(key.mono));
    return best;
  }

  double max_abs_coeff() const {
    double best = 0;
    for (const auto& [key, c] : terms_)
      best = std::max(best, std::abs(ScalarTraits<S>::to_double(c)));
    return best;
  }

  PolyMultivector& operator+=(const PolyMultivector& o) {
    require_same_shape(o);
    for (const auto& [key, c] : o.terms_) add_term(key.mask, key.mono, c);
    return *this;
  }
  PolyMultivector& operator-=(const PolyMultivector& o) {
    require_same_shape(o);
    for (const auto& [key, c] : o.terms_) add_term(key.mask, key.mono, S(-c));
    return *this;
  }
  PolyMultivector& operator*=(const S& a) {
    Terms out;
    for (const auto& [key, c] : terms_) {
      S v = c * a;
      if (!ScalarTraits<S>::is_zero(v)) out.emplace(key, v);
    }
    terms_ = std::move(out);
    return *this;
  }

  friend PolyMultivector operator+(PolyMultivector a, const PolyMultivector& b) { return a += b; }
  friend PolyMultivector operator-(PolyMultivector a, const PolyMultivector& b) { return a -= b; }
  friend PolyMultivector operator*(PolyMultivector a, const S& s) { return a *= s; }

  void require_same_shape(const PolyMultivector& o) const {
    if (dim_ != o.dim_ || trunc_ != o.trunc_)
      throw StructuralError("PolyMultivector: dimension or truncation-order mismatch");
    if (q_ != o.q_) throw StructuralError("PolyMultivector: multivector degree mismatch");
  }

  void require_same_ring(const PolyMultivector& o) const {
    if (dim_ != o.dim_ || trunc_ != o.trunc_)
      throw StructuralError("PolyMultivector: dimension or truncation-order mismatch");
  }

 private:
  int dim_ = 0;
  int q_ = 0;
  int trunc_ = 0;
  Terms terms_;
};

template <class S>
bool approx_equal(const PolyMultivector<S>& a, const PolyMultivector<S>& b, double tol) {
  PolyMultivector<S> diff = a - b;
  return diff.max_abs_coeff() <= tol;
}

// --- scalar-field (q = 0) helpers ------------------------------------------

template <class S>
PolyMultivector<S> poly_zero(int dim, int trunc) {
  return PolyMultivector<S>(dim, 0, trunc);
}

template <class S>
PolyMultivector<S> poly_coordinate(int dim, int trunc, int i) {
  PolyMultivector<S> p(dim, 0, trunc);
  p.add_term(0, mono_unit(i), S(1));
  return p;
}

template <class S>
void graded_mul_accumulate(PolyMultivector<S>& acc, const PolyMultivector<S>& a,
                           const PolyMultivector<S>& b, const S& factor);

template <class S>
PolyMultivector<S> poly_mul(const PolyMultivector<S>& f, const PolyMultivector<S>& g) {
  f.require_same_ring(g);
  if (f.mv_degree() != 0 || g.mv_degree() != 0)
    throw StructuralError("poly_mul expects scalar fields");
  PolyMultivector<S> out(f.dim(), 0, f.trunc_order());
  graded_mul_accumulate(out, f, g, S(1));
  return out;
}

// d/dx_i of any multivector (acts on the coefficient functions).
template <class S>
PolyMultivector<S> partial_derivative(const PolyMultivector<S>& w, int i) {
  PolyMultivector<S> out(w.dim(), w.mv_degree(), w.trunc_order());
  for (const auto& [key, c] : w.terms()) {
    int e = mono_exp(key.mono, i);
    if (e == 0) continue;
    out.add_term(key.mask, key.mono - mono_unit(i), c * ScalarTraits<S>::from_int(e));
  }
  return out;
}

namespace detail {

// Rank table for all monomials of total degree <= trunc: product pairs are
// accumulated into dense per-mask scratch arrays instead of per-pair tree
// inserts, which dominates on dense high-dimensional operands.
class MonoRank {
 public:
  MonoRank(int dim, int trunc) {
    enumerate(dim, trunc, 0, 0);
    std::sort(monos_.begin(), monos_.end());
    rank_.reserve(monos_.size() * 2);
    for (size_t i = 0; i < monos_.size(); ++i) rank_.emplace(monos_[i], static_cast<int>(i));
  }
  int size() const { return static_cast<int>(monos_.size()); }
  Mono mono_at(int i) const { return monos_[static_cast<size_t>(i)]; }
  int rank_of(Mono m) const { return rank_.at(m); }

 private:
  void enumerate(int dim, int degree_left, int var, Mono cur) {
    if (var == dim) {
      monos_.push_back(cur);
      return;
    }
    for (int e = 0; e <= degree_left; ++e)
      enumerate(dim, degree_left - e, var + 1, cur + (Mono(e) << (8 * var)));
  }
  std::vector<Mono> monos_;
  std::unordered_map<Mono, int> rank_;
};

}  // namespace detail

// Raw graded product of the exterior algebra with polynomial coefficients.
// Returns a multivector of degree qa + qb (0 if the index sets collide).
template <class S>
void graded_mul_accumulate(PolyMultivector<S>& acc, const PolyMultivector<S>& a,
                           const PolyMultivector<S>& b, const S& factor) {
  int trunc = acc.trunc_order();
  size_t pairs = a.terms().size() * b.terms().size();
  if (pairs < 4096) {
    for (const auto& [ka, ca] : a.terms()) {
      int da = mono_degree(ka.mono);
      for (const auto& [kb, cb] : b.terms()) {
        if (ka.mask & kb.mask) continue;
        if (da + mono_degree(kb.mono) > trunc) continue;
        int sgn = merge_sign(ka.mask, kb.mask);
        acc.add_term(ka.mask | kb.mask, mono_mul(ka.mono, kb.mono),
                     factor * ca * cb * ScalarTraits<S>::from_int(sgn));
      }
    }
    return;
  }
  detail::MonoRank table(acc.dim(), trunc);
  std::map<std::uint32_t, std::vector<S>> scratch;
  for (const auto& [ka, ca] : a.terms()) {
    int da = mono_degree(ka.mono);
    S fa = factor * ca;
    for (const auto& [kb, cb] : b.terms()) {
      if (ka.mask & kb.mask) continue;
      if (da + mono_degree(kb.mono) > trunc) continue;
      int sgn = merge_sign(ka.mask, kb.mask);
      std::uint32_t mask = ka.mask | kb.mask;
      auto it = scratch.find(mask);
      if (it == scratch.end())
        it = scratch.emplace(mask, std::vector<S>(static_cast<size_t>(table.size()), S(0))).first;
      it->second[static_cast<size_t>(table.rank_of(mono_mul(ka.mono, kb.mono)))] +=
          sgn > 0 ? S(fa * cb) : S(-(fa * cb));
    }
  }
  for (const auto& [mask, vals] : scratch)
    for (int i = 0; i < table.size(); ++i)
      if (!ScalarTraits<S>::is_zero(vals[static_cast<size_t>(i)]))
        acc.add_term(mask, table.mono_at(i), vals[static_cast<size_t>(i)]);
}

// --- Schouten bracket -------------------------------------------------------

// Left derivative with respect to the odd leg u; multivector degree drops by
// one.
template <class S>
PolyMultivector<S> theta_derivative(const PolyMultivector<S>& w, int u) {
  PolyMultivector<S> out(w.dim(), w.mv_degree() - 1, w.trunc_order());
  std::uint32_t bit = std::uint32_t(1) << u;
  for (const auto& [key, c] : w.terms()) {
    if (!(key.mask & bit)) continue;
    int sgn = theta_derivative_sign(key.mask, u);
    out.add_term(key.mask ^ bit, key.mono, c * ScalarTraits<S>::from_int(sgn));
  }
  return out;
}

// Schouten-Nijenhuis bracket in coordinates, truncated at the ambient order.
// In odd-variable calculus, with D_u the left derivative in the odd leg u,
//   [W,V] = (-1)^{a+1} sum_u D_u(W) d_u(V) - (-1)^{a(b-1)} sum_u D_u(V) d_u(W),
// the unique graded biderivation with [X,f] = X(f) and [X,Y] the Lie
// bracket of vector fields.
template <class S>
PolyMultivector<S> schouten_bracket(const PolyMultivector<S>& w, const PolyMultivector<S>& v) {
  w.require_same_ring(v);
  int a = w.mv_degree(), b = v.mv_degree();
  int q = a + b - 1;
  if (q < 0) throw StructuralError("schouten_bracket: bracket of two scalar fields is undefined");
  if (q > 3)
    throw StructuralError("schouten_bracket: resulting multivector degree exceeds 3 (unsupported)");
  PolyMultivector<S> out(w.dim(), q, w.trunc_order());
  int sign_wv = ((a + 1) & 1) ? -1 : 1;          // (-1)^{a+1}
  int sign_vw = ((a * (b - 1)) & 1) ? 1 : -1;    // -(-1)^{a(b-1)}
  for (int u = 0; u < w.dim(); ++u) {
    if (a > 0) {
      PolyMultivector<S> dw = theta_derivative(w, u);
      PolyMultivector<S> dv = partial_derivative(v, u);
      graded_mul_accumulate(out, dw, dv, ScalarTraits<S>::from_int(sign_wv));
    }
    if (b > 0) {
      PolyMultivector<S> dv = theta_derivative(v, u);
      PolyMultivector<S> dw = partial_derivative(w, u);
      graded_mul_accumulate(out, dv, dw, ScalarTraits<S>::from_int(sign_vw));
    }
  }
  return out;
}

// Max absolute coefficient of [pi, pi]; zero iff pi is Poisson up to the
// truncation order.
template <class S>
double jacobi_defect(const PolyMultivector<S>& pi) {
  if (pi.mv_degree() != 2) throw PreconditionError("jacobi_defect expects a bivector");
  return schouten_bracket(pi, pi).max_abs_coeff();
}

// --- formal diffeomorphisms -------------------------------------------------

enum class DiffeoClass { identity_to_first_order, linear_part_invertible };

template <class S>
struct FormalDiffeo {
  int dim = 0;
  int trunc = 0;
  std::vector<PolyMultivector<S>> components;  // q = 0 each
  DiffeoClass cls = DiffeoClass::linear_part_invertible;

  // Linear part as a dense row-major dim x dim array.
  std::vector<S> linear_part() const {
    std::vector<S> a(static_cast<size_t>(dim) * dim, S(0));
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) a[i * dim + j] = components[i].coeff(0, mono_unit(j));
    return a;
  }
};

namespace detail {

// Gauss elimination inverse of a dim x dim scalar matrix; throws on (near)
// singular input.
template <class S>
std::vector<S> dense_inverse(std::vector<S> a, int n) {
  std::vector<S> inv(static_cast<size_t>(n) * n, S(0));
  for (int i = 0; i < n; ++i) inv[i * n + i] = S(1);
  for (int col = 0; col < n; ++col) {
    int piv = -1;
    double best = 0;
    for (int r = col; r < n; ++r) {
      double m = std::abs(ScalarTraits<S>::to_double(a[r * n + col]));
      if (m > best) {
        best = m;
        piv = r;
      }
    }
    if (piv < 0 || best == 0.0)
      throw PreconditionError("formal diffeomorphism has a non-invertible linear part");
    for (int c = 0; c < n; ++c) {
      std::swap(a[piv * n + c], a[col * n + c]);
      std::swap(inv[piv * n + c], inv[col * n + c]);
    }
    S d = a[col * n + col];
    for (int c = 0; c < n; ++c) {
      a[col * n + c] /= d;
      inv[col * n + c] /= d;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      S f = a[r * n + col];
      if (ScalarTraits<S>::is_zero(f)) continue;
      for (int c = 0; c < n; ++c) {
        a[r * n + c] -= f * a[col * n + c];
        inv[r * n + c] -= f * inv[col * n + c];
      }
    }
  }
  return inv;
}

// Substitution cache: powers x^mono composed with the components of phi.
template <class S>
class SubstCache {
 public:
  explicit SubstCache(const std::vector<PolyMultivector<S>>& comps)
      : comps_(comps), dim_(static_cast<int>(comps.size())) {
    const auto& c0 = comps_.front();
    PolyMultivector<S> one(c0.dim(), 0, c0.trunc_order());
    one.add_term(0, 0, S(1));
    cache_.emplace(Mono(0), std::move(one));
  }

  const PolyMultivector<S>& power(Mono m) {
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    int i = 0;
    while (mono_exp(m, i) == 0) ++i;
    const PolyMultivector<S>& prev = power(m - mono_unit(i));
    PolyMultivector<S> val = poly_mul(prev, comps_[static_cast<size_t>(i)]);
    return cache_.emplace(m, std::move(val)).first->second;
  }

 private:
  const std::vector<PolyMultivector<S>>& comps_;
  int dim_;
  std::unordered_map<Mono, PolyMultivector<S>> cache_;
};

}  // namespace detail

template <class S>
FormalDiffeo<S> identity_diffeo(int dim, int trunc) {
  FormalDiffeo<S> phi;
  phi.dim = dim;
  phi.trunc = trunc;
  phi.cls = DiffeoClass::identity_to_first_order;
  for (int i = 0; i < dim; ++i) phi.components.push_back(poly_coordinate<S>(dim, trunc, i));
  return phi;
}

// Multiplication by t (t > 0), the rescaling map mu_t.
template <class S>
FormalDiffeo<S> scaling_diffeo(int dim, int trunc, const S& t) {
  if (!(ScalarTraits<S>::to_double(t) > 0)) throw PreconditionError("scaling_diffeo: t must be > 0");
  FormalDiffeo<S> phi = identity_diffeo<S>(dim, trunc);
  phi.cls = DiffeoClass::linear_part_invertible;
  for (auto& c : phi.components) c *= t;
  return phi;
}

template <class S>
void validate(const FormalDiffeo<S>& phi) {
  if (static_cast<int>(phi.components.size()) != phi.dim)
    throw StructuralError("FormalDiffeo: component count != dim");
  for (const auto& c : phi.components) {
    if (c.mv_degree() != 0) throw StructuralError("FormalDiffeo: components must be scalar fields");
    if (c.dim() != phi.dim || c.trunc_order() != phi.trunc)
      throw StructuralError("FormalDiffeo: component ring mismatch");
    if (!ScalarTraits<S>::is_zero(c.coeff(0, 0)))
      throw StructuralError("FormalDiffeo: fixed point not preserved (nonzero constant term)");
  }
  auto lin = phi.linear_part();
  if (phi.cls == DiffeoClass::identity_to_first_order) {
    for (int i = 0; i < phi.dim; ++i)
      for (int j = 0; j < phi.dim; ++j) {
        S expect = (i == j) ? S(1) : S(0);
        if (!ScalarTraits<S>::is_zero(S(lin[i * phi.dim + j] - expect)))
          throw StructuralError("FormalDiffeo: linear part is not the identity");
      }
  } else {
    detail::dense_inverse<S>(lin, phi.dim);  // throws when singular
  }
}

// Time-1 flow of X as the exponential of the derivation X in the jet ring.
// X must vanish to second order, so each application of X raises the minimal
// degree and the series terminates.
template <class S>
FormalDiffeo<S> lie_series_flow(const PolyMultivector<S>& x, int order_guard = -1) {
  if (x.mv_degree() != 1) throw PreconditionError("lie_series_flow expects a vector field");
  if (x.vanishing_order() < 2)
    throw PreconditionError(
        "lie_series_flow: vector field must vanish to second order at the origin");
  int dim = x.dim(), trunc = x.trunc_order();
  if (order_guard < 0) order_guard = trunc + 2;
  FormalDiffeo<S> phi;
  phi.dim = dim;
  phi.trunc = trunc;
  phi.cls = DiffeoClass::identity_to_first_order;

  // X applied to a scalar field: sum_u X^u d_u f.
  auto apply_x = [&](const PolyMultivector<S>& f) {
    PolyMultivector<S> out(dim, 0, trunc);
    for (int u = 0; u < dim; ++u) {
      PolyMultivector<S> xu = theta_derivative(x, u);
      if (xu.is_zero()) continue;
      out += poly_mul(xu, partial_derivative(f, u));
    }
    return out;
  };

  for (int i = 0; i < dim; ++i) {
    PolyMultivector<S> sum = poly_coordinate<S>(dim, trunc, i);
    PolyMultivector<S> term = sum;
    S factorial(1);
    for (int m = 1; m <= order_guard && !term.is_zero(); ++m) {
      term = apply_x(term);
      factorial *= ScalarTraits<S>::from_int(m);
      PolyMultivector<S> scaled = term;
      // divide by m!
      PolyMultivector<S> contrib(dim, 0, trunc);
      for (const auto& [key, c] : scaled.terms()) contrib.add_term(key.mask, key.mono, S(c / factorial));
      sum += contrib;
      if (m == order_guard && !term.is_zero())
        throw NumericalError("lie_series_flow: series did not terminate within the order guard");
    }
    phi.components.push_back(std::move(sum));
  }
  return phi;
}

// Formal composition (phi o chi)(z) = phi(chi(z)), truncated.
template <class S>
FormalDiffeo<S> compose(const FormalDiffeo<S>& phi, const FormalDiffeo<S>& chi) {
  if (phi.dim != chi.dim || phi.trunc != chi.trunc)
    throw StructuralError("compose: dimension or truncation-order mismatch");
  detail::SubstCache<S> cache(chi.components);
  FormalDiffeo<S> out;
  out.dim = phi.dim;
  out.trunc = phi.trunc;
  out.cls = (phi.cls == DiffeoClass::identity_to_first_order &&
             chi.cls == DiffeoClass::identity_to_first_order)
                ? DiffeoClass::identity_to_first_order
                : DiffeoClass::linear_part_invertible;
  for (int i = 0; i < phi.dim; ++i) {
    PolyMultivector<S> comp(phi.dim, 0, phi.trunc);
    for (const auto& [key, c] : phi.components[static_cast<size_t>(i)].terms()) {
      const PolyMultivector<S>& pw = cache.power(key.mono);
      for (const auto& [k2, c2] : pw.terms()) comp.add_term(0, k2.mono, c * c2);
    }
    out.components.push_back(std::move(comp));
  }
  return out;
}

// Compositional inverse, solved degree by degree; the linear part must be
// invertible.
template <class S>
FormalDiffeo<S> inverse(const FormalDiffeo<S>& phi) {
  validate(phi);
  int dim = phi.dim, trunc = phi.trunc;
  auto lin = phi.linear_part();
  auto lin_inv = detail::dense_inverse<S>(lin, dim);

  FormalDiffeo<S> inv_lin;
  inv_lin.dim = dim;
  inv_lin.trunc = trunc;
  inv_lin.cls = DiffeoClass::linear_part_invertible;
  for (int i = 0; i < dim; ++i) {
    PolyMultivector<S> c(dim, 0, trunc);
    for (int j = 0; j < dim; ++j) c.add_term(0, mono_unit(j), lin_inv[i * dim + j]);
    inv_lin.components.push_back(std::move(c));
  }

  FormalDiffeo<S> g = inv_lin;
  for (int m = 2; m <= trunc; ++m) {
    FormalDiffeo<S> err = compose(g, phi);
    for (int i = 0; i < dim; ++i) {
      // homogeneous degree-m part of (g o phi - id)_i, composed with the
      // inverse linear map
      PolyMultivector<S> hm(dim, 0, trunc);
      for (const auto& [key, c] : err.components[static_cast<size_t>(i)].terms()) {
        Mono mono = key.mono;
        S v = c;
        if (mono_degree(mono) == 1 && mono == mono_unit(i)) v -= S(1);
        if (mono_degree(mono) == m && !ScalarTraits<S>::is_zero(v)) hm.add_term(0, mono, v);
      }
      if (hm.is_zero()) continue;
      detail::SubstCache<S> cache(inv_lin.components);
      PolyMultivector<S> corr(dim, 0, trunc);
      for (const auto& [key, c] : hm.terms()) {
        const PolyMultivector<S>& pw = cache.power(key.mono);
        for (const auto& [k2, c2] : pw.terms()) corr.add_term(0, k2.mono, c * c2);
      }
      g.components[static_cast<size_t>(i)] -= corr;
    }
  }
  g.cls = (phi.cls == DiffeoClass::identity_to_first_order)
              ? DiffeoClass::identity_to_first_order
              : DiffeoClass::linear_part_invertible;
  return g;
}

// Pullback phi^* W: compose the coefficients with phi and transform the
// multivector legs by the inverse Jacobian matrix, all in jet arithmetic.
//
// The result is the truncation of the exact pullback series. A truncated
// map determines the Jacobian one order lower, so for multivectors whose
// coefficients have a constant term the top truncation degree depends on
// the representative; on fields vanishing at the origin (every analysis
// object here) pullback is exact through the full truncation order, and
// functoriality and the bracket-morphism identity hold coefficientwise.
template <class S>
PolyMultivector<S> pullback(const FormalDiffeo<S>& phi, const PolyMultivector<S>& w) {
  if (phi.dim != w.dim() || phi.trunc != w.trunc_order())
    throw StructuralError("pullback: dimension or truncation-order mismatch");
  validate(phi);
  int dim = phi.dim, trunc = phi.trunc, q = w.mv_degree();

  detail::SubstCache<S> cache(phi.components);

  // Jacobian A and its jet-ring inverse B = (I + A0^{-1} A_+)^{-1} A0^{-1}.
  std::vector<PolyMultivector<S>> jac;
  jac.reserve(static_cast<size_t>(dim) * dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      jac.push_back(partial_derivative(phi.components[static_cast<size_t>(i)], j));

  auto lin = phi.linear_part();
  auto lin_inv = detail::dense_inverse<S>(lin, dim);

  auto mat_get = [&](const std::vector<PolyMultivector<S>>& m, int i, int j)
      -> const PolyMultivector<S>& { return m[static_cast<size_t>(i) * dim + j]; };

  std::vector<PolyMultivector<S>> b;
  if (q > 0) {
    // N = A0^{-1} (A - A0); entries vanish at the origin.
    std::vector<PolyMultivector<S>> n;
    n.reserve(static_cast<size_t>(dim) * dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        PolyMultivector<S> e(dim, 0, trunc);
        for (int l = 0; l < dim; ++l) {
          PolyMultivector<S> a_lj = mat_get(jac, l, j);
          // subtract the constant part
          S c0 = a_lj.coeff(0, 0);
          if (!ScalarTraits<S>::is_zero(c0)) a_lj.add_term(0, 0, S(-c0));
          if (a_lj.is_zero()) continue;
          e += a_lj * lin_inv[i * dim + l];
        }
        n.push_back(std::move(e));
      }
    // inv_series = sum_m (-N)^m, truncated (entries of N^m vanish to order m)
    std::vector<PolyMultivector<S>> series;
    std::vector<PolyMultivector<S>> power = n;
    series.reserve(static_cast<size_t>(dim) * dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        PolyMultivector<S> e(dim, 0, trunc);
        if (i == j) e.add_term(0, 0, S(1));
        series.push_back(std::move(e));
      }
    int sign = -1;
    for (int m = 1; m <= trunc; ++m) {
      bool all_zero = true;
      for (int i = 0; i < dim && all_zero; ++i)
        for (int j = 0; j < dim && all_zero; ++j)
          if (!mat_get(power, i, j).is_zero()) all_zero = false;
      if (all_zero) break;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          series[static_cast<size_t>(i) * dim + j] +=
              mat_get(power, i, j) * ScalarTraits<S>::from_int(sign);
      if (m < trunc) {
        std::vector<PolyMultivector<S>> next;
        next.reserve(static_cast<size_t>(dim) * dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) {
            PolyMultivector<S> e(dim, 0, trunc);
            for (int l = 0; l < dim; ++l) {
              if (mat_get(power, i, l).is_zero() || mat_get(n, l, j).is_zero()) continue;
              e += poly_mul(mat_get(power, i, l), mat_get(n, l, j));
            }
            next.push_back(std::move(e));
          }
        power = std::move(next);
      }
      sign = -sign;
    }
    // B = series * A0^{-1}
    b.reserve(static_cast<size_t>(dim) * dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        PolyMultivector<S> e(dim, 0, trunc);
        for (int l = 0; l < dim; ++l) {
          if (mat_get(series, i, l).is_zero()) continue;
          if (ScalarTraits<S>::is_zero(lin_inv[l * dim + j])) continue;
          e += mat_get(series, i, l) * lin_inv[l * dim + j];
        }
        b.push_back(std::move(e));
      }
  }

  // group the terms by index set: compose all coefficients of one mask into
  // a single polynomial, then transform that mask's legs once
  std::map<std::uint32_t, PolyMultivector<S>> by_mask;
  for (const auto& [key, c] : w.terms()) {
    auto it = by_mask.find(key.mask);
    if (it == by_mask.end())
      it = by_mask.emplace(key.mask, PolyMultivector<S>(dim, 0, trunc)).first;
    const PolyMultivector<S>& f = cache.power(key.mono);
    for (const auto& [k2, c2] : f.terms()) it->second.add_term(0, k2.mono, c * c2);
  }

  PolyMultivector<S> out(dim, q, trunc);
  for (auto& [mask, acc0] : by_mask) {
    if (acc0.is_zero()) continue;
    PolyMultivector<S> acc = std::move(acc0);
    std::uint32_t rem = mask;
    while (rem) {
      int j = std::countr_zero(rem);
      rem &= rem - 1;
      PolyMultivector<S> leg(dim, 1, trunc);
      for (int l = 0; l < dim; ++l) {
        const PolyMultivector<S>& blj = b[static_cast<size_t>(l) * dim + j];
        for (const auto& [k3, c3] : blj.terms())
          leg.add_term(std::uint32_t(1) << l, k3.mono, c3);
      }
      PolyMultivector<S> next(dim, acc.mv_degree() + 1, trunc);
      graded_mul_accumulate(next, acc, leg, S(1));
      acc = std::move(next);
    }
    out += acc;
  }
  return out;
}

// mu_t^*(W): each coefficient of a q-multivector with monomial degree m is
// multiplied by t^{m-q}.
template <class S>
PolyMultivector<S> rescale_pullback(const S& t, const PolyMultivector<S>& w) {
  if (!(ScalarTraits<S>::to_double(t) > 0))
    throw PreconditionError("rescale_pullback: t must be > 0");
  PolyMultivector<S> out(w.dim(), w.mv_degree(), w.trunc_order());
  for (const auto& [key, c] : w.terms()) {
    int e = mono_degree(key.mono) - w.mv_degree();
    S f(1);
    for (int i = 0; i < std::abs(e); ++i) f *= t;
    out.add_term(key.mask, key.mono, e >= 0 ? S(c * f) : S(c / f));
  }
  return out;
}

// The rescaling family t mu_t^*(pi); its t -> 0 limit is the first jet of pi
// and t = 1 recovers pi.
template <class S>
PolyMultivector<S> rescaled_family(const PolyMultivector<S>& pi, const S& t) {
  if (pi.mv_degree() != 2) throw PreconditionError("rescaled_family expects a bivector");
  if (pi.vanishing_order() < 1)
    throw PreconditionError("rescaled_family: bivector must vanish at the origin");
  PolyMultivector<S> out = rescale_pullback(t, pi);
  return out * t;
}

// Homogeneous degree-k part of the coefficients.
template <class S>
PolyMultivector<S> homogeneous_part(const PolyMultivector<S>& w, int k) {
  PolyMultivector<S> out(w.dim(), w.mv_degree(), w.trunc_order());
  for (const auto& [key, c] : w.terms())
    if (mono_degree(key.mono) == k) out.add_term(key.mask, key.mono, c);
  return out;
}

// Value of the coefficient function of the given index set at a point.
template <class S>
double eval_coefficient(const PolyMultivector<S>& w, std::uint32_t mask,
                        const std::vector<double>& point) {
  double acc = 0;
  for (const auto& [key, c] : w.terms()) {
    if (key.mask != mask) continue;
    double v = ScalarTraits<S>::to_double(c);
    for (int i = 0; i < w.dim(); ++i) {
      int e = mono_exp(key.mono, i);
      for (int r = 0; r < e; ++r) v *= point[static_cast<size_t>(i)];
    }
    acc += v;
  }
  return acc;
}

template <class S>
std::string to_string(const PolyMultivector<S>& w) {
  std::ostringstream os;
  os << "q=" << w.mv_degree() << " {";
  bool first = true;
  for (const auto& [key, c] : w.terms()) {
    if (!first) os << ", ";
    first = false;
    os << ScalarTraits<S>::to_double(c) << " x^(";
    for (int i = 0; i < w.dim(); ++i) os << (i ? "," : "") << mono_exp(key.mono, i);
    os << ") d[";
    bool f2 = true;
    for (int i = 0; i < w.dim(); ++i)
      if (key.mask & (1u << i)) {
        os << (f2 ? "" : ",") << (i + 1);
        f2 = false;
      }
    os << "]";
  }
  os << "}";
  return os.str();
}

using PolyMv = PolyMultivector<double>;
using Diffeo = FormalDiffeo<double>;

}  // namespace poislin

#endif
