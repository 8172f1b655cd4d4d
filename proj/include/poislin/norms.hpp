#ifndef POISLIN_NORMS_HPP
#define POISLIN_NORMS_HPP

// Graded C^n tube norms, smoothing operators (plain and first-jet
// preserving) and the empirical harness for the interpolation and tame
// inequalities.

#include <cmath>
#include <string>
#include <vector>

#include "poislin/jet.hpp"
#include "poislin/rng.hpp"

namespace poislin {

struct NormConfig {
  // Low-discrepancy sample count inside the ball; each interior point also
  // contributes its radial boundary projection, and the axis points +-r e_i
  // and the origin are always included.
  int lowdisc_count = 4096;
  // When positive, a dense grid with this many points per axis is used
  // instead (oracle mode).
  int grid_per_axis = 0;
};

// Sup over components, partial derivatives |alpha| <= n and sample points in
// the closed ball of radius r of the exactly evaluated polynomial
// derivative. Monotone in n and r.
double tube_norm(const PolyMv& w, int n, double r, const NormConfig& cfg = {});

// C^n distance of a formal diffeomorphism from the identity over the ball of
// radius r (component-wise tube norms of phi - id).
double diffeo_distance(const Diffeo& phi, int n, double r, const NormConfig& cfg = {});

struct SmoothingConfig {
  enum class Mode { degree_truncation, none };
  Mode mode = Mode::degree_truncation;
  bool first_jet_preserving = false;
  // cutoff degree for parameter t is floor(t) + threshold_offset, raised to
  // 2 in the first-jet-preserving variant
  int threshold_offset = 0;

  int cutoff_for(double t) const {
    int c = static_cast<int>(std::floor(t)) + threshold_offset;
    if (first_jet_preserving && c < 2) c = 2;
    return c;
  }
};

// Degree-truncation smoothing: drops all monomials of total degree above the
// cutoff. Linear, idempotent at fixed t, commutes with rescale_pullback.
template <class S>
PolyMultivector<S> smoothing_apply(const PolyMultivector<S>& w, double t,
                                   const SmoothingConfig& cfg) {
  if (!(t > 1)) throw PreconditionError("smoothing_apply: t must be > 1");
  if (cfg.mode == SmoothingConfig::Mode::none) return w;
  int cutoff = cfg.cutoff_for(t);
  PolyMultivector<S> out(w.dim(), w.mv_degree(), w.trunc_order());
  for (const auto& [key, c] : w.terms())
    if (mono_degree(key.mono) <= cutoff) out.add_term(key.mask, key.mono, c);
  return out;
}

// First-jet-preserving variant: the input must vanish to second order, and
// so does the output.
template <class S>
PolyMultivector<S> smoothing_apply_first_order(const PolyMultivector<S>& w, double t,
                                               const SmoothingConfig& cfg) {
  if (w.vanishing_order() < 2)
    throw PreconditionError("smoothing_apply_first_order: input has a nonzero first jet");
  SmoothingConfig c1 = cfg;
  c1.first_jet_preserving = true;
  PolyMultivector<S> out = smoothing_apply(w, t, c1);
  if (out.vanishing_order() < 2)
    throw NumericalError("smoothing_apply_first_order: output acquired low-degree terms");
  return out;
}

struct InterpolationReport {
  double lhs = 0;
  double rhs_without_constant = 0;
  double ratio = 0;
};

// Both sides of |W|_{l,r} <= C r^{k-l} |W|_{k,r}^{(n-l)/(n-k)}
// |W|_{n,r}^{(l-k)/(n-k)} with the constant stripped; the ratio is the
// empirically fitted constant.
InterpolationReport interpolation_report(const PolyMv& w, int k, int l, int n, double r,
                                         const NormConfig& cfg = {});

enum class TameKind { bracket, flow, pullback1, pullback2, pullback3 };

std::string tame_kind_name(TameKind kind);

struct TameSampleSpec {
  int count = 200;
  std::uint64_t seed = 1;
  int dim = 3;
  int trunc = 8;
  int min_degree = 0;   // lowest coefficient degree of the sampled fields
  int max_degree = 8;
  int n = 2;            // norm order at which the inequality is measured
  double r = 1.0;
  double s = 0.5;       // target radius for flow/pullback estimates
  NormConfig norms{512, 0};
};

struct TameRow {
  std::string kind;
  int sample_id = 0;
  int n = 0;
  double r = 0;
  double lhs = 0;
  double rhs = 0;
  double ratio = 0;
  bool skipped = false;
};

// Measures lhs and rhs of the named estimate with the constant set to 1 on a
// deterministic random sample; precondition-violating samples are skipped
// and counted (flag on the row).
std::vector<TameRow> tame_ratio_report(TameKind kind, const TameSampleSpec& spec);

// Deterministic random multivector with coefficient degrees in
// [min_degree, max_degree], coefficients uniform in [-scale, scale].
PolyMv random_multivector(DetRng& rng, int dim, int q, int trunc, int min_degree, int max_degree,
                          double density, double scale);

}  // namespace poislin

#endif
