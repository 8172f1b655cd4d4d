#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "poislin/liealg.hpp"
#include "poislin/norms.hpp"

using namespace poislin;

namespace {
const NormConfig kFast{512, 0};

// coefficient-norm bound on |d^alpha P| over the unit ball: sum of
// |c_beta| beta!/(beta-alpha)!; used as an a-priori cap for measured ratios
double coefficient_derivative_bound(const PolyMv& w, int n) {
  double total = 0;
  for (const auto& [key, c] : w.terms()) {
    // crude: the worst falling factorial over all |alpha| <= n is bounded by
    // deg!/(deg-n)! per variable product; bound each term by deg^n |c|
    double deg = std::max(1, mono_degree(key.mono));
    total += std::abs(c) * std::pow(deg, n);
  }
  return total;
}
}  // namespace

TEST_CASE("tube_norm basics and the dense-grid oracle") {
  SUBCASE("zero field") {
    PolyMv zero(3, 2, 6);
    CHECK(tube_norm(zero, 0, 0.5, kFast) == 0.0);
    CHECK(tube_norm(zero, 3, 1.0, kFast) == 0.0);
  }

  SUBCASE("W = x1 d1^d2: sup |x1| over the ball is r, derivative term is 1") {
    PolyMv w(3, 2, 8);
    w.add_term(0b011, mono_unit(0), 1.0);
    CHECK(tube_norm(w, 0, 0.5, kFast) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(tube_norm(w, 1, 0.5, kFast) == doctest::Approx(1.0).epsilon(1e-14));
    // dense-grid oracle converges to the same values
    NormConfig grid{0, 41};
    CHECK(tube_norm(w, 0, 0.5, grid) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(tube_norm(w, 1, 0.5, grid) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("low-discrepancy and dense-grid samplings agree on random fields") {
    DetRng rng(3);
    for (int rep = 0; rep < 5; ++rep) {
      PolyMv w = random_multivector(rng, 2, 1, 6, 0, 6, 0.7, 1.0);
      if (w.is_zero()) continue;
      double ld = tube_norm(w, 1, 1.0, NormConfig{2048, 0});
      double gr = tube_norm(w, 1, 1.0, NormConfig{0, 101});
      CHECK(std::abs(ld - gr) <= 0.03 * std::max(ld, gr));
    }
  }

  SUBCASE("seminorm properties on the shared sample set") {
    DetRng rng(4);
    PolyMv a = random_multivector(rng, 3, 2, 6, 0, 5, 0.5, 1.0);
    PolyMv b = random_multivector(rng, 3, 2, 6, 0, 5, 0.5, 1.0);
    double na = tube_norm(a, 2, 1.0, kFast), nb = tube_norm(b, 2, 1.0, kFast);
    CHECK(tube_norm(a + b, 2, 1.0, kFast) <= (na + nb) * (1 + 1e-12));
    CHECK(tube_norm(a * -2.5, 2, 1.0, kFast) == doctest::Approx(2.5 * na).epsilon(1e-12));
  }

  SUBCASE("monotone in the order, monotone in the radius up to sampling") {
    DetRng rng(5);
    PolyMv w = random_multivector(rng, 3, 1, 8, 0, 6, 0.5, 1.0);
    double n0 = tube_norm(w, 0, 0.8, kFast);
    double n1 = tube_norm(w, 1, 0.8, kFast);
    double n3 = tube_norm(w, 3, 0.8, kFast);
    CHECK(n0 <= n1);
    CHECK(n1 <= n3);
    CHECK(tube_norm(w, 2, 0.4, kFast) <= tube_norm(w, 2, 0.8, kFast) * 1.02);
  }

  SUBCASE("empty sample set is a config error") {
    PolyMv w(2, 1, 4);
    w.add_term(0b01, mono_unit(0), 1.0);
    CHECK_THROWS_AS(tube_norm(w, 0, 0.5, NormConfig{0, 0}), StructuralError);
  }
}

TEST_CASE("smoothing operators") {
  SmoothingConfig cfg;  // degree_truncation, cutoff floor(t)

  SUBCASE("identity below the cutoff, truncation above") {
    PolyMv w(3, 1, 8);
    w.add_term(0b001, Mono(3), 1.0);  // x1^3 d1
    CHECK(smoothing_apply(w, 4.2, cfg).terms().size() == 1);  // cutoff 4 keeps deg 3
    CHECK(smoothing_apply(w, 2.9, cfg).is_zero());            // cutoff 2 drops deg 3
    CHECK_THROWS_AS(smoothing_apply(w, 1.0, cfg), PreconditionError);
  }

  SUBCASE("linear idempotent commuting with rescaling") {
    DetRng rng(6);
    PolyMv a = random_multivector(rng, 3, 2, 8, 0, 8, 0.5, 1.0);
    PolyMv b = random_multivector(rng, 3, 2, 8, 0, 8, 0.5, 1.0);
    double t = 3.7;
    PolyMv sa = smoothing_apply(a, t, cfg);
    CHECK(approx_equal(smoothing_apply(sa, t, cfg), sa, 0.0));  // idempotent
    CHECK(approx_equal(smoothing_apply(a + b * 2.0, t, cfg),
                       sa + smoothing_apply(b, t, cfg) * 2.0, 1e-14));
    PolyMv lhs = smoothing_apply(rescale_pullback(0.5, a), t, cfg);
    PolyMv rhs = rescale_pullback(0.5, smoothing_apply(a, t, cfg));
    CHECK(approx_equal(lhs, rhs, 1e-14));
  }

  SUBCASE("S_t converges to the identity as the cutoff passes the top degree") {
    DetRng rng(7);
    PolyMv a = random_multivector(rng, 3, 2, 8, 0, 8, 0.5, 1.0);
    CHECK(approx_equal(smoothing_apply(a, 9.1, cfg), a, 0.0));
  }

  SUBCASE("first-order variant preserves the vanishing subspace") {
    PolyMv w(3, 1, 8);
    w.add_term(0b001, Mono(2), 1.0);  // pure degree 2
    SmoothingConfig fj;
    fj.first_jet_preserving = true;
    CHECK(approx_equal(smoothing_apply_first_order(w, 2.5, fj), w, 0.0));
    PolyMv w5(3, 1, 8);
    w5.add_term(0b010, Mono(5), 1.0);  // pure degree 5
    CHECK(smoothing_apply_first_order(w5, 3.9, fj).is_zero());
    CHECK(smoothing_apply_first_order(w5, 6.1, fj).vanishing_order() >= 2);

    PolyMv bad(3, 1, 8);
    bad.add_term(0b001, mono_unit(0), 1.0);  // linear part
    CHECK_THROWS_AS(smoothing_apply_first_order(bad, 2.5, fj), PreconditionError);

    // linearity on random pairs with vanishing first jets
    DetRng rng(8);
    PolyMv a = random_multivector(rng, 3, 1, 8, 2, 7, 0.5, 1.0);
    PolyMv b = random_multivector(rng, 3, 1, 8, 2, 7, 0.5, 1.0);
    PolyMv lhs = smoothing_apply_first_order(a + b, 3.5, fj);
    PolyMv rhs = smoothing_apply_first_order(a, 3.5, fj) + smoothing_apply_first_order(b, 3.5, fj);
    CHECK(approx_equal(lhs, rhs, 0.0));
  }

  SUBCASE("measured truncation-error ratios are capped by the coefficient oracle") {
    DetRng rng(9);
    int n = 1, m = 2;
    for (int rep = 0; rep < 8; ++rep) {
      PolyMv w = random_multivector(rng, 3, 2, 8, 0, 8, 0.5, 1.0);
      double t = 3.0;
      PolyMv tail = smoothing_apply(w, t, cfg) - w;
      if (tail.is_zero()) continue;
      double denom = std::pow(t, -m) * tube_norm(w, n + m, 1.0, kFast);
      if (denom == 0) continue;
      double ratio = tube_norm(tail, n, 1.0, kFast) / denom;
      double cap = coefficient_derivative_bound(tail, n) / denom;
      CHECK(ratio <= cap * (1 + 1e-9));
      CHECK(std::isfinite(ratio));
    }
  }
}

TEST_CASE("interpolation report") {
  SUBCASE("zero field reports ratio 0") {
    PolyMv zero(3, 2, 8);
    auto rep = interpolation_report(zero, 0, 1, 2, 1.0, kFast);
    CHECK(rep.ratio == 0.0);
  }

  SUBCASE("k = l gives ratio exactly 1 (full weight on the k-factor)") {
    DetRng rng(10);
    PolyMv w = random_multivector(rng, 3, 2, 8, 0, 6, 0.5, 1.0);
    auto rep = interpolation_report(w, 0, 0, 3, 1.0, kFast);
    CHECK(rep.ratio == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("random bivectors give finite stable ratios") {
    DetRng rng(11);
    double worst = 0;
    for (int rep = 0; rep < 10; ++rep) {
      PolyMv w = random_multivector(rng, 3, 2, 8, 0, 8, 0.5, 1.0);
      if (w.is_zero()) continue;
      auto r = interpolation_report(w, 0, 2, 4, 1.0, kFast);
      CHECK(std::isfinite(r.ratio));
      worst = std::max(worst, r.ratio);
    }
    CHECK(worst > 0);
    CHECK(worst < 100);
  }

  SUBCASE("degenerate argument order throws") {
    PolyMv w(3, 2, 8);
    w.add_term(0b011, mono_unit(0), 1.0);
    CHECK_THROWS_AS(interpolation_report(w, 2, 1, 3, 1.0, kFast), PreconditionError);
    CHECK_THROWS_AS(interpolation_report(w, 1, 1, 1, 1.0, kFast), PreconditionError);
  }
}

TEST_CASE("tame ratio report") {
  SUBCASE("zero inputs give zero ratios") {
    TameSampleSpec spec;
    spec.count = 3;
    spec.seed = 77;
    spec.max_degree = 0;  // density still generates constants; brackets vanish
    spec.min_degree = 0;
    spec.norms = kFast;
    auto rows = tame_ratio_report(TameKind::bracket, spec);
    for (const auto& row : rows)
      if (row.rhs == 0) CHECK(row.ratio == 0.0);
  }

  SUBCASE("all kinds produce finite ratios on a small sample") {
    for (TameKind kind : {TameKind::bracket, TameKind::flow, TameKind::pullback1,
                          TameKind::pullback2, TameKind::pullback3}) {
      TameSampleSpec spec;
      spec.count = 6;
      spec.seed = 123;
      spec.trunc = 6;
      spec.max_degree = 5;
      spec.norms = kFast;
      auto rows = tame_ratio_report(kind, spec);
      CHECK(rows.size() == 6);
      for (const auto& row : rows) {
        if (row.skipped) continue;
        CHECK(std::isfinite(row.ratio));
        CHECK(row.ratio >= 0);
      }
    }
  }

  SUBCASE("pullback remainder vanishing order (filtration oracle)") {
    // X of vanishing order 2 and W = pi_g: the third estimate's left side
    // vanishes to order >= 3
    DetRng rng(13);
    PolyMv pi = linear_poisson<double>(lie_so3(), 10);
    PolyMv x = random_multivector(rng, 3, 1, 10, 2, 2, 0.9, 0.05);
    REQUIRE(!x.is_zero());
    Diffeo phi = lie_series_flow(x);
    PolyMv rem = pullback(phi, pi) - pi - pullback(phi, schouten_bracket(x, pi));
    CHECK(rem.vanishing_order() >= 3);
  }
}
