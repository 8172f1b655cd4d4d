#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <map>
#include <vector>

#include "poislin/jet.hpp"
#include "poislin/liealg.hpp"
#include "poislin/norms.hpp"

using namespace poislin;

namespace {

// ---- test-local polynomial oracle (independent of the jet machinery) ------
// dense-ish polynomials as maps from exponent vectors to coefficients
using OPoly = std::map<std::vector<int>, double>;

OPoly omono(int dim, int var, int exp = 1) {
  std::vector<int> e(static_cast<size_t>(dim), 0);
  e[static_cast<size_t>(var)] = exp;
  return {{e, 1.0}};
}

OPoly omul(const OPoly& a, const OPoly& b) {
  OPoly out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      out[e] += ca * cb;
    }
  return out;
}

OPoly oadd(OPoly a, const OPoly& b, double f = 1.0) {
  for (const auto& [e, c] : b) a[e] += f * c;
  return a;
}

OPoly odiff(const OPoly& a, int var) {
  OPoly out;
  for (const auto& [e, c] : a) {
    if (e[static_cast<size_t>(var)] == 0) continue;
    std::vector<int> e2 = e;
    e2[static_cast<size_t>(var)] -= 1;
    out[e2] += c * e[static_cast<size_t>(var)];
  }
  return out;
}

double omax_abs(const OPoly& a) {
  double m = 0;
  for (const auto& [e, c] : a) m = std::max(m, std::abs(c));
  return m;
}

// coordinate Poisson bracket {f,g} = sum pi^{ij} d_i f d_j g from a matrix of
// entries pi^{ij} (antisymmetric)
OPoly obracket(const std::vector<std::vector<OPoly>>& pi, const OPoly& f, const OPoly& g) {
  OPoly out;
  int d = static_cast<int>(pi.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      out = oadd(out, omul(pi[static_cast<size_t>(i)][static_cast<size_t>(j)],
                           omul(odiff(f, i), odiff(g, j))));
  return out;
}

PolyMv so3_pi(int trunc) { return linear_poisson<double>(lie_so3(), trunc); }

}  // namespace

TEST_CASE("schouten bracket: Lie derivative of a linear coefficient") {
  // W = d1, V = x1 d1^d2 -> d1^d2
  PolyMv w(3, 1, 6), v(3, 2, 6);
  w.add_term(0b001, 0, 1.0);
  v.add_term(0b011, mono_unit(0), 1.0);
  PolyMv b = schouten_bracket(w, v);
  CHECK(b.terms().size() == 1);
  CHECK(b.coeff(0b011, 0) == doctest::Approx(1.0));
}

TEST_CASE("schouten bracket: [pi_so3, pi_so3] = 0 and jacobi defects") {
  PolyMv pi = so3_pi(8);
  CHECK(jacobi_defect(pi) == 0.0);

  PolyMv zero(3, 2, 8);
  CHECK(jacobi_defect(zero) == 0.0);

  // perturbed: pi + x1^2 d1^d2 has a positive defect, matching the
  // brute-force Jacobiator oracle: |[pi,pi]| = 2 |J(x_i,x_j,x_k)|
  PolyMv pert = pi;
  pert.add_term(0b011, Mono(2), 1.0);  // x1^2 d1^d2
  double defect = jacobi_defect(pert);
  CHECK(defect > 0);

  std::vector<std::vector<OPoly>> mat(3, std::vector<OPoly>(3));
  // pi^{12} = x3 + x1^2, pi^{23} = x1, pi^{13} = -x2
  mat[0][1] = oadd(omono(3, 2), omono(3, 0, 2));
  mat[1][2] = omono(3, 0);
  mat[0][2] = oadd(OPoly{}, omono(3, 1), -1.0);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < i; ++j) mat[i][j] = oadd(OPoly{}, mat[j][i], -1.0);

  OPoly x1 = omono(3, 0), x2 = omono(3, 1), x3 = omono(3, 2);
  OPoly jac = oadd(oadd(obracket(mat, x1, obracket(mat, x2, x3)),
                        obracket(mat, x2, obracket(mat, x3, x1))),
                   obracket(mat, x3, obracket(mat, x1, x2)));
  CHECK(defect == doctest::Approx(2.0 * omax_abs(jac)).epsilon(1e-12));
}

TEST_CASE("schouten bracket: commutator of linear vector fields") {
  // W = x2 d1, V = x1 d2 -> x2 d2 - x1 d1
  PolyMv w(2, 1, 4), v(2, 1, 4);
  w.add_term(0b01, mono_unit(1), 1.0);
  v.add_term(0b10, mono_unit(0), 1.0);
  PolyMv b = schouten_bracket(w, v);
  CHECK(b.coeff(0b10, mono_unit(1)) == doctest::Approx(1.0));
  CHECK(b.coeff(0b01, mono_unit(0)) == doctest::Approx(-1.0));
  CHECK(b.terms().size() == 2);

  // finite-difference commutator oracle from the exact flows
  // phi_W^h(p) = (p1 + h p2, p2), phi_V^h(p) = (p1, p2 + h p1)
  auto flow_w = [](double h, std::array<double, 2> p) {
    return std::array<double, 2>{p[0] + h * p[1], p[1]};
  };
  auto flow_v = [](double h, std::array<double, 2> p) {
    return std::array<double, 2>{p[0], p[1] + h * p[0]};
  };
  auto group_comm = [&](double h, std::array<double, 2> p) {
    return flow_v(-h, flow_w(-h, flow_v(h, flow_w(h, p))));
  };
  for (std::array<double, 2> p : {std::array<double, 2>{0.3, -0.7}, {1.0, 0.5}}) {
    auto val = [&](double h) {
      auto q = group_comm(h, p);
      return std::array<double, 2>{(q[0] - p[0]) / (h * h), (q[1] - p[1]) / (h * h)};
    };
    auto g1 = val(1e-3), g2 = val(5e-4);
    for (int i = 0; i < 2; ++i) {
      double extrapolated = 2 * g2[static_cast<size_t>(i)] - g1[static_cast<size_t>(i)];
      double from_jet = eval_coefficient(b, std::uint32_t(1) << i, {p[0], p[1]});
      CHECK(extrapolated == doctest::Approx(from_jet).epsilon(1e-5));
    }
  }
}

TEST_CASE("schouten bracket: graded antisymmetry and Jacobi on random inputs") {
  // degrees are budgeted so that no iterated bracket overflows the
  // truncation order (identities are then exact, not just filtration-level)
  DetRng rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    PolyMv x = random_multivector(rng, 3, 1, 8, 0, 3, 0.5, 1.0);
    PolyMv w = random_multivector(rng, 3, 2, 8, 0, 3, 0.5, 1.0);
    PolyMv f = random_multivector(rng, 3, 0, 8, 0, 3, 0.5, 1.0);

    // antisymmetry: [W,V] = -(-1)^{(a-1)(b-1)} [V,W]
    {
      PolyMv lhs = schouten_bracket(x, w);          // a=1,b=2: sign -(+1) = -1
      PolyMv rhs = schouten_bracket(w, x) * (-1.0);
      CHECK(approx_equal(lhs, rhs, 1e-12));
      PolyMv l2 = schouten_bracket(x, f);
      PolyMv r2 = schouten_bracket(f, x) * (-1.0);  // a=1,b=0: -(-1)^0 = -1
      CHECK(approx_equal(l2, r2, 1e-12));
    }
    // graded Jacobi for (1,1,2):
    // [X,[Y,W]] = [[X,Y],W] + (-1)^{(a-1)(b-1)} [Y,[X,W]] with a=b=1
    {
      PolyMv y = random_multivector(rng, 3, 1, 8, 0, 3, 0.5, 1.0);
      PolyMv lhs = schouten_bracket(x, schouten_bracket(y, w));
      PolyMv rhs = schouten_bracket(schouten_bracket(x, y), w) +
                   schouten_bracket(y, schouten_bracket(x, w));
      CHECK(approx_equal(lhs, rhs, 1e-10));
    }
  }
}

TEST_CASE("lie_series_flow examples") {
  // X = 0 -> identity
  PolyMv zero(3, 1, 6);
  Diffeo id_flow = lie_series_flow(zero);
  for (int i = 0; i < 3; ++i)
    CHECK(approx_equal(id_flow.components[static_cast<size_t>(i)],
                       poly_coordinate<double>(3, 6, i), 0.0));

  // X = x1^2 d1 in d = 1, trunc 4 -> x + x^2 + x^3 + x^4 (from x/(1-x))
  PolyMv x(1, 1, 4);
  x.add_term(0b1, Mono(2), 1.0);
  Diffeo phi = lie_series_flow(x);
  for (int deg = 1; deg <= 4; ++deg)
    CHECK(phi.components[0].coeff(0, Mono(deg)) == doctest::Approx(1.0).epsilon(1e-14));

  // flow(X) o flow(-X) = id up to truncation
  PolyMv y(3, 1, 8);
  y.add_term(0b001, Mono(2), 0.3);             // x1^2 d1
  y.add_term(0b010, mono_unit(0) + mono_unit(2), -0.2);  // x1 x3 d2
  Diffeo fwd = lie_series_flow(y);
  Diffeo bwd = lie_series_flow(y * -1.0);
  Diffeo comp = compose(fwd, bwd);
  for (int i = 0; i < 3; ++i)
    CHECK(approx_equal(comp.components[static_cast<size_t>(i)],
                       poly_coordinate<double>(3, 8, i), 1e-12));

  // nonzero linear part is rejected
  PolyMv bad(2, 1, 4);
  bad.add_term(0b01, mono_unit(1), 1.0);
  CHECK_THROWS_AS(lie_series_flow(bad), PreconditionError);
}

TEST_CASE("pullback: identity, scaling and the algebra map property") {
  PolyMv pi = so3_pi(8);

  SUBCASE("identity leaves fields unchanged") {
    Diffeo id = identity_diffeo<double>(3, 8);
    CHECK(approx_equal(pullback(id, pi), pi, 0.0));
  }

  SUBCASE("mu_t pulls the linear structure back to (1/t) pi_g") {
    for (double t : {0.5, 2.0, 3.0}) {
      Diffeo mu = scaling_diffeo<double>(3, 8, t);
      PolyMv pb = pullback(mu, pi);
      CHECK(approx_equal(pb, pi * (1.0 / t), 1e-13));
    }
  }

  SUBCASE("pullback is an algebra map for the bracket") {
    DetRng rng(7);
    PolyMv x = random_multivector(rng, 3, 1, 8, 2, 4, 0.6, 0.2);
    Diffeo phi = lie_series_flow(x);
    PolyMv w = random_multivector(rng, 3, 2, 8, 1, 3, 0.5, 1.0);
    PolyMv v = random_multivector(rng, 3, 1, 8, 1, 3, 0.5, 1.0);
    PolyMv lhs = pullback(phi, schouten_bracket(w, v));
    PolyMv rhs = schouten_bracket(pullback(phi, w), pullback(phi, v));
    CHECK(approx_equal(lhs, rhs, 1e-10));
  }

  SUBCASE("functoriality") {
    DetRng rng(8);
    PolyMv x1 = random_multivector(rng, 3, 1, 8, 2, 3, 0.6, 0.2);
    PolyMv x2 = random_multivector(rng, 3, 1, 8, 2, 3, 0.6, 0.2);
    Diffeo phi = lie_series_flow(x1), chi = lie_series_flow(x2);
    PolyMv w = random_multivector(rng, 3, 2, 8, 1, 4, 0.5, 1.0);
    PolyMv lhs = pullback(compose(phi, chi), w);
    PolyMv rhs = pullback(chi, pullback(phi, w));
    CHECK(approx_equal(lhs, rhs, 1e-10));
  }

  SUBCASE("non-invertible linear part is rejected") {
    Diffeo sing;
    sing.dim = 2;
    sing.trunc = 4;
    sing.cls = DiffeoClass::linear_part_invertible;
    sing.components.push_back(poly_coordinate<double>(2, 4, 0));
    sing.components.push_back(poly_coordinate<double>(2, 4, 0));  // duplicate row
    PolyMv w(2, 1, 4);
    w.add_term(0b01, mono_unit(0), 1.0);
    CHECK_THROWS_AS(pullback(sing, w), PreconditionError);
  }
}

TEST_CASE("pullback expansion: remainder vanishing orders") {
  // X of vanishing order m: phi*(W) - W - phi*([X,W]) and
  // phi*(W) - W - [X,W] both vanish to order >= 2m - 2 + ord_coeff(W)
  DetRng rng(11);
  for (int m : {2, 3}) {
    PolyMv x = random_multivector(rng, 3, 1, 12, m, m, 0.8, 0.1);
    if (x.is_zero()) continue;
    Diffeo phi = lie_series_flow(x);
    PolyMv w = so3_pi(12);  // coefficients of order 1
    int expected = 2 * m - 2 + 1;

    PolyMv rem1 = pullback(phi, w) - w - pullback(phi, schouten_bracket(x, w));
    CHECK(rem1.vanishing_order() >= expected);
    PolyMv rem2 = pullback(phi, w) - w - schouten_bracket(x, w);
    CHECK(rem2.vanishing_order() >= expected);
  }
}

TEST_CASE("compose: neutral elements and inverses") {
  DetRng rng(13);
  PolyMv x = random_multivector(rng, 3, 1, 8, 2, 4, 0.6, 0.3);
  Diffeo phi = lie_series_flow(x);
  Diffeo id = identity_diffeo<double>(3, 8);

  CHECK(approx_equal(compose(id, phi).components[0], phi.components[0], 0.0));
  CHECK(approx_equal(compose(phi, id).components[1], phi.components[1], 0.0));

  Diffeo mu = scaling_diffeo<double>(3, 8, 2.0);
  Diffeo mu_inv = scaling_diffeo<double>(3, 8, 0.5);
  Diffeo round = compose(mu, mu_inv);
  for (int i = 0; i < 3; ++i)
    CHECK(approx_equal(round.components[static_cast<size_t>(i)],
                       poly_coordinate<double>(3, 8, i), 1e-14));

  // compositional inverse
  Diffeo inv = inverse(phi);
  Diffeo check = compose(inv, phi);
  for (int i = 0; i < 3; ++i)
    CHECK(approx_equal(check.components[static_cast<size_t>(i)],
                       poly_coordinate<double>(3, 8, i), 1e-11));
  // two-sided
  Diffeo check2 = compose(phi, inv);
  for (int i = 0; i < 3; ++i)
    CHECK(approx_equal(check2.components[static_cast<size_t>(i)],
                       poly_coordinate<double>(3, 8, i), 1e-11));

  // mismatched truncation orders are structural errors
  Diffeo other = identity_diffeo<double>(3, 6);
  CHECK_THROWS_AS(compose(phi, other), StructuralError);
}

TEST_CASE("rescale_pullback and rescaled_family") {
  PolyMv pi = so3_pi(8);

  SUBCASE("t = 1 is the identity") {
    CHECK(approx_equal(rescale_pullback(1.0, pi), pi, 0.0));
    CHECK(approx_equal(rescaled_family(pi, 1.0), pi, 0.0));
  }

  SUBCASE("linear structures rescale by 1/t") {
    CHECK(approx_equal(rescale_pullback(2.0, pi), pi * 0.5, 1e-14));
    CHECK(approx_equal(rescaled_family(pi, 0.25), pi, 1e-14));  // family fixes pi_g
  }

  SUBCASE("exponent bookkeeping: degree-2 bivector term is fixed by mu_t") {
    PolyMv w(3, 2, 8);
    w.add_term(0b011, Mono(2), 1.0);  // x1^2 d1^d2: m=2, q=2 -> t^0
    CHECK(approx_equal(rescale_pullback(2.0, w), w, 1e-14));
  }

  SUBCASE("family of a quadratic perturbation scales the quadratic part by t") {
    DetRng rng(17);
    PolyMv q = random_multivector(rng, 3, 2, 8, 2, 2, 0.8, 1.0);
    PolyMv full = pi + q;
    for (double t : {0.5, 2.0}) {
      PolyMv fam = rescaled_family(full, t);
      CHECK(approx_equal(fam, pi + q * t, 1e-13));
    }
  }

  SUBCASE("Poisson property is preserved along the family") {
    DetRng rng(19);
    PolyMv x = random_multivector(rng, 3, 1, 8, 2, 3, 0.6, 0.2);
    PolyMv poisson = pullback(lie_series_flow(x), pi);
    REQUIRE(jacobi_defect(poisson) < 1e-12);
    for (double t : {0.3, 0.7, 2.5})
      CHECK(jacobi_defect(rescaled_family(poisson, t)) < 1e-11);
  }

  SUBCASE("preconditions") {
    CHECK_THROWS_AS(rescale_pullback(-1.0, pi), PreconditionError);
    PolyMv with_const(3, 2, 8);
    with_const.add_term(0b011, 0, 1.0);
    CHECK_THROWS_AS(rescaled_family(with_const, 2.0), PreconditionError);
  }
}

TEST_CASE("mixed rings are rejected") {
  PolyMv a(3, 2, 8), b(3, 2, 6);
  a.add_term(0b011, mono_unit(0), 1.0);
  b.add_term(0b011, mono_unit(0), 1.0);
  CHECK_THROWS_AS(schouten_bracket(a, b), StructuralError);
  PolyMv c(2, 2, 8);
  c.add_term(0b11, mono_unit(0), 1.0);
  CHECK_THROWS_AS(schouten_bracket(a, c), StructuralError);
  // bracket with resulting degree > 3 is unsupported
  PolyMv w3(4, 3, 8), v2(4, 2, 8);
  w3.add_term(0b0111, mono_unit(0), 1.0);
  v2.add_term(0b0011, mono_unit(1), 1.0);
  CHECK_THROWS_AS(schouten_bracket(w3, v2), StructuralError);
}
