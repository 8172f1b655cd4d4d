#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "poislin/liealg.hpp"

using namespace poislin;

TEST_CASE("linear_poisson for so(3): {x1,x2} = x3 and cyclic") {
  PolyMv pi = linear_poisson<double>(lie_so3(), 6);
  CHECK(pi.coeff(0b011, mono_unit(2)) == doctest::Approx(1.0));   // {x1,x2} = x3
  CHECK(pi.coeff(0b110, mono_unit(0)) == doctest::Approx(1.0));   // {x2,x3} = x1
  CHECK(pi.coeff(0b101, mono_unit(1)) == doctest::Approx(-1.0));  // {x1,x3} = -x2
  CHECK(pi.terms().size() == 3);
  CHECK(jacobi_defect(pi) == 0.0);
}

TEST_CASE("linear_poisson for abelian and direct sums") {
  CHECK(linear_poisson<double>(lie_abelian(4), 6).is_zero());

  // block-diagonal structure for so3+so3: each block reproduces the so3
  // formula blockwise, no cross-block terms
  PolyMv pi = linear_poisson<double>(lie_so3_so3(), 6);
  CHECK(pi.coeff(0b000011, mono_unit(2)) == doctest::Approx(1.0));
  CHECK(pi.coeff(0b011000, mono_unit(5)) == doctest::Approx(1.0));
  CHECK(pi.coeff(0b110000, mono_unit(3)) == doctest::Approx(1.0));
  for (const auto& [key, c] : pi.terms()) {
    bool in_first = (key.mask & 0b000111u) == key.mask;
    bool in_second = (key.mask & 0b111000u) == key.mask;
    CHECK((in_first || in_second));
  }
  CHECK(jacobi_defect(pi) == 0.0);
}

TEST_CASE("isotropy_at_origin extracts the linear part") {
  LieAlgebraSpec g = lie_so3();
  PolyMv pi = linear_poisson<double>(g, 8);

  SUBCASE("round-trip of the linear model") {
    LieAlgebraSpec back = isotropy_at_origin(pi);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          CHECK(back.structure(i, j, k) == doctest::Approx(g.structure(i, j, k)));
  }

  SUBCASE("perturbations vanishing to second order do not contribute") {
    PolyMv pert = pi;
    pert.add_term(0b011, Mono(2), 0.7);             // x1^2
    pert.add_term(0b110, mono_unit(0) + mono_unit(1), -0.3);  // x1 x2
    LieAlgebraSpec back = isotropy_at_origin(pert);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          CHECK(back.structure(i, j, k) == doctest::Approx(g.structure(i, j, k)));
  }

  SUBCASE("purely quadratic bivector has zero structure constants") {
    PolyMv quad(3, 2, 8);
    quad.add_term(0b011, Mono(2), 1.0);
    LieAlgebraSpec back = isotropy_at_origin(quad);
    for (double v : back.c) CHECK(v == 0.0);
  }

  SUBCASE("constant terms are rejected") {
    PolyMv bad(3, 2, 8);
    bad.add_term(0b011, 0, 1.0);
    CHECK_THROWS_AS(isotropy_at_origin(bad), PreconditionError);
  }
}

TEST_CASE("compact_center_check on the built-in algebras") {
  auto so3 = compact_center_check(lie_so3());
  CHECK(so3.is_compact_type);
  CHECK(so3.center_dim == 0);
  CHECK(so3.derived_dim == 3);
  CHECK(so3.admissible);

  // su2 uses differently scaled constants but reports the same invariants
  auto su2 = compact_center_check(lie_su2());
  CHECK(su2.is_compact_type == so3.is_compact_type);
  CHECK(su2.center_dim == so3.center_dim);
  CHECK(su2.derived_dim == so3.derived_dim);
  CHECK(su2.admissible);

  auto so3r = compact_center_check(lie_so3_r());
  CHECK(so3r.is_compact_type);
  CHECK(so3r.center_dim == 1);
  CHECK(so3r.derived_dim == 3);
  CHECK(so3r.admissible);

  auto ab2 = compact_center_check(lie_abelian(2));
  CHECK(ab2.center_dim == 2);
  CHECK(ab2.derived_dim == 0);
  CHECK_FALSE(ab2.admissible);

  auto ss = compact_center_check(lie_so3_so3());
  CHECK(ss.is_compact_type);
  CHECK(ss.center_dim == 0);
  CHECK(ss.derived_dim == 6);
  CHECK(ss.admissible);
}

TEST_CASE("validate_spec rejects broken data") {
  LieAlgebraSpec g = lie_so3();
  CHECK_NOTHROW(validate_spec(g));

  SUBCASE("antisymmetry violation") {
    LieAlgebraSpec bad = g;
    bad.structure(0, 0, 1) = 1.0;
    CHECK_THROWS_AS(validate_spec(bad), StructuralError);
  }
  SUBCASE("Jacobi violation") {
    // [e1,e2] = e3 + e1/2 with the other so3 brackets: the Jacobiator of
    // (e1,e2,e3) becomes e2/2
    LieAlgebraSpec bad = g;
    bad.structure(0, 1, 0) = 0.5;
    bad.structure(1, 0, 0) = -0.5;
    CHECK_THROWS_AS(validate_spec(bad), StructuralError);
  }
  SUBCASE("ad-invariant inner products pass, others fail") {
    LieAlgebraSpec with_ip = g;
    with_ip.inner_product = 2.0 * Eigen::MatrixXd::Identity(3, 3);
    CHECK_NOTHROW(validate_spec(with_ip));
    with_ip.inner_product = Eigen::Vector3d(1.0, 2.0, 3.0).asDiagonal().toDenseMatrix();
    CHECK_THROWS_AS(validate_spec(with_ip), StructuralError);
  }
}
