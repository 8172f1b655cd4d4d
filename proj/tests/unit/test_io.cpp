#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "poislin/io.hpp"
#include "poislin/rng.hpp"

using namespace poislin;

TEST_CASE("multivector JSON round-trip") {
  DetRng rng(41);
  PolyMv w = random_multivector(rng, 3, 2, 8, 0, 6, 0.4, 1.0);
  nlohmann::json j = to_json(w);
  CHECK(j.at("dim") == 3);
  CHECK(j.at("q") == 2);
  CHECK(j.at("trunc_order") == 8);
  for (const auto& t : j.at("terms")) {
    const auto& idx = t.at("indices");
    CHECK(idx.size() == 2);
    CHECK(idx[0].get<int>() < idx[1].get<int>());  // strictly increasing, 1-based
    CHECK(idx[0].get<int>() >= 1);
    CHECK(t.at("exponents").size() == 3);
  }
  PolyMv back = polymv_from_json(j);
  CHECK(approx_equal(w, back, 0.0));

  nlohmann::json bad = j;
  if (!bad.at("terms").empty()) {
    bad["terms"][0]["indices"] = {2, 2};
    CHECK_THROWS_AS(polymv_from_json(bad), StructuralError);
  }
}

TEST_CASE("Lie algebra JSON round-trip") {
  LieAlgebraSpec g = lie_su2();
  g.inner_product = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  nlohmann::json j = to_json(g);
  LieAlgebraSpec back = liealg_from_json(j);
  CHECK(back.dim == 3);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        CHECK(back.structure(i, k, l) == doctest::Approx(g.structure(i, k, l)));
  REQUIRE(back.inner_product.has_value());
  CHECK((*back.inner_product - *g.inner_product).norm() == doctest::Approx(0.0));
}

TEST_CASE("foliation data and stability report JSON") {
  FoliationData d;
  d.n = 2;
  d.b1 = 1;
  d.b2 = 1;
  d.b3 = 1;
  d.var = Eigen::MatrixXd::Zero(1, 2);
  d.var << 1, 0;
  d.wedge = Eigen::MatrixXd::Zero(1, 2);
  d.wedge << 1, 1;
  FoliationData back = foliation_from_json(to_json(d));
  CHECK((back.var - d.var).norm() == 0.0);
  CHECK((back.wedge - d.wedge).norm() == 0.0);

  auto rep = check_conditions(d);
  nlohmann::json rj = to_json(rep);
  CHECK(rj.contains("c1"));
  CHECK(rj.contains("equivalent_H2_AS_zero"));
  CHECK(rj.at("rank_var").get<int>() == rep.rank_var);
}

TEST_CASE("history CSV has the documented columns and is deterministic") {
  StepRecord rec;
  rec.k = 0;
  rec.r_k = 0.9;
  rec.t_k = 10.0;
  rec.norm_s = 1e-3;
  rec.norm_p = 2e-3;
  rec.lowest_degree = 2;
  rec.a_k = true;
  rec.b_k = true;
  rec.jacobi = 0.0;
  std::vector<StepRecord> hist{rec};
  std::string csv1 = history_csv(hist);
  std::string csv2 = history_csv(hist);
  CHECK(csv1 == csv2);
  CHECK(csv1.rfind("k,r_k,t_k,norm_s,norm_p,lowest_degree,a_k,b_k,jacobi_defect\n", 0) == 0);
  CHECK(csv1.find("0,0.9") != std::string::npos);
}

TEST_CASE("tame CSV header and row shape") {
  TameRow row;
  row.kind = "bracket";
  row.sample_id = 3;
  row.n = 2;
  row.r = 1.0;
  row.lhs = 1.5;
  row.rhs = 3.0;
  row.ratio = 0.5;
  TameRow skipped = row;
  skipped.skipped = true;
  std::string csv = tame_csv({row, skipped});
  CHECK(csv.rfind("kind,sample_id,n,r,lhs,rhs,ratio\n", 0) == 0);
  CHECK(csv.find("bracket,3,2,1,1.5,3,0.5") != std::string::npos);
  // skipped rows carry no measurements
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
}
