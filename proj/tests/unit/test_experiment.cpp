#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "poislin/experiment.hpp"
#include "poislin/io.hpp"

using namespace poislin;

namespace {
ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.trunc_order = 8;
  cfg.norm_samples = 128;
  return cfg;
}
}  // namespace

TEST_CASE("generate_perturbation: exact kind") {
  ExperimentConfig cfg = small_config();
  LieAlgebraSpec g = lie_so3();
  PolyMv pt = generate_perturbation(g, cfg);
  // Poisson by construction, first jet matching
  CHECK(jacobi_defect(pt) <= 1e-12);
  PolyMv pi = linear_poisson<double>(g, cfg.trunc_order);
  CHECK((pt - pi).vanishing_order() >= 2);

  // bit-for-bit reproducible for a fixed seed
  PolyMv again = generate_perturbation(g, cfg);
  CHECK(to_json(pt).dump() == to_json(again).dump());
  cfg.seed = 2;
  PolyMv other = generate_perturbation(g, cfg);
  CHECK(to_json(pt).dump() != to_json(other).dump());
}

TEST_CASE("generate_perturbation: random Poisson deformation") {
  ExperimentConfig cfg = small_config();
  cfg.kind = ExperimentConfig::Kind::random_poisson_deformation;
  LieAlgebraSpec g = lie_so3();
  PolyMv pt = generate_perturbation(g, cfg);
  CHECK(jacobi_defect(pt) <= 1e-12);
  CHECK((pt - linear_poisson<double>(g, cfg.trunc_order)).vanishing_order() >= 2);
  PolyMv again = generate_perturbation(g, cfg);
  CHECK(to_json(pt).dump() == to_json(again).dump());
}

TEST_CASE("config validation") {
  ExperimentConfig cfg = small_config();
  cfg.min_degree = 1;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
  cfg = small_config();
  cfg.magnitude = 0;
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
  cfg = small_config();
  cfg.R = 0.4;  // r defaults to 0.5 > R
  CHECK_THROWS_AS(cfg.validate(), PreconditionError);
}

TEST_CASE("run_experiment produces deterministic artifacts and converges") {
  ExperimentConfig cfg = small_config();
  cfg.out_dir = "/tmp/poislin_test_exp_a";
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.run.converged);
  CHECK(res.run.final_defect <= 1e-10);
  CHECK(std::filesystem::exists(cfg.out_dir + "/history.csv"));
  CHECK(std::filesystem::exists(cfg.out_dir + "/result.json"));

  ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = "/tmp/poislin_test_exp_b";
  run_experiment(cfg2);
  CHECK(read_file(cfg.out_dir + "/history.csv") == read_file(cfg2.out_dir + "/history.csv"));
  CHECK(read_file(cfg.out_dir + "/result.json") == read_file(cfg2.out_dir + "/result.json"));
}

TEST_CASE("algebras load from JSON files") {
  std::string path = "/tmp/poislin_test_algebra.json";
  write_file(path, to_json(lie_su2()).dump());
  LieAlgebraSpec g = load_algebra(path);
  CHECK(g.dim == 3);
  CHECK(g.structure(0, 1, 2) == doctest::Approx(-2.0));
  CHECK_THROWS_AS(load_algebra("no_such_algebra"), StructuralError);
}

TEST_CASE("obstructed algebras are rejected loudly") {
  ExperimentConfig cfg = small_config();
  cfg.algebra = "abelian2";
  cfg.kind = ExperimentConfig::Kind::random_poisson_deformation;
  cfg.trunc_order = 6;
  CHECK_THROWS_AS(run_experiment(cfg), HarmonicObstructionError);
}

TEST_CASE("identity perturbation converges in zero steps") {
  ExperimentConfig cfg = small_config();
  cfg.trunc_order = 6;
  std::string path = "/tmp/poislin_test_identity_pt.json";
  write_file(path, to_json(linear_poisson<double>(lie_so3(), 6)).dump());
  cfg.perturbation_file = path;
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.run.converged);
  CHECK(res.run.steps == 0);
}

TEST_CASE("rational mode converges exactly on generated perturbations") {
  ExperimentConfig cfg = small_config();
  cfg.rational = true;
  cfg.trunc_order = 6;
  ExperimentResult res = run_experiment(cfg);
  CHECK(res.run.converged);
  CHECK(res.exact_zero);
  CHECK(res.run.final_defect == 0.0);

  cfg.kind = ExperimentConfig::Kind::random_poisson_deformation;
  CHECK_THROWS_AS(run_experiment(cfg), PreconditionError);
}
