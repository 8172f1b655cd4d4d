#ifndef POISLIN_EXPERIMENT_HPP
#define POISLIN_EXPERIMENT_HPP

// Batch experiment runner: loads algebras and perturbations, runs the
// linearization with its verification monitors and writes convergence
// tables and reports.

#include <string>

#include "poislin/liealg.hpp"
#include "poislin/nashmoser.hpp"

namespace poislin {

struct ExperimentConfig {
  std::string algebra = "so3";        // built-in name or JSON file path
  std::string perturbation_file;      // explicit bivector JSON; overrides kind
  enum class Kind { exact, random_poisson_deformation };
  Kind kind = Kind::exact;
  int min_degree = 2;
  double magnitude = 1e-3;
  std::uint64_t seed = 1;
  int trunc_order = 16;
  ProcedureMode mode = ProcedureMode::p1;
  SmoothingConfig smoothing{SmoothingConfig::Mode::none, true, 0};
  double R = 0.9;
  double r = 0.5;
  std::string out_dir;                // artifacts are skipped when empty
  bool rational = false;
  int max_steps = 32;
  int norm_samples = 1024;

  void validate() const;
};

LieAlgebraSpec load_algebra(const std::string& name_or_path);

// kind = exact: pullback of pi_g under the flow of a random second-order
// vector field (Poisson by construction). kind = random_poisson_deformation:
// pi_g + V with V projected onto the kernel of the linearized Jacobi
// operator slice by slice, then Newton-corrected until the Jacobi defect is
// at most 1e-12. Deterministic in the seed.
PolyMv generate_perturbation(const LieAlgebraSpec& g, const ExperimentConfig& cfg);

struct ExperimentResult {
  RunResult run;
  double continuity_ratio = 0;
  bool exact_zero = false;  // rational mode: Z vanished identically
  std::string summary;
};

// Runs one experiment end to end; writes history.csv and result.json into
// out_dir when set. Throws on invalid configuration or module errors.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace poislin

#endif
