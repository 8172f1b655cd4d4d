#ifndef POISLIN_NASHMOSER_HPP
#define POISLIN_NASHMOSER_HPP

// The iteration driver: the fast-convergence procedures with their
// schedules, norm monitors, convergence certification and the final
// Poisson-map verification.

#include <string>
#include <vector>

#include "poislin/cohomology.hpp"
#include "poislin/jet.hpp"
#include "poislin/norms.hpp"

namespace poislin {

struct Schedule {
  int dim = 0;
  int s = 0;      // floor(dim/2) + 1
  int alpha = 0;  // 2 (s + 5)
  int p = 0;      // 7 (s + 4)
  double R = 0;
  double r = 0;
  double eps0 = 0;
  double t0 = 0;

  double eps_at(int k) const;
  double r_at(int k) const;   // r_0 = R, r_{k+1} = r_k - eps_k; stays > r
  double t_at(int k) const;   // t_{k+1} = t_k^{3/2} (may overflow to inf)
  double log_t_at(int k) const;
};

// Computes s, alpha, p and t_0 = norm_of_z0^{-1/alpha}. Rejects runs with
// t_0 <= 1: the perturbation is too large for the schedule to contract (the
// smallness threshold is of the shape delta * (r (R - r))^d).
Schedule schedule_init(int dim, double norm_of_z0, double R, double r);

enum class ProcedureMode { p0, p1 };

struct StepRecord {
  int k = 0;
  double r_k = 0;
  double t_k = 0;
  double norm_s = 0;
  double norm_p = 0;
  int lowest_degree = 0;
  bool a_k = false;
  bool b_k = false;
  double jacobi = 0;
  double coeff_max = 0;
  double continuity = 0;
};

struct MonitorReport {
  bool a_k = false;
  bool b_k = false;
  double continuity = 0;  // d(psi)_{1,r} / norm_z0^{1/alpha}
};

struct IterationState {
  int k = 0;
  PolyMv pi_k;
  PolyMv z_k;   // pi_k - pi
  PolyMv x_k;   // vector field used to produce this state (zero at k = 0)
  Diffeo psi;   // composition of all flows so far
};

struct RunConfig {
  ProcedureMode mode = ProcedureMode::p1;
  SmoothingConfig smoothing{SmoothingConfig::Mode::none, true, 0};
  double R = 0.9;
  double r = 0.5;
  int max_steps = 32;
  NormConfig norms{1024, 0};
  double convergence_tol = 1e-12;
  double jacobi_tol = 1e-10;
  int divergence_window = 3;
  bool record_monitors = true;  // norm monitors per step (costs p-norms)
};

struct RunResult {
  bool converged = false;
  bool diverged = false;
  int steps = 0;
  Diffeo psi;
  double final_defect = 0;  // max coefficient of pullback(psi, pi_tilde) - pi
  std::vector<StepRecord> history;
  Schedule schedule;
  std::string message;
};

// Evaluates the inductive inequalities |Z_k|_{s,r_k} <= t_k^{-alpha} and
// |Z_k|_{p,r_k} <= t_k^{alpha} and the first-order continuity ratio.
MonitorReport monitor(const PolyMv& z_k, const Diffeo& psi_k, const Schedule& sched, int k,
                      const NormConfig& cfg = {});

// One iteration step: X_k = S(h1(Z_k)), phi = flow(X_k),
// pi_{k+1} = phi^*(pi_k).
IterationState step(const IterationState& state, const PolyMv& pi_model,
                    const HomotopyOperators& h, const SmoothingConfig& smoothing,
                    ProcedureMode mode, const Schedule& sched);

// Full run: validates the inputs (pi_tilde Poisson, first jets matching,
// pi the linear model), iterates until the coefficients of Z_k vanish or
// max_steps is hit, and certifies pullback(psi, pi_tilde) = pi.
RunResult run(const PolyMv& pi_model, const PolyMv& pi_tilde, const HomotopyOperators& h,
              const RunConfig& cfg);

// True when the last `window` + 1 entries are strictly increasing.
bool divergence_detected(const std::vector<double>& coeff_max_history, int window);

// The conjugated map mu_t o psi o mu_{1/t}; when pullback(psi, pi_g) is the
// rescaled structure, the output linearizes the original one.
Diffeo nondegeneracy_transport(const Diffeo& psi, double t);

}  // namespace poislin

#endif
