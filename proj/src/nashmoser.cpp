#include "poislin/nashmoser.hpp"

#include <cmath>
#include <sstream>

namespace poislin {

double Schedule::eps_at(int k) const {
  // eps_{k+1} = eps_k^{3/2}, so eps_k = eps0^{(3/2)^k}
  return std::pow(eps0, std::pow(1.5, k));
}

double Schedule::r_at(int k) const {
  double rk = R;
  for (int j = 0; j < k; ++j) rk -= eps_at(j);
  return rk;
}

double Schedule::log_t_at(int k) const { return std::pow(1.5, k) * std::log(t0); }

double Schedule::t_at(int k) const {
  double lg = log_t_at(k);
  return lg > 700 ? std::numeric_limits<double>::infinity() : std::exp(lg);
}

Schedule schedule_init(int dim, double norm_of_z0, double R, double r) {
  if (!(0 < r && r < R && R < 1))
    throw PreconditionError("schedule_init requires 0 < r < R < 1");
  if (!(norm_of_z0 > 0)) throw PreconditionError("schedule_init requires a positive norm");
  Schedule s;
  s.dim = dim;
  s.s = dim / 2 + 1;
  s.alpha = 2 * (s.s + 5);
  s.p = 7 * (s.s + 4);
  s.R = R;
  s.r = r;
  s.eps0 = (R - r) / 4.0;
  s.t0 = std::pow(norm_of_z0, -1.0 / s.alpha);
  if (!(s.t0 > 1)) {
    std::ostringstream os;
    os << "perturbation too large: t0 = " << s.t0 << " <= 1 (|Z0|_{p,R} = " << norm_of_z0
       << "); the run requires |Z0|_{p,R} below a threshold of the shape delta*(r(R-r))^d";
    throw PerturbationTooLargeError(os.str());
  }
  return s;
}

MonitorReport monitor(const PolyMv& z_k, const Diffeo& psi_k, const Schedule& sched, int k,
                      const NormConfig& cfg) {
  MonitorReport rep;
  const double slack = 1.0 + 1e-9;  // a_0 holds with equality by construction
  double rk = sched.r_at(k);
  double ns = tube_norm(z_k, sched.s, rk, cfg);
  double np = tube_norm(z_k, sched.p, rk, cfg);
  double lg = sched.log_t_at(k);
  rep.a_k = ns == 0 || std::log(ns) <= -sched.alpha * lg + std::log(slack);
  rep.b_k = np == 0 || std::log(np) <= sched.alpha * lg + std::log(slack);
  double d1 = diffeo_distance(psi_k, 1, sched.r, cfg);
  rep.continuity = d1 * sched.t0;  // bound shape: d(psi)_{1,r} <= t0^{-1}
  return rep;
}

IterationState step(const IterationState& state, const PolyMv& pi_model,
                    const HomotopyOperators& h, const SmoothingConfig& smoothing,
                    ProcedureMode mode, const Schedule& sched) {
  if (state.z_k.vanishing_order() < 2)
    throw PreconditionError("step: Z_k must vanish to second order (matching first jets)");
  IterationState next;
  next.k = state.k + 1;
  if (state.z_k.is_zero()) {
    next.pi_k = state.pi_k;
    next.z_k = state.z_k;
    next.x_k = PolyMv(state.pi_k.dim(), 1, state.pi_k.trunc_order());
    next.psi = state.psi;
    return next;
  }
  PolyMv x = homotopy_apply(h, state.z_k);
  double t_k = sched.t_at(state.k);
  if (smoothing.mode != SmoothingConfig::Mode::none && std::isfinite(t_k)) {
    x = (mode == ProcedureMode::p1) ? smoothing_apply_first_order(x, t_k, smoothing)
                                    : smoothing_apply(x, t_k, smoothing);
  }
  if (x.vanishing_order() < 2)
    throw NumericalError("step: correction field acquired a nonzero first jet");
  Diffeo phi = lie_series_flow(x);
  next.pi_k = pullback(phi, state.pi_k);
  next.z_k = next.pi_k - pi_model;
  next.x_k = std::move(x);
  next.psi = compose(state.psi, phi);
  return next;
}

bool divergence_detected(const std::vector<double>& hist, int window) {
  if (static_cast<int>(hist.size()) < window + 1) return false;
  for (size_t i = hist.size() - static_cast<size_t>(window); i < hist.size(); ++i)
    if (!(hist[i] > hist[i - 1])) return false;
  return true;
}

RunResult run(const PolyMv& pi_model, const PolyMv& pi_tilde, const HomotopyOperators& h,
              const RunConfig& cfg) {
  pi_model.require_same_shape(pi_tilde);
  if (pi_model.mv_degree() != 2) throw PreconditionError("run expects bivectors");
  if (pi_model.vanishing_order() < 1 || pi_model.max_degree() > 1)
    throw PreconditionError("run: pi must be a linear model (homogeneous linear bivector)");
  double jd = jacobi_defect(pi_tilde);
  if (jd > cfg.jacobi_tol) {
    std::ostringstream os;
    os << "run: pi_tilde is not Poisson up to truncation (jacobi defect " << jd << ")";
    throw PreconditionError(os.str());
  }
  PolyMv z0 = pi_tilde - pi_model;
  if (!z0.is_zero() && z0.vanishing_order() < 2)
    throw PreconditionError("run: first jets of pi and pi_tilde differ");

  RunResult res;
  IterationState state;
  state.k = 0;
  state.pi_k = pi_tilde;
  state.z_k = z0;
  state.x_k = PolyMv(pi_model.dim(), 1, pi_model.trunc_order());
  state.psi = identity_diffeo<double>(pi_model.dim(), pi_model.trunc_order());

  if (z0.is_zero()) {
    res.converged = true;
    res.steps = 0;
    res.psi = state.psi;
    res.final_defect = 0;
    res.message = "already at the model";
    StepRecord rec;
    rec.k = 0;
    rec.a_k = rec.b_k = true;
    res.history.push_back(rec);
    return res;
  }

  Schedule sched = schedule_init(pi_model.dim(), tube_norm(z0, /*n=*/7 * (pi_model.dim() / 2 + 5),
                                                           cfg.R, cfg.norms),
                                 cfg.R, cfg.r);
  res.schedule = sched;

  std::vector<double> coeff_hist;
  auto record = [&](const IterationState& st) {
    StepRecord rec;
    rec.k = st.k;
    rec.r_k = sched.r_at(st.k);
    rec.t_k = sched.t_at(st.k);
    rec.lowest_degree = st.z_k.vanishing_order_above(cfg.convergence_tol);
    rec.jacobi = jacobi_defect(st.pi_k);
    rec.coeff_max = st.z_k.max_abs_coeff();
    if (cfg.record_monitors) {
      rec.norm_s = tube_norm(st.z_k, sched.s, rec.r_k, cfg.norms);
      rec.norm_p = tube_norm(st.z_k, sched.p, rec.r_k, cfg.norms);
      MonitorReport rep = monitor(st.z_k, st.psi, sched, st.k, cfg.norms);
      rec.a_k = rep.a_k;
      rec.b_k = rep.b_k;
      rec.continuity = rep.continuity;
    }
    res.history.push_back(rec);
    coeff_hist.push_back(rec.coeff_max);
    return rec;
  };

  StepRecord rec = record(state);
  if (cfg.record_monitors && !rec.a_k)
    throw NumericalError("monitor violation at k = 0: (a_0) fails, which contradicts the schedule");

  while (state.k < cfg.max_steps) {
    if (state.z_k.max_abs_coeff() <= cfg.convergence_tol) {
      res.converged = true;
      break;
    }
    IterationState next = step(state, pi_model, h, cfg.smoothing, cfg.mode, sched);
    if (jacobi_defect(next.pi_k) > cfg.jacobi_tol) {
      std::ostringstream os;
      os << "step " << next.k << ": pullback lost the Poisson identity (defect "
         << jacobi_defect(next.pi_k) << ")";
      throw NumericalError(os.str());
    }
    state = std::move(next);
    StepRecord r2 = record(state);
    if (cfg.record_monitors && res.history.size() >= 2) {
      const StepRecord& prev = res.history[res.history.size() - 2];
      if (r2.norm_s > prev.norm_s * (1.0 + 1e-9) && r2.coeff_max > cfg.convergence_tol) {
        std::ostringstream os;
        os << "monitor violation at k = " << r2.k << ": |Z_k|_{s,r_k} increased from "
           << prev.norm_s << " to " << r2.norm_s;
        throw NumericalError(os.str());
      }
    }
    if (divergence_detected(coeff_hist, cfg.divergence_window)) {
      res.diverged = true;
      res.message = "divergence: coefficient growth over " +
                    std::to_string(cfg.divergence_window) + " consecutive steps";
      break;
    }
  }
  if (!res.converged && !res.diverged)
    res.message = "not converged within max_steps";

  res.steps = state.k;
  res.psi = state.psi;
  if (res.converged) {
    PolyMv check = pullback(res.psi, pi_tilde) - pi_model;
    res.final_defect = check.max_abs_coeff();
    validate(res.psi);
    if (res.psi.cls != DiffeoClass::identity_to_first_order)
      throw NumericalError("run: composed map is not the identity to first order");
  }
  return res;
}

Diffeo nondegeneracy_transport(const Diffeo& psi, double t) {
  if (!(t > 0)) throw PreconditionError("nondegeneracy_transport: t must be > 0");
  validate(psi);  // in particular psi fixes the origin
  Diffeo mu_t = scaling_diffeo<double>(psi.dim, psi.trunc, t);
  Diffeo mu_inv = scaling_diffeo<double>(psi.dim, psi.trunc, 1.0 / t);
  return compose(mu_t, compose(psi, mu_inv));
}

}  // namespace poislin
