#include "poislin/experiment.hpp"

#include <Eigen/SVD>
#include <filesystem>
#include <sstream>

#include "poislin/cohomology.hpp"
#include "poislin/io.hpp"
#include "poislin/rational.hpp"
#include "poislin/rng.hpp"

namespace poislin {

void ExperimentConfig::validate() const {
  if (min_degree < 2)
    throw PreconditionError("experiment: min_degree must be >= 2 (first jet preserved)");
  if (!(magnitude > 0)) throw PreconditionError("experiment: magnitude must be positive");
  if (!(0 < r && r < R && R < 1)) throw PreconditionError("experiment: need 0 < r < R < 1");
  if (trunc_order < 2 || trunc_order > 32)
    throw PreconditionError("experiment: trunc_order out of the supported range");
}

LieAlgebraSpec load_algebra(const std::string& name_or_path) {
  if (std::filesystem::exists(name_or_path)) {
    auto j = nlohmann::json::parse(read_file(name_or_path));
    return liealg_from_json(j);
  }
  LieAlgebraSpec g = lie_by_name(name_or_path);
  validate_spec(g);
  return g;
}

namespace {

// Slice-wise pseudo-inverse of the degree-raising differential on bivectors,
// used to project onto its kernel and to apply Newton corrections.
class JacobiOperator {
 public:
  JacobiOperator(const LieAlgebraSpec& g, int k_max) {
    for (int k = 0; k <= k_max; ++k) {
      Deg deg;
      deg.b2 = build_slice_basis(g.dim, 2, k);
      deg.b3 = (g.dim >= 3) ? build_slice_basis(g.dim, 3, k)
                            : SliceBasis{g.dim, 3, k, {}, {}};
      // without trivectors the differential carries no constraint
      deg.trivial = (g.dim < 3) || deg.b2.size() == 0 || deg.b3.size() == 0;
      if (!deg.trivial) {
        Eigen::MatrixXd d23 = Eigen::MatrixXd(build_delta_matrix(g, deg.b2, deg.b3));
        deg.svd.compute(d23, Eigen::ComputeThinU | Eigen::ComputeThinV);
      }
      per_k_.push_back(std::move(deg));
    }
  }

  // orthogonal projection of a bivector onto ker(delta) slice by slice
  PolyMv project_to_kernel(const PolyMv& v) const {
    PolyMv out(v.dim(), 2, v.trunc_order());
    for (int k = 0; k < static_cast<int>(per_k_.size()); ++k) {
      const Deg& deg = per_k_[static_cast<size_t>(k)];
      Eigen::VectorXd w = gather(v, deg.b2, k);
      if (w.size() == 0 || w.norm() == 0) continue;
      Eigen::VectorXd proj = w;
      if (!deg.trivial && deg.svd.rank() > 0) {
        Eigen::MatrixXd vr = deg.svd.matrixV().leftCols(rank(deg));
        proj -= vr * (vr.transpose() * w);
      }
      scatter(out, deg.b2, proj);
    }
    return out;
  }

  // least-squares solve delta(H) = D on each slice of the trivector D
  PolyMv solve(const PolyMv& d) const {
    PolyMv out(d.dim(), 2, d.trunc_order());
    for (int k = 0; k < static_cast<int>(per_k_.size()); ++k) {
      const Deg& deg = per_k_[static_cast<size_t>(k)];
      if (deg.trivial) continue;
      Eigen::VectorXd w = gather(d, deg.b3, k);
      if (w.size() == 0 || w.norm() == 0) continue;
      Eigen::VectorXd h = deg.svd.solve(w);
      scatter(out, deg.b2, h);
    }
    return out;
  }

 private:
  struct Deg {
    SliceBasis b2, b3;
    bool trivial = true;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd;
  };

  static int rank(const Deg& deg) { return static_cast<int>(deg.svd.rank()); }

  static Eigen::VectorXd gather(const PolyMv& v, const SliceBasis& b, int k) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(b.size());
    for (const auto& [key, c] : v.terms())
      if (mono_degree(key.mono) == k) w(b.index.at(key)) = c;
    return w;
  }

  static void scatter(PolyMv& out, const SliceBasis& b, const Eigen::VectorXd& w) {
    for (int i = 0; i < w.size(); ++i)
      if (w(i) != 0.0)
        out.add_term(b.elems[static_cast<size_t>(i)].mask, b.elems[static_cast<size_t>(i)].mono,
                     w(i));
  }

  std::vector<Deg> per_k_;
};

}  // namespace

PolyMv generate_perturbation(const LieAlgebraSpec& g, const ExperimentConfig& cfg) {
  cfg.validate();
  DetRng rng(cfg.seed);
  PolyMv pi = linear_poisson<double>(g, cfg.trunc_order);

  if (cfg.kind == ExperimentConfig::Kind::exact) {
    PolyMv x = random_multivector(rng, g.dim, 1, cfg.trunc_order, cfg.min_degree,
                                  cfg.min_degree + 2, 0.4, 1.0);
    double top = x.max_abs_coeff();
    if (top > 0) x *= cfg.magnitude / top;
    return pullback(lie_series_flow(x), pi);
  }

  // random Poisson deformation: project onto the kernel of the linearized
  // Jacobi operator, then Newton-correct the quadratic defect
  PolyMv v = random_multivector(rng, g.dim, 2, cfg.trunc_order, cfg.min_degree,
                                cfg.min_degree + 2, 0.4, 1.0);
  double top = v.max_abs_coeff();
  if (top > 0) v *= cfg.magnitude / top;
  JacobiOperator op(g, cfg.trunc_order);
  PolyMv pt = pi + op.project_to_kernel(v);
  for (int it = 0; it < 50; ++it) {
    double defect = jacobi_defect(pt);
    if (defect <= 1e-12) return pt;
    PolyMv residual = schouten_bracket(pt, pt);
    PolyMv correction = op.solve(residual) * -0.5;
    if (correction.vanishing_order() < 2)
      throw GenerationError("perturbation generation produced a first-jet correction");
    pt += correction;
  }
  std::ostringstream os;
  os << "perturbation generation did not converge in 50 Newton iterations (defect "
     << jacobi_defect(pt) << ")";
  throw GenerationError(os.str());
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  LieAlgebraSpec g = load_algebra(cfg.algebra);
  PolyMv pi = linear_poisson<double>(g, cfg.trunc_order);

  PolyMv pt(g.dim, 2, cfg.trunc_order);
  if (!cfg.perturbation_file.empty()) {
    pt = polymv_from_json(nlohmann::json::parse(read_file(cfg.perturbation_file)));
    if (pt.dim() != g.dim || pt.trunc_order() != cfg.trunc_order)
      throw StructuralError("experiment: perturbation ring does not match the configuration");
  } else if (!cfg.rational) {
    pt = generate_perturbation(g, cfg);
  }

  RunConfig rc;
  rc.mode = cfg.mode;
  rc.smoothing = cfg.smoothing;
  rc.R = cfg.R;
  rc.r = cfg.r;
  rc.max_steps = cfg.max_steps;
  rc.norms = NormConfig{cfg.norm_samples, 0};

  ExperimentResult res;
  if (cfg.rational) {
    // exact pipeline; monitors and history are recorded in double precision
    RationalHomotopy rh = build_rational_homotopy(g, cfg.trunc_order);
    PolyMultivector<Rational> rpi = to_rational_mv(pi);
    PolyMultivector<Rational> rpt(g.dim, 2, cfg.trunc_order);
    if (!cfg.perturbation_file.empty()) {
      rpt = to_rational_mv(pt);
    } else if (cfg.kind == ExperimentConfig::Kind::exact) {
      // generate in exact arithmetic so the perturbation is exactly Poisson:
      // dyadic random coefficients, flow and pullback in rationals
      DetRng rng(cfg.seed);
      PolyMv xd = random_multivector(rng, g.dim, 1, cfg.trunc_order, cfg.min_degree,
                                     cfg.min_degree + 2, 0.4, 1.0);
      double top = xd.max_abs_coeff();
      PolyMultivector<Rational> x(g.dim, 1, cfg.trunc_order);
      for (const auto& [key, c] : xd.terms()) {
        long num = std::lround((top > 0 ? c * cfg.magnitude / top : 0.0) * 1048576.0);
        if (num != 0) x.add_term(key.mask, key.mono, Rational(num, 1048576));
      }
      rpt = pullback(lie_series_flow(x), rpi);
    } else {
      throw PreconditionError(
          "rational mode supports kind=exact or an explicit perturbation file; the "
          "random_poisson_deformation generator is a floating-point Newton iteration");
    }
    pt = to_double_mv(rpt);
    if (!schouten_bracket(rpt, rpt).is_zero() && jacobi_defect(pt) > rc.jacobi_tol)
      throw PreconditionError("experiment: perturbation is not Poisson");
    PolyMultivector<Rational> z = rpt - rpi;
    if (!z.is_zero() && z.vanishing_order() < 2)
      throw PreconditionError("experiment: first jets of pi and the perturbation differ");
    Schedule sched;
    bool have_schedule = false;
    if (!z.is_zero()) {
      sched = schedule_init(g.dim, tube_norm(to_double_mv(z), 7 * (g.dim / 2 + 5), cfg.R, rc.norms),
                            cfg.R, cfg.r);
      have_schedule = true;
    }
    PolyMultivector<Rational> pik = rpt;
    FormalDiffeo<Rational> psi = identity_diffeo<Rational>(g.dim, cfg.trunc_order);
    RunResult& rr = res.run;
    rr.schedule = sched;
    int k = 0;
    auto record = [&](const PolyMultivector<Rational>& zk) {
      StepRecord rec;
      rec.k = k;
      rec.r_k = have_schedule ? sched.r_at(k) : cfg.R;
      rec.t_k = have_schedule ? sched.t_at(k) : 0;
      rec.lowest_degree = zk.vanishing_order();
      PolyMv zd = to_double_mv(zk);
      rec.coeff_max = zd.max_abs_coeff();
      if (have_schedule) {
        rec.norm_s = tube_norm(zd, sched.s, rec.r_k, rc.norms);
        rec.norm_p = tube_norm(zd, sched.p, rec.r_k, rc.norms);
        MonitorReport rep = monitor(zd, to_double_diffeo(psi), sched, k, rc.norms);
        rec.a_k = rep.a_k;
        rec.b_k = rep.b_k;
        rec.continuity = rep.continuity;
      } else {
        rec.a_k = rec.b_k = true;
      }
      rec.jacobi = jacobi_defect(to_double_mv(pik));
      rr.history.push_back(rec);
    };
    record(z);
    while (!z.is_zero() && k < cfg.max_steps) {
      PolyMultivector<Rational> xk = homotopy_apply(rh, z);
      if (cfg.smoothing.mode != SmoothingConfig::Mode::none && have_schedule &&
          std::isfinite(sched.t_at(k))) {
        xk = (cfg.mode == ProcedureMode::p1)
                 ? smoothing_apply_first_order(xk, sched.t_at(k), cfg.smoothing)
                 : smoothing_apply(xk, sched.t_at(k), cfg.smoothing);
      }
      FormalDiffeo<Rational> flow = lie_series_flow(xk);
      pik = pullback(flow, pik);
      psi = compose(psi, flow);
      z = pik - rpi;
      ++k;
      record(z);
    }
    rr.converged = z.is_zero();
    rr.steps = k;
    rr.psi = to_double_diffeo(psi);
    rr.final_defect =
        rr.converged ? to_double_mv(pullback(psi, rpt) - rpi).max_abs_coeff() : 0.0;
    rr.message = rr.converged ? "exact convergence in the jet ring" : "not converged";
    res.exact_zero = rr.converged;
  } else {
    HomotopyOperators h = build_homotopy(g, cfg.trunc_order);
    res.run = run(pi, pt, h, rc);
  }

  if (!res.run.history.empty()) res.continuity_ratio = res.run.history.back().continuity;

  std::ostringstream os;
  os << "algebra=" << g.name << " converged=" << (res.run.converged ? 1 : 0)
     << " steps=" << res.run.steps << " final_defect=" << res.run.final_defect
     << " continuity=" << res.continuity_ratio;
  res.summary = os.str();

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    write_file(cfg.out_dir + "/history.csv", history_csv(res.run.history));
    nlohmann::json j = to_json(res.run);
    j["summary"] = res.summary;
    j["exact_zero"] = res.exact_zero;
    write_file(cfg.out_dir + "/result.json", j.dump(2) + "\n");
  }
  return res;
}

}  // namespace poislin
