// Command-line runner: linearization experiments, stability checks,
// cohomology diagnostics and tame-estimate measurement tables.

#include <CLI11.hpp>
#include <iostream>

#include "poislin/experiment.hpp"
#include "poislin/io.hpp"

using namespace poislin;

namespace {

int run_stability(const std::string& path) {
  FoliationData data = foliation_from_json(nlohmann::json::parse(read_file(path)));
  StabilityReport rep = check_conditions(data);
  nlohmann::json j = to_json(rep);
  j["h2_AS_dim"] = h2_AS_kernel_dim(data);
  std::cout << j.dump(2) << "\n";
  return 0;
}

int run_cohomology_dump(const std::string& algebra, int trunc, const std::string& path) {
  LieAlgebraSpec g = load_algebra(algebra);
  auto diags = cohomology_diagnostics(g, trunc, 1, 2);
  write_file(path, diagnostics_json(diags).dump(2) + "\n");
  std::cout << "wrote " << diags.size() << " slice diagnostics to " << path << "\n";
  return 0;
}

int run_tame_report(const std::string& dir, std::uint64_t seed, int count) {
  std::filesystem::create_directories(dir);
  for (TameKind kind : {TameKind::bracket, TameKind::flow, TameKind::pullback1,
                        TameKind::pullback2, TameKind::pullback3}) {
    TameSampleSpec spec;
    spec.count = count;
    spec.seed = seed;
    auto rows = tame_ratio_report(kind, spec);
    write_file(dir + "/tame_" + tame_kind_name(kind) + ".csv", tame_csv(rows));
  }
  std::cout << "wrote tame estimate tables to " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linearization engine for polynomial Poisson structures at a fixed point"};

  ExperimentConfig cfg;
  std::string kind = "exact";
  std::string mode = "p1";
  std::string smoothing = "none";
  std::string radii = "0.9,0.5";
  std::string stability_file;
  std::string cohomology_dump;
  std::string tame_dir;
  int tame_count = 200;

  app.add_option("--algebra", cfg.algebra, "built-in algebra name or JSON file")
      ->capture_default_str();
  app.add_option("--perturbation", cfg.perturbation_file, "bivector JSON file to linearize");
  app.add_option("--kind", kind, "perturbation generator: exact|random_poisson_deformation")
      ->capture_default_str();
  app.add_option("--min-degree", cfg.min_degree, "lowest perturbation degree (>= 2)")
      ->capture_default_str();
  app.add_option("--magnitude", cfg.magnitude, "perturbation size")->capture_default_str();
  app.add_option("--seed", cfg.seed, "generator seed")->capture_default_str();
  app.add_option("--trunc-order", cfg.trunc_order, "jet truncation order")->capture_default_str();
  app.add_option("--mode", mode, "procedure mode: p1|p0")->capture_default_str();
  app.add_option("--smoothing", smoothing, "smoothing: none|degree_truncation")
      ->capture_default_str();
  app.add_option("--radii", radii, "outer and inner radii R,r")->capture_default_str();
  app.add_option("--out", cfg.out_dir, "output directory for history.csv and result.json");
  app.add_flag("--rational", cfg.rational, "exact arithmetic mode");
  app.add_option("--max-steps", cfg.max_steps, "iteration cap")->capture_default_str();
  app.add_option("--norm-samples", cfg.norm_samples, "sample count for tube norms")
      ->capture_default_str();
  app.add_option("--stability", stability_file, "check a foliation-data JSON file and exit");
  app.add_option("--cohomology-dump", cohomology_dump,
                 "write per-slice cohomology diagnostics JSON and exit");
  app.add_option("--tame-report", tame_dir, "write tame-estimate CSV tables and exit");
  app.add_option("--tame-count", tame_count, "sample count for --tame-report")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!stability_file.empty()) return run_stability(stability_file);
    if (!cohomology_dump.empty())
      return run_cohomology_dump(cfg.algebra, cfg.trunc_order, cohomology_dump);
    if (!tame_dir.empty()) return run_tame_report(tame_dir, cfg.seed, tame_count);

    if (kind == "exact")
      cfg.kind = ExperimentConfig::Kind::exact;
    else if (kind == "random_poisson_deformation")
      cfg.kind = ExperimentConfig::Kind::random_poisson_deformation;
    else
      throw PreconditionError("unknown --kind: " + kind);

    if (mode == "p1")
      cfg.mode = ProcedureMode::p1;
    else if (mode == "p0")
      cfg.mode = ProcedureMode::p0;
    else
      throw PreconditionError("unknown --mode: " + mode);

    if (smoothing == "none")
      cfg.smoothing.mode = SmoothingConfig::Mode::none;
    else if (smoothing == "degree_truncation")
      cfg.smoothing.mode = SmoothingConfig::Mode::degree_truncation;
    else
      throw PreconditionError("unknown --smoothing: " + smoothing);
    cfg.smoothing.first_jet_preserving = (cfg.mode == ProcedureMode::p1);

    auto comma = radii.find(',');
    if (comma == std::string::npos)
      throw PreconditionError("--radii expects the form R,r");
    cfg.R = std::stod(radii.substr(0, comma));
    cfg.r = std::stod(radii.substr(comma + 1));

    ExperimentResult res = run_experiment(cfg);
    std::cout << res.summary << "\n";
    return res.run.converged ? 0 : 1;
  } catch (const std::exception& e) {
    nlohmann::json diag = {{"error", e.what()}};
    std::cerr << diag.dump() << "\n";
    return 2;
  }
}
