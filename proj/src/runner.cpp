#include "thermotop/runner.hpp"

#include <fstream>
#include <iostream>
#include <memory>

namespace thermotop {

namespace {

using nlohmann::json;

// utopia/max bookkeeping for the scalarized temperature objective
struct Normalization {
  double j_av_utopia = 0, j_av_max = 0, j_vr_utopia = 0, j_vr_max = 0;

  double c4() const { return 1.0 / (j_av_max - j_av_utopia); }
  double c5() const { return 1.0 / (j_vr_max - j_vr_utopia); }
};

std::filesystem::path cache_path(const ProblemConfig& cfg) {
  std::filesystem::path p = cfg.utopia_cache.empty()
                                ? std::filesystem::path("utopia_cache.json")
                                : std::filesystem::path(cfg.utopia_cache);
  if (p.is_relative()) {
    OutputConfig out = cfg.output;
    if (const char* env = std::getenv("THERMOTOP_OUTPUT_DIR"))
      out.directory = env;
    p = std::filesystem::path(out.directory) / p;
  }
  return p;
}

bool load_cache(const std::filesystem::path& p, Normalization& n) {
  std::ifstream in(p);
  if (!in) return false;
  json j;
  in >> j;
  n.j_av_utopia = j.value("j_av_utopia", 0.0);
  n.j_av_max = j.value("j_av_max", 0.0);
  n.j_vr_utopia = j.value("j_vr_utopia", 0.0);
  n.j_vr_max = j.value("j_vr_max", 0.0);
  return true;
}

void save_cache(const std::filesystem::path& p, const Normalization& n) {
  std::filesystem::create_directories(p.parent_path());
  json j;
  j["j_av_utopia"] = n.j_av_utopia;
  j["j_av_max"] = n.j_av_max;
  j["j_vr_utopia"] = n.j_vr_utopia;
  j["j_vr_max"] = n.j_vr_max;
  std::ofstream out(p);
  out << j.dump(2) << "\n";
}

RunOutcome run_built(const ProblemConfig& cfg, const BuiltProblem& built,
                     std::ostream& log, bool emit_output,
                     const std::string& prefix) {
  FunctionalEngine engine(built.mesh, built.material, built.functional);
  RunContext ctx(built.mesh, built.material, engine, cfg.optimizer);

  RunOutcome outcome;
  std::unique_ptr<SnapshotWriter> writer;
  if (emit_output)
    writer = std::make_unique<SnapshotWriter>(built.mesh, cfg.output, prefix);

  auto on_step = [&](const StepResult& step) {
    log << "  t=" << step.t << "  cost=" << step.cost
        << "  lambda=" << step.lambda << "  iters=" << step.outer_iters
        << "  |C|=" << std::abs(step.constraint_residual)
        << (step.converged ? "" : "  [not converged]") << "\n";
    if (writer) writer->on_step(step);
  };

  outcome.steps = cfg.method == Method::LevelSet
                      ? run_levelset(ctx, cfg.levelset, on_step)
                      : run_schedule(ctx, on_step);
  for (const auto& s : outcome.steps) outcome.total_iterations += s.outer_iters;
  if (writer) outcome.output_dir = writer->directory();
  return outcome;
}

// resolve C4/C5 for a temp_multi run with omega strictly inside (0,1):
// use the cached endpoint values or produce them by running omega = 1 and
// omega = 0 first
Normalization resolve_normalization(const ProblemConfig& cfg,
                                    const BuiltProblem& built,
                                    std::ostream& log) {
  Normalization n;
  const auto path = cache_path(cfg);
  if (load_cache(path, n)) {
    log << "using cached normalization from " << path << "\n";
    return n;
  }
  log << "normalization cache missing, running the endpoint problems\n";

  ProblemConfig sub = cfg;
  sub.functional.omega = 1.0;
  sub.functional.c4 = 1.0;
  sub.functional.c5 = 1.0;
  BuiltProblem b1 = built;
  b1.functional = sub.functional;
  RunOutcome avg = run_built(sub, b1, log, false, "omega1");

  sub.functional.omega = 0.0;
  b1.functional = sub.functional;
  RunOutcome var = run_built(sub, b1, log, false, "omega0");

  // scan both histories: the average typically peaks at the first iterate
  // (the full-material state), the utopia values sit at the schedule end
  n.j_av_utopia = avg.steps.back().j_av;
  n.j_vr_utopia = var.steps.back().j_vr;
  n.j_av_max = n.j_av_utopia;
  n.j_vr_max = n.j_vr_utopia;
  for (const auto* run : {&avg, &var})
    for (const auto& s : run->steps) {
      n.j_av_max = std::max(n.j_av_max, s.j_av);
      n.j_vr_max = std::max(n.j_vr_max, s.j_vr);
      n.j_av_utopia = std::min(n.j_av_utopia, s.j_av);
    }
  // the variance utopia is approximated as 0 when the endpoint run cannot
  // improve on it
  if (!(n.j_vr_utopia < n.j_vr_max)) n.j_vr_utopia = 0.0;
  save_cache(path, n);
  log << "cached normalization to " << path << "\n";
  return n;
}

}  // namespace

BuiltProblem BuiltProblem::build(const ProblemConfig& cfg) {
  BuiltProblem b{Mesh::build(cfg.mesh.dims, cfg.mesh.spacing, cfg.mesh.dim,
                             cfg.mesh.regions, cfg.bcs),
                 MaterialModel{cfg.materials}, cfg.functional};
  b.material.validate();
  return b;
}

RunOutcome run_problem(const ProblemConfig& cfg, std::ostream& log,
                       bool emit_output) {
  BuiltProblem built = BuiltProblem::build(cfg);

  ProblemConfig effective = cfg;
  if (cfg.functional.kind == FunctionalKind::TempMulti &&
      cfg.functional.omega > 0.0 && cfg.functional.omega < 1.0) {
    Normalization n = resolve_normalization(cfg, built, log);
    effective.functional.c4 = n.c4();
    effective.functional.c5 = n.c5();
    built.functional = effective.functional;
    log << "normalization: C4=" << effective.functional.c4
        << " C5=" << effective.functional.c5 << "\n";
  }

  return run_built(effective, built, log, emit_output, "step");
}

std::vector<RunOutcome> sweep_omega(const ProblemConfig& cfg,
                                    const std::vector<double>& values,
                                    std::ostream& log) {
  if (cfg.functional.kind != FunctionalKind::TempMulti)
    throw ConfigError({"sweep-omega requires a temp_multi functional"});
  BuiltProblem built = BuiltProblem::build(cfg);

  Normalization n = resolve_normalization(cfg, built, log);

  std::vector<RunOutcome> runs;
  for (double w : values) {
    log << "omega = " << w << "\n";
    ProblemConfig sub = cfg;
    sub.functional.omega = w;
    sub.functional.c4 = n.c4();
    sub.functional.c5 = n.c5();
    BuiltProblem b = built;
    b.functional = sub.functional;
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "omega_%g", w);
    runs.push_back(run_built(sub, b, log, true, prefix));
  }
  return runs;
}

CompareOutcome compare_methods(const ProblemConfig& cfg, std::ostream& log) {
  CompareOutcome out;
  ProblemConfig cf = cfg;
  cf.method = Method::ClosedForm;
  log << "closed-form run:\n";
  BuiltProblem built = BuiltProblem::build(cf);
  out.closed_form = run_built(cf, built, log, true, "closedform");

  ProblemConfig ls = cfg;
  ls.method = Method::LevelSet;
  log << "level-set run:\n";
  out.levelset = run_built(ls, built, log, true, "levelset");

  out.iteration_ratio = out.closed_form.total_iterations > 0
                            ? double(out.levelset.total_iterations) /
                                  out.closed_form.total_iterations
                            : 0.0;
  log << "cumulative iterations: closed-form="
      << out.closed_form.total_iterations
      << " levelset=" << out.levelset.total_iterations
      << " ratio=" << out.iteration_ratio << "\n";
  return out;
}

}  // namespace thermotop
