// Run orchestration on top of a parsed configuration: mesh/material
// construction, temperature-cloaking normalization bootstrap (the omega = 1
// and omega = 0 endpoint runs with cached utopia/max values), method
// dispatch and result emission.
#pragma once

#include <iosfwd>

#include "thermotop/io.hpp"

namespace thermotop {

struct RunOutcome {
  std::vector<StepResult> steps;
  std::filesystem::path output_dir;
  int total_iterations = 0;
};

struct BuiltProblem {
  Mesh mesh;
  MaterialModel material;
  FunctionalSpec functional;

  static BuiltProblem build(const ProblemConfig& cfg);
};

RunOutcome run_problem(const ProblemConfig& cfg, std::ostream& log,
                       bool emit_output = true);

// Pareto-front inputs: runs omega = 1 and omega = 0 first (feeding the
// normalization cache), then each requested weight.
std::vector<RunOutcome> sweep_omega(const ProblemConfig& cfg,
                                    const std::vector<double>& values,
                                    std::ostream& log);

struct CompareOutcome {
  RunOutcome closed_form;
  RunOutcome levelset;
  double iteration_ratio = 0.0;  // levelset / closed-form
};
CompareOutcome compare_methods(const ProblemConfig& cfg, std::ostream& log);

}  // namespace thermotop
