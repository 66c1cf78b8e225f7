// Closed-form optimality iteration: shifting/normalization of the smoothed
// pseudo-energy, Cutting&Bisection root finding on the Lagrange multiplier
// against the pseudo-time volume target, and the outer fixed-point loop
// over the pseudo-time schedule.
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "thermotop/functionals.hpp"
#include "thermotop/marching.hpp"
#include "thermotop/smoothing.hpp"

namespace thermotop {

struct OptimizerConfig {
  std::vector<double> time_grid;  // strictly increasing, in [0,1)
  double tol_chi = 1e-1;
  double tol_lambda = 1e-1;
  double tol_c = 1e-3;
  int max_outer_iters = 50;
  int max_bisection_iters = 200;
  double tau = 1.0;
  int marching_subdiv = kMarchingSubdivFast;
};

// Shifting reference captured at t = 0 (minimum and range of the first
// smoothed field over optimizable nodes) and reused for the whole run.
struct ShiftReference {
  double shift = 0.0;
  double norm = 1.0;
  bool valid = false;
};

// Box mapping: (xi - shift)/norm on Omega+ nodes, xi/norm on Omega- nodes;
// node phase taken from the sign of the previous discrimination field.
Eigen::VectorXd shift_normalize(const Eigen::VectorXd& xi_nodal,
                                const Eigen::VectorXd& psi_prev,
                                const std::vector<uint8_t>& node_optimizable,
                                ShiftReference& ref);

struct CutResult {
  double lambda = 0.0;
  int iterations = 0;
  double constraint = 0.0;  // t - |Omega-|/|Omega|
  DiscriminationField psi;
  CharacteristicField chi;
  VolumeFractions volumes;
};

CutResult cut_and_bisect(const Mesh& mesh, const MaterialModel& material,
                         const CharacteristicField& chi_prev,
                         const Eigen::VectorXd& xi_hat, double target_t,
                         const OptimizerConfig& cfg,
                         std::optional<double> lambda_hint = {});

struct StepResult {
  double t = 0.0;
  double cost = 0.0;
  double lambda = 0.0;
  int outer_iters = 0;
  int bisection_iters = 0;
  double constraint_residual = 0.0;
  bool converged = false;
  double j_av = 0.0, j_vr = 0.0;
  CharacteristicField chi;
  Eigen::VectorXd psi;
  Eigen::VectorXd xi_hat;
  Eigen::VectorXd theta1;
  std::optional<Eigen::VectorXd> theta2, theta3;
  std::vector<double> hard_fraction;
};

// Mutable run state threaded through the pseudo-time schedule.
struct RunContext {
  const Mesh& mesh;
  const MaterialModel& material;
  FunctionalEngine& engine;
  OptimizerConfig cfg;
  Smoother smoother;
  SolverContext solver;
  ShiftReference ref;
  CharacteristicField chi;
  DiscriminationField psi;
  std::vector<uint8_t> node_optimizable;
  std::optional<double> last_lambda;

  RunContext(const Mesh& m, const MaterialModel& mat, FunctionalEngine& eng,
             OptimizerConfig c);
};

StepResult run_step(RunContext& ctx, double t);

using StepCallback = std::function<void(const StepResult&)>;
std::vector<StepResult> run_schedule(RunContext& ctx,
                                     const StepCallback& on_step = {});

// fraction of the domain volume available to the cut / held soft by frozen
// regions; used to reject infeasible volume targets
struct FeasibleRange {
  double frozen_soft = 0.0;
  double optimizable = 0.0;
};
FeasibleRange feasible_volume_range(const Mesh& mesh, const MaterialModel& mat);

}  // namespace thermotop
