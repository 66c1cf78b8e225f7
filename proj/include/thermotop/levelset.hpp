// Hamilton-Jacobi-style level-set update driven by the same regularized
// pseudo-energy as the closed-form method, with an augmented-Lagrangian
// multiplier enforcing the pseudo-time volume constraint. Serves as the
// comparison baseline: same schedule, same tolerances, iteration counts
// recorded per step.
#pragma once

#include "thermotop/optimizer.hpp"

namespace thermotop {

struct LevelSetParams {
  double delta_t = 1e-1;
  double rho = 5e-2;
  int max_iters_per_step = 2000;
};

struct LevelSetState {
  Eigen::VectorXd phi;  // nodal level-set function
  double lambda = 0.0;
  double delta_t = 1e-1;
  double rho = 5e-2;
};

// phi update per the iterative scheme:
//   phi <- phi - (dt / exchange) * sensitivity   (optimizable nodes)
//   lambda <- lambda + rho * constraint_value
// sensitivity = dL/dchi and exchange = Delta_chi are nodal inputs.
LevelSetState levelset_step(const LevelSetState& state,
                            const Eigen::VectorXd& sensitivity,
                            const Eigen::VectorXd& exchange,
                            const std::vector<uint8_t>& node_optimizable,
                            double constraint_value);

std::vector<StepResult> run_levelset(RunContext& ctx, const LevelSetParams& params,
                                     const StepCallback& on_step = {});

}  // namespace thermotop
