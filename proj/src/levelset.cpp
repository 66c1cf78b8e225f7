#include "thermotop/levelset.hpp"

#include <cmath>
#include <iostream>

namespace thermotop {

LevelSetState levelset_step(const LevelSetState& state,
                            const Eigen::VectorXd& sensitivity,
                            const Eigen::VectorXd& exchange,
                            const std::vector<uint8_t>& node_optimizable,
                            double constraint_value) {
  LevelSetState next = state;
  for (int i = 0; i < state.phi.size(); ++i) {
    if (!node_optimizable[i]) continue;
    next.phi[i] =
        state.phi[i] - (state.delta_t / exchange[i]) * sensitivity[i];
  }
  next.lambda = state.lambda + state.rho * constraint_value;
  return next;
}

std::vector<StepResult> run_levelset(RunContext& ctx, const LevelSetParams& params,
                                     const StepCallback& on_step) {
  std::vector<StepResult> results;

  LevelSetState state;
  state.phi = Eigen::VectorXd::Ones(ctx.mesh.n_nodes());
  state.delta_t = params.delta_t;
  state.rho = params.rho;

  // per-node relaxation factor of the adjacent design region (the exchange
  // function magnitude); non-design nodes keep the global default
  Eigen::VectorXd beta_node =
      Eigen::VectorXd::Constant(ctx.mesh.n_nodes(), 0.5);
  for (int e = 0; e < ctx.mesh.n_elements(); ++e) {
    const auto& rm = ctx.material.region(ctx.mesh.element_region(e));
    if (!rm.optimizable) continue;
    for (int a = 0; a < ctx.mesh.nodes_per_element(); ++a)
      beta_node[ctx.mesh.element_nodes(e)[a]] = rm.beta_kappa();
  }

  for (double t : ctx.cfg.time_grid) {
    StepResult step;
    step.t = t;

    double constraint = 0.0;
    VolumeFractions volumes;
    for (int it = 0; it < params.max_iters_per_step; ++it) {
      DiscreteSystem sys =
          assemble(ctx.mesh, ctx.material, ctx.chi, ctx.mesh.boundary_spec());
      Eigen::VectorXd theta1 = solve(sys, ctx.solver, sys.f, false);
      auto ev = ctx.engine.evaluate(sys, ctx.solver, ctx.chi, theta1);
      step.outer_iters = it + 1;

      if (!std::isfinite(ev.cost))
        throw NumericalError("run_levelset: cost diverged (non-finite)");

      Eigen::VectorXd xi_nodal = ctx.smoother.smooth(ev.xi.xi, ev.xi.frozen);
      step.xi_hat =
          shift_normalize(xi_nodal, state.phi, ctx.node_optimizable, ctx.ref);

      volumes = marching_volume(ctx.mesh, ctx.material, ctx.chi, state.phi,
                                ctx.cfg.marching_subdiv);
      constraint = t - volumes.soft_volume / ctx.mesh.total_volume();

      // dL/dchi with the phase-consistent sign: -sgn(Delta_chi)(xi - lambda),
      // so the update drives phi toward sign(xi - lambda) on both phases
      Eigen::VectorXd sens(ctx.mesh.n_nodes());
      Eigen::VectorXd exch(ctx.mesh.n_nodes());
      for (int i = 0; i < ctx.mesh.n_nodes(); ++i) {
        const Phase phase = state.phi[i] >= 0 ? Phase::Hard : Phase::Soft;
        exch[i] = exchange_function(phase, beta_node[i]);
        const double sgn = phase == Phase::Hard ? -1.0 : 1.0;
        sens[i] = -sgn * (step.xi_hat[i] - state.lambda);
      }
      state = levelset_step(state, sens, exch, ctx.node_optimizable, constraint);

      CharacteristicField chi_new =
          chi_from_psi(ctx.mesh, ctx.material, {state.phi}, ctx.chi);
      int changed = 0;
      for (int e = 0; e < ctx.mesh.n_elements(); ++e)
        changed += (chi_new.flags[e] != ctx.chi.flags[e]);
      const double changed_volume = double(changed) / ctx.mesh.n_elements();
      ctx.chi = chi_new;
      ctx.psi.psi = state.phi;

      volumes = marching_volume(ctx.mesh, ctx.material, ctx.chi, state.phi,
                                ctx.cfg.marching_subdiv);
      constraint = t - volumes.soft_volume / ctx.mesh.total_volume();
      if (std::abs(constraint) <= ctx.cfg.tol_c &&
          changed_volume <= ctx.cfg.tol_chi) {
        step.converged = true;
        break;
      }
    }
    if (!step.converged)
      std::cerr << "warning: level-set step t=" << t
                << " hit the iteration cap, continuing\n";

    DiscreteSystem sys =
        assemble(ctx.mesh, ctx.material, ctx.chi, ctx.mesh.boundary_spec());
    Eigen::VectorXd theta1 = solve(sys, ctx.solver, sys.f, false);
    auto ev = ctx.engine.evaluate(sys, ctx.solver, ctx.chi, theta1);

    step.cost = ev.cost;
    step.j_av = ev.j_av;
    step.j_vr = ev.j_vr;
    step.lambda = state.lambda;
    step.constraint_residual = constraint;
    step.chi = ctx.chi;
    step.psi = state.phi;
    step.theta1 = theta1;
    step.theta2 = ev.theta2;
    step.theta3 = ev.theta3;
    step.hard_fraction = volumes.fraction;
    if (step.xi_hat.size() == 0)
      step.xi_hat = Eigen::VectorXd::Zero(ctx.mesh.n_nodes());
    if (on_step) on_step(step);
    results.push_back(std::move(step));
  }
  return results;
}

}  // namespace thermotop
