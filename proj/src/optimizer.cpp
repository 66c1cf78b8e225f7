#include "thermotop/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>

namespace thermotop {

Eigen::VectorXd shift_normalize(const Eigen::VectorXd& xi_nodal,
                                const Eigen::VectorXd& psi_prev,
                                const std::vector<uint8_t>& node_optimizable,
                                ShiftReference& ref) {
  if (!ref.valid) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < xi_nodal.size(); ++i) {
      if (!node_optimizable[i]) continue;
      lo = std::min(lo, xi_nodal[i]);
      hi = std::max(hi, xi_nodal[i]);
    }
    ref.shift = std::isfinite(lo) ? lo : 0.0;
    ref.norm = hi - lo;
    // a uniform field (exactly, or to roundoff) has no usable range
    const double scale = std::max(std::abs(lo), std::abs(hi));
    if (!(ref.norm > 1e-12 * scale) || !(ref.norm > 0.0)) {
      std::cerr << "warning: uniform pseudo-energy field, normalization "
                   "range set to 1\n";
      ref.norm = 1.0;
    }
    ref.valid = true;
  }
  Eigen::VectorXd out(xi_nodal.size());
  for (int i = 0; i < xi_nodal.size(); ++i) {
    const bool hard_side = psi_prev[i] >= 0.0;
    out[i] = hard_side ? (xi_nodal[i] - ref.shift) / ref.norm
                       : xi_nodal[i] / ref.norm;
  }
  return out;
}

FeasibleRange feasible_volume_range(const Mesh& mesh, const MaterialModel& mat) {
  FeasibleRange r;
  int frozen_soft = 0, optimizable = 0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& rm = mat.region(mesh.element_region(e));
    if (rm.optimizable)
      ++optimizable;
    else if (rm.fixed_phase == Phase::Soft)
      ++frozen_soft;
  }
  r.frozen_soft = double(frozen_soft) / mesh.n_elements();
  r.optimizable = double(optimizable) / mesh.n_elements();
  return r;
}

CutResult cut_and_bisect(const Mesh& mesh, const MaterialModel& material,
                         const CharacteristicField& chi_prev,
                         const Eigen::VectorXd& xi_hat, double target_t,
                         const OptimizerConfig& cfg,
                         std::optional<double> lambda_hint) {
  if (!(target_t >= 0.0 && target_t < 1.0))
    throw std::invalid_argument("cut_and_bisect: target volume outside [0,1)");

  const auto range = feasible_volume_range(mesh, material);
  if (target_t < range.frozen_soft - cfg.tol_c ||
      target_t > range.frozen_soft + range.optimizable + cfg.tol_c)
    throw NumericalError(
        "cut_and_bisect: volume target is outside the achievable range given "
        "the frozen regions");

  // node phases follow psi = xi_hat - lambda, so the soft volume is
  // non-decreasing in lambda and [min xi, max xi] brackets the root
  std::vector<uint8_t> node_opt(mesh.n_nodes(), 0);
  for (int e = 0; e < mesh.n_elements(); ++e)
    if (material.region(mesh.element_region(e)).optimizable)
      for (int a = 0; a < mesh.nodes_per_element(); ++a)
        node_opt[mesh.element_nodes(e)[a]] = 1;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < xi_hat.size(); ++i) {
    if (!node_opt[i]) continue;
    if (!std::isfinite(xi_hat[i]))
      throw NumericalError("cut_and_bisect: non-finite pseudo-energy");
    lo = std::min(lo, xi_hat[i]);
    hi = std::max(hi, xi_hat[i]);
  }
  const double pad = 1e-3 * std::max(hi - lo, 1e-30);
  lo -= pad;
  hi += pad;

  CutResult res;
  DiscriminationField psi;
  psi.psi.resize(xi_hat.size());
  auto eval_cut = [&](double lambda) {
    psi.psi = xi_hat.array() - lambda;
    res.chi = chi_from_psi(mesh, material, psi, chi_prev);
    res.volumes =
        marching_volume(mesh, material, res.chi, psi.psi, cfg.marching_subdiv);
    const double soft = res.volumes.soft_volume / mesh.total_volume();
    res.constraint = target_t - soft;
    ++res.iterations;
    return soft;
  };

  // the all-hard cut is exact when the target only covers the frozen soft
  // volume (t = 0 in particular): lambda at the field minimum, no bisection
  eval_cut(lo);
  if (std::abs(res.constraint) <= cfg.tol_c) {
    res.lambda = lo;
    res.psi = psi;
    return res;
  }

  // a previous multiplier that already satisfies the constraint is a root;
  // accepting it keeps converged iterates exact fixed points
  if (lambda_hint && *lambda_hint >= lo && *lambda_hint <= hi) {
    eval_cut(*lambda_hint);
    if (std::abs(res.constraint) <= cfg.tol_c) {
      res.lambda = *lambda_hint;
      res.psi = psi;
      return res;
    }
  }

  for (int it = 0; it < cfg.max_bisection_iters; ++it) {
    const double lambda = 0.5 * (lo + hi);
    const double soft = eval_cut(lambda);
    if (std::abs(res.constraint) <= cfg.tol_c) {
      res.lambda = lambda;
      res.psi = psi;
      return res;
    }
    if (soft < target_t)
      lo = lambda;  // need more soft volume -> raise the cut
    else
      hi = lambda;
  }
  throw NumericalError("cut_and_bisect: iteration cap exceeded, residual " +
                       std::to_string(res.constraint));
}

RunContext::RunContext(const Mesh& m, const MaterialModel& mat,
                       FunctionalEngine& eng, OptimizerConfig c)
    : mesh(m),
      material(mat),
      engine(eng),
      cfg(std::move(c)),
      smoother(m, cfg.tau),
      chi(CharacteristicField::initial(m, mat)),
      node_optimizable(m.n_nodes(), 0) {
  psi.psi = Eigen::VectorXd::Ones(m.n_nodes());
  for (int e = 0; e < m.n_elements(); ++e)
    if (mat.region(m.element_region(e)).optimizable)
      for (int a = 0; a < m.nodes_per_element(); ++a)
        node_optimizable[m.element_nodes(e)[a]] = 1;
}

StepResult run_step(RunContext& ctx, double t) {
  StepResult step;
  step.t = t;

  // the previous step's multiplier seeds the cross-iteration criterion
  std::optional<double> lambda_prev = ctx.last_lambda;
  FunctionalEngine::Eval ev;
  DiscreteSystem sys;
  Eigen::VectorXd theta1;

  for (int outer = 0; outer < ctx.cfg.max_outer_iters; ++outer) {
    sys = assemble(ctx.mesh, ctx.material, ctx.chi, ctx.mesh.boundary_spec());
    theta1 = solve(sys, ctx.solver, sys.f, false);
    ev = ctx.engine.evaluate(sys, ctx.solver, ctx.chi, theta1);
    step.outer_iters = outer + 1;

    if (ev.skip_update) {
      step.converged = true;
      break;
    }

    Eigen::VectorXd xi_nodal = ctx.smoother.smooth(ev.xi.xi, ev.xi.frozen);
    step.xi_hat =
        shift_normalize(xi_nodal, ctx.psi.psi, ctx.node_optimizable, ctx.ref);

    CutResult cut = cut_and_bisect(ctx.mesh, ctx.material, ctx.chi, step.xi_hat,
                                   t, ctx.cfg, ctx.last_lambda);
    step.bisection_iters += cut.iterations;

    int changed = 0;
    for (int e = 0; e < ctx.mesh.n_elements(); ++e)
      changed += (cut.chi.flags[e] != ctx.chi.flags[e]);
    const double changed_volume = double(changed) / ctx.mesh.n_elements();

    const bool lambda_ok =
        !lambda_prev.has_value() ||
        std::abs(cut.lambda - *lambda_prev) /
                std::max(std::abs(*lambda_prev), 1.0) <=
            ctx.cfg.tol_lambda;

    if (changed_volume <= ctx.cfg.tol_chi && lambda_ok) {
      // when the standing topology already meets the volume target, keep it
      // instead of applying the candidate: converged iterates are then exact
      // fixed points of the update
      VolumeFractions standing = marching_volume(
          ctx.mesh, ctx.material, ctx.chi, ctx.psi.psi, ctx.cfg.marching_subdiv);
      const double c_standing =
          t - standing.soft_volume / ctx.mesh.total_volume();
      if (std::abs(c_standing) <= ctx.cfg.tol_c) {
        ctx.last_lambda = cut.lambda;
        step.lambda = cut.lambda;
        step.constraint_residual = c_standing;
        step.hard_fraction = standing.fraction;
        step.converged = true;
        break;
      }
      ctx.chi = cut.chi;
      ctx.psi = cut.psi;
      ctx.last_lambda = cut.lambda;
      step.lambda = cut.lambda;
      step.constraint_residual = cut.constraint;
      step.hard_fraction = cut.volumes.fraction;
      step.converged = true;
      break;
    }

    ctx.chi = cut.chi;
    ctx.psi = cut.psi;
    ctx.last_lambda = cut.lambda;
    lambda_prev = cut.lambda;
    step.lambda = cut.lambda;
    step.constraint_residual = cut.constraint;
    step.hard_fraction = cut.volumes.fraction;
  }

  if (!step.converged && !ev.skip_update)
    std::cerr << "warning: step t=" << t << " hit the outer iteration cap ("
              << ctx.cfg.max_outer_iters << "), continuing\n";

  // re-solve at the final topology so the recorded cost and fields match it
  sys = assemble(ctx.mesh, ctx.material, ctx.chi, ctx.mesh.boundary_spec());
  theta1 = solve(sys, ctx.solver, sys.f, false);
  ev = ctx.engine.evaluate(sys, ctx.solver, ctx.chi, theta1);

  step.cost = ev.cost;
  step.j_av = ev.j_av;
  step.j_vr = ev.j_vr;
  step.chi = ctx.chi;
  step.psi = ctx.psi.psi;
  step.theta1 = theta1;
  step.theta2 = ev.theta2;
  step.theta3 = ev.theta3;
  if (step.xi_hat.size() == 0)
    step.xi_hat = Eigen::VectorXd::Zero(ctx.mesh.n_nodes());
  if (step.hard_fraction.empty())
    step.hard_fraction =
        marching_volume(ctx.mesh, ctx.material, ctx.chi, ctx.psi.psi,
                        ctx.cfg.marching_subdiv)
            .fraction;
  return step;
}

std::vector<StepResult> run_schedule(RunContext& ctx, const StepCallback& on_step) {
  std::vector<StepResult> results;
  for (double t : ctx.cfg.time_grid) {
    StepResult step = run_step(ctx, t);
    if (on_step) on_step(step);
    results.push_back(std::move(step));
  }
  return results;
}

}  // namespace thermotop
