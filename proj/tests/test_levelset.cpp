#include <doctest.h>

#include "thermotop/levelset.hpp"

using namespace thermotop;

namespace {
BoundarySpecEntry dirichlet(int axis, int side, double value) {
  BoundarySpecEntry e;
  e.where.axis = axis;
  e.where.side = side;
  e.kind = BoundaryKind::Dirichlet;
  e.value = value;
  return e;
}

BoundarySpecEntry patch(int axis, int side, double value, double y, double r) {
  BoundarySpecEntry e = dirichlet(axis, side, value);
  e.where.disc_center = Vec3(side == 0 ? 0.0 : 1.0, y, 0.0);
  e.where.disc_radius = r;
  return e;
}
}  // namespace

TEST_CASE("level-set step arithmetic") {
  LevelSetState s;
  s.phi = Eigen::VectorXd::Ones(1);
  s.delta_t = 0.1;
  s.rho = 5e-2;
  std::vector<uint8_t> opt = {1};

  Eigen::VectorXd sens = Eigen::VectorXd::Constant(1, 1.5);
  Eigen::VectorXd exch = Eigen::VectorXd::Constant(1, -0.75);
  LevelSetState next = levelset_step(s, sens, exch, opt, 0.0);
  CHECK(next.phi[0] == doctest::Approx(1.2).epsilon(1e-14));
  CHECK(next.lambda == s.lambda);  // zero constraint leaves lambda alone

  // zero sensitivity leaves phi alone
  next = levelset_step(s, Eigen::VectorXd::Zero(1), exch, opt, 0.02);
  CHECK(next.phi[0] == 1.0);
  CHECK(next.lambda == doctest::Approx(s.lambda + 5e-2 * 0.02));

  // non-optimizable nodes are untouched
  std::vector<uint8_t> frozen = {0};
  next = levelset_step(s, sens, exch, frozen, 0.0);
  CHECK(next.phi[0] == 1.0);
}

TEST_CASE("level-set run matches the closed-form volume schedule") {
  std::vector<BoundarySpecEntry> bcs{patch(0, 0, 1.0, 0.5, 0.15),
                                     patch(0, 1, 0.0, 0.5, 0.12)};
  Mesh mesh = Mesh::build({24, 12, 1}, {0.5 / 12, 1.0 / 12, 1}, 2, {}, bcs);
  MaterialModel mat;
  mat.regions = {RegionMaterial{}};
  FunctionalSpec spec;
  spec.kind = FunctionalKind::Compliance;

  OptimizerConfig cfg;
  cfg.tau = 0.5;
  for (int k = 1; k <= 4; ++k) cfg.time_grid.push_back(0.4 * k / 4.0);

  LevelSetParams params;  // paper defaults dt = 1e-1, rho = 5e-2

  FunctionalEngine engine_ls(mesh, mat, spec);
  RunContext ls_ctx(mesh, mat, engine_ls, cfg);
  auto ls_steps = run_levelset(ls_ctx, params);
  REQUIRE(ls_steps.size() == 4);
  int ls_total = 0;
  for (const auto& s : ls_steps) {
    CHECK(s.converged);
    CHECK(std::abs(s.constraint_residual) <= cfg.tol_c);
    ls_total += s.outer_iters;
    // the relaxed Heaviside keeps chi bi-valued
    for (auto f : s.chi.flags)
      CHECK((f == Phase::Hard || f == Phase::Soft));
  }

  FunctionalEngine engine_cf(mesh, mat, spec);
  RunContext cf_ctx(mesh, mat, engine_cf, cfg);
  auto cf_steps = run_schedule(cf_ctx);
  int cf_total = 0;
  for (const auto& s : cf_steps) cf_total += s.outer_iters;

  // the closed-form update needs strictly fewer state solves
  CHECK(cf_total < ls_total);
}

TEST_CASE("tiny step size stalls the level-set evolution") {
  std::vector<BoundarySpecEntry> bcs{patch(0, 0, 1.0, 0.5, 0.4),
                                     patch(0, 1, 0.0, 0.5, 0.3)};
  Mesh mesh = Mesh::build({6, 3, 1}, {1.0 / 6, 1.0 / 3, 1}, 2, {}, bcs);
  MaterialModel mat;
  mat.regions = {RegionMaterial{}};
  FunctionalSpec spec;
  spec.kind = FunctionalKind::Compliance;
  FunctionalEngine engine(mesh, mat, spec);
  OptimizerConfig cfg;
  cfg.time_grid = {0.3};
  RunContext ctx(mesh, mat, engine, cfg);
  LevelSetParams params;
  params.delta_t = 1e-12;
  params.max_iters_per_step = 25;
  auto steps = run_levelset(ctx, params);
  CHECK(!steps[0].converged);  // cap hit, chi frozen in place
  for (auto f : steps[0].chi.flags) CHECK(f == Phase::Hard);
}
