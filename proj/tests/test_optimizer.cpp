#include <doctest.h>

#include <random>

#include "thermotop/optimizer.hpp"

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

struct Strip {
  Mesh mesh = Mesh::build({4, 1, 1}, {0.25, 1, 1}, 2, {}, {});
  MaterialModel mat;
  Strip() { mat.regions = {RegionMaterial{}}; }
  std::vector<uint8_t> node_opt() const {
    return std::vector<uint8_t>(mesh.n_nodes(), 1);
  }
};

}  // namespace

TEST_CASE("shift and normalize: box mapping and reference capture") {
  Strip fx;
  Eigen::VectorXd xi(fx.mesh.n_nodes());
  for (int i = 0; i < xi.size(); ++i) xi[i] = 2.0 + 4.0 * (i % 3) / 2.0;  // [2,6]
  xi[3] = 4.0;
  xi[4] = 6.0;
  xi[5] = 2.0;

  Eigen::VectorXd psi_prev = Eigen::VectorXd::Ones(fx.mesh.n_nodes());
  psi_prev[3] = -1.0;  // one node on the soft side

  ShiftReference ref;
  Eigen::VectorXd out = shift_normalize(xi, psi_prev, fx.node_opt(), ref);
  CHECK(ref.valid);
  CHECK(ref.shift == 2.0);
  CHECK(ref.norm == 4.0);
  // hard-side node with xi = 4 -> (4-2)/4; soft-side node with xi = 4 -> 4/4
  CHECK(out[4] == doctest::Approx(1.0));
  CHECK(out[3] == doctest::Approx(1.0));  // soft side, unshifted
  CHECK(out[5] == doctest::Approx(0.0));

  // the reference is reused on later calls
  Eigen::VectorXd xi2 = xi.array() + 100.0;
  Eigen::VectorXd out2 = shift_normalize(xi2, psi_prev, fx.node_opt(), ref);
  CHECK(out2[5] == doctest::Approx(100.0 / 4.0));
}

TEST_CASE("shift and normalize: uniform field falls back to unit range") {
  Strip fx;
  Eigen::VectorXd xi = Eigen::VectorXd::Constant(fx.mesh.n_nodes(), 5.0);
  Eigen::VectorXd psi_prev = Eigen::VectorXd::Ones(fx.mesh.n_nodes());
  ShiftReference ref;
  Eigen::VectorXd out = shift_normalize(xi, psi_prev, fx.node_opt(), ref);
  CHECK(ref.norm == 1.0);
  for (int i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(0.0));
}

TEST_CASE("cut and bisect: half volume on a ramp field") {
  Strip fx;
  CharacteristicField chi = CharacteristicField::initial(fx.mesh, fx.mat);
  // nodal ramp: element centroids see 0.1, 0.2, 0.3, 0.4
  Eigen::VectorXd xi(fx.mesh.n_nodes());
  for (int i = 0; i < fx.mesh.n_nodes(); ++i)
    xi[i] = 0.05 + 0.4 * fx.mesh.node_coord(i)[0];

  OptimizerConfig cfg;
  cfg.tol_c = 1e-3;
  CutResult cut = cut_and_bisect(fx.mesh, fx.mat, chi, xi, 0.5, cfg);
  CHECK(std::abs(cut.constraint) <= 1e-3);
  CHECK(cut.lambda > 0.2);
  CHECK(cut.lambda < 0.3);
  CHECK(cut.chi.flags[0] == Phase::Soft);
  CHECK(cut.chi.flags[1] == Phase::Soft);
  CHECK(cut.chi.flags[2] == Phase::Hard);
  CHECK(cut.chi.flags[3] == Phase::Hard);

  // brute-force scan over candidate multipliers agrees with the bisection
  double best = 0, best_err = 1e9;
  for (int k = 0; k <= 400; ++k) {
    const double lam = 0.0 + 0.5 * k / 400.0;
    Eigen::VectorXd psi = xi.array() - lam;
    DiscriminationField d{psi};
    CharacteristicField c = chi_from_psi(fx.mesh, fx.mat, d, chi);
    const double soft = marching_volume(fx.mesh, fx.mat, c, psi).soft_volume /
                        fx.mesh.total_volume();
    if (std::abs(soft - 0.5) < best_err) {
      best_err = std::abs(soft - 0.5);
      best = lam;
    }
  }
  CHECK(std::abs(cut.lambda - best) <= 2e-3);
}

TEST_CASE("cut and bisect: zero target keeps everything hard") {
  Strip fx;
  CharacteristicField chi = CharacteristicField::initial(fx.mesh, fx.mat);
  Eigen::VectorXd xi = Eigen::VectorXd::Random(fx.mesh.n_nodes());
  OptimizerConfig cfg;
  CutResult cut = cut_and_bisect(fx.mesh, fx.mat, chi, xi, 0.0, cfg);
  for (auto f : cut.chi.flags) CHECK(f == Phase::Hard);
  CHECK(cut.lambda <= xi.minCoeff() + 1e-6);
}

TEST_CASE("cut and bisect: infeasible target over frozen regions") {
  RegionSpec core;
  core.name = "core";
  core.shape.kind = RegionShape::Kind::Box;
  core.shape.box_min = Vec3(0, 0, 0);
  core.shape.box_max = Vec3(0.6, 1, 1);
  Mesh mesh = Mesh::build({4, 1, 1}, {0.25, 1, 1}, 2, {core}, {});
  MaterialModel mat;
  mat.regions.resize(2);
  mat.regions[1].optimizable = false;  // half the strip is frozen hard
  CharacteristicField chi = CharacteristicField::initial(mesh, mat);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) xi[i] = mesh.node_coord(i)[0];
  OptimizerConfig cfg;
  CHECK_THROWS_AS(cut_and_bisect(mesh, mat, chi, xi, 0.8, cfg), NumericalError);
  CHECK_THROWS(cut_and_bisect(mesh, mat, chi, xi, 1.2, cfg));
}

TEST_CASE("soft volume grows monotonically with the multiplier") {
  Mesh mesh = Mesh::build({5, 5, 5}, {0.2, 0.2, 0.2}, 3, {}, {});
  MaterialModel mat;
  mat.regions = {RegionMaterial{}};
  CharacteristicField chi = CharacteristicField::initial(mesh, mat);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd xi(mesh.n_nodes());
    for (int i = 0; i < xi.size(); ++i) xi[i] = u(rng);
    double prev = -1;
    for (int k = 0; k <= 30; ++k) {
      const double lam = -1.1 + 2.2 * k / 30.0;
      Eigen::VectorXd psi = xi.array() - lam;
      DiscriminationField d{psi};
      CharacteristicField c = chi_from_psi(mesh, mat, d, chi);
      const double soft = marching_volume(mesh, mat, c, psi.eval()).soft_volume;
      CHECK(soft >= prev - 1e-12);
      prev = soft;
    }
  }
}

TEST_CASE("argcut invariance under affine rescaling of the field") {
  Mesh mesh = Mesh::build({6, 6, 1}, {1.0 / 6, 1.0 / 6, 1}, 2, {}, {});
  MaterialModel mat;
  mat.regions = {RegionMaterial{}};
  CharacteristicField chi = CharacteristicField::initial(mesh, mat);
  // dyadic nodal values keep the affine map exact in floating point
  std::mt19937 rng(8);
  std::uniform_int_distribution<int> d(-64, 64);
  Eigen::VectorXd xi(mesh.n_nodes());
  for (int i = 0; i < xi.size(); ++i) xi[i] = d(rng) / 64.0;

  OptimizerConfig cfg;
  CutResult base = cut_and_bisect(mesh, mat, chi, xi, 0.4, cfg);
  const double a = 2.0, b = 0.5;
  Eigen::VectorXd xi2 = a * xi.array() + b;
  CutResult scaled = cut_and_bisect(mesh, mat, chi, xi2, 0.4, cfg);
  CHECK(scaled.chi.flags == base.chi.flags);
  CHECK(scaled.lambda == doctest::Approx(a * base.lambda + b).epsilon(1e-12));
}

namespace {
// miniature conductor: hot and cold Dirichlet patches so the pseudo-energy
// carries real structure from the first iterate
BoundarySpecEntry patch(int axis, int side, double value, double y, double r) {
  BoundarySpecEntry e = dirichlet(axis, side, value);
  e.where.disc_center = Vec3(side == 0 ? 0.0 : 1.0, y, 0.0);
  e.where.disc_radius = r;
  return e;
}

struct StripProblem {
  std::vector<BoundarySpecEntry> bcs{patch(0, 0, 1.0, 0.5, 0.15),
                                     patch(0, 1, 0.0, 0.5, 0.12)};
  Mesh mesh = Mesh::build({24, 12, 1}, {0.5 / 12, 1.0 / 12, 1}, 2, {}, bcs);
  MaterialModel mat;
  FunctionalSpec spec;
  StripProblem() {
    mat.regions = {RegionMaterial{}};
    spec.kind = FunctionalKind::Compliance;
  }
  OptimizerConfig base_cfg() const {
    OptimizerConfig cfg;
    cfg.tau = 0.5;
    return cfg;
  }
};
}  // namespace

TEST_CASE("run_step at t = 0 converges immediately with full material") {
  StripProblem p;
  FunctionalEngine engine(p.mesh, p.mat, p.spec);
  OptimizerConfig cfg = p.base_cfg();
  cfg.time_grid = {0.0};
  RunContext ctx(p.mesh, p.mat, engine, cfg);
  StepResult step = run_step(ctx, 0.0);
  CHECK(step.converged);
  CHECK(step.outer_iters <= 2);
  for (auto f : ctx.chi.flags) CHECK(f == Phase::Hard);
  CHECK(std::abs(step.constraint_residual) <= cfg.tol_c);
}

TEST_CASE("converged steps are fixed points of the update") {
  StripProblem p;
  FunctionalEngine engine(p.mesh, p.mat, p.spec);
  OptimizerConfig cfg = p.base_cfg();
  cfg.time_grid = {0.2};
  RunContext ctx(p.mesh, p.mat, engine, cfg);
  StepResult first = run_step(ctx, 0.2);
  CHECK(first.converged);
  CharacteristicField chi_before = ctx.chi;
  StepResult again = run_step(ctx, 0.2);
  int changed = 0;
  for (int e = 0; e < p.mesh.n_elements(); ++e)
    changed += (ctx.chi.flags[e] != chi_before.flags[e]);
  CHECK(changed == 0);
  CHECK(again.converged);
}

TEST_CASE("schedule: monotone volume targets satisfied at every step") {
  StripProblem p;
  FunctionalEngine engine(p.mesh, p.mat, p.spec);
  OptimizerConfig cfg = p.base_cfg();
  for (int k = 1; k <= 6; ++k) cfg.time_grid.push_back(0.6 * k / 6.0);
  RunContext ctx(p.mesh, p.mat, engine, cfg);
  auto steps = run_schedule(ctx);
  REQUIRE(steps.size() == 6);
  for (const auto& s : steps) {
    CHECK(s.converged);
    CHECK(std::abs(s.constraint_residual) <= cfg.tol_c);
  }
  // soft volume follows the schedule
  VolumeFractions v = marching_volume(p.mesh, p.mat, ctx.chi, ctx.psi.psi);
  CHECK(v.soft_volume / p.mesh.total_volume() ==
        doctest::Approx(0.6).epsilon(5e-3));
}

TEST_CASE("frozen elements never change across a schedule") {
  RegionSpec core;
  core.name = "core";
  core.shape.kind = RegionShape::Kind::Box;
  core.shape.box_min = Vec3(0.4, 0.3, -1);
  core.shape.box_max = Vec3(0.6, 0.7, 2);
  std::vector<BoundarySpecEntry> bcs{dirichlet(0, 0, 1.0), dirichlet(0, 1, 0.0)};
  Mesh mesh = Mesh::build({10, 10, 1}, {0.1, 0.1, 1}, 2, {core}, bcs);
  MaterialModel mat;
  mat.regions.resize(2);
  mat.regions[1].optimizable = false;
  mat.regions[1].fixed_phase = Phase::Hard;
  FunctionalSpec spec;
  spec.kind = FunctionalKind::Compliance;
  FunctionalEngine engine(mesh, mat, spec);
  OptimizerConfig cfg;
  cfg.time_grid = {0.1, 0.2, 0.3};
  RunContext ctx(mesh, mat, engine, cfg);
  run_schedule(ctx);
  for (int e = 0; e < mesh.n_elements(); ++e)
    if (mesh.element_region(e) == 1) CHECK(ctx.chi.flags[e] == Phase::Hard);
}
