#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "thermotop/io.hpp"
#include "thermotop/runner.hpp"

using namespace thermotop;
using nlohmann::json;

namespace {

json conductor_config() {
  return json::parse(R"({
    "mesh": {"dim": 3, "dims": [6, 6, 6], "spacing": [0.1667, 0.1667, 0.1667]},
    "materials": {
      "background": {"kappa": 1.0, "alpha_kappa": 1e-3, "m_kappa": 5,
                     "optimizable": true}
    },
    "bcs": [
      {"where": {"axis": "x", "side": "min",
                 "disc": {"center": [0, 0.5, 0.5], "radius": 0.3}},
       "type": "dirichlet", "value": 293.0},
      {"where": {"axis": "x", "side": "max",
                 "disc": {"center": [1.0, 0.5, 0.5], "radius": 0.25}},
       "type": "dirichlet", "value": 278.0}
    ],
    "functional": {"kind": "compliance"},
    "optimizer": {"t_final": 0.4, "steps": 4, "tau": 1.0},
    "output": {"directory": "out_test", "formats": ["csv"]}
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config round trip through the normal form") {
  ProblemConfig cfg = parse_config_json(conductor_config());
  json echoed = config_to_json(cfg);
  ProblemConfig cfg2 = parse_config_json(echoed);
  CHECK(config_to_json(cfg2) == echoed);
  CHECK(cfg2.optimizer.time_grid.size() == 4);
  CHECK(cfg2.optimizer.time_grid.back() == doctest::Approx(0.4));
  CHECK(cfg2.optimizer.tol_chi == 0.1);
  CHECK(cfg2.optimizer.tol_lambda == 0.1);
  CHECK(cfg2.optimizer.tol_c == 1e-3);
}

TEST_CASE("validation aggregates every error") {
  json bad = conductor_config();
  bad["mesh"].erase("dims");
  bad["functional"]["kind"] = "maximize_entropy";
  bad["optimizer"]["tol_c"] = -1.0;
  auto errors = validate_config_json(bad);
  REQUIRE(errors.size() >= 3);
  bool dims = false, kind = false, tol = false;
  for (const auto& e : errors) {
    dims |= e.find("dims") != std::string::npos;
    kind |= e.find("maximize_entropy") != std::string::npos;
    tol |= e.find("tolerances") != std::string::npos;
  }
  CHECK(dims);
  CHECK(kind);
  CHECK(tol);
}

TEST_CASE("omega outside [0,1] is rejected") {
  json cfg = conductor_config();
  cfg["functional"] = {{"kind", "temp_multi"},
                       {"omega", 1.5},
                       {"port", {{"axis", "x"}, {"side", "min"}}}};
  auto errors = validate_config_json(cfg);
  REQUIRE(!errors.empty());
  bool omega = false;
  for (const auto& e : errors) omega |= e.find("omega") != std::string::npos;
  CHECK(omega);
}

TEST_CASE("non-increasing time grid is rejected") {
  json cfg = conductor_config();
  cfg["optimizer"] = {{"time_grid", {0.1, 0.1, 0.3}}};
  auto errors = validate_config_json(cfg);
  REQUIRE(!errors.empty());
}

TEST_CASE("snapshot file carries the declared cell and point data") {
  Mesh mesh = Mesh::build({2, 1, 1}, {0.5, 1, 1}, 2, {}, {});
  StepResult step;
  step.t = 0.25;
  step.psi = Eigen::VectorXd::Ones(mesh.n_nodes());
  step.xi_hat = Eigen::VectorXd::Zero(mesh.n_nodes());
  step.theta1 = Eigen::VectorXd::Constant(mesh.n_nodes(), 300.0);
  step.chi.flags = {Phase::Hard, Phase::Soft};
  step.hard_fraction = {1.0, 0.0};

  auto dir = std::filesystem::temp_directory_path() / "thermotop_vtk_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "snap.vtk";
  write_vtk_snapshot(mesh, step, path);
  std::string text = slurp(path);
  CHECK(text.find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(text.find("POINTS 6 double") != std::string::npos);
  CHECK(text.find("CELLS 2 10") != std::string::npos);
  CHECK(text.find("SCALARS psi double 1") != std::string::npos);
  CHECK(text.find("SCALARS xi_hat double 1") != std::string::npos);
  CHECK(text.find("SCALARS theta1 double 1") != std::string::npos);
  CHECK(text.find("SCALARS chi double 1") != std::string::npos);
  CHECK(text.find("SCALARS region int 1") != std::string::npos);
  CHECK(text.find("SCALARS hard_fraction double 1") != std::string::npos);
}

TEST_CASE("run emits a deterministic history with one row per step") {
  ProblemConfig cfg = parse_config_json(conductor_config());
  auto dir = std::filesystem::temp_directory_path() / "thermotop_run_test";
  std::filesystem::remove_all(dir);
  cfg.output.directory = dir.string();

  std::ostringstream log;
  RunOutcome out = run_problem(cfg, log);
  REQUIRE(out.steps.size() == 4);

  auto hist = dir / "step_history.csv";
  REQUIRE(std::filesystem::exists(hist));
  std::string first = slurp(hist);
  std::istringstream lines(first);
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "t,cost,lambda,outer_iters,bisect_iters,constraint_residual");
  int rows = 0;
  double prev_t = -1;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    ++rows;
    const double t = std::stod(line.substr(0, line.find(',')));
    CHECK(t > prev_t);
    prev_t = t;
  }
  CHECK(rows == 4);

  // rerun is byte-identical
  RunOutcome out2 = run_problem(cfg, log);
  CHECK(slurp(hist) == first);
}

TEST_CASE("missing file reports a config error") {
  CHECK_THROWS_AS(parse_config("/nonexistent/path.json"), ConfigError);
}
