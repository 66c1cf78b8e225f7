// Problem configuration: JSON schema covering mesh, materials, boundary
// conditions, functional, optimizer and output blocks, with aggregated
// validation (every error reported, not just the first) and lossless
// round-tripping.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "thermotop/levelset.hpp"
#include "thermotop/optimizer.hpp"

namespace thermotop {

struct ConfigError : std::runtime_error {
  std::vector<std::string> errors;
  explicit ConfigError(std::vector<std::string> errs);
};

enum class Method { ClosedForm, LevelSet };

struct MeshConfig {
  int dim = 3;
  std::array<int, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<RegionSpec> regions;
};

struct OutputConfig {
  std::string directory = "out";
  int snapshot_every = 1;
  std::vector<std::string> formats = {"vtk", "csv"};
};

struct ProblemConfig {
  MeshConfig mesh;
  std::vector<RegionMaterial> materials;  // [0] background, then per region
  std::vector<BoundarySpecEntry> bcs;
  FunctionalSpec functional;
  std::string utopia_cache;  // temp-multi normalization cache path
  OptimizerConfig optimizer;
  Method method = Method::ClosedForm;
  LevelSetParams levelset;
  OutputConfig output;
};

ProblemConfig parse_config(const std::string& path);
ProblemConfig parse_config_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ProblemConfig& cfg);

// collects validation problems without throwing
std::vector<std::string> validate_config_json(const nlohmann::json& j);

}  // namespace thermotop
