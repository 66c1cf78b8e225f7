// Result emission: legacy ASCII VTK unstructured-grid snapshots per step
// (point data psi, xi_hat, theta1[, theta2, theta3]; cell data chi, region,
// hard_fraction) and the comma-separated scalar history.
#pragma once

#include <filesystem>
#include <string>

#include "thermotop/config.hpp"

namespace thermotop {

void write_vtk_snapshot(const Mesh& mesh, const StepResult& step,
                        const std::filesystem::path& path);

// fixed column order: t,cost,lambda,outer_iters,bisect_iters,constraint_residual
void write_history_header(const std::filesystem::path& path);
void append_history_row(const std::filesystem::path& path, const StepResult& step);

class SnapshotWriter {
 public:
  SnapshotWriter(const Mesh& mesh, OutputConfig cfg, std::string prefix = "step");
  void on_step(const StepResult& step);
  const std::filesystem::path& directory() const { return dir_; }
  std::filesystem::path history_path() const;

 private:
  const Mesh& mesh_;
  OutputConfig cfg_;
  std::string prefix_;
  std::filesystem::path dir_;
  int count_ = 0;
  bool vtk_ = false, csv_ = false;
};

}  // namespace thermotop
