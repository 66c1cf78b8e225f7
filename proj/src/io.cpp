#include "thermotop/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <stdexcept>

namespace thermotop {

namespace {

// fixed-format writer keeps reruns byte-identical
void fput_num(std::FILE* f, double v) {
  std::fprintf(f, "%.9g", v);
}

struct File {
  std::FILE* f = nullptr;
  explicit File(const std::filesystem::path& p, const char* mode) {
    f = std::fopen(p.string().c_str(), mode);
    if (!f)
      throw std::runtime_error("cannot open output file '" + p.string() + "'");
  }
  ~File() {
    if (f) std::fclose(f);
  }
};

void write_point_scalars(std::FILE* f, const char* name,
                         const Eigen::VectorXd& v) {
  std::fprintf(f, "SCALARS %s double 1\nLOOKUP_TABLE default\n", name);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    fput_num(f, v[i]);
    std::fputc('\n', f);
  }
}

}  // namespace

void write_vtk_snapshot(const Mesh& mesh, const StepResult& step,
                        const std::filesystem::path& path) {
  File out(path, "w");
  std::FILE* f = out.f;
  std::fprintf(f, "# vtk DataFile Version 3.0\n");
  std::fprintf(f, "thermotop snapshot t=%.9g\n", step.t);
  std::fprintf(f, "ASCII\nDATASET UNSTRUCTURED_GRID\n");

  std::fprintf(f, "POINTS %d double\n", mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const Vec3& p = mesh.node_coord(i);
    fput_num(f, p[0]);
    std::fputc(' ', f);
    fput_num(f, p[1]);
    std::fputc(' ', f);
    fput_num(f, p[2]);
    std::fputc('\n', f);
  }

  const int n_en = mesh.nodes_per_element();
  std::fprintf(f, "CELLS %d %d\n", mesh.n_elements(),
               mesh.n_elements() * (n_en + 1));
  // lattice -> VTK corner ordering
  static const int perm2[4] = {0, 1, 3, 2};
  static const int perm3[8] = {0, 1, 3, 2, 4, 5, 7, 6};
  const int* perm = mesh.dim() == 3 ? perm3 : perm2;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    std::fprintf(f, "%d", n_en);
    for (int a = 0; a < n_en; ++a)
      std::fprintf(f, " %d", mesh.element_nodes(e)[perm[a]]);
    std::fputc('\n', f);
  }
  std::fprintf(f, "CELL_TYPES %d\n", mesh.n_elements());
  const int cell_type = mesh.dim() == 3 ? 12 : 9;  // hexahedron / quad
  for (int e = 0; e < mesh.n_elements(); ++e) std::fprintf(f, "%d\n", cell_type);

  std::fprintf(f, "POINT_DATA %d\n", mesh.n_nodes());
  write_point_scalars(f, "psi", step.psi);
  write_point_scalars(f, "xi_hat", step.xi_hat);
  write_point_scalars(f, "theta1", step.theta1);
  if (step.theta2) write_point_scalars(f, "theta2", *step.theta2);
  if (step.theta3) write_point_scalars(f, "theta3", *step.theta3);

  std::fprintf(f, "CELL_DATA %d\n", mesh.n_elements());
  std::fprintf(f, "SCALARS chi double 1\nLOOKUP_TABLE default\n");
  for (int e = 0; e < mesh.n_elements(); ++e)
    std::fprintf(f, "%d\n", step.chi.flags[e] == Phase::Hard ? 1 : 0);
  std::fprintf(f, "SCALARS region int 1\nLOOKUP_TABLE default\n");
  for (int e = 0; e < mesh.n_elements(); ++e)
    std::fprintf(f, "%d\n", mesh.element_region(e));
  std::fprintf(f, "SCALARS hard_fraction double 1\nLOOKUP_TABLE default\n");
  for (int e = 0; e < mesh.n_elements(); ++e) {
    fput_num(f, step.hard_fraction.empty() ? 1.0 : step.hard_fraction[e]);
    std::fputc('\n', f);
  }
}

void write_history_header(const std::filesystem::path& path) {
  File out(path, "w");
  std::fprintf(out.f,
               "t,cost,lambda,outer_iters,bisect_iters,constraint_residual\n");
}

void append_history_row(const std::filesystem::path& path,
                        const StepResult& step) {
  File out(path, "a");
  std::FILE* f = out.f;
  fput_num(f, step.t);
  std::fputc(',', f);
  fput_num(f, step.cost);
  std::fputc(',', f);
  fput_num(f, step.lambda);
  std::fprintf(f, ",%d,%d,", step.outer_iters, step.bisection_iters);
  fput_num(f, step.constraint_residual);
  std::fputc('\n', f);
}

SnapshotWriter::SnapshotWriter(const Mesh& mesh, OutputConfig cfg,
                               std::string prefix)
    : mesh_(mesh), cfg_(std::move(cfg)), prefix_(std::move(prefix)) {
  if (const char* env = std::getenv("THERMOTOP_OUTPUT_DIR"))
    cfg_.directory = env;
  dir_ = cfg_.directory;
  std::filesystem::create_directories(dir_);
  for (const auto& fmt : cfg_.formats) {
    vtk_ |= fmt == "vtk";
    csv_ |= fmt == "csv";
  }
  if (csv_) write_history_header(history_path());
}

std::filesystem::path SnapshotWriter::history_path() const {
  return dir_ / (prefix_ + "_history.csv");
}

void SnapshotWriter::on_step(const StepResult& step) {
  ++count_;
  if (csv_) append_history_row(history_path(), step);
  if (vtk_ && cfg_.snapshot_every > 0 && (count_ % cfg_.snapshot_every) == 0) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.vtk", prefix_.c_str(), count_);
    write_vtk_snapshot(mesh_, step, dir_ / name);
  }
}

}  // namespace thermotop
