// Discrete steady-state heat conduction: Q1 assembly of the stiffness
// operator and load vector, Dirichlet handling by symmetric elimination and
// shared-factorization solves for the state and adjoint systems.
//
//   K = sum_e int B^T kappa_chi B dV + sum_{convection faces} int h N^T N dA
//   f = sum_e int N^T r_chi dV - sum_{flux faces} int N^T qbar dA
//       + sum_{convection faces} int h theta_amb N^T dA
#pragma once

#include <memory>
#include <stdexcept>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "thermotop/material.hpp"
#include "thermotop/mesh.hpp"

namespace thermotop {

using SpMat = Eigen::SparseMatrix<double>;

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DiscreteSystem {
  uint64_t id = 0;  // distinguishes assemblies for factorization reuse
  int n = 0;        // nodal unknowns
  SpMat K;          // full operator, symmetric
  SpMat K_conv;  // convection boundary part of K (empty if none)
  Eigen::VectorXd f;  // state load
  std::vector<int> dirichlet_nodes;
  Eigen::VectorXd dirichlet_values;
  std::vector<int> free_index;    // node -> free slot, -1 on Dirichlet nodes
  std::vector<int> free_nodes;    // free slot -> node
  SpMat K_ff;
  SpMat K_fd;  // coupling free x dirichlet (for the elimination RHS)
  bool has_convection = false;
};

// Direct/iterative backend shared across the solves of one problem; the
// factorization pattern is analyzed once and reused between topology
// iterates (same mesh, same sparsity).
class SolverContext {
 public:
  // direct Cholesky up to this many unknowns, Jacobi-CG beyond
  static constexpr int kDirectLimit = 200000;

  Eigen::VectorXd solve(const DiscreteSystem& sys, const Eigen::VectorXd& rhs_free);
  void invalidate() { factorized_id_ = 0; }

 private:
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool analyzed_ = false;
  Eigen::Index analyzed_rows_ = -1;
  Eigen::Index analyzed_nnz_ = -1;
  uint64_t factorized_id_ = 0;
};

DiscreteSystem assemble(const Mesh& mesh, const MaterialModel& material,
                        const CharacteristicField& chi,
                        const std::vector<BoundarySpecEntry>& bcs);

// rhs_full: full nodal load. State solves impose the stored Dirichlet
// values; adjoint solves impose homogeneous Dirichlet data.
Eigen::VectorXd solve(const DiscreteSystem& sys, SolverContext& ctx,
                      const Eigen::VectorXd& rhs_full, bool homogeneous_dirichlet);

// q = -kappa_chi B theta at each quadrature point of one element
std::vector<Vec3> heat_flux(const Mesh& mesh, const MaterialModel& material,
                            const CharacteristicField& chi,
                            const Eigen::VectorXd& theta, int element);

// Dirichlet reactions (K theta - f restricted to constrained nodes)
Eigen::VectorXd dirichlet_reactions(const DiscreteSystem& sys,
                                    const Eigen::VectorXd& theta);

// Boundary-port integrals used by the temperature functionals:
// mass vector int N^T dA and mass matrix int N^T N dA over selected faces.
struct PortData {
  std::vector<std::pair<int, int>> faces;  // (element, local_face)
  Eigen::VectorXd mass;                    // full nodal
  SpMat mass_matrix;
  double measure = 0.0;
};
PortData build_port(const Mesh& mesh, const FaceSelector& sel);

}  // namespace thermotop
