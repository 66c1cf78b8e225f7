// Screened-Laplacian regularization of the element pseudo-energy field:
// solves (M + eps^2 K) xi_hat = int N^T xi dV with natural boundary
// conditions, eps = tau * h_e. A lumped mass matrix keeps the discrete
// operator an M-matrix, so constants are fixed points, the mean is
// conserved and nodal values stay inside the element-value range.
#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "thermotop/mesh.hpp"

namespace thermotop {

class Smoother {
 public:
  Smoother(const Mesh& mesh, double tau);

  double epsilon() const { return eps_; }

  // element field -> nodal field; frozen elements are projected at the
  // running maximum of the optimizable values so they never attract the cut
  Eigen::VectorXd smooth(const Eigen::VectorXd& xi_elem,
                         const std::vector<uint8_t>& frozen) const;

 private:
  const Mesh& mesh_;
  double eps_ = 0.0;
  Eigen::VectorXd lumped_;  // int N_i dV per node
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool diagonal_only_ = false;  // tau = 0: pure lumped L2 projection
};

}  // namespace thermotop
