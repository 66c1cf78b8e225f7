#include "thermotop/smoothing.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace thermotop {

Smoother::Smoother(const Mesh& mesh, double tau) : mesh_(mesh) {
  if (tau < 0) throw std::invalid_argument("smoother: tau must be >= 0");
  eps_ = tau * mesh.typical_element_size();

  const int n = mesh.n_nodes();
  const int n_en = mesh.nodes_per_element();
  const auto& basis = mesh.basis();
  const double node_share = mesh.element_volume() / n_en;  // int_e N_i dV

  lumped_ = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (int a = 0; a < n_en; ++a)
      lumped_[mesh.element_nodes(e)[a]] += node_share;

  diagonal_only_ = (eps_ == 0.0);
  if (diagonal_only_) return;

  Eigen::MatrixXd Ke(n_en, n_en);
  Ke.setZero();
  for (int q = 0; q < basis.n_qp; ++q)
    Ke.noalias() += basis.weights[q] * (basis.B[q].transpose() * basis.B[q]);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.n_elements()) * n_en * n_en + n);
  const double e2 = eps_ * eps_;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& conn = mesh.element_nodes(e);
    for (int a = 0; a < n_en; ++a)
      for (int b = 0; b < n_en; ++b)
        trip.emplace_back(conn[a], conn[b], e2 * Ke(a, b));
  }
  for (int i = 0; i < n; ++i) trip.emplace_back(i, i, lumped_[i]);

  Eigen::SparseMatrix<double> G(n, n);
  G.setFromTriplets(trip.begin(), trip.end());
  ldlt_.compute(G);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("smoother: factorization failed");
}

Eigen::VectorXd Smoother::smooth(const Eigen::VectorXd& xi_elem,
                                 const std::vector<uint8_t>& frozen) const {
  const int n_en = mesh_.nodes_per_element();
  const double node_share = mesh_.element_volume() / n_en;

  double vmax = -std::numeric_limits<double>::infinity();
  for (int e = 0; e < mesh_.n_elements(); ++e)
    if (frozen.empty() || !frozen[e]) vmax = std::max(vmax, xi_elem[e]);
  if (!std::isfinite(vmax)) vmax = 0.0;

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(mesh_.n_nodes());
  for (int e = 0; e < mesh_.n_elements(); ++e) {
    const double v = (!frozen.empty() && frozen[e]) ? vmax : xi_elem[e];
    for (int a = 0; a < n_en; ++a)
      rhs[mesh_.element_nodes(e)[a]] += node_share * v;
  }

  if (diagonal_only_) return rhs.cwiseQuotient(lumped_);

  Eigen::VectorXd x = ldlt_.solve(rhs);
  if (ldlt_.info() != Eigen::Success)
    throw std::runtime_error("smoother: solve failed");
  return x;
}

}  // namespace thermotop
