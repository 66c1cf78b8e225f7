#include "thermotop/material.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace thermotop {

void MaterialModel::validate() const {
  for (const auto& r : regions) {
    if (!(r.m_kappa >= 1.0) || !(r.m_r >= 1.0))
      throw std::invalid_argument("material: interpolation exponents must be >= 1");
    if (!(r.alpha_kappa > 0.0 && r.alpha_kappa <= 1.0) ||
        !(r.alpha_r > 0.0 && r.alpha_r <= 1.0))
      throw std::invalid_argument("material: contrast factors must lie in (0,1]");
    if ((r.kappa - r.kappa.transpose()).norm() > 1e-12 * r.kappa.norm())
      throw std::invalid_argument("material: kappa must be symmetric");
    Eigen::SelfAdjointEigenSolver<Mat3> es(r.kappa);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw std::invalid_argument("material: kappa must be positive definite");
  }
}

CharacteristicField CharacteristicField::initial(const Mesh& mesh,
                                                 const MaterialModel& mat) {
  CharacteristicField chi;
  chi.flags.resize(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& rm = mat.region(mesh.element_region(e));
    chi.flags[e] = rm.optimizable ? Phase::Hard : rm.fixed_phase;
  }
  return chi;
}

double relaxed_heaviside(double x, double beta) {
  return x >= 0.0 ? 1.0 : beta;
}

double exchange_function(Phase phase, double beta) {
  return phase == Phase::Hard ? -(1.0 - beta) : (1.0 - beta);
}

Mat3 interpolate_conductivity(const MaterialModel& mat, int region, Phase phase) {
  const auto& r = mat.region(region);
  if (!r.optimizable) phase = r.fixed_phase;
  // chi^m = beta^m = alpha in the soft phase
  return phase == Phase::Hard ? r.kappa : (r.alpha_kappa * r.kappa).eval();
}

double interpolate_heat_source(const MaterialModel& mat, int region, Phase phase) {
  const auto& r = mat.region(region);
  if (!r.optimizable) phase = r.fixed_phase;
  return phase == Phase::Hard ? r.heat_source : r.alpha_r * r.heat_source;
}

CharacteristicField chi_from_psi(const Mesh& mesh, const MaterialModel& mat,
                                 const DiscriminationField& psi,
                                 const CharacteristicField& previous) {
  CharacteristicField chi;
  chi.flags.resize(mesh.n_elements());
  const int n_en = mesh.nodes_per_element();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& rm = mat.region(mesh.element_region(e));
    if (!rm.optimizable) {
      chi.flags[e] = previous.flags.empty() ? rm.fixed_phase : previous.flags[e];
      continue;
    }
    // Q1 value at the centroid = average of corner values
    double c = 0.0;
    for (int a = 0; a < n_en; ++a) c += psi.psi[mesh.element_nodes(e)[a]];
    chi.flags[e] = (c >= 0.0) ? Phase::Hard : Phase::Soft;
  }
  return chi;
}

}  // namespace thermotop
