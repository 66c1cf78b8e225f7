// Cost functionals, adjoint right-hand sides and element pseudo-energy
// fields for the three optimization problems (thermal compliance, heat-flux
// cloaking, average/variance temperature cloaking).
//
// Pseudo-energy sign convention: every xi_* operation returns the field the
// closed-form update consumes directly, i.e. psi = xi_hat - lambda turns
// high-xi material hard. Equivalently xi = -dJ/ds per unit volume, where s
// is the continuous hard-fraction parameter chi_e in [beta, 1]; the
// finite-difference tests pin this down. The signed box convention of the
// compliance derivation is recovered as sgn(Delta_chi) * xi.
#pragma once

#include <optional>
#include <string>
#include <vector>

#include "thermotop/fem.hpp"

namespace thermotop {

enum class FunctionalKind { Compliance, FluxCloak, TempMulti };

struct FunctionalSpec {
  FunctionalKind kind = FunctionalKind::Compliance;
  // flux cloaking
  Vec3 target_flux = Vec3::Zero();
  std::vector<std::string> mask_regions;  // region names forming Omega_c
  // temperature cloaking
  FaceSelector port;
  double omega = 0.5;
  double c4 = 1.0;  // 1 / (J_av_max - J_av_utopia)
  double c5 = 1.0;  // 1 / (J_vr_max - J_vr_utopia)
};

// Element-wise pseudo-energy; non-optimizable elements carry +inf and are
// excluded from the cut (the smoother replaces them by the field maximum).
struct PseudoEnergyField {
  Eigen::VectorXd xi;
  std::vector<uint8_t> frozen;
};

// --- compliance -----------------------------------------------------------

// 1/2 int grad(theta) . kappa_chi . grad(theta) dV - 1/2 int h theta^2 dA
double eval_compliance(const Mesh& mesh, const MaterialModel& material,
                       const CharacteristicField& chi,
                       const DiscreteSystem& sys, const Eigen::VectorXd& theta1);

PseudoEnergyField xi_compliance(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& theta1);

// Generic adjoint-pair pseudo-energy shared by all functionals:
//   scale * [ m_k (1-beta_k) chi_k^{m_k-1} grad(theta1).kappa.grad(w)
//           - m_r (1-beta_r) chi_r^{m_r-1} r w ]
// with nominal material data. The compliance field equals this kernel at
// w = theta1/2 with scale = 2 (self-adjoint specialization).
PseudoEnergyField xi_adjoint_pair(const Mesh& mesh, const MaterialModel& material,
                                  const CharacteristicField& chi,
                                  const Eigen::VectorXd& theta1,
                                  const Eigen::VectorXd& w, double scale);

// --- heat-flux cloaking ----------------------------------------------------

// ( int_{Omega_c} |q_chi - qbar|^2 dV )^(1/2); mask is element-wise
double eval_flux_cloak(const Mesh& mesh, const MaterialModel& material,
                       const CharacteristicField& chi,
                       const Eigen::VectorXd& theta1, const Vec3& target,
                       const std::vector<uint8_t>& mask);

// f2 = - int B^T kappa_chi C1 dV with C1 = 1_c (q - qbar)/J; J must be > 0
Eigen::VectorXd adjoint_rhs_flux(const Mesh& mesh, const MaterialModel& material,
                                 const CharacteristicField& chi,
                                 const Eigen::VectorXd& theta1, double j_value,
                                 const Vec3& target,
                                 const std::vector<uint8_t>& mask);

PseudoEnergyField xi_flux_cloak(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& theta1,
                                const Eigen::VectorXd& theta2, double j_value,
                                const Vec3& target,
                                const std::vector<uint8_t>& mask);

// --- temperature average / variance cloaking -------------------------------

double eval_temp_average(const Eigen::VectorXd& theta1, const PortData& port);
double eval_temp_variance(const Eigen::VectorXd& theta1, const PortData& port,
                          double j_av);

Eigen::VectorXd adjoint_rhs_avg(const PortData& port);
Eigen::VectorXd adjoint_rhs_var(const Eigen::VectorXd& theta1,
                                const PortData& port, double j_av);

PseudoEnergyField xi_temp_avg(const Mesh& mesh, const MaterialModel& material,
                              const CharacteristicField& chi,
                              const Eigen::VectorXd& theta1,
                              const Eigen::VectorXd& theta2, const PortData& port);

PseudoEnergyField xi_temp_var(const Mesh& mesh, const MaterialModel& material,
                              const CharacteristicField& chi,
                              const Eigen::VectorXd& theta1,
                              const Eigen::VectorXd& theta2,
                              const Eigen::VectorXd& theta3, const PortData& port,
                              double j_av);

PseudoEnergyField xi_temp_multi(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& theta1,
                                const Eigen::VectorXd& theta2,
                                const Eigen::VectorXd& theta3, const PortData& port,
                                double j_av, double omega, double c4, double c5);

// --- evaluation driver ------------------------------------------------------

// One functional evaluation at a solved state: cost, adjoint solves and the
// pseudo-energy field. skip_update flags the perfect-cloak case (J = 0)
// where the flux adjoint is undefined.
class FunctionalEngine {
 public:
  FunctionalEngine(const Mesh& mesh, const MaterialModel& material,
                   FunctionalSpec spec);

  struct Eval {
    double cost = 0.0;
    PseudoEnergyField xi;
    bool skip_update = false;
    std::optional<Eigen::VectorXd> theta2, theta3;
    double j_av = 0.0, j_vr = 0.0;  // temp-multi components
  };

  Eval evaluate(const DiscreteSystem& sys, SolverContext& ctx,
                const CharacteristicField& chi,
                const Eigen::VectorXd& theta1) const;

  const FunctionalSpec& spec() const { return spec_; }
  FunctionalSpec& spec() { return spec_; }
  const std::vector<uint8_t>& mask() const { return mask_; }
  const PortData& port() const { return port_; }

 private:
  const Mesh& mesh_;
  const MaterialModel& material_;
  FunctionalSpec spec_;
  std::vector<uint8_t> mask_;  // Omega_c element mask (flux cloaking)
  PortData port_;
};

}  // namespace thermotop
