#include "thermotop/functionals.hpp"

#include <cmath>
#include <iostream>
#include <limits>

namespace thermotop {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// per-element volume averages of the conduction pair energy
// grad(a).kappa.grad(b) and of N.b (nominal kappa, no interpolation)
struct PairEnergy {
  double cond = 0.0;  // (1/V) int grad(a).kappa.grad(b)
  double mean_b = 0.0;  // (1/V) int N.b
};

PairEnergy pair_energy(const Mesh& mesh, const Mat3& kappa, int e,
                       const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const auto& basis = mesh.basis();
  const int n_en = mesh.nodes_per_element();
  const auto& conn = mesh.element_nodes(e);
  Eigen::VectorXd ae(n_en), be(n_en);
  for (int i = 0; i < n_en; ++i) {
    ae[i] = a[conn[i]];
    be[i] = b[conn[i]];
  }
  PairEnergy out;
  double vol = 0.0;
  const auto k = kappa.topLeftCorner(mesh.dim(), mesh.dim());
  for (int q = 0; q < basis.n_qp; ++q) {
    const double w = basis.weights[q];
    const Eigen::VectorXd ga = basis.B[q] * ae;
    const Eigen::VectorXd gb = basis.B[q] * be;
    out.cond += w * ga.dot(k * gb);
    out.mean_b += w * basis.N[q].dot(be);
    vol += w;
  }
  out.cond /= vol;
  out.mean_b /= vol;
  return out;
}

PseudoEnergyField make_field(const Mesh& mesh, const MaterialModel& material) {
  PseudoEnergyField f;
  f.xi = Eigen::VectorXd::Zero(mesh.n_elements());
  f.frozen.resize(mesh.n_elements());
  for (int e = 0; e < mesh.n_elements(); ++e)
    f.frozen[e] = material.region(mesh.element_region(e)).optimizable ? 0 : 1;
  return f;
}

double chi_pow(Phase phase, double beta, double m) {
  return phase == Phase::Hard ? 1.0 : std::pow(beta, m - 1.0);
}

}  // namespace

double eval_compliance(const Mesh& mesh, const MaterialModel& material,
                       const CharacteristicField& chi,
                       const DiscreteSystem& sys,
                       const Eigen::VectorXd& theta1) {
  double value = 0.5 * theta1.dot((sys.K * theta1));
  if (sys.has_convection)
    value -= theta1.dot(sys.K_conv * theta1);  // K holds +h N'N; flip to -h/2
  return value;
}

PseudoEnergyField xi_adjoint_pair(const Mesh& mesh, const MaterialModel& material,
                                  const CharacteristicField& chi,
                                  const Eigen::VectorXd& theta1,
                                  const Eigen::VectorXd& w, double scale) {
  PseudoEnergyField f = make_field(mesh, material);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (f.frozen[e]) {
      f.xi[e] = kInf;
      continue;
    }
    const auto& rm = material.region(mesh.element_region(e));
    const Phase phase = chi.flags[e];
    const PairEnergy pe = pair_energy(mesh, rm.kappa, e, theta1, w);
    const double bk = rm.beta_kappa();
    const double br = rm.beta_r();
    double xi = rm.m_kappa * (1.0 - bk) * chi_pow(phase, bk, rm.m_kappa) * pe.cond;
    if (rm.heat_source != 0.0)
      xi -= rm.m_r * (1.0 - br) * chi_pow(phase, br, rm.m_r) * rm.heat_source *
            pe.mean_b;
    f.xi[e] = scale * xi;
  }
  return f;
}

PseudoEnergyField xi_compliance(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& theta1) {
  // self-adjoint case: pair kernel at w = theta1 (== 2x the kernel at theta1/2)
  return xi_adjoint_pair(mesh, material, chi, theta1, theta1, 1.0);
}

double eval_flux_cloak(const Mesh& mesh, const MaterialModel& material,
                       const CharacteristicField& chi,
                       const Eigen::VectorXd& theta1, const Vec3& target,
                       const std::vector<uint8_t>& mask) {
  bool any = false;
  double acc = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (!mask[e]) continue;
    any = true;
    const auto q = heat_flux(mesh, material, chi, theta1, e);
    const double w = mesh.element_volume() / static_cast<double>(q.size());
    for (const auto& qi : q) acc += w * (qi - target).squaredNorm();
  }
  if (!any)
    std::cerr << "warning: flux-cloak mask is empty, cost is 0\n";
  return std::sqrt(acc);
}

Eigen::VectorXd adjoint_rhs_flux(const Mesh& mesh, const MaterialModel& material,
                                 const CharacteristicField& chi,
                                 const Eigen::VectorXd& theta1, double j_value,
                                 const Vec3& target,
                                 const std::vector<uint8_t>& mask) {
  if (!(j_value > 0.0))
    throw NumericalError("adjoint_rhs_flux: cost is zero, adjoint undefined");
  const auto& basis = mesh.basis();
  const int n_en = mesh.nodes_per_element();
  Eigen::VectorXd f2 = Eigen::VectorXd::Zero(mesh.n_nodes());
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (!mask[e]) continue;
    const Mat3 kappa_chi = interpolate_conductivity(
        material, mesh.element_region(e), chi.flags[e]);
    const auto k = kappa_chi.topLeftCorner(mesh.dim(), mesh.dim());
    const auto& conn = mesh.element_nodes(e);
    Eigen::VectorXd te(n_en);
    for (int a = 0; a < n_en; ++a) te[a] = theta1[conn[a]];
    for (int q = 0; q < basis.n_qp; ++q) {
      const Eigen::VectorXd g = basis.B[q] * te;
      Eigen::VectorXd qv = -(k * g);
      Eigen::VectorXd dev(mesh.dim());
      for (int d = 0; d < mesh.dim(); ++d) dev[d] = (qv[d] - target[d]) / j_value;
      const Eigen::VectorXd contrib =
          basis.weights[q] * (basis.B[q].transpose() * (k * dev));
      for (int a = 0; a < n_en; ++a) f2[conn[a]] -= contrib[a];
    }
  }
  return f2;
}

PseudoEnergyField xi_flux_cloak(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& theta1,
                                const Eigen::VectorXd& theta2, double j_value,
                                const Vec3& target,
                                const std::vector<uint8_t>& mask) {
  PseudoEnergyField f = xi_adjoint_pair(mesh, material, chi, theta1, theta2, 1.0);
  // explicit term: + m_k (1-b_k) chi^{m-1} U_q, U_q = C1 . kappa grad(theta1)
  const auto& basis = mesh.basis();
  const int n_en = mesh.nodes_per_element();
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (f.frozen[e] || !mask[e]) continue;
    const auto& rm = material.region(mesh.element_region(e));
    const auto k_nom = rm.kappa.topLeftCorner(mesh.dim(), mesh.dim());
    const Mat3 kappa_chi =
        interpolate_conductivity(material, mesh.element_region(e), chi.flags[e]);
    const auto k_chi = kappa_chi.topLeftCorner(mesh.dim(), mesh.dim());
    const auto& conn = mesh.element_nodes(e);
    Eigen::VectorXd te(n_en);
    for (int a = 0; a < n_en; ++a) te[a] = theta1[conn[a]];
    double u_q = 0.0, vol = 0.0;
    for (int q = 0; q < basis.n_qp; ++q) {
      const Eigen::VectorXd g = basis.B[q] * te;
      const Eigen::VectorXd qv = -(k_chi * g);
      Eigen::VectorXd dev(mesh.dim());
      for (int d = 0; d < mesh.dim(); ++d) dev[d] = (qv[d] - target[d]) / j_value;
      u_q += basis.weights[q] * dev.dot(k_nom * g);
      vol += basis.weights[q];
    }
    u_q /= vol;
    const double bk = rm.beta_kappa();
    f.xi[e] += rm.m_kappa * (1.0 - bk) * chi_pow(chi.flags[e], bk, rm.m_kappa) * u_q;
  }
  return f;
}

double eval_temp_average(const Eigen::VectorXd& theta1, const PortData& port) {
  if (!(port.measure > 0.0))
    throw std::invalid_argument("eval_temp_average: zero-measure port");
  return port.mass.dot(theta1) / port.measure;
}

double eval_temp_variance(const Eigen::VectorXd& theta1, const PortData& port,
                          double j_av) {
  if (!(port.measure > 0.0))
    throw std::invalid_argument("eval_temp_variance: zero-measure port");
  const Eigen::VectorXd t =
      theta1 - Eigen::VectorXd::Constant(theta1.size(), j_av);
  return t.dot(port.mass_matrix * t) / port.measure;
}

Eigen::VectorXd adjoint_rhs_avg(const PortData& port) { return -port.mass; }

Eigen::VectorXd adjoint_rhs_var(const Eigen::VectorXd& theta1,
                                const PortData& port, double j_av) {
  const Eigen::VectorXd t =
      theta1 - Eigen::VectorXd::Constant(theta1.size(), j_av);
  return -2.0 * (port.mass_matrix * t);
}

PseudoEnergyField xi_temp_avg(const Mesh& mesh, const MaterialModel& material,
                              const CharacteristicField& chi,
                              const Eigen::VectorXd& theta1,
                              const Eigen::VectorXd& theta2,
                              const PortData& port) {
  const double c2 = 1.0 / port.measure;
  return xi_adjoint_pair(mesh, material, chi, theta1, theta2, -c2);
}

PseudoEnergyField xi_temp_var(const Mesh& mesh, const MaterialModel& material,
                              const CharacteristicField& chi,
                              const Eigen::VectorXd& theta1,
                              const Eigen::VectorXd& theta2,
                              const Eigen::VectorXd& theta3, const PortData& port,
                              double j_av) {
  const double c2 = 1.0 / port.measure;
  const double c3 = c2;
  const Eigen::VectorXd t =
      theta1 - Eigen::VectorXd::Constant(theta1.size(), j_av);
  const double a_coef = t.dot(port.mass);  // T' M 1 over the port

  PseudoEnergyField f = xi_adjoint_pair(mesh, material, chi, theta1, theta3, -c3);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    if (f.frozen[e]) continue;
    const auto& rm = material.region(mesh.element_region(e));
    const Phase phase = chi.flags[e];
    const PairEnergy pe = pair_energy(mesh, rm.kappa, e, theta1, theta2);
    const double bk = rm.beta_kappa();
    const double br = rm.beta_r();
    // gamma_3 and gamma_4 terms; gamma_4 keeps the printed box coefficient
    double add = 2.0 * c3 * c2 * a_coef * rm.m_kappa * (1.0 - bk) *
                 chi_pow(phase, bk, rm.m_kappa) * pe.cond;
    if (rm.heat_source != 0.0)
      add -= c3 * c2 * a_coef * rm.m_r * (1.0 - br) * chi_pow(phase, br, rm.m_r) *
             rm.heat_source * pe.mean_b;
    f.xi[e] += add;
  }
  return f;
}

PseudoEnergyField xi_temp_multi(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& theta1,
                                const Eigen::VectorXd& theta2,
                                const Eigen::VectorXd& theta3,
                                const PortData& port, double j_av, double omega,
                                double c4, double c5) {
  if (omega > 0.0 && !std::isfinite(c4))
    throw NumericalError("xi_temp_multi: degenerate average normalization");
  if (omega < 1.0 && !std::isfinite(c5))
    throw NumericalError("xi_temp_multi: degenerate variance normalization");

  if (omega >= 1.0) {
    PseudoEnergyField f = xi_temp_avg(mesh, material, chi, theta1, theta2, port);
    for (int e = 0; e < static_cast<int>(f.xi.size()); ++e)
      if (!f.frozen[e]) f.xi[e] *= c4;
    return f;
  }
  if (omega <= 0.0) {
    PseudoEnergyField f =
        xi_temp_var(mesh, material, chi, theta1, theta2, theta3, port, j_av);
    for (int e = 0; e < static_cast<int>(f.xi.size()); ++e)
      if (!f.frozen[e]) f.xi[e] *= c5;
    return f;
  }
  PseudoEnergyField fa = xi_temp_avg(mesh, material, chi, theta1, theta2, port);
  PseudoEnergyField fv =
      xi_temp_var(mesh, material, chi, theta1, theta2, theta3, port, j_av);
  PseudoEnergyField f = fa;
  for (int e = 0; e < static_cast<int>(f.xi.size()); ++e)
    if (!f.frozen[e])
      f.xi[e] = omega * c4 * fa.xi[e] + (1.0 - omega) * c5 * fv.xi[e];
  return f;
}

FunctionalEngine::FunctionalEngine(const Mesh& mesh, const MaterialModel& material,
                                   FunctionalSpec spec)
    : mesh_(mesh), material_(material), spec_(std::move(spec)) {
  if (spec_.kind == FunctionalKind::FluxCloak) {
    mask_.assign(mesh.n_elements(), 0);
    for (int e = 0; e < mesh.n_elements(); ++e) {
      const int rid = mesh.element_region(e);
      const std::string& name =
          rid == 0 ? std::string("background") : mesh.region_spec()[rid - 1].name;
      for (const auto& m : spec_.mask_regions)
        if (m == name) {
          mask_[e] = 1;
          break;
        }
    }
  }
  if (spec_.kind == FunctionalKind::TempMulti)
    port_ = build_port(mesh, spec_.port);
}

FunctionalEngine::Eval FunctionalEngine::evaluate(
    const DiscreteSystem& sys, SolverContext& ctx, const CharacteristicField& chi,
    const Eigen::VectorXd& theta1) const {
  Eval ev;
  switch (spec_.kind) {
    case FunctionalKind::Compliance: {
      ev.cost = eval_compliance(mesh_, material_, chi, sys, theta1);
      ev.xi = xi_compliance(mesh_, material_, chi, theta1);
      break;
    }
    case FunctionalKind::FluxCloak: {
      ev.cost = eval_flux_cloak(mesh_, material_, chi, theta1,
                                spec_.target_flux, mask_);
      if (ev.cost <= 0.0) {
        ev.skip_update = true;  // perfect cloak, adjoint undefined
        ev.xi = make_field(mesh_, material_);
        break;
      }
      const Eigen::VectorXd f2 = adjoint_rhs_flux(
          mesh_, material_, chi, theta1, ev.cost, spec_.target_flux, mask_);
      ev.theta2 = solve(sys, ctx, f2, /*homogeneous_dirichlet=*/true);
      ev.xi = xi_flux_cloak(mesh_, material_, chi, theta1, *ev.theta2, ev.cost,
                            spec_.target_flux, mask_);
      break;
    }
    case FunctionalKind::TempMulti: {
      ev.theta2 = solve(sys, ctx, adjoint_rhs_avg(port_), true);
      ev.j_av = eval_temp_average(theta1, port_);
      ev.j_vr = eval_temp_variance(theta1, port_, ev.j_av);
      ev.theta3 = solve(sys, ctx, adjoint_rhs_var(theta1, port_, ev.j_av), true);
      if (spec_.omega >= 1.0)
        ev.cost = spec_.c4 * ev.j_av;
      else if (spec_.omega <= 0.0)
        ev.cost = spec_.c5 * ev.j_vr;
      else
        ev.cost = spec_.omega * spec_.c4 * ev.j_av +
                  (1.0 - spec_.omega) * spec_.c5 * ev.j_vr;
      ev.xi = xi_temp_multi(mesh_, material_, chi, theta1, *ev.theta2, *ev.theta3,
                            port_, ev.j_av, spec_.omega, spec_.c4, spec_.c5);
      break;
    }
  }
  return ev;
}

}  // namespace thermotop
