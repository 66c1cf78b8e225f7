// Finite-difference ground truth for the pseudo-energy fields: one element's
// characteristic value is continuously parametrized through the reference
// material data (a top-priority sliver region around its centroid), the
// problem is re-solved, and the cost is centrally differenced. Independent
// of the sensitivity code paths it checks.
#pragma once

#include <cmath>
#include <functional>

#include "thermotop/functionals.hpp"
#include "thermotop/optimizer.hpp"

namespace thermotop::testing {

struct FdProblem {
  const Mesh& mesh;
  const MaterialModel& material;
  const CharacteristicField& chi;
  FunctionalSpec functional;
  std::array<int, 3> dims;
  std::array<double, 3> spacing;
  int dim;
  std::vector<RegionSpec> regions;
  std::vector<BoundarySpecEntry> bcs;
};

// Scalar cost whose derivative the pseudo-energy encodes, evaluated on an
// arbitrary (mesh, material, chi). For the compliance problem this is the
// discrete conductance objective -theta^T K theta (the minimized quantity);
// for the others it is the functional itself.
inline double fd_cost(const Mesh& mesh, const MaterialModel& material,
                      const CharacteristicField& chi,
                      const FunctionalSpec& spec,
                      const std::vector<BoundarySpecEntry>& bcs) {
  SolverContext solver;
  DiscreteSystem sys = assemble(mesh, material, chi, bcs);
  Eigen::VectorXd theta1 = solve(sys, solver, sys.f, false);
  switch (spec.kind) {
    case FunctionalKind::Compliance:
      return -2.0 * eval_compliance(mesh, material, chi, sys, theta1);
    case FunctionalKind::FluxCloak: {
      FunctionalEngine engine(mesh, material, spec);
      return eval_flux_cloak(mesh, material, chi, theta1, spec.target_flux,
                             engine.mask());
    }
    case FunctionalKind::TempMulti: {
      PortData port = build_port(mesh, spec.port);
      const double j_av = eval_temp_average(theta1, port);
      const double j_vr = eval_temp_variance(theta1, port, j_av);
      if (spec.omega >= 1.0) return spec.c4 * j_av;
      if (spec.omega <= 0.0) return spec.c5 * j_vr;
      return spec.omega * spec.c4 * j_av + (1.0 - spec.omega) * spec.c5 * j_vr;
    }
  }
  return 0.0;
}

// cost at hard-fraction parameter s of one element: kappa and r scale with
// (beta + s(1-beta))^m through a dedicated reference material
inline double fd_cost_at(const FdProblem& p, int elem, double s) {
  const auto& rm = p.material.region(p.mesh.element_region(elem));
  const double bk = rm.beta_kappa();
  const double br = rm.beta_r();

  RegionSpec sliver;
  sliver.name = "__fd_probe";
  sliver.shape.kind = RegionShape::Kind::Box;
  const Vec3 c = p.mesh.element_centroid(elem);
  for (int d = 0; d < 3; ++d) {
    sliver.shape.box_min[d] = c[d] - 0.25 * p.spacing[d];
    sliver.shape.box_max[d] = c[d] + 0.25 * p.spacing[d];
  }
  std::vector<RegionSpec> regions;
  regions.push_back(sliver);  // listed first = top priority
  regions.insert(regions.end(), p.regions.begin(), p.regions.end());

  Mesh mesh = Mesh::build(p.dims, p.spacing, p.dim, regions, p.bcs);

  RegionMaterial probe = rm;
  probe.name = "__fd_probe";
  probe.kappa = rm.kappa * std::pow(bk + s * (1.0 - bk), rm.m_kappa);
  probe.heat_source = rm.heat_source * std::pow(br + s * (1.0 - br), rm.m_r);
  probe.optimizable = true;

  MaterialModel material;
  material.regions.push_back(p.material.regions[0]);  // background
  material.regions.push_back(probe);
  material.regions.insert(material.regions.end(),
                          p.material.regions.begin() + 1,
                          p.material.regions.end());
  // region ids shifted by one for the original non-background regions
  // except the probe element, which must read the probe entry; regions are
  // matched by the rebuilt mesh's centroid test, so nothing else to do.

  CharacteristicField chi = p.chi;
  chi.flags[elem] = Phase::Hard;  // probe data already carries the s factor

  return fd_cost(mesh, material, chi, p.functional, p.bcs);
}

// central difference (fourth order, to keep the roundoff floor well below
// the tolerance) of the cost w.r.t. the continuous chi parameter of one
// element, per unit element volume; the matching pseudo-energy is -this
inline double fd_sensitivity(const FdProblem& p, int elem, double h = 1e-3) {
  const double s0 = p.chi.flags[elem] == Phase::Hard ? 1.0 : 0.0;
  const double jm2 = fd_cost_at(p, elem, s0 - 2 * h);
  const double jm1 = fd_cost_at(p, elem, s0 - h);
  const double jp1 = fd_cost_at(p, elem, s0 + h);
  const double jp2 = fd_cost_at(p, elem, s0 + 2 * h);
  return (jm2 - 8.0 * jm1 + 8.0 * jp1 - jp2) / (12.0 * h) /
         p.mesh.element_volume();
}

}  // namespace thermotop::testing
