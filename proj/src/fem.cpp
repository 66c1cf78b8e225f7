#include "thermotop/fem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>

namespace thermotop {

namespace {
std::atomic<uint64_t> g_system_counter{0};
}

DiscreteSystem assemble(const Mesh& mesh, const MaterialModel& material,
                        const CharacteristicField& chi,
                        const std::vector<BoundarySpecEntry>& bcs) {
  if (static_cast<int>(chi.flags.size()) != mesh.n_elements())
    throw std::invalid_argument("assemble: chi/mesh size mismatch");
  if (static_cast<int>(material.regions.size()) < mesh.n_regions())
    throw std::invalid_argument("assemble: mesh/material region mismatch");

  const int n = mesh.n_nodes();
  const int n_en = mesh.nodes_per_element();
  const auto& basis = mesh.basis();

  DiscreteSystem sys;
  sys.id = ++g_system_counter;
  sys.n = n;
  sys.f = Eigen::VectorXd::Zero(n);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.n_elements()) * n_en * n_en);
  std::vector<Eigen::Triplet<double>> trip_conv;

  // element stiffness for each (region, phase) pair is recomputed per
  // element; kappa is constant within an element so the local matrix is
  // sum_q w B^T kappa B
  Eigen::MatrixXd Ke(n_en, n_en);
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const int region = mesh.element_region(e);
    const Phase phase = chi.flags[e];
    const Mat3 kappa = interpolate_conductivity(material, region, phase);
    const double r = interpolate_heat_source(material, region, phase);
    Ke.setZero();
    for (int q = 0; q < basis.n_qp; ++q) {
      const auto& B = basis.B[q];
      Ke.noalias() +=
          basis.weights[q] *
          (B.transpose() * kappa.topLeftCorner(mesh.dim(), mesh.dim()) * B);
    }
    const auto& conn = mesh.element_nodes(e);
    for (int a = 0; a < n_en; ++a)
      for (int b = 0; b < n_en; ++b)
        trip.emplace_back(conn[a], conn[b], Ke(a, b));
    if (r != 0.0) {
      for (int q = 0; q < basis.n_qp; ++q) {
        const auto& N = basis.N[q];
        for (int a = 0; a < n_en; ++a)
          sys.f[conn[a]] += basis.weights[q] * N(a) * r;
      }
    }
  }

  // boundary terms and Dirichlet collection
  std::vector<double> dirichlet(n, 0.0);
  std::vector<uint8_t> is_dirichlet(n, 0);
  const int n_fn = mesh.nodes_per_face();
  for (const auto& face : mesh.boundary_faces()) {
    if (face.tag < 0) continue;  // adiabatic
    const auto& entry = bcs.at(face.tag);
    const auto& fl = mesh.face_local_nodes(face.local_face);
    const auto& conn = mesh.element_nodes(face.element);
    const auto& fb = mesh.face_basis(face.local_face);
    switch (entry.kind) {
      case BoundaryKind::Adiabatic:
        break;
      case BoundaryKind::Dirichlet:
        for (int a = 0; a < n_fn; ++a) {
          const int node = conn[fl[a]];
          if (is_dirichlet[node] && dirichlet[node] != entry.value)
            throw std::invalid_argument(
                "assemble: conflicting Dirichlet values at a shared node");
          is_dirichlet[node] = 1;
          dirichlet[node] = entry.value;
        }
        break;
      case BoundaryKind::Flux:
        for (size_t q = 0; q < fb.N.size(); ++q)
          for (int a = 0; a < n_fn; ++a)
            sys.f[conn[fl[a]]] -= fb.weights[q] * fb.N[q](a) * entry.value;
        break;
      case BoundaryKind::Convection:
        sys.has_convection = true;
        for (size_t q = 0; q < fb.N.size(); ++q) {
          for (int a = 0; a < n_fn; ++a) {
            sys.f[conn[fl[a]]] +=
                fb.weights[q] * fb.N[q](a) * entry.h * entry.theta_amb;
            for (int b = 0; b < n_fn; ++b)
              trip_conv.emplace_back(conn[fl[a]], conn[fl[b]],
                                     fb.weights[q] * entry.h * fb.N[q](a) *
                                         fb.N[q](b));
          }
        }
        break;
    }
  }

  sys.K.resize(n, n);
  if (!trip_conv.empty()) {
    sys.K_conv.resize(n, n);
    sys.K_conv.setFromTriplets(trip_conv.begin(), trip_conv.end());
    trip.insert(trip.end(), trip_conv.begin(), trip_conv.end());
  }
  sys.K.setFromTriplets(trip.begin(), trip.end());

  // region-wide Dirichlet entries (embedded objects held at a temperature)
  for (const auto& entry : bcs) {
    if (entry.dirichlet_region.empty()) continue;
    int rid = -1;
    for (size_t r = 0; r < mesh.region_spec().size(); ++r)
      if (mesh.region_spec()[r].name == entry.dirichlet_region)
        rid = static_cast<int>(r) + 1;
    if (entry.dirichlet_region == "background") rid = 0;
    if (rid < 0)
      throw std::invalid_argument("assemble: unknown Dirichlet region '" +
                                  entry.dirichlet_region + "'");
    for (int e = 0; e < mesh.n_elements(); ++e) {
      if (mesh.element_region(e) != rid) continue;
      for (int a = 0; a < n_en; ++a) {
        const int node = mesh.element_nodes(e)[a];
        if (is_dirichlet[node] && dirichlet[node] != entry.value)
          throw std::invalid_argument(
              "assemble: conflicting Dirichlet values at a shared node");
        is_dirichlet[node] = 1;
        dirichlet[node] = entry.value;
      }
    }
  }

  for (int i = 0; i < n; ++i)
    if (is_dirichlet[i]) sys.dirichlet_nodes.push_back(i);
  sys.dirichlet_values.resize(sys.dirichlet_nodes.size());
  for (size_t i = 0; i < sys.dirichlet_nodes.size(); ++i)
    sys.dirichlet_values[i] = dirichlet[sys.dirichlet_nodes[i]];

  if (sys.dirichlet_nodes.empty() && !sys.has_convection)
    throw NumericalError(
        "assemble: no Dirichlet node and no convection face, system is "
        "singular");

  // symmetric elimination: reduced operator on free unknowns
  sys.free_index.assign(n, -1);
  for (int i = 0; i < n; ++i)
    if (!is_dirichlet[i]) {
      sys.free_index[i] = static_cast<int>(sys.free_nodes.size());
      sys.free_nodes.push_back(i);
    }
  const int nf = static_cast<int>(sys.free_nodes.size());
  const int nd = static_cast<int>(sys.dirichlet_nodes.size());
  std::vector<int> dir_index(n, -1);
  for (int i = 0; i < nd; ++i) dir_index[sys.dirichlet_nodes[i]] = i;

  std::vector<Eigen::Triplet<double>> tff, tfd;
  for (int col = 0; col < sys.K.outerSize(); ++col) {
    for (SpMat::InnerIterator it(sys.K, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (sys.free_index[i] < 0) continue;
      if (sys.free_index[j] >= 0)
        tff.emplace_back(sys.free_index[i], sys.free_index[j], it.value());
      else
        tfd.emplace_back(sys.free_index[i], dir_index[j], it.value());
    }
  }
  sys.K_ff.resize(nf, nf);
  sys.K_ff.setFromTriplets(tff.begin(), tff.end());
  sys.K_fd.resize(nf, nd);
  sys.K_fd.setFromTriplets(tfd.begin(), tfd.end());

  return sys;
}

Eigen::VectorXd SolverContext::solve(const DiscreteSystem& sys,
                                     const Eigen::VectorXd& rhs_free) {
  const int nf = static_cast<int>(sys.free_nodes.size());
  if (nf == 0) return Eigen::VectorXd();
  if (nf <= kDirectLimit) {
    if (factorized_id_ != sys.id) {
      if (!analyzed_ || analyzed_rows_ != sys.K_ff.rows() ||
          analyzed_nnz_ != sys.K_ff.nonZeros()) {
        ldlt_.analyzePattern(sys.K_ff);
        analyzed_ = true;
        analyzed_rows_ = sys.K_ff.rows();
        analyzed_nnz_ = sys.K_ff.nonZeros();
      }
      ldlt_.factorize(sys.K_ff);
      if (ldlt_.info() != Eigen::Success)
        throw NumericalError("solve: Cholesky factorization failed");
      factorized_id_ = sys.id;
    }
    return ldlt_.solve(rhs_free);
  }
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(1e-12);
  cg.setMaxIterations(20 * nf);
  cg.compute(sys.K_ff);
  Eigen::VectorXd x = cg.solve(rhs_free);
  if (cg.info() != Eigen::Success)
    throw NumericalError("solve: CG did not converge, residual " +
                         std::to_string(cg.error()));
  return x;
}

Eigen::VectorXd solve(const DiscreteSystem& sys, SolverContext& ctx,
                      const Eigen::VectorXd& rhs_full,
                      bool homogeneous_dirichlet) {
  const int nf = static_cast<int>(sys.free_nodes.size());
  Eigen::VectorXd rhs(nf);
  for (int i = 0; i < nf; ++i) rhs[i] = rhs_full[sys.free_nodes[i]];

  Eigen::VectorXd xd = homogeneous_dirichlet
                           ? Eigen::VectorXd::Zero(sys.dirichlet_nodes.size())
                           : sys.dirichlet_values;
  if (xd.size() > 0) rhs.noalias() -= sys.K_fd * xd;

  Eigen::VectorXd xf = ctx.solve(sys, rhs);

  const double rhs_norm = rhs.norm();
  if (rhs_norm > 0) {
    const double res = (sys.K_ff * xf - rhs).norm() / rhs_norm;
    if (res > 1e-10)
      throw NumericalError("solve: residual " + std::to_string(res) +
                           " exceeds 1e-10");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(sys.n);
  for (int i = 0; i < nf; ++i) x[sys.free_nodes[i]] = xf[i];
  for (size_t i = 0; i < sys.dirichlet_nodes.size(); ++i)
    x[sys.dirichlet_nodes[i]] = xd[i];
  return x;
}

std::vector<Vec3> heat_flux(const Mesh& mesh, const MaterialModel& material,
                            const CharacteristicField& chi,
                            const Eigen::VectorXd& theta, int element) {
  const auto& basis = mesh.basis();
  const int n_en = mesh.nodes_per_element();
  const auto& conn = mesh.element_nodes(element);
  Eigen::VectorXd te(n_en);
  for (int a = 0; a < n_en; ++a) te[a] = theta[conn[a]];
  const Mat3 kappa = interpolate_conductivity(
      material, mesh.element_region(element), chi.flags[element]);
  std::vector<Vec3> q(basis.n_qp, Vec3::Zero());
  for (int qp = 0; qp < basis.n_qp; ++qp) {
    Eigen::VectorXd g = basis.B[qp] * te;
    Vec3 g3 = Vec3::Zero();
    for (int d = 0; d < mesh.dim(); ++d) g3[d] = g[d];
    q[qp] = -(kappa * g3);
  }
  return q;
}

Eigen::VectorXd dirichlet_reactions(const DiscreteSystem& sys,
                                    const Eigen::VectorXd& theta) {
  Eigen::VectorXd r = sys.K * theta - sys.f;
  Eigen::VectorXd out(sys.dirichlet_nodes.size());
  for (size_t i = 0; i < sys.dirichlet_nodes.size(); ++i)
    out[i] = r[sys.dirichlet_nodes[i]];
  return out;
}

PortData build_port(const Mesh& mesh, const FaceSelector& sel) {
  PortData port;
  port.faces = mesh.select_boundary_faces(sel);
  port.mass = Eigen::VectorXd::Zero(mesh.n_nodes());
  std::vector<Eigen::Triplet<double>> trip;
  const int n_fn = mesh.nodes_per_face();
  for (const auto& [e, lf] : port.faces) {
    const auto& fl = mesh.face_local_nodes(lf);
    const auto& conn = mesh.element_nodes(e);
    const auto& fb = mesh.face_basis(lf);
    for (size_t q = 0; q < fb.N.size(); ++q)
      for (int a = 0; a < n_fn; ++a) {
        port.mass[conn[fl[a]]] += fb.weights[q] * fb.N[q](a);
        for (int b = 0; b < n_fn; ++b)
          trip.emplace_back(conn[fl[a]], conn[fl[b]],
                            fb.weights[q] * fb.N[q](a) * fb.N[q](b));
      }
    port.measure += mesh.face_area(lf);
  }
  port.mass_matrix.resize(mesh.n_nodes(), mesh.n_nodes());
  port.mass_matrix.setFromTriplets(trip.begin(), trip.end());
  return port;
}

}  // namespace thermotop
