#include <doctest.h>

#include <random>

#include "thermotop/smoothing.hpp"

using namespace thermotop;

namespace {
double field_integral_nodal(const Mesh& mesh, const Eigen::VectorXd& nodal) {
  // int N xi_hat dV with the same lumped measure the smoother uses
  Eigen::VectorXd lumped = Eigen::VectorXd::Zero(mesh.n_nodes());
  const double share = mesh.element_volume() / mesh.nodes_per_element();
  for (int e = 0; e < mesh.n_elements(); ++e)
    for (int a = 0; a < mesh.nodes_per_element(); ++a)
      lumped[mesh.element_nodes(e)[a]] += share;
  return lumped.dot(nodal);
}
}  // namespace

TEST_CASE("constant fields are fixed points for any tau") {
  Mesh mesh = Mesh::build({6, 5, 4}, {0.25, 0.2, 0.3}, 3, {}, {});
  for (double tau : {0.0, 0.5, 1.0, 3.0}) {
    Smoother sm(mesh, tau);
    Eigen::VectorXd xi = Eigen::VectorXd::Constant(mesh.n_elements(), 4.2);
    Eigen::VectorXd out = sm.smooth(xi, {});
    for (int i = 0; i < mesh.n_nodes(); ++i)
      CHECK(out[i] == doctest::Approx(4.2).epsilon(1e-12));
  }
}

TEST_CASE("tau = 0 degenerates to the lumped nodal projection") {
  Mesh mesh = Mesh::build({3, 1, 1}, {1, 1, 1}, 2, {}, {});
  Smoother sm(mesh, 0.0);
  CHECK(sm.epsilon() == 0.0);
  Eigen::VectorXd xi(3);
  xi << 1.0, 3.0, 5.0;
  Eigen::VectorXd out = sm.smooth(xi, {});
  // interior node columns average the two adjacent element values
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double x = mesh.node_coord(i)[0];
    if (x == 1.0) CHECK(out[i] == doctest::Approx(2.0).epsilon(1e-12));
    if (x == 2.0) CHECK(out[i] == doctest::Approx(4.0).epsilon(1e-12));
    if (x == 0.0) CHECK(out[i] == doctest::Approx(1.0).epsilon(1e-12));
    if (x == 3.0) CHECK(out[i] == doctest::Approx(5.0).epsilon(1e-12));
  }
}

TEST_CASE("epsilon follows tau times the element size") {
  Mesh mesh = Mesh::build({12, 12, 12}, {8.3e-3, 8.3e-3, 8.3e-3}, 3, {}, {});
  Smoother sm(mesh, 1.0);
  CHECK(sm.epsilon() == doctest::Approx(8.3e-3).epsilon(1e-12));
}

TEST_CASE("spike: mean preserved, range respected, spread of order epsilon") {
  Mesh mesh = Mesh::build({21, 21, 1}, {1.0, 1.0, 1.0}, 2, {}, {});
  Smoother sm(mesh, 2.0);
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(mesh.n_elements());
  const int spike = 10 * 21 + 10;  // centre element
  xi[spike] = 100.0;

  Eigen::VectorXd out = sm.smooth(xi, {});

  const double integral_in = 100.0 * mesh.element_volume();
  const double integral_out = field_integral_nodal(mesh, out);
  CHECK(integral_out == doctest::Approx(integral_in).epsilon(1e-10));

  // discrete maximum principle with the lumped operator
  const double lo = xi.minCoeff(), hi = xi.maxCoeff();
  const double slack = 1e-8 * (hi - lo);
  CHECK(out.minCoeff() >= lo - slack);
  CHECK(out.maxCoeff() <= hi + slack);

  // the bump decays over a few epsilon: far corner sees almost nothing
  double centre_val = 0, corner_val = out[0];
  for (int i = 0; i < mesh.n_nodes(); ++i)
    if ((mesh.node_coord(i) - Vec3(10.5, 10.5, 0)).norm() < 0.9)
      centre_val = std::max(centre_val, out[i]);
  CHECK(centre_val > 1.0);
  CHECK(corner_val < 1e-2 * centre_val);
}

TEST_CASE("mean preservation on random fields") {
  Mesh mesh = Mesh::build({7, 6, 5}, {0.3, 0.25, 0.694}, 3, {}, {});
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u(-3, 5);
  for (double tau : {0.3, 1.0}) {
    Smoother sm(mesh, tau);
    Eigen::VectorXd xi(mesh.n_elements());
    for (int e = 0; e < mesh.n_elements(); ++e) xi[e] = u(rng);
    Eigen::VectorXd out = sm.smooth(xi, {});
    CHECK(field_integral_nodal(mesh, out) ==
          doctest::Approx(xi.sum() * mesh.element_volume()).epsilon(1e-10));
    const double slack = 1e-8 * (xi.maxCoeff() - xi.minCoeff());
    CHECK(out.minCoeff() >= xi.minCoeff() - slack);
    CHECK(out.maxCoeff() <= xi.maxCoeff() + slack);
  }
}

TEST_CASE("frozen elements projected at the running maximum") {
  Mesh mesh = Mesh::build({4, 1, 1}, {1, 1, 1}, 2, {}, {});
  Smoother sm(mesh, 0.0);
  Eigen::VectorXd xi(4);
  xi << 1.0, -7.0, 2.0, 0.5;
  std::vector<uint8_t> frozen = {0, 1, 0, 0};
  Eigen::VectorXd out = sm.smooth(xi, frozen);
  // the frozen element contributes max(1, 2, 0.5) = 2 instead of -7
  CHECK(out[0] == doctest::Approx(1.0));
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    const double x = mesh.node_coord(i)[0];
    if (x == 1.0) CHECK(out[i] == doctest::Approx(0.5 * (1.0 + 2.0)));
    if (x == 2.0) CHECK(out[i] == doctest::Approx(0.5 * (2.0 + 2.0)));
  }
}
