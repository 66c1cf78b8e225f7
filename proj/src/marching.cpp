#include "thermotop/marching.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace thermotop {

namespace {

// linear field on a triangle, exact area fraction of {v >= 0}
double tri_fraction(double a, double b, double c) {
  int pos = (a >= 0) + (b >= 0) + (c >= 0);
  if (pos == 3) return 1.0;
  if (pos == 0) return 0.0;
  if (pos == 1) {
    // rotate the positive value into a
    if (b >= 0) std::swap(a, b), std::swap(b, c);
    else if (c >= 0) std::swap(a, c), std::swap(b, c);
    return a * a / ((a - b) * (a - c));
  }
  // two positive: complement of the single-negative corner
  if (a < 0) std::swap(a, c), std::swap(a, b);
  else if (b < 0) std::swap(b, c);
  return 1.0 - c * c / ((a - c) * (b - c));
}

// linear field on a tetrahedron, exact volume fraction of {v >= 0}
double tet_fraction(double a, double b, double c, double d) {
  double v[4] = {a, b, c, d};
  int pos = 0;
  for (double x : v) pos += (x >= 0);
  if (pos == 4) return 1.0;
  if (pos == 0) return 0.0;

  if (pos == 1 || pos == 3) {
    const bool complement = (pos == 3);
    // isolate the minority vertex in v[0]
    for (int i = 0; i < 4; ++i) {
      const bool minority = complement ? (v[i] < 0) : (v[i] >= 0);
      if (minority) {
        std::swap(v[0], v[i]);
        break;
      }
    }
    double f = (v[0] * v[0] * v[0]) /
               ((v[0] - v[1]) * (v[0] - v[2]) * (v[0] - v[3]));
    f = std::abs(f);
    return complement ? 1.0 - f : f;
  }

  // two positive (A,B), two negative (C,D): wedge of the positive side
  double p[2], q[2];
  int np = 0, nq = 0;
  for (double x : v) (x >= 0 ? p[np++] : q[nq++]) = x;
  const double A = p[0], B = p[1], C = q[0], D = q[1];
  const double tac = A / (A - C), tad = A / (A - D);
  const double tbc = B / (B - C), tbd = B / (B - D);
  // wedge = (A,B,Pbc,Pbd) + (A,Pbc,Pbd,Pad) + (A,Pbc,Pad,Pac), volumes by
  // barycentric determinants
  return tbc * tbd + tad * tbc * (1.0 - tbd) + tac * tad * (1.0 - tbc);
}

}  // namespace

double simplex_hard_fraction(const double* values, int n) {
  if (n == 3) return tri_fraction(values[0], values[1], values[2]);
  if (n == 4) return tet_fraction(values[0], values[1], values[2], values[3]);
  throw std::invalid_argument("simplex_hard_fraction: n must be 3 or 4");
}

double cell_hard_fraction(const double* c, int dim, int subdiv) {
  const int n = 1 << dim;
  bool all_pos = true, all_neg = true;
  for (int i = 0; i < n; ++i) {
    all_pos &= (c[i] >= 0);
    all_neg &= (c[i] < 0);
  }
  if (all_pos) return 1.0;
  if (all_neg) return 0.0;

  const int s = std::max(1, subdiv);
  double acc = 0.0;

  if (dim == 2) {
    auto eval = [&](double u, double v) {
      return c[0] * (1 - u) * (1 - v) + c[1] * u * (1 - v) +
             c[2] * (1 - u) * v + c[3] * u * v;
    };
    const double cell = 1.0 / (s * s);
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < s; ++i) {
        const double u0 = double(i) / s, u1 = double(i + 1) / s;
        const double v0 = double(j) / s, v1 = double(j + 1) / s;
        const double q[4] = {eval(u0, v0), eval(u1, v0), eval(u0, v1),
                             eval(u1, v1)};
        bool ap = true, an = true;
        for (double x : q) ap &= (x >= 0), an &= (x < 0);
        if (ap) {
          acc += cell;
          continue;
        }
        if (an) continue;
        const double ctr = 0.25 * (q[0] + q[1] + q[2] + q[3]);
        // 4 triangles around the centre, each a quarter of the sub-cell
        const double f = tri_fraction(ctr, q[0], q[1]) +
                         tri_fraction(ctr, q[1], q[3]) +
                         tri_fraction(ctr, q[3], q[2]) +
                         tri_fraction(ctr, q[2], q[0]);
        acc += cell * 0.25 * f;
      }
    return acc;
  }

  auto eval = [&](double u, double v, double w) {
    return ((c[0] * (1 - u) + c[1] * u) * (1 - v) +
            (c[2] * (1 - u) + c[3] * u) * v) *
               (1 - w) +
           ((c[4] * (1 - u) + c[5] * u) * (1 - v) +
            (c[6] * (1 - u) + c[7] * u) * v) *
               w;
  };
  const double cell = 1.0 / (s * s * s);
  // face corner ids within a sub-cell (lattice order), per local face
  static const int face_ids[6][4] = {{0, 2, 4, 6}, {1, 3, 5, 7}, {0, 1, 4, 5},
                                     {2, 3, 6, 7}, {0, 1, 2, 3}, {4, 5, 6, 7}};
  // edges of each face quad, as pairs into face_ids (cyclic order)
  static const int quad_edges[4][2] = {{0, 1}, {1, 3}, {3, 2}, {2, 0}};
  for (int k = 0; k < s; ++k)
    for (int j = 0; j < s; ++j)
      for (int i = 0; i < s; ++i) {
        double q[8];
        int idx = 0;
        for (int dk = 0; dk <= 1; ++dk)
          for (int dj = 0; dj <= 1; ++dj)
            for (int di = 0; di <= 1; ++di)
              q[idx++] = eval(double(i + di) / s, double(j + dj) / s,
                              double(k + dk) / s);
        bool ap = true, an = true;
        for (double x : q) ap &= (x >= 0), an &= (x < 0);
        if (ap) {
          acc += cell;
          continue;
        }
        if (an) continue;
        const double ctr =
            0.125 * (q[0] + q[1] + q[2] + q[3] + q[4] + q[5] + q[6] + q[7]);
        double f = 0.0;  // 24 tets: centre, face centre, face edge
        for (const auto& fi : face_ids) {
          const double fc =
              0.25 * (q[fi[0]] + q[fi[1]] + q[fi[2]] + q[fi[3]]);
          for (const auto& ed : quad_edges)
            f += tet_fraction(ctr, fc, q[fi[ed[0]]], q[fi[ed[1]]]);
        }
        acc += cell * f / 24.0;
      }
  return acc;
}

VolumeFractions marching_volume(const Mesh& mesh, const MaterialModel& material,
                                const CharacteristicField& chi,
                                const Eigen::VectorXd& psi, int subdiv) {
  VolumeFractions out;
  out.fraction.resize(mesh.n_elements());
  const int n_en = mesh.nodes_per_element();
  const double ve = mesh.element_volume();
  double hard = 0.0;
  for (int e = 0; e < mesh.n_elements(); ++e) {
    const auto& rm = material.region(mesh.element_region(e));
    double frac;
    if (!rm.optimizable) {
      frac = chi.flags[e] == Phase::Hard ? 1.0 : 0.0;
    } else {
      double corners[8];
      for (int a = 0; a < n_en; ++a) corners[a] = psi[mesh.element_nodes(e)[a]];
      frac = cell_hard_fraction(corners, mesh.dim(), subdiv);
    }
    out.fraction[e] = frac;
    hard += frac;
  }
  out.hard_volume = hard * ve;
  out.soft_volume = (mesh.n_elements() - hard) * ve;
  return out;
}

}  // namespace thermotop
