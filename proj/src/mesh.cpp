#include "thermotop/mesh.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace thermotop {

namespace {

constexpr double kGauss = 0.57735026918962576451;  // 1/sqrt(3)

// local face -> node indices for the lattice-ordered connectivity
// 3D nodes: (0,0,0),(1,0,0),(0,1,0),(1,1,0),(0,0,1),(1,0,1),(0,1,1),(1,1,1)
// 2D nodes: (0,0),(1,0),(0,1),(1,1); faces are edges, third entry unused.
constexpr std::array<std::array<int, 4>, 6> kFaceNodes3D = {{
    {0, 2, 4, 6},  // -x
    {1, 3, 5, 7},  // +x
    {0, 1, 4, 5},  // -y
    {2, 3, 6, 7},  // +y
    {0, 1, 2, 3},  // -z
    {4, 5, 6, 7},  // +z
}};
constexpr std::array<std::array<int, 4>, 4> kFaceNodes2D = {{
    {0, 2, -1, -1},  // -x
    {1, 3, -1, -1},  // +x
    {0, 1, -1, -1},  // -y
    {2, 3, -1, -1},  // +y
}};

Eigen::Matrix3d rotation_matrix(const Vec3& axis, double angle_deg) {
  if (angle_deg == 0.0) return Eigen::Matrix3d::Identity();
  const double a = angle_deg * M_PI / 180.0;
  return Eigen::AngleAxisd(a, axis.normalized()).toRotationMatrix();
}

}  // namespace

bool RegionShape::contains(const Vec3& p, int dim) const {
  switch (kind) {
    case Kind::Box: {
      for (int d = 0; d < dim; ++d)
        if (p[d] < box_min[d] || p[d] > box_max[d]) return false;
      return true;
    }
    case Kind::Sphere: {
      const double r = 0.5 * diameters[0];
      Vec3 q = p - center;
      if (dim == 2) q[2] = 0;
      return q.squaredNorm() <= r * r;
    }
    case Kind::Ellipsoid: {
      Vec3 q = p - center;
      if (dim == 2) q[2] = 0;
      q = rotation_matrix(rotation_axis, rotation_deg).transpose() * q;
      double s = 0;
      for (int d = 0; d < dim; ++d) {
        const double r = 0.5 * diameters[d];
        if (r <= 0) return false;
        s += (q[d] / r) * (q[d] / r);
      }
      return s <= 1.0;
    }
  }
  return false;
}

bool FaceSelector::matches(const Vec3& c, const std::array<double, 3>& extent,
                           int dim) const {
  const double plane = side == 0 ? 0.0 : extent[axis];
  const double tol = 1e-9 * (extent[axis] > 0 ? extent[axis] : 1.0);
  if (std::abs(c[axis] - plane) > tol) return false;
  if (disc_center) {
    double d2 = 0;
    for (int d = 0; d < dim; ++d) {
      if (d == axis) continue;
      const double dd = c[d] - (*disc_center)[d];
      d2 += dd * dd;
    }
    if (d2 > disc_radius * disc_radius) return false;
  }
  if (rect_min && rect_max) {
    for (int d = 0; d < dim; ++d) {
      if (d == axis) continue;
      if (c[d] < (*rect_min)[d] || c[d] > (*rect_max)[d]) return false;
    }
  }
  return true;
}

std::array<double, 3> Mesh::extent() const {
  std::array<double, 3> e{};
  for (int d = 0; d < 3; ++d) e[d] = dims_[d] * spacing_[d];
  return e;
}

const std::array<int, 4>& Mesh::face_local_nodes(int local_face) const {
  if (dim_ == 3) return kFaceNodes3D[local_face];
  return kFaceNodes2D[local_face];
}

double Mesh::face_area(int local_face) const {
  const int axis = local_face / 2;
  double a = 1.0;
  for (int d = 0; d < dim_; ++d)
    if (d != axis) a *= spacing_[d];
  return a;
}

Vec3 Mesh::face_centroid(int element, int local_face) const {
  Vec3 c = elem_centroids_[element];
  const int axis = local_face / 2;
  c[axis] += (local_face % 2 == 0 ? -0.5 : 0.5) * spacing_[axis];
  return c;
}

const FaceBasis& Mesh::face_basis(int local_face) const {
  return face_bases_[local_face];
}

double Mesh::typical_element_size() const {
  double p = 1.0;
  for (int d = 0; d < dim_; ++d) p *= spacing_[d];
  return std::pow(p, 1.0 / dim_);
}

std::vector<std::pair<int, int>> Mesh::select_boundary_faces(
    const FaceSelector& sel) const {
  std::vector<std::pair<int, int>> out;
  const auto ext = extent();
  for (const auto& f : faces_) {
    if (sel.matches(face_centroid(f.element, f.local_face), ext, dim_))
      out.emplace_back(f.element, f.local_face);
  }
  return out;
}

Mesh Mesh::build(const std::array<int, 3>& dims,
                 const std::array<double, 3>& spacing, int dim,
                 const std::vector<RegionSpec>& regions,
                 const std::vector<BoundarySpecEntry>& boundary_spec) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("mesh: dim must be 2 or 3");
  for (int d = 0; d < dim; ++d) {
    if (dims[d] < 1) throw std::invalid_argument("mesh: all dims must be >= 1");
    if (spacing[d] <= 0) throw std::invalid_argument("mesh: spacings must be > 0");
  }

  Mesh m;
  m.dim_ = dim;
  m.dims_ = dims;
  m.spacing_ = spacing;
  if (dim == 2) {
    m.dims_[2] = 1;
    m.spacing_[2] = 1.0;
  }
  m.regions_ = regions;
  m.bspec_ = boundary_spec;
  m.elem_volume_ = 1.0;
  for (int d = 0; d < dim; ++d) m.elem_volume_ *= spacing[d];

  const int nx = m.dims_[0], ny = m.dims_[1], nz = dim == 3 ? m.dims_[2] : 1;
  const int mx = nx + 1, my = ny + 1;

  auto lattice_node = [&](int i, int j, int k) { return (k * my + j) * mx + i; };

  // region id per lattice element; -1 marks void
  const int n_lat_elems = nx * ny * nz;
  std::vector<int> lat_region(n_lat_elems, 0);
  std::vector<int> compact_elem(n_lat_elems, -1);
  {
    int le = 0;
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i, ++le) {
          Vec3 c((i + 0.5) * spacing[0], (j + 0.5) * spacing[1],
                 dim == 3 ? (k + 0.5) * spacing[2] : 0.0);
          int rid = 0;  // background
          for (size_t r = 0; r < regions.size(); ++r) {
            if (regions[r].shape.contains(c, dim)) {
              rid = regions[r].is_void ? -1 : static_cast<int>(r) + 1;
              break;  // listed order = descending priority
            }
          }
          lat_region[le] = rid;
        }
  }

  // compact active elements and the nodes they touch
  std::vector<int> node_map((nx + 1) * (ny + 1) * (dim == 3 ? nz + 1 : 1), -1);
  int le = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++le) {
        if (lat_region[le] < 0) continue;
        compact_elem[le] = static_cast<int>(m.elem_nodes_.size());
        std::array<int, 8> conn{};
        conn.fill(-1);
        const int kk = dim == 3 ? 1 : 0;
        int c = 0;
        for (int dk = 0; dk <= kk; ++dk)
          for (int dj = 0; dj <= 1; ++dj)
            for (int di = 0; di <= 1; ++di) {
              const int ln = lattice_node(i + di, j + dj, k + dk);
              if (node_map[ln] < 0) {
                node_map[ln] = static_cast<int>(m.node_coords_.size());
                m.node_coords_.emplace_back(
                    (i + di) * spacing[0], (j + dj) * spacing[1],
                    dim == 3 ? (k + dk) * spacing[2] : 0.0);
              }
              conn[c++] = node_map[ln];
            }
        m.elem_nodes_.push_back(conn);
        m.elem_centroids_.emplace_back((i + 0.5) * spacing[0],
                                       (j + 0.5) * spacing[1],
                                       dim == 3 ? (k + 0.5) * spacing[2] : 0.0);
        m.elem_region_.push_back(lat_region[le]);
      }

  // boundary faces: faces without an active neighbour
  auto lat_elem = [&](int i, int j, int k) -> int {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return -1;
    return (k * ny + j) * nx + i;
  };
  const auto ext = m.extent();
  le = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++le) {
        if (lat_region[le] < 0) continue;
        const int e = compact_elem[le];
        const std::array<int, 6> nb = {lat_elem(i - 1, j, k), lat_elem(i + 1, j, k),
                                       lat_elem(i, j - 1, k), lat_elem(i, j + 1, k),
                                       lat_elem(i, j, k - 1), lat_elem(i, j, k + 1)};
        for (int lf = 0; lf < 2 * dim; ++lf) {
          const bool open = nb[lf] < 0 || lat_region[nb[lf]] < 0;
          if (!open) continue;
          BoundaryFace f;
          f.element = e;
          f.local_face = lf;
          f.tag = -1;
          const Vec3 fc = m.face_centroid(e, lf);
          for (size_t b = 0; b < boundary_spec.size(); ++b) {
            if (!boundary_spec[b].dirichlet_region.empty()) continue;
            if (boundary_spec[b].where.matches(fc, ext, dim)) {
              f.tag = static_cast<int>(b);
              break;  // first match wins
            }
          }
          m.faces_.push_back(f);
        }
      }

  // detect conflicting Dirichlet values on shared faces: two dirichlet
  // entries that both match a face must prescribe the same temperature
  for (const auto& f : m.faces_) {
    const Vec3 fc = m.face_centroid(f.element, f.local_face);
    double value = 0;
    bool have = false;
    for (const auto& b : boundary_spec) {
      if (b.kind != BoundaryKind::Dirichlet || !b.dirichlet_region.empty())
        continue;
      if (!b.where.matches(fc, ext, dim)) continue;
      if (have && b.value != value)
        throw std::invalid_argument(
            "mesh: conflicting Dirichlet values on a shared face");
      have = true;
      value = b.value;
    }
  }

  // reference basis (identical for every element of the structured grid)
  const int n_en = 1 << dim;
  const int n_qp = n_en;
  m.basis_.dim = dim;
  m.basis_.n_nodes = n_en;
  m.basis_.n_qp = n_qp;
  double detJ = m.elem_volume_ / (1 << dim);  // map [-1,1]^dim
  for (int q = 0; q < n_qp; ++q) {
    Vec3 xi(kGauss * ((q & 1) ? 1 : -1), kGauss * ((q & 2) ? 1 : -1),
            kGauss * ((q & 4) ? 1 : -1));
    Eigen::VectorXd N(n_en);
    Eigen::MatrixXd B(dim, n_en);
    for (int a = 0; a < n_en; ++a) {
      const double sx = (a & 1) ? 1.0 : -1.0;
      const double sy = (a & 2) ? 1.0 : -1.0;
      const double sz = (a & 4) ? 1.0 : -1.0;
      double val = (1 + sx * xi[0]) * (1 + sy * xi[1]);
      if (dim == 3) val *= (1 + sz * xi[2]);
      N(a) = val / (1 << dim);
      // d/dx = (2/h) d/dxi
      B(0, a) = sx * (1 + sy * xi[1]) * (dim == 3 ? (1 + sz * xi[2]) : 1.0) /
                (1 << dim) * 2.0 / spacing[0];
      B(1, a) = sy * (1 + sx * xi[0]) * (dim == 3 ? (1 + sz * xi[2]) : 1.0) /
                (1 << dim) * 2.0 / spacing[1];
      if (dim == 3)
        B(2, a) = sz * (1 + sx * xi[0]) * (1 + sy * xi[1]) / (1 << dim) * 2.0 /
                  spacing[2];
    }
    m.basis_.N.push_back(std::move(N));
    m.basis_.B.push_back(std::move(B));
    m.basis_.weights.push_back(detJ);
  }

  // face bases: (dim-1)-dimensional Gauss on each local face
  const int n_fn = 1 << (dim - 1);
  for (int lf = 0; lf < 2 * dim; ++lf) {
    FaceBasis fb;
    fb.n_nodes = n_fn;
    const double area = m.face_area(lf);
    const int n_fqp = n_fn;
    for (int q = 0; q < n_fqp; ++q) {
      Eigen::VectorXd N(n_fn);
      if (dim == 3) {
        const double u = kGauss * ((q & 1) ? 1 : -1);
        const double v = kGauss * ((q & 2) ? 1 : -1);
        N(0) = 0.25 * (1 - u) * (1 - v);
        N(1) = 0.25 * (1 + u) * (1 - v);
        N(2) = 0.25 * (1 - u) * (1 + v);
        N(3) = 0.25 * (1 + u) * (1 + v);
      } else {
        const double u = kGauss * ((q & 1) ? 1 : -1);
        N(0) = 0.5 * (1 - u);
        N(1) = 0.5 * (1 + u);
      }
      fb.N.push_back(std::move(N));
      fb.weights.push_back(area / n_fqp);
    }
    m.face_bases_[lf] = std::move(fb);
  }

  return m;
}

Mesh build_structured_mesh(const std::array<int, 3>& dims,
                           const std::array<double, 3>& spacing, int dim,
                           const std::vector<RegionSpec>& regions,
                           const std::vector<BoundarySpecEntry>& boundary_spec) {
  return Mesh::build(dims, spacing, dim, regions, boundary_spec);
}

const ElementBasis& element_basis(const Mesh& mesh, int element) {
  if (element < 0 || element >= mesh.n_elements())
    throw std::out_of_range("element_basis: invalid element index");
  return mesh.basis();
}

}  // namespace thermotop
