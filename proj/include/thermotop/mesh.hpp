// Structured axis-aligned Q1 mesh: quad (2D) / hexahedral (3D) lattice with
// region labels, optional carved-out voids, tagged boundary faces and cached
// shape-function data. Element and node numbering is lattice-lexicographic
// with x fastest; voids are removed from the element list at build time.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace thermotop {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Geometric primitive used for region assignment (centroid-inclusion test).
struct RegionShape {
  enum class Kind { Box, Sphere, Ellipsoid };
  Kind kind = Kind::Box;
  Vec3 box_min = Vec3::Zero();
  Vec3 box_max = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  Vec3 diameters = Vec3::Zero();  // sphere uses diameters[0]
  Vec3 rotation_axis = Vec3::UnitZ();
  double rotation_deg = 0.0;

  bool contains(const Vec3& p, int dim) const;
};

struct RegionSpec {
  std::string name;
  RegionShape shape;
  bool is_void = false;  // carved out of the analysis domain
};

// Face selector: an axis-aligned outer plane of the domain, optionally
// restricted to a disc or rectangle tested on face centroids.
struct FaceSelector {
  int axis = 0;    // 0,1,2
  int side = 0;    // 0 = min plane, 1 = max plane
  std::optional<Vec3> disc_center;
  double disc_radius = 0.0;
  std::optional<Vec3> rect_min;
  std::optional<Vec3> rect_max;

  bool matches(const Vec3& face_centroid, const std::array<double, 3>& extent,
               int dim) const;
};

enum class BoundaryKind : uint8_t { Adiabatic, Dirichlet, Flux, Convection };

struct BoundarySpecEntry {
  FaceSelector where;
  BoundaryKind kind = BoundaryKind::Adiabatic;
  double value = 0.0;      // dirichlet temperature or prescribed flux
  double h = 0.0;          // convection coefficient
  double theta_amb = 0.0;  // convection ambient temperature
  // region-wide Dirichlet (all nodes of a region pinned, e.g. a hot object
  // embedded in the domain); when set, `where` is ignored
  std::string dirichlet_region;
};

struct BoundaryFace {
  int element = -1;     // compact element index
  int local_face = -1;  // 0..2*dim-1: -x,+x,-y,+y,-z,+z
  int tag = -1;         // index into the boundary spec list, -1 = adiabatic
};

// Shape functions, gradients and weights at the 2^dim Gauss points of the
// reference element, premultiplied by the (constant) Jacobian data. Shared
// by all elements of a structured grid.
struct ElementBasis {
  int dim = 3;
  int n_nodes = 8;
  int n_qp = 8;
  // N[q](i), B[q](d,i), weights[q] include det(J)
  std::vector<Eigen::VectorXd> N;
  std::vector<Eigen::MatrixXd> B;
  std::vector<double> weights;
};

// Face shape data for boundary integrals: values of the face nodes' shape
// functions at the face Gauss points, weights include the face Jacobian.
struct FaceBasis {
  int n_nodes = 4;  // nodes on the face
  std::vector<Eigen::VectorXd> N;
  std::vector<double> weights;
};

class Mesh {
 public:
  static Mesh build(const std::array<int, 3>& dims,
                    const std::array<double, 3>& spacing, int dim,
                    const std::vector<RegionSpec>& regions,
                    const std::vector<BoundarySpecEntry>& boundary_spec);

  int dim() const { return dim_; }
  const std::array<int, 3>& dims() const { return dims_; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  std::array<double, 3> extent() const;

  int n_elements() const { return static_cast<int>(elem_nodes_.size()); }
  int n_nodes() const { return static_cast<int>(node_coords_.size()); }
  int nodes_per_element() const { return 1 << dim_; }
  int faces_per_element() const { return 2 * dim_; }
  int nodes_per_face() const { return 1 << (dim_ - 1); }

  const std::array<int, 8>& element_nodes(int e) const { return elem_nodes_[e]; }
  const Vec3& node_coord(int n) const { return node_coords_[n]; }
  Vec3 element_centroid(int e) const { return elem_centroids_[e]; }
  int element_region(int e) const { return elem_region_[e]; }
  double element_volume() const { return elem_volume_; }
  double total_volume() const { return elem_volume_ * n_elements(); }

  const std::vector<BoundaryFace>& boundary_faces() const { return faces_; }
  const std::vector<BoundarySpecEntry>& boundary_spec() const { return bspec_; }
  const std::vector<RegionSpec>& region_spec() const { return regions_; }
  int n_regions() const { return static_cast<int>(regions_.size()) + 1; }

  // local node indices (into element connectivity) of a local face
  const std::array<int, 4>& face_local_nodes(int local_face) const;
  double face_area(int local_face) const;
  Vec3 face_centroid(int element, int local_face) const;

  const ElementBasis& basis() const { return basis_; }
  const FaceBasis& face_basis(int local_face) const;

  // Faces of the outer boundary matched by a selector (used for the
  // cloaking port); returns (element, local_face) pairs.
  std::vector<std::pair<int, int>> select_boundary_faces(
      const FaceSelector& sel) const;

  // typical element size used by the smoother (geometric mean of spacings)
  double typical_element_size() const;

 private:
  int dim_ = 3;
  std::array<int, 3> dims_{};
  std::array<double, 3> spacing_{};
  double elem_volume_ = 0.0;
  std::vector<std::array<int, 8>> elem_nodes_;
  std::vector<Vec3> elem_centroids_;
  std::vector<int> elem_region_;
  std::vector<Vec3> node_coords_;
  std::vector<BoundaryFace> faces_;
  std::vector<BoundarySpecEntry> bspec_;
  std::vector<RegionSpec> regions_;
  ElementBasis basis_;
  std::array<FaceBasis, 6> face_bases_;
};

// Spec'd free-function forms.
Mesh build_structured_mesh(const std::array<int, 3>& dims,
                           const std::array<double, 3>& spacing, int dim,
                           const std::vector<RegionSpec>& regions,
                           const std::vector<BoundarySpecEntry>& boundary_spec);

const ElementBasis& element_basis(const Mesh& mesh, int element);

}  // namespace thermotop
