#pragma once

#include "thermopt/common.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace thermopt {

enum class BoundaryTag { DirichletTemperature, RobinTemperature };

std::string_view to_string(BoundaryTag tag);
std::optional<BoundaryTag> parse_boundary_tag(std::string_view name);

/// Vertex coordinates; the unused z component is 0 in 2D.
using Point = std::array<double, 3>;
/// Simplex vertex indices; only the first dim+1 entries are used.
using CellVertices = std::array<int, 4>;
/// Facet vertex indices; only the first dim entries are used.
using FacetVertices = std::array<int, 3>;

struct BoundaryFacet {
  FacetVertices vertices{};
  BoundaryTag tag = BoundaryTag::RobinTemperature;
};

/// Conforming simplicial mesh (triangles or tetrahedra) with tagged boundary facets.
///
/// The constructor validates every structural invariant: positive cell volume,
/// each boundary facet owned by exactly one cell, the facet list covering the
/// topological boundary exactly once, and a nonempty Dirichlet part.  A
/// constructed Mesh is immutable.
class Mesh {
 public:
  Mesh(int dim, std::vector<Point> vertices, std::vector<CellVertices> cells,
       std::vector<BoundaryFacet> facets);

  int dim() const { return dim_; }
  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  int num_facets() const { return static_cast<int>(facets_.size()); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<CellVertices>& cells() const { return cells_; }
  const std::vector<BoundaryFacet>& facets() const { return facets_; }
  const Point& vertex(int i) const { return vertices_[i]; }

  double cell_volume(int c) const;
  double facet_measure(int f) const;
  Point facet_centroid(int f) const;
  /// Unit normal pointing out of the owning cell.
  Point facet_normal(int f) const;
  int facet_cell(int f) const { return facet_cell_[f]; }

  double volume() const;
  double max_cell_diameter() const;

  bool is_boundary_vertex(int v) const { return boundary_vertex_[v] != 0; }
  bool is_dirichlet_vertex(int v) const { return dirichlet_vertex_[v] != 0; }
  /// Facet indices carrying RobinTemperature, in facet order; controls index into this list.
  const std::vector<int>& robin_facets() const { return robin_facets_; }

 private:
  int dim_;
  std::vector<Point> vertices_;
  std::vector<CellVertices> cells_;
  std::vector<BoundaryFacet> facets_;
  std::vector<int> facet_cell_;
  std::vector<char> boundary_vertex_;
  std::vector<char> dirichlet_vertex_;
  std::vector<int> robin_facets_;
};

/// One face of an axis-aligned box: axis 0..2, side 0 (lower) or 1 (upper).
struct BoxSide {
  int axis = 0;
  int side = 0;
  auto operator<=>(const BoxSide&) const = default;
};

/// Parses "x0", "x1", "y0", "y1", "z0", "z1".
std::optional<BoxSide> parse_box_side(std::string_view name);

/// Facets on the listed box sides become Dirichlet, all others Robin.
struct TagRule {
  std::set<BoxSide> dirichlet_sides;

  static TagRule all_dirichlet(int dim);
};

/// Right-simplex mesh of [0,e_0] x ... x [0,e_{d-1}]: two right triangles per
/// square in 2D, the six-tetrahedron Kuhn split of each cube in 3D.
Mesh build_rectangle_mesh(const std::vector<double>& extents, const std::vector<int>& divisions,
                          const TagRule& tag_rule);

/// Regular refinement: midpoint 1:4 split of triangles, Bey's 1:8 split of tetrahedra.
/// Old vertices keep their indices; when requested, parents[i] holds the edge
/// endpoints of new vertex i (or {i, i} for an old vertex).
Mesh refine_uniform(const Mesh& mesh, std::vector<std::array<int, 2>>* parents = nullptr);

/// Nodal interpolation of a coarse P1 field onto its uniform refinement.
Vector prolongate(const std::vector<std::array<int, 2>>& parents, const Vector& coarse);

double boundary_measure(const Mesh& mesh, BoundaryTag tag);
double boundary_measure(const Mesh& mesh);

/// Plain-text mesh exchange format (DIM / VERTICES / CELLS / FACETS sections).
void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);

}  // namespace thermopt
