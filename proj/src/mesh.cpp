#include "thermopt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

namespace thermopt {

namespace {

Point sub(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Point cross(const Point& a, const Point& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double norm(const Point& a) { return std::sqrt(dot(a, a)); }

double signed_volume(int dim, const std::vector<Point>& x, const CellVertices& c) {
  if (dim == 2) {
    const Point a = sub(x[c[1]], x[c[0]]);
    const Point b = sub(x[c[2]], x[c[0]]);
    return 0.5 * (a[0] * b[1] - a[1] * b[0]);
  }
  const Point a = sub(x[c[1]], x[c[0]]);
  const Point b = sub(x[c[2]], x[c[0]]);
  const Point d = sub(x[c[3]], x[c[0]]);
  return dot(a, cross(b, d)) / 6.0;
}

using FacetKey = std::array<int, 3>;

FacetKey facet_key(int dim, const FacetVertices& f) {
  FacetKey k{f[0], f[1], dim == 3 ? f[2] : -1};
  std::sort(k.begin(), k.begin() + dim);
  return k;
}

// Facet i of a simplex is the one opposite local vertex i.
FacetVertices cell_facet(int dim, const CellVertices& c, int i) {
  FacetVertices f{-1, -1, -1};
  int k = 0;
  for (int j = 0; j <= dim; ++j) {
    if (j != i) f[k++] = c[j];
  }
  return f;
}

}  // namespace

std::string_view to_string(BoundaryTag tag) {
  return tag == BoundaryTag::DirichletTemperature ? "DirichletTemperature" : "RobinTemperature";
}

std::optional<BoundaryTag> parse_boundary_tag(std::string_view name) {
  if (name == "DirichletTemperature" || name == "dirichlet") return BoundaryTag::DirichletTemperature;
  if (name == "RobinTemperature" || name == "robin") return BoundaryTag::RobinTemperature;
  return std::nullopt;
}

Mesh::Mesh(int dim, std::vector<Point> vertices, std::vector<CellVertices> cells,
           std::vector<BoundaryFacet> facets)
    : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cells)), facets_(std::move(facets)) {
  if (dim_ != 2 && dim_ != 3) {
    throw ConfigError("mesh dimension must be 2 or 3, got " + std::to_string(dim_));
  }
  const int nv = num_vertices();
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (int j = 0; j <= dim_; ++j) {
      if (cells_[c][j] < 0 || cells_[c][j] >= nv) {
        throw ConfigError("cell " + std::to_string(c) + " references a missing vertex");
      }
    }
    if (!(signed_volume(dim_, vertices_, cells_[c]) > 0.0)) {
      throw ConfigError("cell " + std::to_string(c) + " has nonpositive signed volume");
    }
  }

  // Faces seen once among the cells form the topological boundary.
  std::map<FacetKey, std::pair<int, int>> face_use;  // key -> (count, owning cell)
  for (int c = 0; c < num_cells(); ++c) {
    for (int i = 0; i <= dim_; ++i) {
      auto& entry = face_use[facet_key(dim_, cell_facet(dim_, cells_[c], i))];
      ++entry.first;
      entry.second = c;
    }
  }
  std::size_t boundary_faces = 0;
  for (const auto& [key, use] : face_use) {
    if (use.first > 2) throw ConfigError("nonconforming mesh: a face is shared by more than two cells");
    if (use.first == 1) ++boundary_faces;
  }

  std::set<FacetKey> seen;
  facet_cell_.resize(facets_.size());
  boundary_vertex_.assign(nv, 0);
  dirichlet_vertex_.assign(nv, 0);
  bool any_dirichlet = false;
  for (std::size_t f = 0; f < facets_.size(); ++f) {
    const FacetKey key = facet_key(dim_, facets_[f].vertices);
    auto it = face_use.find(key);
    if (it == face_use.end() || it->second.first != 1) {
      throw ConfigError("facet " + std::to_string(f) + " is not a boundary face of exactly one cell");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("facet " + std::to_string(f) + " is listed twice");
    }
    facet_cell_[f] = it->second.second;
    for (int j = 0; j < dim_; ++j) {
      boundary_vertex_[facets_[f].vertices[j]] = 1;
      if (facets_[f].tag == BoundaryTag::DirichletTemperature) dirichlet_vertex_[facets_[f].vertices[j]] = 1;
    }
    if (facets_[f].tag == BoundaryTag::DirichletTemperature) {
      any_dirichlet = true;
    } else {
      robin_facets_.push_back(static_cast<int>(f));
    }
  }
  if (seen.size() != boundary_faces) {
    throw ConfigError("boundary facets do not cover the whole boundary (" + std::to_string(seen.size()) +
                      " of " + std::to_string(boundary_faces) + ")");
  }
  if (!any_dirichlet) throw ConfigError("the Dirichlet temperature boundary is empty");
}

double Mesh::cell_volume(int c) const { return signed_volume(dim_, vertices_, cells_[c]); }

double Mesh::facet_measure(int f) const {
  const auto& v = facets_[f].vertices;
  if (dim_ == 2) return norm(sub(vertices_[v[1]], vertices_[v[0]]));
  return 0.5 * norm(cross(sub(vertices_[v[1]], vertices_[v[0]]), sub(vertices_[v[2]], vertices_[v[0]])));
}

Point Mesh::facet_centroid(int f) const {
  Point c{0, 0, 0};
  for (int j = 0; j < dim_; ++j) {
    for (int k = 0; k < 3; ++k) c[k] += vertices_[facets_[f].vertices[j]][k] / dim_;
  }
  return c;
}

Point Mesh::facet_normal(int f) const {
  const auto& v = facets_[f].vertices;
  Point n;
  if (dim_ == 2) {
    const Point t = sub(vertices_[v[1]], vertices_[v[0]]);
    n = {t[1], -t[0], 0.0};
  } else {
    n = cross(sub(vertices_[v[1]], vertices_[v[0]]), sub(vertices_[v[2]], vertices_[v[0]]));
  }
  const double len = norm(n);
  for (auto& x : n) x /= len;
  // Orient away from the vertex of the owning cell that is not on the facet.
  const auto& cell = cells_[facet_cell_[f]];
  for (int j = 0; j <= dim_; ++j) {
    const int w = cell[j];
    if (std::find(v.begin(), v.begin() + dim_, w) == v.begin() + dim_) {
      if (dot(n, sub(vertices_[w], vertices_[v[0]])) > 0) {
        for (auto& x : n) x = -x;
      }
      break;
    }
  }
  return n;
}

double Mesh::volume() const {
  double total = 0.0;
  for (int c = 0; c < num_cells(); ++c) total += cell_volume(c);
  return total;
}

double Mesh::max_cell_diameter() const {
  double h = 0.0;
  for (const auto& c : cells_) {
    for (int i = 0; i <= dim_; ++i) {
      for (int j = i + 1; j <= dim_; ++j) h = std::max(h, norm(sub(vertices_[c[i]], vertices_[c[j]])));
    }
  }
  return h;
}

std::optional<BoxSide> parse_box_side(std::string_view name) {
  if (name.size() != 2) return std::nullopt;
  const int axis = name[0] == 'x' ? 0 : name[0] == 'y' ? 1 : name[0] == 'z' ? 2 : -1;
  const int side = name[1] == '0' ? 0 : name[1] == '1' ? 1 : -1;
  if (axis < 0 || side < 0) return std::nullopt;
  return BoxSide{axis, side};
}

TagRule TagRule::all_dirichlet(int dim) {
  TagRule rule;
  for (int a = 0; a < dim; ++a) {
    rule.dirichlet_sides.insert({a, 0});
    rule.dirichlet_sides.insert({a, 1});
  }
  return rule;
}

Mesh build_rectangle_mesh(const std::vector<double>& extents, const std::vector<int>& divisions,
                          const TagRule& tag_rule) {
  const int dim = static_cast<int>(extents.size());
  if (dim != 2 && dim != 3) throw ConfigError("only 2D and 3D boxes are supported");
  if (static_cast<int>(divisions.size()) != dim) throw ConfigError("extents and divisions differ in length");
  for (int a = 0; a < dim; ++a) {
    if (!(extents[a] > 0.0)) throw ConfigError("box extents must be positive");
    if (divisions[a] < 1) throw ConfigError("division counts must be at least 1");
  }
  bool has_dirichlet = false;
  for (const auto& s : tag_rule.dirichlet_sides) {
    if (s.axis >= dim) throw ConfigError("tag rule names an axis beyond the mesh dimension");
    has_dirichlet = true;
  }
  if (!has_dirichlet) throw ConfigError("tag rule assigns no facet to the Dirichlet boundary");

  const int nx = divisions[0], ny = divisions[1], nz = dim == 3 ? divisions[2] : 0;
  auto vid = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };

  std::vector<Point> vertices;
  for (int k = 0; k <= nz; ++k) {
    for (int j = 0; j <= ny; ++j) {
      for (int i = 0; i <= nx; ++i) {
        vertices.push_back({extents[0] * i / nx, extents[1] * j / ny, dim == 3 ? extents[2] * k / nz : 0.0});
      }
    }
  }

  std::vector<CellVertices> cells;
  if (dim == 2) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const int v00 = vid(i, j, 0), v10 = vid(i + 1, j, 0), v01 = vid(i, j + 1, 0), v11 = vid(i + 1, j + 1, 0);
        cells.push_back({v00, v10, v11, -1});
        cells.push_back({v00, v11, v01, -1});
      }
    }
  } else {
    // Kuhn split: one tetrahedron per axis permutation, all sharing the main diagonal.
    std::array<int, 3> perm{0, 1, 2};
    std::vector<std::array<int, 3>> perms;
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.end()));
    for (int k = 0; k < nz; ++k) {
      for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
          for (const auto& p : perms) {
            std::array<int, 3> off{0, 0, 0};
            CellVertices c{};
            c[0] = vid(i, j, k);
            for (int s = 0; s < 3; ++s) {
              off[p[s]] = 1;
              c[s + 1] = vid(i + off[0], j + off[1], k + off[2]);
            }
            if (signed_volume(3, vertices, c) < 0) std::swap(c[2], c[3]);
            cells.push_back(c);
          }
        }
      }
    }
  }

  // Boundary facets: faces seen once, tagged by which box side they lie on.
  std::map<FacetKey, int> count;
  for (const auto& c : cells) {
    for (int i = 0; i <= dim; ++i) ++count[facet_key(dim, cell_facet(dim, c, i))];
  }
  std::vector<BoundaryFacet> facets;
  for (const auto& c : cells) {
    for (int i = 0; i <= dim; ++i) {
      const FacetVertices f = cell_facet(dim, c, i);
      if (count[facet_key(dim, f)] != 1) continue;
      BoundaryTag tag = BoundaryTag::RobinTemperature;
      for (int a = 0; a < dim; ++a) {
        for (int side = 0; side < 2; ++side) {
          const double plane = side == 0 ? 0.0 : extents[a];
          bool on_plane = true;
          for (int j = 0; j < dim; ++j) {
            on_plane = on_plane && std::abs(vertices[f[j]][a] - plane) <= 1e-12 * extents[a];
          }
          if (on_plane && tag_rule.dirichlet_sides.count({a, side})) tag = BoundaryTag::DirichletTemperature;
        }
      }
      facets.push_back({f, tag});
    }
  }
  return Mesh(dim, std::move(vertices), std::move(cells), std::move(facets));
}

Mesh refine_uniform(const Mesh& mesh, std::vector<std::array<int, 2>>* parents) {
  const int dim = mesh.dim();
  std::vector<Point> vertices = mesh.vertices();
  std::map<std::pair<int, int>, int> midpoint;
  if (parents) {
    parents->clear();
    for (int v = 0; v < mesh.num_vertices(); ++v) parents->push_back({v, v});
  }
  auto mid = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Point& pa = vertices[a];
    const Point& pb = vertices[b];
    vertices.push_back({0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1]), 0.5 * (pa[2] + pb[2])});
    const int id = static_cast<int>(vertices.size()) - 1;
    midpoint.emplace(key, id);
    if (parents) parents->push_back({a, b});
    return id;
  };

  std::vector<CellVertices> cells;
  auto push = [&](CellVertices c) {
    if (signed_volume(dim, vertices, c) < 0) std::swap(c[1], c[2]);
    cells.push_back(c);
  };
  for (const auto& c : mesh.cells()) {
    if (dim == 2) {
      const int m01 = mid(c[0], c[1]), m12 = mid(c[1], c[2]), m02 = mid(c[0], c[2]);
      push({c[0], m01, m02, -1});
      push({m01, c[1], m12, -1});
      push({m02, m12, c[2], -1});
      push({m01, m12, m02, -1});
    } else {
      const int x0 = c[0], x1 = c[1], x2 = c[2], x3 = c[3];
      const int x01 = mid(x0, x1), x02 = mid(x0, x2), x03 = mid(x0, x3);
      const int x12 = mid(x1, x2), x13 = mid(x1, x3), x23 = mid(x2, x3);
      push({x0, x01, x02, x03});
      push({x01, x1, x12, x13});
      push({x02, x12, x2, x23});
      push({x03, x13, x23, x3});
      push({x01, x02, x03, x13});
      push({x01, x02, x12, x13});
      push({x02, x03, x13, x23});
      push({x02, x12, x13, x23});
    }
  }

  std::vector<BoundaryFacet> facets;
  for (const auto& f : mesh.facets()) {
    const auto& v = f.vertices;
    if (dim == 2) {
      const int m = mid(v[0], v[1]);
      facets.push_back({{v[0], m, -1}, f.tag});
      facets.push_back({{m, v[1], -1}, f.tag});
    } else {
      const int m01 = mid(v[0], v[1]), m12 = mid(v[1], v[2]), m02 = mid(v[0], v[2]);
      facets.push_back({{v[0], m01, m02}, f.tag});
      facets.push_back({{m01, v[1], m12}, f.tag});
      facets.push_back({{m02, m12, v[2]}, f.tag});
      facets.push_back({{m01, m12, m02}, f.tag});
    }
  }
  return Mesh(dim, std::move(vertices), std::move(cells), std::move(facets));
}

double boundary_measure(const Mesh& mesh, BoundaryTag tag) {
  double total = 0.0;
  for (int f = 0; f < mesh.num_facets(); ++f) {
    if (mesh.facets()[f].tag == tag) total += mesh.facet_measure(f);
  }
  return total;
}

double boundary_measure(const Mesh& mesh) {
  double total = 0.0;
  for (int f = 0; f < mesh.num_facets(); ++f) total += mesh.facet_measure(f);
  return total;
}

void write_mesh(std::ostream& out, const Mesh& mesh) {
  const int dim = mesh.dim();
  out.precision(17);
  out << "DIM " << dim << "\n";
  out << "VERTICES " << mesh.num_vertices() << "\n";
  for (const auto& p : mesh.vertices()) {
    for (int k = 0; k < dim; ++k) out << (k ? " " : "") << p[k];
    out << "\n";
  }
  out << "CELLS " << mesh.num_cells() << "\n";
  for (const auto& c : mesh.cells()) {
    for (int k = 0; k <= dim; ++k) out << (k ? " " : "") << c[k];
    out << "\n";
  }
  out << "FACETS " << mesh.num_facets() << "\n";
  for (const auto& f : mesh.facets()) {
    for (int k = 0; k < dim; ++k) out << f.vertices[k] << " ";
    out << to_string(f.tag) << "\n";
  }
}

namespace {

// Reads the next line that is neither blank nor a '#' comment.
bool next_content_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    const auto pos = line.find_first_not_of(" \t\r");
    if (pos == std::string::npos || line[pos] == '#') continue;
    return true;
  }
  return false;
}

[[noreturn]] void mesh_syntax(int lineno, const std::string& what) {
  throw ConfigError("mesh file line " + std::to_string(lineno) + ": " + what);
}

int read_header(std::istream& in, int& lineno, const std::string& name) {
  std::string line;
  if (!next_content_line(in, line, lineno)) mesh_syntax(lineno, "expected section " + name);
  std::istringstream ss(line);
  std::string word;
  long count = -1;
  ss >> word >> count;
  if (word != name || !ss || count < 0) mesh_syntax(lineno, "expected '" + name + " <count>'");
  return static_cast<int>(count);
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  int lineno = 0;
  const int dim = read_header(in, lineno, "DIM");
  if (dim != 2 && dim != 3) mesh_syntax(lineno, "DIM must be 2 or 3");

  std::string line;
  const int nv = read_header(in, lineno, "VERTICES");
  std::vector<Point> vertices(nv, Point{0, 0, 0});
  for (int i = 0; i < nv; ++i) {
    if (!next_content_line(in, line, lineno)) mesh_syntax(lineno, "unexpected end of VERTICES");
    std::istringstream ss(line);
    for (int k = 0; k < dim; ++k) ss >> vertices[i][k];
    if (!ss) mesh_syntax(lineno, "expected " + std::to_string(dim) + " coordinates");
  }

  const int nc = read_header(in, lineno, "CELLS");
  std::vector<CellVertices> cells(nc, CellVertices{-1, -1, -1, -1});
  for (int i = 0; i < nc; ++i) {
    if (!next_content_line(in, line, lineno)) mesh_syntax(lineno, "unexpected end of CELLS");
    std::istringstream ss(line);
    for (int k = 0; k <= dim; ++k) ss >> cells[i][k];
    if (!ss) mesh_syntax(lineno, "expected " + std::to_string(dim + 1) + " vertex indices");
  }

  const int nf = read_header(in, lineno, "FACETS");
  std::vector<BoundaryFacet> facets(nf);
  for (int i = 0; i < nf; ++i) {
    if (!next_content_line(in, line, lineno)) mesh_syntax(lineno, "unexpected end of FACETS");
    std::istringstream ss(line);
    facets[i].vertices = {-1, -1, -1};
    for (int k = 0; k < dim; ++k) ss >> facets[i].vertices[k];
    std::string tag;
    ss >> tag;
    if (!ss) mesh_syntax(lineno, "expected " + std::to_string(dim) + " vertex indices and a tag");
    const auto parsed = parse_boundary_tag(tag);
    if (!parsed) mesh_syntax(lineno, "unknown boundary tag '" + tag + "'");
    facets[i].tag = *parsed;
  }
  if (next_content_line(in, line, lineno)) mesh_syntax(lineno, "trailing content after FACETS");
  return Mesh(dim, std::move(vertices), std::move(cells), std::move(facets));
}

Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

Vector prolongate(const std::vector<std::array<int, 2>>& parents, const Vector& coarse) {
  Vector fine(static_cast<Eigen::Index>(parents.size()));
  for (std::size_t i = 0; i < parents.size(); ++i) {
    fine[static_cast<Eigen::Index>(i)] = 0.5 * (coarse[parents[i][0]] + coarse[parents[i][1]]);
  }
  return fine;
}

}  // namespace thermopt
