#include "thermopt/io.hpp"

#include <fstream>
#include <iomanip>

namespace thermopt {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

}  // namespace

void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<Field>& fields) {
  auto out = open_out(path);
  const int nv = mesh.dim() + 1;
  out << "# vtk DataFile Version 3.0\nthermopt\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const auto& p : mesh.vertices()) out << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
  out << "CELLS " << mesh.num_cells() << ' ' << mesh.num_cells() * (nv + 1) << '\n';
  for (const auto& c : mesh.cells()) {
    out << nv;
    for (int i = 0; i < nv; ++i) out << ' ' << c[i];
    out << '\n';
  }
  out << "CELL_TYPES " << mesh.num_cells() << '\n';
  const int type = mesh.dim() == 2 ? 5 : 10;
  for (int c = 0; c < mesh.num_cells(); ++c) out << type << '\n';
  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  for (const auto& f : fields) {
    out << "SCALARS " << to_string(f.kind) << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < f.values.size(); ++i) out << f.values[i] << '\n';
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

void write_beta_csv(const std::filesystem::path& path, const Mesh& mesh, const Control& beta) {
  auto out = open_out(path);
  out << "facet,x,y,z,beta\n";
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const Point c = mesh.facet_centroid(mesh.robin_facets()[k]);
    out << k << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << beta.values[static_cast<Eigen::Index>(k)] << '\n';
  }
  if (!out) throw ConfigError("failed writing " + path.string());
}

}  // namespace thermopt
