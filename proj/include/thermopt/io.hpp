#pragma once

#include "thermopt/fields.hpp"
#include "thermopt/mesh.hpp"

#include <filesystem>
#include <vector>

namespace thermopt {

/// Legacy ASCII VTK unstructured grid with one POINT_DATA scalar per field.
void write_vtk(const std::filesystem::path& path, const Mesh& mesh, const std::vector<Field>& fields);

/// One row per Robin facet: index, centroid coordinates, value.
void write_beta_csv(const std::filesystem::path& path, const Mesh& mesh, const Control& beta);

}  // namespace thermopt
