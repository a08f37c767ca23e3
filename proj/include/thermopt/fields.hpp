#pragma once

#include "thermopt/common.hpp"
#include "thermopt/mesh.hpp"

#include <string_view>

namespace thermopt {

enum class FieldKind { Temperature, Potential, AdjointP, AdjointQ, Sensitivity1, Sensitivity2 };

std::string_view to_string(FieldKind kind);

/// Nodal P1 values of one unknown.
struct Field {
  FieldKind kind = FieldKind::Temperature;
  Vector values;
};

/// Piecewise-constant heat-transfer coefficient on the Robin facets, indexed
/// like Mesh::robin_facets().  Admissible controls satisfy 0 <= value <= m_cap;
/// variations (directions) reuse the type without that constraint.
struct Control {
  Vector values;
  double m_cap = 0.0;

  static Control constant(const Mesh& mesh, double value, double m_cap);

  int size() const { return static_cast<int>(values.size()); }
  bool admissible() const;
  /// Throws DomainError unless admissible().
  void require_admissible() const;
};

}  // namespace thermopt
