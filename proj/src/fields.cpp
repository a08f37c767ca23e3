#include "thermopt/fields.hpp"

#include <string>

namespace thermopt {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::Temperature: return "u";
    case FieldKind::Potential: return "phi";
    case FieldKind::AdjointP: return "p";
    case FieldKind::AdjointQ: return "q";
    case FieldKind::Sensitivity1: return "psi1";
    case FieldKind::Sensitivity2: return "psi2";
  }
  return "field";
}

Control Control::constant(const Mesh& mesh, double value, double m_cap) {
  Control c;
  c.values = Vector::Constant(static_cast<Eigen::Index>(mesh.robin_facets().size()), value);
  c.m_cap = m_cap;
  return c;
}

bool Control::admissible() const {
  return (values.array() >= 0.0).all() && (values.array() <= m_cap).all();
}

void Control::require_admissible() const {
  if (!admissible()) {
    throw DomainError("control outside the admissible box [0, " + std::to_string(m_cap) + "]");
  }
}

}  // namespace thermopt
