#pragma once

#include "thermopt/common.hpp"
#include "thermopt/fields.hpp"
#include "thermopt/materials.hpp"
#include "thermopt/mesh.hpp"

#include <Eigen/SparseCholesky>

#include <array>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace thermopt {

/// Quadrature on the reference simplex in barycentric coordinates; weights sum to 1.
struct QuadratureRule {
  std::vector<std::array<double, 4>> points;
  std::vector<double> weights;
};

/// Edge-midpoint rule in 2D, symmetric 4-point rule in 3D; both exact for quadratics.
const QuadratureRule& cell_quadrature(int dim);

struct CellGeometry {
  double volume = 0.0;
  /// Constant gradients of the barycentric basis functions.
  std::array<std::array<double, 3>, 4> grad{};
};

/// Continuous piecewise-linear space on a mesh, with cached cell geometry.
class P1Space {
 public:
  explicit P1Space(std::shared_ptr<const Mesh> mesh);

  const Mesh& mesh() const { return *mesh_; }
  std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
  int dim() const { return mesh_->dim(); }
  int num_dofs() const { return mesh_->num_vertices(); }
  const CellGeometry& geometry(int cell) const { return geometry_[cell]; }

  /// Integrals of the basis functions, int lambda_i dx.
  const Vector& basis_integrals() const { return basis_integrals_; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }

  /// Constrained-dof masks: Gamma_D vertices and all boundary vertices.
  const std::vector<char>& dirichlet_mask() const { return dirichlet_mask_; }
  const std::vector<char>& boundary_mask() const { return boundary_mask_; }

  /// Cellwise constant gradient of a P1 field.
  std::array<double, 3> cell_gradient(int cell, const Vector& values) const;
  double value_at(int cell, const std::array<double, 4>& bary, const Vector& values) const;

 private:
  std::shared_ptr<const Mesh> mesh_;
  std::vector<CellGeometry> geometry_;
  Vector basis_integrals_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  std::vector<char> dirichlet_mask_;
  std::vector<char> boundary_mask_;
};

/// Nodal interpolant of a closed-form function.
Vector interpolate(const P1Space& space, const std::function<double(const Point&)>& f);

/// Counters collected while evaluating sigma at quadrature points.
struct AssemblyStats {
  long sigma_clamp_count = 0;
};

SparseMatrix assemble_weighted_stiffness(const P1Space& space, double weight);
/// A_ij = sum_K int sigma(u_h) grad lambda_i . grad lambda_j with sigma evaluated at quadrature nodes.
SparseMatrix assemble_weighted_stiffness(const P1Space& space, const ConductivityModel& model, const Vector& u,
                                         AssemblyStats* stats = nullptr);

/// Matrix-free products K f and A(u) f from cell gradients; exactly zero for constant f.
Vector apply_stiffness(const P1Space& space, const Vector& field);
Vector apply_weighted_stiffness(const P1Space& space, const ConductivityModel& model, const Vector& u,
                                const Vector& field, AssemblyStats* stats = nullptr);

/// Consistent boundary mass on Gamma_R weighted by beta, and the load int beta u1 v ds.
struct RobinTerms {
  SparseMatrix matrix;
  Vector rhs;
};
RobinTerms assemble_robin(const P1Space& space, const Control& beta, const Vector& u1);

/// Local consistent mass matrix entry of a P1 facet: |f| (1 + delta_ij) / (d (d+1)).
double facet_mass_entry(int dim, double measure, bool diagonal);

/// int_f w q ds for nodal P1 traces w, q on one facet.
double facet_product_integral(const Mesh& mesh, int facet, const Vector& w, const Vector& q);

/// b_i = int sigma(u_h) |grad phi_h|^2 lambda_i dx.
Vector assemble_joule_rhs_direct(const P1Space& space, const ConductivityModel& model, const Vector& u,
                                 const Vector& phi, AssemblyStats* stats = nullptr);

/// b_i = int (phi0 - phi) sigma(u) grad phi . grad lambda_i + int sigma(u) (grad phi . grad phi0) lambda_i.
Vector assemble_joule_rhs_weak(const P1Space& space, const ConductivityModel& model, const Vector& u,
                               const Vector& phi, const Vector& phi0, AssemblyStats* stats = nullptr);

enum class JouleForm { Weak, Direct };

struct DirichletValue {
  int dof = 0;
  double value = 0.0;
};

struct LinearSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<DirichletValue> constraints;
};

/// Symmetric elimination: constrained rows/columns zeroed, unit diagonal, rhs lifted.
/// Constraints must sit on boundary vertices.
LinearSystem apply_dirichlet(const Mesh& mesh, LinearSystem system, const std::vector<DirichletValue>& bc);

/// Direct sparse LDL^T with residual check ||Ax - b|| <= 1e-10 ||b||.
Vector solve_spd(const LinearSystem& system);
/// Sparse LU for the nonsymmetric coupled systems, same residual contract.
Vector solve_general(const SparseMatrix& matrix, const Vector& rhs);

struct Norms {
  double l2 = 0.0;
  double h1_semi = 0.0;
  double h1 = 0.0;
  double linf = 0.0;
};

Norms norms(const P1Space& space, const Vector& field);
double boundary_l2(const P1Space& space, const Vector& field, BoundaryTag tag);
/// max over cells of |grad field|.
double max_gradient(const P1Space& space, const Vector& field);

/// Dual norm sup_w <r, w> / ||w||_{H^1} over P1 test functions vanishing on a constrained set.
class DualNorm {
 public:
  DualNorm(const P1Space& space, const std::vector<char>& constrained);
  double operator()(Vector residual) const;

 private:
  std::vector<char> constrained_;
  Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

/// Discrete residuals of the state weak form at (u, phi), full length; constrained rows are zeroed.
struct StateResidual {
  Vector r_u;
  Vector r_phi;
};

struct StateData {
  const ConductivityModel* model = nullptr;
  const Vector* phi0 = nullptr;
  const Vector* u1 = nullptr;
  const Control* beta = nullptr;
  JouleForm form = JouleForm::Weak;
};

StateResidual state_residual(const P1Space& space, const StateData& data, const Vector& u, const Vector& phi);

/// Jacobian of (r_u, r_phi) w.r.t. (u, phi), ordered [u dofs | phi dofs], size 2n x 2n.
/// Constrained rows and columns (Gamma_D for u, boundary for phi) are replaced by identity.
SparseMatrix assemble_state_jacobian(const P1Space& space, const StateData& data, const Vector& u,
                                     const Vector& phi);

}  // namespace thermopt
