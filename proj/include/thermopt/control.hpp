#pragma once

#include "thermopt/assembly.hpp"
#include "thermopt/fields.hpp"
#include "thermopt/state.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace thermopt {

struct ObjectiveValue {
  double integral_u = 0.0;
  double integral_beta_sq = 0.0;
  double total = 0.0;
};

/// J = int u dx + int beta^2 ds.
ObjectiveValue objective(const P1Space& space, const Vector& u, const Control& beta);

struct AdjointSolution {
  Field p{FieldKind::AdjointP, {}};
  Field q{FieldKind::AdjointQ, {}};
  double residual = 0.0;  ///< relative residual of the transposed system
};

/// Transpose of the discrete state Jacobian with the objective's volume load,
/// so that the gradient is exact for the discrete problem.
AdjointSolution solve_adjoint(const ProblemSpec& spec, const Control& beta, const StateSolution& state,
                              JouleForm form = JouleForm::Weak);

struct SensitivityPair {
  Field psi1{FieldKind::Sensitivity1, {}};
  Field psi2{FieldKind::Sensitivity2, {}};
  Control direction;
  double residual = 0.0;
};

/// Linearized state response to the control variation ell.
SensitivityPair solve_sensitivity(const ProblemSpec& spec, const Control& beta, const StateSolution& state,
                                  const Control& ell, JouleForm form = JouleForm::Weak);

/// int psi1 dx + int 2 beta ell ds.
double sensitivity_derivative(const ProblemSpec& spec, const Control& beta, const SensitivityPair& sens);

/// Per-facet gradient density: 2 beta_f + (1/|f|) int_f (u - u1) p ds.
Vector gradient(const ProblemSpec& spec, const StateSolution& state, const AdjointSolution& adjoint,
                const Control& beta);

/// int_{Gamma_R} g ell ds for facetwise constant g and ell.
double boundary_pairing(const Mesh& mesh, const Vector& g, const Vector& ell);

/// Facetwise min(max(-avg((u - u1) p)/2, 0), m_cap).
Control project_control(const ProblemSpec& spec, const StateSolution& state, const AdjointSolution& adjoint,
                        double m_cap);

enum class OptimizerMode { Sweep, ProjectedGradient };
std::string_view to_string(OptimizerMode mode);
std::optional<OptimizerMode> parse_optimizer_mode(std::string_view name);

struct OptimizerOptions {
  OptimizerMode mode = OptimizerMode::Sweep;
  double relaxation = 0.5;
  double tol = 1e-7;
  int max_outer = 100;
  /// Starting value on every facet; defaults to m_cap / 2.
  std::optional<double> initial_beta;
  SolverOptions state;
};

struct OptimizerRecord {
  int iteration = 0;
  double J = 0.0;
  double optimality_residual = 0.0;
  double change = 0.0;
  double step = 0.0;  ///< relaxation or accepted line-search step
};

enum class OptimizerStatus { Converged, MaxIterations, Stalled };
std::string_view to_string(OptimizerStatus status);

struct OptimizerResult {
  Control beta;
  StateSolution state;
  AdjointSolution adjoint;
  ObjectiveValue J;
  double optimality_residual = 0.0;
  OptimizerStatus status = OptimizerStatus::Converged;
  std::vector<OptimizerRecord> history;
};

/// Solves the optimality system by relaxed projection sweeps or projected gradient with Armijo backtracking.
/// On nonconvergence the best-J iterate is returned with a non-converged status.
OptimizerResult optimize(const ProblemSpec& spec, const OptimizerOptions& opts = {});

}  // namespace thermopt
