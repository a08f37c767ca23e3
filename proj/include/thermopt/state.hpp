#pragma once

#include "thermopt/assembly.hpp"
#include "thermopt/fields.hpp"
#include "thermopt/materials.hpp"

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace thermopt {

/// Discretized problem data: mesh, conductivity and nodal lifts of the boundary data.
struct ProblemSpec {
  std::shared_ptr<const P1Space> space;
  ConductivityModel model = ConductivityModel::constant(1.0);
  Vector u0;    ///< temperature Dirichlet data, extended to the whole domain
  Vector u1;    ///< ambient temperature of the Robin condition
  Vector phi0;  ///< potential Dirichlet data, extended to the whole domain
  double m_cap = 0.0;

  const P1Space& fe() const { return *space; }
  const Mesh& mesh() const { return space->mesh(); }
  /// Throws ConfigError if u0/u1 are negative or not strictly below u_star.
  void validate() const;
};

struct SolverOptions {
  double tol = 1e-9;
  double damping = 0.7;
  int max_iterations = 200;
  JouleForm joule_form = JouleForm::Weak;
  /// Overrides the default truncation level u_star - 0.1 (u_star - ||u0||_inf).
  std::optional<double> truncation_level;
};

struct PicardRecord {
  int iteration = 0;
  double max_change = 0.0;
  double residual_u = 0.0;
  double residual_phi = 0.0;
  double max_u = 0.0;
};

struct StateSolution {
  Vector u;
  Vector phi;
  int iterations = 0;
  double residual_u = 0.0;
  double residual_phi = 0.0;
  long sigma_clamp_count = 0;
  std::optional<TruncationLevel> truncation_used;
  std::vector<PicardRecord> history;
};

/// Picard iteration hit its cap without meeting the tolerance.
class NonconvergenceError : public std::runtime_error {
 public:
  NonconvergenceError(const std::string& what, std::vector<PicardRecord> history)
      : std::runtime_error(what), history_(std::move(history)) {}
  const std::vector<PicardRecord>& history() const { return history_; }

 private:
  std::vector<PicardRecord> history_;
};

/// The converged temperature reached the truncation level, so the truncated
/// problem's solution is not a solution bounded away from u_star.
class CriticalityError : public std::runtime_error {
 public:
  CriticalityError(const std::string& what, std::vector<PicardRecord> history, double max_u, double level)
      : std::runtime_error(what), history_(std::move(history)), max_u_(max_u), level_(level) {}
  const std::vector<PicardRecord>& history() const { return history_; }
  double max_u() const { return max_u_; }
  double level() const { return level_; }

 private:
  std::vector<PicardRecord> history_;
  double max_u_;
  double level_;
};

/// Damped Picard iteration on the sigma_n-truncated system with a posteriori
/// check that the truncation stayed inactive.
StateSolution solve_state(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts = {});

/// Dual-norm weak residuals (r_u, r_phi) evaluated with the untruncated sigma.
std::pair<double, double> weak_residual(const ProblemSpec& spec, const Control& beta, const Vector& u,
                                        const Vector& phi, JouleForm form = JouleForm::Weak);
std::pair<double, double> weak_residual(const ProblemSpec& spec, const Control& beta, const StateSolution& sol,
                                        JouleForm form = JouleForm::Weak);

/// u_star - max(u); +inf for models without a critical temperature.
double subcritical_margin(const StateSolution& sol, const ConductivityModel& model);

/// Default truncation level for the given data.
double default_truncation_level(const ProblemSpec& spec);

}  // namespace thermopt
