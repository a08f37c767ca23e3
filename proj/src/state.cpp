#include "thermopt/state.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace thermopt {

void ProblemSpec::validate() const {
  if (!space) throw ConfigError("problem has no mesh");
  const int n = space->num_dofs();
  if (u0.size() != n || u1.size() != n || phi0.size() != n) {
    throw ConfigError("boundary data length does not match the vertex count");
  }
  if (!u0.allFinite() || !u1.allFinite() || !phi0.allFinite()) throw ConfigError("boundary data must be finite");
  if ((u0.array() < 0.0).any() || (u1.array() < 0.0).any()) {
    throw ConfigError("temperature data u0, u1 must be nonnegative");
  }
  const double u_star = model.u_star();
  if (!(u0.maxCoeff() < u_star) || !(u1.maxCoeff() < u_star)) {
    throw ConfigError("boundary data not subcritical: max(u0) = " + std::to_string(u0.maxCoeff()) +
                      ", max(u1) = " + std::to_string(u1.maxCoeff()) + ", u_star = " + std::to_string(u_star));
  }
  if (!(m_cap >= 0.0)) throw ConfigError("control bound M must be nonnegative");
}

double default_truncation_level(const ProblemSpec& spec) {
  const double u_star = spec.model.u_star();
  return u_star - 0.1 * (u_star - spec.u0.cwiseAbs().maxCoeff());
}

namespace {

std::vector<DirichletValue> constraints(const std::vector<char>& mask, const Vector& values) {
  std::vector<DirichletValue> bc;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bc.push_back({static_cast<int>(i), values[static_cast<Eigen::Index>(i)]});
  }
  return bc;
}

}  // namespace

StateSolution solve_state(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts) {
  spec.validate();
  beta.require_admissible();
  if (!(opts.damping > 0.0 && opts.damping <= 1.0)) throw ConfigError("damping must lie in (0, 1]");
  if (!(opts.tol > 0.0)) throw ConfigError("solver tolerance must be positive");

  const P1Space& fe = spec.fe();
  const Mesh& mesh = fe.mesh();

  StateSolution sol;
  ConductivityModel model = spec.model;
  if (std::isfinite(spec.model.u_star())) {
    const double n = opts.truncation_level.value_or(default_truncation_level(spec));
    model = truncate(spec.model, n);
    sol.truncation_used = model.truncation();
  }

  // Both fields are solved as corrections to the lifted data, which vanish on the constrained vertices.
  const Vector zero = Vector::Zero(fe.num_dofs());
  const auto bc_u = constraints(fe.dirichlet_mask(), zero);
  const auto bc_phi = constraints(fe.boundary_mask(), zero);
  const RobinTerms robin = assemble_robin(fe, beta, spec.u1 - spec.u0);
  const Vector lift_u = robin.rhs - apply_stiffness(fe, spec.u0);
  const SparseMatrix heat = fe.stiffness() + robin.matrix;
  const DualNorm dual_u(fe, fe.dirichlet_mask());
  const DualNorm dual_phi(fe, fe.boundary_mask());
  const StateData data{&model, &spec.phi0, &spec.u1, &beta, opts.joule_form};

  AssemblyStats stats;
  auto solve_phi = [&](const Vector& u) {
    LinearSystem sys{assemble_weighted_stiffness(fe, model, u, &stats),
                     -apply_weighted_stiffness(fe, model, u, spec.phi0), {}};
    return Vector(spec.phi0 + solve_spd(apply_dirichlet(mesh, std::move(sys), bc_phi)));
  };

  Vector u = spec.u0;
  Vector phi = solve_phi(u);
  bool converged = false;
  for (int k = 1; k <= opts.max_iterations; ++k) {
    const Vector joule = opts.joule_form == JouleForm::Weak
                             ? assemble_joule_rhs_weak(fe, model, u, phi, spec.phi0, &stats)
                             : assemble_joule_rhs_direct(fe, model, u, phi, &stats);
    LinearSystem sys{heat, joule + lift_u, {}};
    const Vector u_new = spec.u0 + solve_spd(apply_dirichlet(mesh, std::move(sys), bc_u));
    const Vector step = opts.damping * (u_new - u);
    u += step;
    phi = solve_phi(u);

    const StateResidual r = state_residual(fe, data, u, phi);
    PicardRecord rec{k, step.cwiseAbs().maxCoeff(), dual_u(r.r_u), dual_phi(r.r_phi), u.maxCoeff()};
    sol.history.push_back(rec);
    if (!std::isfinite(rec.max_change) || !std::isfinite(rec.residual_u)) break;
    if (rec.max_change <= opts.tol && rec.residual_u <= opts.tol && rec.residual_phi <= opts.tol) {
      converged = true;
      break;
    }
  }
  sol.iterations = static_cast<int>(sol.history.size());
  sol.sigma_clamp_count = stats.sigma_clamp_count;
  if (!converged) {
    std::ostringstream msg;
    msg << "Picard iteration did not converge in " << sol.iterations << " iterations";
    if (!sol.history.empty()) {
      msg << " (last change " << sol.history.back().max_change << ", residual " << sol.history.back().residual_u
          << ")";
    }
    throw NonconvergenceError(msg.str(), sol.history);
  }
  if (sol.truncation_used && u.maxCoeff() >= sol.truncation_used->n) {
    std::ostringstream msg;
    msg << "solution not bounded away from u_*: max(u) = " << u.maxCoeff() << " >= truncation level "
        << sol.truncation_used->n;
    throw CriticalityError(msg.str(), sol.history, u.maxCoeff(), sol.truncation_used->n);
  }
  sol.u = std::move(u);
  sol.phi = std::move(phi);
  std::tie(sol.residual_u, sol.residual_phi) = weak_residual(spec, beta, sol.u, sol.phi, opts.joule_form);
  return sol;
}

std::pair<double, double> weak_residual(const ProblemSpec& spec, const Control& beta, const Vector& u,
                                        const Vector& phi, JouleForm form) {
  const P1Space& fe = spec.fe();
  const StateData data{&spec.model, &spec.phi0, &spec.u1, &beta, form};
  const StateResidual r = state_residual(fe, data, u, phi);
  return {DualNorm(fe, fe.dirichlet_mask())(r.r_u), DualNorm(fe, fe.boundary_mask())(r.r_phi)};
}

std::pair<double, double> weak_residual(const ProblemSpec& spec, const Control& beta, const StateSolution& sol,
                                        JouleForm form) {
  return weak_residual(spec, beta, sol.u, sol.phi, form);
}

double subcritical_margin(const StateSolution& sol, const ConductivityModel& model) {
  const double u_star = model.u_star();
  if (!std::isfinite(u_star)) return std::numeric_limits<double>::infinity();
  return u_star - sol.u.maxCoeff();
}

}  // namespace thermopt
