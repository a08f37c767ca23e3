#include "thermopt/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thermopt {

namespace {

// d r_u / d beta_f applied to ell: sum_f ell_f int_f (u - u1) lambda_i, zero on Gamma_D rows.
Vector robin_derivative(const P1Space& fe, const Vector& u, const Vector& u1, const Vector& ell) {
  const Mesh& mesh = fe.mesh();
  const int d = mesh.dim();
  const Vector diff = u - u1;
  Vector out = Vector::Zero(fe.num_dofs());
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const double l = ell[static_cast<Eigen::Index>(k)];
    if (l == 0.0) continue;
    const int f = mesh.robin_facets()[k];
    const auto& v = mesh.facets()[f].vertices;
    const double meas = mesh.facet_measure(f);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) out[v[i]] += l * facet_mass_entry(d, meas, i == j) * diff[v[j]];
    }
  }
  for (int i = 0; i < fe.num_dofs(); ++i) {
    if (fe.dirichlet_mask()[i]) out[i] = 0.0;
  }
  return out;
}

double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double bn = b.norm();
  const double rn = (a * x - b).norm();
  return bn > 0.0 ? rn / bn : rn;
}

}  // namespace

ObjectiveValue objective(const P1Space& space, const Vector& u, const Control& beta) {
  ObjectiveValue j;
  j.integral_u = space.basis_integrals().dot(u);
  const Mesh& mesh = space.mesh();
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const double b = beta.values[static_cast<Eigen::Index>(k)];
    j.integral_beta_sq += mesh.facet_measure(mesh.robin_facets()[k]) * b * b;
  }
  j.total = j.integral_u + j.integral_beta_sq;
  return j;
}

AdjointSolution solve_adjoint(const ProblemSpec& spec, const Control& beta, const StateSolution& state,
                              JouleForm form) {
  const P1Space& fe = spec.fe();
  const int n = fe.num_dofs();
  const StateData data{&spec.model, &spec.phi0, &spec.u1, &beta, form};
  const SparseMatrix kt = SparseMatrix(assemble_state_jacobian(fe, data, state.u, state.phi).transpose());
  Vector rhs = Vector::Zero(2 * n);
  for (int i = 0; i < n; ++i) {
    if (!fe.dirichlet_mask()[i]) rhs[i] = -fe.basis_integrals()[i];
  }
  const Vector x = solve_general(kt, rhs);
  AdjointSolution adj;
  adj.p.values = x.head(n);
  adj.q.values = x.tail(n);
  adj.residual = relative_residual(kt, x, rhs);
  return adj;
}

SensitivityPair solve_sensitivity(const ProblemSpec& spec, const Control& beta, const StateSolution& state,
                                  const Control& ell, JouleForm form) {
  const P1Space& fe = spec.fe();
  const int n = fe.num_dofs();
  if (ell.size() != beta.size()) throw DomainError("direction size does not match the control");
  SensitivityPair out;
  out.direction = ell;
  Vector rhs = Vector::Zero(2 * n);
  rhs.head(n) = -robin_derivative(fe, state.u, spec.u1, ell.values);
  if (rhs.norm() == 0.0) {
    out.psi1.values = Vector::Zero(n);
    out.psi2.values = Vector::Zero(n);
    return out;
  }
  const StateData data{&spec.model, &spec.phi0, &spec.u1, &beta, form};
  const SparseMatrix k = assemble_state_jacobian(fe, data, state.u, state.phi);
  const Vector x = solve_general(k, rhs);
  out.psi1.values = x.head(n);
  out.psi2.values = x.tail(n);
  out.residual = relative_residual(k, x, rhs);
  return out;
}

double sensitivity_derivative(const ProblemSpec& spec, const Control& beta, const SensitivityPair& sens) {
  return spec.fe().basis_integrals().dot(sens.psi1.values) +
         2.0 * boundary_pairing(spec.mesh(), beta.values, sens.direction.values);
}

Vector gradient(const ProblemSpec& spec, const StateSolution& state, const AdjointSolution& adjoint,
                const Control& beta) {
  const Mesh& mesh = spec.mesh();
  const Vector diff = state.u - spec.u1;
  Vector g(beta.size());
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const int f = mesh.robin_facets()[k];
    const auto idx = static_cast<Eigen::Index>(k);
    g[idx] = 2.0 * beta.values[idx] + facet_product_integral(mesh, f, diff, adjoint.p.values) / mesh.facet_measure(f);
  }
  return g;
}

double boundary_pairing(const Mesh& mesh, const Vector& g, const Vector& ell) {
  double s = 0.0;
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const auto idx = static_cast<Eigen::Index>(k);
    s += mesh.facet_measure(mesh.robin_facets()[k]) * g[idx] * ell[idx];
  }
  return s;
}

Control project_control(const ProblemSpec& spec, const StateSolution& state, const AdjointSolution& adjoint,
                        double m_cap) {
  const Mesh& mesh = spec.mesh();
  const Vector diff = state.u - spec.u1;
  Control out;
  out.m_cap = m_cap;
  out.values.resize(static_cast<Eigen::Index>(mesh.robin_facets().size()));
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const int f = mesh.robin_facets()[k];
    const double avg = facet_product_integral(mesh, f, diff, adjoint.p.values) / mesh.facet_measure(f);
    out.values[static_cast<Eigen::Index>(k)] = std::clamp(-0.5 * avg, 0.0, m_cap);
  }
  return out;
}

std::string_view to_string(OptimizerMode mode) {
  return mode == OptimizerMode::Sweep ? "sweep" : "projected_gradient";
}

std::optional<OptimizerMode> parse_optimizer_mode(std::string_view name) {
  if (name == "sweep") return OptimizerMode::Sweep;
  if (name == "projected_gradient") return OptimizerMode::ProjectedGradient;
  return std::nullopt;
}

std::string_view to_string(OptimizerStatus status) {
  switch (status) {
    case OptimizerStatus::Converged: return "converged";
    case OptimizerStatus::MaxIterations: return "max_iterations";
    case OptimizerStatus::Stalled: return "stalled";
  }
  return "unknown";
}

namespace {

struct Iterate {
  Control beta;
  StateSolution state;
  AdjointSolution adjoint;
  ObjectiveValue J;
  Control projected;
  double residual = 0.0;
};

Iterate evaluate(const ProblemSpec& spec, const Control& beta, const OptimizerOptions& opts) {
  Iterate it;
  it.beta = beta;
  it.state = solve_state(spec, beta, opts.state);
  it.adjoint = solve_adjoint(spec, beta, it.state, opts.state.joule_form);
  it.J = objective(spec.fe(), it.state.u, beta);
  it.projected = project_control(spec, it.state, it.adjoint, spec.m_cap);
  it.residual = beta.size() ? (beta.values - it.projected.values).cwiseAbs().maxCoeff() : 0.0;
  return it;
}

OptimizerResult finish(Iterate it, OptimizerStatus status, std::vector<OptimizerRecord> history) {
  OptimizerResult r;
  r.beta = std::move(it.beta);
  r.state = std::move(it.state);
  r.adjoint = std::move(it.adjoint);
  r.J = it.J;
  r.optimality_residual = it.residual;
  r.status = status;
  r.history = std::move(history);
  return r;
}

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

OptimizerResult optimize(const ProblemSpec& spec, const OptimizerOptions& opts) {
  spec.validate();
  if (!(opts.relaxation > 0.0 && opts.relaxation <= 1.0)) throw ConfigError("relaxation must lie in (0, 1]");
  if (!(opts.tol > 0.0)) throw ConfigError("optimizer tolerance must be positive");
  if (opts.max_outer < 1) throw ConfigError("max_outer must be at least 1");
  const double start = std::clamp(opts.initial_beta.value_or(0.5 * spec.m_cap), 0.0, spec.m_cap);
  Iterate cur = evaluate(spec, Control::constant(spec.mesh(), start, spec.m_cap), opts);

  std::vector<OptimizerRecord> history;
  history.push_back({0, cur.J.total, cur.residual, 0.0, 0.0});
  Iterate best = cur;

  if (opts.mode == OptimizerMode::Sweep) {
    for (int k = 1; k <= opts.max_outer; ++k) {
      Control next = cur.beta;
      next.values = (1.0 - opts.relaxation) * cur.beta.values + opts.relaxation * cur.projected.values;
      next.values = next.values.cwiseMax(0.0).cwiseMin(spec.m_cap);
      const double change = max_abs(next.values - cur.beta.values);
      cur = evaluate(spec, next, opts);
      history.push_back({k, cur.J.total, cur.residual, change, opts.relaxation});
      if (cur.J.total < best.J.total) best = cur;
      if (change <= opts.tol) {
        // A final unrelaxed projection lands on the fixed point itself when it is stationary.
        Iterate polished = evaluate(spec, cur.projected, opts);
        if (polished.residual <= cur.residual) {
          history.push_back({k + 1, polished.J.total, polished.residual, cur.residual, 1.0});
          cur = std::move(polished);
        }
        return finish(std::move(cur), OptimizerStatus::Converged, std::move(history));
      }
    }
    return finish(std::move(best), OptimizerStatus::MaxIterations, std::move(history));
  }

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 40;
  for (int k = 1; k <= opts.max_outer; ++k) {
    if (cur.residual <= opts.tol) return finish(std::move(cur), OptimizerStatus::Converged, std::move(history));
    const Vector g = gradient(spec, cur.state, cur.adjoint, cur.beta);
    bool accepted = false;
    double t = 1.0;
    for (int h = 0; h < kMaxHalvings && !accepted; ++h, t *= 0.5) {
      Control trial = cur.beta;
      trial.values = (cur.beta.values - t * g).cwiseMax(0.0).cwiseMin(spec.m_cap);
      const Vector step = trial.values - cur.beta.values;
      if (max_abs(step) == 0.0) break;
      const double decrease = boundary_pairing(spec.mesh(), g, step);
      Iterate next;
      try {
        next = evaluate(spec, trial, opts);
      } catch (const CriticalityError&) {
        continue;
      } catch (const NonconvergenceError&) {
        continue;
      }
      if (next.J.total <= cur.J.total + kArmijo * decrease && next.J.total <= cur.J.total) {
        const double change = max_abs(step);
        cur = std::move(next);
        history.push_back({k, cur.J.total, cur.residual, change, t});
        accepted = true;
        if (change <= opts.tol) {
          const auto status = cur.residual <= 10.0 * opts.tol ? OptimizerStatus::Converged : OptimizerStatus::Stalled;
          return finish(std::move(cur), status, std::move(history));
        }
      }
    }
    if (!accepted) {
      const auto status = cur.residual <= 10.0 * opts.tol ? OptimizerStatus::Converged : OptimizerStatus::Stalled;
      return finish(std::move(cur), status, std::move(history));
    }
  }
  const auto status = cur.residual <= opts.tol ? OptimizerStatus::Converged : OptimizerStatus::MaxIterations;
  return finish(std::move(cur), status, std::move(history));
}

}  // namespace thermopt
