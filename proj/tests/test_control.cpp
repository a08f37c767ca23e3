#include "thermopt/control.hpp"

#include "benchmark.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace thermopt;
using thermopt::testing::benchmark;

namespace {

double objective_at(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts) {
  return objective(spec.fe(), solve_state(spec, beta, opts).u, beta).total;
}

SolverOptions tight() {
  SolverOptions o;
  o.tol = 1e-12;
  o.max_iterations = 1000;
  return o;
}

}  // namespace

TEST(Control, ObjectiveExamples) {
  const ProblemSpec spec = benchmark(4);
  const Control beta = Control::constant(spec.mesh(), 2.0, spec.m_cap);
  const ObjectiveValue j = objective(spec.fe(), Vector::Constant(spec.fe().num_dofs(), 0.5), beta);
  EXPECT_NEAR(j.integral_u, 0.5, 1e-14);
  EXPECT_NEAR(j.integral_beta_sq, 12.0, 1e-13);
  EXPECT_NEAR(j.total, 12.5, 1e-13);
  const Vector x = interpolate(spec.fe(), [](const Point& p) { return p[0]; });
  EXPECT_NEAR(objective(spec.fe(), x, Control::constant(spec.mesh(), 0.0, 2.0)).total, 0.5, 1e-14);
}

TEST(Control, ProjectionClampsToBox) {
  const ProblemSpec spec = benchmark(4);
  StateSolution state;
  state.u = Vector::Constant(spec.fe().num_dofs(), 0.05 + 1.0);
  state.phi = spec.phi0;
  AdjointSolution adj;
  for (double p : {-10.0, -1.0, 0.5}) {
    adj.p.values = Vector::Constant(spec.fe().num_dofs(), p);
    const Control c = project_control(spec, state, adj, 2.0);
    const double expected = std::clamp(-0.5 * p, 0.0, 2.0);
    EXPECT_LT((c.values.array() - expected).abs().maxCoeff(), 1e-13) << p;
  }
}

TEST(Control, ZeroDirectionGivesZeroSensitivity) {
  const ProblemSpec spec = benchmark(8);
  const Control beta = Control::constant(spec.mesh(), 1.0, spec.m_cap);
  const StateSolution state = solve_state(spec, beta);
  const SensitivityPair s = solve_sensitivity(spec, beta, state, Control::constant(spec.mesh(), 0.0, 0.0));
  EXPECT_EQ(s.psi1.values.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(s.psi2.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Control, AdjointSolvesTransposedSystem) {
  const ProblemSpec spec = benchmark(8);
  const Control beta = Control::constant(spec.mesh(), 1.0, spec.m_cap);
  const StateSolution state = solve_state(spec, beta);
  const AdjointSolution adj = solve_adjoint(spec, beta, state);
  EXPECT_LT(adj.residual, 1e-10);
  // Heating the domain raises J, so the temperature adjoint is nonpositive.
  EXPECT_LE(adj.p.values.maxCoeff(), 1e-14);
  for (int i = 0; i < spec.fe().num_dofs(); ++i) {
    if (spec.fe().dirichlet_mask()[i]) EXPECT_EQ(adj.p.values[i], 0.0);
  }
}

TEST(Control, GradientMatchesFiniteDifferences) {
  const ProblemSpec spec = benchmark(8);
  const SolverOptions opts = tight();
  const Control beta = Control::constant(spec.mesh(), 1.0, spec.m_cap);
  const StateSolution state = solve_state(spec, beta, opts);
  const AdjointSolution adj = solve_adjoint(spec, beta, state);
  const Vector g = gradient(spec, state, adj, beta);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    Control ell = beta;
    for (int f = 0; f < ell.size(); ++f) ell.values[f] = dist(rng);
    const double h = 1e-4;
    Control plus = beta, minus = beta;
    plus.values += h * ell.values;
    minus.values -= h * ell.values;
    const double fd = (objective_at(spec, plus, opts) - objective_at(spec, minus, opts)) / (2 * h);
    const double adjoint_value = boundary_pairing(spec.mesh(), g, ell.values);
    const SensitivityPair sens = solve_sensitivity(spec, beta, state, ell);
    const double sens_value = sensitivity_derivative(spec, beta, sens);
    EXPECT_NEAR(adjoint_value, fd, 1e-6 * std::abs(fd));
    EXPECT_NEAR(sens_value, adjoint_value, 1e-9 * std::abs(adjoint_value));
  }
}

TEST(Control, ZeroBoundForcesZeroControl) {
  ProblemSpec spec = benchmark(8);
  spec.m_cap = 0.0;
  for (OptimizerMode mode : {OptimizerMode::Sweep, OptimizerMode::ProjectedGradient}) {
    OptimizerOptions opts;
    opts.mode = mode;
    const OptimizerResult r = optimize(spec, opts);
    EXPECT_EQ(r.status, OptimizerStatus::Converged);
    EXPECT_EQ(r.beta.values.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Control, ConstantDataNeedsNoCooling) {
  ProblemSpec spec = benchmark(8);
  const int n = spec.fe().num_dofs();
  spec.u0 = Vector::Constant(n, 0.2);
  spec.u1 = Vector::Constant(n, 0.2);
  spec.phi0 = Vector::Constant(n, 0.3);
  for (OptimizerMode mode : {OptimizerMode::Sweep, OptimizerMode::ProjectedGradient}) {
    OptimizerOptions opts;
    opts.mode = mode;
    const OptimizerResult r = optimize(spec, opts);
    EXPECT_EQ(r.status, OptimizerStatus::Converged);
    EXPECT_EQ(r.beta.values.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LT((r.state.u.array() - 0.2).abs().maxCoeff(), 1e-12);
  }
}

TEST(Control, ProjectedGradientIsMonotone) {
  const ProblemSpec spec = benchmark(8);
  OptimizerOptions opts;
  opts.mode = OptimizerMode::ProjectedGradient;
  const OptimizerResult r = optimize(spec, opts);
  EXPECT_EQ(r.status, OptimizerStatus::Converged);
  for (std::size_t k = 1; k < r.history.size(); ++k) EXPECT_LE(r.history[k].J, r.history[k - 1].J);
  EXPECT_LE(r.optimality_residual, 1e-6);
}

TEST(Control, ModesAgree) {
  const ProblemSpec spec = benchmark(8);
  OptimizerOptions sweep, pg;
  pg.mode = OptimizerMode::ProjectedGradient;
  const OptimizerResult a = optimize(spec, sweep);
  const OptimizerResult b = optimize(spec, pg);
  EXPECT_NEAR(a.J.total, b.J.total, 1e-8);
  EXPECT_LT((a.beta.values - b.beta.values).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Control, OptionsAreValidated) {
  const ProblemSpec spec = benchmark(4);
  OptimizerOptions opts;
  opts.relaxation = 0.0;
  EXPECT_THROW(optimize(spec, opts), ConfigError);
  opts = {};
  opts.max_outer = 0;
  EXPECT_THROW(optimize(spec, opts), ConfigError);
  EXPECT_EQ(parse_optimizer_mode("projected_gradient"), OptimizerMode::ProjectedGradient);
  EXPECT_FALSE(parse_optimizer_mode("newton"));
  EXPECT_EQ(to_string(OptimizerMode::Sweep), "sweep");
}
