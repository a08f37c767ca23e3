#include "thermopt/verify.hpp"

#include "thermopt/transform.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

namespace thermopt {

bool SuiteReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const auto& p) { return p.passed; });
}

std::string SuiteReport::first_failure() const {
  for (const auto& p : properties) {
    if (!p.passed) return p.name;
  }
  return {};
}

double relative_difference(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

namespace {

std::string num(double x) {
  std::ostringstream out;
  out << std::setprecision(12) << x;
  return out.str();
}

PropertyResult at_most(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value, tol, value <= tol, std::move(detail)};
}

}  // namespace

SuiteReport verify_lemma1(const ConductivityModel& model, std::uint64_t seed, int pairs) {
  SuiteReport rep{"lemma1", {}};
  const double mu = model.lipschitz_mu();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.0, 50.0);
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    const double v = dist(rng), w = dist(rng);
    const double y = w - v;
    const double ratio = model.a(w) / model.a(v);
    const double bound = std::exp(mu * std::abs(y));
    // Positive when a bracket side is violated.
    worst = std::max({worst, 1.0 / bound - ratio, ratio - bound});
  }
  rep.properties.push_back(at_most("a_ratio_bracket", worst, 1e-12, "mu = " + num(mu)));

  for (const double p : {2.0, 3.0}) {
    double excess = -std::numeric_limits<double>::infinity();
    constexpr int kGrid = 200;
    for (int k = 0; k < kGrid; ++k) {
      const double v = std::pow(10.0, 4.0 * k / (kGrid - 1));
      excess = std::max(excess, lemma_ratio(model, v, p) * v - 1.0);
    }
    rep.properties.push_back(at_most("decay_ratio_p" + std::to_string(static_cast<int>(p)), excess, 1e-12,
                                     "max over grid of v g(v) - 1"));
  }
  return rep;
}

SuiteReport verify_max_principle(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts) {
  SuiteReport rep{"maxprinciple", {}};
  const StateSolution sol = solve_state(spec, beta, opts);
  const P1Space& fe = spec.fe();
  double phi_lo = std::numeric_limits<double>::infinity(), phi_hi = -phi_lo, u_lo = phi_lo;
  for (int i = 0; i < fe.num_dofs(); ++i) {
    if (fe.boundary_mask()[i]) {
      phi_lo = std::min(phi_lo, spec.phi0[i]);
      phi_hi = std::max(phi_hi, spec.phi0[i]);
    }
    if (fe.dirichlet_mask()[i]) u_lo = std::min(u_lo, spec.u0[i]);
    if (fe.boundary_mask()[i] && !fe.dirichlet_mask()[i]) u_lo = std::min(u_lo, spec.u1[i]);
  }
  rep.properties.push_back(at_most("phi_min", phi_lo - sol.phi.minCoeff(), 1e-10, "min phi0 - min phi"));
  rep.properties.push_back(at_most("phi_max", sol.phi.maxCoeff() - phi_hi, 1e-10, "max phi - max phi0"));
  rep.properties.push_back(at_most("u_min", u_lo - sol.u.minCoeff(), 1e-10, "min data - min u"));

  double offdiag = -std::numeric_limits<double>::infinity();
  const SparseMatrix& k = fe.stiffness();
  for (int col = 0; col < k.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) {
      if (it.row() != col) offdiag = std::max(offdiag, it.value());
    }
  }
  rep.properties.push_back(at_most("stiffness_offdiag_nonpositive", offdiag, 1e-12, "largest off-diagonal entry"));
  return rep;
}

SuiteReport verify_substitution(const ProblemSpec& coarse, const Control& beta_coarse, const ProblemSpec& fine,
                                const Control& beta_fine, const SolverOptions& opts) {
  SuiteReport rep{"substitution", {}};
  struct Level {
    double r_v, r_phi, defect, roundtrip;
  };
  auto run = [&](const ProblemSpec& spec, const Control& beta) {
    const StateSolution sol = solve_state(spec, beta, opts);
    const TransformedState ts = transform(sol, spec.model, spec.phi0, 1.0);
    const auto [r_v, r_phi] = transformed_residual(ts, spec.model, spec, beta);
    const PsiIdentityCheck l2 = lemma2_check(ts, spec.model, spec);
    double rt = 0.0;
    for (Eigen::Index i = 0; i < sol.u.size(); ++i) {
      rt = std::max(rt, std::abs(spec.model.F_inv(ts.v[i]) - std::max(sol.u[i], 0.0)));
    }
    return Level{r_v, r_phi, l2.defect, rt};
  };
  const Level c = run(coarse, beta_coarse);
  const Level f = run(fine, beta_fine);
  auto decrease = [&](const std::string& name, double a, double b) {
    rep.properties.push_back({name, b / a, 1.0, b < a || (a == 0.0 && b == 0.0),
                              "coarse " + num(a) + ", fine " + num(b)});
  };
  decrease("transformed_residual_v_decreases", c.r_v, f.r_v);
  decrease("transformed_residual_phi_decreases", c.r_phi, f.r_phi);
  decrease("psi_identity_defect_decreases", c.defect, f.defect);
  rep.properties.push_back(at_most("F_roundtrip", std::max(c.roundtrip, f.roundtrip), 1e-8));
  return rep;
}

SuiteReport verify_gradient(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts,
                            const GradientCheckOptions& check) {
  SuiteReport rep{"gradient", {}};
  SolverOptions tight = opts;
  tight.tol = check.inner_tol;
  tight.max_iterations = std::max(opts.max_iterations, 1000);
  const StateSolution sol = solve_state(spec, beta, tight);
  const AdjointSolution adj = solve_adjoint(spec, beta, sol, tight.joule_form);
  const Vector g = gradient(spec, sol, adj, beta);
  rep.properties.push_back(at_most("adjoint_residual", adj.residual, 1e-10));

  std::mt19937_64 rng(check.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  auto J = [&](const Control& b) { return objective(spec.fe(), solve_state(spec, b, tight).u, b).total; };
  for (int k = 0; k < check.directions; ++k) {
    Control ell = beta;
    for (Eigen::Index i = 0; i < ell.values.size(); ++i) ell.values[i] = dist(rng);
    Control plus = beta, minus = beta;
    plus.values += check.fd_eps * ell.values;
    minus.values -= check.fd_eps * ell.values;
    if (!plus.admissible() || !minus.admissible()) {
      throw ConfigError("gradient check needs a control at least fd_eps inside [0, m_cap]");
    }
    const double adjoint_value = boundary_pairing(spec.mesh(), g, ell.values);
    const SensitivityPair sens = solve_sensitivity(spec, beta, sol, ell, tight.joule_form);
    const double sens_value = sensitivity_derivative(spec, beta, sens);
    const double fd_value = (J(plus) - J(minus)) / (2.0 * check.fd_eps);
    const double worst = std::max({relative_difference(adjoint_value, sens_value),
                                   relative_difference(adjoint_value, fd_value),
                                   relative_difference(sens_value, fd_value)});
    rep.properties.push_back(at_most("direction_" + std::to_string(k), worst, check.tol,
                                     "adjoint " + num(adjoint_value) + ", sensitivity " +
                                         num(sens_value) + ", fd " + num(fd_value)));
  }
  return rep;
}

}  // namespace thermopt
