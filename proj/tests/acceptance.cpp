// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "thermopt/control.hpp"
#include "thermopt/transform.hpp"
#include "thermopt/verify.hpp"

#include "benchmark.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace thermopt;
using thermopt::testing::benchmark;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Report {
 public:
  void add(std::ostringstream& s, bool ok, const std::string& what) {
    if (!ok) s << "[fail] ";
    s << what << "; ";
    all_ = all_ && ok;
  }
  bool all() const { return all_; }

 private:
  bool all_ = true;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

Control constant_beta(const ProblemSpec& spec, double b) { return Control::constant(spec.mesh(), b, spec.m_cap); }

/// Benchmark data interpolated on the uniform refinement of a benchmark mesh.
ProblemSpec refined(const ProblemSpec& coarse) {
  ProblemSpec fine = coarse;
  fine.space = std::make_shared<const P1Space>(std::make_shared<const Mesh>(refine_uniform(coarse.mesh())));
  const int n = fine.fe().num_dofs();
  fine.u0 = Vector::Constant(n, coarse.u0.maxCoeff());
  fine.u1 = Vector::Constant(n, coarse.u1.maxCoeff());
  fine.phi0 = interpolate(fine.fe(), [](const Point& p) { return 0.1 * p[0]; });
  return fine;
}

std::string suite_detail(const SuiteReport& rep) {
  std::ostringstream s;
  for (const auto& p : rep.properties) s << p.name << "=" << fmt(p.value) << (p.passed ? "" : "[fail]") << " ";
  return s.str();
}

Outcome c1_ratio_bounds() {
  const SuiteReport rep = verify_lemma1(ConductivityModel::truncated_power(1.0, 1.0, 2.0), 12345, 100);
  const double mu = ConductivityModel::truncated_power(1.0, 1.0, 2.0).lipschitz_mu();
  const bool ok = rep.passed() && mu == 2.0;
  return {ok, "mu=" + fmt(mu) + " " + suite_detail(rep)};
}

Outcome c2_max_principle() {
  ProblemSpec spec = benchmark(16);
  spec.u1.setZero();
  const SuiteReport rep = verify_max_principle(spec, constant_beta(spec, 1.0), {});
  return {rep.passed(), suite_detail(rep)};
}

Outcome c3_subcritical_state() {
  ProblemSpec spec = benchmark(16);
  spec.u1.setZero();
  const Control beta = constant_beta(spec, 1.0);
  std::ostringstream s;
  Report r;
  const StateSolution sol = solve_state(spec, beta);
  r.add(s, sol.iterations <= 200, "iterations=" + std::to_string(sol.iterations));
  const double level = sol.truncation_used ? sol.truncation_used->n : 0.0;
  r.add(s, sol.u.maxCoeff() < level, "max_u=" + fmt(sol.u.maxCoeff()) + " < n=" + fmt(level));
  const auto [ru, rphi] = weak_residual(spec, beta, sol);
  r.add(s, ru <= 1e-8 && rphi <= 1e-8, "original-sigma residuals " + fmt(ru) + ", " + fmt(rphi));
  SolverOptions a, b;
  a.truncation_level = 0.5;
  b.truncation_level = 0.95;
  const StateSolution sa = solve_state(spec, beta, a);
  const StateSolution sb = solve_state(spec, beta, b);
  const double diff = std::max((sa.u - sb.u).cwiseAbs().maxCoeff(), (sa.phi - sb.phi).cwiseAbs().maxCoeff());
  r.add(s, diff <= 1e-9, "levels 0.5/0.95 differ by " + fmt(diff));
  return {r.all(), s.str()};
}

Outcome c4_substitution() {
  const ProblemSpec coarse = benchmark(16);
  const ProblemSpec fine = refined(coarse);
  const SuiteReport rep = verify_substitution(coarse, constant_beta(coarse, 1.0), fine, constant_beta(fine, 1.0), {});
  return {rep.passed(), suite_detail(rep)};
}

Outcome c5_certificate() {
  const ProblemSpec spec = benchmark(16);
  std::ostringstream s;
  Report r;
  const BoundCertificate cert = compute_certificate(spec, {});
  const double base = 4.0 * cert.phi0_inf * cert.phi0_inf;
  const bool above = cert.M > 1.0 && cert.M > cert.C_eps && cert.M > 1.0 / cert.eps && cert.M > base + cert.F_u0 &&
                     cert.M > base + cert.F_u1;
  r.add(s, above, "M=" + fmt(cert.M) + " (C_eps=" + fmt(cert.C_eps) + ", 1/eps=" + fmt(1.0 / cert.eps) + ")");
  r.add(s, cert.denominator > 0.0, "denominator=" + fmt(cert.denominator));
  r.add(s, std::isfinite(cert.N) && cert.N < cert.u_star, "N=" + fmt(cert.N));
  const StateSolution sol = solve_state(spec, constant_beta(spec, 1.0));
  const CertificateCheck check = check_certificate(sol, cert, spec.model);
  r.add(s, check.passed && check.u_margin > 0.0 && check.v_margin > 0.0 && cert.C1 == 1.0,
        "u_margin=" + fmt(check.u_margin));
  double lambda[3];
  int k = 0;
  for (int n : {8, 16, 32}) {
    lambda[k++] = estimate_poincare(build_rectangle_mesh({1, 1}, {n, n}, TagRule::all_dirichlet(2))).lambda_min;
  }
  const double c_d = 1.0 / std::sqrt((4.0 * lambda[2] - lambda[1]) / 3.0);
  const double exact = 1.0 / (M_PI * std::sqrt(2.0));
  const double rel = std::abs(c_d - exact) / exact;
  r.add(s, rel <= 0.02, "C_D=" + fmt(c_d) + " rel.err " + fmt(rel));
  return {r.all(), s.str()};
}

Outcome c6_gradient() {
  const ProblemSpec spec = benchmark(16);
  const SuiteReport rep = verify_gradient(spec, constant_beta(spec, 1.0), {}, GradientCheckOptions{});
  double worst = 0.0;
  for (const auto& p : rep.properties) {
    if (p.name.rfind("direction_", 0) == 0) worst = std::max(worst, p.value);
  }
  return {rep.passed() && spec.m_cap == 2.0, "worst pairwise rel.diff " + fmt(worst) + "; " + suite_detail(rep)};
}

Outcome c7_optimality() {
  const ProblemSpec spec = benchmark(16);
  std::ostringstream s;
  Report r;
  OptimizerOptions sweep, pg;
  pg.mode = OptimizerMode::ProjectedGradient;
  const OptimizerResult a = optimize(spec, sweep);
  const OptimizerResult b = optimize(spec, pg);
  for (const OptimizerResult* res : {&a, &b}) {
    const Control proj = project_control(spec, res->state, res->adjoint, spec.m_cap);
    const double fp = (res->beta.values - proj.values).cwiseAbs().maxCoeff();
    r.add(s, res->status == OptimizerStatus::Converged && fp <= 1e-6,
          std::string(res == &a ? "sweep" : "pg") + " fixed-point residual " + fmt(fp));
  }
  bool monotone = true;
  for (std::size_t k = 1; k < b.history.size(); ++k) monotone = monotone && b.history[k].J <= b.history[k - 1].J;
  r.add(s, monotone, "pg history nonincreasing over " + std::to_string(b.history.size()) + " records");
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> dist(0.0, spec.m_cap);
  double worst = -INFINITY;
  for (int k = 0; k < 20; ++k) {
    Control other = a.beta;
    for (int f = 0; f < other.size(); ++f) other.values[f] = dist(rng);
    const double j = objective(spec.fe(), solve_state(spec, other).u, other).total;
    worst = std::max(worst, a.J.total - j);
  }
  r.add(s, worst <= 1e-8, "J*=" + fmt(a.J.total) + ", max J*-J(random) " + fmt(worst));
  return {r.all(), s.str()};
}

Outcome c8_degenerate() {
  std::ostringstream s;
  Report r;
  {
    ProblemSpec spec = benchmark(16);
    spec.m_cap = 0.0;
    const OptimizerResult res = optimize(spec, {});
    r.add(s, res.beta.values.cwiseAbs().maxCoeff() == 0.0, "M=0 gives beta*=0");
  }
  {
    ProblemSpec spec = benchmark(16);
    const int n = spec.fe().num_dofs();
    spec.u0 = Vector::Constant(n, 0.2);
    spec.u1 = spec.u0;
    spec.phi0 = Vector::Constant(n, 0.3);
    const OptimizerResult res = optimize(spec, {});
    const double du = (res.state.u - spec.u0).cwiseAbs().maxCoeff();
    r.add(s, res.beta.values.cwiseAbs().maxCoeff() == 0.0 && du == 0.0,
          "constant data gives beta*=0, max|u-u0|=" + fmt(du));
  }
  {
    const ProblemSpec spec = benchmark(16);
    const Control beta = constant_beta(spec, 1.0);
    const StateSolution st = solve_state(spec, beta);
    Control zero = beta;
    zero.values.setZero();
    const SensitivityPair sp = solve_sensitivity(spec, beta, st, zero);
    r.add(s, sp.psi1.values.cwiseAbs().maxCoeff() == 0.0 && sp.psi2.values.cwiseAbs().maxCoeff() == 0.0,
          "zero direction gives zero sensitivity");
  }
  return {r.all(), s.str()};
}

Outcome c9_self_convergence() {
  ProblemSpec spec;
  spec.space = thermopt::testing::square_space(8);
  spec.model = ConductivityModel::constant(1.0);
  spec.m_cap = 2.0;
  std::vector<Vector> us, phis;
  std::vector<std::shared_ptr<const P1Space>> spaces;
  std::vector<std::vector<std::array<int, 2>>> parents(1);
  const auto phi0 = [](const Point& p) { return 0.5 * std::exp(p[0]) * std::sin(p[1]) + 0.2 * p[0] * p[1]; };
  for (int level = 0; level < 4; ++level) {
    if (level > 0) {
      std::vector<std::array<int, 2>> par;
      auto mesh = std::make_shared<const Mesh>(refine_uniform(spec.mesh(), &par));
      spec.space = std::make_shared<const P1Space>(mesh);
      parents.push_back(std::move(par));
    }
    const int n = spec.fe().num_dofs();
    spec.u0 = Vector::Zero(n);
    spec.u1 = Vector::Constant(n, 0.05);
    spec.phi0 = interpolate(spec.fe(), phi0);
    const StateSolution sol = solve_state(spec, constant_beta(spec, 1.0));
    us.push_back(sol.u);
    phis.push_back(sol.phi);
    spaces.push_back(spec.space);
  }
  // Differences between consecutive levels, measured on the finer mesh.
  auto diffs = [&](const std::vector<Vector>& f) {
    std::vector<Norms> out;
    for (std::size_t k = 0; k + 1 < f.size(); ++k) {
      out.push_back(norms(*spaces[k + 1], f[k + 1] - prolongate(parents[k + 1], f[k])));
    }
    return out;
  };
  std::ostringstream s;
  Report r;
  for (const auto& [name, field] : {std::pair{"u", &us}, std::pair{"phi", &phis}}) {
    const auto d = diffs(*field);
    const double l2 = std::log2(d[d.size() - 2].l2 / d.back().l2);
    const double h1 = std::log2(d[d.size() - 2].h1 / d.back().h1);
    r.add(s, l2 >= 1.7 && l2 <= 2.3, std::string(name) + " L2 rate " + fmt(l2));
    r.add(s, h1 >= 0.7 && h1 <= 1.3, std::string(name) + " H1 rate " + fmt(h1));
  }
  return {r.all(), s.str()};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"ratio bounds of a(v) and decay of g(v)", c1_ratio_bounds},
      {"discrete maximum principles", c2_max_principle},
      {"subcritical truncated state", c3_subcritical_state},
      {"substitution consistency", c4_substitution},
      {"bound certificate chain", c5_certificate},
      {"gradient triangle", c6_gradient},
      {"optimality fixed point", c7_optimality},
      {"degenerate and trivial cases", c8_degenerate},
      {"constant-conductivity self-convergence", c9_self_convergence},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s (%.2fs): %s\n", o.passed ? "PASS" : "FAIL", index, name, secs, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.passed;
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
