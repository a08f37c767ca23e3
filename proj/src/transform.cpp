#include "thermopt/transform.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace thermopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

std::vector<DirichletValue> zero_constraints(const std::vector<char>& mask) {
  std::vector<DirichletValue> bc;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bc.push_back({static_cast<int>(i), 0.0});
  }
  return bc;
}

}  // namespace

TransformedState transform(const Vector& u, const Vector& phi, const Vector& phi0, const ConductivityModel& model,
                           double m) {
  if (u.size() != phi.size() || u.size() != phi0.size()) throw DomainError("transform: field sizes differ");
  TransformedState ts;
  ts.m = m;
  ts.phi = phi;
  ts.v.resize(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) ts.v[i] = model.F(u[i]);
  ts.psi = (phi - phi0).array().square().matrix() + ts.v;
  ts.psi_m = ts.psi.cwiseMax(m);
  return ts;
}

TransformedState transform(const StateSolution& sol, const ConductivityModel& model, const Vector& phi0, double m) {
  return transform(sol.u, sol.phi, phi0, model, m);
}

std::pair<double, double> transformed_residual(const TransformedState& ts, const ConductivityModel& model,
                                               const ProblemSpec& spec, const Control& beta) {
  const P1Space& fe = spec.fe();
  const Mesh& mesh = fe.mesh();
  const auto& rule = cell_quadrature(fe.dim());
  const int nv = fe.dim() + 1;
  Vector r_v = Vector::Zero(fe.num_dofs());
  Vector r_phi = Vector::Zero(fe.num_dofs());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& g = fe.geometry(c);
    const auto& cell = mesh.cells()[c];
    const auto gv = fe.cell_gradient(c, ts.v);
    const auto gp = fe.cell_gradient(c, ts.phi);
    const double gp2 = dot3(gp, gp);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& lam = rule.points[q];
      const double w = rule.weights[q] * g.volume * model.a(fe.value_at(c, lam, ts.v));
      for (int i = 0; i < nv; ++i) {
        r_v[cell[i]] += w * (dot3(gv, g.grad[i]) - gp2 * lam[i]);
        r_phi[cell[i]] += w * dot3(gp, g.grad[i]);
      }
    }
  }
  // Robin term with the nodal trace of F^{-1}(v).
  Vector excess(fe.num_dofs());
  for (int i = 0; i < fe.num_dofs(); ++i) excess[i] = model.F_inv(std::max(ts.v[i], 0.0)) - spec.u1[i];
  const RobinTerms robin = assemble_robin(fe, beta, Vector::Zero(fe.num_dofs()));
  r_v += robin.matrix * excess;
  return {DualNorm(fe, fe.dirichlet_mask())(r_v), DualNorm(fe, fe.boundary_mask())(r_phi)};
}

PsiIdentityCheck lemma2_check(const TransformedState& ts, const ConductivityModel& model, const ProblemSpec& spec) {
  const P1Space& fe = spec.fe();
  const Mesh& mesh = fe.mesh();
  const auto& rule = cell_quadrature(fe.dim());
  const int nv = fe.dim() + 1;
  const Vector diff = ts.phi - spec.phi0;
  Vector defect = Vector::Zero(fe.num_dofs());
  Vector ineq = Vector::Zero(fe.num_dofs());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& g = fe.geometry(c);
    const auto& cell = mesh.cells()[c];
    const auto gpsi = fe.cell_gradient(c, ts.psi);
    const auto gp = fe.cell_gradient(c, ts.phi);
    const auto gp0 = fe.cell_gradient(c, spec.phi0);
    const double gp2 = dot3(gp, gp), gp02 = dot3(gp0, gp0), cross = dot3(gp, gp0);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& lam = rule.points[q];
      const double w = rule.weights[q] * g.volume * model.a(fe.value_at(c, lam, ts.v));
      const double d = fe.value_at(c, lam, diff);
      for (int i = 0; i < nv; ++i) {
        const double stiff = dot3(gpsi, g.grad[i]);
        const double flux = 2.0 * d * dot3(gp0, g.grad[i]);
        defect[cell[i]] += w * (stiff + gp2 * lam[i] + flux - 2.0 * cross * lam[i]);
        ineq[cell[i]] += w * (stiff - gp02 * lam[i] + flux);
      }
    }
  }
  PsiIdentityCheck out;
  out.defect = DualNorm(fe, fe.boundary_mask())(defect);
  out.inequality_violation = -kInf;
  for (int i = 0; i < fe.num_dofs(); ++i) {
    if (!fe.boundary_mask()[i]) out.inequality_violation = std::max(out.inequality_violation, ineq[i]);
  }
  if (!std::isfinite(out.inequality_violation)) out.inequality_violation = 0.0;
  return out;
}

double compute_C_eps(const ConductivityModel& model, double eps, double p) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(p >= 2.0)) throw DomainError("p must be at least 2");
  constexpr int kPoints = 2048;
  const double lo = std::log(1e-6), hi = std::log(1e6);
  auto integrand = [&](double s) { return std::pow(s, p - 2.0) / model.a(s); };
  double moment = 0.0, prev = 0.0, best = 0.0;
  for (int k = 0; k < kPoints; ++k) {
    const double v = std::exp(lo + (hi - lo) * k / (kPoints - 1));
    const double w = v - prev;
    auto unit = [&](double t) { return w * integrand(prev + w * t); };
    moment += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(unit, 0.0, 1.0, 10, 1e-12);
    prev = v;
    best = std::max(best, model.a(v) * moment - eps * std::pow(v, p));
  }
  return 1.05 * best;
}

PoincareEstimate estimate_poincare(const Mesh& mesh, double tol, int max_iterations) {
  const P1Space fe(std::make_shared<const Mesh>(mesh));
  const auto& mask = fe.dirichlet_mask();
  LinearSystem sys{fe.stiffness(), Vector::Zero(fe.num_dofs()), {}};
  sys = apply_dirichlet(mesh, std::move(sys), zero_constraints(mask));
  Eigen::SimplicialLDLT<SparseMatrix> solver(sys.matrix);
  if (solver.info() != Eigen::Success) throw SolverError("estimate_poincare: factorization failed");

  auto clear = [&](Vector& x) {
    for (int i = 0; i < fe.num_dofs(); ++i) {
      if (mask[i]) x[i] = 0.0;
    }
  };
  Vector x = Vector::Ones(fe.num_dofs());
  clear(x);
  if (x.squaredNorm() == 0.0) throw SolverError("estimate_poincare: no free degrees of freedom");
  PoincareEstimate est;
  double lambda = kInf;
  for (int k = 1; k <= max_iterations; ++k) {
    Vector rhs = fe.mass() * x;
    clear(rhs);
    Vector y = solver.solve(rhs);
    clear(y);
    y /= std::sqrt(y.dot(fe.mass() * y));
    const double next = y.dot(fe.stiffness() * y);
    x = std::move(y);
    est.iterations = k;
    if (std::abs(next - lambda) <= tol * next) {
      est.lambda_min = next;
      est.c_d = 1.0 / std::sqrt(next);
      return est;
    }
    lambda = next;
  }
  throw SolverError("estimate_poincare: inverse iteration did not converge");
}

double moser_factor(int dim, double C2) {
  if (dim <= 2) return 2.0 * C2;
  const double d = dim;
  return std::pow(2.0 * C2, d / 2.0) * std::pow(d / (d - 2.0), d * (d - 2.0) / 4.0);
}

BoundCertificate compute_certificate(const ProblemSpec& spec, const CertificateOptions& opts) {
  spec.validate();
  const ConductivityModel& model = spec.model;
  BoundCertificate cert;
  cert.dim = spec.mesh().dim();
  cert.mu = model.lipschitz_mu();
  cert.phi0_inf = spec.phi0.cwiseAbs().maxCoeff();
  cert.phi0_w1inf = std::max(cert.phi0_inf, max_gradient(spec.fe(), spec.phi0));
  cert.F_u0 = model.F(spec.u0.cwiseAbs().maxCoeff());
  cert.F_u1 = model.F(spec.u1.cwiseAbs().maxCoeff());
  cert.u_star = model.critical_temperature();
  cert.C1 = opts.C1;

  const double growth = std::exp(8.0 * cert.mu * cert.phi0_inf * cert.phi0_inf) * cert.phi0_w1inf * cert.phi0_w1inf;
  if (opts.eps) {
    if (!(*opts.eps > 0.0)) throw ConfigError("certificate eps must be positive");
    cert.eps = *opts.eps;
    cert.denominator = 1.0 - 2.0 * cert.eps * growth;
    if (!(cert.denominator > 0.0)) {
      std::ostringstream msg;
      msg << "certificate infeasible: 1 - 2 eps e^{8 mu |phi0|^2} |phi0|^2 = " << cert.denominator
          << " <= 0; reduce eps or the potential data";
      throw CertificateInfeasible(msg.str());
    }
  } else {
    cert.eps = 0.01;
    cert.denominator = 1.0 - 2.0 * cert.eps * growth;
    while (!(cert.denominator > 0.5)) {
      cert.eps *= 0.5;
      cert.denominator = 1.0 - 2.0 * cert.eps * growth;
      if (cert.eps < 1e-300) throw CertificateInfeasible("certificate infeasible: no admissible eps found");
    }
  }
  cert.C = 8.0 * growth / cert.denominator;
  cert.C_eps = compute_C_eps(model, cert.eps, opts.p);

  const double base = 4.0 * cert.phi0_inf * cert.phi0_inf;
  cert.M = std::max({1.0, cert.C_eps, 1.0 / cert.eps, base + cert.F_u0, base + cert.F_u1}) + 1.0;
  cert.C_D = estimate_poincare(spec.mesh()).c_d;
  cert.mes_omega = spec.mesh().volume();
  cert.C2 = 0.5 * cert.C1 * (1.0 + std::sqrt(cert.C) * std::sqrt(cert.M + cert.eps));
  cert.moser_factor = moser_factor(cert.dim, cert.C2);

  const double cd2 = cert.C_D * cert.C_D;
  const double l2_den = 1.0 - 2.0 * cert.eps * cert.C * cd2;
  if (!(l2_den > 0.0)) {
    throw CertificateInfeasible("certificate infeasible: 1 - 2 eps C C_D^2 <= 0; reduce eps");
  }
  const double l2_sq = 2.0 * cert.mes_omega / l2_den *
                       (cert.C * cd2 * (cert.C_eps + 1.0 / cert.eps) + cert.M * cert.M * cert.mes_omega);
  cert.psiM_l2_bound = std::sqrt(l2_sq);
  cert.psiM_inf_bound = cert.moser_factor * cert.psiM_l2_bound;
  cert.v_inf_bound = base + std::max(cert.M, cert.psiM_inf_bound);
  if (!std::isfinite(cert.v_inf_bound)) throw CertificateInfeasible("certificate bound on v overflowed");
  cert.N = model.F_inv(cert.v_inf_bound);
  cert.r = 2.0 * (cert.dim - 1);
  cert.s = cert.dim > 2 ? 2.0 * (cert.dim - 1) / (cert.dim - 2) : kInf;
  return cert;
}

CertificateCheck check_certificate(const StateSolution& sol, const BoundCertificate& cert,
                                   const ConductivityModel& model) {
  CertificateCheck out;
  out.max_u = sol.u.maxCoeff();
  out.max_v = model.F(out.max_u);
  out.v_margin = cert.v_inf_bound - out.max_v;
  out.u_margin = cert.N - out.max_u;
  out.passed = out.v_margin >= 0.0 && out.u_margin >= 0.0;
  if (!out.passed) {
    out.note = "bound violated; the embedding constant C1 is user-supplied and may be too small";
  } else if (cert.conditional_on_C1) {
    out.note = "bound holds; certificate is conditional on the user-supplied C1";
  }
  return out;
}

EnergyDiagnostic energy_inequality_diagnostic(const TransformedState& ts, const BoundCertificate& cert,
                                              const ProblemSpec& spec) {
  const P1Space& fe = spec.fe();
  EnergyDiagnostic out;
  out.lhs = ts.psi_m.dot(fe.stiffness() * ts.psi_m);
  out.rhs = cert.C * (cert.eps * ts.psi_m.dot(fe.mass() * ts.psi_m) + (cert.C_eps + 1.0 / cert.eps) * cert.mes_omega);
  out.within_slack = out.lhs <= 1.1 * out.rhs;
  out.boundary_side_condition = kInf;
  for (int i = 0; i < fe.num_dofs(); ++i) {
    if (fe.boundary_mask()[i] && !fe.dirichlet_mask()[i] && ts.psi[i] > ts.m) {
      out.boundary_side_condition = std::min(out.boundary_side_condition, ts.v[i] - cert.F_u1);
    }
  }
  return out;
}

double compute_k1(const SmallnessInputs& in) {
  if (!(in.C1_u > 0.0)) throw DomainError("compute_k1 requires C1(u) > 0");
  const double kmp = in.K * in.M1 * in.Phi;
  return in.k - 2.0 * in.M_tilde * kmp - 2.0 * in.M_tilde * in.mu * kmp / in.C1_u -
         in.mu * in.C6 * kmp * in.Phi / in.C1_u - in.grad_phi0_inf * kmp - in.mu * in.grad_phi0_inf * kmp / in.C1_u;
}

}  // namespace thermopt
