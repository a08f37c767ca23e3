#pragma once

#include "thermopt/assembly.hpp"
#include "thermopt/materials.hpp"
#include "thermopt/state.hpp"

#include <optional>
#include <string>
#include <utility>

namespace thermopt {

/// Nodal fields of the substitution v = F(u), psi = (phi - phi0)^2 + v.
struct TransformedState {
  Vector v;       ///< F(u)
  Vector psi;     ///< (phi - phi0)^2 + v
  Vector psi_m;   ///< max(M, psi)
  Vector phi;     ///< potential the fields were built from
  double m = 0.0;
};

TransformedState transform(const Vector& u, const Vector& phi, const Vector& phi0, const ConductivityModel& model,
                           double m);
TransformedState transform(const StateSolution& sol, const ConductivityModel& model, const Vector& phi0, double m);

/// Dual-norm residuals (r_v, r_phi) of the a(v)-weighted system with the
/// nonlinear Robin term beta (F^{-1}(v) - u1), evaluated at (v, phi).
std::pair<double, double> transformed_residual(const TransformedState& ts, const ConductivityModel& model,
                                               const ProblemSpec& spec, const Control& beta);

/// Weak-form check of the psi identity against test functions vanishing on the boundary.
struct PsiIdentityCheck {
  double defect = 0.0;  ///< dual norm of the identity defect
  /// max_i [ int a grad psi . grad l_i - int a |grad phi0|^2 l_i + 2 int (phi-phi0) a grad phi0 . grad l_i ],
  /// which is <= 0 up to discretization error for the one-sided inequality.
  double inequality_violation = 0.0;
};

PsiIdentityCheck lemma2_check(const TransformedState& ts, const ConductivityModel& model, const ProblemSpec& spec);

/// sup_v [a(v) int_0^v s^{p-2}/a(s) ds - eps v^p] over a log grid on [1e-6, 1e6], plus 5% slack.
double compute_C_eps(const ConductivityModel& model, double eps, double p = 2.0);

struct PoincareEstimate {
  double lambda_min = 0.0;
  double c_d = 0.0;  ///< 1 / sqrt(lambda_min)
  int iterations = 0;
};

/// Smallest eigenvalue of the Laplacian with zero data on Gamma_D, by inverse power iteration.
PoincareEstimate estimate_poincare(const Mesh& mesh, double tol = 1e-8, int max_iterations = 500);

/// Evaluated constants of the a-priori L-infinity bound chain.
struct BoundCertificate {
  int dim = 2;
  double mu = 0.0;
  double phi0_inf = 0.0;
  double phi0_w1inf = 0.0;
  double F_u0 = 0.0;
  double F_u1 = 0.0;
  double eps = 0.0;
  double C_eps = 0.0;
  double denominator = 0.0;  ///< 1 - 2 eps e^{8 mu |phi0|^2} |phi0|_{W1,inf}^2
  double C = 0.0;
  double M = 0.0;
  double C_D = 0.0;
  double C1 = 1.0;
  double C2 = 0.0;
  double mes_omega = 0.0;
  double moser_factor = 0.0;
  double psiM_l2_bound = 0.0;
  double psiM_inf_bound = 0.0;
  double v_inf_bound = 0.0;
  double N = 0.0;
  double r = 0.0;
  double s = 0.0;  ///< +inf in 2D
  double u_star = 0.0;
  bool conditional_on_C1 = true;
};

/// Raised when 1 - 2 eps e^{8 mu |phi0|^2} |phi0|^2_{W1,inf} <= 0.
class CertificateInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CertificateOptions {
  /// Explicit eps; when empty, start at 0.01 and halve until the denominator exceeds 0.5.
  std::optional<double> eps;
  double C1 = 1.0;
  double p = 2.0;
};

/// (2C2)^{d/2} (d/(d-2))^{d(d-2)/4} for d > 2 and 2 C2 for d <= 2.
double moser_factor(int dim, double C2);

BoundCertificate compute_certificate(const ProblemSpec& spec, const CertificateOptions& opts);

struct CertificateCheck {
  double max_v = 0.0;
  double max_u = 0.0;
  double v_margin = 0.0;  ///< v_inf_bound - max_v
  double u_margin = 0.0;  ///< N - max_u
  bool passed = false;
  std::string note;
};

CertificateCheck check_certificate(const StateSolution& sol, const BoundCertificate& cert,
                                   const ConductivityModel& model);

/// Discrete sides of the p = 2 gradient estimate for psi_M:
/// int |grad psi_M|^2  vs  C int (eps psi_M^2 + C_eps + 1/eps).
struct EnergyDiagnostic {
  double lhs = 0.0;
  double rhs = 0.0;
  bool within_slack = false;  ///< lhs <= 1.1 rhs
  /// min over Robin vertices with psi > M of v - F(|u1|_inf); positive when the boundary term is nonnegative.
  double boundary_side_condition = 0.0;
};

EnergyDiagnostic energy_inequality_diagnostic(const TransformedState& ts, const BoundCertificate& cert,
                                              const ProblemSpec& spec);

/// Inputs to the differentiability smallness condition; none of them has a constructive recipe.
struct SmallnessInputs {
  double k = 0.0;
  double M_tilde = 0.0;
  double K = 0.0;
  double M1 = 0.0;
  double Phi = 0.0;
  double mu = 0.0;
  double C6 = 0.0;
  double C1_u = 0.0;  ///< sigma(N)
  double grad_phi0_inf = 0.0;
};

/// k1 = k - 2 M~ K M1 Phi - 2 M~ mu K M1 Phi / C1(u) - mu C6 K M1 Phi^2 / C1(u)
///      - K |grad phi0|_inf M1 Phi - mu |grad phi0|_inf K M1 Phi / C1(u).
double compute_k1(const SmallnessInputs& in);

}  // namespace thermopt
