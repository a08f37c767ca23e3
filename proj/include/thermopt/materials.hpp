#pragma once

#include "thermopt/common.hpp"

#include <limits>
#include <optional>
#include <string_view>

namespace thermopt {

enum class ConductivityKind { TruncatedPower, Constant };

std::string_view to_string(ConductivityKind kind);

/// Level n in (0, u_star) above which sigma is replaced by a positive C^1 continuation.
struct TruncationLevel {
  double n = 0.0;
  /// Width of the cubic blend on [n, n + delta].
  double delta = 0.0;
};

/// Electrical conductivity sigma(u) with a critical temperature u_star.
///
/// TruncatedPower: sigma(u) = sigma0 (1 - u/u_star)^p below u_star and 0 above;
/// p >= 2 gives a C^1 junction at u_star and a divergent F(u) = int_0^u ds/sigma(s).
/// Constant: sigma = sigma0 everywhere, u_star = +inf.
///
/// A truncated model (see truncate()) equals the base model on [0, n], blends
/// with a cubic Hermite polynomial down to sigma(n)/2 on [n, n + delta] and is
/// constant afterwards, so it never vanishes.
///
/// Negative arguments are evaluated at 0.
class ConductivityModel {
 public:
  static ConductivityModel truncated_power(double sigma0, double u_star, double exponent_p);
  static ConductivityModel constant(double sigma0);

  ConductivityKind kind() const { return kind_; }
  double sigma0() const { return sigma0_; }
  /// +inf for the constant model and for truncated models.
  double u_star() const;
  /// u_star of the underlying (untruncated) family.
  double critical_temperature() const { return u_star_; }
  double exponent_p() const { return p_; }
  const std::optional<TruncationLevel>& truncation() const { return truncation_; }

  double sigma(double u) const;
  double sigma_prime(double u) const;

  /// F(u) = int_0^u ds / sigma(s). Throws DomainError for u >= u_star.
  double F(double u) const;
  double F_inv(double v) const;
  /// a(v) = sigma(F^{-1}(v)).
  double a(double v) const;

  /// mu >= max(sup sigma, sup |sigma'|) over [0, u_star].
  double lipschitz_mu() const;

 private:
  ConductivityModel(ConductivityKind kind, double sigma0, double u_star, double p)
      : kind_(kind), sigma0_(sigma0), u_star_(u_star), p_(p) {}

  friend ConductivityModel truncate(const ConductivityModel& model, double n);
  friend ConductivityModel truncate(const ConductivityModel& model, TruncationLevel level);

  double base_sigma(double u) const;
  double base_sigma_prime(double u) const;
  bool closed_form() const;

  ConductivityKind kind_;
  double sigma0_;
  double u_star_;
  double p_ = 0.0;
  std::optional<TruncationLevel> truncation_;
};

/// sigma_n with the default blend width delta = 0.05 (u_star - n).
ConductivityModel truncate(const ConductivityModel& model, double n);
ConductivityModel truncate(const ConductivityModel& model, TruncationLevel level);

/// g(v) = a(v)/v^p * int_0^v s^{p-2}/a(s) ds, whose decay to 0 makes C_eps finite.
double lemma_ratio(const ConductivityModel& model, double v, double p);

/// int_0^v s^{p-2}/a(s) ds, by adaptive quadrature (closed form for TruncatedPower p = 2, exponent 2).
double inverse_a_moment(const ConductivityModel& model, double v, double p);

}  // namespace thermopt
