#include "thermopt/materials.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace thermopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class Fn>
double integrate(Fn&& f, double a, double b, double rel_tol) {
  if (b <= a) return 0.0;
  // Boost compares an unscaled error estimate with a scaled tolerance, so short
  // intervals would recurse to full depth; integrate over [0, 1] instead.
  const double w = b - a;
  auto g = [&](double t) { return w * f(a + w * t); };
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(g, 0.0, 1.0, 20, rel_tol);
}

}  // namespace

std::string_view to_string(ConductivityKind kind) {
  return kind == ConductivityKind::TruncatedPower ? "truncated_power" : "constant";
}

ConductivityModel ConductivityModel::truncated_power(double sigma0, double u_star, double exponent_p) {
  if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
  if (!(u_star > 0.0) || !std::isfinite(u_star)) throw ConfigError("u_star must be positive and finite");
  if (!(exponent_p >= 2.0)) throw ConfigError("exponent p must be at least 2");
  return {ConductivityKind::TruncatedPower, sigma0, u_star, exponent_p};
}

ConductivityModel ConductivityModel::constant(double sigma0) {
  if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
  return {ConductivityKind::Constant, sigma0, kInf, 0.0};
}

double ConductivityModel::u_star() const { return truncation_ ? kInf : u_star_; }

bool ConductivityModel::closed_form() const {
  return !truncation_ && (kind_ == ConductivityKind::Constant || p_ == 2.0);
}

double ConductivityModel::base_sigma(double u) const {
  if (kind_ == ConductivityKind::Constant) return sigma0_;
  u = std::max(u, 0.0);
  if (u >= u_star_) return 0.0;
  return sigma0_ * std::pow(1.0 - u / u_star_, p_);
}

double ConductivityModel::base_sigma_prime(double u) const {
  if (kind_ == ConductivityKind::Constant || u < 0.0 || u >= u_star_) return 0.0;
  return -p_ * sigma0_ / u_star_ * std::pow(1.0 - u / u_star_, p_ - 1.0);
}

double ConductivityModel::sigma(double u) const {
  if (!truncation_ || u <= truncation_->n) return base_sigma(u);
  const double n = truncation_->n, delta = truncation_->delta;
  const double s_n = base_sigma(n);
  if (u >= n + delta) return 0.5 * s_n;
  const double t = (u - n) / delta;
  const double h00 = (2 * t - 3) * t * t + 1, h10 = ((t - 2) * t + 1) * t, h01 = (3 - 2 * t) * t * t;
  return h00 * s_n + h10 * delta * base_sigma_prime(n) + h01 * 0.5 * s_n;
}

double ConductivityModel::sigma_prime(double u) const {
  if (!truncation_ || u <= truncation_->n) return base_sigma_prime(u);
  const double n = truncation_->n, delta = truncation_->delta;
  if (u >= n + delta) return 0.0;
  const double s_n = base_sigma(n);
  const double t = (u - n) / delta;
  const double d00 = 6 * t * t - 6 * t, d10 = (3 * t - 4) * t + 1, d01 = 6 * t - 6 * t * t;
  return (d00 * s_n + d10 * delta * base_sigma_prime(n) + d01 * 0.5 * s_n) / delta;
}

double ConductivityModel::F(double u) const {
  u = std::max(u, 0.0);
  if (u >= u_star()) {
    throw DomainError("F(u) requires u < u_star (u = " + std::to_string(u) + ")");
  }
  if (!truncation_) {
    if (kind_ == ConductivityKind::Constant) return u / sigma0_;
    if (p_ == 2.0) return u_star_ * u / (sigma0_ * (u_star_ - u));
  }
  return integrate([this](double s) { return 1.0 / sigma(s); }, 0.0, u, 1e-12);
}

double ConductivityModel::F_inv(double v) const {
  if (v < 0.0) throw DomainError("F^{-1}(v) requires v >= 0");
  if (v == 0.0) return 0.0;
  if (!truncation_) {
    if (kind_ == ConductivityKind::Constant) return sigma0_ * v;
    if (p_ == 2.0) return sigma0_ * u_star_ * v / (u_star_ + sigma0_ * v);
  }
  if (std::isinf(v)) throw DomainError("F^{-1}(v) requires finite v");
  double lo = 0.0, hi;
  if (std::isfinite(u_star())) {
    hi = u_star();
  } else {
    // F grows at least linearly once sigma is constant.
    hi = 1.0;
    while (F(hi) < v) hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 4 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid >= hi || mid <= lo) break;
    if (F(mid) < v) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ConductivityModel::a(double v) const {
  if (closed_form() && kind_ == ConductivityKind::TruncatedPower) {
    const double d = u_star_ + sigma0_ * std::max(v, 0.0);
    return sigma0_ * u_star_ * u_star_ / (d * d);
  }
  if (closed_form()) return sigma0_;
  return sigma(F_inv(std::max(v, 0.0)));
}

double ConductivityModel::lipschitz_mu() const {
  if (!truncation_) {
    if (kind_ == ConductivityKind::Constant) return sigma0_;
    // sigma and |sigma'| are both maximal at u = 0.
    return std::max(sigma0_, p_ * sigma0_ / u_star_);
  }
  const double end = truncation_->n + truncation_->delta;
  double mu = 0.0;
  constexpr int kSamples = 4096;
  for (int i = 0; i <= kSamples; ++i) {
    const double u = end * i / kSamples;
    mu = std::max({mu, sigma(u), std::abs(sigma_prime(u))});
  }
  return mu + 1e-6;
}

ConductivityModel truncate(const ConductivityModel& model, double n) {
  const double width = std::isfinite(model.critical_temperature()) ? model.critical_temperature() - n : 1.0;
  return truncate(model, TruncationLevel{n, 0.05 * width});
}

ConductivityModel truncate(const ConductivityModel& model, TruncationLevel level) {
  if (model.truncation()) throw DomainError("model is already truncated");
  if (!(level.n > 0.0) || !(level.n < model.critical_temperature())) {
    throw DomainError("truncation level must lie in (0, u_star)");
  }
  if (!(level.delta > 0.0)) throw DomainError("truncation blend width must be positive");
  ConductivityModel out = model;
  out.truncation_ = level;
  return out;
}

double inverse_a_moment(const ConductivityModel& model, double v, double p) {
  if (v <= 0.0) return 0.0;
  return integrate([&](double s) { return std::pow(s, p - 2.0) / model.a(s); }, 0.0, v, 1e-12);
}

double lemma_ratio(const ConductivityModel& model, double v, double p) {
  return model.a(v) / std::pow(v, p) * inverse_a_moment(model, v, p);
}

}  // namespace thermopt
