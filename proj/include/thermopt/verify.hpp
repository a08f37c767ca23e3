#pragma once

#include "thermopt/control.hpp"
#include "thermopt/state.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace thermopt {

struct PropertyResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<PropertyResult> properties;

  bool passed() const;
  /// Name of the first failing property, empty when all pass.
  std::string first_failure() const;
};

/// Exponential bracket for a(v+y)/a(v) on seeded pairs with v, v+y in [0, 50],
/// and g(v) <= 1/v on a log grid over [1, 1e4].
SuiteReport verify_lemma1(const ConductivityModel& model, std::uint64_t seed, int pairs = 100);

/// Discrete bounds min/max phi0 for phi and the boundary-data minimum for u.
SuiteReport verify_max_principle(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts);

/// Transformed residual and psi-identity defect on a mesh and its refinement, plus the F round trip.
SuiteReport verify_substitution(const ProblemSpec& coarse, const Control& beta_coarse, const ProblemSpec& fine,
                                const Control& beta_fine, const SolverOptions& opts);

struct GradientCheckOptions {
  std::uint64_t seed = 12345;
  int directions = 5;
  double fd_eps = 1e-4;
  double tol = 1e-3;
  double inner_tol = 1e-12;
};

/// Adjoint pairing, sensitivity derivative and central difference of J on random directions in [-1, 1].
SuiteReport verify_gradient(const ProblemSpec& spec, const Control& beta, const SolverOptions& opts,
                            const GradientCheckOptions& check);

/// Pairwise relative difference |a - b| / max(|a|, |b|, 1e-300).
double relative_difference(double a, double b);

}  // namespace thermopt
