#pragma once

#include "thermopt/control.hpp"
#include "thermopt/expression.hpp"
#include "thermopt/state.hpp"
#include "thermopt/transform.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace thermopt {

/// Parsed run configuration.  Every key is optional; defaults reproduce the
/// 16x16 unit-square benchmark.
struct RunConfig {
  struct Problem {
    int dim = 2;
    std::vector<double> extents;
    std::vector<int> divisions;
    std::vector<std::string> dirichlet_sides{"x0"};
    int refinements = 0;
    std::optional<std::string> mesh_file;
    std::string model = "truncated_power";
    double sigma0 = 1.0;
    double u_star = 1.0;
    double exponent = 2.0;
    std::string u0 = "0";
    std::string u1 = "0.05";
    std::string phi0 = "0.1*x";
    std::optional<std::string> u0_file, u1_file, phi0_file;
    double m_cap = 2.0;
    /// Control used by solve / verify / certificate, evaluated at facet centroids; default m_cap / 2.
    std::optional<std::string> beta;
  } problem;

  SolverOptions solver;
  OptimizerOptions optimizer;

  struct Certificate {
    std::optional<double> eps;
    double c1 = 1.0;
    double p = 2.0;
  } certificate;

  struct Verify {
    std::uint64_t seed = 12345;
    int directions = 5;
    double fd_eps = 1e-4;
    double gradient_tol = 1e-3;
    double inner_tol = 1e-12;
  } verify;

  std::string output_dir = "out";

  /// Keys exactly as written, for the report echo.
  std::map<std::string, std::string> raw;
  /// Directory the relative file paths are resolved against.
  std::filesystem::path base_dir;
};

/// Strict parser for `key = value` lines; `#` starts a comment.  Errors carry
/// "line L, column C" positions.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Mesh, model and nodal boundary data described by the configuration.
ProblemSpec build_problem(const RunConfig& cfg);
/// Same, on a mesh refined `extra` more times.
ProblemSpec build_problem(const RunConfig& cfg, int extra_refinements);
/// Configured control on the Robin facets of the problem mesh.
Control configured_control(const RunConfig& cfg, const ProblemSpec& spec);

}  // namespace thermopt
