#include "thermopt/commands.hpp"
#include "thermopt/config.hpp"
#include "thermopt/expression.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace thermopt;
namespace fs = std::filesystem;

TEST(Expression, Evaluates) {
  const Point p{2.0, 3.0, -1.0};
  EXPECT_DOUBLE_EQ(Expression::parse("0.1*x")(p), 0.2);
  EXPECT_DOUBLE_EQ(Expression::parse("2^3^2")(p), 512.0);
  EXPECT_DOUBLE_EQ(Expression::parse("(-2)^2")(p), 4.0);
  EXPECT_DOUBLE_EQ(Expression::parse("x - y - z")(p), 0.0);
  EXPECT_DOUBLE_EQ(Expression::parse("8 / x / 2")(p), 2.0);
  EXPECT_DOUBLE_EQ(Expression::parse("-x + +y")(p), 1.0);
  EXPECT_NEAR(Expression::parse("sin(pi/2) + cos(0) + exp(0) + sqrt(y*3)")(p), 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(Expression::parse("1e-2 * (x + 1)")(p), 0.03);
  EXPECT_TRUE(Expression::parse("2*pi").is_constant());
  EXPECT_FALSE(Expression::parse("0*x + 1").is_constant());
}

TEST(Expression, ReportsColumns) {
  auto column_of = [](const char* text) {
    try {
      (void)Expression::parse(text);
    } catch (const ExpressionError& e) {
      return e.column();
    }
    return -1;
  };
  EXPECT_EQ(column_of("1 + w"), 5);
  EXPECT_EQ(column_of("(x + 1"), 7);
  EXPECT_EQ(column_of("x 2"), 3);
  EXPECT_EQ(column_of("tan(x)"), 1);
  EXPECT_EQ(column_of(""), 1);
}

TEST(Config, DefaultsDescribeBenchmark) {
  const RunConfig cfg = parse_config("");
  EXPECT_EQ(cfg.problem.divisions, (std::vector<int>{16, 16}));
  const ProblemSpec spec = build_problem(cfg);
  EXPECT_EQ(spec.fe().num_dofs(), 17 * 17);
  EXPECT_DOUBLE_EQ(spec.phi0.maxCoeff(), 0.1);
  EXPECT_DOUBLE_EQ(spec.m_cap, 2.0);
  EXPECT_DOUBLE_EQ(configured_control(cfg, spec).values.maxCoeff(), 1.0);
}

TEST(Config, ParsesSections) {
  const RunConfig cfg = parse_config(
      "# comment\n"
      "problem.divisions = 4, 6   # trailing\n"
      "problem.dirichlet_sides = x0, y1\n"
      "problem.beta = 0.5 + 0*x\n"
      "solver.joule_form = direct\n"
      "solver.truncation_level = 0.8\n"
      "optimizer.mode = projected_gradient\n"
      "certificate.eps = auto\n"
      "problem.refinements = 1\n");
  EXPECT_EQ(cfg.problem.divisions, (std::vector<int>{4, 6}));
  EXPECT_EQ(cfg.solver.joule_form, JouleForm::Direct);
  EXPECT_EQ(cfg.optimizer.mode, OptimizerMode::ProjectedGradient);
  EXPECT_FALSE(cfg.certificate.eps);
  EXPECT_DOUBLE_EQ(*cfg.solver.truncation_level, 0.8);
  const ProblemSpec spec = build_problem(cfg);
  EXPECT_EQ(spec.fe().num_dofs(), 9 * 13);
  EXPECT_NEAR(boundary_measure(spec.mesh(), BoundaryTag::DirichletTemperature), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(configured_control(cfg, spec).values.minCoeff(), 0.5);
}

TEST(Config, RejectsWithPosition) {
  auto message = [](const std::string& text) {
    try {
      (void)parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("solver.tol = 1e-9\n  solver.tolerance = 1\n").find("line 2, column 3"), std::string::npos);
  EXPECT_NE(message("solver.tol = abc\n").find("line 1, column 14"), std::string::npos);
  EXPECT_NE(message("solver.tol = 1\nsolver.tol = 2\n").find("duplicate"), std::string::npos);
  EXPECT_NE(message("problem.phi0 = 0.1 * q\n").find("line 1, column 22"), std::string::npos);
  EXPECT_NE(message("problem.divisions = 4, 0\n").find("column 24"), std::string::npos);
  EXPECT_NE(message("just words\n").find("line 1, column 1"), std::string::npos);
  EXPECT_NE(message("problem.dirichlet_sides = z0\n").find("does not exist"), std::string::npos);
  EXPECT_NE(message("optimizer.mode = newton\n").find("line 1"), std::string::npos);
}

TEST(Config, InadmissibleBetaIsRejected) {
  const RunConfig cfg = parse_config("problem.divisions = 4, 4\nproblem.beta = 5\n");
  const ProblemSpec spec = build_problem(cfg);
  EXPECT_THROW(configured_control(cfg, spec), ConfigError);
}

TEST(Config, NodalFilesFollowRefinement) {
  const fs::path dir = fs::temp_directory_path() / "thermopt_nodal_test";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "phi0.txt");
    // 2x2 grid of a 1x1 division: vertices ordered by the rectangle builder.
    for (int i = 0; i < 4; ++i) f << 0.0 << "\n";
  }
  const RunConfig cfg =
      parse_config("problem.divisions = 1, 1\nproblem.refinements = 2\nproblem.phi0_file = phi0.txt\n", dir);
  const ProblemSpec spec = build_problem(cfg);
  EXPECT_EQ(spec.fe().num_dofs(), 25);
  EXPECT_EQ(spec.phi0.cwiseAbs().maxCoeff(), 0.0);
  fs::remove_all(dir);
}

namespace {

struct CliRun {
  int code = -1;
  fs::path out;
};

CliRun run_cli(const std::string& name, const std::string& command, const std::string& config,
               const std::string& extra = {}) {
  const fs::path dir = fs::temp_directory_path() / ("thermopt_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "run.cfg");
    f << config;
  }
  const std::string cmd = std::string(THERMOPT_CLI_PATH) + " " + command + " --config " + (dir / "run.cfg").string() +
                          " --out " + (dir / "out").string() + " " + extra + " > " + (dir / "log.txt").string() +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, dir / "out"};
}

const std::string kSmall = "problem.divisions = 6, 6\n";

}  // namespace

TEST(Cli, SolveSucceedsAndWritesArtifacts) {
  const CliRun r = run_cli("solve", "solve", kSmall);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(fs::exists(r.out / "report.json"));
  EXPECT_TRUE(fs::exists(r.out / "u.vtk"));
  EXPECT_TRUE(fs::exists(r.out / "phi.vtk"));
  std::ifstream in(r.out / "report.json");
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_NE(ss.str().find("\"schema_version\": 1"), std::string::npos);
}

TEST(Cli, ConfigErrorsExitWithOne) {
  EXPECT_EQ(run_cli("badkey", "solve", "solver.bogus = 1\n").code, kExitConfig);
  EXPECT_EQ(run_cli("baddata", "solve", kSmall + "problem.u0 = 1.5\n").code, kExitConfig);
}

TEST(Cli, NonconvergenceExitsWithTwo) {
  EXPECT_EQ(run_cli("noconv", "solve", kSmall + "solver.max_iter = 2\n").code, kExitNonconvergence);
}

TEST(Cli, CriticalityExitsWithThree) {
  EXPECT_EQ(run_cli("critical", "solve", kSmall + "problem.phi0 = x\nproblem.beta = 0\nsolver.truncation_level = 0.15\n").code, kExitCriticality);
}

TEST(Cli, InfeasibleCertificateExitsWithFive) {
  EXPECT_EQ(run_cli("infeasible", "certificate", kSmall + "certificate.eps = 100\n").code, kExitCertificateInfeasible);
  EXPECT_EQ(run_cli("feasible", "certificate", kSmall).code, kExitOk);
}

TEST(Cli, VerifySuitesPass) {
  EXPECT_EQ(run_cli("lemma", "verify", kSmall, "--suite lemma1").code, kExitOk);
  EXPECT_EQ(run_cli("maxp", "verify", kSmall, "--suite maxprinciple").code, kExitOk);
}

TEST(Cli, FailingVerifyExitsWithFour) {
  // A gradient tolerance below round-off cannot be met.
  EXPECT_EQ(run_cli("strict", "verify", kSmall + "verify.gradient_tol = 1e-30\n", "--suite gradient").code,
            kExitVerifyFailed);
}

TEST(Cli, OptimizeWritesControl) {
  const CliRun r = run_cli("optimize", "optimize", kSmall);
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_TRUE(fs::exists(r.out / "beta.csv"));
}

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run_cli("nosuite", "verify", kSmall, "--suite nonsense").code, kExitConfig);
}
