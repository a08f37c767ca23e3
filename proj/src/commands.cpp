#include "thermopt/commands.hpp"

#include "thermopt/config.hpp"
#include "thermopt/io.hpp"
#include "thermopt/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace thermopt {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

// Stores x only when finite; absent keys mean "unbounded" in the schema.
void put(json& j, const char* key, double x) {
  if (std::isfinite(x)) j[key] = x;
}

// Raised when a verification suite fails, after its report was written.
struct VerifyFailed {
  std::string property;
};

class Run {
 public:
  Run(const CommandOptions& opts, std::ostream& out)
      : opts_(opts), out_(out), cfg_(load_config(opts.config)), start_(std::chrono::steady_clock::now()) {
    dir_ = opts.out ? *opts.out : fs::path(cfg_.output_dir);
    if (!opts.out && dir_.is_relative()) dir_ = fs::current_path() / dir_;
    fs::create_directories(dir_);
    report_["schema_version"] = kReportSchemaVersion;
    report_["command"] = opts.command;
    json echo = json::object();
    for (const auto& [k, v] : cfg_.raw) echo[k] = v;
    report_["config"] = echo;
    report_["artifacts"] = json::array();
  }

  int solve() {
    const ProblemSpec spec = build_problem(cfg_);
    const Control beta = configured_control(cfg_, spec);
    const StateSolution sol = solve_state(spec, beta, cfg_.solver);
    report_["mesh"] = mesh_summary(spec);
    report_["state"] = state_summary(spec, beta, sol);
    write_fields(spec, sol);
    return finish();
  }

  int optimize() {
    const ProblemSpec spec = build_problem(cfg_);
    OptimizerOptions oo = cfg_.optimizer;
    oo.state = cfg_.solver;
    const OptimizerResult res = thermopt::optimize(spec, oo);
    report_["mesh"] = mesh_summary(spec);
    report_["state"] = state_summary(spec, res.beta, res.state);
    json opt;
    opt["mode"] = std::string(to_string(oo.mode));
    opt["status"] = std::string(to_string(res.status));
    opt["optimality_residual"] = res.optimality_residual;
    opt["J"] = {{"integral_u", res.J.integral_u}, {"integral_beta_sq", res.J.integral_beta_sq}, {"total", res.J.total}};
    opt["beta_min"] = res.beta.size() ? res.beta.values.minCoeff() : 0.0;
    opt["beta_max"] = res.beta.size() ? res.beta.values.maxCoeff() : 0.0;
    json hist = json::array();
    for (const auto& h : res.history) {
      hist.push_back({{"iteration", h.iteration},
                      {"J", h.J},
                      {"optimality_residual", h.optimality_residual},
                      {"change", h.change},
                      {"step", h.step}});
    }
    opt["history"] = hist;
    report_["optimizer"] = opt;
    write_fields(spec, res.state, {Field{FieldKind::AdjointP, res.adjoint.p.values},
                                   Field{FieldKind::AdjointQ, res.adjoint.q.values}});
    write_beta_csv(dir_ / "beta.csv", spec.mesh(), res.beta);
    artifact("beta.csv");
    out_ << "optimizer " << to_string(res.status) << " after " << res.history.size() - 1
         << " iterations, J = " << std::setprecision(12) << res.J.total << ", optimality residual "
         << res.optimality_residual << '\n';
    finish();
    return res.status == OptimizerStatus::Converged ? kExitOk : kExitNonconvergence;
  }

  int verify() {
    SuiteReport rep;
    const ProblemSpec spec = build_problem(cfg_);
    const Control beta = configured_control(cfg_, spec);
    if (opts_.suite == "lemma1") {
      rep = verify_lemma1(spec.model, cfg_.verify.seed);
    } else if (opts_.suite == "maxprinciple") {
      rep = verify_max_principle(spec, beta, cfg_.solver);
    } else if (opts_.suite == "substitution") {
      const ProblemSpec fine = build_problem(cfg_, 1);
      rep = verify_substitution(spec, beta, fine, configured_control(cfg_, fine), cfg_.solver);
    } else if (opts_.suite == "gradient") {
      GradientCheckOptions gc{cfg_.verify.seed, cfg_.verify.directions, cfg_.verify.fd_eps, cfg_.verify.gradient_tol,
                              cfg_.verify.inner_tol};
      rep = verify_gradient(spec, beta, cfg_.solver, gc);
    } else {
      throw ConfigError("unknown suite '" + opts_.suite + "' (gradient, maxprinciple, substitution, lemma1)");
    }
    json props = json::array();
    for (const auto& p : rep.properties) {
      out_ << (p.passed ? "PASS " : "FAIL ") << rep.suite << '.' << p.name << " value=" << std::setprecision(6)
           << p.value << " tol=" << p.tolerance;
      if (!p.detail.empty()) out_ << " (" << p.detail << ')';
      out_ << '\n';
      json jp{{"name", p.name}, {"passed", p.passed}, {"tolerance", p.tolerance}, {"detail", p.detail}};
      put(jp, "value", p.value);
      props.push_back(jp);
    }
    report_["verify"] = {{"suite", rep.suite}, {"passed", rep.passed()}, {"properties", props}};
    finish();
    if (!rep.passed()) throw VerifyFailed{rep.suite + "." + rep.first_failure()};
    return kExitOk;
  }

  int convergence() {
    if (opts_.levels < 2) throw ConfigError("--levels must be at least 2");
    struct Level {
      ProblemSpec spec;
      StateSolution sol;
    };
    std::vector<Level> levels;
    json rows = json::array();
    std::ofstream csv(dir_ / "convergence.csv");
    csv << std::setprecision(10);
    out_ << std::setprecision(6);
    const char* header = "level,h,dofs,iterations,u_l2_diff,u_h1_diff,phi_l2_diff,phi_h1_diff,u_l2_rate,u_h1_rate,"
                         "phi_l2_rate,phi_h1_rate";
    csv << header << '\n';
    out_ << header << '\n';
    std::array<double, 4> prev{};
    int status = kExitOk;
    try {
      for (int l = 0; l < opts_.levels; ++l) {
        ProblemSpec spec = build_problem(cfg_, l);
        const Control beta = configured_control(cfg_, spec);
        StateSolution sol = solve_state(spec, beta, cfg_.solver);
        std::array<double, 4> diff{NAN, NAN, NAN, NAN};
        if (l > 0) {
          // The fine mesh repeats the refinement of the coarse one, so parents are regenerated.
          std::vector<std::array<int, 2>> parents;
          (void)refine_uniform(levels.back().spec.mesh(), &parents);
          const Norms du = norms(spec.fe(), prolongate(parents, levels.back().sol.u) - sol.u);
          const Norms dp = norms(spec.fe(), prolongate(parents, levels.back().sol.phi) - sol.phi);
          diff = {du.l2, du.h1, dp.l2, dp.h1};
        }
        json row{{"level", l},
                 {"h", spec.mesh().max_cell_diameter()},
                 {"dofs", spec.fe().num_dofs()},
                 {"iterations", sol.iterations}};
        std::ostringstream line;
        line << std::setprecision(10) << l << ',' << spec.mesh().max_cell_diameter() << ',' << spec.fe().num_dofs()
             << ',' << sol.iterations;
        static const char* names[] = {"u_l2", "u_h1", "phi_l2", "phi_h1"};
        for (int k = 0; k < 4; ++k) {
          line << ',';
          if (l > 0) {
            line << diff[k];
            row[std::string(names[k]) + "_diff"] = diff[k];
          }
        }
        for (int k = 0; k < 4; ++k) {
          line << ',';
          if (l > 1) {
            const double scale = std::max(1.0, k < 2 ? norms(spec.fe(), sol.u).h1 : norms(spec.fe(), sol.phi).h1);
            if (prev[k] <= 1e-13 * scale || diff[k] <= 1e-13 * scale) {
              line << "exact";
              row[std::string(names[k]) + "_rate"] = "exact";
            } else {
              const double rate = std::log2(prev[k] / diff[k]);
              line << rate;
              row[std::string(names[k]) + "_rate"] = rate;
            }
          }
        }
        csv << line.str() << '\n';
        out_ << line.str() << '\n';
        rows.push_back(row);
        prev = diff;
        levels.push_back({std::move(spec), std::move(sol)});
      }
    } catch (const NonconvergenceError& e) {
      report_["error"] = e.what();
      status = kExitNonconvergence;
    } catch (const CriticalityError& e) {
      report_["error"] = e.what();
      status = kExitCriticality;
    }
    artifact("convergence.csv");
    report_["convergence"] = {{"rate_definition", "log2 of consecutive-level difference ratios"}, {"levels", rows}};
    finish();
    return status;
  }

  int certificate() {
    const ProblemSpec spec = build_problem(cfg_);
    const Control beta = configured_control(cfg_, spec);
    CertificateOptions co{cfg_.certificate.eps, cfg_.certificate.c1, cfg_.certificate.p};
    const BoundCertificate cert = compute_certificate(spec, co);
    json jc;
    jc["conditional_on_C1"] = cert.conditional_on_C1;
    jc["dim"] = cert.dim;
    put(jc, "mu", cert.mu);
    put(jc, "phi0_inf", cert.phi0_inf);
    put(jc, "phi0_w1inf", cert.phi0_w1inf);
    put(jc, "F_u0", cert.F_u0);
    put(jc, "F_u1", cert.F_u1);
    put(jc, "eps", cert.eps);
    put(jc, "C_eps", cert.C_eps);
    put(jc, "denominator", cert.denominator);
    put(jc, "C", cert.C);
    put(jc, "M", cert.M);
    put(jc, "C_D", cert.C_D);
    put(jc, "C1", cert.C1);
    put(jc, "C2", cert.C2);
    put(jc, "mes_omega", cert.mes_omega);
    put(jc, "moser_factor", cert.moser_factor);
    put(jc, "psiM_l2_bound", cert.psiM_l2_bound);
    put(jc, "psiM_inf_bound", cert.psiM_inf_bound);
    put(jc, "v_inf_bound", cert.v_inf_bound);
    put(jc, "N", cert.N);
    put(jc, "r", cert.r);
    put(jc, "s", cert.s);
    put(jc, "u_star", cert.u_star);

    const StateSolution sol = solve_state(spec, beta, cfg_.solver);
    const CertificateCheck chk = check_certificate(sol, cert, spec.model);
    json check{{"passed", chk.passed}, {"note", chk.note}};
    put(check, "max_u", chk.max_u);
    put(check, "max_v", chk.max_v);
    put(check, "v_margin", chk.v_margin);
    put(check, "u_margin", chk.u_margin);
    jc["check"] = check;

    const TransformedState ts = transform(sol, spec.model, spec.phi0, cert.M);
    const EnergyDiagnostic en = energy_inequality_diagnostic(ts, cert, spec);
    json energy{{"within_slack", en.within_slack}};
    put(energy, "lhs", en.lhs);
    put(energy, "rhs", en.rhs);
    put(energy, "boundary_side_condition", en.boundary_side_condition);
    jc["energy_diagnostic"] = energy;
    report_["mesh"] = mesh_summary(spec);
    report_["state"] = state_summary(spec, beta, sol);
    report_["certificate"] = jc;

    std::ofstream(dir_ / "certificate.json") << std::setw(2) << jc << '\n';
    artifact("certificate.json");
    out_ << "certificate: M = " << cert.M << ", v bound = " << cert.v_inf_bound << ", N = " << cert.N
         << ", check " << (chk.passed ? "passed" : "FAILED") << " (" << chk.note << ")\n";
    return finish();
  }

  // Writes report.json; safe to call on error paths.
  int finish() {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    report_["timings"] = {{"total_seconds", secs}};
    auto& arts = report_["artifacts"];
    if (std::find(arts.begin(), arts.end(), "report.json") == arts.end()) arts.push_back("report.json");
    std::ofstream f(dir_ / "report.json");
    f << std::setw(2) << report_ << '\n';
    if (!f) throw ConfigError("cannot write " + (dir_ / "report.json").string());
    return kExitOk;
  }

  void record_error(const std::string& what) { report_["error"] = what; }

 private:
  void artifact(const std::string& name) { report_["artifacts"].push_back(name); }

  json mesh_summary(const ProblemSpec& spec) const {
    const Mesh& m = spec.mesh();
    return {{"dim", m.dim()},
            {"vertices", m.num_vertices()},
            {"cells", m.num_cells()},
            {"robin_facets", m.robin_facets().size()},
            {"h", m.max_cell_diameter()}};
  }

  json state_summary(const ProblemSpec& spec, const Control& beta, const StateSolution& sol) const {
    json s;
    s["iterations"] = sol.iterations;
    s["residual_u"] = sol.residual_u;
    s["residual_phi"] = sol.residual_phi;
    s["max_u"] = sol.u.maxCoeff();
    s["min_u"] = sol.u.minCoeff();
    put(s, "subcritical_margin", subcritical_margin(sol, spec.model));
    s["u_h1"] = norms(spec.fe(), sol.u).h1;
    s["phi_w1inf_proxy"] = std::max(sol.phi.cwiseAbs().maxCoeff(), max_gradient(spec.fe(), sol.phi));
    s["sigma_clamp_count"] = sol.sigma_clamp_count;
    if (sol.truncation_used) s["truncation_level"] = sol.truncation_used->n;
    const ObjectiveValue J = objective(spec.fe(), sol.u, beta);
    s["J"] = {{"integral_u", J.integral_u}, {"integral_beta_sq", J.integral_beta_sq}, {"total", J.total}};
    json hist = json::array();
    for (const auto& h : sol.history) {
      hist.push_back({{"iteration", h.iteration},
                      {"max_change", h.max_change},
                      {"residual_u", h.residual_u},
                      {"residual_phi", h.residual_phi}});
    }
    s["picard_history"] = hist;
    return s;
  }

  void write_fields(const ProblemSpec& spec, const StateSolution& sol, const std::vector<Field>& extra = {}) {
    std::vector<Field> uf{Field{FieldKind::Temperature, sol.u}};
    uf.insert(uf.end(), extra.begin(), extra.end());
    write_vtk(dir_ / "u.vtk", spec.mesh(), uf);
    write_vtk(dir_ / "phi.vtk", spec.mesh(), {Field{FieldKind::Potential, sol.phi}});
    artifact("u.vtk");
    artifact("phi.vtk");
    out_ << "state converged in " << sol.iterations << " Picard iterations, max u = " << std::setprecision(10)
         << sol.u.maxCoeff() << '\n';
  }

  const CommandOptions& opts_;
  std::ostream& out_;
  RunConfig cfg_;
  fs::path dir_;
  json report_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

int run_command(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
  std::unique_ptr<Run> run;
  auto fail = [&](int code, const std::string& what) {
    err << "error: " << what << '\n';
    if (run) {
      run->record_error(what);
      try {
        run->finish();
      } catch (const std::exception&) {
      }
    }
    return code;
  };
  try {
    run = std::make_unique<Run>(opts, out);
    if (opts.command == "solve") return run->solve();
    if (opts.command == "optimize") return run->optimize();
    if (opts.command == "verify") return run->verify();
    if (opts.command == "convergence") return run->convergence();
    if (opts.command == "certificate") return run->certificate();
    return fail(kExitConfig, "unknown command '" + opts.command + "'");
  } catch (const VerifyFailed& v) {
    err << "error: verification failed: " << v.property << '\n';
    return kExitVerifyFailed;
  } catch (const CertificateInfeasible& e) {
    return fail(kExitCertificateInfeasible, e.what());
  } catch (const CriticalityError& e) {
    return fail(kExitCriticality, e.what());
  } catch (const NonconvergenceError& e) {
    return fail(kExitNonconvergence, e.what());
  } catch (const SolverError& e) {
    return fail(kExitNonconvergence, e.what());
  } catch (const ConfigError& e) {
    return fail(kExitConfig, e.what());
  } catch (const DomainError& e) {
    return fail(kExitConfig, e.what());
  } catch (const std::exception& e) {
    return fail(kExitConfig, e.what());
  }
}

}  // namespace thermopt
