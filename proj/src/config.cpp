#include "thermopt/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace thermopt {

namespace {

// Error inside a value; offset is relative to the start of the value text.
struct ValueError {
  std::string message;
  int offset = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int offset = 0) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ValueError{"expected a number, got '" + v + "'", offset};
  }
  return out;
}

long to_long(const std::string& v, int offset = 0) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ValueError{"expected an integer, got '" + v + "'", offset};
  }
  return out;
}

int to_int(const std::string& v) { return static_cast<int>(to_long(v)); }

double positive(const std::string& v) {
  const double x = to_double(v);
  if (!(x > 0.0)) throw ValueError{"value must be positive", 0};
  return x;
}

template <class Fn>
auto to_list(const std::string& v, Fn&& item) {
  std::vector<decltype(item(std::string(), 0))> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = v.find(',', start);
    const std::string raw = v.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto lead = raw.find_first_not_of(" \t");
    out.push_back(item(trim(raw), static_cast<int>(start + (lead == std::string::npos ? 0 : lead))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string check_expression(const std::string& v) {
  try {
    (void)Expression::parse(v);
  } catch (const ExpressionError& e) {
    throw ValueError{e.what(), e.column() - 1};
  }
  return v;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"problem.dim",
       [](RunConfig& c, const std::string& v) {
         c.problem.dim = to_int(v);
         if (c.problem.dim != 2 && c.problem.dim != 3) throw ValueError{"dim must be 2 or 3", 0};
       }},
      {"problem.extents",
       [](RunConfig& c, const std::string& v) {
         c.problem.extents = to_list(v, [](const std::string& s, int off) {
           const double x = to_double(s, off);
           if (!(x > 0.0)) throw ValueError{"extents must be positive", off};
           return x;
         });
       }},
      {"problem.divisions",
       [](RunConfig& c, const std::string& v) {
         c.problem.divisions = to_list(v, [](const std::string& s, int off) {
           const long n = to_long(s, off);
           if (n < 1) throw ValueError{"divisions must be at least 1", off};
           return static_cast<int>(n);
         });
       }},
      {"problem.dirichlet_sides",
       [](RunConfig& c, const std::string& v) {
         c.problem.dirichlet_sides = to_list(v, [](const std::string& s, int off) {
           if (!parse_box_side(s)) throw ValueError{"unknown box side '" + s + "' (use x0..z1)", off};
           return s;
         });
       }},
      {"problem.refinements",
       [](RunConfig& c, const std::string& v) {
         c.problem.refinements = to_int(v);
         if (c.problem.refinements < 0) throw ValueError{"refinements must be nonnegative", 0};
       }},
      {"problem.mesh_file", [](RunConfig& c, const std::string& v) { c.problem.mesh_file = v; }},
      {"problem.model",
       [](RunConfig& c, const std::string& v) {
         if (v != "truncated_power" && v != "constant") {
           throw ValueError{"model must be truncated_power or constant", 0};
         }
         c.problem.model = v;
       }},
      {"problem.sigma0", [](RunConfig& c, const std::string& v) { c.problem.sigma0 = positive(v); }},
      {"problem.u_star", [](RunConfig& c, const std::string& v) { c.problem.u_star = positive(v); }},
      {"problem.exponent", [](RunConfig& c, const std::string& v) { c.problem.exponent = to_double(v); }},
      {"problem.u0", [](RunConfig& c, const std::string& v) { c.problem.u0 = check_expression(v); }},
      {"problem.u1", [](RunConfig& c, const std::string& v) { c.problem.u1 = check_expression(v); }},
      {"problem.phi0", [](RunConfig& c, const std::string& v) { c.problem.phi0 = check_expression(v); }},
      {"problem.u0_file", [](RunConfig& c, const std::string& v) { c.problem.u0_file = v; }},
      {"problem.u1_file", [](RunConfig& c, const std::string& v) { c.problem.u1_file = v; }},
      {"problem.phi0_file", [](RunConfig& c, const std::string& v) { c.problem.phi0_file = v; }},
      {"problem.m_cap",
       [](RunConfig& c, const std::string& v) {
         c.problem.m_cap = to_double(v);
         if (!(c.problem.m_cap >= 0.0)) throw ValueError{"m_cap must be nonnegative", 0};
       }},
      {"problem.beta", [](RunConfig& c, const std::string& v) { c.problem.beta = check_expression(v); }},
      {"solver.tol", [](RunConfig& c, const std::string& v) { c.solver.tol = positive(v); }},
      {"solver.damping",
       [](RunConfig& c, const std::string& v) {
         c.solver.damping = to_double(v);
         if (!(c.solver.damping > 0.0 && c.solver.damping <= 1.0)) throw ValueError{"damping must lie in (0, 1]", 0};
       }},
      {"solver.max_iter",
       [](RunConfig& c, const std::string& v) {
         c.solver.max_iterations = to_int(v);
         if (c.solver.max_iterations < 1) throw ValueError{"max_iter must be at least 1", 0};
       }},
      {"solver.joule_form",
       [](RunConfig& c, const std::string& v) {
         if (v == "weak") {
           c.solver.joule_form = JouleForm::Weak;
         } else if (v == "direct") {
           c.solver.joule_form = JouleForm::Direct;
         } else {
           throw ValueError{"joule_form must be weak or direct", 0};
         }
       }},
      {"solver.truncation_level",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.solver.truncation_level.reset();
         } else {
           c.solver.truncation_level = positive(v);
         }
       }},
      {"optimizer.mode",
       [](RunConfig& c, const std::string& v) {
         const auto m = parse_optimizer_mode(v);
         if (!m) throw ValueError{"mode must be sweep or projected_gradient", 0};
         c.optimizer.mode = *m;
       }},
      {"optimizer.relaxation",
       [](RunConfig& c, const std::string& v) {
         c.optimizer.relaxation = to_double(v);
         if (!(c.optimizer.relaxation > 0.0 && c.optimizer.relaxation <= 1.0)) {
           throw ValueError{"relaxation must lie in (0, 1]", 0};
         }
       }},
      {"optimizer.tol", [](RunConfig& c, const std::string& v) { c.optimizer.tol = positive(v); }},
      {"optimizer.max_outer",
       [](RunConfig& c, const std::string& v) {
         c.optimizer.max_outer = to_int(v);
         if (c.optimizer.max_outer < 1) throw ValueError{"max_outer must be at least 1", 0};
       }},
      {"optimizer.initial_beta",
       [](RunConfig& c, const std::string& v) {
         c.optimizer.initial_beta = to_double(v);
         if (!(*c.optimizer.initial_beta >= 0.0)) throw ValueError{"initial_beta must be nonnegative", 0};
       }},
      {"certificate.eps",
       [](RunConfig& c, const std::string& v) {
         if (v == "auto") {
           c.certificate.eps.reset();
         } else {
           c.certificate.eps = positive(v);
         }
       }},
      {"certificate.c1", [](RunConfig& c, const std::string& v) { c.certificate.c1 = positive(v); }},
      {"certificate.p",
       [](RunConfig& c, const std::string& v) {
         c.certificate.p = to_double(v);
         if (!(c.certificate.p >= 2.0)) throw ValueError{"p must be at least 2", 0};
       }},
      {"verify.seed",
       [](RunConfig& c, const std::string& v) {
         const long s = to_long(v);
         if (s < 0) throw ValueError{"seed must be nonnegative", 0};
         c.verify.seed = static_cast<std::uint64_t>(s);
       }},
      {"verify.directions",
       [](RunConfig& c, const std::string& v) {
         c.verify.directions = to_int(v);
         if (c.verify.directions < 1) throw ValueError{"directions must be at least 1", 0};
       }},
      {"verify.fd_eps", [](RunConfig& c, const std::string& v) { c.verify.fd_eps = positive(v); }},
      {"verify.gradient_tol", [](RunConfig& c, const std::string& v) { c.verify.gradient_tol = positive(v); }},
      {"verify.inner_tol", [](RunConfig& c, const std::string& v) { c.verify.inner_tol = positive(v); }},
      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; }},
  };
  return table;
}

std::string at(int line, int column, const std::string& msg) {
  return "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg;
}

std::filesystem::path resolve(const RunConfig& cfg, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || cfg.base_dir.empty() ? path : cfg.base_dir / path;
}

Vector read_nodal_file(const std::filesystem::path& path, int expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open nodal data file " + path.string());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    if (token[0] == '#') {
      std::getline(in, token);
      continue;
    }
    try {
      values.push_back(to_double(token));
    } catch (const ValueError& e) {
      throw ConfigError(path.string() + ": " + e.message);
    }
  }
  if (static_cast<int>(values.size()) != expected) {
    throw ConfigError(path.string() + ": expected " + std::to_string(expected) + " nodal values, found " +
                      std::to_string(values.size()));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    const int key_col = static_cast<int>(line.find_first_not_of(" \t")) + 1;
    if (eq == std::string::npos) throw ConfigError(at(lineno, key_col, "expected 'key = value'"));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(at(lineno, key_col, "missing key"));
    const auto value_start = line.find_first_not_of(" \t", eq + 1);
    const int value_col = value_start == std::string::npos ? static_cast<int>(eq) + 2 : static_cast<int>(value_start) + 1;
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(at(lineno, key_col, "unknown key '" + key + "'"));
    if (cfg.raw.count(key)) throw ConfigError(at(lineno, key_col, "duplicate key '" + key + "'"));
    if (value.empty()) throw ConfigError(at(lineno, value_col, "missing value for '" + key + "'"));
    try {
      it->second(cfg, value);
    } catch (const ValueError& e) {
      throw ConfigError(at(lineno, value_col + e.offset, key + ": " + e.message));
    }
    cfg.raw[key] = value;
  }

  auto& p = cfg.problem;
  if (p.extents.empty()) p.extents.assign(p.dim, 1.0);
  if (p.divisions.empty()) p.divisions.assign(p.dim, 16);
  if (!p.mesh_file) {
    if (static_cast<int>(p.extents.size()) != p.dim || static_cast<int>(p.divisions.size()) != p.dim) {
      throw ConfigError("problem.extents and problem.divisions need " + std::to_string(p.dim) + " entries");
    }
    for (const auto& side : p.dirichlet_sides) {
      if (parse_box_side(side)->axis >= p.dim) throw ConfigError("dirichlet side " + side + " does not exist in " +
                                                                 std::to_string(p.dim) + "D");
    }
  }
  if (p.model == "truncated_power" && !(p.exponent >= 2.0)) throw ConfigError("problem.exponent must be at least 2");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ProblemSpec build_problem(const RunConfig& cfg) { return build_problem(cfg, 0); }

ProblemSpec build_problem(const RunConfig& cfg, int extra_refinements) {
  const auto& p = cfg.problem;
  Mesh mesh = [&] {
    if (p.mesh_file) return read_mesh_file(resolve(cfg, *p.mesh_file).string());
    TagRule rule;
    for (const auto& side : p.dirichlet_sides) rule.dirichlet_sides.insert(*parse_box_side(side));
    return build_rectangle_mesh(p.extents, p.divisions, rule);
  }();

  // Nodal files index the vertices of the unrefined mesh and follow it through refinement.
  struct Datum {
    const std::optional<std::string>* file;
    const std::string* expr;
    Vector values;
  };
  std::array<Datum, 3> data{{{&p.u0_file, &p.u0, {}}, {&p.u1_file, &p.u1, {}}, {&p.phi0_file, &p.phi0, {}}}};
  for (auto& d : data) {
    if (*d.file) d.values = read_nodal_file(resolve(cfg, **d.file), mesh.num_vertices());
  }
  for (int r = 0; r < p.refinements + extra_refinements; ++r) {
    std::vector<std::array<int, 2>> parents;
    mesh = refine_uniform(mesh, &parents);
    for (auto& d : data) {
      if (*d.file) d.values = prolongate(parents, d.values);
    }
  }
  for (auto& d : data) {
    if (*d.file) continue;
    const Expression e = Expression::parse(*d.expr);
    d.values.resize(mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v) d.values[v] = e(mesh.vertex(v));
  }

  ProblemSpec spec;
  spec.space = std::make_shared<const P1Space>(std::make_shared<const Mesh>(std::move(mesh)));
  spec.model = p.model == "constant" ? ConductivityModel::constant(p.sigma0)
                                     : ConductivityModel::truncated_power(p.sigma0, p.u_star, p.exponent);
  spec.u0 = std::move(data[0].values);
  spec.u1 = std::move(data[1].values);
  spec.phi0 = std::move(data[2].values);
  spec.m_cap = p.m_cap;
  spec.validate();
  return spec;
}

Control configured_control(const RunConfig& cfg, const ProblemSpec& spec) {
  const Mesh& mesh = spec.mesh();
  Control beta = Control::constant(mesh, 0.5 * spec.m_cap, spec.m_cap);
  if (cfg.problem.beta) {
    const Expression e = Expression::parse(*cfg.problem.beta);
    for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
      beta.values[static_cast<Eigen::Index>(k)] = e(mesh.facet_centroid(mesh.robin_facets()[k]));
    }
    if (!beta.admissible()) throw ConfigError("problem.beta is not admissible: values must lie in [0, m_cap]");
  }
  return beta;
}

}  // namespace thermopt
