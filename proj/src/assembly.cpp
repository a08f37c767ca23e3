#include "thermopt/assembly.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>

namespace thermopt {

namespace {

using Grad = std::array<double, 3>;

double dot(const Grad& a, const Grad& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

QuadratureRule make_rule(int dim) {
  QuadratureRule rule;
  if (dim == 2) {
    rule.points = {{0.5, 0.5, 0.0, 0.0}, {0.0, 0.5, 0.5, 0.0}, {0.5, 0.0, 0.5, 0.0}};
    rule.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  } else {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    rule.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
    rule.weights = {0.25, 0.25, 0.25, 0.25};
  }
  return rule;
}

// Evaluates sigma at a quadrature value of u, counting clamped negative arguments.
double eval_sigma(const ConductivityModel& model, double u, AssemblyStats* stats) {
  if (u < 0.0 && stats) ++stats->sigma_clamp_count;
  return model.sigma(u);
}

SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& t) {
  SparseMatrix m(rows, cols);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

// Weighted stiffness with a weight given per (cell, quadrature point).
template <class Weight>
SparseMatrix weighted_stiffness(const P1Space& space, Weight&& weight) {
  const int nv = space.dim() + 1;
  const auto& rule = cell_quadrature(space.dim());
  std::vector<Triplet> t;
  t.reserve(space.mesh().num_cells() * nv * nv);
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& g = space.geometry(c);
    double w = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double wq = weight(c, rule.points[q]);
      if (wq < 0.0 || !std::isfinite(wq)) {
        throw AssemblyError("negative or non-finite stiffness weight in cell " + std::to_string(c));
      }
      w += rule.weights[q] * wq;
    }
    const auto& cell = space.mesh().cells()[c];
    for (int i = 0; i < nv; ++i) {
      for (int j = 0; j < nv; ++j) {
        t.emplace_back(cell[i], cell[j], w * g.volume * dot(g.grad[i], g.grad[j]));
      }
    }
  }
  return from_triplets(space.num_dofs(), space.num_dofs(), t);
}

}  // namespace

const QuadratureRule& cell_quadrature(int dim) {
  static const QuadratureRule rule2 = make_rule(2);
  static const QuadratureRule rule3 = make_rule(3);
  return dim == 2 ? rule2 : rule3;
}

P1Space::P1Space(std::shared_ptr<const Mesh> mesh) : mesh_(std::move(mesh)) {
  const int d = mesh_->dim();
  const int n = mesh_->num_vertices();
  geometry_.resize(mesh_->num_cells());
  basis_integrals_ = Vector::Zero(n);
  std::vector<Triplet> mt, st;
  for (int c = 0; c < mesh_->num_cells(); ++c) {
    const auto& cell = mesh_->cells()[c];
    Eigen::Matrix3d jac = Eigen::Matrix3d::Identity();
    for (int k = 0; k < d; ++k) {
      for (int a = 0; a < d; ++a) jac(a, k) = mesh_->vertex(cell[k + 1])[a] - mesh_->vertex(cell[0])[a];
    }
    const Eigen::Matrix3d inv = jac.inverse();
    auto& g = geometry_[c];
    g.volume = mesh_->cell_volume(c);
    g.grad[0] = {0, 0, 0};
    for (int k = 1; k <= d; ++k) {
      for (int a = 0; a < d; ++a) {
        g.grad[k][a] = inv(k - 1, a);
        g.grad[0][a] -= inv(k - 1, a);
      }
    }
    for (int i = 0; i <= d; ++i) {
      basis_integrals_[cell[i]] += g.volume / (d + 1);
      for (int j = 0; j <= d; ++j) {
        mt.emplace_back(cell[i], cell[j], g.volume * (i == j ? 2.0 : 1.0) / ((d + 1) * (d + 2)));
        st.emplace_back(cell[i], cell[j], g.volume * dot(g.grad[i], g.grad[j]));
      }
    }
  }
  mass_ = from_triplets(n, n, mt);
  stiffness_ = from_triplets(n, n, st);
  dirichlet_mask_.resize(n);
  boundary_mask_.resize(n);
  for (int v = 0; v < n; ++v) {
    dirichlet_mask_[v] = mesh_->is_dirichlet_vertex(v);
    boundary_mask_[v] = mesh_->is_boundary_vertex(v);
  }
}

std::array<double, 3> P1Space::cell_gradient(int cell, const Vector& values) const {
  const auto& g = geometry_[cell];
  const auto& vs = mesh_->cells()[cell];
  // Differences against vertex 0 make the gradient of a constant exactly zero.
  Grad out{0, 0, 0};
  const double v0 = values[vs[0]];
  for (int i = 1; i <= dim(); ++i) {
    const double dv = values[vs[i]] - v0;
    for (int a = 0; a < 3; ++a) out[a] += dv * g.grad[i][a];
  }
  return out;
}

double P1Space::value_at(int cell, const std::array<double, 4>& bary, const Vector& values) const {
  const auto& vs = mesh_->cells()[cell];
  double s = 0.0;
  for (int i = 0; i <= dim(); ++i) s += bary[i] * values[vs[i]];
  return s;
}

Vector interpolate(const P1Space& space, const std::function<double(const Point&)>& f) {
  Vector out(space.num_dofs());
  for (int v = 0; v < space.num_dofs(); ++v) out[v] = f(space.mesh().vertex(v));
  return out;
}

SparseMatrix assemble_weighted_stiffness(const P1Space& space, double weight) {
  return weighted_stiffness(space, [weight](int, const std::array<double, 4>&) { return weight; });
}

SparseMatrix assemble_weighted_stiffness(const P1Space& space, const ConductivityModel& model, const Vector& u,
                                         AssemblyStats* stats) {
  return weighted_stiffness(space, [&](int c, const std::array<double, 4>& bary) {
    return eval_sigma(model, space.value_at(c, bary, u), stats);
  });
}

namespace {

template <class Weight>
Vector weighted_stiffness_action(const P1Space& space, const Vector& field, Weight&& weight) {
  const auto& rule = cell_quadrature(space.dim());
  Vector out = Vector::Zero(space.num_dofs());
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const Grad gf = space.cell_gradient(c, field);
    if (gf[0] == 0.0 && gf[1] == 0.0 && gf[2] == 0.0) continue;
    double w = 0.0;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) w += rule.weights[q] * weight(c, rule.points[q]);
    const auto& g = space.geometry(c);
    const auto& cell = space.mesh().cells()[c];
    for (int i = 0; i <= space.dim(); ++i) out[cell[i]] += w * g.volume * dot(gf, g.grad[i]);
  }
  return out;
}

}  // namespace

Vector apply_stiffness(const P1Space& space, const Vector& field) {
  return weighted_stiffness_action(space, field, [](int, const std::array<double, 4>&) { return 1.0; });
}

Vector apply_weighted_stiffness(const P1Space& space, const ConductivityModel& model, const Vector& u,
                                const Vector& field, AssemblyStats* stats) {
  return weighted_stiffness_action(space, field, [&](int c, const std::array<double, 4>& bary) {
    return eval_sigma(model, space.value_at(c, bary, u), stats);
  });
}

double facet_mass_entry(int dim, double measure, bool diagonal) {
  return measure * (diagonal ? 2.0 : 1.0) / (dim * (dim + 1));
}

double facet_product_integral(const Mesh& mesh, int facet, const Vector& w, const Vector& q) {
  const int d = mesh.dim();
  const auto& v = mesh.facets()[facet].vertices;
  const double meas = mesh.facet_measure(facet);
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) s += facet_mass_entry(d, meas, i == j) * w[v[i]] * q[v[j]];
  }
  return s;
}

RobinTerms assemble_robin(const P1Space& space, const Control& beta, const Vector& u1) {
  const Mesh& mesh = space.mesh();
  if (beta.size() != static_cast<int>(mesh.robin_facets().size())) {
    throw DomainError("control size does not match the number of Robin facets");
  }
  beta.require_admissible();
  const int d = mesh.dim();
  std::vector<Triplet> t;
  Vector rhs = Vector::Zero(space.num_dofs());
  for (std::size_t k = 0; k < mesh.robin_facets().size(); ++k) {
    const int f = mesh.robin_facets()[k];
    const double b = beta.values[static_cast<Eigen::Index>(k)];
    if (b == 0.0) continue;
    const auto& v = mesh.facets()[f].vertices;
    const double meas = mesh.facet_measure(f);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        const double m = b * facet_mass_entry(d, meas, i == j);
        t.emplace_back(v[i], v[j], m);
        rhs[v[i]] += m * u1[v[j]];
      }
    }
  }
  return {from_triplets(space.num_dofs(), space.num_dofs(), t), rhs};
}

Vector assemble_joule_rhs_direct(const P1Space& space, const ConductivityModel& model, const Vector& u,
                                 const Vector& phi, AssemblyStats* stats) {
  const auto& rule = cell_quadrature(space.dim());
  const int nv = space.dim() + 1;
  Vector b = Vector::Zero(space.num_dofs());
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& g = space.geometry(c);
    const auto& cell = space.mesh().cells()[c];
    const Grad gp = space.cell_gradient(c, phi);
    const double grad_sq = dot(gp, gp);
    if (grad_sq == 0.0) continue;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const double s = eval_sigma(model, space.value_at(c, rule.points[q], u), stats);
      const double w = rule.weights[q] * g.volume * s * grad_sq;
      for (int i = 0; i < nv; ++i) b[cell[i]] += w * rule.points[q][i];
    }
  }
  return b;
}

Vector assemble_joule_rhs_weak(const P1Space& space, const ConductivityModel& model, const Vector& u,
                               const Vector& phi, const Vector& phi0, AssemblyStats* stats) {
  const auto& rule = cell_quadrature(space.dim());
  const int nv = space.dim() + 1;
  Vector b = Vector::Zero(space.num_dofs());
  const Vector diff = phi0 - phi;
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& g = space.geometry(c);
    const auto& cell = space.mesh().cells()[c];
    const Grad gp = space.cell_gradient(c, phi);
    if (dot(gp, gp) == 0.0) continue;
    const Grad gp0 = space.cell_gradient(c, phi0);
    const double cross = dot(gp, gp0);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& bary = rule.points[q];
      const double s = eval_sigma(model, space.value_at(c, bary, u), stats);
      const double d = space.value_at(c, bary, diff);
      const double w = rule.weights[q] * g.volume * s;
      for (int i = 0; i < nv; ++i) {
        b[cell[i]] += w * (d * dot(gp, g.grad[i]) + cross * bary[i]);
      }
    }
  }
  return b;
}

LinearSystem apply_dirichlet(const Mesh& mesh, LinearSystem system, const std::vector<DirichletValue>& bc) {
  const auto n = system.matrix.rows();
  std::vector<char> fixed(n, 0);
  Vector value = Vector::Zero(n);
  for (const auto& c : bc) {
    if (c.dof < 0 || c.dof >= n) throw AssemblyError("Dirichlet constraint on a missing dof");
    if (c.dof < mesh.num_vertices() && !mesh.is_boundary_vertex(c.dof)) {
      throw AssemblyError("Dirichlet constraint on interior vertex " + std::to_string(c.dof));
    }
    fixed[c.dof] = 1;
    value[c.dof] = c.value;
  }
  std::vector<Triplet> t;
  t.reserve(system.matrix.nonZeros());
  for (int col = 0; col < system.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(system.matrix, col); it; ++it) {
      const auto row = it.row();
      if (fixed[col] && !fixed[row]) system.rhs[row] -= it.value() * value[col];
      if (!fixed[col] && !fixed[row]) t.emplace_back(row, col, it.value());
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (fixed[i]) {
      t.emplace_back(i, i, 1.0);
      system.rhs[i] = value[i];
    }
  }
  system.matrix = from_triplets(static_cast<int>(n), static_cast<int>(n), t);
  for (const auto& c : bc) system.constraints.push_back(c);
  return system;
}

namespace {

template <class Solver>
Vector checked_solve(const Solver& solver, const SparseMatrix& a, const Vector& b, const char* what) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) return Vector::Zero(b.size());
  Vector x = solver.solve(b);
  // A couple of refinement sweeps recover digits lost to pivoting on stiff systems.
  for (int sweep = 0; sweep < 3; ++sweep) {
    const Vector r = b - a * x;
    if (!(r.norm() > 1e-10 * bnorm)) break;
    x += solver.solve(r);
  }
  const double rel = (b - a * x).norm() / bnorm;
  if (!(rel <= 1e-10)) {
    throw SolverError(std::string(what) + ": relative residual " + std::to_string(rel) + " exceeds 1e-10");
  }
  return x;
}

}  // namespace

Vector solve_spd(const LinearSystem& system) {
  Eigen::SimplicialLDLT<SparseMatrix> solver(system.matrix);
  if (solver.info() != Eigen::Success) throw SolverError("solve_spd: factorization failed (matrix not SPD?)");
  return checked_solve(solver, system.matrix, system.rhs, "solve_spd");
}

Vector solve_general(const SparseMatrix& matrix, const Vector& rhs) {
  Eigen::SparseLU<SparseMatrix> solver;
  solver.analyzePattern(matrix);
  solver.factorize(matrix);
  if (solver.info() != Eigen::Success) {
    throw SolverError("solve_general: LU factorization failed (singular system): " + solver.lastErrorMessage());
  }
  return checked_solve(solver, matrix, rhs, "solve_general");
}

Norms norms(const P1Space& space, const Vector& field) {
  Norms n;
  n.l2 = std::sqrt(std::max(0.0, field.dot(space.mass() * field)));
  n.h1_semi = std::sqrt(std::max(0.0, field.dot(space.stiffness() * field)));
  n.h1 = std::hypot(n.l2, n.h1_semi);
  n.linf = field.size() ? field.cwiseAbs().maxCoeff() : 0.0;
  return n;
}

double boundary_l2(const P1Space& space, const Vector& field, BoundaryTag tag) {
  double s = 0.0;
  for (int f = 0; f < space.mesh().num_facets(); ++f) {
    if (space.mesh().facets()[f].tag == tag) s += facet_product_integral(space.mesh(), f, field, field);
  }
  return std::sqrt(std::max(0.0, s));
}

double max_gradient(const P1Space& space, const Vector& field) {
  double m = 0.0;
  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const Grad g = space.cell_gradient(c, field);
    m = std::max(m, std::sqrt(dot(g, g)));
  }
  return m;
}

DualNorm::DualNorm(const P1Space& space, const std::vector<char>& constrained) : constrained_(constrained) {
  std::vector<DirichletValue> bc;
  for (int i = 0; i < space.num_dofs(); ++i) {
    if (constrained_[i]) bc.push_back({i, 0.0});
  }
  LinearSystem sys{space.stiffness() + space.mass(), Vector::Zero(space.num_dofs()), {}};
  sys = apply_dirichlet(space.mesh(), std::move(sys), bc);
  solver_.compute(sys.matrix);
  if (solver_.info() != Eigen::Success) throw SolverError("DualNorm: factorization failed");
}

double DualNorm::operator()(Vector residual) const {
  for (Eigen::Index i = 0; i < residual.size(); ++i) {
    if (constrained_[i]) residual[i] = 0.0;
  }
  const Vector z = solver_.solve(residual);
  return std::sqrt(std::max(0.0, residual.dot(z)));
}

StateResidual state_residual(const P1Space& space, const StateData& data, const Vector& u, const Vector& phi) {
  const auto& model = *data.model;
  const RobinTerms robin = assemble_robin(space, *data.beta, *data.u1);
  Vector joule = data.form == JouleForm::Weak ? assemble_joule_rhs_weak(space, model, u, phi, *data.phi0)
                                              : assemble_joule_rhs_direct(space, model, u, phi);
  StateResidual r;
  r.r_u = space.stiffness() * u + robin.matrix * u - robin.rhs - joule;
  r.r_phi = assemble_weighted_stiffness(space, model, u) * phi;
  for (int i = 0; i < space.num_dofs(); ++i) {
    if (space.dirichlet_mask()[i]) r.r_u[i] = 0.0;
    if (space.boundary_mask()[i]) r.r_phi[i] = 0.0;
  }
  return r;
}

SparseMatrix assemble_state_jacobian(const P1Space& space, const StateData& data, const Vector& u,
                                     const Vector& phi) {
  const auto& model = *data.model;
  const auto& rule = cell_quadrature(space.dim());
  const int n = space.num_dofs();
  const int nv = space.dim() + 1;
  const auto& umask = space.dirichlet_mask();
  const auto& pmask = space.boundary_mask();
  const Vector phi0_minus_phi = *data.phi0 - phi;

  std::vector<Triplet> t;
  auto add = [&](int row, int col, double v) {
    const bool row_fixed = row < n ? umask[row] : pmask[row - n];
    const bool col_fixed = col < n ? umask[col] : pmask[col - n];
    if (!row_fixed && !col_fixed && v != 0.0) t.emplace_back(row, col, v);
  };

  for (int c = 0; c < space.mesh().num_cells(); ++c) {
    const auto& g = space.geometry(c);
    const auto& cell = space.mesh().cells()[c];
    const Grad gp = space.cell_gradient(c, phi);
    const Grad gp0 = space.cell_gradient(c, *data.phi0);
    const double cross = dot(gp, gp0);
    const double grad_sq = dot(gp, gp);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto& lam = rule.points[q];
      const double uq = space.value_at(c, lam, u);
      const double s = model.sigma(uq);
      const double ds = model.sigma_prime(uq);
      const double w = rule.weights[q] * g.volume;
      const double d = space.value_at(c, lam, phi0_minus_phi);
      for (int i = 0; i < nv; ++i) {
        const double gpi = dot(gp, g.grad[i]);
        for (int k = 0; k < nv; ++k) {
          const double gik = dot(g.grad[i], g.grad[k]);
          // d r_u / d u (the Laplacian part comes from the cached stiffness below)
          double duu, dup;
          if (data.form == JouleForm::Weak) {
            duu = -(d * ds * lam[k] * gpi + ds * lam[k] * cross * lam[i]);
            dup = -(-lam[k] * s * gpi + d * s * gik + s * dot(g.grad[k], gp0) * lam[i]);
          } else {
            duu = -ds * lam[k] * grad_sq * lam[i];
            dup = -2.0 * s * dot(gp, g.grad[k]) * lam[i];
          }
          add(cell[i], cell[k], w * duu);
          add(cell[i], n + cell[k], w * dup);
          add(n + cell[i], cell[k], w * ds * lam[k] * gpi);
          add(n + cell[i], n + cell[k], w * s * gik);
        }
      }
    }
  }
  for (int col = 0; col < space.stiffness().outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(space.stiffness(), col); it; ++it) {
      add(static_cast<int>(it.row()), col, it.value());
    }
  }
  const RobinTerms robin = assemble_robin(space, *data.beta, *data.u1);
  for (int col = 0; col < robin.matrix.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(robin.matrix, col); it; ++it) {
      add(static_cast<int>(it.row()), col, it.value());
    }
  }
  for (int i = 0; i < n; ++i) {
    if (umask[i]) t.emplace_back(i, i, 1.0);
    if (pmask[i]) t.emplace_back(n + i, n + i, 1.0);
  }
  return from_triplets(2 * n, 2 * n, t);
}

}  // namespace thermopt
