#include "bifluid/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "bifluid/errors.hpp"

namespace bifluid {

void SimConfig::validate() const {
  closure.validate();
  reg.validate(closure);
  if (!(mu > 0.0)) throw ValidationError("viscosity hypothesis violated: μ > 0");
  if (!(2.0 * mu + 3.0 * lambda >= 0.0))
    throw ValidationError("viscosity hypothesis violated: 2μ+3λ ≥ 0");
  if (!(nu > 0.0)) throw ValidationError("resistivity hypothesis violated: ν > 0");
  if (!(epsilon >= 0.0)) throw ValidationError("artificial viscosity requires ε ≥ 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("time step requires dt > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("horizon requires t_end ≥ 0");
  if (!(sigma >= 0.0)) throw ValidationError("energy weight requires Σ ≥ 0");
  if (modes < 1) throw ValidationError("Galerkin space needs k ≥ 1 modes");
  const long resolvable = static_cast<long>(grid.cells(0) - 1) *
                          (grid.dim() == 2 ? grid.cells(1) - 1 : 1);
  if (modes > resolvable)
    throw ValidationError(std::to_string(modes) + " modes exceed the Nyquist limit " +
                          std::to_string(resolvable) + " of the grid");
}

VectorField magnetic_field(const SimState& state) {
  const Grid& g = state.magnetic.grid;
  if (g.dim() == 2) return curl(state.magnetic);
  VectorField h(g, Boundary::Dirichlet);
  h.comp[1] = state.magnetic.values;
  return h;
}

// Factorization of W (I - coef L) for the grid Laplacian L with the given
// boundary condition; W holds the trapezoid weights, which makes the matrix
// symmetric positive definite.
class ImplicitOperator {
 public:
  ImplicitOperator(const Grid& grid, Boundary bc, double coef)
      : grid_(grid), bc_(bc), size_(static_cast<Eigen::Index>(grid.size())) {
    std::vector<Eigen::Triplet<double>> trip;
    const auto& w = grid.weights();
    const int nx = grid.nodes(0);
    const int ny = grid.nodes(1);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const auto id = static_cast<Eigen::Index>(grid.index(i, j));
        if (bc == Boundary::Dirichlet && grid.on_boundary(id)) {
          trip.emplace_back(id, id, 1.0);
          continue;
        }
        trip.emplace_back(id, id, w[id]);
        for (int a = 0; a < grid.dim(); ++a) {
          const int n = grid.nodes(a);
          const int p = a == 0 ? i : j;
          const double c = coef * w[id] / (grid.spacing(a) * grid.spacing(a));
          auto nb = [&](int q) {
            return static_cast<Eigen::Index>(a == 0 ? grid.index(q, j) : grid.index(i, q));
          };
          auto add = [&](int q, double v) {
            const auto col = nb(q);
            if (bc == Boundary::Dirichlet && grid.on_boundary(col)) return;
            trip.emplace_back(id, col, v);
          };
          if (p == 0) {
            trip.emplace_back(id, id, 2.0 * c);
            add(1, -2.0 * c);
          } else if (p == n - 1) {
            trip.emplace_back(id, id, 2.0 * c);
            add(n - 2, -2.0 * c);
          } else {
            trip.emplace_back(id, id, 2.0 * c);
            add(p - 1, -c);
            add(p + 1, -c);
          }
        }
      }
    Eigen::SparseMatrix<double> m(size_, size_);
    m.setFromTriplets(trip.begin(), trip.end());
    solver_.compute(m);
    if (solver_.info() != Eigen::Success)
      throw NumericError("implicit diffusion operator is not positive definite");
  }

  void solve(std::vector<double>& f) const {
    Eigen::VectorXd rhs(size_);
    const auto& w = grid_.weights();
    for (Eigen::Index i = 0; i < size_; ++i) {
      const bool pinned = bc_ == Boundary::Dirichlet && grid_.on_boundary(i);
      rhs[i] = pinned ? 0.0 : w[i] * f[i];
    }
    const Eigen::VectorXd x = solver_.solve(rhs);
    for (Eigen::Index i = 0; i < size_; ++i) f[i] = x[i];
  }

 private:
  Grid grid_;
  Boundary bc_;
  Eigen::Index size_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

namespace {

const SimConfig& validated(const SimConfig& c) {
  c.validate();
  return c;
}

}  // namespace

Simulation::Simulation(SimConfig config)
    : config_(std::move(config)), basis_(validated(config_).grid, config_.modes) {}

Simulation::~Simulation() = default;
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;

const ImplicitOperator& Simulation::implicit(Boundary bc, double coef) const {
  const auto key = std::make_pair(static_cast<int>(bc), coef);
  auto it = cache_.find(key);
  if (it == cache_.end())
    it = cache_.emplace(key, std::make_unique<ImplicitOperator>(config_.grid, bc, coef)).first;
  return *it->second;
}

SimState Simulation::initial_state(const InitialData& data) const {
  const Grid& g = config_.grid;
  if (!(data.rho0.grid == g) || !(data.n0.grid == g) || !(data.m0.grid == g) ||
      !(data.magnetic0.grid == g))
    throw DomainError("initial data does not live on the configured grid");
  SimState s;
  s.rho = data.rho0;
  s.rho.bc = Boundary::Neumann;
  s.n = data.n0;
  s.n.bc = Boundary::Neumann;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (s.rho[i] < 0.0 || s.n[i] < 0.0 || !std::isfinite(s.rho[i]) || !std::isfinite(s.n[i]))
      throw DomainError("initial densities must be finite and non-negative");
  VectorField u(g, Boundary::Dirichlet);
  for (int a = 0; a < g.dim(); ++a)
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = s.rho[i] + s.n[i];
      u.comp[a][i] = (r > 0.0 && !g.on_boundary(i)) ? data.m0.comp[a][i] / r : 0.0;
    }
  s.u_coeffs = basis_.project_vector(u);
  s.magnetic = data.magnetic0;
  s.magnetic.bc = Boundary::Dirichlet;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.on_boundary(i)) s.magnetic[i] = 0.0;
  return s;
}

double Simulation::max_stable_dt(const SimState& state) const {
  const Grid& g = config_.grid;
  const VectorField u = basis_.reconstruct_vector(state.u_coeffs);
  double rate = 0.0;
  for (int a = 0; a < g.dim(); ++a) {
    double m = 0.0;
    for (double v : u.comp[a]) m = std::max(m, std::abs(v));
    rate += m / g.spacing(a);
  }
  return rate > 0.0 ? 0.5 / rate : std::numeric_limits<double>::infinity();
}

void Simulation::check_cfl(const SimState& state, double dt) const {
  const double limit = max_stable_dt(state);
  if (dt > limit) {
    std::ostringstream msg;
    msg << "time step " << dt << " violates the transport CFL bound " << limit;
    throw CflError(msg.str(), 0.9 * limit);
  }
}

namespace {

void add_source(std::vector<double>& f, const Grid& g, double dt, double t,
                const std::function<double(double, double, double)>& src, bool dirichlet) {
  if (!src) return;
  const int nx = g.nodes(0);
  const int ny = g.nodes(1);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto id = g.index(i, j);
      if (dirichlet && g.on_boundary(id)) continue;
      f[id] += dt * src(t, g.coord(0, i), g.dim() == 2 ? g.coord(1, j) : 0.0);
    }
}

// Explicit upwind transport on node control volumes; wall fluxes vanish.
void upwind_transport(std::vector<double>& f, const VectorField& u, double dt) {
  const Grid& g = u.grid;
  const auto& w = g.weights();
  const int nx = g.nodes(0);
  const int ny = g.nodes(1);
  std::vector<double> change(f.size(), 0.0);
  for (int a = 0; a < g.dim(); ++a) {
    const int n = g.nodes(a);
    // Transverse face length: weight of the node divided by its axis weight.
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int p = a == 0 ? i : j;
        if (p == n - 1) continue;
        const auto l = g.index(i, j);
        const auto r = a == 0 ? g.index(i + 1, j) : g.index(i, j + 1);
        const double uf = 0.5 * (u.comp[a][l] + u.comp[a][r]);
        const double flux = std::max(uf, 0.0) * f[l] + std::min(uf, 0.0) * f[r];
        const double axis_w_l = (p == 0 ? 0.5 : 1.0) * g.spacing(a);
        const double cross = w[l] / axis_w_l;
        change[l] -= dt * flux * cross;
        change[r] += dt * flux * cross;
      }
  }
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += change[i] / w[i];
}

}  // namespace

void Simulation::step_continuity(SimState& state, double dt) const {
  const Grid& g = config_.grid;
  const VectorField u = basis_.reconstruct_vector(state.u_coeffs);
  const double t1 = state.time + dt;
  for (auto* field : {&state.rho, &state.n}) {
    upwind_transport(field->values, u, dt);
    add_source(field->values, g, dt, t1, field == &state.rho ? forcing_.rho : forcing_.n,
               false);
    if (config_.epsilon > 0.0)
      implicit(Boundary::Neumann, config_.epsilon * dt).solve(field->values);
  }
}

void Simulation::step_induction(SimState& state, double dt) const {
  const Grid& g = config_.grid;
  const VectorField u = basis_.reconstruct_vector(state.u_coeffs);
  std::vector<double>& a = state.magnetic.values;
  std::vector<double> next = a;
  if (g.dim() == 1) {
    // Conservative centered advection of the transverse component.
    const int nx = g.nodes(0);
    const double h = g.spacing(0);
    for (int i = 1; i < nx - 1; ++i)
      next[i] -= dt * (u.comp[0][i + 1] * a[i + 1] - u.comp[0][i - 1] * a[i - 1]) / (2.0 * h);
  } else {
    const auto ax = difference(g, a, 0);
    const auto ay = difference(g, a, 1);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!g.on_boundary(i)) next[i] -= dt * (u.comp[0][i] * ax[i] + u.comp[1][i] * ay[i]);
  }
  add_source(next, g, dt, state.time + dt, forcing_.magnetic, true);
  implicit(Boundary::Dirichlet, config_.nu * dt).solve(next);
  a = std::move(next);
}

void Simulation::step_momentum(SimState& state, const ScalarField& rho_old,
                               const ScalarField& n_old, double dt) const {
  const Grid& g = config_.grid;
  const int k = basis_.modes();
  const int dim = g.dim();
  const int size = basis_.velocity_size();
  const auto& w = g.weights();
  const std::size_t np = g.size();
  const double t1 = state.time + dt;

  std::vector<double> r_old(np), r_new(np), pi(np);
  double total = 0.0;
  for (std::size_t i = 0; i < np; ++i) {
    r_old[i] = rho_old[i] + n_old[i];
    r_new[i] = state.rho[i] + state.n[i];
    total += w[i] * r_new[i];
    pi[i] = artificial_pressure(state.rho[i], state.n[i], config_.closure, config_.reg);
  }
  if (!(total > 0.0)) throw NumericError("momentum mass matrix is singular (vacuum everywhere)");

  const VectorField u = basis_.reconstruct_vector(state.u_coeffs);
  const VectorField h = magnetic_field(state);

  // Lorentz force (curl H) x H; in 1D only its longitudinal part acts.
  std::array<std::vector<double>, 2> lorentz{std::vector<double>(np, 0.0),
                                             std::vector<double>(np, 0.0)};
  std::vector<double> magnetic_pressure(np, 0.0);
  if (dim == 1) {
    for (std::size_t i = 0; i < np; ++i) magnetic_pressure[i] = 0.5 * h.comp[1][i] * h.comp[1][i];
  } else {
    const ScalarField j = curl(h);
    for (std::size_t i = 0; i < np; ++i) {
      lorentz[0][i] = -j[i] * h.comp[1][i];
      lorentz[1][i] = j[i] * h.comp[0][i];
    }
  }

  std::array<std::vector<double>, 2> grad_r{std::vector<double>(np, 0.0),
                                            std::vector<double>(np, 0.0)};
  std::array<std::array<std::vector<double>, 2>, 2> du;
  const bool eps_term = config_.epsilon > 0.0;
  if (eps_term) {
    ScalarField rf(g, Boundary::Neumann);
    rf.values = r_new;
    const VectorField gr = gradient(rf);
    grad_r = gr.comp;
    for (int c = 0; c < dim; ++c)
      for (int a = 0; a < dim; ++a) du[c][a] = basis_.velocity_derivative(state.u_coeffs, c, a);
  }

  std::array<std::vector<double>, 2> source{std::vector<double>(np, 0.0),
                                            std::vector<double>(np, 0.0)};
  if (forcing_.momentum)
    for (std::size_t id = 0; id < np; ++id) {
      const int i = static_cast<int>(id % g.nodes(0));
      const int jj = static_cast<int>(id / g.nodes(0));
      const auto s = forcing_.momentum(t1, g.coord(0, i), dim == 2 ? g.coord(1, jj) : 0.0);
      source[0][id] = s[0];
      source[1][id] = s[1];
    }

  // Pointwise integrands tested against phi_j (value) and d_a phi_j.
  std::array<std::vector<double>, 2> val_part, old_momentum;
  std::array<std::array<std::vector<double>, 2>, 2> grad_part;
  for (int c = 0; c < dim; ++c) {
    val_part[c].assign(np, 0.0);
    old_momentum[c].assign(np, 0.0);
    for (int a = 0; a < dim; ++a) grad_part[c][a].assign(np, 0.0);
    for (std::size_t i = 0; i < np; ++i) {
      old_momentum[c][i] = w[i] * r_old[i] * u.comp[c][i];
      double v = lorentz[c][i] + source[c][i];
      if (eps_term) {
        double dot = 0.0;
        for (int a = 0; a < dim; ++a) dot += grad_r[a][i] * du[c][a][i];
        v -= config_.epsilon * dot;
      }
      val_part[c][i] = w[i] * v;
      for (int a = 0; a < dim; ++a) {
        double gp = r_old[i] * u.comp[c][i] * u.comp[a][i];
        if (a == c) gp += pi[i] + magnetic_pressure[i];
        grad_part[c][a][i] = w[i] * gp;
      }
    }
  }

  Eigen::VectorXd rhs(size);
  for (int c = 0; c < dim; ++c)
    for (int j = 0; j < k; ++j) {
      const auto& phi = basis_.values(j);
      double m = 0.0, f = 0.0;
      for (std::size_t i = 0; i < np; ++i) {
        m += old_momentum[c][i] * phi[i];
        f += val_part[c][i] * phi[i];
      }
      for (int a = 0; a < dim; ++a) {
        const auto& dphi = basis_.derivative(j, a);
        for (std::size_t i = 0; i < np; ++i) f += grad_part[c][a][i] * dphi[i];
      }
      rhs[c * k + j] = m + dt * f;
    }

  Eigen::MatrixXd mass = Eigen::MatrixXd::Zero(k, k);
  std::vector<double> wr(np);
  for (std::size_t i = 0; i < np; ++i) wr[i] = w[i] * r_new[i];
  for (int j = 0; j < k; ++j)
    for (int l = j; l < k; ++l) {
      const auto& a = basis_.values(j);
      const auto& b = basis_.values(l);
      double s = 0.0;
      for (std::size_t i = 0; i < np; ++i) s += wr[i] * a[i] * b[i];
      mass(j, l) = s;
      mass(l, j) = s;
    }

  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(size, size);
  for (int c = 0; c < dim; ++c) sys.block(c * k, c * k, k, k) = mass;
  if (dim == 1) {
    for (int j = 0; j < k; ++j)
      sys(j, j) += dt * (2.0 * config_.mu + config_.lambda) * basis_.eigenvalue(j);
  } else {
    for (int c = 0; c < dim; ++c)
      for (int j = 0; j < k; ++j) sys(c * k + j, c * k + j) += dt * config_.mu * basis_.eigenvalue(j);
    const double bulk = config_.mu + config_.lambda;
    for (int c = 0; c < dim; ++c)
      for (int j = 0; j < k; ++j)
        for (int d = 0; d < dim; ++d)
          for (int l = 0; l < k; ++l) {
            const auto& a = basis_.derivative(j, c);
            const auto& b = basis_.derivative(l, d);
            double s = 0.0;
            for (std::size_t i = 0; i < np; ++i) s += w[i] * a[i] * b[i];
            sys(c * k + j, d * k + l) += dt * bulk * s;
          }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(sys);
  if (llt.info() != Eigen::Success) {
    sys += 1e-14 * Eigen::MatrixXd::Identity(size, size);
    llt.compute(sys);
    state.mass_matrix_regularized = true;
    if (llt.info() != Eigen::Success) throw NumericError("momentum system is singular");
  }
  const Eigen::VectorXd a = llt.solve(rhs);
  for (int i = 0; i < size; ++i) state.u_coeffs[i] = a[i];
}

EnergyLedger Simulation::step(SimState& state, double dt) const {
  check_cfl(state, dt);
  SimState next = state;
  const ScalarField rho_old = state.rho;
  const ScalarField n_old = state.n;
  step_continuity(next, dt);
  step_induction(next, dt);
  step_momentum(next, rho_old, n_old, dt);
  next.time = state.time + dt;
  next.steps = state.steps + 1;

  EnergyLedger ledger = energy_ledger(next, config_, basis_);
  next.dissipation_integral += dt * ledger.dissipation_rate;
  next.eps_dissipation_integral += dt * ledger.eps_dissipation;
  next.eps_weighted_integral += dt * ledger.eps_dissipation_weighted;
  ledger.dissipation_integral = next.dissipation_integral;
  ledger.eps_dissipation_integral = next.eps_dissipation_integral;
  ledger.eps_weighted_integral = next.eps_weighted_integral;
  state = std::move(next);
  return ledger;
}

void Simulation::advance(
    SimState& state, double t_end,
    const std::function<void(const SimState&, const EnergyLedger&)>& on_step) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t_end));
  std::function<void(double, int)> run = [&](double h, int depth) {
    try {
      const EnergyLedger l = step(state, h);
      if (on_step) on_step(state, l);
    } catch (const CflError& e) {
      if (depth > 40) throw;
      const int m = static_cast<int>(std::ceil(h / e.suggested_dt()));
      for (int i = 0; i < std::max(m, 2); ++i) run(h / std::max(m, 2), depth + 1);
    }
  };
  // A remainder within tol of dt is taken as a full step.
  while (t_end - state.time > tol) {
    const double left = t_end - state.time;
    run(left >= config_.dt - tol ? config_.dt : left, 0);
  }
}

double ratio_bound(const ScalarField& rho, const ScalarField& n) {
  double c = 1.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const double a = rho[i];
    const double b = n[i];
    if (a == 0.0 && b == 0.0) continue;
    if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
    c = std::max({c, a / b, b / a});
  }
  return c;
}

namespace {

// Separable compactly supported smoothing of nodal data, renormalized at walls.
std::vector<double> mollify(const Grid& g, const std::vector<double>& f, double radius) {
  std::vector<double> out = f;
  for (int a = 0; a < g.dim(); ++a) {
    const int r = static_cast<int>(std::floor(radius / g.spacing(a)));
    if (r < 1) continue;
    std::vector<double> kernel(2 * r + 1);
    for (int q = -r; q <= r; ++q) {
      const double x = q * g.spacing(a) / radius;
      kernel[q + r] = std::abs(x) < 1.0 ? std::exp(-1.0 / (1.0 - x * x)) : 0.0;
    }
    std::vector<double> src = out;
    const int nx = g.nodes(0);
    const int ny = g.nodes(1);
    const int n = g.nodes(a);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int p = a == 0 ? i : j;
        double s = 0.0, norm = 0.0;
        for (int q = -r; q <= r; ++q) {
          const int pq = p + q;
          if (pq < 0 || pq >= n) continue;
          const double kq = kernel[q + r];
          s += kq * src[a == 0 ? g.index(pq, j) : g.index(i, pq)];
          norm += kq;
        }
        out[g.index(i, j)] = norm > 0.0 ? s / norm : 0.0;
      }
  }
  return out;
}

}  // namespace

InitialData mollify_initial_data(const InitialData& raw, double delta, double big_b,
                                 double c0) {
  if (!(delta > 0.0)) throw DomainError("mollification requires delta > 0");
  const Grid& g = raw.rho0.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = raw.rho0[i];
    const double n = raw.n0[i];
    if (r < 0.0 || n < 0.0 || n > c0 * r * (1.0 + 1e-12) || r > c0 * n * (1.0 + 1e-12)) {
      std::ostringstream msg;
      msg << "initial densities violate the ratio hypothesis c0^{-1} n0 ≤ ρ0 ≤ c0 n0 (c0 = " << c0
          << ") at node " << i;
      throw DomainError(msg.str());
    }
  }
  const double cap = std::pow(delta, -1.0 / (2.0 * big_b));
  if (!(cap >= delta)) {
    std::ostringstream msg;
    msg << "density clamp interval [" << delta << ", " << cap << "] is empty";
    throw DomainError(msg.str());
  }

  InitialData out = raw;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.rho0[i] = std::clamp(raw.rho0[i], delta, cap);
    out.n0[i] = std::clamp(raw.n0[i], delta, cap);
  }

  const int nx = g.nodes(0);
  const int ny = g.nodes(1);
  std::vector<double> cutoff(g.size());
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      double d = std::min(g.coord(0, i), g.extent(0) - g.coord(0, i));
      if (g.dim() == 2) d = std::min({d, g.coord(1, j), g.extent(1) - g.coord(1, j)});
      const double s = std::clamp(d / delta, 0.0, 1.0);
      cutoff[g.index(i, j)] = s * s * (3.0 - 2.0 * s);
    }

  for (int a = 0; a < g.dim(); ++a) {
    std::vector<double> wv(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = raw.rho0[i] + raw.n0[i];
      wv[i] = r > 0.0 ? raw.m0.comp[a][i] / std::sqrt(r) : 0.0;
    }
    const auto smooth = mollify(g, wv, delta);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double r = out.rho0[i] + out.n0[i];
      const double u = cutoff[i] * smooth[i] / std::sqrt(r);
      out.m0.comp[a][i] = r * u;
    }
  }
  return out;
}

}  // namespace bifluid
