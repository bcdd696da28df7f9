#include "lbtopo/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lbtopo {

std::string_view to_string(SensitivityForm f) { return f == SensitivityForm::Secant ? "secant" : "tangent"; }

SensitivityForm parse_sensitivity_form(std::string_view name) {
  if (name == "secant") return SensitivityForm::Secant;
  if (name == "tangent") return SensitivityForm::Tangent;
  throw ConfigError("sensitivity_form must be secant or tangent");
}

Eigen::VectorXd sensitivity_kernel(const Lattice& lat, const PopulationField& a, const Eigen::Matrix3Xd& u,
                                   const Eigen::VectorXd& alpha, double tau, double rho0, SensitivityForm form) {
  const Stencil& s = lat.stencil();
  Eigen::VectorXd jw(lat.size());
  for (Index n = 0; n < lat.size(); ++n) {
    const Eigen::Vector3d un = u.col(n);
    double sum = 0.0;
    for (int i = 0; i < s.q(); ++i)
      sum += a(i, n) * equilibrium_alpha_derivative(s.velocity(i), un, alpha[n], s.weight(i), rho0, form);
    jw[n] = -sum / tau;
  }
  return jw;
}

Eigen::VectorXd sensitivity_continuous(const ContinuousFlowAdjoint& adj, const FlowSolver& forward,
                                       SensitivityForm form) {
  return sensitivity_kernel(forward.lattice(), adj.fstar(), forward.macros().u, forward.alpha(), forward.tau(),
                            forward.rho0(), form);
}

Eigen::VectorXd sensitivity_discrete(const DiscreteFlowAdjoint& adj, const FlowSolver& forward, SensitivityForm form) {
  return sensitivity_kernel(forward.lattice(), adj.fstar_S(), adj.velocity(), forward.alpha(), forward.tau(),
                            forward.rho0(), form);
}

Eigen::VectorXd sensitivity_thermal(const DiscreteThermalAdjoint& adj, const ThermalSolver& forward) {
  const Stencil& s = forward.lattice().stencil();
  const ThermalParams& p = forward.params();
  const PopulationField& g = forward.populations();
  const PopulationField& gs = adj.gstar_S();
  const Eigen::VectorXd T = forward.temperature();
  const double drate = 1.0 / p.tau_fluid - 1.0 / p.tau_solid;
  Eigen::VectorXd out(g.cols());
  for (Index n = 0; n < g.cols(); ++n) {
    const double alpha = forward.alpha()[n];
    const Eigen::Vector3d u = forward.velocity().col(n);
    const Eigen::VectorXd geq = thermal_equilibrium<double>(T[n], u, alpha, s);
    double w_sum = 0.0;
    double adv = 0.0;
    double relax = 0.0;
    for (int i = 0; i < s.q(); ++i) {
      w_sum += s.weight(i) * gs(i, n);
      adv += s.weight(i) * s.velocity(i).cast<double>().dot(u) * gs(i, n);
      relax += (g(i, n) - geq[i]) * gs(i, n);
    }
    const double rate = thermal_rate(alpha, p.tau_fluid, p.tau_solid);
    out[n] = p.beta_max * (1.0 - T[n]) * (1.0 + w_sum) - rate * T[n] / s.cs2() * adv + drate * relax;
  }
  return out;
}

Eigen::VectorXd laplacian_phi(const Eigen::VectorXd& phi, const GridGeometry& g) {
  Eigen::VectorXd lap(phi.size());
  const int dim = g.dim();
  for (Index n = 0; n < phi.size(); ++n) {
    const Eigen::Vector3i c = g.coords(n);
    double sum = 0.0;
    for (int a = 0; a < dim; ++a) {
      for (int sgn : {-1, 1}) {
        Eigen::Vector3i d = c;
        d[a] += sgn;
        sum += g.contains(d) ? phi[g.index(d)] - phi[n] : 0.0;
      }
    }
    lap[n] = sum;
  }
  return lap;
}

double lagrange_multiplier(const Eigen::VectorXd& jw, const Eigen::VectorXd& phi,
                           const Eigen::Array<bool, Eigen::Dynamic, 1>& designable, const GridGeometry& geometry,
                           double sigma, double G, double scale) {
  const Eigen::VectorXd lap = laplacian_phi(phi, geometry);
  double sum = 0.0;
  Index count = 0;
  for (Index n = 0; n < jw.size(); ++n) {
    if (!designable[n]) continue;
    sum += std::abs(jw[n] - sigma * lap[n]);
    ++count;
  }
  if (count == 0) return 0.0;
  return std::exp(G / scale) * sum / static_cast<double>(count);
}

namespace {

void average_step(FlowSolver& s) {
  const PopulationField keep = s.populations();
  s.step();
  s.set_populations(0.5 * (keep + s.populations()));
}

void average_step(ThermalSolver& s) {
  const PopulationField keep = s.populations();
  s.step();
  s.set_populations(0.5 * (keep + s.populations()));
}

/// Steps a and b together until the window change of obs(a) − obs(b) drops below tol.
template <class Solver, class Observe>
RunStatus lockstep(Solver& a, Solver& b, Observe obs, const FdmOptions& o, long& steps) {
  Eigen::MatrixXd prev = obs(a) - obs(b);
  long step = 0;
  while (step < o.max_steps) {
    if (o.pair_average && step > 0) {
      average_step(a);
      average_step(b);
      ++step;
    }
    for (int k = 0; k < o.window; ++k) {
      a.step();
      b.step();
    }
    step += o.window;
    if (a.diverged() || b.diverged()) {
      steps += step;
      return RunStatus::Diverged;
    }
    Eigen::MatrixXd cur = obs(a) - obs(b);
    const double r = relative_change(cur, prev);
    prev = std::move(cur);
    if (r < o.tol) {
      steps += step;
      return RunStatus::Converged;
    }
  }
  steps += step;
  return RunStatus::MaxSteps;
}

}  // namespace

std::vector<FdmProbe> fdm_oracle(const Problem& problem, const ForwardState& base, const std::vector<Index>& nodes,
                                 const FdmOptions& options) {
  if (!(options.h > 0.0)) throw ConfigError("fdm step must be positive");
  const auto& designable = problem.data().design.designable;
  std::vector<FdmProbe> probes;
  probes.reserve(nodes.size());
  for (Index node : nodes) {
    if (node < 0 || node >= designable.size() || !designable[node]) throw ConfigError("fdm node is not designable");
    FdmProbe probe;
    probe.node = node;
    ForwardState plus = base;
    ForwardState minus = base;
    Eigen::VectorXd ap = base.flow.alpha();
    Eigen::VectorXd am = ap;
    ap[node] += options.h;
    am[node] -= options.h;
    plus.flow.set_alpha(ap);
    minus.flow.set_alpha(am);
    RunStatus st = lockstep(plus.flow, minus.flow, [](const FlowSolver& s) { return Eigen::MatrixXd(s.macros().u); },
                            options, probe.steps);
    if (st == RunStatus::Converged && plus.thermal) {
      plus.thermal->set_flow(ap, plus.flow.macros().u);
      minus.thermal->set_flow(am, minus.flow.macros().u);
      st = lockstep(
          *plus.thermal, *minus.thermal,
          [](const ThermalSolver& s) { return Eigen::MatrixXd(s.temperature()); }, options, probe.steps);
    }
    probe.flagged = st != RunStatus::Converged;
    probe.j_plus = problem.objective(plus);
    probe.j_minus = problem.objective(minus);
    probe.derivative = (probe.j_plus - probe.j_minus) / (2.0 * options.h);
    probes.push_back(probe);
  }
  return probes;
}

double relative_l2_error(const Eigen::VectorXd& estimate, const std::vector<FdmProbe>& reference) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < reference.size(); ++k) {
    if (reference[k].flagged) continue;
    const double r = reference[k].derivative;
    const double e = estimate[static_cast<Index>(k)] - r;
    num += e * e;
    den += r * r;
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

std::vector<Index> diagonal_nodes(const Case& c, int count, double lo, double hi, double z_frac) {
  const GridGeometry& g = c.geometry;
  const int z = g.dim() == 3 ? static_cast<int>(std::lround(z_frac * (g.nz() - 1))) : 0;
  std::vector<Index> out;
  for (int k = 0; k < count; ++k) {
    const double t = count == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * k / double(count - 1);
    const int x = static_cast<int>(std::lround(t * (g.nx() - 1)));
    const int y = static_cast<int>(std::lround(t * (g.ny() - 1)));
    const Index n = g.index(x, y, z);
    if (!c.design.designable[n]) continue;
    if (std::find(out.begin(), out.end(), n) != out.end()) continue;
    out.push_back(n);
  }
  return out;
}

}  // namespace lbtopo
