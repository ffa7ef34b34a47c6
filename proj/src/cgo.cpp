#include "calderon/cgo.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace calderon {

std::pair<ComplexField, ComplexField> phase_eval(cd y, const Grid2D& g) {
  PhaseFunction ph{y};
  ComplexField phi = make_field(g), dphi = make_field(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      cd z = g.z(i, j);
      phi.at(i, j) = ph.phi(z);
      dphi.at(i, j) = ph.dphi(z);
    }
  return {std::move(phi), std::move(dphi)};
}

ComplexField osc_weight(const PhaseFunction& ph, double tau, const Grid2D& g) {
  ComplexField w = make_field(g);
  for (int i = 0; i < g.nx; ++i) {
    double a = 4.0 * tau * (g.x(i) - ph.y.real());
    for (int j = 0; j < g.ny; ++j) {
      double th = a * (g.y(j) - ph.y.imag());
      w.at(i, j) = cd(std::cos(th), std::sin(th));
    }
  }
  return w;
}

ComplexField r_tilde_tau(const ComplexField& g, const PhaseFunction& ph, double tau,
                         const CauchyKernelTable& table) {
  if (!g.grid.same_as(table.grid())) throw std::invalid_argument("r_tilde_tau: grid mismatch");
  ComplexField w = osc_weight(ph, tau, g.grid);
  ComplexField out = dz_inv(mul(g, w), table);
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] *= 0.5 * std::conj(w.v[k]);
  return out;
}

ComplexField r_tau(const ComplexField& g, const PhaseFunction& ph, double tau,
                   const CauchyKernelTable& table, RTauWeight which) {
  if (!g.grid.same_as(table.grid())) throw std::invalid_argument("r_tau: grid mismatch");
  ComplexField w = osc_weight(ph, tau, g.grid);
  ComplexField inner = g;
  if (which == RTauWeight::antisymmetric)
    for (size_t k = 0; k < inner.v.size(); ++k) inner.v[k] *= std::conj(w.v[k]);
  ComplexField out = dbar_inv(inner, table);
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] *= 0.5 * w.v[k];
  return out;
}

namespace {

// Shared series engine. Runs the u-side recursion
//   U_0 = 1, U_1 = R~_sigma(kappa (dbar_inv q - beta)),
//   U_j = R~_sigma(kappa dbar_inv(q U_{j-1}))
// for a signed sigma; the v-series is the conjugate of this at -tau.
CgoSolution series_core(const ComplexField& q, double sigma, int max_terms, double tail_tol,
                        cd beta, double kappa, cd y, const CauchyKernelTable& table) {
  const Grid2D& g = q.grid;
  if (!g.same_as(table.grid())) throw std::invalid_argument("series: grid mismatch");
  if (max_terms < 1) throw std::invalid_argument("series: max_terms must be >= 1");
  if (!(tail_tol > 0)) throw std::invalid_argument("series: tail_tol must be positive");

  PhaseFunction ph{y};
  CgoSolution sol;
  sol.phase = ph;

  ComplexField one = make_field(g);
  for (auto& c : one.v) c = cd(1, 0);
  sol.terms.push_back(one);
  sol.term_norms.push_back(l2_norm(one));

  ComplexField arg = dbar_inv(q, table);
  for (auto& c : arg.v) c = kappa * (c - beta);
  sol.terms.push_back(r_tilde_tau(arg, ph, sigma, table));
  sol.term_norms.push_back(l2_norm(sol.terms.back()));

  for (int j = 2; j <= max_terms; ++j) {
    if (sol.term_norms.back() <= tail_tol * sol.term_norms[1]) break;
    ComplexField inner = dbar_inv(mul(q, sol.terms.back()), table);
    for (auto& c : inner.v) c *= kappa;
    sol.terms.push_back(r_tilde_tau(inner, ph, sigma, table));
    double n = l2_norm(sol.terms.back());
    double prev = sol.term_norms.back();
    sol.term_norms.push_back(n);
    if (prev > 0) sol.max_ratio = std::max(sol.max_ratio, n / prev);
  }

  std::ostringstream msg;
  if (sol.max_ratio >= 1.0) {
    sol.converged = false;
    msg << "term ratio " << sol.max_ratio << " >= 1; ";
  }
  if (sol.term_norms.back() > tail_tol * sol.term_norms[1]) {
    sol.converged = false;
    msg << "tail " << sol.term_norms.back() << " above " << tail_tol * sol.term_norms[1]
        << " after " << sol.terms.size() - 1 << " terms";
  }
  sol.message = msg.str();

  sol.amplitude = make_field(g);
  double s = 1;
  for (const auto& t : sol.terms) {
    for (size_t k = 0; k < t.v.size(); ++k) sol.amplitude.v[k] += s * t.v[k];
    s = -s;
  }
  return sol;
}

}  // namespace

CgoSolution build_u1_series(const ComplexField& q1, const NeumannSeriesConfig& cfg, cd y,
                            const CauchyKernelTable& table) {
  if (!(cfg.tau > 0)) throw std::invalid_argument("build_u1_series: tau must be positive");
  CgoSolution sol =
      series_core(q1, cfg.tau, cfg.max_terms, cfg.tail_tol, cfg.beta1, 0.5, y, table);
  sol.tau = cfg.tau;
  sol.sign = +1;
  return sol;
}

CgoSolution build_v_series(const ComplexField& q2, const NeumannSeriesConfig& cfg, cd y,
                           const CauchyKernelTable& table) {
  if (!(cfg.tau > 0)) throw std::invalid_argument("build_v_series: tau must be positive");
  double kappa = (cfg.v_half == VSeriesHalf::symmetric) ? 0.5 : 1.0;
  CgoSolution sol = series_core(conj_field(q2), -cfg.tau, cfg.max_terms, cfg.tail_tol,
                                std::conj(cfg.beta2), kappa, y, table);
  for (auto& t : sol.terms)
    for (auto& c : t.v) c = std::conj(c);
  for (auto& c : sol.amplitude.v) c = std::conj(c);
  sol.tau = cfg.tau;
  sol.sign = -1;
  return sol;
}

cd solution_value(const CgoSolution& sol, int i, int j) {
  const Grid2D& g = sol.amplitude.grid;
  cd p = sol.phase.phi(g.z(i, j));
  cd e = (sol.sign > 0) ? std::exp(sol.tau * p) : std::exp(-sol.tau * std::conj(p));
  return e * sol.amplitude.at(i, j);
}

double schrodinger_residual(const CgoSolution& sol, const ComplexField& q) {
  const Grid2D& g = sol.amplitude.grid;
  if (!g.same_as(q.grid)) throw std::invalid_argument("schrodinger_residual: grid mismatch");
  const ComplexField& a = sol.amplitude;
  const double margin = 0.15;
  int i0 = 1, i1 = g.nx - 2, j0 = 1, j1 = g.ny - 2;
  while (i0 < g.nx && g.x(i0) < g.xmin + margin) ++i0;
  while (i1 >= 0 && g.x(i1) > g.xmax - margin) --i1;
  while (j0 < g.ny && g.y(j0) < g.ymin + margin) ++j0;
  while (j1 >= 0 && g.y(j1) > g.ymax - margin) --j1;
  if (i0 >= i1 || j0 >= j1) throw std::invalid_argument("schrodinger_residual: grid too small");

  double area = g.cell_area();
  double rr = 0, aa = 0;
  for (int i = i0; i <= i1; ++i)
    for (int j = j0; j <= j1; ++j) {
      cd lap = (a.at(i + 1, j) - 2.0 * a.at(i, j) + a.at(i - 1, j)) / (g.hx * g.hx) +
               (a.at(i, j + 1) - 2.0 * a.at(i, j) + a.at(i, j - 1)) / (g.hy * g.hy);
      cd d1 = (a.at(i + 1, j) - a.at(i - 1, j)) / (2 * g.hx);
      cd d2 = (a.at(i, j + 1) - a.at(i, j - 1)) / (2 * g.hy);
      cd r;
      if (sol.sign > 0) {
        cd dbar = 0.5 * (d1 + cd(0, 1) * d2);
        r = lap + 4.0 * sol.tau * sol.phase.dphi(g.z(i, j)) * dbar + q.at(i, j) * a.at(i, j);
      } else {
        cd dz = 0.5 * (d1 - cd(0, 1) * d2);
        r = lap - 4.0 * sol.tau * std::conj(sol.phase.dphi(g.z(i, j))) * dz +
            q.at(i, j) * a.at(i, j);
      }
      rr += std::norm(r) * area;
      aa += std::norm(a.at(i, j)) * area;
    }
  double denom = (1.0 + sol.tau) * std::sqrt(aa);
  if (!(denom > 0)) throw std::runtime_error("schrodinger_residual: zero amplitude");
  return std::sqrt(rr) / denom;
}

}  // namespace calderon
