#include "calderon/osc.hpp"

#include <cmath>
#include <stdexcept>

namespace calderon {

double smooth_step01(double s) {
  if (s <= 0) return 0;
  if (s >= 1) return 1;
  double b0 = std::exp(-1.0 / s), b1 = std::exp(-1.0 / (1.0 - s));
  return b0 / (b0 + b1);
}

double window_axis(double t, double lo, double hi, double margin) {
  double d = std::min(t - lo, hi - t);
  return smooth_step01((d - margin) / (margin * 2.0 / 3.0));
}

namespace {

double op_margin(const OscillatoryOperator& op) {
  double side = std::min(op.grid.xmax - op.grid.xmin, op.grid.ymax - op.grid.ymin);
  double m = op.margin > 0 ? op.margin : 0.1 * side;
  if (m * 5.0 / 3.0 >= 0.5 * side)
    throw std::invalid_argument("oscillatory operator: margin leaves no plateau");
  return m;
}

std::vector<double> axis_window(const Grid2D& g, bool xaxis, double m) {
  int n = xaxis ? g.nx : g.ny;
  std::vector<double> w(n);
  for (int k = 0; k < n; ++k) {
    double t = xaxis ? g.x(k) : g.y(k);
    w[k] = xaxis ? window_axis(t, g.xmin, g.xmax, m) : window_axis(t, g.ymin, g.ymax, m);
  }
  return w;
}

void check_resolution(const OscillatoryOperator& op, double m) {
  // the kernel chirp aliases once pi/(|tau| h) drops inside the window
  // support; the smooth taper keeps everything clean up to that point
  const Grid2D& g = op.grid;
  double w = std::max(g.xmax - g.xmin, g.ymax - g.ymin) - 2.0 * m;
  double h = std::max(g.hx, g.hy);
  if (std::fabs(op.tau) * h * 0.9 * w > M_PI)
    throw std::invalid_argument("apply_T_tau: tau too large for this grid");
}

}  // namespace

ComplexField window2d(const OscillatoryOperator& op) {
  double m = op_margin(op);
  auto wx = axis_window(op.grid, true, m);
  auto wy = axis_window(op.grid, false, m);
  ComplexField w = make_field(op.grid);
  for (int i = 0; i < op.grid.nx; ++i)
    for (int j = 0; j < op.grid.ny; ++j) w.at(i, j) = wx[i] * wy[j];
  return w;
}

ComplexField apply_T_tau(const ComplexField& f, const OscillatoryOperator& op,
                         ApplyMethod method) {
  const Grid2D& g = op.grid;
  if (!f.grid.same_as(g)) throw std::invalid_argument("apply_T_tau: grid mismatch");
  double m = op_margin(op);
  check_resolution(op, m);
  auto wx = axis_window(g, true, m);
  auto wy = axis_window(g, false, m);
  double area = g.cell_area();
  double tau = op.tau;
  ComplexField out = make_field(g);

  if (method == ApplyMethod::dense) {
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j) {
        if (wx[i] * wy[j] == 0) continue;
        cd acc(0, 0);
        for (int p = 0; p < g.nx; ++p)
          for (int q = 0; q < g.ny; ++q) {
            double psi = 2.0 * (g.x(i) - g.x(p)) * (g.y(j) - g.y(q));
            acc += std::polar(1.0, -tau * psi) * (wx[p] * wy[q] * f.at(p, q));
          }
        out.at(i, j) = wx[i] * wy[j] * acc * area;
      }
    return out;
  }

  // pass 1: S(x2, y2) = sum_{y1} e^{2 i tau x2 y1} [e^{-2 i tau y1 y2} chi(y1) f(y1,y2)]
  int n1 = g.nx, n2 = g.ny;
  std::vector<cd> S((size_t)n2 * n2);
  std::vector<cd> col(n1);
  for (int q = 0; q < n2; ++q) {
    double y2 = g.y(q);
    cd rot = std::polar(1.0, -2.0 * tau * g.hx * y2);
    cd ph = std::polar(1.0, -2.0 * tau * g.xmin * y2);
    for (int p = 0; p < n1; ++p) {
      col[p] = ph * (wx[p] * f.at(p, q));
      ph *= rot;
    }
    for (int k = 0; k < n2; ++k) {
      double x2 = g.y(k);
      cd step = std::polar(1.0, 2.0 * tau * g.hx * x2);
      cd w = std::polar(1.0, 2.0 * tau * g.xmin * x2);
      cd acc(0, 0);
      for (int p = 0; p < n1; ++p) {
        acc += w * col[p];
        w *= step;
      }
      S[(size_t)k * n2 + q] = acc;
    }
  }

  // pass 2: out(x1,x2) = chi(x) e^{-2 i tau x1 x2} sum_{y2} e^{2 i tau x1 y2} chi(y2) S(x2,y2)
  std::vector<cd> row(n2);
  for (int i = 0; i < n1; ++i) {
    if (wx[i] == 0) continue;
    double x1 = g.x(i);
    cd step = std::polar(1.0, 2.0 * tau * g.hy * x1);
    cd w = std::polar(1.0, 2.0 * tau * g.ymin * x1);
    for (int q = 0; q < n2; ++q) {
      row[q] = w * wy[q];
      w *= step;
    }
    for (int k = 0; k < n2; ++k) {
      if (wy[k] == 0) continue;
      cd acc(0, 0);
      const cd* Sk = &S[(size_t)k * n2];
      for (int q = 0; q < n2; ++q) acc += row[q] * Sk[q];
      out.at(i, k) =
          wx[i] * wy[k] * std::polar(1.0, -2.0 * tau * x1 * g.y(k)) * acc * area;
    }
  }
  return out;
}

OpNormInfo estimate_op_norm_info(const OscillatoryOperator& op, int iters) {
  if (iters < 20) throw std::invalid_argument("estimate_op_norm: iters must be >= 20");
  OscillatoryOperator adj = op;
  adj.tau = -op.tau;  // psi is symmetric in (x,y), window real
  ComplexField v = make_field(op.grid);
  for (auto& c : v.v) c = cd(1, 0);
  double nv = l2_norm(v);
  for (auto& c : v.v) c /= nv;

  OpNormInfo info;
  double prev = 0;
  double area = op.grid.cell_area();
  for (int k = 0; k < iters; ++k) {
    ComplexField w = apply_T_tau(apply_T_tau(v, op), adj);
    cd ray(0, 0);
    for (size_t t = 0; t < v.v.size(); ++t) ray += std::conj(v.v[t]) * w.v[t];
    double lam = std::max(0.0, (ray * area).real());
    info.norm = std::sqrt(lam);
    info.gap = std::fabs(info.norm - prev) / std::max(info.norm, 1e-300);
    prev = info.norm;
    info.iters = k + 1;
    double nw = l2_norm(w);
    if (nw == 0) {
      info.norm = 0;
      info.converged = true;
      return info;
    }
    for (auto& c : w.v) c /= nw;
    v = std::move(w);
  }
  info.converged = info.gap <= 1e-8;
  return info;
}

double estimate_op_norm(const OscillatoryOperator& op, int iters) {
  return estimate_op_norm_info(op, iters).norm;
}

cd stationary_phase_integral(const ComplexField& q, cd y, double tau) {
  const Grid2D& g = q.grid;
  if (!(tau > 0)) throw std::invalid_argument("stationary_phase_integral: tau must be > 0");
  double d = std::min(std::min(y.real() - g.xmin, g.xmax - y.real()),
                      std::min(y.imag() - g.ymin, g.ymax - y.imag()));
  if (d < 0.2)
    throw std::invalid_argument("stationary_phase_integral: y too close to the boundary");

  // alias guard: the field must be small near the shell |u| = 2 pi/(4 tau h)
  double h = std::max(g.hx, g.hy);
  double shell = 2.0 * M_PI / (4.0 * tau * h);
  double mall = 0, mshell = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double a = std::abs(q.at(i, j));
      mall = std::max(mall, a);
      double u1 = std::fabs(g.x(i) - y.real()), u2 = std::fabs(g.y(j) - y.imag());
      if (std::fabs(u1 - shell) <= 2 * h || std::fabs(u2 - shell) <= 2 * h)
        mshell = std::max(mshell, a);
    }
  if (mall > 0 && mshell > 0.05 * mall)
    throw std::invalid_argument("stationary_phase_integral: tau too large for this grid");

  PhaseFunction ph{y};
  cd acc(0, 0);
  for (int i = 0; i < g.nx; ++i) {
    double a = 4.0 * tau * (g.x(i) - y.real());
    for (int j = 0; j < g.ny; ++j) {
      double th = a * (g.y(j) - y.imag());
      acc += q.at(i, j) * cd(std::cos(th), std::sin(th));
    }
  }
  return acc * g.cell_area();
}

ConstantFit extract_constant_info(const ComplexField& q, cd y,
                                  const std::vector<double>& taus) {
  if (taus.size() < 3)
    throw std::invalid_argument("extract_constant: need at least 3 tau values");
  for (size_t k = 1; k < taus.size(); ++k)
    if (!(taus[k] > taus[k - 1]))
      throw std::invalid_argument("extract_constant: taus must increase");
  double r0 = taus[1] / taus[0];
  for (size_t k = 2; k < taus.size(); ++k) {
    double r = taus[k] / taus[k - 1];
    if (std::fabs(r - r0) > 0.1 * r0)
      throw std::invalid_argument("extract_constant: taus must be geometrically spaced");
  }
  cd qy = interp_bilinear(q, y.real(), y.imag());
  if (std::abs(qy) < 1e-14)
    throw std::invalid_argument("extract_constant: q(y) is numerically zero");

  ConstantFit fit;
  for (double tau : taus) {
    cd I = stationary_phase_integral(q, y, tau);
    fit.raw.push_back((tau * I / qy).real());
  }
  size_t n = fit.raw.size();
  double r = taus[n - 1] / taus[n - 2];
  fit.value = (r * r * fit.raw[n - 1] - fit.raw[n - 2]) / (r * r - 1.0);
  double lo = fit.raw[n - 3], hi = fit.raw[n - 3];
  for (size_t k = n - 3; k < n; ++k) {
    lo = std::min(lo, fit.raw[k]);
    hi = std::max(hi, fit.raw[k]);
  }
  fit.spread = (hi - lo) / std::max(std::fabs(fit.value), 1e-300);
  return fit;
}

double extract_constant(const ComplexField& q, cd y, const std::vector<double>& taus) {
  return extract_constant_info(q, y, taus).value;
}

}  // namespace calderon
