#include "calderon/recon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "calderon/csv.hpp"
#include "calderon/fit.hpp"
#include "calderon/osc.hpp"

namespace calderon {

namespace {

// the pairing of boundary traces with dynamic range exp(2 tau max|Re Phi|)
// runs out of double precision near exp(26); see recover_pointwise
constexpr double kMaxTauRange = 13.0;

void check_trace(const DtNMap& map, const BoundaryFunction& f, const char* who) {
  if (f.nx != map.nx || f.ny != map.ny)
    throw std::runtime_error(std::string(who) + ": trace grid does not match the map");
}

std::vector<cd> coeff_diff(const DtNMap& dtn1, const DtNMap& dtn2) {
  std::vector<cd> d(dtn1.coeff.size());
  for (size_t k = 0; k < d.size(); ++k) d[k] = dtn2.coeff[k] - dtn1.coeff[k];
  return d;
}

}  // namespace

cd boundary_pairing(const DtNMap& dtn1, const DtNMap& dtn2, const BoundaryFunction& u_trace,
                    const BoundaryFunction& v_trace) {
  if (!dtn1.same_basis(dtn2))
    throw std::runtime_error("boundary_pairing: maps use different boundary bases");
  check_trace(dtn1, u_trace, "boundary_pairing");
  check_trace(dtn1, v_trace, "boundary_pairing");

  std::vector<cd> fh = boundary_coeffs(dtn1, u_trace);
  std::vector<cd> gh = boundary_coeffs(dtn1, v_trace);
  std::vector<cd> diff = coeff_diff(dtn1, dtn2);

  int M = dtn1.M;
  cd acc = 0;
  for (int r = 0; r < M; ++r) {
    cd row = 0;
    for (int c = 0; c < M; ++c) row += diff[(size_t)r * M + c] * fh[c];
    acc += gh[r] * row;
  }
  return acc;
}

double trace_projection_error(const DtNMap& map, const BoundaryFunction& f) {
  check_trace(map, f, "trace_projection_error");
  BoundaryFunction p = boundary_expand(map, boundary_coeffs(map, f));
  double num = 0, den = 0;
  for (size_t b = 0; b < f.values.size(); ++b) {
    num += f.weight[b] * std::norm(f.values[b] - p.values[b]);
    den += f.weight[b] * std::norm(f.values[b]);
  }
  if (den == 0) return 0;
  return std::sqrt(num / den);
}

namespace {

void validate_ladder(const std::vector<double>& taus, size_t min_count) {
  if (taus.size() < min_count) {
    std::ostringstream os;
    os << "tau ladder needs at least " << min_count << " values, got " << taus.size();
    throw std::runtime_error(os.str());
  }
  for (size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0)) throw std::runtime_error("tau values must be positive");
    if (i > 0 && !(taus[i] > taus[i - 1]))
      throw std::runtime_error("tau ladder must be strictly increasing");
  }
  double r0 = taus[1] / taus[0];
  for (size_t i = 1; i + 1 < taus.size(); ++i) {
    double r = taus[i + 1] / taus[i];
    if (std::abs(r / r0 - 1.0) > 0.1)
      throw std::runtime_error("tau ladder must be geometric (constant ratio within 10%)");
  }
}

double max_boundary_re_phi(const Grid2D& om, const BoundaryFunction& lay, cd y) {
  PhaseFunction ph{y};
  double m = 0;
  for (size_t b = 0; b < lay.gi.size(); ++b)
    m = std::max(m, std::abs(ph.phi(om.z(lay.gi[b], lay.gj[b])).real()));
  return m;
}

}  // namespace

RecoveryResult recover_pointwise(const DtNMap& dtn_q, const DtNMap& dtn_0,
                                 const ComplexField& q_pi, const RecoveryConfig& cfg,
                                 const CauchyKernelTable& table) {
  if (!dtn_q.same_basis(dtn_0))
    throw std::runtime_error("recover_pointwise: maps use different boundary bases");
  validate_ladder(cfg.taus, 3);
  if (cfg.ys.empty()) throw std::runtime_error("recover_pointwise: no evaluation points");

  Grid2D om = make_grid(dtn_q.nx, dtn_q.ny, dtn_q.xmin, dtn_q.xmax, dtn_q.ymin, dtn_q.ymax);
  BoundaryFunction lay = make_boundary(om);
  double h = std::max(om.hx, om.hy);
  double tau_max = cfg.taus.back();

  for (cd y : cfg.ys) {
    if (y.real() < om.xmin + 0.2 || y.real() > om.xmax - 0.2 || y.imag() < om.ymin + 0.2 ||
        y.imag() > om.ymax - 0.2)
      throw std::runtime_error("recover_pointwise: evaluation point within 0.2 of the boundary");
    double range = tau_max * max_boundary_re_phi(om, lay, y);
    if (range > kMaxTauRange) {
      std::ostringstream os;
      os << "recover_pointwise: trace dynamic range tau*max|Re Phi| = " << range << " exceeds "
         << kMaxTauRange << "; the pairing would drown in double-precision noise";
      throw std::runtime_error(os.str());
    }
    double ymax = std::max(std::abs(y.real()), std::abs(y.imag()));
    if (4.0 * tau_max * (1.0 + ymax) * h > M_PI / 2)
      throw std::runtime_error(
          "recover_pointwise: grid too coarse to resolve the trace oscillation at the "
          "largest tau");
  }

  ComplexField q_eps = cfg.eps > 0 ? mollify(q_pi, cfg.eps) : q_pi;
  ComplexField b1f = dbar_inv(q_eps, table);

  double c = cfg.constant_source == ConstantSource::two_pi ? 2.0 * M_PI : cfg.measured_constant;

  RecoveryResult out;
  out.constant_used = c;

  for (cd y : cfg.ys) {
    RecoveryPoint pt;
    pt.y = y;
    pt.taus = cfg.taus;
    PhaseFunction ph{y};
    cd beta1 = interp_bilinear(b1f, y.real(), y.imag());

    for (double tau : cfg.taus) {
      NeumannSeriesConfig scfg = cfg.series;
      scfg.tau = tau;
      scfg.beta1 = beta1;
      CgoSolution sol = build_u1_series(q_pi, scfg, y, table);
      if (!sol.converged) {
        pt.flagged = true;
        pt.note = sol.message;
        break;
      }
      ComplexField amp = restrict_to(sol.amplitude, om);
      BoundaryFunction f = lay, g = lay;
      for (size_t b = 0; b < f.values.size(); ++b) {
        cd z = om.z(f.gi[b], f.gj[b]);
        f.values[b] = std::exp(tau * ph.phi(z)) * amp.at(f.gi[b], f.gj[b]);
        g.values[b] = std::exp(-tau * std::conj(ph.phi(z)));
      }
      pt.proj_err_f = std::max(pt.proj_err_f, trace_projection_error(dtn_q, f));
      pt.proj_err_g = std::max(pt.proj_err_g, trace_projection_error(dtn_q, g));
      cd pairing = boundary_pairing(dtn_q, dtn_0, f, g);
      pt.per_tau.push_back(tau * pairing / c);
    }

    if (pt.flagged) {
      double nan = std::numeric_limits<double>::quiet_NaN();
      pt.qhat = cd(nan, nan);
    } else {
      size_t n = pt.per_tau.size();
      double r = cfg.taus[n - 1] / cfg.taus[n - 2];
      cd vn = pt.per_tau[n - 1], vp = pt.per_tau[n - 2];
      pt.qhat = (r * r * vn - vp) / (r * r - 1.0);
      pt.tau_spread = std::abs(vn - vp) / std::max(std::abs(pt.qhat), 1e-300);
    }
    out.points.push_back(std::move(pt));
  }
  return out;
}

ComplexField correction_terms(const ComplexField& q1, const ComplexField& q2, cd y,
                              BetaSource beta, double eps, const CauchyKernelTable& table) {
  if (!q1.grid.same_as(q2.grid))
    throw std::runtime_error("correction_terms: potentials on different grids");

  ComplexField qd = sub(q1, q2);
  ComplexField t1 = dbar_inv(q1, table);  // pairs with dz_inv(q)
  ComplexField t2 = dz_inv(q2, table);    // pairs with dbar_inv(q)
  ComplexField tz = dz_inv(qd, table);
  ComplexField tb = dbar_inv(qd, table);

  cd beta1, beta2;
  if (beta == BetaSource::centered) {
    beta1 = interp_bilinear(t1, y.real(), y.imag());
    beta2 = interp_bilinear(t2, y.real(), y.imag());
  } else {
    ComplexField m1 = dbar_inv(mollify(q1, eps), table);
    ComplexField m2 = dz_inv(mollify(q2, eps), table);
    beta1 = interp_bilinear(m1, y.real(), y.imag());
    beta2 = interp_bilinear(m2, y.real(), y.imag());
  }

  ComplexField g = make_field(q1.grid);
  for (size_t k = 0; k < g.v.size(); ++k)
    g.v[k] = 0.25 * (tz.v[k] * (t1.v[k] - beta1) + tb.v[k] * (t2.v[k] - beta2));
  return g;
}

namespace {

const char* study_quantity(StudyKind kind) {
  switch (kind) {
    case StudyKind::rtau:
      return "rtau_relative_norm";
    case StudyKind::ttau:
      return "ttau_norm_estimate";
    case StudyKind::tail:
      return "useries_tail_norm";
    case StudyKind::correction:
      return "correction_sp_integral";
  }
  return "unknown";
}

}  // namespace

DecayStudy judge_study(const std::string& quantity, StudyKind kind,
                       const std::vector<double>& taus, const std::vector<double>& values) {
  if (taus.size() < 4) throw std::invalid_argument("decay study needs at least 4 tau values");
  if (values.size() != taus.size())
    throw std::invalid_argument("decay study: one value per tau required");
  for (size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1]) || !(taus[i - 1] > 0))
      throw std::invalid_argument("decay study: taus must be positive and increasing");

  DecayStudy st;
  st.quantity = quantity;
  st.kind = kind;
  st.taus = taus;
  st.values = values;

  bool positive = true;
  for (double v : values)
    if (!(v > 0) || !std::isfinite(v)) positive = false;
  if (!positive) {
    st.verdict = "inconclusive";
    st.note = "nonpositive or non-finite measurement; no decay rate can be fitted";
    return st;
  }

  LogLogFit fit = loglog_fit(taus, values);
  st.slope = fit.slope;
  st.intercept = fit.intercept;
  st.fit_residual = fit.rms_residual;

  if (kind == StudyKind::rtau || kind == StudyKind::ttau) {
    if (fit.rms_residual > 0.15) {
      st.verdict = "inconclusive";
      st.note = "log-log fit residual above 0.15; measurements do not follow a power law";
      return st;
    }
    bool ok = kind == StudyKind::rtau ? st.slope <= -0.8
                                      : (st.slope >= -1.15 && st.slope <= -0.85);
    st.verdict = ok ? "pass" : "fail";
    if (!ok) {
      std::ostringstream os;
      os << "slope " << st.slope << " outside the target ("
         << (kind == StudyKind::rtau ? "<= -0.8" : "[-1.15, -0.85]") << ")";
      st.note = os.str();
    }
    return st;
  }

  // tail / correction: tau * value must strictly decrease
  st.verdict = "pass";
  for (size_t i = 1; i < values.size(); ++i) {
    if (!(taus[i] * values[i] < taus[i - 1] * values[i - 1])) {
      st.verdict = "fail";
      std::ostringstream os;
      os << "tau*value does not decrease from tau=" << taus[i - 1] << " to tau=" << taus[i];
      st.note = os.str();
      break;
    }
  }
  return st;
}

DecayStudy run_decay_study(StudyKind kind, const StudyConfig& cfg) {
  if (cfg.taus.size() < 4) throw std::invalid_argument("decay study needs at least 4 tau values");

  std::vector<double> values;

  if (kind == StudyKind::ttau) {
    Grid2D g = make_grid(cfg.n, cfg.n, -cfg.half, cfg.half, -cfg.half, cfg.half);
    for (double tau : cfg.taus) {
      OscillatoryOperator op;
      op.grid = g;
      op.tau = tau;
      op.margin = cfg.margin;
      values.push_back(estimate_op_norm(op, cfg.power_iters));
    }
    return judge_study(study_quantity(kind), kind, cfg.taus, values);
  }

  Grid2D pi = make_grid(cfg.n, cfg.n, -cfg.half, cfg.half, -cfg.half, cfg.half);
  CauchyKernelTable table(pi);

  if (kind == StudyKind::rtau) {
    ComplexField f = sample_potential(cfg.field, pi);
    double fn = l2_norm(f);
    if (fn == 0) throw std::invalid_argument("rtau study: field is identically zero");
    PhaseFunction ph{cfg.y};
    for (double tau : cfg.taus) values.push_back(l2_norm(r_tilde_tau(f, ph, tau, table)) / fn);
  } else if (kind == StudyKind::tail) {
    ComplexField q = sample_potential(cfg.field, pi);
    ComplexField qe = cfg.eps > 0 ? mollify(q, cfg.eps) : q;
    cd beta1 = interp_bilinear(dbar_inv(qe, table), cfg.y.real(), cfg.y.imag());
    for (double tau : cfg.taus) {
      NeumannSeriesConfig scfg = cfg.series;
      scfg.tau = tau;
      scfg.beta1 = beta1;
      CgoSolution sol = build_u1_series(q, scfg, cfg.y, table);
      ComplexField tail = make_field(pi);
      for (size_t j = 2; j < sol.terms.size(); ++j) {
        double sgn = (j % 2 == 0) ? 1.0 : -1.0;
        for (size_t k = 0; k < tail.v.size(); ++k) tail.v[k] += sgn * sol.terms[j].v[k];
      }
      values.push_back(l2_norm(tail));
    }
  } else {  // correction
    ComplexField q1 = sample_potential(cfg.field, pi);
    ComplexField q2 = sample_potential(cfg.field2, pi);
    ComplexField g = correction_terms(q1, q2, cfg.y, cfg.beta, cfg.eps, table);
    if (cfg.omega_n > 0) {
      Grid2D om = make_grid(cfg.omega_n, cfg.omega_n, -cfg.omega_half, cfg.omega_half,
                            -cfg.omega_half, cfg.omega_half);
      g = restrict_to(g, om);
    }
    for (double tau : cfg.taus)
      values.push_back(std::abs(stationary_phase_integral(g, cfg.y, tau)));
  }

  return judge_study(study_quantity(kind), kind, cfg.taus, values);
}

void write_study_csv(const DecayStudy& study, const std::string& path) {
  CsvWriter w(path, {"tau", "value", "tau_times_value"});
  for (size_t i = 0; i < study.taus.size(); ++i) {
    w.cell(study.taus[i]).cell(study.values[i]).cell(study.taus[i] * study.values[i]);
    w.end_row();
  }
  w.close();
}

}  // namespace calderon
