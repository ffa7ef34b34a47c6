#include "calderon/runner.hpp"

#include <cmath>
#include <complex>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "calderon/cauchy.hpp"
#include "calderon/cgo.hpp"
#include "calderon/config.hpp"
#include "calderon/csv.hpp"
#include "calderon/fit.hpp"
#include "calderon/forward.hpp"
#include "calderon/grid.hpp"
#include "calderon/osc.hpp"
#include "calderon/recon.hpp"

namespace calderon {

namespace {

namespace fs = std::filesystem;

struct Summary {
  std::ostringstream text;
  bool all_pass = true;

  void line(const std::string& s) { text << s << "\n"; }

  void value(const std::string& name, double v) { text << name << " = " << format_g17(v) << "\n"; }

  void check(const std::string& name, bool ok, const std::string& detail = "") {
    text << "check: " << name << " -> " << (ok ? "pass" : "fail");
    if (!detail.empty()) text << " (" << detail << ")";
    text << "\n";
    if (!ok) all_pass = false;
  }
};

// ---------- shared parsing helpers ----------

PotentialSpec parse_potential(RunConfig& cfg, const std::string& prefix, bool required) {
  PotentialSpec spec;
  std::string kind = cfg.get_string(prefix + ".kind", required ? "" : "zero");
  if (kind.empty()) throw ConfigError("missing required key `" + prefix + ".kind`");
  if (kind == "zero") {
    spec.kind = PotentialKind::zero;
    return spec;
  }
  if (kind == "gaussian")
    spec.kind = PotentialKind::gaussian;
  else if (kind == "two_bumps")
    spec.kind = PotentialKind::two_bumps;
  else if (kind == "disk_indicator")
    spec.kind = PotentialKind::disk_indicator;
  else if (kind == "file")
    spec.kind = PotentialKind::file;
  else
    throw ConfigError("key `" + prefix + ".kind` = `" + kind +
                      "`: expected zero, gaussian, two_bumps, disk_indicator or file");
  if (spec.kind == PotentialKind::file) {
    spec.path = cfg.require_string(prefix + ".path");
    return spec;
  }
  spec.amplitude = cfg.get_real(prefix + ".amplitude", 1.0);
  spec.cx = cfg.get_real(prefix + ".cx", 0.0);
  spec.cy = cfg.get_real(prefix + ".cy", 0.0);
  spec.width = cfg.get_real(prefix + ".width", 0.35);
  return spec;
}

Grid2D checked_grid(int n, double half, const std::string& what) {
  try {
    return make_grid(n, n, -half, half, -half, half);
  } catch (const std::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void validate_ladder_cfg(const std::vector<double>& taus, size_t min_count,
                         const std::string& key) {
  if (taus.size() < min_count) {
    std::ostringstream os;
    os << "key `" << key << "` needs at least " << min_count << " values";
    throw ConfigError(os.str());
  }
  for (size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] > 0)) throw ConfigError("key `" + key + "`: tau values must be positive");
    if (i > 0 && !(taus[i] > taus[i - 1]))
      throw ConfigError("key `" + key + "`: tau values must be strictly increasing");
  }
}

// manufactured Dirichlet problem used by the forward convergence table:
// u = 2 + sin(pi x) sin(pi y) solves (lap + q) u = 0 for
// q = 2 pi^2 s / (2 + s), s = sin(pi x) sin(pi y)
ComplexField manufactured_u(const Grid2D& g) {
  ComplexField f = make_field(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      f.v[g.idx(i, j)] = 2.0 + std::sin(M_PI * g.x(i)) * std::sin(M_PI * g.y(j));
  return f;
}

ComplexField manufactured_q(const Grid2D& g) {
  ComplexField f = make_field(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double s = std::sin(M_PI * g.x(i)) * std::sin(M_PI * g.y(j));
      f.v[g.idx(i, j)] = 2.0 * M_PI * M_PI * s / (2.0 + s);
    }
  return f;
}

double interior_rel_err(const ComplexField& a, const ComplexField& b) {
  const Grid2D& g = a.grid;
  double num = 0, den = 0;
  for (int i = 1; i < g.nx - 1; ++i)
    for (int j = 1; j < g.ny - 1; ++j) {
      num += std::norm(a.at(i, j) - b.at(i, j));
      den += std::norm(b.at(i, j));
    }
  return std::sqrt(num / den);
}

void phase_traces_at(const Grid2D& om, const BoundaryFunction& lay, cd y, double tau,
                     BoundaryFunction& f, BoundaryFunction& g) {
  PhaseFunction ph{y};
  f = lay;
  g = lay;
  for (size_t b = 0; b < f.values.size(); ++b) {
    cd z = om.z(f.gi[b], f.gj[b]);
    f.values[b] = std::exp(tau * ph.phi(z));
    g.values[b] = std::exp(-tau * std::conj(ph.phi(z)));
  }
}

double max_boundary_re_phi(const Grid2D& om, const BoundaryFunction& lay, cd y) {
  PhaseFunction ph{y};
  double m = 0;
  for (size_t b = 0; b < lay.gi.size(); ++b)
    m = std::max(m, std::abs(ph.phi(om.z(lay.gi[b], lay.gj[b])).real()));
  return m;
}

// ---------- forward ----------

struct ForwardParams {
  int n = 0;
  double half = 1.0;
  int modes = 32;
  PotentialSpec spec;
  bool convergence = true;
  int conv_n = 33;
  int levels = 3;
};

ForwardParams parse_forward(RunConfig& cfg) {
  ForwardParams p;
  p.n = cfg.require_int("grid.n");
  p.half = cfg.get_real("grid.half", 1.0);
  p.modes = cfg.get_int("dtn.modes", 32);
  p.spec = parse_potential(cfg, "potential", false);
  p.convergence = cfg.get_int("forward.convergence", 1) != 0;
  p.conv_n = cfg.get_int("forward.conv_n", 33);
  p.levels = cfg.get_int("forward.levels", 3);
  Grid2D g = checked_grid(p.n, p.half, "grid.n/grid.half");
  int nb = boundary_count(g);
  if (p.modes < 1 || p.modes > nb / 4) {
    std::ostringstream os;
    os << "dtn.modes = " << p.modes << " outside [1, " << nb / 4 << "] for grid.n = " << p.n;
    throw ConfigError(os.str());
  }
  if (p.convergence) {
    if (p.levels < 2 || p.levels > 5) throw ConfigError("forward.levels must be in [2, 5]");
    checked_grid(p.conv_n, 1.0, "forward.conv_n");
  }
  return p;
}

void exec_forward(const ForwardParams& p, const fs::path& out, Summary& S) {
  Grid2D om = make_grid(p.n, p.n, -p.half, p.half, -p.half, p.half);
  ComplexField q = sample_potential(p.spec, om);
  DtNMap map = assemble_dtn(q, p.modes);
  write_dtn_csv(map, (out / "dtn.csv").string());
  write_dtn(map, (out / "dtn.bin").string());
  S.line("artifact: dtn.csv");
  S.line("artifact: dtn.bin");

  double scale = 0, asym = 0;
  for (int r = 0; r < map.M; ++r)
    for (int c = 0; c < map.M; ++c) {
      scale = std::max(scale, std::abs(map.coeff[(size_t)r * map.M + c]));
      asym = std::max(asym, std::abs(map.coeff[(size_t)r * map.M + c] -
                                     map.coeff[(size_t)c * map.M + r]));
    }
  if (scale > 1e-10)
    S.check("dtn matrix is symmetric", asym <= 1e-8 * scale,
            "relative asymmetry " + format_g17(asym / scale));
  else
    S.check("dtn matrix is symmetric", true, "matrix numerically zero");

  if (p.spec.kind == PotentialKind::zero) {
    double col0 = 0;
    for (int r = 0; r < map.M; ++r) col0 += std::norm(map.coeff[(size_t)r * map.M]);
    col0 = std::sqrt(col0);
    S.check("zero potential kills the constant mode", col0 <= 1e-8,
            "column norm " + format_g17(col0));
  }

  if (p.convergence) {
    CsvWriter w((out / "convergence.csv").string(), {"n", "err", "ratio"});
    S.line("artifact: convergence.csv");
    std::vector<double> errs;
    for (int k = 0; k < p.levels; ++k) {
      int nk = ((p.conv_n - 1) << k) + 1;
      Grid2D gk = make_grid(nk, nk, -1, 1, -1, 1);
      ComplexField qk = manufactured_q(gk);
      ComplexField uk = manufactured_u(gk);
      ComplexField sol = solve_dirichlet(qk, boundary_restrict(uk));
      errs.push_back(interior_rel_err(sol, uk));
      double ratio = k > 0 ? errs[k - 1] / errs[k] : 0.0;
      w.cell(nk).cell(errs[k]).cell(ratio);
      w.end_row();
      if (k > 0) {
        std::ostringstream nm;
        nm << "second-order convergence at n=" << nk;
        S.check(nm.str(), ratio >= 3.5 && ratio <= 4.5, "ratio " + format_g17(ratio));
      }
    }
    w.close();
  }
}

// ---------- cgo ----------

struct CgoParams {
  int n = 193;
  double half = 1.5;
  PotentialSpec spec;
  std::vector<double> taus;
  cd y{0, 0};
  int max_terms = 8;
  double tail_tol = 1e-6;
  double eps = 0.1;
};

CgoParams parse_cgo(RunConfig& cfg) {
  CgoParams p;
  p.n = cfg.get_int("grid.n", 193);
  p.half = cfg.get_real("grid.half", 1.5);
  p.spec = parse_potential(cfg, "potential", false);
  p.taus = cfg.require_reals("cgo.taus");
  validate_ladder_cfg(p.taus, 1, "cgo.taus");
  p.y = cd(cfg.get_real("cgo.y_re", 0.0), cfg.get_real("cgo.y_im", 0.0));
  p.max_terms = cfg.get_int("cgo.max_terms", 8);
  p.tail_tol = cfg.get_real("cgo.tail_tol", 1e-6);
  p.eps = cfg.get_real("cgo.eps", 0.1);
  if (p.max_terms < 2) throw ConfigError("cgo.max_terms must be >= 2");
  if (!(p.tail_tol > 0)) throw ConfigError("cgo.tail_tol must be positive");
  checked_grid(p.n, p.half, "grid.n/grid.half");
  return p;
}

void exec_cgo(const CgoParams& p, const fs::path& out, Summary& S) {
  Grid2D pi = make_grid(p.n, p.n, -p.half, p.half, -p.half, p.half);
  CauchyKernelTable table(pi);
  ComplexField q = sample_potential(p.spec, pi);
  ComplexField qe = p.eps > 0 ? mollify(q, p.eps) : q;
  cd beta1 = interp_bilinear(dbar_inv(qe, table), p.y.real(), p.y.imag());

  CsvWriter w((out / "series.csv").string(), {"tau", "y_re", "y_im", "j", "term_norm", "ratio"});
  S.line("artifact: series.csv");

  for (double tau : p.taus) {
    NeumannSeriesConfig scfg;
    scfg.tau = tau;
    scfg.max_terms = p.max_terms;
    scfg.tail_tol = p.tail_tol;
    scfg.beta1 = beta1;
    CgoSolution sol = build_u1_series(q, scfg, p.y, table);
    for (size_t j = 0; j < sol.term_norms.size(); ++j) {
      double ratio = j >= 1 && sol.term_norms[j - 1] > 0 ? sol.term_norms[j] / sol.term_norms[j - 1]
                                                         : 0.0;
      w.cell(tau).cell(p.y.real()).cell(p.y.imag()).cell((int)j).cell(sol.term_norms[j]).cell(
          ratio);
      w.end_row();
    }
    double resid = schrodinger_residual(sol, q);
    std::ostringstream nm;
    nm << "series converged at tau=" << format_g17(tau);
    S.check(nm.str(), sol.converged,
            sol.converged ? "max ratio " + format_g17(sol.max_ratio) : sol.message);
    std::ostringstream rl;
    rl << "schrodinger residual at tau=" << format_g17(tau) << " = " << format_g17(resid);
    S.line(rl.str());
    if (p.spec.kind == PotentialKind::zero) {
      std::ostringstream zl;
      zl << "exact-solution case at tau=" << format_g17(tau)
         << ": the amplitude is the constant 1, residual = " << format_g17(resid);
      S.line(zl.str());
      S.check("exact solution has vanishing residual", resid <= 1e-12,
              "residual " + format_g17(resid));
    }
  }
  w.close();
}

// ---------- decay ----------

struct DecayParams {
  StudyKind kind = StudyKind::rtau;
  StudyConfig scfg;
};

DecayParams parse_decay(RunConfig& cfg) {
  DecayParams p;
  std::string kind = cfg.require_string("decay.kind");
  if (kind == "rtau")
    p.kind = StudyKind::rtau;
  else if (kind == "ttau")
    p.kind = StudyKind::ttau;
  else if (kind == "tail")
    p.kind = StudyKind::tail;
  else if (kind == "correction")
    p.kind = StudyKind::correction;
  else
    throw ConfigError("decay.kind = `" + kind + "`: expected rtau, ttau, tail or correction");

  p.scfg.taus = cfg.require_reals("decay.taus");
  validate_ladder_cfg(p.scfg.taus, 4, "decay.taus");

  bool ttau = p.kind == StudyKind::ttau;
  p.scfg.n = cfg.get_int("decay.n", ttau ? 257 : (p.kind == StudyKind::correction ? 385 : 193));
  p.scfg.half = cfg.get_real("decay.half", ttau ? 0.5 : 1.5);
  p.scfg.y = cd(cfg.get_real("decay.y_re", 0.0), cfg.get_real("decay.y_im", 0.0));
  checked_grid(p.scfg.n, p.scfg.half, "decay.n/decay.half");

  if (ttau) {
    p.scfg.margin = cfg.get_real("decay.margin", 0.1);
    p.scfg.power_iters = cfg.get_int("decay.iters", 30);
    if (p.scfg.power_iters < 20) throw ConfigError("decay.iters must be >= 20");
    return p;
  }

  p.scfg.field = parse_potential(cfg, "potential", true);
  if (p.kind == StudyKind::tail) {
    p.scfg.series.max_terms = cfg.get_int("decay.max_terms", 10);
    p.scfg.series.tail_tol = cfg.get_real("decay.tail_tol", 1e-12);
    p.scfg.eps = cfg.get_real("decay.eps", 0.1);
  }
  if (p.kind == StudyKind::correction) {
    p.scfg.field2 = parse_potential(cfg, "potential2", true);
    p.scfg.eps = cfg.get_real("decay.eps", 0.1);
    std::string beta = cfg.get_string("decay.beta", "centered");
    if (beta == "centered")
      p.scfg.beta = BetaSource::centered;
    else if (beta == "mollified")
      p.scfg.beta = BetaSource::mollified;
    else
      throw ConfigError("decay.beta = `" + beta + "`: expected centered or mollified");
    p.scfg.omega_n = cfg.get_int("decay.omega_n", 257);
    p.scfg.omega_half = cfg.get_real("decay.omega_half", 1.0);
    if (p.scfg.omega_n > 0) checked_grid(p.scfg.omega_n, p.scfg.omega_half, "decay.omega_n");
  }
  return p;
}

void exec_decay(const DecayParams& p, const fs::path& out, Summary& S) {
  DecayStudy st = run_decay_study(p.kind, p.scfg);
  write_study_csv(st, (out / "study.csv").string());
  S.line("artifact: study.csv");
  S.line("quantity: " + st.quantity);
  S.value("slope", st.slope);
  S.value("fit_residual", st.fit_residual);
  std::string detail = "verdict " + st.verdict;
  if (!st.note.empty()) detail += "; " + st.note;
  S.check("decay target met", st.verdict == "pass", detail);
}

// ---------- phase ----------

struct PhaseParams {
  int n = 193;
  double half = 1.5;
  PotentialSpec spec;
  std::vector<double> taus;
  cd y{0, 0};
};

PhaseParams parse_phase(RunConfig& cfg) {
  PhaseParams p;
  p.n = cfg.get_int("grid.n", 193);
  p.half = cfg.get_real("grid.half", 1.5);
  p.spec = parse_potential(cfg, "potential", true);
  p.taus = cfg.require_reals("phase.taus");
  validate_ladder_cfg(p.taus, 3, "phase.taus");
  p.y = cd(cfg.get_real("phase.y_re", 0.0), cfg.get_real("phase.y_im", 0.0));
  checked_grid(p.n, p.half, "grid.n/grid.half");
  return p;
}

void exec_phase(const PhaseParams& p, const fs::path& out, Summary& S) {
  Grid2D pi = make_grid(p.n, p.n, -p.half, p.half, -p.half, p.half);
  ComplexField q = sample_potential(p.spec, pi);
  cd qy = interp_bilinear(q, p.y.real(), p.y.imag());
  if (std::abs(qy) < 1e-12)
    throw ConfigError("potential vanishes at the phase evaluation point; nothing to extract");

  ConstantFit fit = extract_constant_info(q, p.y, p.taus);

  CsvWriter w((out / "phase.csv").string(),
              {"tau", "y_re", "y_im", "integral_re", "integral_im", "tau_times_integral"});
  S.line("artifact: phase.csv");
  for (double tau : p.taus) {
    cd I = stationary_phase_integral(q, p.y, tau);
    w.cell(tau).cell(p.y.real()).cell(p.y.imag()).cell(I.real()).cell(I.imag()).cell(tau *
                                                                                     std::abs(I));
    w.end_row();
  }
  w.close();

  S.value("constant", fit.value);
  S.value("spread", fit.spread);
  S.value("ratio_to_2pi", fit.value / (2.0 * M_PI));
  S.check("constant extraction spread within 5%", fit.spread <= 0.05,
          "spread " + format_g17(fit.spread));
}

// ---------- pair ----------

struct PairParams {
  int n = 129;
  double half = 1.0;
  int modes = 0;
  PotentialSpec spec1, spec2;
  double tau = 6.0;
};

PairParams parse_pair(RunConfig& cfg) {
  PairParams p;
  p.n = cfg.get_int("grid.n", 129);
  p.half = cfg.get_real("grid.half", 1.0);
  Grid2D g = checked_grid(p.n, p.half, "grid.n/grid.half");
  int cap = boundary_count(g) / 4;
  p.modes = cfg.get_int("dtn.modes", std::min(128, cap));
  if (p.modes < 1 || p.modes > cap) {
    std::ostringstream os;
    os << "dtn.modes = " << p.modes << " outside [1, " << cap << "] for grid.n = " << p.n;
    throw ConfigError(os.str());
  }
  p.spec1 = parse_potential(cfg, "potential", true);
  p.spec2 = parse_potential(cfg, "potential2", true);
  p.tau = cfg.get_real("pair.tau", 6.0);
  if (!(p.tau > 0)) throw ConfigError("pair.tau must be positive");
  BoundaryFunction lay = make_boundary(g);
  double range = p.tau * max_boundary_re_phi(g, lay, cd(0, 0));
  if (range > 13.0) {
    std::ostringstream os;
    os << "pair.tau = " << p.tau << " puts the trace dynamic range at " << range
       << " (> 13); the pairing would drown in rounding noise";
    throw ConfigError(os.str());
  }
  return p;
}

void exec_pair(const PairParams& p, const fs::path& out, Summary& S) {
  Grid2D om = make_grid(p.n, p.n, -p.half, p.half, -p.half, p.half);
  ComplexField q1 = sample_potential(p.spec1, om);
  ComplexField q2 = sample_potential(p.spec2, om);
  DtNMap d1 = assemble_dtn(q1, p.modes);
  DtNMap d2 = assemble_dtn(q2, p.modes);

  BoundaryFunction lay = make_boundary(om);
  BoundaryFunction f, g;
  phase_traces_at(om, lay, cd(0, 0), p.tau, f, g);

  cd self = boundary_pairing(d1, d1, f, g);
  cd p12 = boundary_pairing(d1, d2, f, g);
  cd p21 = boundary_pairing(d2, d1, f, g);

  ComplexField u1 = solve_dirichlet(q1, f);
  ComplexField u2 = solve_dirichlet(q2, g);
  cd vol = 0;
  for (int i = 1; i < om.nx - 1; ++i)
    for (int j = 1; j < om.ny - 1; ++j)
      vol += (q1.at(i, j) - q2.at(i, j)) * u1.at(i, j) * u2.at(i, j);
  vol *= om.cell_area();

  double rel = std::abs(p12 - vol) / std::max(std::abs(vol), 1e-300);

  CsvWriter w((out / "pair.csv").string(),
              {"tau", "pairing_re", "pairing_im", "volume_re", "volume_im", "rel_err"});
  w.cell(p.tau).cell(p12.real()).cell(p12.imag()).cell(vol.real()).cell(vol.imag()).cell(rel);
  w.end_row();
  w.close();
  S.line("artifact: pair.csv");

  double scale = std::max(std::abs(p12), 1e-300);
  S.check("identical maps pair to zero", std::abs(self) <= 1e-10 * std::max(1.0, scale),
          "value " + format_g17(std::abs(self)));
  S.check("pairing matches the volume integral to 1e-3", rel <= 1e-3,
          "relative error " + format_g17(rel));
  S.check("swapping the potentials negates the pairing",
          std::abs(p12 + p21) <= 1e-10 * scale, "residual " + format_g17(std::abs(p12 + p21)));
  S.value("projection_error_f", trace_projection_error(d1, f));
  S.value("projection_error_g", trace_projection_error(d1, g));
}

// ---------- recover ----------

struct RecoverParams {
  int om_n = 0, pi_n = 0;
  double om_half = 1.0, pi_half = 1.5;
  int modes = 0;
  PotentialSpec spec;
  RecoveryConfig rc;
  int y_n = 1;
  double y_half = 0.0;
};

RecoverParams parse_recover(RunConfig& cfg) {
  RecoverParams p;
  p.om_n = cfg.require_int("grid.n");
  p.om_half = cfg.get_real("grid.half", 1.0);
  p.pi_n = cfg.require_int("pi.n");
  p.pi_half = cfg.get_real("pi.half", 1.5);
  Grid2D om = checked_grid(p.om_n, p.om_half, "grid.n/grid.half");
  Grid2D pi = checked_grid(p.pi_n, p.pi_half, "pi.n/pi.half");

  if (std::abs(om.hx - pi.hx) > 1e-12 * om.hx)
    throw ConfigError("grid.n and pi.n give different spacings; the grids must share a lattice");
  double off = (om.xmin - pi.xmin) / pi.hx;
  if (std::abs(off - std::round(off)) > 1e-9)
    throw ConfigError("grid and pi are not lattice-aligned; adjust pi.n or pi.half");

  int cap = boundary_count(om) / 4;
  p.modes = cfg.get_int("dtn.modes", std::min(128, cap));
  if (p.modes < 1 || p.modes > cap) {
    std::ostringstream os;
    os << "dtn.modes = " << p.modes << " outside [1, " << cap << "] for grid.n = " << p.om_n;
    throw ConfigError(os.str());
  }

  p.spec = parse_potential(cfg, "potential", true);
  p.rc.taus = cfg.require_reals("recover.taus");
  validate_ladder_cfg(p.rc.taus, 3, "recover.taus");
  double r0 = p.rc.taus[1] / p.rc.taus[0];
  for (size_t i = 1; i + 1 < p.rc.taus.size(); ++i)
    if (std::abs(p.rc.taus[i + 1] / p.rc.taus[i] / r0 - 1.0) > 0.1)
      throw ConfigError("recover.taus must form a geometric ladder (constant ratio within 10%)");

  p.y_n = cfg.get_int("recover.y_n", 1);
  p.y_half = cfg.get_real("recover.y_half", 0.0);
  if (p.y_n < 1) throw ConfigError("recover.y_n must be >= 1");
  if (p.y_n > 1 && !(p.y_half > 0))
    throw ConfigError("recover.y_half must be positive when recover.y_n > 1");
  if (p.y_n == 1)
    p.rc.ys = {cd(0, 0)};
  else
    for (int a = 0; a < p.y_n; ++a)
      for (int b = 0; b < p.y_n; ++b) {
        double step = 2.0 * p.y_half / (p.y_n - 1);
        p.rc.ys.push_back(cd(-p.y_half + a * step, -p.y_half + b * step));
      }

  p.rc.eps = cfg.get_real("recover.eps", 0.1);
  std::string source = cfg.get_string("recover.constant", "measured");
  if (source == "measured")
    p.rc.constant_source = ConstantSource::measured;
  else if (source == "two_pi")
    p.rc.constant_source = ConstantSource::two_pi;
  else
    throw ConfigError("recover.constant = `" + source + "`: expected measured or two_pi");
  p.rc.measured_constant = cfg.get_real("recover.constant_value", p.rc.measured_constant);
  p.rc.series.max_terms = cfg.get_int("recover.max_terms", 10);
  p.rc.series.tail_tol = cfg.get_real("recover.tail_tol", 1e-10);

  // fail fast on the recovery guards before any assembly starts
  BoundaryFunction lay = make_boundary(om);
  double tau_max = p.rc.taus.back();
  double h = std::max(om.hx, om.hy);
  for (cd y : p.rc.ys) {
    if (y.real() < om.xmin + 0.2 || y.real() > om.xmax - 0.2 || y.imag() < om.ymin + 0.2 ||
        y.imag() > om.ymax - 0.2)
      throw ConfigError("recover.y grid reaches within 0.2 of the boundary");
    double range = tau_max * max_boundary_re_phi(om, lay, y);
    if (range > 13.0) {
      std::ostringstream os;
      os << "recover.taus: trace dynamic range tau*max|Re Phi| = " << range
         << " exceeds 13; shrink the ladder or the y grid";
      throw ConfigError(os.str());
    }
    double ymax = std::max(std::abs(y.real()), std::abs(y.imag()));
    if (4.0 * tau_max * (1.0 + ymax) * h > M_PI / 2)
      throw ConfigError("recover.taus: grid too coarse to resolve the trace oscillation");
  }
  return p;
}

void exec_recover(const RecoverParams& p, const fs::path& out, Summary& S) {
  Grid2D om = make_grid(p.om_n, p.om_n, -p.om_half, p.om_half, -p.om_half, p.om_half);
  Grid2D pi = make_grid(p.pi_n, p.pi_n, -p.pi_half, p.pi_half, -p.pi_half, p.pi_half);
  CauchyKernelTable table(pi);
  ComplexField q_pi = sample_potential(p.spec, pi);
  ComplexField q_om = sample_potential(p.spec, om);
  PotentialSpec zero;
  ComplexField z_om = sample_potential(zero, om);

  DtNMap dq = assemble_dtn(q_om, p.modes);
  DtNMap d0 = assemble_dtn(z_om, p.modes);

  RecoveryResult res = recover_pointwise(dq, d0, q_pi, p.rc, table);
  S.value("constant_used", res.constant_used);

  double scale = std::max(max_abs(q_om), 1e-9);
  CsvWriter w((out / "qhat.csv").string(),
              {"y_re", "y_im", "qhat_re", "qhat_im", "truth", "rel_err", "tau_spread"});
  S.line("artifact: qhat.csv");
  bool none_flagged = true;
  for (const RecoveryPoint& pt : res.points) {
    cd truth = interp_bilinear(q_om, pt.y.real(), pt.y.imag());
    double rel = std::abs(pt.qhat - truth) / scale;
    w.cell(pt.y.real())
        .cell(pt.y.imag())
        .cell(pt.qhat.real())
        .cell(pt.qhat.imag())
        .cell(truth.real())
        .cell(rel)
        .cell(pt.tau_spread);
    w.end_row();
    if (pt.flagged) {
      none_flagged = false;
      std::ostringstream fl;
      fl << "flagged point y = (" << format_g17(pt.y.real()) << ", " << format_g17(pt.y.imag())
         << "): " << pt.note;
      S.line(fl.str());
    }
  }
  w.close();

  if (p.y_n >= 8) {
    Grid2D yg = make_grid(p.y_n, p.y_n, -p.y_half, p.y_half, -p.y_half, p.y_half);
    ComplexField qhat = make_field(yg);
    for (int a = 0; a < p.y_n; ++a)
      for (int b = 0; b < p.y_n; ++b) qhat.v[yg.idx(a, b)] = res.points[(size_t)a * p.y_n + b].qhat;
    write_field(qhat, (out / "qhat.cgo2").string());
    S.line("artifact: qhat.cgo2");
  } else {
    S.line("note: y grid smaller than 8x8, field container skipped (qhat.csv has the values)");
  }

  S.check("all evaluation points recovered without flags", none_flagged);
  if (res.points.size() == 1 && !res.points[0].flagged) {
    const RecoveryPoint& pt = res.points[0];
    cd truth = interp_bilinear(q_om, pt.y.real(), pt.y.imag());
    std::ostringstream rl;
    rl << "qhat = " << format_g17(pt.qhat.real()) << " truth = " << format_g17(truth.real())
       << " tau_spread = " << format_g17(pt.tau_spread);
    S.line(rl.str());
  }
}

// ---------- selftest ----------

void exec_selftest(const fs::path&, Summary& S) {
  // the decay judge must reject a constant (non-decaying) series
  std::vector<double> taus{10, 20, 40, 80};
  DecayStudy flat = judge_study("selftest_constant", StudyKind::rtau, taus, {1, 1, 1, 1});
  S.check("constant series rejected by the decay judge", flat.verdict == "fail",
          "verdict " + flat.verdict);
  DecayStudy clean = judge_study("selftest_clean", StudyKind::ttau, taus, {1, 0.5, 0.25, 0.125});
  S.check("clean 1/tau series accepted", clean.verdict == "pass", "verdict " + clean.verdict);

  // transform round trip on a small grid
  Grid2D pi = make_grid(129, 129, -1.5, 1.5, -1.5, 1.5);
  CauchyKernelTable table(pi);
  PotentialSpec gs;
  gs.kind = PotentialKind::gaussian;
  gs.width = 0.35;
  ComplexField g = sample_potential(gs, pi);
  ComplexField back = dbar(dbar_inv(g, table));
  double rel = l2_norm(sub(back, g)) / l2_norm(g);
  S.check("cauchy transform round trip within 1e-2", rel <= 1e-2, "error " + format_g17(rel));

  // forward assembly is deterministic
  Grid2D om = make_grid(33, 33, -1, 1, -1, 1);
  PotentialSpec qs;
  qs.kind = PotentialKind::gaussian;
  qs.width = 0.4;
  ComplexField q = sample_potential(qs, om);
  DtNMap a = assemble_dtn(q, 8);
  DtNMap b = assemble_dtn(q, 8);
  bool same = a.coeff == b.coeff && a.reference == b.reference;
  S.check("dtn assembly is bit-reproducible", same);
}

// ---------- dispatch ----------

fs::path resolve_out_dir(const std::string& sub, std::string flag) {
  if (flag.empty()) {
    const char* env = std::getenv("CGO_CALDERON_OUT");
    if (env && *env) flag = env;
  }
  if (!flag.empty()) {
    fs::path d(flag);
    if (fs::exists(d / "summary.txt"))
      throw ConfigError("output directory " + d.string() +
                        " already holds a completed run (summary.txt); refusing to overwrite");
    fs::create_directories(d);
    return d;
  }
  std::time_t t = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", std::localtime(&t));
  fs::path base = fs::path("runs") / (sub + "-" + stamp);
  fs::path d = base;
  for (int k = 1; fs::exists(d); ++k) {
    if (k > 999) throw ConfigError("cannot find a fresh output directory under runs/");
    d = base;
    d += "-" + std::to_string(k);
  }
  fs::create_directories(d);
  return d;
}

}  // namespace

RunOutcome run_cli(const std::string& subcommand, const std::string& config_path,
                   const std::string& out_dir_flag, int threads) {
  RunOutcome out;
  static const std::set<std::string> kSubs = {"forward", "cgo",     "decay",   "phase",
                                              "pair",    "recover", "selftest"};

  std::function<void(const fs::path&, Summary&)> exec;
  int threads_used = 1;
  fs::path dir;

  try {
    if (!kSubs.count(subcommand))
      throw ConfigError("unknown subcommand `" + subcommand +
                        "`; expected forward, cgo, decay, phase, pair, recover or selftest");
    RunConfig cfg = RunConfig::parse_file(config_path);
    threads_used = cfg.get_int("run.threads", 1);
    if (threads > 0) threads_used = threads;
    if (threads_used < 1) throw ConfigError("run.threads must be >= 1");

    if (subcommand == "forward") {
      auto p = parse_forward(cfg);
      exec = [p](const fs::path& d, Summary& s) { exec_forward(p, d, s); };
    } else if (subcommand == "cgo") {
      auto p = parse_cgo(cfg);
      exec = [p](const fs::path& d, Summary& s) { exec_cgo(p, d, s); };
    } else if (subcommand == "decay") {
      auto p = parse_decay(cfg);
      exec = [p](const fs::path& d, Summary& s) { exec_decay(p, d, s); };
    } else if (subcommand == "phase") {
      auto p = parse_phase(cfg);
      exec = [p](const fs::path& d, Summary& s) { exec_phase(p, d, s); };
    } else if (subcommand == "pair") {
      auto p = parse_pair(cfg);
      exec = [p](const fs::path& d, Summary& s) { exec_pair(p, d, s); };
    } else if (subcommand == "recover") {
      auto p = parse_recover(cfg);
      exec = [p](const fs::path& d, Summary& s) { exec_recover(p, d, s); };
    } else {
      exec = [](const fs::path& d, Summary& s) { exec_selftest(d, s); };
    }
    cfg.fail_unconsumed();
    dir = resolve_out_dir(subcommand, out_dir_flag);
  } catch (const ConfigError& e) {
    out.exit_code = 2;
    out.summary = std::string("config error: ") + e.what() + "\n";
    return out;
  }

  Summary S;
  S.line("subcommand: " + subcommand);
  S.line("config: " + config_path);
  {
    std::ostringstream ts;
    ts << "threads: " << threads_used << " (execution is serial; results are independent of this)";
    S.line(ts.str());
  }

  try {
    exec(dir, S);
  } catch (const std::exception& e) {
    S.line(std::string("error: ") + e.what());
    S.all_pass = false;
  }

  S.line(std::string("result: ") + (S.all_pass ? "pass" : "fail"));

  out.summary = S.text.str();
  out.out_dir = dir.string();
  std::ofstream f(dir / "summary.txt");
  f << out.summary;
  f.close();
  out.exit_code = S.all_pass ? 0 : 1;
  return out;
}

}  // namespace calderon
