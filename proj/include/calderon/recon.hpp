#ifndef CALDERON_RECON_HPP
#define CALDERON_RECON_HPP

#include <string>
#include <vector>

#include "calderon/cauchy.hpp"
#include "calderon/cgo.hpp"
#include "calderon/forward.hpp"
#include "calderon/grid.hpp"

namespace calderon {

/// Coefficient-space pairing of two boundary traces against a DtN
/// difference. Both traces are projected onto the common boundary basis of
/// the maps; the return value is g^T (L2 - L1) f with the bilinear
/// (unconjugated) arc-length product, oriented so that it equals the
/// volume integral int (q1 - q2) u1 u2 dx when u1 solves with q1 and
/// boundary data f, u2 with q2 and data g. Throws on basis mismatch.
cd boundary_pairing(const DtNMap& dtn1, const DtNMap& dtn2,
                    const BoundaryFunction& u_trace, const BoundaryFunction& v_trace);

/// Weighted relative L2 distance between a trace and its projection onto
/// the map's boundary modes. Zero trace yields 0.
double trace_projection_error(const DtNMap& map, const BoundaryFunction& f);

enum class ConstantSource { measured, two_pi };

struct RecoveryConfig {
  std::vector<double> taus;  // geometric ladder, >= 3 ascending values
  std::vector<cd> ys;        // evaluation points, >= 0.2 inside the map domain
  double eps = 0.1;          // mollification radius for the series centering
  ConstantSource constant_source = ConstantSource::measured;
  // stationary-phase constant for the measured mode; replace with an
  // extract_constant run on the actual potential when available
  double measured_constant = 1.5707963267948966;
  NeumannSeriesConfig series;  // tau and beta1 are overwritten per ladder entry
};

struct RecoveryPoint {
  cd y;
  cd qhat{0, 0};  // NaN when flagged
  bool flagged = false;
  std::string note;
  std::vector<double> taus;
  std::vector<cd> per_tau;  // tau * pairing / c for each ladder entry
  double tau_spread = 0;    // |v_n - v_{n-1}| / |qhat|
  double proj_err_f = 0;    // worst trace projection error over the ladder
  double proj_err_g = 0;
};

struct RecoveryResult {
  std::vector<RecoveryPoint> points;
  double constant_used = 0;
};

/// Pointwise recovery q_hat(y) = tau * pairing / c, Richardson-extrapolated
/// over the tau ladder (1/tau^2 model on the top pair). q_pi is the target
/// potential sampled on the covering grid of `table`; the map domain is read
/// from dtn_q. Points where the series fails to converge are flagged, not
/// interpolated. Throws when the ladder is not geometric, a point sits too
/// close to the boundary, the trace dynamic range tau*max|Re Phi| exceeds
/// what double precision can carry through the pairing (> 13), or the grid
/// cannot resolve the oscillation of the largest tau.
RecoveryResult recover_pointwise(const DtNMap& dtn_q, const DtNMap& dtn_0,
                                 const ComplexField& q_pi, const RecoveryConfig& cfg,
                                 const CauchyKernelTable& table);

/// Where the centering constants beta come from: `centered` evaluates the
/// exact discrete transforms of q1/q2 at y (so the assembled field vanishes
/// at y exactly); `mollified` evaluates the transforms of the eps-mollified
/// potentials instead.
enum class BetaSource { centered, mollified };

/// The quadratic correction field
///   g = 1/4 [ dz_inv(q) (dbar_inv(q1) - beta1) + dbar_inv(q) (dz_inv(q2) - beta2) ],
/// q = q1 - q2, beta1 = dbar_inv(q1)(y), beta2 = dz_inv(q2)(y) (or their
/// mollified variants). Both potentials must live on the table's grid.
ComplexField correction_terms(const ComplexField& q1, const ComplexField& q2, cd y,
                              BetaSource beta, double eps, const CauchyKernelTable& table);

enum class StudyKind { rtau, ttau, tail, correction };

struct StudyConfig {
  std::vector<double> taus;  // >= 4 ascending values
  int n = 193;               // build grid points per side
  double half = 1.5;         // build domain half-side
  PotentialSpec field;       // rtau: the transformed field; tail: q; correction: q1
  PotentialSpec field2;      // correction: q2
  cd y{0, 0};
  NeumannSeriesConfig series;  // tail: term and tolerance control
  BetaSource beta = BetaSource::centered;
  double eps = 0.1;
  int omega_n = 0;  // correction: restrict the field to a centered square first
  double omega_half = 1.0;
  double margin = 0.1;   // ttau window margin
  int power_iters = 30;  // ttau power iteration steps
};

struct DecayStudy {
  std::string quantity;
  StudyKind kind = StudyKind::rtau;
  std::vector<double> taus;
  std::vector<double> values;
  double slope = 0;
  double intercept = 0;
  double fit_residual = 0;  // rms log-log fit residual
  std::string verdict;      // "pass", "fail", or "inconclusive"
  std::string note;
};

/// Verdict logic alone, separated so synthetic series can be injected:
/// rtau passes when slope <= -0.8, ttau when slope is in [-1.15,-0.85]
/// (both inconclusive when the fit residual exceeds 0.15 or a value is
/// nonpositive); tail and correction pass when tau*value strictly
/// decreases. Requires >= 4 tau values.
DecayStudy judge_study(const std::string& quantity, StudyKind kind,
                       const std::vector<double>& taus, const std::vector<double>& values);

/// Run the measurement for one study kind and judge it. rtau measures
/// ||r_tilde_tau(field)|| / ||field||; ttau measures power-iteration norm
/// estimates of T_tau on the (-half,half)^2 grid; tail measures the norm of
/// the series remainder sum_{j>=2} (-1)^j U_j; correction measures
/// |stationary_phase_integral| of the centered correction field.
DecayStudy run_decay_study(StudyKind kind, const StudyConfig& cfg);

/// CSV with columns tau, value, tau_times_value (17 significant digits).
void write_study_csv(const DecayStudy& study, const std::string& path);

}  // namespace calderon

#endif
