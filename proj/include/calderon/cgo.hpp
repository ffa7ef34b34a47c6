#ifndef CALDERON_CGO_HPP
#define CALDERON_CGO_HPP

#include <string>
#include <utility>
#include <vector>

#include "calderon/cauchy.hpp"
#include "calderon/grid.hpp"

namespace calderon {

/// Quadratic holomorphic phase Phi(z) = (z - y)^2 centered at y.
/// Im Phi = 2(x1-y1)(x2-y2); dPhi = 2(z-y).
struct PhaseFunction {
  cd y;

  cd phi(cd z) const { return (z - y) * (z - y); }
  cd dphi(cd z) const { return 2.0 * (z - y); }
  double im_phi(cd z) const { return 2.0 * (z.real() - y.real()) * (z.imag() - y.imag()); }
  /// real phase psi with e^{tau(Phi - conj Phi)} = e^{2 i tau psi}; psi = Im Phi
  double psi(cd z) const { return im_phi(z); }
};

/// Pointwise Phi and dPhi on a grid.
std::pair<ComplexField, ComplexField> phase_eval(cd y, const Grid2D& g);

/// The oscillatory weight e^{tau(Phi - conj Phi)} = e^{i 4 tau (x1-y1)(x2-y2)},
/// computed from the exact imaginary part (unit modulus everywhere).
ComplexField osc_weight(const PhaseFunction& ph, double tau, const Grid2D& g);

/// Weight convention for r_tau: `antisymmetric` uses e^{tau(conj Phi - Phi)}
/// inside the transform (mirror of r_tilde_tau); `printed` applies no inner
/// weight (the literal transcription of the source display, kept for
/// comparison).
enum class RTauWeight { antisymmetric, printed };

/// R~_tau g = 1/2 e^{tau(conj Phi - Phi)} dz_inv(g e^{tau(Phi - conj Phi)}).
ComplexField r_tilde_tau(const ComplexField& g, const PhaseFunction& ph, double tau,
                         const CauchyKernelTable& table);

/// R_tau g = 1/2 e^{tau(Phi - conj Phi)} dbar_inv(g e^{tau(conj Phi - Phi)}).
ComplexField r_tau(const ComplexField& g, const PhaseFunction& ph, double tau,
                   const CauchyKernelTable& table,
                   RTauWeight w = RTauWeight::antisymmetric);

/// Whether the v-series recursion carries the same 1/2 factor as the u-series
/// (`symmetric`, default: makes v an exact series solution and the exact
/// conjugate mirror of u) or omits it (`literal` transcription).
enum class VSeriesHalf { symmetric, literal };

struct NeumannSeriesConfig {
  double tau = 0;
  int max_terms = 8;       // J
  double tail_tol = 1e-6;
  cd beta1{0, 0}, beta2{0, 0};
  VSeriesHalf v_half = VSeriesHalf::symmetric;
};

/// Truncated CGO series. sign = +1: u = e^{tau Phi} * amplitude with
/// amplitude = sum_j (-1)^j U_j; sign = -1: v = e^{-tau conj Phi} * amplitude.
struct CgoSolution {
  PhaseFunction phase;
  double tau = 0;
  int sign = +1;
  std::vector<ComplexField> terms;   // U_0 (==1), U_1, ..., U_J
  ComplexField amplitude;            // signed partial sum
  std::vector<double> term_norms;    // L2 norms of the terms
  double max_ratio = 0;              // max over j>=2 of norm ratio
  bool converged = true;
  std::string message;
};

/// u-series: U_0 = 1, U_1 = R~_tau(1/2 (dbar_inv q1 - beta1)),
/// U_j = R~_tau(1/2 dbar_inv(q1 U_{j-1})). Terms computed until the tail
/// tolerance or max_terms is reached; a ratio >= 1 marks non-convergence
/// (reported in `converged`/`message`, construction still completes).
CgoSolution build_u1_series(const ComplexField& q1, const NeumannSeriesConfig& cfg, cd y,
                            const CauchyKernelTable& table);

/// v-series: V_0 = 1, V_1 = R_{-tau}(k (dz_inv q2 - beta2)),
/// V_j = R_{-tau}(k dz_inv(q2 V_{j-1})), k = 1/2 or 1 per cfg.v_half.
/// Implemented as the exact conjugate of a u-series core at -tau on conj(q2).
CgoSolution build_v_series(const ComplexField& q2, const NeumannSeriesConfig& cfg, cd y,
                           const CauchyKernelTable& table);

/// Evaluate the solution (weight times amplitude) at one grid node.
/// The exponential weight is evaluated analytically, never differenced.
cd solution_value(const CgoSolution& sol, int i, int j);

/// Relative interior L2 norm of (Delta + q) applied to the full solution,
/// computed in conjugated form: the stencil acts on the amplitude A while
/// the weight's derivatives enter analytically,
///   sign=+1:  Delta_h A + 4 tau dPhi dbar_h A + q A,
///   sign=-1:  Delta_h A - 4 tau conj(dPhi) dz_h A + q A,
/// measured on nodes >= 0.15 from the boundary and normalized by
/// (1 + tau) * ||A||_2 on the same subgrid.
double schrodinger_residual(const CgoSolution& sol, const ComplexField& q);

}  // namespace calderon

#endif
