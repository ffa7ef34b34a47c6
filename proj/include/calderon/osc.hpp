#ifndef CALDERON_OSC_HPP
#define CALDERON_OSC_HPP

#include <vector>

#include "calderon/cgo.hpp"
#include "calderon/grid.hpp"

namespace calderon {

/// C-infinity monotone step: 0 for s <= 0, 1 for s >= 1, B(s)/(B(s)+B(1-s))
/// with B(s) = exp(-1/s) in between.
double smooth_step01(double s);

/// Oscillatory integral operator
///   T_tau f(x) = sum_y e^{-i tau psi(x,y)} a(x,y) f(y) * cell_area,
/// psi(x,y) = 2(x1-y1)(x2-y2), a(x,y) = chi(x) chi(y) with a tensor-product
/// window chi that is 0 within `margin` of the boundary and 1 at distance
/// >= (5/3) margin (so margin = 0.1*side puts the plateau edge at 1/6 side,
/// which on the covering grid makes chi identically 1 on the inner square).
struct OscillatoryOperator {
  Grid2D grid;
  double tau = 0;
  double margin = 0;  // 0 means the default 0.1 * min side
};

/// Per-axis window profile at coordinate t in [lo, hi].
double window_axis(double t, double lo, double hi, double margin);

/// The full 2-D window chi(x1)chi(x2) sampled on the operator grid.
ComplexField window2d(const OscillatoryOperator& op);

enum class ApplyMethod { separable, dense };

/// Apply T_tau. The separable path re-associates the phase
/// e^{-i tau psi} = e^{-2i tau x1 x2} e^{2i tau x1 y2} e^{2i tau y1 x2}
/// e^{-2i tau y1 y2} into two O(n^3) passes; the dense path is the direct
/// O(n^4) quadrature oracle. Both are deterministic (fixed summation order).
/// Throws when tau is too large for the grid to resolve the kernel
/// (alias stationary point inside the window support).
ComplexField apply_T_tau(const ComplexField& f, const OscillatoryOperator& op,
                         ApplyMethod method = ApplyMethod::separable);

struct OpNormInfo {
  double norm = 0;       // sqrt of top eigenvalue of T*T
  double gap = 0;        // relative change of the estimate in the last step
  int iters = 0;
  bool converged = false;
};

/// Power iteration on T*T with the all-ones seed, cell-weighted inner
/// products; T* = T_{-tau} since psi is symmetric in (x,y). Requires
/// iters >= 20. Deterministic.
OpNormInfo estimate_op_norm_info(const OscillatoryOperator& op, int iters);
double estimate_op_norm(const OscillatoryOperator& op, int iters);

/// Cell-weighted quadrature of q e^{tau(Phi-conj Phi)} over the field's grid,
/// the weight centered at y. y must be at distance >= 0.2 from the boundary.
/// Throws when the field is not small near the quadrature alias shell
/// |u| = 2 pi / (4 tau h) (the integral would be polluted).
cd stationary_phase_integral(const ComplexField& q, cd y, double tau);

struct ConstantFit {
  double value = 0;           // Richardson limit of tau*I/q(y), 1/tau^2 model
  double spread = 0;          // (max-min over top 3 raw values) / |value|
  std::vector<double> raw;    // tau_j * Re(I_j / q(y)) per ladder entry
};

/// Empirical limit of tau * I(tau,y) / q(y) over a geometric tau ladder
/// (>= 3 values). Throws when q(y) is numerically zero.
ConstantFit extract_constant_info(const ComplexField& q, cd y,
                                  const std::vector<double>& taus);
double extract_constant(const ComplexField& q, cd y, const std::vector<double>& taus);

}  // namespace calderon

#endif
