#ifndef CALDERON_CAUCHY_HPP
#define CALDERON_CAUCHY_HPP

#include <memory>

#include "calderon/grid.hpp"

namespace calderon {

/// Forward Wirtinger derivatives, second order (centered interior,
/// one-sided at edges). dbar = (d/dx1 + i d/dx2)/2, dz = (d/dx1 - i d/dx2)/2.
ComplexField dbar(const ComplexField& f);
ComplexField dz(const ComplexField& f);

enum class ConvMethod { fft, dense };

/// Precomputed kernel table for the solid Cauchy transforms on one grid.
/// Holds samples of -1/(pi*zeta) on the (2nx-1) x (2ny-1) difference lattice
/// (singular cell replaced by its exact cell average, which is 0 by odd
/// symmetry) and the padded FFT of the kernel for fast convolution.
/// Immutable after build; concurrent application to different fields is safe.
class CauchyKernelTable {
 public:
  explicit CauchyKernelTable(const Grid2D& g);
  ~CauchyKernelTable();
  CauchyKernelTable(const CauchyKernelTable&) = delete;
  CauchyKernelTable& operator=(const CauchyKernelTable&) = delete;

  const Grid2D& grid() const;
  /// Kernel sample at difference index (a, b), i.e. -1/(pi*(zeta-z)) written
  /// in d = z - zeta = (a*hx, b*hy), which is 1/(pi*d); a in [-(nx-1), nx-1],
  /// b likewise; the (0,0) cell holds the exact cell average 0.
  cd kernel_dbar(int a, int b) const;

  struct Impl;
  std::unique_ptr<Impl> impl;
};

/// Discrete solid Cauchy transform: dbar_inv(g)(z) approximates
/// -(1/pi) integral g(zeta)/(zeta - z). Satisfies dbar(dbar_inv(g)) ~ g.
ComplexField dbar_inv(const ComplexField& g, const CauchyKernelTable& t,
                      ConvMethod m = ConvMethod::fft);

/// Conjugate transform with kernel -1/(pi*conj(zeta - z)); dz(dz_inv(g)) ~ g.
ComplexField dz_inv(const ComplexField& g, const CauchyKernelTable& t,
                    ConvMethod m = ConvMethod::fft);

}  // namespace calderon

#endif
