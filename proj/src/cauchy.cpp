#include "calderon/cauchy.hpp"

#include <fftw3.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace calderon {

namespace {

// x1-derivative, centered interior, one-sided second order at edges
void deriv_x(const ComplexField& f, ComplexField& out) {
  const Grid2D& g = f.grid;
  double ih2 = 1.0 / (2.0 * g.hx);
  for (int j = 0; j < g.ny; ++j) {
    out.at(0, j) = (-3.0 * f.at(0, j) + 4.0 * f.at(1, j) - f.at(2, j)) * ih2;
    out.at(g.nx - 1, j) =
        (3.0 * f.at(g.nx - 1, j) - 4.0 * f.at(g.nx - 2, j) + f.at(g.nx - 3, j)) * ih2;
  }
  for (int i = 1; i < g.nx - 1; ++i)
    for (int j = 0; j < g.ny; ++j)
      out.at(i, j) = (f.at(i + 1, j) - f.at(i - 1, j)) * ih2;
}

void deriv_y(const ComplexField& f, ComplexField& out) {
  const Grid2D& g = f.grid;
  double ih2 = 1.0 / (2.0 * g.hy);
  for (int i = 0; i < g.nx; ++i) {
    out.at(i, 0) = (-3.0 * f.at(i, 0) + 4.0 * f.at(i, 1) - f.at(i, 2)) * ih2;
    out.at(i, g.ny - 1) =
        (3.0 * f.at(i, g.ny - 1) - 4.0 * f.at(i, g.ny - 2) + f.at(i, g.ny - 3)) * ih2;
  }
  for (int i = 0; i < g.nx; ++i)
    for (int j = 1; j < g.ny - 1; ++j)
      out.at(i, j) = (f.at(i, j + 1) - f.at(i, j - 1)) * ih2;
}

int next_smooth(int n) {
  // smallest integer >= n whose only prime factors are 2, 3, 5, 7
  for (int m = n;; ++m) {
    int r = m;
    for (int p : {2, 3, 5, 7})
      while (r % p == 0) r /= p;
    if (r == 1) return m;
  }
}

}  // namespace

ComplexField dbar(const ComplexField& f) {
  if (f.grid.nx < 8 || f.grid.ny < 8)
    throw std::invalid_argument("dbar: grid too small");
  ComplexField dx = make_field(f.grid), dy = make_field(f.grid);
  deriv_x(f, dx);
  deriv_y(f, dy);
  ComplexField out = make_field(f.grid);
  for (size_t k = 0; k < out.v.size(); ++k)
    out.v[k] = 0.5 * (dx.v[k] + cd(0, 1) * dy.v[k]);
  return out;
}

ComplexField dz(const ComplexField& f) {
  if (f.grid.nx < 8 || f.grid.ny < 8)
    throw std::invalid_argument("dz: grid too small");
  ComplexField dx = make_field(f.grid), dy = make_field(f.grid);
  deriv_x(f, dx);
  deriv_y(f, dy);
  ComplexField out = make_field(f.grid);
  for (size_t k = 0; k < out.v.size(); ++k)
    out.v[k] = 0.5 * (dx.v[k] - cd(0, 1) * dy.v[k]);
  return out;
}

struct CauchyKernelTable::Impl {
  Grid2D g;
  int kx, ky;              // difference-lattice dimensions (2nx-1, 2ny-1)
  std::vector<cd> ker;     // dbar kernel, index (a+nx-1)*ky + (b+ny-1)
  int Lx, Ly;              // padded convolution size
  std::vector<cd> kf_dbar; // FFT of padded dbar kernel
  std::vector<cd> kf_dz;   // FFT of padded conjugate kernel
  fftw_plan fwd = nullptr, bwd = nullptr;

  ~Impl() {
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

CauchyKernelTable::CauchyKernelTable(const Grid2D& g) : impl(new Impl) {
  if (g.nx < 8 || g.ny < 8) throw std::invalid_argument("CauchyKernelTable: grid too small");
  Impl& im = *impl;
  im.g = g;
  im.kx = 2 * g.nx - 1;
  im.ky = 2 * g.ny - 1;
  im.ker.assign((size_t)im.kx * im.ky, cd(0, 0));
  for (int a = -(g.nx - 1); a <= g.nx - 1; ++a)
    for (int b = -(g.ny - 1); b <= g.ny - 1; ++b) {
      cd val(0, 0);
      if (a != 0 || b != 0) {
        // -1/(pi*(zeta - z)) written in the difference d = z - zeta is +1/(pi*d)
        val = 1.0 / (M_PI * cd(a * g.hx, b * g.hy));
      }
      // (0,0): exact cell average of -1/(pi*zeta) over the centered cell,
      // which vanishes because the kernel is odd and the cell symmetric
      im.ker[(size_t)(a + g.nx - 1) * im.ky + (b + g.ny - 1)] = val;
    }

  im.Lx = next_smooth(g.nx + im.kx - 1);
  im.Ly = next_smooth(g.ny + im.ky - 1);
  size_t L = (size_t)im.Lx * im.Ly;

  fftw_complex* buf_in = fftw_alloc_complex(L);
  fftw_complex* buf_out = fftw_alloc_complex(L);
  if (!buf_in || !buf_out) throw std::runtime_error("CauchyKernelTable: fftw alloc failed");
  im.fwd = fftw_plan_dft_2d(im.Lx, im.Ly, buf_in, buf_out, FFTW_FORWARD, FFTW_ESTIMATE);
  im.bwd = fftw_plan_dft_2d(im.Lx, im.Ly, buf_in, buf_out, FFTW_BACKWARD, FFTW_ESTIMATE);
  if (!im.fwd || !im.bwd) throw std::runtime_error("CauchyKernelTable: fftw plan failed");

  auto kernel_fft = [&](bool conjugate, std::vector<cd>& dst) {
    std::memset(buf_in, 0, L * sizeof(fftw_complex));
    for (int a = 0; a < im.kx; ++a)
      for (int b = 0; b < im.ky; ++b) {
        cd v = im.ker[(size_t)a * im.ky + b];
        if (conjugate) v = std::conj(v);
        buf_in[(size_t)a * im.Ly + b][0] = v.real();
        buf_in[(size_t)a * im.Ly + b][1] = v.imag();
      }
    fftw_execute_dft(im.fwd, buf_in, buf_out);
    dst.resize(L);
    for (size_t k = 0; k < L; ++k) dst[k] = cd(buf_out[k][0], buf_out[k][1]);
  };
  kernel_fft(false, im.kf_dbar);
  kernel_fft(true, im.kf_dz);

  fftw_free(buf_in);
  fftw_free(buf_out);
}

CauchyKernelTable::~CauchyKernelTable() = default;

const Grid2D& CauchyKernelTable::grid() const { return impl->g; }

cd CauchyKernelTable::kernel_dbar(int a, int b) const {
  const Impl& im = *impl;
  if (std::abs(a) > im.g.nx - 1 || std::abs(b) > im.g.ny - 1)
    throw std::out_of_range("kernel_dbar: difference index out of range");
  return im.ker[(size_t)(a + im.g.nx - 1) * im.ky + (b + im.g.ny - 1)];
}

namespace {

ComplexField conv_fft(const ComplexField& g, const CauchyKernelTable::Impl& im,
                      const std::vector<cd>& kf) {
  size_t L = (size_t)im.Lx * im.Ly;
  fftw_complex* a = fftw_alloc_complex(L);
  fftw_complex* b = fftw_alloc_complex(L);
  if (!a || !b) throw std::runtime_error("dbar_inv: fftw alloc failed");

  std::memset(a, 0, L * sizeof(fftw_complex));
  const Grid2D& gr = g.grid;
  for (int i = 0; i < gr.nx; ++i)
    for (int j = 0; j < gr.ny; ++j) {
      cd v = g.at(i, j);
      a[(size_t)i * im.Ly + j][0] = v.real();
      a[(size_t)i * im.Ly + j][1] = v.imag();
    }
  fftw_execute_dft(im.fwd, a, b);
  double scale = gr.cell_area() / (double)L;  // quadrature weight and FFT normalization
  for (size_t k = 0; k < L; ++k) {
    cd v = cd(b[k][0], b[k][1]) * kf[k] * scale;
    a[k][0] = v.real();
    a[k][1] = v.imag();
  }
  fftw_execute_dft(im.bwd, a, b);

  ComplexField out = make_field(gr);
  for (int i = 0; i < gr.nx; ++i)
    for (int j = 0; j < gr.ny; ++j) {
      size_t k = (size_t)(i + gr.nx - 1) * im.Ly + (j + gr.ny - 1);
      out.at(i, j) = cd(b[k][0], b[k][1]);
    }
  fftw_free(a);
  fftw_free(b);
  return out;
}

ComplexField conv_dense(const ComplexField& g, const CauchyKernelTable::Impl& im,
                        bool conjugate) {
  const Grid2D& gr = g.grid;
  ComplexField out = make_field(gr);
  double area = gr.cell_area();
  for (int i = 0; i < gr.nx; ++i)
    for (int j = 0; j < gr.ny; ++j) {
      cd acc(0, 0);
      for (int p = 0; p < gr.nx; ++p)
        for (int q = 0; q < gr.ny; ++q) {
          cd k = im.ker[(size_t)(i - p + gr.nx - 1) * im.ky + (j - q + gr.ny - 1)];
          if (conjugate) k = std::conj(k);
          acc += k * g.at(p, q);
        }
      out.at(i, j) = acc * area;
    }
  return out;
}

}  // namespace

ComplexField dbar_inv(const ComplexField& g, const CauchyKernelTable& t, ConvMethod m) {
  if (!g.grid.same_as(t.impl->g))
    throw std::invalid_argument("dbar_inv: field grid does not match kernel table");
  if (m == ConvMethod::dense) return conv_dense(g, *t.impl, false);
  return conv_fft(g, *t.impl, t.impl->kf_dbar);
}

ComplexField dz_inv(const ComplexField& g, const CauchyKernelTable& t, ConvMethod m) {
  if (!g.grid.same_as(t.impl->g))
    throw std::invalid_argument("dz_inv: field grid does not match kernel table");
  if (m == ConvMethod::dense) return conv_dense(g, *t.impl, true);
  return conv_fft(g, *t.impl, t.impl->kf_dz);
}

}  // namespace calderon
