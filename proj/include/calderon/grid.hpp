#ifndef CALDERON_GRID_HPP
#define CALDERON_GRID_HPP

#include <complex>
#include <string>
#include <vector>

namespace calderon {

using cd = std::complex<double>;

/// Uniform tensor grid on a rectangle. Node (i,j) sits at
/// (xmin + i*hx, ymin + j*hy); i runs along x1, j along x2.
struct Grid2D {
  int nx = 0, ny = 0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  double hx = 0, hy = 0;

  double x(int i) const { return xmin + i * hx; }
  double y(int j) const { return ymin + j * hy; }
  cd z(int i, int j) const { return cd(x(i), y(j)); }
  int size() const { return nx * ny; }
  int idx(int i, int j) const { return i * ny + j; }
  double cell_area() const { return hx * hy; }
  bool same_as(const Grid2D& o) const;
};

Grid2D make_grid(int nx, int ny, double xmin, double xmax, double ymin, double ymax);

/// Complex-valued function sampled on a Grid2D, row-major (index i*ny + j).
struct ComplexField {
  Grid2D grid;
  std::vector<cd> v;

  cd& at(int i, int j) { return v[grid.idx(i, j)]; }
  const cd& at(int i, int j) const { return v[grid.idx(i, j)]; }
};

ComplexField make_field(const Grid2D& g);

enum class PotentialKind { zero, gaussian, two_bumps, disk_indicator, file };

struct PotentialSpec {
  PotentialKind kind = PotentialKind::zero;
  double amplitude = 1.0;
  double cx = 0.0, cy = 0.0;  // center
  double width = 0.3;         // gaussian width / disk radius / bump separation scale
  std::string path;           // kind == file
};

/// Sample a potential at the grid nodes. Output is real-valued
/// (imaginary parts exactly zero).
ComplexField sample_potential(const PotentialSpec& spec, const Grid2D& g);

/// Convolve with the compactly supported bump exp(1/((r/eps)^2 - 1)),
/// normalized to exact unit mass on the grid. Requires eps >= 2*max(hx,hy).
ComplexField mollify(const ComplexField& q, double eps);

/// Copy q onto the larger grid `big`, zero outside. Node lattices must be
/// compatible (same spacings, aligned offsets).
ComplexField extend_zero(const ComplexField& q, const Grid2D& big);

/// Extract the values of f on a sub-grid `sub` whose nodes are a subset of
/// f's lattice. Inverse of extend_zero on the original grid.
ComplexField restrict_to(const ComplexField& f, const Grid2D& sub);

// --- field arithmetic and reductions (fixed-order summation throughout) ---

double l2_norm(const ComplexField& f);              // sqrt(sum |f|^2 * cell area)
double lp_norm(const ComplexField& f, double p);    // (sum |f|^p * cell area)^(1/p)
double max_abs(const ComplexField& f);
cd cell_sum(const ComplexField& f);                 // sum f * cell area
ComplexField conj_field(const ComplexField& f);
ComplexField add(const ComplexField& a, const ComplexField& b);
ComplexField sub(const ComplexField& a, const ComplexField& b);
ComplexField mul(const ComplexField& a, const ComplexField& b);  // pointwise
ComplexField scale(const ComplexField& a, cd s);

/// Bilinear interpolation of f at an arbitrary point inside the grid.
cd interp_bilinear(const ComplexField& f, double px, double py);

// --- binary field I/O, format "CGO2" ---
// magic 'C','G','O','2'; u32 nx, ny; f64 xmin,xmax,ymin,ymax,hx,hy;
// then nx*ny (re,im) f64 pairs row-major. Little-endian.

void write_field(const ComplexField& f, const std::string& path);
ComplexField read_field(const std::string& path);

}  // namespace calderon

#endif
