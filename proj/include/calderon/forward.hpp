#ifndef CALDERON_FORWARD_HPP
#define CALDERON_FORWARD_HPP

#include <string>
#include <vector>

#include "calderon/grid.hpp"

namespace calderon {

/// Function values on the boundary nodes of a Grid2D, ordered
/// counterclockwise from the bottom-left corner: bottom row west to east,
/// right column south to north, top row east to west, left column north to
/// south. Count is 2(nx+ny)-4.
///
/// weight[b] is a per-node face weight: hx for interior nodes of the
/// bottom/top sides, hy for the left/right sides, 0 at the four corners.
/// A corner node is never read by the interior 5-point stencil, so it has
/// no flux face; with these weights the discrete Green identity below is
/// exact, not just second-order accurate.
struct BoundaryFunction {
  int nx = 0, ny = 0;
  std::vector<cd> values;
  std::vector<double> weight;
  std::vector<double> s;    // arc length from the bottom-left corner
  std::vector<int> gi, gj;  // grid indices of each boundary node
};

int boundary_count(const Grid2D& g);  // 2(nx+ny)-4

/// Layout (s, weights, grid indices) for g, values all zero.
BoundaryFunction make_boundary(const Grid2D& g);

/// Boundary values of a field.
BoundaryFunction boundary_restrict(const ComplexField& u);

/// Bilinear pairing sum_b weight[b] a[b] b[b]. No conjugation; this is the
/// form in which the Dirichlet-to-Neumann matrices are symmetric.
cd boundary_dot(const BoundaryFunction& a, const BoundaryFunction& b);

/// Solve (lap + q) u = 0 on the grid of q with Dirichlet data f. Boundary
/// values are copied verbatim; interior nodes satisfy the 5-point scheme
/// exactly (sparse LU, no iteration). Throws when the factorization fails
/// or a condition probe exceeds 1e12, i.e. when 0 is numerically a
/// Dirichlet eigenvalue of lap + q.
ComplexField solve_dirichlet(const ComplexField& q, const BoundaryFunction& f);

enum class FluxScheme {
  /// (u_B - u_in)/h across the single face between a boundary node and its
  /// interior neighbour. First order, but the summation-by-parts partner of
  /// the interior scheme: with the face weights,
  ///   sum_B w_B [du1/dnu u2 - u1 du2/dnu] = sum_int (q2 - q1) u1 u2 hx hy
  /// holds to rounding for solutions u1, u2 of (lap + q_i) u = 0.
  /// Corner values are set to 0 (no face).
  face,
  /// One-sided second order (3 u_B - 4 u_1 + u_2)/(2h) along the outward
  /// normal; corners average the two adjacent side formulas. Exact on
  /// linear fields, O(h^2) on smooth ones.
  onesided,
};

BoundaryFunction neumann_trace(const ComplexField& u,
                               FluxScheme scheme = FluxScheme::onesided);

/// Dirichlet-to-Neumann matrix of lap + q in an orthonormal trigonometric
/// boundary basis, together with the q = 0 reference map assembled on the
/// same grid and basis (the pair is what the inversion differences).
/// Entry coeff[r*M + k]: coefficient r of the Neumann trace of the solution
/// whose Dirichlet data is basis mode k.
struct DtNMap {
  int M = 0;
  int nx = 0, ny = 0;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;
  std::string basis = "trig-arclength";
  std::vector<cd> coeff;       // M x M row-major, potential q
  std::vector<cd> reference;   // M x M row-major, q = 0
  std::vector<double> modes;   // M x Nb row-major: modes[m*Nb + b]
  std::vector<double> weight;  // face weights, Nb entries

  bool same_basis(const DtNMap& o) const;
};

/// First M of {1, cos(2 pi s/L), sin(2 pi s/L), cos(4 pi s/L), ...} in the
/// arc-length parameter s, Gram-Schmidt orthonormalized under the
/// face-weight form sum_b w_b a_b b_b. Requires 1 <= M <= boundary count/4
/// (keeps every mode far below the boundary Nyquist limit).
std::vector<BoundaryFunction> boundary_modes(const Grid2D& g, int M);

/// Factor lap + q and lap once each, solve the M basis modes against both,
/// and project the Neumann traces back onto the basis. The solves reuse the
/// shared immutable factorization and are annotated with the failing mode
/// index on error.
DtNMap assemble_dtn(const ComplexField& q, int M = 32,
                    FluxScheme scheme = FluxScheme::face);

/// Coefficients of f in the map's basis (face-weight form), length M.
std::vector<cd> boundary_coeffs(const DtNMap& map, const BoundaryFunction& f);

/// Boundary function with values sum_m c[m] mode_m.
BoundaryFunction boundary_expand(const DtNMap& map, const std::vector<cd>& c);

// --- serialization ---
// CSV: one header line (M, grid, basis), then the coeff matrix row-major
// (re/im interleaved, 17 significant digits), then the reference matrix.
// Binary: the CGO2 container with sub-magic DTN1; u32 M, nx, ny; f64 bounds;
// coeff then reference as (re,im) f64 pairs row-major. Little-endian.
// Readers rebuild modes and weights from the stored grid descriptor.

void write_dtn_csv(const DtNMap& map, const std::string& path);
DtNMap read_dtn_csv(const std::string& path);
void write_dtn(const DtNMap& map, const std::string& path);
DtNMap read_dtn(const std::string& path);

}  // namespace calderon

#endif
