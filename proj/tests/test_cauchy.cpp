#include <doctest.h>

#include <cmath>
#include <complex>

#include "calderon/cauchy.hpp"
#include "calderon/grid.hpp"

using namespace calderon;

namespace {

ComplexField sample(const Grid2D& g, cd (*fn)(cd)) {
  ComplexField f = make_field(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) f.at(i, j) = fn(g.z(i, j));
  return f;
}

double rel_l2_interior(const ComplexField& a, const ComplexField& b, double margin) {
  // relative L2 distance over nodes at least `margin` from the boundary
  const Grid2D& g = a.grid;
  double num = 0, den = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      double dist = std::min(std::min(g.x(i) - g.xmin, g.xmax - g.x(i)),
                             std::min(g.y(j) - g.ymin, g.ymax - g.y(j)));
      if (dist >= margin) {
        num += std::norm(a.at(i, j) - b.at(i, j));
        den += std::norm(b.at(i, j));
      }
    }
  return std::sqrt(num / den);
}

ComplexField interior_gaussian(const Grid2D& g, double w) {
  PotentialSpec s;
  s.kind = PotentialKind::gaussian;
  s.width = w;
  return sample_potential(s, g);
}

}  // namespace

TEST_SUITE_BEGIN("cauchy");

TEST_CASE("dbar and dz are exact on linear functions") {
  Grid2D g = make_grid(33, 33, -1, 1, -1, 1);
  ComplexField fbar = sample(g, +[](cd z) { return std::conj(z); });
  ComplexField d1 = dbar(fbar);
  ComplexField d2 = dz(fbar);
  for (const auto& c : d1.v) CHECK(std::abs(c - cd(1, 0)) < 1e-10);
  for (const auto& c : d2.v) CHECK(std::abs(c) < 1e-10);

  ComplexField fz = sample(g, +[](cd z) { return z; });
  ComplexField d3 = dbar(fz);
  ComplexField d4 = dz(fz);
  for (const auto& c : d3.v) CHECK(std::abs(c) < 1e-10);
  for (const auto& c : d4.v) CHECK(std::abs(c - cd(1, 0)) < 1e-10);
}

TEST_CASE("dbar is second order on exp(conj(z)^2)") {
  auto fn = +[](cd z) { return std::exp(std::conj(z) * std::conj(z)); };
  auto dfn = +[](cd z) { return 2.0 * std::conj(z) * std::exp(std::conj(z) * std::conj(z)); };
  double prev = -1;
  for (int n : {33, 65, 129}) {
    Grid2D g = make_grid(n, n, -1, 1, -1, 1);
    ComplexField f = sample(g, fn);
    ComplexField want = sample(g, dfn);
    ComplexField got = dbar(f);
    double err = 0;
    for (int i = 1; i < g.nx - 1; ++i)
      for (int j = 1; j < g.ny - 1; ++j)
        err = std::max(err, std::abs(got.at(i, j) - want.at(i, j)));
    if (prev > 0) CHECK(err < prev / 3.0);  // ~4x per halving
    prev = err;
  }
}

TEST_CASE("dz is second order on z^2") {
  double prev = -1;
  for (int n : {33, 65, 129}) {
    Grid2D g = make_grid(n, n, -1, 1, -1, 1);
    ComplexField f = sample(g, +[](cd z) { return z * z; });
    ComplexField got = dz(f);
    double err = 0;
    for (int i = 0; i < g.nx; ++i)
      for (int j = 0; j < g.ny; ++j)
        err = std::max(err, std::abs(got.at(i, j) - 2.0 * g.z(i, j)));
    // z^2 is quadratic: second-order differences are exact on it
    CHECK(err < 1e-11);
    prev = err;
  }
}

TEST_CASE("singular cell average matches local quadrature") {
  // closed form: the average of -1/(pi*zeta) over the centered cell is 0
  // by odd symmetry. Cross-check with a 100x100 midpoint quadrature.
  Grid2D g = make_grid(17, 17, -1, 1, -1, 1);
  CauchyKernelTable t(g);
  cd closed = t.kernel_dbar(0, 0);
  CHECK(closed == cd(0, 0));
  cd quad(0, 0);
  int m = 100;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) {
      double x = (-0.5 + (a + 0.5) / m) * g.hx;
      double y = (-0.5 + (b + 0.5) / m) * g.hy;
      quad += -1.0 / (M_PI * cd(x, y));
    }
  quad /= (double)(m * m);
  CHECK(std::abs(quad - closed) < 1e-10);
}

TEST_CASE("dbar_inv of zero is zero") {
  Grid2D g = make_grid(17, 17, -1, 1, -1, 1);
  CauchyKernelTable t(g);
  ComplexField z = make_field(g);
  ComplexField r = dbar_inv(z, t);
  for (const auto& c : r.v) CHECK(c == cd(0, 0));
}

TEST_CASE("fft and dense paths agree") {
  Grid2D g = make_grid(65, 65, -1, 1, -1, 1);
  CauchyKernelTable t(g);
  ComplexField q = interior_gaussian(g, 0.4);
  // make it complex-valued to exercise both parts
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) q.at(i, j) *= cd(1.0, 0.3 * g.x(i));
  ComplexField a = dbar_inv(q, t, ConvMethod::fft);
  ComplexField b = dbar_inv(q, t, ConvMethod::dense);
  double num = 0, den = 0;
  for (size_t k = 0; k < a.v.size(); ++k) {
    num += std::norm(a.v[k] - b.v[k]);
    den += std::norm(b.v[k]);
  }
  CHECK(std::sqrt(num / den) < 1e-11);

  ComplexField c1 = dz_inv(q, t, ConvMethod::fft);
  ComplexField c2 = dz_inv(q, t, ConvMethod::dense);
  num = den = 0;
  for (size_t k = 0; k < c1.v.size(); ++k) {
    num += std::norm(c1.v[k] - c2.v[k]);
    den += std::norm(c2.v[k]);
  }
  CHECK(std::sqrt(num / den) < 1e-11);
}

TEST_CASE("dbar_inv of the unit disk indicator is conj(z) inside") {
  // classical identity: -(1/pi) int_{|zeta|<1} 1/(zeta-z) = conj(z) for |z|<1
  Grid2D g = make_grid(257, 257, -1.5, 1.5, -1.5, 1.5);
  CauchyKernelTable t(g);
  PotentialSpec dk;
  dk.kind = PotentialKind::disk_indicator;
  dk.amplitude = 1.0;
  dk.width = 1.0;
  ComplexField q = sample_potential(dk, g);
  ComplexField r = dbar_inv(q, t);
  double worst = 0;
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      cd z = g.z(i, j);
      if (std::abs(z) <= 0.5 && std::abs(z) > 0.05) {
        double rel = std::abs(r.at(i, j) - std::conj(z)) / std::abs(z);
        worst = std::max(worst, rel);
      }
    }
  CHECK(worst < 0.02);
}

TEST_CASE("round trip dbar(dbar_inv(g)) recovers g and improves with refinement") {
  double prev = -1;
  for (int n : {129, 257}) {
    Grid2D g = make_grid(n, n, -1, 1, -1, 1);
    CauchyKernelTable t(g);
    ComplexField q = interior_gaussian(g, 0.25);
    ComplexField r = dbar(dbar_inv(q, t));
    double err = rel_l2_interior(r, q, 0.1);
    if (n == 257) CHECK(err < 1e-3);
    if (prev > 0) CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("round trip dz(dz_inv(g)) recovers g") {
  Grid2D g = make_grid(257, 257, -1, 1, -1, 1);
  CauchyKernelTable t(g);
  ComplexField q = interior_gaussian(g, 0.25);
  ComplexField r = dz(dz_inv(q, t));
  CHECK(rel_l2_interior(r, q, 0.1) < 1e-3);
}

TEST_CASE("conjugation symmetry dz_inv = conj dbar_inv conj") {
  Grid2D g = make_grid(65, 65, -1, 1, -1, 1);
  CauchyKernelTable t(g);
  ComplexField q = interior_gaussian(g, 0.3);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) q.at(i, j) *= cd(0.8, 0.5 * g.y(j));
  ComplexField a = dz_inv(q, t);
  ComplexField b = conj_field(dbar_inv(conj_field(q), t));
  double worst = 0;
  for (size_t k = 0; k < a.v.size(); ++k) worst = std::max(worst, std::abs(a.v[k] - b.v[k]));
  CHECK(worst < 1e-13);
}

TEST_CASE("boundedness surrogate: dbar_inv L2/Lp ratio stable under refinement") {
  const double p = 4.0;
  auto family = [](const Grid2D& g) {
    std::vector<ComplexField> fs;
    ComplexField c = make_field(g);
    for (auto& x : c.v) x = cd(1, 0);
    fs.push_back(c);
    for (double w : {0.1, 0.2, 0.3, 0.5}) fs.push_back(interior_gaussian(g, w));
    for (double r : {0.2, 0.4, 0.6}) {
      PotentialSpec dk;
      dk.kind = PotentialKind::disk_indicator;
      dk.width = r;
      fs.push_back(sample_potential(dk, g));
    }
    PotentialSpec tb;
    tb.kind = PotentialKind::two_bumps;
    tb.width = 0.2;
    fs.push_back(sample_potential(tb, g));
    PotentialSpec ds;
    ds.kind = PotentialKind::disk_indicator;
    ds.cx = 0.3;
    ds.cy = -0.2;
    ds.width = 0.25;
    fs.push_back(sample_potential(ds, g));
    return fs;
  };
  double worst_prev = -1;
  for (int n : {65, 129}) {
    Grid2D g = make_grid(n, n, -1, 1, -1, 1);
    CauchyKernelTable t(g);
    double worst = 0;
    for (const auto& f : family(g)) {
      double ratio = l2_norm(dbar_inv(f, t)) / lp_norm(f, p);
      worst = std::max(worst, ratio);
    }
    if (worst_prev > 0) {
      CHECK(worst < 1.2 * worst_prev);
      CHECK(worst > 0.8 * worst_prev);
    }
    worst_prev = worst;
  }
}

TEST_SUITE_END();
