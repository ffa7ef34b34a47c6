#include "calderon/grid.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace calderon {

bool Grid2D::same_as(const Grid2D& o) const {
  return nx == o.nx && ny == o.ny && xmin == o.xmin && xmax == o.xmax &&
         ymin == o.ymin && ymax == o.ymax;
}

Grid2D make_grid(int nx, int ny, double xmin, double xmax, double ymin, double ymax) {
  if (nx < 8 || ny < 8) throw std::invalid_argument("make_grid: need nx, ny >= 8");
  if (!(xmax > xmin) || !(ymax > ymin))
    throw std::invalid_argument("make_grid: degenerate bounds");
  if (!std::isfinite(xmin) || !std::isfinite(xmax) || !std::isfinite(ymin) ||
      !std::isfinite(ymax))
    throw std::invalid_argument("make_grid: non-finite bounds");
  Grid2D g;
  g.nx = nx;
  g.ny = ny;
  g.xmin = xmin;
  g.xmax = xmax;
  g.ymin = ymin;
  g.ymax = ymax;
  g.hx = (xmax - xmin) / (nx - 1);
  g.hy = (ymax - ymin) / (ny - 1);
  return g;
}

ComplexField make_field(const Grid2D& g) {
  ComplexField f;
  f.grid = g;
  f.v.assign((size_t)g.size(), cd(0, 0));
  return f;
}

ComplexField sample_potential(const PotentialSpec& spec, const Grid2D& g) {
  if (!std::isfinite(spec.amplitude) || !std::isfinite(spec.cx) ||
      !std::isfinite(spec.cy) || !std::isfinite(spec.width))
    throw std::invalid_argument("sample_potential: non-finite parameters");
  ComplexField f = make_field(g);
  switch (spec.kind) {
    case PotentialKind::zero:
      break;
    case PotentialKind::gaussian: {
      if (spec.width <= 0) throw std::invalid_argument("gaussian: width must be > 0");
      double iw2 = 1.0 / (spec.width * spec.width);
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          double dx = g.x(i) - spec.cx, dy = g.y(j) - spec.cy;
          f.at(i, j) = cd(spec.amplitude * std::exp(-(dx * dx + dy * dy) * iw2), 0);
        }
      break;
    }
    case PotentialKind::two_bumps: {
      if (spec.width <= 0) throw std::invalid_argument("two_bumps: width must be > 0");
      double iw2 = 1.0 / (spec.width * spec.width);
      double off = 1.5 * spec.width;
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          double dx1 = g.x(i) - (spec.cx - off), dy1 = g.y(j) - spec.cy;
          double dx2 = g.x(i) - (spec.cx + off), dy2 = g.y(j) - spec.cy;
          double val = spec.amplitude * std::exp(-(dx1 * dx1 + dy1 * dy1) * iw2) +
                       0.7 * spec.amplitude * std::exp(-(dx2 * dx2 + dy2 * dy2) * iw2);
          f.at(i, j) = cd(val, 0);
        }
      break;
    }
    case PotentialKind::disk_indicator: {
      if (spec.width <= 0) throw std::invalid_argument("disk_indicator: radius must be > 0");
      double r2 = spec.width * spec.width;
      for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j) {
          double dx = g.x(i) - spec.cx, dy = g.y(j) - spec.cy;
          f.at(i, j) = cd(dx * dx + dy * dy <= r2 ? spec.amplitude : 0.0, 0);
        }
      break;
    }
    case PotentialKind::file: {
      ComplexField r = read_field(spec.path);
      if (!r.grid.same_as(g))
        throw std::invalid_argument("sample_potential: file grid does not match target grid");
      for (auto& c : r.v) c = cd(c.real(), 0.0);
      return r;
    }
  }
  return f;
}

ComplexField mollify(const ComplexField& q, double eps) {
  const Grid2D& g = q.grid;
  double h = std::max(g.hx, g.hy);
  if (!(eps > 0) || eps < 2 * h)
    throw std::invalid_argument("mollify: eps must be >= 2*max(hx,hy)");

  int rx = (int)std::floor(eps / g.hx);
  int ry = (int)std::floor(eps / g.hy);
  // bump kernel exp(1/((r/eps)^2 - 1)) on r < eps, normalized to discrete unit mass
  std::vector<double> ker((2 * rx + 1) * (2 * ry + 1), 0.0);
  double mass = 0;
  for (int a = -rx; a <= rx; ++a)
    for (int b = -ry; b <= ry; ++b) {
      double r2 = (a * g.hx * a * g.hx + b * g.hy * b * g.hy) / (eps * eps);
      if (r2 < 1.0) {
        double w = std::exp(1.0 / (r2 - 1.0));
        ker[(a + rx) * (2 * ry + 1) + (b + ry)] = w;
        mass += w * g.hx * g.hy;
      }
    }
  for (auto& w : ker) w /= mass;

  ComplexField out = make_field(g);
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j) {
      cd acc(0, 0);
      int alo = std::max(-rx, i - (g.nx - 1)), ahi = std::min(rx, i);
      int blo = std::max(-ry, j - (g.ny - 1)), bhi = std::min(ry, j);
      for (int a = alo; a <= ahi; ++a)
        for (int b = blo; b <= bhi; ++b) {
          double w = ker[(a + rx) * (2 * ry + 1) + (b + ry)];
          if (w != 0.0) acc += w * q.at(i - a, j - b);
        }
      out.at(i, j) = acc * (g.hx * g.hy);
    }
  return out;
}

namespace {

// offset of `small`'s origin inside `big`, or throws if the lattices differ
void lattice_offset(const Grid2D& small, const Grid2D& big, int& oi, int& oj) {
  if (std::abs(small.hx - big.hx) > 1e-12 * small.hx ||
      std::abs(small.hy - big.hy) > 1e-12 * small.hy)
    throw std::invalid_argument("incompatible lattices: spacings differ");
  double fi = (small.xmin - big.xmin) / big.hx;
  double fj = (small.ymin - big.ymin) / big.hy;
  oi = (int)std::lround(fi);
  oj = (int)std::lround(fj);
  if (std::abs(fi - oi) > 1e-12 || std::abs(fj - oj) > 1e-12)
    throw std::invalid_argument("incompatible lattices: nodes misaligned");
  if (oi < 0 || oj < 0 || oi + small.nx > big.nx || oj + small.ny > big.ny)
    throw std::invalid_argument("incompatible lattices: small grid not contained");
}

}  // namespace

ComplexField extend_zero(const ComplexField& q, const Grid2D& big) {
  int oi, oj;
  lattice_offset(q.grid, big, oi, oj);
  ComplexField out = make_field(big);
  for (int i = 0; i < q.grid.nx; ++i)
    for (int j = 0; j < q.grid.ny; ++j) out.at(i + oi, j + oj) = q.at(i, j);
  return out;
}

ComplexField restrict_to(const ComplexField& f, const Grid2D& sub) {
  int oi, oj;
  lattice_offset(sub, f.grid, oi, oj);
  ComplexField out = make_field(sub);
  for (int i = 0; i < sub.nx; ++i)
    for (int j = 0; j < sub.ny; ++j) out.at(i, j) = f.at(i + oi, j + oj);
  return out;
}

double l2_norm(const ComplexField& f) {
  double s = 0;
  for (const auto& c : f.v) s += std::norm(c);
  return std::sqrt(s * f.grid.cell_area());
}

double lp_norm(const ComplexField& f, double p) {
  if (!(p >= 1)) throw std::invalid_argument("lp_norm: p must be >= 1");
  double s = 0;
  for (const auto& c : f.v) s += std::pow(std::abs(c), p);
  return std::pow(s * f.grid.cell_area(), 1.0 / p);
}

double max_abs(const ComplexField& f) {
  double m = 0;
  for (const auto& c : f.v) m = std::max(m, std::abs(c));
  return m;
}

cd cell_sum(const ComplexField& f) {
  cd s(0, 0);
  for (const auto& c : f.v) s += c;
  return s * f.grid.cell_area();
}

ComplexField conj_field(const ComplexField& f) {
  ComplexField out = f;
  for (auto& c : out.v) c = std::conj(c);
  return out;
}

ComplexField add(const ComplexField& a, const ComplexField& b) {
  if (!a.grid.same_as(b.grid)) throw std::invalid_argument("add: grid mismatch");
  ComplexField out = a;
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] += b.v[k];
  return out;
}

ComplexField sub(const ComplexField& a, const ComplexField& b) {
  if (!a.grid.same_as(b.grid)) throw std::invalid_argument("sub: grid mismatch");
  ComplexField out = a;
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] -= b.v[k];
  return out;
}

ComplexField mul(const ComplexField& a, const ComplexField& b) {
  if (!a.grid.same_as(b.grid)) throw std::invalid_argument("mul: grid mismatch");
  ComplexField out = a;
  for (size_t k = 0; k < out.v.size(); ++k) out.v[k] *= b.v[k];
  return out;
}

ComplexField scale(const ComplexField& a, cd s) {
  ComplexField out = a;
  for (auto& c : out.v) c *= s;
  return out;
}

cd interp_bilinear(const ComplexField& f, double px, double py) {
  const Grid2D& g = f.grid;
  double fx = (px - g.xmin) / g.hx;
  double fy = (py - g.ymin) / g.hy;
  if (fx < -1e-9 || fy < -1e-9 || fx > g.nx - 1 + 1e-9 || fy > g.ny - 1 + 1e-9)
    throw std::invalid_argument("interp_bilinear: point outside grid");
  int i = std::min((int)std::floor(fx), g.nx - 2);
  int j = std::min((int)std::floor(fy), g.ny - 2);
  i = std::max(i, 0);
  j = std::max(j, 0);
  double sx = fx - i, sy = fy - j;
  return (1 - sx) * (1 - sy) * f.at(i, j) + sx * (1 - sy) * f.at(i + 1, j) +
         (1 - sx) * sy * f.at(i, j + 1) + sx * sy * f.at(i + 1, j + 1);
}

namespace {

static_assert(sizeof(double) == 8, "CGO2 format needs 8-byte doubles");

void put_u32(std::FILE* fp, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                        (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, fp);
}

uint32_t get_u32(std::FILE* fp) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, fp) != 4) throw std::runtime_error("CGO2: truncated header");
  return (uint32_t)b[0] | ((uint32_t)b[1] << 8) | ((uint32_t)b[2] << 16) |
         ((uint32_t)b[3] << 24);
}

void put_f64(std::FILE* fp, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = (unsigned char)((u >> (8 * k)) & 0xff);
  std::fwrite(b, 1, 8, fp);
}

double get_f64(std::FILE* fp) {
  unsigned char b[8];
  if (std::fread(b, 1, 8, fp) != 8) throw std::runtime_error("CGO2: truncated payload");
  uint64_t u = 0;
  for (int k = 0; k < 8; ++k) u |= (uint64_t)b[k] << (8 * k);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_field(const ComplexField& f, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_field: cannot open " + path);
  std::fwrite("CGO2", 1, 4, fp);
  put_u32(fp, (uint32_t)f.grid.nx);
  put_u32(fp, (uint32_t)f.grid.ny);
  put_f64(fp, f.grid.xmin);
  put_f64(fp, f.grid.xmax);
  put_f64(fp, f.grid.ymin);
  put_f64(fp, f.grid.ymax);
  put_f64(fp, f.grid.hx);
  put_f64(fp, f.grid.hy);
  for (const auto& c : f.v) {
    put_f64(fp, c.real());
    put_f64(fp, c.imag());
  }
  if (std::fclose(fp) != 0) throw std::runtime_error("write_field: close failed");
}

ComplexField read_field(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("read_field: cannot open " + path);
  struct Closer {
    std::FILE* fp;
    ~Closer() { std::fclose(fp); }
  } closer{fp};

  char magic[4];
  if (std::fread(magic, 1, 4, fp) != 4 || std::memcmp(magic, "CGO2", 4) != 0)
    throw std::runtime_error("read_field: bad magic (not a CGO2 file)");
  uint32_t nx = get_u32(fp), ny = get_u32(fp);
  if (nx < 8 || ny < 8 || nx > 100000 || ny > 100000)
    throw std::runtime_error("read_field: implausible grid dimensions");
  double xmin = get_f64(fp), xmax = get_f64(fp);
  double ymin = get_f64(fp), ymax = get_f64(fp);
  double hx = get_f64(fp), hy = get_f64(fp);
  Grid2D g = make_grid((int)nx, (int)ny, xmin, xmax, ymin, ymax);
  if (std::abs(g.hx - hx) > 1e-12 * std::abs(hx) ||
      std::abs(g.hy - hy) > 1e-12 * std::abs(hy))
    throw std::runtime_error("read_field: inconsistent spacings in header");
  ComplexField f = make_field(g);
  for (auto& c : f.v) {
    double re = get_f64(fp), im = get_f64(fp);
    c = cd(re, im);
  }
  return f;
}

}  // namespace calderon
