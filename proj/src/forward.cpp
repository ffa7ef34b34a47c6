#include "calderon/forward.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "calderon/csv.hpp"

namespace calderon {

int boundary_count(const Grid2D& g) { return 2 * (g.nx + g.ny) - 4; }

BoundaryFunction make_boundary(const Grid2D& g) {
  BoundaryFunction b;
  b.nx = g.nx;
  b.ny = g.ny;
  int nb = boundary_count(g);
  b.values.assign(nb, cd(0, 0));
  b.weight.reserve(nb);
  b.s.reserve(nb);
  b.gi.reserve(nb);
  b.gj.reserve(nb);

  double Lx = g.xmax - g.xmin, Ly = g.ymax - g.ymin;
  auto push = [&](int i, int j, double s) {
    bool corner = (i == 0 || i == g.nx - 1) && (j == 0 || j == g.ny - 1);
    double w = 0;
    if (!corner) w = (j == 0 || j == g.ny - 1) ? g.hx : g.hy;
    b.gi.push_back(i);
    b.gj.push_back(j);
    b.s.push_back(s);
    b.weight.push_back(w);
  };
  for (int i = 0; i < g.nx; ++i) push(i, 0, i * g.hx);
  for (int j = 1; j < g.ny; ++j) push(g.nx - 1, j, Lx + j * g.hy);
  for (int i = g.nx - 2; i >= 0; --i) push(i, g.ny - 1, Lx + Ly + (g.nx - 1 - i) * g.hx);
  for (int j = g.ny - 2; j >= 1; --j) push(0, j, 2 * Lx + Ly + (g.ny - 1 - j) * g.hy);
  return b;
}

BoundaryFunction boundary_restrict(const ComplexField& u) {
  BoundaryFunction b = make_boundary(u.grid);
  for (size_t k = 0; k < b.values.size(); ++k) b.values[k] = u.at(b.gi[k], b.gj[k]);
  return b;
}

cd boundary_dot(const BoundaryFunction& a, const BoundaryFunction& b) {
  if (a.nx != b.nx || a.ny != b.ny || a.values.size() != b.values.size())
    throw std::invalid_argument("boundary_dot: mismatched boundary layouts");
  cd acc = 0;
  for (size_t k = 0; k < a.values.size(); ++k) acc += a.weight[k] * a.values[k] * b.values[k];
  return acc;
}

namespace {

using SpMat = Eigen::SparseMatrix<cd>;
using Vec = Eigen::VectorXcd;

/// Interior 5-point system for -(lap + q); factored once, solved per datum.
struct DirichletSystem {
  Grid2D g;
  int m = 0, n = 0, N = 0;  // interior extent and unknown count
  double anorm = 0;
  Eigen::SparseLU<SpMat> lu;

  int K(int i, int j) const { return (i - 1) * n + (j - 1); }

  void build(const ComplexField& q) {
    g = q.grid;
    m = g.nx - 2;
    n = g.ny - 2;
    N = m * n;
    double cx = 1.0 / (g.hx * g.hx), cy = 1.0 / (g.hy * g.hy);

    std::vector<Eigen::Triplet<cd>> trip;
    trip.reserve((size_t)5 * N);
    std::vector<double> rowsum(N, 0.0);
    auto add = [&](int r, int c, cd v) {
      trip.emplace_back(r, c, v);
      rowsum[r] += std::abs(v);
    };
    for (int i = 1; i <= g.nx - 2; ++i)
      for (int j = 1; j <= g.ny - 2; ++j) {
        int r = K(i, j);
        add(r, r, cd(2 * cx + 2 * cy, 0) - q.at(i, j));
        if (i > 1) add(r, K(i - 1, j), cd(-cx, 0));
        if (i < g.nx - 2) add(r, K(i + 1, j), cd(-cx, 0));
        if (j > 1) add(r, K(i, j - 1), cd(-cy, 0));
        if (j < g.ny - 2) add(r, K(i, j + 1), cd(-cy, 0));
      }
    SpMat A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    anorm = 0;
    for (double r : rowsum) anorm = std::max(anorm, r);

    lu.compute(A);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error(
          "solve_dirichlet: factorization failed; 0 is a Dirichlet eigenvalue of lap + q");

    // condition probe: a large inverse applied to generic data means 0 is
    // within rounding of an eigenvalue
    Vec ones = Vec::Ones(N);
    Vec r(N);
    std::mt19937 rng(12345u);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int k = 0; k < N; ++k) r[k] = cd(U(rng), U(rng));
    Vec z1 = lu.solve(ones), z2 = lu.solve(r);
    double g1 = z1.lpNorm<Eigen::Infinity>();
    double g2 = z2.lpNorm<Eigen::Infinity>() / r.lpNorm<Eigen::Infinity>();
    double cond = anorm * std::max(g1, g2);
    if (!std::isfinite(cond) || cond > 1e12) {
      std::ostringstream os;
      os << "solve_dirichlet: operator is singular or near singular (condition probe "
         << cond << " exceeds 1e12); 0 is numerically a Dirichlet eigenvalue of lap + q";
      throw std::runtime_error(os.str());
    }
  }

  ComplexField solve(const BoundaryFunction& f) const {
    if (f.nx != g.nx || f.ny != g.ny || (int)f.values.size() != boundary_count(g))
      throw std::invalid_argument("solve_dirichlet: boundary data does not fit the grid");
    ComplexField u = make_field(g);
    for (size_t k = 0; k < f.values.size(); ++k) u.at(f.gi[k], f.gj[k]) = f.values[k];

    double cx = 1.0 / (g.hx * g.hx), cy = 1.0 / (g.hy * g.hy);
    Vec b = Vec::Zero(N);
    for (int i = 1; i <= g.nx - 2; ++i)
      for (int j = 1; j <= g.ny - 2; ++j) {
        cd acc = 0;
        if (i == 1) acc += cx * u.at(0, j);
        if (i == g.nx - 2) acc += cx * u.at(g.nx - 1, j);
        if (j == 1) acc += cy * u.at(i, 0);
        if (j == g.ny - 2) acc += cy * u.at(i, g.ny - 1);
        b[K(i, j)] = acc;
      }
    Vec x = lu.solve(b);
    for (int i = 1; i <= g.nx - 2; ++i)
      for (int j = 1; j <= g.ny - 2; ++j) u.at(i, j) = x[K(i, j)];
    return u;
  }
};

}  // namespace

ComplexField solve_dirichlet(const ComplexField& q, const BoundaryFunction& f) {
  DirichletSystem sys;
  sys.build(q);
  return sys.solve(f);
}

BoundaryFunction neumann_trace(const ComplexField& u, FluxScheme scheme) {
  const Grid2D& g = u.grid;
  BoundaryFunction t = boundary_restrict(u);

  // one-sided derivative along the outward normal; (di,dj) points inward
  auto onesided2 = [&](int i, int j, int di, int dj, double h) {
    return (3.0 * u.at(i, j) - 4.0 * u.at(i + di, j + dj) + u.at(i + 2 * di, j + 2 * dj)) /
           (2.0 * h);
  };
  auto face1 = [&](int i, int j, int di, int dj, double h) {
    return (u.at(i, j) - u.at(i + di, j + dj)) / h;
  };

  for (size_t k = 0; k < t.values.size(); ++k) {
    int i = t.gi[k], j = t.gj[k];
    cd acc = 0;
    int sides = 0;
    auto accum = [&](int di, int dj, double h) {
      acc += scheme == FluxScheme::onesided ? onesided2(i, j, di, dj, h) : face1(i, j, di, dj, h);
      ++sides;
    };
    if (i == 0) accum(+1, 0, g.hx);
    if (i == g.nx - 1) accum(-1, 0, g.hx);
    if (j == 0) accum(0, +1, g.hy);
    if (j == g.ny - 1) accum(0, -1, g.hy);
    if (sides == 2 && scheme == FluxScheme::face)
      t.values[k] = 0;  // corners carry no flux face
    else
      t.values[k] = acc / double(sides);
  }
  return t;
}

namespace {

double wdot(const BoundaryFunction& w, const std::vector<double>& a,
            const std::vector<double>& b) {
  double acc = 0;
  for (size_t k = 0; k < a.size(); ++k) acc += w.weight[k] * a[k] * b[k];
  return acc;
}

}  // namespace

std::vector<BoundaryFunction> boundary_modes(const Grid2D& g, int M) {
  int nb = boundary_count(g);
  if (M < 1 || M > nb / 4)
    throw std::invalid_argument("boundary_modes: need 1 <= M <= boundary count / 4");

  BoundaryFunction layout = make_boundary(g);
  double L = 2 * (g.xmax - g.xmin) + 2 * (g.ymax - g.ymin);

  std::vector<std::vector<double>> cols(M, std::vector<double>(nb));
  for (int m = 0; m < M; ++m) {
    int freq = (m + 1) / 2;
    for (int b = 0; b < nb; ++b) {
      double a = 2 * M_PI * freq * layout.s[b] / L;
      cols[m][b] = m == 0 ? 1.0 : (m % 2 == 1 ? std::cos(a) : std::sin(a));
    }
  }
  // modified Gram-Schmidt, one re-orthogonalization pass for stability
  for (int m = 0; m < M; ++m) {
    for (int rep = 0; rep < 2; ++rep)
      for (int p = 0; p < m; ++p) {
        double c = wdot(layout, cols[p], cols[m]);
        for (int b = 0; b < nb; ++b) cols[m][b] -= c * cols[p][b];
      }
    double nrm = std::sqrt(wdot(layout, cols[m], cols[m]));
    if (nrm < 1e-10) throw std::runtime_error("boundary_modes: degenerate basis");
    for (int b = 0; b < nb; ++b) cols[m][b] /= nrm;
  }

  std::vector<BoundaryFunction> out(M, layout);
  for (int m = 0; m < M; ++m)
    for (int b = 0; b < nb; ++b) out[m].values[b] = cols[m][b];
  return out;
}

bool DtNMap::same_basis(const DtNMap& o) const {
  return M == o.M && nx == o.nx && ny == o.ny && xmin == o.xmin && xmax == o.xmax &&
         ymin == o.ymin && ymax == o.ymax && basis == o.basis;
}

DtNMap assemble_dtn(const ComplexField& q, int M, FluxScheme scheme) {
  const Grid2D& g = q.grid;
  int nb = boundary_count(g);
  if (M < 1 || M > nb / 4)
    throw std::invalid_argument("assemble_dtn: need 1 <= M <= boundary count / 4");

  std::vector<BoundaryFunction> modes = boundary_modes(g, M);

  DtNMap map;
  map.M = M;
  map.nx = g.nx;
  map.ny = g.ny;
  map.xmin = g.xmin;
  map.xmax = g.xmax;
  map.ymin = g.ymin;
  map.ymax = g.ymax;
  map.coeff.assign((size_t)M * M, cd(0, 0));
  map.reference.assign((size_t)M * M, cd(0, 0));
  map.modes.resize((size_t)M * nb);
  for (int m = 0; m < M; ++m)
    for (int b = 0; b < nb; ++b) map.modes[(size_t)m * nb + b] = modes[m].values[b].real();
  map.weight = modes[0].weight;

  DirichletSystem sys_q, sys_0;
  sys_q.build(q);
  ComplexField zero = make_field(g);
  sys_0.build(zero);

  auto fill = [&](const DirichletSystem& sys, std::vector<cd>& out) {
    for (int k = 0; k < M; ++k) {
      ComplexField u = sys.solve(modes[k]);
      for (const cd& v : u.v)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
          std::ostringstream os;
          os << "assemble_dtn: solve produced non-finite values at mode " << k;
          throw std::runtime_error(os.str());
        }
      BoundaryFunction t = neumann_trace(u, scheme);
      for (int r = 0; r < M; ++r) out[(size_t)r * M + k] = boundary_dot(modes[r], t);
    }
  };
  fill(sys_q, map.coeff);
  fill(sys_0, map.reference);
  return map;
}

std::vector<cd> boundary_coeffs(const DtNMap& map, const BoundaryFunction& f) {
  int nb = 2 * (map.nx + map.ny) - 4;
  if (f.nx != map.nx || f.ny != map.ny || (int)f.values.size() != nb)
    throw std::invalid_argument("boundary_coeffs: boundary data does not fit the map");
  std::vector<cd> c(map.M, cd(0, 0));
  for (int m = 0; m < map.M; ++m) {
    cd acc = 0;
    for (int b = 0; b < nb; ++b)
      acc += map.weight[b] * map.modes[(size_t)m * nb + b] * f.values[b];
    c[m] = acc;
  }
  return c;
}

BoundaryFunction boundary_expand(const DtNMap& map, const std::vector<cd>& c) {
  if ((int)c.size() != map.M)
    throw std::invalid_argument("boundary_expand: coefficient count does not match M");
  Grid2D g = make_grid(map.nx, map.ny, map.xmin, map.xmax, map.ymin, map.ymax);
  BoundaryFunction f = make_boundary(g);
  int nb = (int)f.values.size();
  for (int b = 0; b < nb; ++b) {
    cd acc = 0;
    for (int m = 0; m < map.M; ++m) acc += c[m] * map.modes[(size_t)m * nb + b];
    f.values[b] = acc;
  }
  return f;
}

// --- serialization ---

void write_dtn_csv(const DtNMap& map, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dtn_csv: cannot open " + path);
  out << "M,nx,ny,xmin,xmax,ymin,ymax,basis\n";
  out << map.M << ',' << map.nx << ',' << map.ny << ',' << format_g17(map.xmin) << ','
      << format_g17(map.xmax) << ',' << format_g17(map.ymin) << ',' << format_g17(map.ymax)
      << ',' << map.basis << '\n';
  auto block = [&](const char* name, const std::vector<cd>& m) {
    out << name << '\n';
    for (int r = 0; r < map.M; ++r) {
      for (int c = 0; c < map.M; ++c) {
        const cd& v = m[(size_t)r * map.M + c];
        if (c) out << ',';
        out << format_g17(v.real()) << ',' << format_g17(v.imag());
      }
      out << '\n';
    }
  };
  block("coeff", map.coeff);
  block("reference", map.reference);
  if (!out) throw std::runtime_error("write_dtn_csv: write failed on " + path);
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_f64(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::runtime_error("read_dtn_csv: bad number '" + s + "'");
  return v;
}

void rebuild_basis(DtNMap& map) {
  Grid2D g = make_grid(map.nx, map.ny, map.xmin, map.xmax, map.ymin, map.ymax);
  std::vector<BoundaryFunction> modes = boundary_modes(g, map.M);
  int nb = boundary_count(g);
  map.modes.resize((size_t)map.M * nb);
  for (int m = 0; m < map.M; ++m)
    for (int b = 0; b < nb; ++b) map.modes[(size_t)m * nb + b] = modes[m].values[b].real();
  map.weight = modes[0].weight;
}

}  // namespace

DtNMap read_dtn_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dtn_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || split_csv(line)[0] != "M")
    throw std::runtime_error("read_dtn_csv: missing header in " + path);
  if (!std::getline(in, line)) throw std::runtime_error("read_dtn_csv: truncated " + path);
  auto hdr = split_csv(line);
  if (hdr.size() != 8) throw std::runtime_error("read_dtn_csv: malformed header in " + path);

  DtNMap map;
  map.M = (int)parse_f64(hdr[0]);
  map.nx = (int)parse_f64(hdr[1]);
  map.ny = (int)parse_f64(hdr[2]);
  map.xmin = parse_f64(hdr[3]);
  map.xmax = parse_f64(hdr[4]);
  map.ymin = parse_f64(hdr[5]);
  map.ymax = parse_f64(hdr[6]);
  map.basis = hdr[7];
  if (map.M < 1 || map.M > 100000) throw std::runtime_error("read_dtn_csv: implausible M");

  auto block = [&](const char* name) {
    if (!std::getline(in, line) || line != name)
      throw std::runtime_error(std::string("read_dtn_csv: expected block '") + name + "'");
    std::vector<cd> m((size_t)map.M * map.M);
    for (int r = 0; r < map.M; ++r) {
      if (!std::getline(in, line)) throw std::runtime_error("read_dtn_csv: truncated matrix");
      auto cells = split_csv(line);
      if ((int)cells.size() != 2 * map.M)
        throw std::runtime_error("read_dtn_csv: wrong row length");
      for (int c = 0; c < map.M; ++c)
        m[(size_t)r * map.M + c] = cd(parse_f64(cells[2 * c]), parse_f64(cells[2 * c + 1]));
    }
    return m;
  };
  map.coeff = block("coeff");
  map.reference = block("reference");
  rebuild_basis(map);
  return map;
}

namespace {

void put_u32(std::FILE* fp, uint32_t v) {
  unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                        (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
  std::fwrite(b, 1, 4, fp);
}

uint32_t get_u32(std::FILE* fp) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, fp) != 4) throw std::runtime_error("DTN1: truncated header");
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
  if (std::fread(b, 1, 8, fp) != 8) throw std::runtime_error("DTN1: truncated payload");
  uint64_t u = 0;
  for (int k = 0; k < 8; ++k) u |= (uint64_t)b[k] << (8 * k);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_dtn(const DtNMap& map, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_dtn: cannot open " + path);
  std::fwrite("CGO2", 1, 4, fp);
  std::fwrite("DTN1", 1, 4, fp);
  put_u32(fp, (uint32_t)map.M);
  put_u32(fp, (uint32_t)map.nx);
  put_u32(fp, (uint32_t)map.ny);
  put_f64(fp, map.xmin);
  put_f64(fp, map.xmax);
  put_f64(fp, map.ymin);
  put_f64(fp, map.ymax);
  for (const std::vector<cd>* m : {&map.coeff, &map.reference})
    for (const cd& v : *m) {
      put_f64(fp, v.real());
      put_f64(fp, v.imag());
    }
  if (std::fclose(fp) != 0) throw std::runtime_error("write_dtn: close failed");
}

DtNMap read_dtn(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw std::runtime_error("read_dtn: cannot open " + path);
  struct Closer {
    std::FILE* fp;
    ~Closer() { std::fclose(fp); }
  } closer{fp};

  char magic[8];
  if (std::fread(magic, 1, 8, fp) != 8 || std::memcmp(magic, "CGO2DTN1", 8) != 0)
    throw std::runtime_error("read_dtn: bad magic (not a DTN1 container)");
  DtNMap map;
  map.M = (int)get_u32(fp);
  map.nx = (int)get_u32(fp);
  map.ny = (int)get_u32(fp);
  if (map.M < 1 || map.M > 100000 || map.nx < 8 || map.ny < 8)
    throw std::runtime_error("read_dtn: implausible header");
  map.xmin = get_f64(fp);
  map.xmax = get_f64(fp);
  map.ymin = get_f64(fp);
  map.ymax = get_f64(fp);
  map.coeff.resize((size_t)map.M * map.M);
  map.reference.resize((size_t)map.M * map.M);
  for (std::vector<cd>* m : {&map.coeff, &map.reference})
    for (cd& v : *m) {
      double re = get_f64(fp), im = get_f64(fp);
      v = cd(re, im);
    }
  rebuild_basis(map);
  return map;
}

}  // namespace calderon
