#include "calderon/fit.hpp"

#include <cmath>
#include <stdexcept>

namespace calderon {

LogLogFit loglog_fit(const std::vector<double>& taus, const std::vector<double>& values) {
  if (taus.size() != values.size() || taus.size() < 2)
    throw std::invalid_argument("loglog_fit: need >= 2 matching points");
  size_t n = taus.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (size_t k = 0; k < n; ++k) {
    if (!(taus[k] > 0) || !(values[k] > 0))
      throw std::invalid_argument("loglog_fit: points must be positive");
    lx[k] = std::log(taus[k]);
    ly[k] = std::log(values[k]);
    sx += lx[k];
    sy += ly[k];
    sxx += lx[k] * lx[k];
    sxy += lx[k] * ly[k];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0) throw std::invalid_argument("loglog_fit: degenerate abscissae");
  LogLogFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (size_t k = 0; k < n; ++k) {
    double r = ly[k] - (f.intercept + f.slope * lx[k]);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / n);
  return f;
}

}  // namespace calderon
