#ifndef CALDERON_FIT_HPP
#define CALDERON_FIT_HPP

#include <vector>

namespace calderon {

struct LogLogFit {
  double slope = 0;
  double intercept = 0;
  double rms_residual = 0;  // in log space
};

/// Least-squares fit of log(value) against log(tau). Values must be positive.
LogLogFit loglog_fit(const std::vector<double>& taus, const std::vector<double>& values);

}  // namespace calderon

#endif
