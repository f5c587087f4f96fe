#pragma once

// Least-squares line fit used by the sweep slopes and the probe tail fits.

#include <stdexcept>
#include <vector>

namespace gsanova::stats {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

[[nodiscard]] inline LineFit linear_fit(const std::vector<double>& x,
                                        const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n != y.size() || n < 2) {
    throw std::invalid_argument("linear_fit: need >= 2 paired points");
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("linear_fit: degenerate x");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

}  // namespace gsanova::stats
