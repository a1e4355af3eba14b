#ifndef KNOCKOFF_NUMDERIV_HPP
#define KNOCKOFF_NUMDERIV_HPP

#include <functional>

namespace knockoff {

struct DerivSignEstimate {
  int sign = 0;        // -1, 0, +1; 0 means "below the rounding noise floor"
  bool conclusive = false;
  double estimate = 0.0;
  double noise_floor = 0.0;
  double step = 0.0;
};

// Sign of f^{(k)}(t) by central differences evaluated at two step sizes
// (h and 1.3h). A magnitude below the rounding-noise floor counts as zero;
// disagreeing nonzero signs are inconclusive. The step respects the domain
// constraint t - (k/2)h > 0.
DerivSignEstimate derivative_sign_estimate(
    const std::function<double(double)>& f, double t, int k,
    double base_step = 0.25);

}  // namespace knockoff

#endif  // KNOCKOFF_NUMDERIV_HPP
