#include "knockoff/numderiv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace knockoff {

namespace {

struct OneStep {
  double estimate;
  double floor;
};

OneStep estimate_at(const std::function<double(double)>& f, double t, int k,
                    double h) {
  double sum = 0.0;
  double maxabs = 0.0;
  double coeff = 1.0;
  for (int j = 0; j <= k; ++j) {
    double v = f(t + (0.5 * k - j) * h);
    maxabs = std::max(maxabs, std::abs(v));
    double term = coeff * v;
    sum += (j % 2 == 0) ? term : -term;
    coeff = coeff * (k - j) / (j + 1.0);
  }
  double hk = std::pow(h, k);
  const double eps = std::numeric_limits<double>::epsilon();
  // cancellation noise: eps * 2^k * max|f|, with a safety factor
  double floor = eps * std::ldexp(1.0, k) * std::max(maxabs, 1e-300) / hk * 32.0;
  return {sum / hk, floor};
}

int classify(const OneStep& e) {
  if (std::abs(e.estimate) <= e.floor) return 0;
  return e.estimate > 0.0 ? 1 : -1;
}

}  // namespace

DerivSignEstimate derivative_sign_estimate(
    const std::function<double(double)>& f, double t, int k,
    double base_step) {
  DerivSignEstimate out;
  // Keep the widened (1.3h) stencil inside (0, inf): 1.3 * (k/2) * h < 0.6 t.
  double h = std::min(base_step, t / (k + 2.0));
  out.step = h;
  OneStep e1 = estimate_at(f, t, k, h);
  OneStep e2 = estimate_at(f, t, k, 1.3 * h);
  int s1 = classify(e1), s2 = classify(e2);
  out.estimate = e1.estimate;
  out.noise_floor = e1.floor;
  if (s1 == s2) {
    out.sign = s1;
    out.conclusive = true;
  } else {
    // the two step sizes disagree; report the nonzero reading but refuse
    // to certify it
    out.sign = (s1 != 0) ? s1 : s2;
    out.conclusive = false;
  }
  return out;
}

}  // namespace knockoff
