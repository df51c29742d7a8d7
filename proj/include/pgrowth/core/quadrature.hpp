#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

namespace pgrowth {

struct IntegrationResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature: the panel with the largest error
/// estimate is bisected until the summed estimate meets max(abs_tol, rel_tol |I|), the
/// remaining error is at roundoff level, or `max_panels` is reached.
template <typename F>
IntegrationResult adaptive_integrate(F&& f, double a, double b, double rel_tol = 1e-11, double abs_tol = 0.0,
                                     int max_panels = 400) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  using G = boost::math::quadrature::gauss<double, 7>;
  struct Panel {
    double a, b, value, error, roundoff;
    bool operator<(const Panel& o) const { return error < o.error; }
  };
  const auto& x = GK::abscissa();
  const auto& wk = GK::weights();
  const auto& wg = G::weights();
  auto eval = [&](double lo, double hi) {
    const double mid = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double f0 = f(mid);
    double kron = f0 * wk[0];
    double l1 = std::abs(kron);
    double gauss = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
      const double fp = f(mid + half * x[i]);
      const double fm = f(mid - half * x[i]);
      kron += (fp + fm) * wk[i];
      l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
      if (i % 2 == 0) gauss += (fp + fm) * wg[i / 2];
    }
    gauss += f0 * wg[0];
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * l1 * std::abs(half);
    return Panel{lo, hi, kron * half, std::max(std::abs(kron - gauss) * std::abs(half), roundoff), roundoff};
  };

  std::priority_queue<Panel> heap;
  heap.push(eval(a, b));
  double value = heap.top().value;
  double error = heap.top().error;
  int panels = 1;
  while (panels < max_panels) {
    if (error <= std::max(abs_tol, rel_tol * std::abs(value))) break;
    Panel worst = heap.top();
    if (worst.error <= 2.0 * worst.roundoff) break;
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Panel left = eval(worst.a, mid);
    const Panel right = eval(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }
  // re-sum to shed the drift of the running updates
  value = 0.0;
  error = 0.0;
  std::vector<Panel> all;
  all.reserve(heap.size());
  while (!heap.empty()) {
    all.push_back(heap.top());
    heap.pop();
  }
  std::sort(all.begin(), all.end(), [](const Panel& l, const Panel& r) { return l.a < r.a; });
  for (const auto& p : all) {
    value += p.value;
    error += p.error;
  }
  return {value, error, panels};
}

}  // namespace pgrowth
