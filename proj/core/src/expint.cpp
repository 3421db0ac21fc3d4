#include <cmath>
#include <limits>

#include "crannpc/rate.hpp"

namespace crannpc {

double expint_scaled(double x) {
  if (!(x > 0.0)) throw DomainError("expint_scaled requires x > 0");
  constexpr double kEps = 1e-16;
  if (x <= 1.0) {
    // E1(x) = -gamma - ln x - Σ_{j>=1} (-x)^j / (j j!)
    constexpr double kEulerGamma = 0.57721566490153286061;
    double sum = 0.0;
    double term = 1.0;
    for (int j = 1; j < 200; ++j) {
      term *= -x / j;
      const double add = term / j;
      sum += add;
      if (std::abs(add) < kEps * std::abs(sum)) break;
    }
    const double e1 = -kEulerGamma - std::log(x) - sum;
    return -std::exp(x) * e1;
  }
  // Modified Lentz on e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...))).
  const double tiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int j = 1; j < 10000; ++j) {
    const double a = -static_cast<double>(j) * j;
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const double delta = c * d;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return -h;
}

}  // namespace crannpc
