#include "covlaw/rng.hpp"

#include <cmath>

namespace covlaw {

double Stream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

double Stream::student_t(int df) {
  const double z = normal();
  double chi2 = 0.0;
  for (int i = 0; i < df; ++i) {
    const double x = normal();
    chi2 += x * x;
  }
  const double t = z / std::sqrt(chi2 / df);
  return t * std::sqrt((df - 2.0) / df);
}

}  // namespace covlaw
