#include "rokf/rng.hpp"

#include <cmath>

namespace rokf {

double Rng::gauss() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Vec Rng::gauss_vec(Eigen::Index n) {
  Vec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = gauss();
  return x;
}

} // namespace rokf
