#include "qpe/circle.hpp"

#include <cmath>
#include <stdexcept>

namespace qpe {

double wrap_to_canonical(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod is exact but the += above can round up to 2*pi for tiny negatives.
  if (r >= kTwoPi) r = 0.0;
  return r;
}

bool phase_close(Phase a, Phase b, double tol) { return wrap_dist(a, b) <= tol; }

double wrap_dist(double x) {
  double r = std::fmod(x, kTwoPi);  // (-2pi, 2pi), exact
  double d = std::fabs(r - kTwoPi * std::round(r / kTwoPi));
  return d > kPi ? kPi : d;
}

std::vector<Phase> alias_set(Phase theta, double k) {
  if (!(k > 1.0)) throw std::invalid_argument("alias_set: requires k > 1");
  const int count = static_cast<int>(std::floor(k));
  std::vector<Phase> out;
  out.reserve(count);
  for (int n = 0; n < count; ++n) {
    out.emplace_back((theta.value() + kTwoPi * n) / k);
  }
  return out;
}

bool in_lemma2_window(Phase phi, double k) {
  if (!(k > 1.0)) throw std::invalid_argument("in_lemma2_window: requires k > 1");
  const double lo = kPi / k;
  const double hi = kPi * (2.0 * std::floor(k) - 1.0) / k;
  return phi.value() >= lo && phi.value() <= hi;
}

}  // namespace qpe
