#include "qpe/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qpe/circle.hpp"

namespace qpe {

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t counter) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ (0x9E3779B97F4A7C15ull * (stream + 1)));
  h = splitmix64(h ^ (0xD1B54A32D192ED03ull * (counter + 1)));
  return h;
}

std::int64_t binomial_draw(std::int64_t n, double p, RngStream& rng,
                           std::int64_t exact_threshold) {
  if (n < 0) throw std::invalid_argument("binomial_draw: n < 0");
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;

  if (n > exact_threshold) {
    const double mu = static_cast<double>(n) * p;
    const double sigma = std::sqrt(mu * (1.0 - p));
    double x = std::floor(mu + sigma * rng.normal() + 0.5);
    if (x < 0.0) x = 0.0;
    if (x > static_cast<double>(n)) x = static_cast<double>(n);
    return static_cast<std::int64_t>(x);
  }

  // Exact inversion. The pmf is built by recurrence outward from the mode so
  // the scan never touches underflowing tail terms; everything outside the
  // retained window carries less mass than double resolution can represent.
  const std::int64_t mode =
      std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor((n + 1) * p)));
  const double log_pmf_mode = std::lgamma(static_cast<double>(n) + 1.0) -
                              std::lgamma(static_cast<double>(mode) + 1.0) -
                              std::lgamma(static_cast<double>(n - mode) + 1.0) +
                              mode * std::log(p) + (n - mode) * std::log1p(-p);
  const double pmf_mode = std::exp(log_pmf_mode);
  const double cutoff = pmf_mode * 1e-18;
  const double odds = p / (1.0 - p);

  thread_local std::vector<double> pmf;
  pmf.clear();
  pmf.push_back(pmf_mode);

  std::int64_t k_lo = mode;
  {
    double f = pmf_mode;
    for (std::int64_t k = mode; k > 0; --k) {
      f *= static_cast<double>(k) / (static_cast<double>(n - k + 1) * odds);
      if (f < cutoff) break;
      pmf.push_back(f);
      --k_lo;
    }
  }
  // pmf currently holds [mode, mode-1, ..., k_lo]; reverse into ascending order.
  for (std::size_t i = 0, j = pmf.size() - 1; i < j; ++i, --j) std::swap(pmf[i], pmf[j]);

  std::int64_t k_hi = mode;
  {
    double f = pmf_mode;
    for (std::int64_t k = mode; k < n; ++k) {
      f *= static_cast<double>(n - k) * odds / static_cast<double>(k + 1);
      if (f < cutoff) break;
      pmf.push_back(f);
      ++k_hi;
    }
  }

  double total = 0.0;
  for (double f : pmf) total += f;

  const double target = rng.uniform01() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    cum += pmf[i];
    if (cum >= target) return k_lo + static_cast<std::int64_t>(i);
  }
  return k_hi;
}

}  // namespace qpe
