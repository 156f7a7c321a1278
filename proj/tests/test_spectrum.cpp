#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "qpe/spectrum.hpp"

using namespace qpe;

namespace {

Spectrum single(double phase) { return Spectrum({{Phase(phase), 1.0}}); }

Spectrum random_spectrum(RngStream& rng, int n) {
  std::vector<double> w(n);
  double wsum = 0.0;
  for (auto& x : w) {
    x = rng.uniform(0.1, 1.0);
    wsum += x;
  }
  std::vector<SpectralLine> lines;
  double partial = 0.0;
  for (int i = 0; i < n; ++i) {
    // the last weight is the exact float complement, so the sum is exactly 1
    const double p = (i + 1 == n) ? 1.0 - partial : w[i] / wsum;
    lines.push_back({Phase(rng.uniform(0.0, kTwoPi)), p});
    partial += p;
  }
  return Spectrum(std::move(lines));
}

}  // namespace

TEST_CASE("exact_g point values") {
  CHECK(exact_g(single(0.0), 7.3) == std::complex<double>(1.0, 0.0));
  const Spectrum antipodal({{Phase(0.0), 0.5}, {Phase(kPi), 0.5}});
  CHECK(std::abs(exact_g(antipodal, 1.0)) < 1e-15);
  const auto v = exact_g(single(kPi / 2.0), 3.0);
  CHECK(v.real() == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v.imag() == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("spectrum validation") {
  CHECK_THROWS(Spectrum({{Phase(0.0), 0.5}}));                           // sum != 1
  CHECK_THROWS(Spectrum({{Phase(0.0), 1.5}, {Phase(1.0), -0.5}}));       // negative
  CHECK_THROWS(Spectrum({{Phase(0.0), 0.5}, {Phase(kTwoPi), 0.5}}));     // duplicate mod 2pi
  CHECK_NOTHROW(Spectrum({{Phase(0.0), 0.5}, {Phase(1.0), 0.5}}));
}

TEST_CASE("exact_g bounded, unit at zero, conjugate symmetric") {
  RngStream rng(5);
  for (int i = 0; i < 10000; ++i) {
    const auto spec = random_spectrum(rng, 1 + static_cast<int>(rng.next_u64() % 5));
    const double k = rng.uniform(0.0, 200.0);
    CHECK(std::abs(exact_g(spec, k)) <= 1.0 + 1e-12);
    CHECK(exact_g(spec, 0.0) == std::complex<double>(1.0, 0.0));
    const auto diff = exact_g(spec, -k) - std::conj(exact_g(spec, k));
    CHECK(std::abs(diff) <= 1e-14);
  }
}

TEST_CASE("shift_spectrum matches multiplying g by a phase") {
  RngStream rng(7);
  const auto spec = random_spectrum(rng, 3);
  SUBCASE("identity shift") {
    const auto shifted = shift_spectrum(spec, 0.0);
    CHECK(std::abs(exact_g(shifted, 2.7) - exact_g(spec, 2.7)) < 1e-15);
  }
  SUBCASE("shift onto zero") {
    const auto shifted = shift_spectrum(single(1.0), 1.0);
    CHECK(shifted.lines()[0].phase.value() == 0.0);
  }
  SUBCASE("complex identity at random chi and integer k") {
    // at integer k the mod-2pi reduction of the shifted phases is invisible
    const double chi = 0.7;
    const auto shifted = shift_spectrum(spec, chi);
    for (double k : {1.0, 3.0, 17.0}) {
      const std::complex<double> expect =
          exact_g(spec, k) * std::exp(std::complex<double>(0.0, -k * chi));
      CHECK(std::abs(exact_g(shifted, k) - expect) <= 1e-12);
    }
  }
  SUBCASE("complex identity at real k when no phase wraps") {
    const Spectrum high({{Phase(2.0), 0.5}, {Phase(5.0), 0.5}});
    const double chi = 0.7;
    const auto shifted = shift_spectrum(high, chi);
    for (double k : {0.5, 3.0, 17.2}) {
      const std::complex<double> expect =
          exact_g(high, k) * std::exp(std::complex<double>(0.0, -k * chi));
      CHECK(std::abs(exact_g(shifted, k) - expect) <= 1e-12);
    }
  }
}

TEST_CASE("sample_g deterministic extremes") {
  CostLedger ledger;
  RngStream rng(11);
  const auto a = sample_g(single(0.0), 5.0, 100, ledger, rng);
  CHECK(a.re == 1.0);
  const auto b = sample_g(single(kPi), 1.0, 100, ledger, rng);
  CHECK(b.re == -1.0);
  CHECK_THROWS(sample_g(single(0.0), 1.0, 0, ledger, rng));
}

TEST_CASE("sample_g is unbiased") {
  const Spectrum spec({{Phase(1.0), 0.6}, {Phase(2.0), 0.4}});
  const auto truth = exact_g(spec, 2.0);
  const int n_seeds = 1000;
  const std::int64_t shots = 10000;
  double mean_re = 0.0;
  double mean_im = 0.0;
  for (int s = 0; s < n_seeds; ++s) {
    CostLedger ledger;
    RngStream rng(1000 + s);
    const auto est = sample_g(spec, 2.0, shots, ledger, rng);
    mean_re += est.re;
    mean_im += est.im;
  }
  mean_re /= n_seeds;
  mean_im /= n_seeds;
  // 5 standard errors of the seed-averaged estimator
  const double se = 1.0 / std::sqrt(static_cast<double>(shots) * n_seeds);
  CHECK(std::fabs(mean_re - truth.real()) < 5.0 * se);
  CHECK(std::fabs(mean_im - truth.imag()) < 5.0 * se);
}

TEST_CASE("sample_g standard error shrinks like 1/sqrt(M)") {
  const Spectrum spec({{Phase(0.7), 0.5}, {Phase(2.9), 0.5}});
  auto spread = [&](std::int64_t shots) {
    double s1 = 0.0, s2 = 0.0;
    const int n = 1000;
    for (int s = 0; s < n; ++s) {
      CostLedger ledger;
      RngStream rng(77000 + s);
      const double re = sample_g(spec, 3.0, shots, ledger, rng).re;
      s1 += re;
      s2 += re * re;
    }
    const double mean = s1 / n;
    return std::sqrt(std::max(0.0, s2 / n - mean * mean));
  };
  const double ratio = spread(1000) / spread(100000);
  CHECK(ratio > 10.0 / 1.5);
  CHECK(ratio < 10.0 * 1.5);
}

TEST_CASE("cost ledger") {
  CostLedger ledger;
  RngStream rng(3);
  sample_g(single(1.0), 0.0, 50, ledger, rng);
  CHECK(ledger.total() == 0.0);

  CostLedger ledger2;
  ledger2.charge(3.0, 10);
  CHECK(ledger2.total() == 60.0);

  // fixed dense schedule: k = kk * k_d, kk = 1..K, fixed M
  CostLedger ledger3;
  const double k_d = 3.0;
  const int K = 40;
  const std::int64_t M = 7;
  double prev = -1.0;
  for (int kk = 1; kk <= K; ++kk) {
    ledger3.charge(k_d * kk, M);
    CHECK(ledger3.total() > prev);
    prev = ledger3.total();
  }
  CHECK(ledger3.total() == 2.0 * M * k_d * (K * (K + 1) / 2));
  CHECK(ledger3.entries().size() == static_cast<std::size_t>(K));
}

TEST_CASE("binomial sampler statistics and edges") {
  RngStream rng(13);
  CHECK(binomial_draw(100, 0.0, rng) == 0);
  CHECK(binomial_draw(100, 1.0, rng) == 100);
  CHECK(binomial_draw(0, 0.5, rng) == 0);

  const std::int64_t n = 5000;
  const double p = 0.37;
  double s1 = 0.0, s2 = 0.0;
  const int reps = 4000;
  for (int i = 0; i < reps; ++i) {
    const double c = static_cast<double>(binomial_draw(n, p, rng));
    s1 += c;
    s2 += c * c;
  }
  const double mean = s1 / reps;
  const double var = s2 / reps - mean * mean;
  CHECK(mean == doctest::Approx(n * p).epsilon(0.01));
  CHECK(var == doctest::Approx(n * p * (1 - p)).epsilon(0.1));

  // normal-approximation branch kicks in above the threshold
  double big = 0.0;
  for (int i = 0; i < 200; ++i)
    big += static_cast<double>(binomial_draw(4000000, 0.25, rng));
  CHECK(big / 200.0 == doctest::Approx(1000000.0).epsilon(0.001));
}

TEST_CASE("spectrum JSON round trip") {
  const Spectrum spec({{Phase(0.25), 0.5}, {Phase(4.0), 0.5}});
  const auto back = Spectrum::from_json(spec.to_json());
  REQUIRE(back.size() == 2);
  CHECK(back.lines()[0].phase.value() == spec.lines()[0].phase.value());
  CHECK(back.lines()[1].prob == spec.lines()[1].prob);
}
