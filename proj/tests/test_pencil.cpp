#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "qpe/errors.hpp"
#include "qpe/pencil.hpp"

using namespace qpe;

namespace {

Spectrum equal_weights(std::initializer_list<double> phases) {
  std::vector<SpectralLine> lines;
  const int n = static_cast<int>(phases.size());
  double partial = 0.0;
  int i = 0;
  for (double p : phases) {
    const double w = (++i == n) ? 1.0 - partial : 1.0 / n;
    lines.push_back({Phase(p), w});
    partial += w;
  }
  return Spectrum(std::move(lines));
}

}  // namespace

TEST_CASE("hankel construction") {
  SUBCASE("K = 1 layout") {
    const Spectrum spec({{Phase(0.8), 1.0}});
    const auto sig = exact_signal(spec, 1.0, 1);
    const auto pair = build_hankel(sig);
    CHECK(pair.L_K == 1);
    REQUIRE(pair.g0.rows() == 1);
    REQUIRE(pair.g0.cols() == 2);
    CHECK(pair.g0(0, 0) == std::conj(sig[1].value()));  // g(-1)
    CHECK(pair.g0(0, 1) == sig[0].value());             // g(0)
    CHECK(pair.g1(0, 0) == sig[0].value());             // g(0)
    CHECK(pair.g1(0, 1) == sig[1].value());             // g(1)
  }
  SUBCASE("K = 10 gives 5 rows") {
    const Spectrum spec({{Phase(0.8), 1.0}});
    const auto pair = build_hankel(exact_signal(spec, 1.0, 10));
    CHECK(pair.L_K == 5);
    CHECK(pair.g0.cols() == 2 * 10 - 5 + 1);
  }
  SUBCASE("index invariant against direct evaluation") {
    const Spectrum spec = equal_weights({0.3, 2.0, 4.4});
    const int K = 9;
    const auto sig = exact_signal(spec, 1.0, K);
    const auto pair = build_hankel(sig);
    for (int i = 0; i < pair.L_K; ++i) {
      for (int j = 0; j < pair.g0.cols(); ++j) {
        for (int a = 0; a <= 1; ++a) {
          const int idx = i + j + a - K;
          const std::complex<double> expect =
              idx >= 0 ? sig[idx].value() : std::conj(sig[-idx].value());
          const auto& m = a == 0 ? pair.g0 : pair.g1;
          CHECK(std::abs(m(i, j) - expect) == 0.0);
        }
      }
    }
  }
  SUBCASE("single noiseless phase gives rank-1 matrices") {
    const Spectrum spec({{Phase(1.1), 1.0}});
    const auto pair = build_hankel(exact_signal(spec, 1.0, 10));
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pair.g0);
    CHECK(svd.singularValues()(0) > 1e-6);
    for (Eigen::Index i = 1; i < svd.singularValues().size(); ++i)
      CHECK(svd.singularValues()(i) < 1e-12 * svd.singularValues()(0));
  }
  SUBCASE("missing indices rejected") {
    const Spectrum spec({{Phase(1.1), 1.0}});
    auto sig = exact_signal(spec, 1.0, 6);
    sig.erase(sig.begin() + 3);
    CHECK_THROWS(build_hankel(sig));
  }
  SUBCASE("conjugate-flipped input gives the entrywise conjugate pair") {
    const Spectrum spec = equal_weights({0.3, 2.0});
    const int K = 8;
    auto sig = exact_signal(spec, 1.0, K);
    auto flipped = sig;
    for (auto& s : flipped) s.im = -s.im;
    const auto pair = build_hankel(sig);
    const auto pair_f = build_hankel(flipped);
    for (int i = 0; i < pair.L_K; ++i)
      for (int j = 0; j < pair.g0.cols(); ++j) {
        CHECK(std::abs(pair_f.g0(i, j) - std::conj(pair.g0(i, j))) == 0.0);
        CHECK(std::abs(pair_f.g1(i, j) - std::conj(pair.g1(i, j))) == 0.0);
      }
  }
}

TEST_CASE("shift matrix") {
  SUBCASE("constant signal has eigenvalue one") {
    const Spectrum spec({{Phase(0.0), 1.0}});
    const auto shift = solve_shift(build_hankel(exact_signal(spec, 1.0, 6)), 1e-12);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(shift, false);
    double best = 1e9;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
      best = std::min(best, std::abs(eig.eigenvalues()(i) - std::complex<double>(1.0, 0.0)));
    CHECK(best < 1e-10);
  }
  SUBCASE("single phase appears as a unit-circle eigenvalue") {
    const double phi = 2.2;
    const Spectrum spec({{Phase(phi), 1.0}});
    const auto shift = solve_shift(build_hankel(exact_signal(spec, 1.0, 10)), 1e-12);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(shift, false);
    const std::complex<double> target = std::exp(std::complex<double>(0.0, phi));
    double best = 1e9;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
      best = std::min(best, std::abs(eig.eigenvalues()(i) - target));
    CHECK(best < 1e-10);
  }
  SUBCASE("two phases: two unit eigenvalues, rest near zero") {
    const Spectrum spec = equal_weights({1.0, 3.0});
    const auto shift = solve_shift(build_hankel(exact_signal(spec, 1.0, 10)), 1e-12);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(shift, false);
    int on_circle = 0;
    int near_zero = 0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
      const double m = std::abs(eig.eigenvalues()(i));
      if (std::fabs(m - 1.0) < 1e-8) ++on_circle;
      if (m < 1e-8) ++near_zero;
    }
    CHECK(on_circle == 2);
    CHECK(near_zero == 3);
  }
  SUBCASE("all-zero signal is degenerate") {
    std::vector<GEstimate> sig;
    for (int kk = 0; kk <= 6; ++kk) sig.push_back({static_cast<double>(kk), 0.0, 0.0, 0});
    CHECK_THROWS_AS(solve_shift(build_hankel(sig), 1e-12), DegenerateSignalError);
  }
}

TEST_CASE("amplitude fit") {
  SUBCASE("known two-line spectrum") {
    const Spectrum spec({{Phase(1.0), 0.6}, {Phase(2.0), 0.4}});
    const auto sig = exact_signal(spec, 1.0, 10);
    const auto est = pencil_analyze(sig, {1e-12});
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t i = 0; i < est.thetas.size(); ++i) {
      if (wrap_dist(est.thetas[i].value() - 1.0) < 1e-6) a1 = est.amps[i];
      else if (wrap_dist(est.thetas[i].value() - 2.0) < 1e-6) a2 = est.amps[i];
      else CHECK(std::fabs(est.amps[i]) < 1e-8);  // spurious eigenvalues carry no weight
    }
    CHECK(a1 == doctest::Approx(0.6).epsilon(1e-8));
    CHECK(a2 == doctest::Approx(0.4).epsilon(1e-8));
  }
  SUBCASE("single phase fits to unit weight") {
    const Spectrum spec({{Phase(0.5), 1.0}});
    const auto sig = exact_signal(spec, 1.0, 8);
    const auto est = pencil_analyze(sig, {1e-12});
    double best = 0.0;
    for (std::size_t i = 0; i < est.thetas.size(); ++i)
      if (wrap_dist(est.thetas[i].value() - 0.5) < 1e-8) best = est.amps[i];
    CHECK(best == doctest::Approx(1.0).epsilon(1e-10));
  }
  SUBCASE("empty eigenvalue list rejected") {
    const Spectrum spec({{Phase(0.5), 1.0}});
    const auto sig = exact_signal(spec, 1.0, 8);
    CHECK_THROWS(fit_amplitudes({}, sig));
  }
}

TEST_CASE("noiseless extraction is exact") {
  RngStream rng(314);
  const int K = 50;
  int runs = 0;
  while (runs < 100) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 5);
    std::vector<double> phases;
    bool ok = true;
    for (int j = 0; j < n && ok; ++j) {
      bool placed = false;
      for (int a = 0; a < 50 && !placed; ++a) {
        const double cand = rng.uniform(0.0, kTwoPi);
        placed = true;
        for (double p : phases) placed &= wrap_dist(cand - p) >= kTwoPi / K;
        if (placed) phases.push_back(cand);
      }
      ok = placed;
    }
    if (!ok) continue;
    ++runs;

    std::vector<SpectralLine> lines;
    double partial = 0.0;
    for (int j = 0; j < n; ++j) {
      const double w = (j + 1 == n) ? 1.0 - partial : 1.0 / n;
      lines.push_back({Phase(phases[j]), w});
      partial += w;
    }
    const Spectrum spec(std::move(lines));
    const auto est = pencil_extract(exact_signal(spec, 1.0, K), 1.0 / (2.0 * n), {1e-12});
    REQUIRE(est.size() == static_cast<std::size_t>(n));
    for (double p : phases) {
      double best = kPi;
      for (const auto& e : est) best = std::min(best, wrap_dist(e.value() - p));
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("thresholded amplitudes sum close to one on noiseless input") {
  const Spectrum spec = equal_weights({0.4, 1.7, 3.9, 5.6});
  const auto est = pencil_analyze(exact_signal(spec, 1.0, 30), {1e-12});
  double total = 0.0;
  for (std::size_t i = 0; i < est.amps.size(); ++i)
    if (est.amps[i] >= 0.125) total += est.amps[i];
  CHECK(total == doctest::Approx(1.0).epsilon(4 * 1e-9));
}

TEST_CASE("noisy extraction at large M recovers separated phases") {
  const Spectrum spec = equal_weights({2.0, 3.0});
  const std::int64_t M = 1000000;
  const int K = 20;
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    CostLedger ledger;
    RngStream rng(5000 + s);
    const auto est = pencil_extract(spec, 1.0, K, M, 0.25, ledger, rng, {1e-8});
    REQUIRE(!est.empty());
    for (double truth : {2.0, 3.0}) {
      double best = kPi;
      for (const auto& e : est) best = std::min(best, wrap_dist(e.value() - truth));
      worst = std::max(worst, best);
    }
  }
  CHECK(worst < 10.0 / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("phases far below the resolution limit merge") {
  const double sep = 1.5e-4;
  const Spectrum spec = equal_weights({3.0, 3.0 + sep});
  const int K = 50;  // k_d*K = 50 << 1/sep
  CostLedger ledger;
  RngStream rng(77);
  const auto est = pencil_extract(spec, 1.0, K, 100000, 0.25, ledger, rng, {1e-8});
  double worst = 0.0;
  for (double truth : {3.0, 3.0 + sep}) {
    double best = kPi;
    for (const auto& e : est) best = std::min(best, wrap_dist(e.value() - truth));
    worst = std::max(worst, best);
  }
  CHECK(worst >= sep / 4.0);  // cannot do better than a merged estimate here
}

TEST_CASE("sampling wrapper charges the ledger") {
  const Spectrum spec = equal_weights({1.0, 4.0});
  CostLedger ledger;
  RngStream rng(9);
  const int K = 12;
  const std::int64_t M = 64;
  (void)pencil_extract(spec, 2.0, K, M, 0.25, ledger, rng);
  CHECK(ledger.total() == 2.0 * M * 2.0 * (K * (K + 1) / 2));
}
