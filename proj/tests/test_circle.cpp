#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qpe/circle.hpp"
#include "qpe/rng.hpp"

using namespace qpe;

TEST_CASE("wrap_dist basics") {
  CHECK(wrap_dist(0.0) == 0.0);
  CHECK(wrap_dist(3.0 * kPi / 2.0) == doctest::Approx(kPi / 2.0).epsilon(1e-15));
  CHECK(wrap_dist(kTwoPi + 0.1) == doctest::Approx(0.1).epsilon(1e-12));
  // boundary x = pi maps to the representative -pi, at distance pi
  CHECK(wrap_dist(kPi) == doctest::Approx(kPi));
  CHECK(wrap_dist(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_dist(5.0 * kTwoPi) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("wrap_dist symmetry and triangle inequality") {
  RngStream rng(17);
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(-50.0, 50.0);
    const double b = rng.uniform(-50.0, 50.0);
    CHECK(wrap_dist(a) == wrap_dist(-a));
    CHECK(wrap_dist(a + b) <= wrap_dist(a) + wrap_dist(b) + 1e-12);
    CHECK(wrap_dist(a) >= 0.0);
    CHECK(wrap_dist(a) <= kPi);
  }
}

TEST_CASE("canonical reduction") {
  CHECK(Phase(0.0).value() == 0.0);
  CHECK(Phase(kTwoPi).value() == 0.0);
  CHECK(Phase(-0.5).value() == doctest::Approx(kTwoPi - 0.5));
  CHECK(Phase(7.0 * kPi).value() == doctest::Approx(kPi));
  CHECK(Phase(-1e-18).value() < kTwoPi);
  CHECK(Phase(-1e-18).value() >= 0.0);
}

TEST_CASE("alias_set") {
  SUBCASE("uniform aliases of zero") {
    const auto a = alias_set(Phase(0.0), 4.0);
    REQUIRE(a.size() == 4);
    CHECK(a[0].value() == doctest::Approx(0.0));
    CHECK(a[1].value() == doctest::Approx(kPi / 2.0));
    CHECK(a[2].value() == doctest::Approx(kPi));
    CHECK(a[3].value() == doctest::Approx(3.0 * kPi / 2.0));
  }
  SUBCASE("theta = 4.0, k = 4") {
    const auto a = alias_set(Phase(4.0), 4.0);
    REQUIRE(a.size() == 4);
    for (int n = 0; n < 4; ++n)
      CHECK(a[n].value() == doctest::Approx(1.0 + n * kPi / 2.0).epsilon(1e-14));
  }
  SUBCASE("floor(2.5) = 2 candidates") {
    const auto a = alias_set(Phase(kPi), 2.5);
    REQUIRE(a.size() == 2);
    CHECK(a[0].value() == doctest::Approx(kPi / 2.5));
    CHECK(a[1].value() == doctest::Approx((kPi + kTwoPi) / 2.5));
  }
  SUBCASE("rejects k <= 1") {
    CHECK_THROWS(alias_set(Phase(1.0), 1.0));
    CHECK_THROWS(alias_set(Phase(1.0), 0.5));
  }
}

TEST_CASE("lemma-2 window") {
  CHECK(in_lemma2_window(Phase(kPi), 4.0));
  CHECK_FALSE(in_lemma2_window(Phase(0.0), 4.0));
  const double hi = kPi * (2.0 * std::floor(4.9) - 1.0) / 4.9;
  CHECK(in_lemma2_window(Phase(hi - 1e-9), 4.9));
  CHECK_FALSE(in_lemma2_window(Phase(hi + 0.01), 4.9));
  CHECK_THROWS(in_lemma2_window(Phase(1.0), 1.0));
}

TEST_CASE("scaled-distance identity inside the window") {
  RngStream rng(23);
  int checked = 0;
  while (checked < 100000) {
    const double k = rng.uniform(1.0 + 1e-9, 100.0);
    const Phase theta(rng.uniform(0.0, kTwoPi));
    const Phase phi(rng.uniform(0.0, kTwoPi));
    if (!in_lemma2_window(phi, k)) continue;
    ++checked;
    double best = kPi + 1.0;
    for (const auto& alias : alias_set(theta, k))
      best = std::min(best, wrap_dist(phi.value() - alias.value()));
    const double rhs = wrap_dist(k * phi.value() - theta.value()) / k;
    CHECK(std::fabs(best - rhs) <= 1e-12);
  }
}

TEST_CASE("scaled-distance identity for integer k holds everywhere") {
  RngStream rng(29);
  for (int i = 0; i < 20000; ++i) {
    const double k = static_cast<double>(2 + static_cast<int>(rng.next_u64() % 49));
    const Phase theta(rng.uniform(0.0, kTwoPi));
    const Phase phi(rng.uniform(0.0, kTwoPi));
    double best = kPi + 1.0;
    for (const auto& alias : alias_set(theta, k))
      best = std::min(best, wrap_dist(phi.value() - alias.value()));
    const double rhs = wrap_dist(k * phi.value() - theta.value()) / k;
    CHECK(std::fabs(best - rhs) <= 1e-12);
  }
}

TEST_CASE("bin index wraps") {
  BinIndex i{0, 5};
  CHECK(i.prev() == BinIndex{4, 5});
  CHECK(i.next() == BinIndex{1, 5});
  CHECK(BinIndex{4, 5}.next() == BinIndex{0, 5});
}
