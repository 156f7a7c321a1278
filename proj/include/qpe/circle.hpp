#pragma once

#include <cstdint>
#include <vector>

namespace qpe {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;

/// Default absolute tolerance for comparing phases. Exact-real identities
/// from the math turn into comparisons at this tolerance.
inline constexpr double kPhaseTol = 1e-12;

/// Reduce a finite real to its canonical representative in [0, 2pi).
/// Uses floored modulo so negative inputs land in-range.
double wrap_to_canonical(double x);

/// An angle in radians, canonically reduced to [0, 2pi).
class Phase {
 public:
  Phase() = default;
  explicit Phase(double radians) : value_(wrap_to_canonical(radians)) {}

  double value() const { return value_; }

  Phase operator+(Phase o) const { return Phase(value_ + o.value_); }
  Phase operator-(Phase o) const { return Phase(value_ - o.value_); }
  Phase shifted(double delta) const { return Phase(value_ + delta); }

  bool operator==(const Phase&) const = default;
  auto operator<=>(const Phase&) const = default;

 private:
  double value_ = 0.0;
};

bool phase_close(Phase a, Phase b, double tol = kPhaseTol);

/// Distance on the circle: min over integers m of |x - 2*pi*m|, with the
/// representative taken in [-pi, pi). Total on finite reals, range [0, pi].
double wrap_dist(double x);

inline double wrap_dist(Phase a, Phase b) { return wrap_dist(a.value() - b.value()); }

/// The floor(k) candidate pre-images (theta + 2*pi*n)/k, n = 0..floor(k)-1,
/// of an eigenphase theta of U^k, each reduced to [0, 2pi).
/// Requires k > 1.
std::vector<Phase> alias_set(Phase theta, double k);

/// Whether phi lies in the window pi/k <= phi <= pi*(2*floor(k)-1)/k inside
/// which the scaled-distance identity
///   min_n |phi - (theta + 2*pi*n)/k|_T = |k*phi - theta|_T / k
/// holds for every theta. Requires k > 1.
bool in_lemma2_window(Phase phi, double k);

/// Index into a ring of L bins with wrapping increment/decrement.
struct BinIndex {
  int l = 0;
  int L = 1;

  BinIndex next() const { return {l + 1 == L ? 0 : l + 1, L}; }
  BinIndex prev() const { return {l == 0 ? L - 1 : l - 1, L}; }
  bool operator==(const BinIndex&) const = default;
};

}  // namespace qpe
