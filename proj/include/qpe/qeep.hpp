#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "qpe/circle.hpp"
#include "qpe/spectrum.hpp"

namespace qpe {

/// Smooth bump-function basis on L overlapping bins of half-width eps.
///
/// Bin l is centered at l*eps and supported on [(l-1)*eps, (l+1)*eps] on the
/// circle; adjacent bumps sum to one on their overlap. The requested
/// half-width is snapped down to 2*pi/L with L = ceil(2*pi/eps), so the L
/// bins tile the circle exactly and the partition of unity also holds across
/// the wrap seam. Fourier coefficients are computed once for bin 0 and
/// translated to the other bins; the basis is immutable after construction
/// and shareable across concurrent runs.
class BumpBasis {
 public:
  BumpBasis(double eps, int K);

  double epsilon() const { return eps_; }
  double requested_epsilon() const { return eps_req_; }
  int L() const { return L_; }
  int K() const { return K_; }
  /// Normalization constant of the bump integrand (about 2.252).
  double normalization() const { return a_; }

  /// f^l(phi): nonnegative, zero outside the bin support. Evaluated by
  /// adaptive quadrature of the bump integrand.
  double bump_value(int l, double phi) const;

  /// Circle Fourier coefficient f~^l(k) = (1/2pi) Int f^l(phi) e^{-ik phi};
  /// requires |k| <= K. Satisfies f~^l(-k) = conj(f~^l(k)).
  std::complex<double> bump_fourier(int l, int k) const;

  /// Cached shared instance per (eps, K).
  static std::shared_ptr<const BumpBasis> shared(double eps, int K);

 private:
  double eps_req_;
  double eps_;
  int L_;
  int K_;
  double a_;
  std::vector<double> fourier0_;  // f~^0(k) for k = 0..K; real and even in k
};

struct ShotPlan {
  int L = 0;
  int K = 0;
  std::int64_t M = 0;
};

/// Signal length and per-point shot count for a QEEP pass at error eps and
/// confidence p_d: L = ceil(2pi/eps), K = ceil(0.1 L ln^2 L),
/// M = ceil(|ln(1-p_d)| eps^-4).
ShotPlan shot_plan(double eps, double p_d);

/// Estimated weights of the L overlapping bins.
struct BinEstimates {
  std::vector<double> b;  // may be slightly negative under noise; not clipped
  double epsilon = 0.0;   // bin half-width of the basis used
  ShotPlan provenance;    // shot plan used; zeroed when fed exact values
};

/// Bin weights from a sampled (or exact) signal at kk = 0..K:
/// b_l = Re sum_{|kk|<=K} g(kk) f~^l(kk) with g(-kk) = conj(g(kk)).
BinEstimates estimate_bins(std::span<const GEstimate> signal, const BumpBasis& basis);

/// Samples g(k_d * kk) for kk = 0..K with M shots each (charging the ledger),
/// then forms the bin weights as above.
BinEstimates estimate_bins(const Spectrum& spec, double k_d, const BumpBasis& basis,
                           std::int64_t M, CostLedger& ledger, RngStream& rng,
                           const SampleOptions& opt = {});

/// Conservative eigenvalue extraction: thresholds bins at A/3, then walks the
/// ring once from the first empty bin, dropping any bin whose predecessor is
/// still in the set, so each occupied region yields one estimate. Requires a
/// gap (throws NoGapError when every bin clears the threshold).
/// Ties at exactly A/3 count as in.
std::vector<Phase> conservative_extract(const BinEstimates& bins, double prob_bound);

}  // namespace qpe
