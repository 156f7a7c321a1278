#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qpe/circle.hpp"
#include "qpe/rng.hpp"

namespace qpe {

struct SpectralLine {
  Phase phase;
  double prob = 0.0;
};

/// The hidden ground truth behind the simulated oracle: a discrete set of
/// eigenphases with strictly positive probabilities summing to one.
/// Immutable after construction.
class Spectrum {
 public:
  explicit Spectrum(std::vector<SpectralLine> lines);

  std::span<const SpectralLine> lines() const { return lines_; }
  std::size_t size() const { return lines_.size(); }

  std::string to_json() const;
  static Spectrum from_json(const std::string& text);

 private:
  std::vector<SpectralLine> lines_;
};

/// One sampled estimate of the phase function at a point k.
struct GEstimate {
  double k = 0.0;
  double re = 0.0;  // in [-1, 1]
  double im = 0.0;  // in [-1, 1]
  std::int64_t shots = 0;

  std::complex<double> value() const { return {re, im}; }
};

/// Running tally of simulated quantum cost in unitary applications.
class CostLedger {
 public:
  struct Entry {
    double k;
    std::int64_t shots;
    double charged_cost;
  };

  /// Charges 2*shots*k; queries at k = 0 cost nothing.
  void charge(double k, std::int64_t shots);

  double total() const { return total_; }
  std::span<const Entry> entries() const { return entries_; }

 private:
  double total_ = 0.0;
  std::vector<Entry> entries_;
};

/// Exact phase function g(k) = sum_j A_j exp(i*k*phi_j).
std::complex<double> exact_g(const Spectrum& spec, double k);

/// Spectrum with every phase mapped to (phi - chi) mod 2pi. Equivalent to
/// multiplying g(k) by exp(-i*k*chi).
Spectrum shift_spectrum(const Spectrum& spec, double chi);

struct SampleOptions {
  std::int64_t binomial_exact_threshold = 1000000;
};

/// Simulates the two single-control-qubit readout experiments at evolution
/// length k: counts of +1 outcomes are drawn from Binomial(M, P) with
///   P_r(+1) = (1/2) sum_j A_j (1 + cos(k phi_j)),
///   P_i(+1) = (1/2) sum_j A_j (1 - sin(k phi_j)),
/// and mapped to re = 2 c_r/M - 1, im = 1 - 2 c_i/M. Charges 2*M*k.
GEstimate sample_g(const Spectrum& spec, double k, std::int64_t shots, CostLedger& ledger,
                   RngStream& rng, const SampleOptions& opt = {});

/// Samples g at k = k_base * kk for kk = 0..K, M shots each.
std::vector<GEstimate> sample_signal(const Spectrum& spec, double k_base, int K,
                                     std::int64_t shots, CostLedger& ledger, RngStream& rng,
                                     const SampleOptions& opt = {});

/// Noise-free signal with the same layout as sample_signal (shots reported
/// as 0, nothing charged). Used wherever the estimators are fed exact g.
std::vector<GEstimate> exact_signal(const Spectrum& spec, double k_base, int K);

}  // namespace qpe
