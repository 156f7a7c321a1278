#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "qpe/circle.hpp"
#include "qpe/spectrum.hpp"

namespace qpe {

/// The two Hankel matrices of the sampled signal, G^(a)_{i,j} = g(i+j+a-K)
/// for a = 0,1, filled with g(-kk) = conj(g(kk)).
struct HankelPair {
  Eigen::MatrixXcd g0;
  Eigen::MatrixXcd g1;
  int K = 0;
  int L_K = 0;  // floor((K+1)/2) rows
};

struct PencilOptions {
  /// Relative singular-value cutoff of the pseudoinverse: keep sigma >
  /// rtol * sigma_max. Tight for noiseless data, looser under shot noise.
  double rtol = 1e-12;
};

/// Eigenvalues of the shift matrix with their phases and fitted probabilities,
/// before thresholding. thetas[i] = Arg(lambdas[i]); entries sorted by phase.
struct PencilEstimate {
  std::vector<std::complex<double>> lambdas;
  std::vector<Phase> thetas;
  std::vector<double> amps;
  double amp_imag_residual = 0.0;  // largest |Im| discarded from the fit
};

/// Builds the Hankel pair from contiguous samples at kk = 0..K.
HankelPair build_hankel(std::span<const GEstimate> signal);

/// Minimum-norm least-squares shift matrix T = G1 * pinv(G0); singular values
/// below rtol * sigma_max are truncated. Throws DegenerateSignalError on an
/// all-zero signal.
Eigen::MatrixXcd solve_shift(const HankelPair& pair, double rtol);

/// Probability estimates from the Vandermonde least squares || B A - g ||
/// with B_{kk,j} = lambda_j^kk; returns the real parts.
std::vector<double> fit_amplitudes(std::span<const std::complex<double>> lambdas,
                                   std::span<const GEstimate> signal,
                                   double* imag_residual = nullptr);

/// Full pencil pipeline on a signal: Hankel pair, shift matrix, eigenvalues,
/// amplitude fit. No thresholding.
PencilEstimate pencil_analyze(std::span<const GEstimate> signal, const PencilOptions& opt = {});

/// Phases whose fitted probability clears prob_bound, ascending.
std::vector<Phase> pencil_extract(std::span<const GEstimate> signal, double prob_bound,
                                  const PencilOptions& opt = {});

/// Samples g(k_d * kk) for kk = 0..K with M shots each (charging the ledger),
/// then extracts as above.
std::vector<Phase> pencil_extract(const Spectrum& spec, double k_d, int K, std::int64_t M,
                                  double prob_bound, CostLedger& ledger, RngStream& rng,
                                  const PencilOptions& opt = {});

}  // namespace qpe
