#include "qpe/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qpe/errors.hpp"

namespace qpe {

namespace {

std::complex<double> signal_at(std::span<const GEstimate> signal, int k) {
  return k >= 0 ? signal[k].value() : std::conj(signal[-k].value());
}

void check_contiguous(std::span<const GEstimate> signal) {
  if (signal.size() < 2) throw std::invalid_argument("pencil: need samples at kk = 0..K, K >= 1");
  const double base = signal[1].k;
  if (!(base > 0.0)) throw std::invalid_argument("pencil: sample spacing must be positive");
  for (std::size_t i = 0; i < signal.size(); ++i) {
    const double expected = base * static_cast<double>(i);
    if (std::fabs(signal[i].k - expected) > 1e-9 * std::max(1.0, expected))
      throw std::invalid_argument("pencil: samples must be contiguous at kk = 0..K");
  }
}

}  // namespace

HankelPair build_hankel(std::span<const GEstimate> signal) {
  check_contiguous(signal);
  const int K = static_cast<int>(signal.size()) - 1;
  const int rows = (K + 1) / 2;
  const int cols = 2 * K - rows + 1;

  HankelPair pair;
  pair.K = K;
  pair.L_K = rows;
  pair.g0.resize(rows, cols);
  pair.g1.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      pair.g0(i, j) = signal_at(signal, i + j - K);
      pair.g1(i, j) = signal_at(signal, i + j + 1 - K);
    }
  }
  return pair;
}

Eigen::MatrixXcd solve_shift(const HankelPair& pair, double rtol) {
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(pair.g0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) throw DegenerateSignalError();

  const double cutoff = rtol * sv(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv(i) = 1.0 / sv(i);

  // T = G1 * V * S^+ * U^H, the minimum-norm least-squares solution.
  return pair.g1 * (svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint());
}

std::vector<double> fit_amplitudes(std::span<const std::complex<double>> lambdas,
                                   std::span<const GEstimate> signal, double* imag_residual) {
  if (lambdas.empty()) throw std::invalid_argument("fit_amplitudes: no eigenvalues");
  const int K = static_cast<int>(signal.size()) - 1;
  const int n = static_cast<int>(lambdas.size());

  // Exactly-zero eigenvalues all share the column (1, 0, 0, ...); the
  // minimum-norm solution splits their combined weight equally, so fit one
  // shared column and divide.
  std::vector<int> cols;
  int zero_count = 0;
  for (int j = 0; j < n; ++j) {
    if (lambdas[j] == std::complex<double>(0.0, 0.0)) {
      ++zero_count;
    } else {
      cols.push_back(j);
    }
  }
  const int m = static_cast<int>(cols.size()) + (zero_count > 0 ? 1 : 0);

  Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(K + 1, m);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::complex<double> pw(1.0, 0.0);
    for (int kk = 0; kk <= K; ++kk) {
      B(kk, c) = pw;
      pw *= lambdas[cols[c]];
    }
  }
  if (zero_count > 0) B(0, m - 1) = 1.0;

  Eigen::VectorXcd g(K + 1);
  for (int kk = 0; kk <= K; ++kk) g(kk) = signal[kk].value();

  Eigen::BDCSVD<Eigen::MatrixXcd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-13);
  const Eigen::VectorXcd amps = svd.solve(g);

  double worst_imag = 0.0;
  std::vector<double> out(n, 0.0);
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out[cols[c]] = amps(c).real();
    worst_imag = std::max(worst_imag, std::fabs(amps(c).imag()));
  }
  if (zero_count > 0) {
    const std::complex<double> share = amps(m - 1) / static_cast<double>(zero_count);
    for (int j = 0; j < n; ++j)
      if (lambdas[j] == std::complex<double>(0.0, 0.0)) out[j] = share.real();
    worst_imag = std::max(worst_imag, std::fabs(share.imag()));
  }
  if (imag_residual) *imag_residual = worst_imag;
  return out;
}

PencilEstimate pencil_analyze(std::span<const GEstimate> signal, const PencilOptions& opt) {
  const auto pair = build_hankel(signal);

  // Same spectrum as the L_K x L_K shift matrix G1 * pinv(G0): its nonzero
  // eigenvalues equal those of the rank-r compression U^H G1 V S^-1, and the
  // remaining L_K - r are exact zeros.
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(pair.g0, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0)) throw DegenerateSignalError();
  int rank = 0;
  while (rank < sv.size() && sv(rank) > opt.rtol * sv(0)) ++rank;

  const Eigen::MatrixXcd compressed = svd.matrixU().leftCols(rank).adjoint() * pair.g1 *
                                      svd.matrixV().leftCols(rank) *
                                      sv.head(rank).cwiseInverse().asDiagonal();
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> eig(compressed, /*computeEigenvectors=*/false);
  if (eig.info() != Eigen::Success) throw SubroutineError("matrix pencil: eigensolver failed");

  std::vector<std::complex<double>> lambdas(eig.eigenvalues().data(),
                                            eig.eigenvalues().data() + rank);
  lambdas.resize(pair.L_K, std::complex<double>(0.0, 0.0));
  PencilEstimate est;
  est.amps = fit_amplitudes(lambdas, signal, &est.amp_imag_residual);

  std::vector<int> order(lambdas.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> args(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    args[i] = wrap_to_canonical(std::arg(lambdas[i]));
  std::sort(order.begin(), order.end(), [&](int a, int b) { return args[a] < args[b]; });

  PencilEstimate sorted;
  sorted.amp_imag_residual = est.amp_imag_residual;
  for (int idx : order) {
    sorted.lambdas.push_back(lambdas[idx]);
    sorted.thetas.emplace_back(args[idx]);
    sorted.amps.push_back(est.amps[idx]);
  }
  return sorted;
}

std::vector<Phase> pencil_extract(std::span<const GEstimate> signal, double prob_bound,
                                  const PencilOptions& opt) {
  const auto est = pencil_analyze(signal, opt);
  std::vector<Phase> out;
  for (std::size_t i = 0; i < est.thetas.size(); ++i)
    if (est.amps[i] >= prob_bound) out.push_back(est.thetas[i]);
  return out;
}

std::vector<Phase> pencil_extract(const Spectrum& spec, double k_d, int K, std::int64_t M,
                                  double prob_bound, CostLedger& ledger, RngStream& rng,
                                  const PencilOptions& opt) {
  if (K < 1) throw ConfigError("pencil_extract: K must be >= 1");
  if (M < 1) throw ConfigError("pencil_extract: M must be >= 1");
  const auto signal = sample_signal(spec, k_d, K, M, ledger, rng);
  return pencil_extract(signal, prob_bound, opt);
}

}  // namespace qpe
