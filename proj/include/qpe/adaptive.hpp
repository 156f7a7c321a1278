#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qpe/circle.hpp"
#include "qpe/pencil.hpp"
#include "qpe/qeep.hpp"
#include "qpe/spectrum.hpp"

namespace qpe {

enum class SubroutineKind { kQeep, kPencil };

std::string to_string(SubroutineKind s);
SubroutineKind subroutine_from_string(const std::string& s);

/// Parameters of the adaptive multi-order run.
struct AdaptiveConfig {
  double delta_c = 1e-3;    // target error
  double prob_bound = 0.25; // A; promise is A_j > A for exactly n_phi phases
  int n_phi = 2;
  double eps0 = 0.05;       // first-round error parameter
  double eps = 0.05;        // later-round error parameter
  double alpha = 2.0;
  double gamma = 2.1;
  SubroutineKind subroutine = SubroutineKind::kPencil;

  /// Strict mode enforces eps0 <= 2pi/(300 n^4) and eps <= 2pi/(300 n^2) and
  /// searches multipliers in [2, 3]; the practical mode searches up to
  /// pi/(2 eps) - 1.
  bool strict_bounds = false;

  std::int64_t binomial_exact_threshold = 1000000;
  double pencil_rtol = 1e-8;  // looser than noiseless default: inputs carry shot noise

  void validate() const;  // throws ConfigError
};

enum class FailureMode { kNone, kStep1EmptyOrOverfull, kStepCMismatch, kStepEWindow };

std::string to_string(FailureMode f);

struct RoundRecord {
  int d = 0;
  double k_d = 1.0;
  double kappa = 1.0;   // multiplier that produced k_d (1 for order 0)
  double p_d = 0.0;
  std::int64_t M = 0;
  int K = 0;
  double eps_used = 0.0;
  std::vector<double> estimates;  // in the shifted frame
  double cost_so_far = 0.0;
};

struct RunResult {
  std::vector<Phase> final_estimates;  // shifted back to the original frame
  double total_cost = 0.0;
  FailureMode failure = FailureMode::kNone;
  int d_f = 0;
  double chi = 0.0;
  std::vector<RoundRecord> trace;
};

/// Per-order confidence p_d = 1 - e^{-alpha} (k_d delta_c / pi)^gamma.
/// Throws ConfigError when the formula yields p_d <= 0 (bad schedule).
double confidence(double k_d, double delta_c, double alpha, double gamma);

struct ShiftChoice {
  double zeta = 0.0;    // midpoint of the largest circular gap
  double d_zeta = 0.0;  // half the largest gap
  double chi = 0.0;     // zeta + d_zeta/2 - 8 eps0
};

/// Largest-gap shift for the order-0 estimates. Ties between equal gaps are
/// broken by the smallest gap-start phase.
ShiftChoice choose_shift(std::span<const Phase> estimates, double eps0);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Multiplier values (within kappa_range) for which the pair at plain
/// separation delta = |phi_j - phi_l| admits neither the separation nor the
/// closeness condition: the union over n of
///   [(2 pi n - 4 eps)/(k_d delta + 4 eps), (2 pi n + 4 eps)/(k_d delta - 4 eps)]
/// intersected with [max(range lo, (pi - 2 eps)/(k_d |delta|_T + 2 eps)), range hi].
/// Returned merged and sorted.
std::vector<Interval> forbidden_regions(double delta, double k_d, double eps,
                                        Interval kappa_range);

/// Largest multiplier in the search range outside every pair's forbidden
/// region, found by walking backward over merged region boundaries.
/// First round searches [3 n_phi, 3 n_phi + 1]; later rounds [2, kappa_max]
/// with kappa_max = 3 in strict mode and pi/(2 eps) - 1 otherwise.
/// Throws NoAdmissibleMultiplierError when the range is fully covered.
double choose_multiplier(std::span<const Phase> estimates, double k_d, double eps,
                         bool first_round, int n_phi, bool strict = false);

struct MatchResult {
  std::vector<Phase> estimates;
  FailureMode failure = FailureMode::kNone;
};

/// Cross-order phase matching with the failure checks: flags a mismatch when
/// some previous estimate or some new eigenphase estimate is farther than
/// 2 eps (1 + kappa_d)/k_d from every counterpart in the lifted metric, or
/// when more than n_phi eigenphases arrive; otherwise lifts each eigenphase
/// through its best (j, n) alias (ties to smallest j, then smallest n) and
/// flags any lifted estimate that leaves the valid window for k_d.
MatchResult match_orders(std::span<const Phase> prev, std::span<const Phase> thetas,
                         double k_d, double kappa_d, double eps, int n_phi);

/// Context handed to a per-order extraction subroutine.
struct ExtractionContext {
  int d = 0;
  double k_d = 1.0;
  double eps = 0.0;
  double p_d = 0.0;
  ShotPlan plan;
  double prob_bound = 0.0;
  const Spectrum* working = nullptr;  // shifted spectrum the round runs on
};

/// A per-order extraction subroutine: returns eigenphase estimates of U^{k_d}
/// for the working spectrum. May throw SubroutineError.
using Extractor =
    std::function<std::vector<Phase>(const ExtractionContext&, CostLedger&, RngStream&)>;

/// Production extractor for the configured subroutine (QEEP bins +
/// conservative extraction, or the matrix pencil), sampling at the plan's
/// K and M and charging the ledger.
Extractor make_sampling_extractor(const AdaptiveConfig& cfg);

/// Adaptive multi-order estimation run. The spectrum must satisfy the
/// promise: exactly n_phi lines, each with probability above prob_bound.
RunResult run_adaptive(const AdaptiveConfig& cfg, const Spectrum& spec, RngStream& rng);
RunResult run_adaptive(const AdaptiveConfig& cfg, const Spectrum& spec, RngStream& rng,
                       const Extractor& extract);

/// Signal source for the single-phase ladder: returns an estimate of g(k)
/// using M repetitions of both basis experiments.
using SignalSource = std::function<std::complex<double>(double k, std::int64_t M)>;

/// Single-eigenphase ladder at k = 2^d: d_f = ceil(log2(1/delta)) rounds with
/// M_d = alpha_reps + gamma_reps (d_f + 1 - d) repetitions, each refining the
/// estimate within the +-pi/2^d window around the previous one.
Phase run_single(double delta, int alpha_reps, int gamma_reps, const SignalSource& source);

/// Convenience wrapper sampling the simulated oracle (charges the ledger).
Phase run_single(double delta, int alpha_reps, int gamma_reps, const Spectrum& spec,
                 CostLedger& ledger, RngStream& rng);

struct FisherEntry {
  double k = 0.0;
  std::int64_t m_re = 0;
  std::int64_t m_im = 0;
};

/// Fisher information of a measurement schedule: sum_k k^2 (M_re + M_im).
double fisher_info(std::span<const FisherEntry> schedule);

}  // namespace qpe
