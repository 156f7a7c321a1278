#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpe/adaptive.hpp"

namespace qpe {

/// Sweep scenario: which experiments to run and at what target errors.
/// Amplitudes are always equal weights A_j = 1/n_phi; the probability bound
/// defaults to 1/(2 n_phi) so the promise holds with margin.
struct ScenarioConfig {
  int n_phi = 2;
  std::vector<double> delta_c = {1e-2, 3e-3, 1e-3, 3e-4, 1e-4};  // descending
  SubroutineKind subroutine = SubroutineKind::kPencil;
  int seeds = 50;
  double alpha = 2.0;
  double gamma = 2.1;
  bool strict_eps = false;
  std::optional<double> eps_override;       // fixes eps = eps0 when set
  std::optional<double> prob_bound_override;

  double prob_bound() const;
  void validate() const;  // throws ConfigError

  /// Adaptive configuration for one trial at the given target error.
  /// Relaxed mode resolves eps = eps0 through the calibration below.
  AdaptiveConfig to_adaptive(double delta_c_value) const;

  std::string to_json() const;
  static ScenarioConfig from_json(const std::string& text);
};

/// Largest error parameter for which the multiplier search finds kappa > 2
/// (and an admissible first-round multiplier) across a deterministic battery
/// of dry-run estimate sets and orders. Result is cached per argument tuple.
double relaxed_epsilon(int n_phi, SubroutineKind subroutine, double prob_bound);

struct PhaseErrorRow {
  int phase_index = 0;
  double true_phase = 0.0;
  double estimate = 0.0;
  double error = 0.0;  // wrapped distance to the closest estimate
};

struct TrialRecord {
  std::uint64_t seed = 0;  // per-point seed index
  double delta_c = 0.0;
  SubroutineKind subroutine = SubroutineKind::kPencil;
  int n_phi = 0;
  double total_cost = 0.0;
  FailureMode failure = FailureMode::kNone;
  std::vector<PhaseErrorRow> rows;  // one per true phase
};

/// Runs seeds x delta_c trials. Each seed index draws one set of n_phi
/// random phases reused across every delta_c; per-trial randomness derives
/// from the master seed by counter splitting, so records are bit-reproducible
/// and adding trials never perturbs existing ones. Per-run failures are data.
std::vector<TrialRecord> run_sweep(const ScenarioConfig& cfg, std::uint64_t master_seed);

/// CSV with header seed,delta_c,subroutine,n_phi,T,phase_index,true_phase,estimate,error,failure
void write_sweep_csv(std::ostream& out, std::span<const TrialRecord> records);
std::vector<TrialRecord> read_sweep_csv(std::istream& in);

struct FitBin {
  double rms_cost = 0.0;
  double rms_error = 0.0;
  double stderr_rms = 0.0;  // delta-method standard error of the RMS
  std::int64_t count = 0;
};

struct FitResult {
  double exponent = 0.0;
  double prefactor = 0.0;
  std::vector<FitBin> bins;

  std::string to_json() const;
};

/// Logarithmic binning over cost followed by a least-squares line through
/// (log rms_cost, log rms_error). Throws InsufficientDataError with fewer
/// than two populated bins.
FitResult bin_and_fit(std::span<const std::pair<double, double>> cost_error_points, int n_bins);
FitResult bin_and_fit(std::span<const TrialRecord> records, int n_bins);

struct LimitsRow {
  std::string strategy;
  double fisher = 0.0;
  double cost = 0.0;
  double bound = 0.0;  // lower bound on the rms error at this cost
};

/// Error-versus-cost lower bounds for the three canonical schedules
/// (k = 1 only; dense k = 1..K with M repetitions per basis per k; all shots
/// at k = K). Pure arithmetic.
std::vector<LimitsRow> limits_report(int K, std::int64_t M);

/// Shortest round-trip decimal form of a double; used for byte-stable CSV.
std::string format_double(double v);

/// JSON trace of a single adaptive run.
std::string run_trace_json(const ScenarioConfig& cfg, double delta_c, std::uint64_t seed,
                           const Spectrum& spec, const RunResult& result);

}  // namespace qpe
