#pragma once

// Shared helpers for the test binaries: equal-weight spectra, separated
// random phases, and noise-free extraction plugs for the adaptive runner.

#include <algorithm>
#include <optional>
#include <vector>

#include "qpe/adaptive.hpp"
#include "qpe/errors.hpp"

namespace qpe::testing {

inline Spectrum equal_weight_spectrum(const std::vector<double>& phases) {
  std::vector<SpectralLine> lines;
  const int n = static_cast<int>(phases.size());
  double partial = 0.0;
  for (int i = 0; i < n; ++i) {
    const double w = (i + 1 == n) ? 1.0 - partial : 1.0 / n;
    lines.push_back({Phase(phases[i]), w});
    partial += w;
  }
  return Spectrum(std::move(lines));
}

inline std::optional<std::vector<double>> random_separated_phases(RngStream& rng, int n,
                                                                  double min_sep) {
  std::vector<double> phases;
  for (int j = 0; j < n; ++j) {
    bool placed = false;
    for (int attempt = 0; attempt < 80 && !placed; ++attempt) {
      const double cand = rng.uniform(0.0, kTwoPi);
      placed = true;
      for (double p : phases) placed &= wrap_dist(cand - p) >= min_sep;
      if (placed) phases.push_back(cand);
    }
    if (!placed) return std::nullopt;
  }
  return phases;
}

/// Returns the exact eigenphases k_d * phi_j mod 2pi of the working spectrum.
inline Extractor ideal_extractor() {
  return [](const ExtractionContext& ctx, CostLedger&, RngStream&) {
    std::vector<Phase> out;
    for (const auto& ln : ctx.working->lines()) out.emplace_back(ctx.k_d * ln.phase.value());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };
}

/// Runs the configured subroutine on the exact (noise-free) signal.
inline Extractor noiseless_extractor(SubroutineKind kind) {
  return [kind](const ExtractionContext& ctx, CostLedger&, RngStream&) {
    const auto signal = exact_signal(*ctx.working, ctx.k_d, ctx.plan.K);
    if (kind == SubroutineKind::kPencil)
      return pencil_extract(signal, ctx.prob_bound, {1e-8});
    const auto basis = BumpBasis::shared(ctx.eps, ctx.plan.K);
    return conservative_extract(estimate_bins(signal, *basis), ctx.prob_bound);
  };
}

inline AdaptiveConfig relaxed_config(int n_phi, double delta_c, double eps,
                                     SubroutineKind kind = SubroutineKind::kPencil) {
  AdaptiveConfig cfg;
  cfg.n_phi = n_phi;
  cfg.delta_c = delta_c;
  cfg.prob_bound = 1.0 / (2.0 * n_phi);
  cfg.eps0 = cfg.eps = eps;
  cfg.subroutine = kind;
  return cfg;
}

}  // namespace qpe::testing
