#include "qpe/adaptive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "qpe/errors.hpp"

namespace qpe {

namespace {

// signed representative in [-pi, pi)
double wrap_signed(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < -kPi) r += kTwoPi;
  if (r >= kPi) r -= kTwoPi;
  return r;
}

std::vector<double> values_of(std::span<const Phase> ps) {
  std::vector<double> v;
  v.reserve(ps.size());
  for (const auto& p : ps) v.push_back(p.value());
  return v;
}

double confidence_ln1mp(double k_d, double delta_c, double alpha, double gamma) {
  if (!(k_d > 0.0) || !(delta_c > 0.0)) throw ConfigError("confidence: k_d and delta_c must be positive");
  const double ln1mp = -alpha + gamma * std::log(k_d * delta_c / kPi);
  if (ln1mp >= 0.0)
    throw ConfigError("confidence: schedule yields p_d <= 0 (k_d delta_c too large)");
  return ln1mp;
}

ShotPlan plan_from_ln1mp(double eps, double ln1mp) {
  ShotPlan plan;
  plan.L = static_cast<int>(std::ceil(kTwoPi / eps));
  const double lnL = std::log(static_cast<double>(plan.L));
  plan.K = static_cast<int>(std::ceil(0.1 * plan.L * lnL * lnL));
  plan.M = static_cast<std::int64_t>(std::ceil(-ln1mp / (eps * eps * eps * eps)));
  return plan;
}

}  // namespace

std::string to_string(SubroutineKind s) {
  return s == SubroutineKind::kQeep ? "qeep" : "pencil";
}

SubroutineKind subroutine_from_string(const std::string& s) {
  if (s == "qeep") return SubroutineKind::kQeep;
  if (s == "pencil") return SubroutineKind::kPencil;
  throw ConfigError("unknown subroutine: " + s);
}

std::string to_string(FailureMode f) {
  switch (f) {
    case FailureMode::kNone: return "none";
    case FailureMode::kStep1EmptyOrOverfull: return "step1_empty_or_overfull";
    case FailureMode::kStepCMismatch: return "step_c_mismatch";
    case FailureMode::kStepEWindow: return "step_e_window";
  }
  return "unknown";
}

void AdaptiveConfig::validate() const {
  if (!(delta_c > 0.0)) throw ConfigError("config: delta_c must be positive");
  if (!(prob_bound > 0.0) || !(prob_bound < 1.0)) throw ConfigError("config: A must be in (0, 1)");
  if (n_phi < 1) throw ConfigError("config: n_phi must be >= 1");
  if (static_cast<double>(n_phi) * prob_bound > 1.0 + 1e-12)
    throw ConfigError("config: promise requires n_phi <= 1/A");
  if (!(eps0 > 0.0) || !(eps > 0.0)) throw ConfigError("config: eps0 and eps must be positive");
  if (!(alpha > 0.0)) throw ConfigError("config: alpha must be positive");
  if (!(gamma > 2.0)) throw ConfigError("config: gamma must exceed 2");
  if (subroutine == SubroutineKind::kQeep) {
    if (!(eps0 < prob_bound / 3.0) || !(eps < prob_bound / 3.0))
      throw ConfigError("config: QEEP subroutine requires eps, eps0 < A/3");
  }
  if (strict_bounds) {
    const double n = static_cast<double>(n_phi);
    if (eps0 > kTwoPi / (300.0 * n * n * n * n) * (1.0 + 1e-12))
      throw ConfigError("config: strict mode requires eps0 <= 2pi/(300 n^4)");
    if (eps > kTwoPi / (300.0 * n * n) * (1.0 + 1e-12))
      throw ConfigError("config: strict mode requires eps <= 2pi/(300 n^2)");
  }
}

double confidence(double k_d, double delta_c, double alpha, double gamma) {
  return -std::expm1(confidence_ln1mp(k_d, delta_c, alpha, gamma));
}

ShiftChoice choose_shift(std::span<const Phase> estimates, double eps0) {
  if (estimates.empty()) throw std::invalid_argument("choose_shift: no estimates");
  std::vector<double> v = values_of(estimates);
  std::sort(v.begin(), v.end());

  std::size_t best = 0;
  double best_gap = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double next = (i + 1 < v.size()) ? v[i + 1] : v[0] + kTwoPi;
    const double gap = next - v[i];
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  ShiftChoice out;
  out.d_zeta = 0.5 * best_gap;
  out.zeta = wrap_to_canonical(v[best] + out.d_zeta);
  out.chi = out.zeta + 0.5 * out.d_zeta - 8.0 * eps0;
  return out;
}

namespace {

// Geometry of one pair's forbidden comb. Tooth n spans
//   [(2 pi n - 4 eps)/(prod + 4 eps), (2 pi n + 4 eps)/(prod - 4 eps)],
// teeth with index >= solid_start overlap their successor (the overlap
// condition is monotone in n), and below closeness_lb the closeness
// condition holds so nothing is forbidden.
struct PairComb {
  double prod = 0.0;          // k_d * delta
  double closeness_lb = 0.0;  // (pi - 2 eps)/(k_d |delta|_T + 2 eps)
  double solid_start = 0.0;   // real index c; teeth n >= c merge upward
  bool always = false;        // prod <= 4 eps: tooth upper ends unbounded
  bool never = false;         // coincident pair: closeness always holds
};

PairComb make_comb(double delta, double k_d, double eps) {
  PairComb g;
  const double delta_t = wrap_dist(delta);
  if (delta_t <= 0.0) {
    g.never = true;
    return g;
  }
  g.prod = k_d * delta;
  g.closeness_lb = (kPi - 2.0 * eps) / (k_d * delta_t + 2.0 * eps);
  const double four_eps = 4.0 * eps;
  g.always = g.prod <= four_eps;
  if (!g.always)
    g.solid_start =
        (kTwoPi * g.prod - 8.0 * eps * g.prod - 8.0 * kPi * eps) / (16.0 * kPi * eps);
  return g;
}

double tooth_lo(const PairComb& g, long long n, double eps) {
  return (kTwoPi * static_cast<double>(n) - 4.0 * eps) / (g.prod + 4.0 * eps);
}

double tooth_hi(const PairComb& g, long long n, double eps) {
  return (kTwoPi * static_cast<double>(n) + 4.0 * eps) / (g.prod - 4.0 * eps);
}

// Lower end of the merged forbidden block covering kappa, if it is covered.
std::optional<double> covering_block_lo(const PairComb& g, double kappa, double eps) {
  if (g.never || kappa < g.closeness_lb) return std::nullopt;
  if (g.always) return g.closeness_lb;
  const double four_eps = 4.0 * eps;
  // smallest tooth index whose upper end reaches kappa
  const double n_lower = (kappa * (g.prod - four_eps) - four_eps) / kTwoPi;
  const double n_upper = (kappa * (g.prod + four_eps) + four_eps) / kTwoPi;
  const long long n0 = std::max(0LL, static_cast<long long>(std::ceil(n_lower - 1e-12)));
  if (static_cast<double>(n0) > n_upper) return std::nullopt;

  long long chain_bottom = n0;
  if (static_cast<double>(n0 - 1) >= g.solid_start)
    chain_bottom = std::max(0LL, static_cast<long long>(std::ceil(g.solid_start)));
  return std::max(tooth_lo(g, chain_bottom, eps), g.closeness_lb);
}

}  // namespace

std::vector<Interval> forbidden_regions(double delta, double k_d, double eps,
                                        Interval kappa_range) {
  if (!(delta > 0.0)) throw std::invalid_argument("forbidden_regions: delta must be positive");
  if (!(kappa_range.lo <= kappa_range.hi)) return {};

  const PairComb comb = make_comb(delta, k_d, eps);
  if (comb.never) return {};
  const double lb = std::max(kappa_range.lo, comb.closeness_lb);
  if (lb > kappa_range.hi) return {};
  if (comb.always) return {{lb, kappa_range.hi}};

  const double four_eps = 4.0 * eps;
  const long long n_start = std::max(
      0LL, static_cast<long long>(std::floor((lb * (comb.prod - four_eps) - four_eps) / kTwoPi)));

  std::vector<Interval> merged;
  for (long long n = n_start;; ++n) {
    double lo = tooth_lo(comb, n, eps);
    if (lo > kappa_range.hi) break;
    double hi = tooth_hi(comb, n, eps);
    if (static_cast<double>(n) >= comb.solid_start) hi = kappa_range.hi;  // teeth merge upward
    lo = std::max(lo, lb);
    hi = std::min(hi, kappa_range.hi);
    if (lo <= hi) {
      if (!merged.empty() && lo <= merged.back().hi)
        merged.back().hi = std::max(merged.back().hi, hi);
      else
        merged.push_back({lo, hi});
    }
    if (static_cast<double>(n) >= comb.solid_start) break;
  }
  return merged;
}

namespace {

bool pair_conditions_hold(double a, double b, double kappa, double k_d, double eps,
                          bool first_round) {
  const double diff = a - b;
  const double separated = wrap_dist(k_d * kappa * diff);
  if (separated > 4.0 * eps * (1.0 + kappa)) return true;
  const double closeness_bound =
      first_round ? kPi / kappa : (kPi - 2.0 * eps * (1.0 + kappa)) / (k_d * kappa);
  return wrap_dist(diff) < closeness_bound;
}

}  // namespace

double choose_multiplier(std::span<const Phase> estimates, double k_d, double eps,
                         bool first_round, int n_phi, bool strict) {
  if (static_cast<int>(estimates.size()) > n_phi)
    throw std::invalid_argument("choose_multiplier: more estimates than n_phi");

  Interval range;
  if (first_round) {
    range = {3.0 * n_phi, 3.0 * n_phi + 1.0};
  } else {
    const double kappa_max = strict ? 3.0 : kPi / (2.0 * eps) - 1.0;
    if (kappa_max < 2.0) throw NoAdmissibleMultiplierError();
    range = {2.0, kappa_max};
  }

  const std::vector<double> v = values_of(estimates);
  std::vector<PairComb> combs;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (v[i] != v[j]) combs.push_back(make_comb(std::fabs(v[i] - v[j]), k_d, eps));

  // walk backward over merged block boundaries, lazily per pair
  double cand = range.hi;
  bool settled = false;
  for (long long step = 0; step < 200000; ++step) {
    double drop = cand;
    bool covered = false;
    for (const auto& g : combs) {
      const auto block_lo = covering_block_lo(g, cand, eps);
      if (block_lo) {
        covered = true;
        drop = std::min(drop, *block_lo);
      }
    }
    if (!covered) {
      settled = true;
      break;
    }
    cand = drop - 1e-9 * std::max(1.0, std::fabs(drop));
    if (cand < range.lo) throw NoAdmissibleMultiplierError();
  }
  if (!settled) {
    // boundary walk budget exhausted in a near-solid comb forest; fall back
    // to a coarse descending grid and settle for the first admissible value
    const double step = (cand - range.lo) / 20000.0;
    settled = false;
    for (double probe = cand; probe >= range.lo; probe -= step) {
      bool ok = true;
      for (std::size_t i = 0; i < v.size() && ok; ++i)
        for (std::size_t j = i + 1; j < v.size() && ok; ++j)
          if (v[i] != v[j]) ok = pair_conditions_hold(v[i], v[j], probe, k_d, eps, first_round);
      if (ok) {
        cand = probe;
        settled = true;
        break;
      }
    }
    if (!settled) throw NoAdmissibleMultiplierError();
  }
  if (cand < range.lo) throw NoAdmissibleMultiplierError();

  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j)
      if (v[i] != v[j] && !pair_conditions_hold(v[i], v[j], cand, k_d, eps, first_round))
        throw std::logic_error("choose_multiplier: selected multiplier fails recheck");
  return cand;
}

namespace {

struct AliasPick {
  double dist = std::numeric_limits<double>::infinity();
  int n = 0;
};

// min over n in [0, floor(k)) of |prev - (theta + 2 pi n)/k|_T, with the
// smallest achieving n. Candidate n values come from unwrapping the target;
// small floor(k) falls back to enumeration.
AliasPick best_alias(double prev, double theta, double k) {
  const int n_count = static_cast<int>(std::floor(k));
  AliasPick pick;
  auto consider = [&](int n) {
    if (n < 0 || n >= n_count) return;
    const double d = wrap_dist(prev - (theta + kTwoPi * n) / k);
    if (d < pick.dist || (d == pick.dist && n < pick.n)) {
      pick.dist = d;
      pick.n = n;
    }
  };
  if (n_count <= 64) {
    for (int n = 0; n < n_count; ++n) consider(n);
    return pick;
  }
  const double t = prev - theta / k;
  for (int m = -2; m <= 1; ++m) {
    const double ideal = (t + kTwoPi * m) * k / kTwoPi;
    const int base = static_cast<int>(std::llround(ideal));
    for (int off = -1; off <= 1; ++off) consider(base + off);
  }
  consider(0);
  consider(n_count - 1);
  return pick;
}

}  // namespace

MatchResult match_orders(std::span<const Phase> prev, std::span<const Phase> thetas,
                         double k_d, double kappa_d, double eps, int n_phi) {
  if (prev.empty() || thetas.empty())
    throw std::invalid_argument("match_orders: both estimate lists must be nonempty");

  MatchResult out;
  if (static_cast<int>(thetas.size()) > n_phi) {
    out.failure = FailureMode::kStepCMismatch;
    return out;
  }

  const double bound = 2.0 * eps * (1.0 + kappa_d) / k_d;
  const std::vector<double> pv = values_of(prev);
  const std::vector<double> tv = values_of(thetas);

  // lifted distances of every (prev, theta) pair
  std::vector<std::vector<AliasPick>> xi(pv.size(), std::vector<AliasPick>(tv.size()));
  for (std::size_t j = 0; j < pv.size(); ++j)
    for (std::size_t l = 0; l < tv.size(); ++l) xi[j][l] = best_alias(pv[j], tv[l], k_d);

  for (std::size_t j = 0; j < pv.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < tv.size(); ++l) best = std::min(best, xi[j][l].dist);
    if (best > bound) {
      out.failure = FailureMode::kStepCMismatch;
      return out;
    }
  }
  for (std::size_t l = 0; l < tv.size(); ++l) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pv.size(); ++j) best = std::min(best, xi[j][l].dist);
    if (best > bound) {
      out.failure = FailureMode::kStepCMismatch;
      return out;
    }
  }

  const double win_lo = kPi / k_d;
  const double win_hi = kPi * (2.0 * std::floor(k_d) - 1.0) / k_d;
  std::vector<double> lifted;
  lifted.reserve(tv.size());
  for (std::size_t l = 0; l < tv.size(); ++l) {
    std::size_t best_j = 0;
    for (std::size_t j = 1; j < pv.size(); ++j) {
      const auto& cur = xi[j][l];
      const auto& champ = xi[best_j][l];
      if (cur.dist < champ.dist || (cur.dist == champ.dist && cur.n < champ.n)) best_j = j;
    }
    const double value = wrap_to_canonical((tv[l] + kTwoPi * xi[best_j][l].n) / k_d);
    if (value < win_lo || value > win_hi) {
      out.failure = FailureMode::kStepEWindow;
      return out;
    }
    lifted.push_back(value);
  }
  std::sort(lifted.begin(), lifted.end());
  for (double v : lifted) out.estimates.emplace_back(v);
  return out;
}

Extractor make_sampling_extractor(const AdaptiveConfig& cfg) {
  const SampleOptions sopt{cfg.binomial_exact_threshold};
  const PencilOptions popt{cfg.pencil_rtol};
  const SubroutineKind kind = cfg.subroutine;
  return [sopt, popt, kind](const ExtractionContext& ctx, CostLedger& ledger,
                            RngStream& rng) -> std::vector<Phase> {
    if (kind == SubroutineKind::kQeep) {
      const auto basis = BumpBasis::shared(ctx.eps, ctx.plan.K);
      const auto bins =
          estimate_bins(*ctx.working, ctx.k_d, *basis, ctx.plan.M, ledger, rng, sopt);
      return conservative_extract(bins, ctx.prob_bound);
    }
    return pencil_extract(*ctx.working, ctx.k_d, ctx.plan.K, ctx.plan.M, ctx.prob_bound,
                          ledger, rng, popt);
  };
}

namespace {

std::vector<Phase> unshift(std::span<const Phase> estimates, double chi) {
  std::vector<Phase> out;
  out.reserve(estimates.size());
  for (const auto& e : estimates) out.emplace_back(e.value() + chi);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

RunResult run_adaptive(const AdaptiveConfig& cfg, const Spectrum& spec, RngStream& rng) {
  return run_adaptive(cfg, spec, rng, make_sampling_extractor(cfg));
}

RunResult run_adaptive(const AdaptiveConfig& cfg, const Spectrum& spec, RngStream& rng,
                       const Extractor& extract) {
  cfg.validate();

  CostLedger ledger;
  RunResult res;
  Spectrum working = spec;

  // When no admissible multiplier exists at the current error parameter, the
  // round is redone at a smaller one. The admissibility conditions must use
  // the error parameter the estimates were actually extracted at, so only a
  // re-extraction can unlock the search.
  constexpr int kMaxShrinks = 40;
  int shrinks = 0;

  // order 0 at error parameter eps0
  double eps0 = cfg.eps0;
  std::vector<Phase> est;
  ShiftChoice shift;
  double kappa_next = 0.0;
  for (;;) {
    const double ln1mp0 = confidence_ln1mp(1.0, cfg.delta_c, cfg.alpha, cfg.gamma);
    const double p0 = -std::expm1(ln1mp0);
    const ShotPlan plan0 = plan_from_ln1mp(eps0, ln1mp0);

    est.clear();
    bool subroutine_failed = false;
    try {
      est = extract({0, 1.0, eps0, p0, plan0, cfg.prob_bound, &spec}, ledger, rng);
    } catch (const SubroutineError&) {
      subroutine_failed = true;
    }
    std::sort(est.begin(), est.end());
    res.trace.push_back(
        {0, 1.0, 1.0, p0, plan0.M, plan0.K, eps0, values_of(est), ledger.total()});

    if (subroutine_failed || est.empty() || static_cast<int>(est.size()) > cfg.n_phi) {
      res.final_estimates = {Phase(0.0)};
      res.failure = FailureMode::kStep1EmptyOrOverfull;
      res.d_f = 0;
      res.total_cost = ledger.total();
      return res;
    }

    // shift the spectrum so every phase sits safely inside the matching window
    shift = choose_shift(est, eps0);
    std::vector<Phase> shifted;
    shifted.reserve(est.size());
    for (const auto& e : est) shifted.emplace_back(e.value() - shift.chi);
    std::sort(shifted.begin(), shifted.end());

    try {
      kappa_next = choose_multiplier(shifted, 1.0, eps0, /*first_round=*/true, cfg.n_phi,
                                     cfg.strict_bounds);
    } catch (const NoAdmissibleMultiplierError&) {
      if (++shrinks > kMaxShrinks) throw;
      eps0 *= 0.8;
      continue;
    }
    est = std::move(shifted);
    working = shift_spectrum(spec, shift.chi);
    break;
  }
  res.chi = shift.chi;

  double eps_run = std::min(cfg.eps, eps0);
  double eps_prev_round = eps0;
  double k_cur = 1.0;
  double k_next = kappa_next;
  int d = 0;

  while (k_cur < 2.0 * eps_run / cfg.delta_c) {
    ++d;
    if (d > 200) throw std::logic_error("run_adaptive: order count runaway");
    const double kappa_cur = kappa_next;
    k_cur = k_next;

    std::vector<Phase> accepted;
    for (;;) {
      const double ln1mp = confidence_ln1mp(k_cur, cfg.delta_c, cfg.alpha, cfg.gamma);
      const double p_d = -std::expm1(ln1mp);
      const double eps_cur = eps_run;
      const ShotPlan plan = plan_from_ln1mp(eps_cur, ln1mp);

      std::vector<Phase> thetas;
      bool round_failed = false;
      try {
        thetas = extract({d, k_cur, eps_cur, p_d, plan, cfg.prob_bound, &working}, ledger, rng);
      } catch (const SubroutineError&) {
        round_failed = true;
      }
      std::sort(thetas.begin(), thetas.end());

      MatchResult match;
      if (round_failed || thetas.empty()) {
        match.failure = FailureMode::kStepCMismatch;
      } else {
        match = match_orders(est, thetas, k_cur, kappa_cur,
                             std::max(eps_prev_round, eps_cur), cfg.n_phi);
      }
      if (match.failure != FailureMode::kNone) {
        res.trace.push_back({d, k_cur, kappa_cur, p_d, plan.M, plan.K, eps_cur,
                             values_of(thetas), ledger.total()});
        res.final_estimates = unshift(est, shift.chi);
        res.failure = match.failure;
        res.d_f = d - 1;
        res.total_cost = ledger.total();
        return res;
      }

      res.trace.push_back({d, k_cur, kappa_cur, p_d, plan.M, plan.K, eps_cur,
                           values_of(match.estimates), ledger.total()});
      try {
        kappa_next = choose_multiplier(match.estimates, k_cur, eps_cur, /*first_round=*/false,
                                       cfg.n_phi, cfg.strict_bounds);
      } catch (const NoAdmissibleMultiplierError&) {
        if (++shrinks > kMaxShrinks) throw;
        eps_run *= 0.8;
        continue;  // redo this round's extraction at the smaller eps
      }
      accepted = std::move(match.estimates);
      eps_prev_round = eps_cur;
      break;
    }
    est = std::move(accepted);
    k_next = k_cur * kappa_next;
  }

  res.final_estimates = unshift(est, shift.chi);
  res.failure = FailureMode::kNone;
  res.d_f = d;
  res.total_cost = ledger.total();
  return res;
}

Phase run_single(double delta, int alpha_reps, int gamma_reps, const SignalSource& source) {
  if (!(delta > 0.0) || !(delta < 1.0)) throw ConfigError("run_single: delta must be in (0, 1)");
  if (alpha_reps < 1 || gamma_reps < 0) throw ConfigError("run_single: bad repetition counts");

  const int d_f = static_cast<int>(std::ceil(std::log2(1.0 / delta)));
  double phi = 0.0;
  for (int d = 0; d <= d_f; ++d) {
    const std::int64_t reps = alpha_reps + static_cast<std::int64_t>(gamma_reps) * (d_f + 1 - d);
    const double k = std::ldexp(1.0, d);
    const double theta = wrap_to_canonical(std::arg(source(k, reps)));
    if (d == 0) {
      phi = theta;
    } else {
      // unique refinement inside [phi - pi/2^d, phi + pi/2^d)
      phi = wrap_to_canonical(phi + wrap_signed(theta - k * phi) / k);
    }
  }
  return Phase(phi);
}

Phase run_single(double delta, int alpha_reps, int gamma_reps, const Spectrum& spec,
                 CostLedger& ledger, RngStream& rng) {
  const SignalSource source = [&](double k, std::int64_t reps) {
    return sample_g(spec, k, reps, ledger, rng).value();
  };
  return run_single(delta, alpha_reps, gamma_reps, source);
}

double fisher_info(std::span<const FisherEntry> schedule) {
  if (schedule.empty()) throw std::invalid_argument("fisher_info: empty schedule");
  double acc = 0.0;
  for (const auto& e : schedule)
    acc += e.k * e.k * static_cast<double>(e.m_re + e.m_im);
  return acc;
}

}  // namespace qpe
