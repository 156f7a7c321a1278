#include "qpe/qeep.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>

#include "qpe/errors.hpp"

namespace qpe {

namespace {

// Mollifier on (-1, 1); zero outside, including at the endpoints where the
// exponent diverges.
double mollifier(double u) {
  const double w = 1.0 - u * u;
  if (w <= 0.0) return 0.0;
  return std::exp(-1.0 / w);
}

constexpr int kMollifierNodes = 1 << 14;  // midpoint nodes on [0, 1]

// integral of the mollifier over (-1, 1); the integrand is flat to all
// orders at the endpoints, so the midpoint rule converges superalgebraically.
double mollifier_mass() {
  const double h = 1.0 / kMollifierNodes;
  double acc = 0.0;
  for (int i = 0; i < kMollifierNodes; ++i) acc += mollifier((i + 0.5) * h);
  return 2.0 * acc * h;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

BumpBasis::BumpBasis(double eps, int K) : eps_req_(eps), K_(K) {
  if (!(eps > 0.0) || !(eps < kTwoPi)) throw ConfigError("BumpBasis: eps must be in (0, 2pi)");
  if (K < 0) throw ConfigError("BumpBasis: K must be nonnegative");
  L_ = static_cast<int>(std::ceil(kTwoPi / eps));
  eps_ = kTwoPi / L_;

  const double mass = mollifier_mass();
  a_ = 1.0 / mass;

  // f~^0(k) via the convolution structure of the bump: f^0 is the mollifier
  // (scaled to width eps/2) convolved with the indicator of [-eps/2, eps/2],
  // so its transform is the product of the two factors.
  const double h = 1.0 / kMollifierNodes;
  std::vector<double> mnode(kMollifierNodes);
  for (int i = 0; i < kMollifierNodes; ++i) mnode[i] = mollifier((i + 0.5) * h);

  fourier0_.resize(K_ + 1);
  for (int k = 0; k <= K_; ++k) {
    // b~(k) = eps * Int_0^1 m(u) cos(k eps u / 2) du
    double acc = 0.0;
    const double w = 0.5 * k * eps_;
    for (int i = 0; i < kMollifierNodes; ++i) acc += mnode[i] * std::cos(w * (i + 0.5) * h);
    const double bt = eps_ * acc * h;
    const double wt = (k == 0) ? eps_ : 2.0 * std::sin(0.5 * k * eps_) / k;
    fourier0_[k] = a_ / (kPi * eps_) * bt * wt;
  }
}

double BumpBasis::bump_value(int l, double phi) const {
  if (l < 0 || l >= L_) throw std::out_of_range("bump_value: bin index");
  // signed offset from the bin center, in [-pi, pi)
  double x = std::fmod(phi - l * eps_, kTwoPi);
  if (x < -kPi) x += kTwoPi;
  if (x >= kPi) x -= kTwoPi;
  if (std::fabs(x) >= eps_) return 0.0;

  const double half = 0.5 * eps_;
  const double lo = std::max(-half, x - half);
  const double hi = std::min(half, x + half);
  const double scale = 2.0 / eps_;
  const auto integrand = [&](double s) { return mollifier(scale * s); };
  const double integral = integrate(integrand, lo, hi, 1e-14 * eps_);
  return 2.0 * a_ / eps_ * integral;
}

std::complex<double> BumpBasis::bump_fourier(int l, int k) const {
  if (l < 0 || l >= L_) throw std::out_of_range("bump_fourier: bin index");
  if (k > K_ || k < -K_) throw std::out_of_range("bump_fourier: |k| exceeds table length");
  const double f0 = fourier0_[std::abs(k)];
  const double angle = -static_cast<double>(k) * l * eps_;
  return f0 * std::complex<double>(std::cos(angle), std::sin(angle));
}

std::shared_ptr<const BumpBasis> BumpBasis::shared(double eps, int K) {
  static std::mutex mu;
  static std::map<std::pair<double, int>, std::shared_ptr<const BumpBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{eps, K}];
  if (!slot) slot = std::make_shared<BumpBasis>(eps, K);
  return slot;
}

ShotPlan shot_plan(double eps, double p_d) {
  if (!(eps > 0.0) || !(eps < kTwoPi)) throw ConfigError("shot_plan: eps must be in (0, 2pi)");
  if (!(p_d > 0.0) || !(p_d < 1.0)) throw ConfigError("shot_plan: p_d must be in (0, 1)");
  ShotPlan plan;
  plan.L = static_cast<int>(std::ceil(kTwoPi / eps));
  const double lnL = std::log(static_cast<double>(plan.L));
  plan.K = static_cast<int>(std::ceil(0.1 * plan.L * lnL * lnL));
  plan.M = static_cast<std::int64_t>(std::ceil(std::fabs(std::log1p(-p_d)) / (eps * eps * eps * eps)));
  return plan;
}

BinEstimates estimate_bins(std::span<const GEstimate> signal, const BumpBasis& basis) {
  const int K = basis.K();
  if (static_cast<int>(signal.size()) != K + 1)
    throw std::invalid_argument("estimate_bins: signal must cover kk = 0..K");

  BinEstimates out;
  out.epsilon = basis.epsilon();
  out.b.resize(basis.L());
  for (int l = 0; l < basis.L(); ++l) {
    // real by conjugate symmetry: the +-kk pair contributes twice the real part
    double acc = signal[0].re * basis.bump_fourier(l, 0).real();
    for (int kk = 1; kk <= K; ++kk) {
      const std::complex<double> term = signal[kk].value() * basis.bump_fourier(l, kk);
      acc += 2.0 * term.real();
    }
    out.b[l] = acc;
  }
  return out;
}

BinEstimates estimate_bins(const Spectrum& spec, double k_d, const BumpBasis& basis,
                           std::int64_t M, CostLedger& ledger, RngStream& rng,
                           const SampleOptions& opt) {
  const auto signal = sample_signal(spec, k_d, basis.K(), M, ledger, rng, opt);
  auto out = estimate_bins(signal, basis);
  out.provenance = {basis.L(), basis.K(), M};
  return out;
}

std::vector<Phase> conservative_extract(const BinEstimates& bins, double prob_bound) {
  const int L = static_cast<int>(bins.b.size());
  if (L < 1) throw std::invalid_argument("conservative_extract: empty bins");
  if (!(bins.epsilon < prob_bound / 3.0))
    throw ConfigError("conservative_extract: requires eps < A/3");

  const double cutoff = prob_bound / 3.0;
  std::vector<char> in_set(L);
  for (int l = 0; l < L; ++l) in_set[l] = bins.b[l] >= cutoff ? 1 : 0;

  int l_min = -1;
  for (int l = 0; l < L; ++l) {
    if (!in_set[l]) {
      l_min = l;
      break;
    }
  }
  if (l_min < 0) throw NoGapError();

  for (int step = 0; step < L; ++step) {
    const int l = (l_min + step) % L;
    const int prev = (l + L - 1) % L;
    if (in_set[l] && in_set[prev]) in_set[l] = 0;
  }

  std::vector<Phase> out;
  for (int l = 0; l < L; ++l)
    if (in_set[l]) out.emplace_back(l * bins.epsilon);
  return out;
}

}  // namespace qpe
