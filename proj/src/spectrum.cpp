#include "qpe/spectrum.hpp"

#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace qpe {

Spectrum::Spectrum(std::vector<SpectralLine> lines) : lines_(std::move(lines)) {
  if (lines_.empty()) throw std::invalid_argument("Spectrum: no lines");
  double sum = 0.0;
  for (const auto& ln : lines_) {
    if (!(ln.prob > 0.0)) throw std::invalid_argument("Spectrum: probabilities must be positive");
    sum += ln.prob;
  }
  if (std::fabs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("Spectrum: probabilities must sum to 1");
  for (std::size_t i = 0; i < lines_.size(); ++i)
    for (std::size_t j = i + 1; j < lines_.size(); ++j)
      if (lines_[i].phase.value() == lines_[j].phase.value())
        throw std::invalid_argument("Spectrum: phases must be pairwise distinct");
}

std::string Spectrum::to_json() const {
  nlohmann::json j;
  j["lines"] = nlohmann::json::array();
  for (const auto& ln : lines_)
    j["lines"].push_back({{"phase", ln.phase.value()}, {"prob", ln.prob}});
  return j.dump();
}

Spectrum Spectrum::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  std::vector<SpectralLine> lines;
  for (const auto& item : j.at("lines"))
    lines.push_back({Phase(item.at("phase").get<double>()), item.at("prob").get<double>()});
  return Spectrum(std::move(lines));
}

void CostLedger::charge(double k, std::int64_t shots) {
  if (k < 0.0) throw std::invalid_argument("CostLedger::charge: k < 0");
  if (shots < 1) throw std::invalid_argument("CostLedger::charge: shots < 1");
  const double cost = 2.0 * static_cast<double>(shots) * k;
  entries_.push_back({k, shots, cost});
  total_ += cost;
}

std::complex<double> exact_g(const Spectrum& spec, double k) {
  std::complex<double> acc(0.0, 0.0);
  for (const auto& ln : spec.lines()) {
    const double a = k * ln.phase.value();
    acc += ln.prob * std::complex<double>(std::cos(a), std::sin(a));
  }
  return acc;
}

Spectrum shift_spectrum(const Spectrum& spec, double chi) {
  std::vector<SpectralLine> lines;
  lines.reserve(spec.size());
  for (const auto& ln : spec.lines()) lines.push_back({ln.phase.shifted(-chi), ln.prob});
  return Spectrum(std::move(lines));
}

GEstimate sample_g(const Spectrum& spec, double k, std::int64_t shots, CostLedger& ledger,
                   RngStream& rng, const SampleOptions& opt) {
  if (shots < 1) throw std::invalid_argument("sample_g: shots must be >= 1");
  if (k < 0.0) throw std::invalid_argument("sample_g: k must be >= 0");
  double p_re = 0.0;
  double p_im = 0.0;
  for (const auto& ln : spec.lines()) {
    const double a = k * ln.phase.value();
    p_re += ln.prob * (1.0 + std::cos(a));
    p_im += ln.prob * (1.0 - std::sin(a));
  }
  p_re = std::min(1.0, std::max(0.0, 0.5 * p_re));
  p_im = std::min(1.0, std::max(0.0, 0.5 * p_im));

  const double m = static_cast<double>(shots);
  const auto c_re = binomial_draw(shots, p_re, rng, opt.binomial_exact_threshold);
  const auto c_im = binomial_draw(shots, p_im, rng, opt.binomial_exact_threshold);
  ledger.charge(k, shots);
  return {k, 2.0 * static_cast<double>(c_re) / m - 1.0,
          1.0 - 2.0 * static_cast<double>(c_im) / m, shots};
}

std::vector<GEstimate> sample_signal(const Spectrum& spec, double k_base, int K,
                                     std::int64_t shots, CostLedger& ledger, RngStream& rng,
                                     const SampleOptions& opt) {
  std::vector<GEstimate> out;
  out.reserve(K + 1);
  for (int kk = 0; kk <= K; ++kk)
    out.push_back(sample_g(spec, k_base * kk, shots, ledger, rng, opt));
  return out;
}

std::vector<GEstimate> exact_signal(const Spectrum& spec, double k_base, int K) {
  std::vector<GEstimate> out;
  out.reserve(K + 1);
  for (int kk = 0; kk <= K; ++kk) {
    const auto g = exact_g(spec, k_base * kk);
    out.push_back({k_base * kk, g.real(), g.imag(), 0});
  }
  return out;
}

}  // namespace qpe
