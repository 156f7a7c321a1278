// Command-line front end: single runs, sweeps, fits, limit tables, and the
// bare subroutines on a spectrum file.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "qpe/analysis.hpp"
#include "qpe/errors.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInsufficientData = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qpe::ConfigError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw qpe::ConfigError("cannot open output file: " + path);
  return out;
}

struct CommonFlags {
  std::optional<std::string> config_path;
  std::uint64_t seed = 0;
  std::optional<std::string> out_path;
  std::optional<std::string> subroutine;
  bool strict_eps = false;
  std::optional<int> n_phi;
  std::vector<double> delta_c;
  std::optional<double> eps;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON scenario config");
  cmd->add_option("--seed", flags.seed, "master seed (u64)");
  cmd->add_option("--out", flags.out_path, "output path (default stdout)");
  cmd->add_option("--subroutine", flags.subroutine, "qeep|pencil");
  cmd->add_flag("--strict-eps", flags.strict_eps, "enforce the strict error-parameter bounds");
  cmd->add_option("--nphi", flags.n_phi, "number of hidden phases");
  cmd->add_option("--delta-c", flags.delta_c, "target errors (comma separated)")
      ->delimiter(',');
  cmd->add_option("--eps", flags.eps, "override the subroutine error parameter");
}

qpe::ScenarioConfig build_scenario(const CommonFlags& flags) {
  qpe::ScenarioConfig cfg;
  if (flags.config_path) cfg = qpe::ScenarioConfig::from_json(read_file(*flags.config_path));
  if (flags.subroutine) cfg.subroutine = qpe::subroutine_from_string(*flags.subroutine);
  if (flags.strict_eps) cfg.strict_eps = true;
  if (flags.n_phi) cfg.n_phi = *flags.n_phi;
  if (!flags.delta_c.empty()) cfg.delta_c = flags.delta_c;
  if (flags.eps) cfg.eps_override = *flags.eps;
  cfg.validate();
  return cfg;
}

void emit(const CommonFlags& flags, const std::string& text) {
  if (flags.out_path) {
    auto out = open_out(*flags.out_path);
    out << text;
  } else {
    std::cout << text;
  }
}

int cmd_run(const CommonFlags& flags) {
  const auto cfg = build_scenario(flags);
  const double delta_c = cfg.delta_c.front();

  qpe::RngStream phase_rng(qpe::derive_seed(flags.seed, 1, 0));
  std::vector<qpe::SpectralLine> lines;
  while (static_cast<int>(lines.size()) < cfg.n_phi) {
    const qpe::Phase candidate(phase_rng.uniform(0.0, qpe::kTwoPi));
    bool dup = false;
    for (const auto& ln : lines) dup |= ln.phase.value() == candidate.value();
    if (!dup) lines.push_back({candidate, 1.0 / cfg.n_phi});
  }
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) partial += lines[i].prob;
  lines.back().prob = 1.0 - partial;
  const qpe::Spectrum spec(std::move(lines));

  qpe::RngStream run_rng(qpe::derive_seed(flags.seed, 1000, 0));
  const auto result = qpe::run_adaptive(cfg.to_adaptive(delta_c), spec, run_rng);
  emit(flags, qpe::run_trace_json(cfg, delta_c, flags.seed, spec, result) + "\n");
  return kExitOk;
}

int cmd_sweep(const CommonFlags& flags) {
  const auto cfg = build_scenario(flags);
  const auto records = qpe::run_sweep(cfg, flags.seed);
  std::ostringstream ss;
  qpe::write_sweep_csv(ss, records);
  emit(flags, ss.str());
  return kExitOk;
}

int cmd_fit(const CommonFlags& flags, const std::string& csv_path, int bins) {
  std::ifstream in(csv_path);
  if (!in) throw qpe::ConfigError("cannot open sweep CSV: " + csv_path);
  const auto records = qpe::read_sweep_csv(in);
  const auto fit = qpe::bin_and_fit(records, bins);
  emit(flags, fit.to_json() + "\n");
  return kExitOk;
}

int cmd_limits(const CommonFlags& flags, int K, std::int64_t M) {
  const auto rows = qpe::limits_report(K, M);
  std::ostringstream ss;
  ss << std::left << std::setw(22) << "strategy" << std::setw(16) << "fisher"
     << std::setw(16) << "cost" << "bound\n";
  for (const auto& r : rows) {
    ss << std::left << std::setw(22) << r.strategy << std::setw(16)
       << qpe::format_double(r.fisher) << std::setw(16) << qpe::format_double(r.cost)
       << qpe::format_double(r.bound) << "\n";
  }
  emit(flags, ss.str());
  return kExitOk;
}

int cmd_pencil(const CommonFlags& flags, const std::string& spectrum_path, double k_d, int K,
               std::int64_t shots, double prob_bound) {
  const auto spec = qpe::Spectrum::from_json(read_file(spectrum_path));
  qpe::CostLedger ledger;
  qpe::RngStream rng(flags.seed);
  const auto signal = qpe::sample_signal(spec, k_d, K, shots, ledger, rng);
  const auto est = qpe::pencil_analyze(signal, {1e-8});

  nlohmann::json j;
  j["thetas"] = nlohmann::json::array();
  j["amps"] = nlohmann::json::array();
  for (std::size_t i = 0; i < est.thetas.size(); ++i) {
    if (est.amps[i] >= prob_bound) {
      j["thetas"].push_back(est.thetas[i].value());
      j["amps"].push_back(est.amps[i]);
    }
  }
  j["total_cost"] = ledger.total();
  std::cout << j.dump(2) << "\n";

  if (flags.out_path) {
    auto out = open_out(*flags.out_path);
    out << "k,re,im\n";
    for (const auto& s : signal)
      out << qpe::format_double(s.k) << ',' << qpe::format_double(s.re) << ','
          << qpe::format_double(s.im) << '\n';
  }
  return kExitOk;
}

int cmd_qeep_bins(const CommonFlags& flags, const std::string& spectrum_path, double k_d,
                  double eps, double confidence, double prob_bound) {
  const auto spec = qpe::Spectrum::from_json(read_file(spectrum_path));
  const auto plan = qpe::shot_plan(eps, confidence);
  const auto basis = qpe::BumpBasis::shared(eps, plan.K);
  qpe::CostLedger ledger;
  qpe::RngStream rng(flags.seed);
  const auto bins = qpe::estimate_bins(spec, k_d, *basis, plan.M, ledger, rng);

  nlohmann::json j;
  j["L"] = plan.L;
  j["K"] = plan.K;
  j["M"] = plan.M;
  j["total_cost"] = ledger.total();
  try {
    std::vector<double> phases;
    for (const auto& p : qpe::conservative_extract(bins, prob_bound)) phases.push_back(p.value());
    j["estimates"] = phases;
  } catch (const qpe::NoGapError&) {
    j["estimates"] = nullptr;
    j["error"] = "no gap below threshold";
  }
  std::cout << j.dump(2) << "\n";

  if (flags.out_path) {
    auto out = open_out(*flags.out_path);
    out << "l,b\n";
    for (std::size_t l = 0; l < bins.b.size(); ++l)
      out << l << ',' << qpe::format_double(bins.b[l]) << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator for Heisenberg-limited estimation of multiple eigenvalue phases"};
  app.require_subcommand(1);

  CommonFlags flags;

  auto* run = app.add_subcommand("run", "single adaptive trial; prints a JSON trace");
  add_common(run, flags);

  auto* sweep = app.add_subcommand("sweep", "scenario sweep; emits the trial-record CSV");
  add_common(sweep, flags);

  auto* fit = app.add_subcommand("fit", "fit error vs cost from a sweep CSV");
  std::string fit_csv;
  int fit_bins = 8;
  fit->add_option("csv", fit_csv, "sweep CSV path")->required();
  fit->add_option("--bins", fit_bins, "number of logarithmic cost bins");
  add_common(fit, flags);

  auto* limits = app.add_subcommand("limits", "error-versus-cost bound table");
  int lim_K = 10;
  std::int64_t lim_M = 1;
  limits->add_option("--K", lim_K, "largest evolution length");
  limits->add_option("--M", lim_M, "repetitions per basis per point");
  add_common(limits, flags);

  auto* pencil = app.add_subcommand("pencil", "matrix pencil pass over a spectrum file");
  std::string pencil_spec;
  double pencil_kd = 1.0;
  int pencil_K = 50;
  std::int64_t pencil_shots = 100000;
  double pencil_bound = 0.1;
  pencil->add_option("spectrum", pencil_spec, "spectrum JSON path")->required();
  pencil->add_option("--kd", pencil_kd, "order multiplier k_d");
  pencil->add_option("--K", pencil_K, "signal length");
  pencil->add_option("--shots", pencil_shots, "shots per point");
  pencil->add_option("--prob-bound", pencil_bound, "amplitude threshold A");
  add_common(pencil, flags);

  auto* qeep = app.add_subcommand("qeep-bins", "QEEP bin weights over a spectrum file");
  std::string qeep_spec;
  double qeep_kd = 1.0;
  double qeep_eps = 0.1;
  double qeep_conf = 0.9;
  double qeep_bound = 0.5;
  qeep->add_option("spectrum", qeep_spec, "spectrum JSON path")->required();
  qeep->add_option("--kd", qeep_kd, "order multiplier k_d");
  qeep->add_option("--qeep-eps", qeep_eps, "bin half-width");
  qeep->add_option("--confidence", qeep_conf, "planned confidence p");
  qeep->add_option("--prob-bound", qeep_bound, "threshold A for extraction");
  add_common(qeep, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (fit->parsed()) return cmd_fit(flags, fit_csv, fit_bins);
    if (limits->parsed()) return cmd_limits(flags, lim_K, lim_M);
    if (pencil->parsed()) return cmd_pencil(flags, pencil_spec, pencil_kd, pencil_K,
                                            pencil_shots, pencil_bound);
    if (qeep->parsed()) return cmd_qeep_bins(flags, qeep_spec, qeep_kd, qeep_eps, qeep_conf,
                                             qeep_bound);
  } catch (const qpe::InsufficientDataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInsufficientData;
  } catch (const qpe::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitOk;
}
