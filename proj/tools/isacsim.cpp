// isacsim: Monte-Carlo comparison of distributed (cell-free) and co-located
// (multi-cell) massive-MIMO deployments sensing a target through a shared
// OFDM downlink. Emits per-trial sensing-SNR samples, empirical CDFs and a
// percentile/exceed-fraction summary for the selected study.

#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/experiments.hpp"
#include "isac/output.hpp"

namespace {

constexpr const char* kVersion = "isacsim 0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitUsage = 3;
constexpr int kExitIo = 4;
constexpr int kExitDomain = 5;
constexpr int kExitSelfCheck = 6;

nlohmann::json config_json(const isac::ExperimentConfig& c) {
  nlohmann::json j;
  j["area_m"] = c.area_m;
  j["k_ues"] = c.k_ues;
  j["m_cf"] = c.m_cf;
  j["na_cf"] = c.na_cf;
  j["m_tx"] = c.m_tx;
  j["m_rx"] = c.m_rx;
  j["n_subcarriers"] = c.n_subcarriers;
  j["scs_hz"] = c.scs_hz;
  j["cp_s"] = c.cp_s;
  j["n_symbols"] = c.n_symbols;
  j["carrier_hz"] = c.carrier_hz;
  j["p_per_tap_w"] = c.p_per_tap_w;
  j["rcs_dbsm"] = c.rcs_dbsm;
  j["noise_dbm_hz"] = c.noise_dbm_hz;
  j["noise_figure_db"] = c.noise_figure_db;
  j["k_factor_db"] = c.k_factor_db;
  j["pathloss_intercept_db"] = c.pathloss_intercept_db;
  j["pathloss_exponent"] = c.pathloss_exponent;
  j["shadow_sigma_db"] = c.shadow_sigma_db;
  j["target_speed_mps"] = c.target_speed_mps;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["csi_mode"] = c.csi_mode == isac::CsiMode::Perfect ? "perfect" : "mmse";
  j["steering_norm"] =
      c.steering_norm == isac::SteeringNorm::Unit ? "unit" : "literal";
  j["layout"] = c.layout == isac::LayoutMode::Random ? "random" : "fixed";
  j["power_semantics"] = "per_resource_element";
  j["noise_variance_dbm"] =
      c.noise_dbm_hz + c.noise_figure_db + 10.0 * std::log10(c.bandwidth_hz());
  return j;
}

int run_experiment(const isac::ExperimentConfig& cfg, const std::string& experiment,
                   const std::filesystem::path& out_dir, int workers) {
  const auto t0 = std::chrono::steady_clock::now();
  const isac::StudyPlan plan = isac::plan_study(cfg, experiment);
  const isac::StudyResult result = isac::run_study(cfg, plan, workers);
  const std::vector<isac::SnrSample> samples = isac::collect_samples(plan, result);
  const std::vector<isac::Curve> curves = isac::curves_from_samples(samples);

  std::filesystem::create_directories(out_dir);
  std::vector<std::string> outputs;
  isac::write_text_file(out_dir / "samples.csv", isac::render_samples_csv(cfg, samples));
  outputs.push_back("samples.csv");
  for (const isac::Curve& c : curves) {
    const std::string name = isac::cdf_filename(c);
    isac::write_text_file(out_dir / name, isac::render_cdf_csv(c));
    outputs.push_back(name);
  }
  isac::write_text_file(out_dir / "summary.csv",
                        isac::render_summary_csv(cfg, curves, plan.comparisons));
  outputs.push_back("summary.csv");

  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  // Written last: the manifest's existence marks a complete run.
  nlohmann::json manifest;
  manifest["tool"] = kVersion;
  manifest["experiment"] = plan.experiment;
  manifest["master_seed"] = cfg.seed;
  manifest["workers"] = workers;
  manifest["wall_clock_seconds"] = seconds;
  manifest["config"] = config_json(cfg);
  manifest["outputs"] = outputs;
  isac::write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << plan.experiment << ": " << plan.sweeps.size() << " sweep point(s), "
            << cfg.trials << " trial(s) each, " << seconds << " s -> " << out_dir.string()
            << std::endl;
  return kExitOk;
}

int run_self_check(const std::filesystem::path& dir) {
  const isac::SelfCheckReport report = isac::self_check_run_dir(dir);
  if (report.ok) {
    std::cout << "self-check passed: summary and CDF files match samples.csv"
              << std::endl;
    return kExitOk;
  }
  for (const std::string& msg : report.messages) std::cerr << "self-check: " << msg << '\n';
  return kExitSelfCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensing-SNR Monte-Carlo comparison of distributed and co-located "
               "massive-MIMO deployments over a shared OFDM downlink"};
  app.footer(
      "Experiments:\n"
      "  A       subcarrier sweep under transmit-heavy and balanced splits\n"
      "  B       transceiver-allocation sweep at a fixed node count\n"
      "  C       antenna-deployment sweep at a fixed antenna total\n"
      "  custom  single point taken from the configuration file\n\n"
      "Exit codes:\n"
      "  0  success\n"
      "  2  invalid configuration\n"
      "  3  command-line usage error\n"
      "  4  I/O failure\n"
      "  5  simulation domain error\n"
      "  6  self-check mismatch");

  std::string config_path;
  std::string experiment = "custom";
  std::string out_dir = "out";
  int workers = 1;
  std::int64_t trials = -1;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool fixed_layout = false;
  bool literal_steering = false;

  app.add_option("--config", config_path, "Configuration file (key = value lines)");
  app.add_option("--experiment", experiment, "Study to run: A|B|C|custom")
      ->check(CLI::IsMember({"A", "B", "C", "custom"}));
  app.add_option("--trials", trials, "Override the trial count per sweep point");
  app.add_option("--seed", seed, "Override the master seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  app.add_option("--out-dir", out_dir, "Output directory (created when missing)");
  app.add_option("--workers", workers, "Worker threads for the trial loop");
  app.add_flag("--fixed-layout", fixed_layout,
               "Freeze one AP layout across all trials");
  app.add_flag("--literal-steering", literal_steering,
               "Use the raw (un-normalized) steering vector as sensing precoder");

  CLI::App* selfcheck =
      app.add_subcommand("selfcheck", "Recompute summary/CDF files from samples.csv "
                                      "in a run directory and compare bytes");
  std::string check_dir;
  selfcheck->add_option("--out-dir", check_dir, "Run directory to audit")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (selfcheck->parsed()) return run_self_check(check_dir);

    isac::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = isac::parse_config_file(config_path);
    if (trials >= 0) cfg.trials = static_cast<int>(trials);
    if (seed_set) cfg.seed = seed;
    if (fixed_layout) cfg.layout = isac::LayoutMode::Fixed;
    if (literal_steering) cfg.steering_norm = isac::SteeringNorm::Literal;
    isac::validate(cfg);

    return run_experiment(cfg, experiment, out_dir, workers);
  } catch (const isac::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return kExitConfig;
  } catch (const isac::IoError& e) {
    std::cerr << "I/O error: " << e.what() << std::endl;
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return kExitDomain;
  }
}
