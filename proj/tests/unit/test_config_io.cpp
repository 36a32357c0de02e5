#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "isac/config.hpp"
#include "isac/output.hpp"

using namespace isac;

TEST_CASE("empty config text resolves to the default parameter block") {
  const ExperimentConfig c = parse_config_string("");
  CHECK(c.k_ues == 16);
  CHECK(c.m_cf == 32);
  CHECK(c.na_cf == 4);
  CHECK(c.n_subcarriers == 12);
  CHECK(c.n_symbols == 14);
  CHECK(c.scs_hz == 30e3);
  CHECK(c.carrier_hz == 3e9);
  CHECK(c.noise_figure_db == 9.0);
  CHECK(c.noise_dbm_hz == -174.0);
  CHECK(c.rcs_dbsm == 10.0);
  CHECK(c.rcs_variance_m2() == doctest::Approx(10.0));
  CHECK(c.area_m == 1000.0);
  CHECK(c.trials == 1000);
}

TEST_CASE("noise variance from the configured numerology") {
  const ExperimentConfig c = parse_config_string("");
  const double dbm =
      c.noise_dbm_hz + c.noise_figure_db + 10.0 * std::log10(c.bandwidth_hz());
  CHECK(dbm == doctest::Approx(-109.44).epsilon(1e-4));
  CHECK(c.noise_variance_w() ==
        doctest::Approx(std::pow(10.0, (dbm - 30.0) / 10.0)).epsilon(1e-12));
}

TEST_CASE("constraint violations name the key") {
  CHECK_THROWS_WITH_AS(parse_config_string("n_subcarriers = 0"),
                       doctest::Contains("n_subcarriers"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_string("m_tx = 32\nm_rx = 1"),
                       doctest::Contains("m_tx"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_string("target_speed_mps = 4000"),
                       doctest::Contains("target_speed_mps"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_string("p_per_tap_w = -1"),
                       doctest::Contains("p_per_tap_w"), ConfigError);
}

TEST_CASE("unknown keys and malformed values are hard errors") {
  CHECK_THROWS_WITH_AS(parse_config_string("subcarriers = 12"),
                       doctest::Contains("unknown config key"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("k_ues = twelve"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("k_ues 12"), ConfigError);
  CHECK_THROWS_AS(parse_config_string("csi_mode = oracle"), ConfigError);
}

TEST_CASE("config round-trip identity") {
  ExperimentConfig c = parse_config_string(
      "m_cf = 12\nm_tx = 9\nm_rx = 3\nna_cf = 2\nscs_hz = 15e3\n"
      "cp_s = 4.6875e-06\nrcs_dbsm = 3.7\nseed = 12345678901234567\n"
      "csi_mode = perfect\nsteering_norm = literal\nlayout = fixed\n"
      "target_speed_mps = 2.5\ntrials = 77\n");
  const std::string text = serialize_config(c);
  const ExperimentConfig d = parse_config_string(text);
  CHECK(serialize_config(d) == text);
  CHECK(d.m_cf == 12);
  CHECK(d.scs_hz == c.scs_hz);
  CHECK(d.cp_s == c.cp_s);
  CHECK(d.seed == c.seed);
  CHECK(d.csi_mode == CsiMode::Perfect);
  CHECK(d.steering_norm == SteeringNorm::Literal);
  CHECK(d.layout == LayoutMode::Fixed);
}

TEST_CASE("comments and blank lines are ignored") {
  const ExperimentConfig c = parse_config_string(
      "# full comment line\n\n  k_ues = 8  # trailing comment\n");
  CHECK(c.k_ues == 8);
}

namespace {
std::vector<SnrSample> toy_samples() {
  std::vector<SnrSample> s;
  for (int t = 0; t < 3; ++t) {
    const double g_cf = 10.0 + t;
    const double g_mc = 9.0 + 2.0 * t;
    s.push_back({t, "cf", "p0", std::pow(10.0, g_cf / 10.0), g_cf});
    s.push_back({t, "mc", "p0", std::pow(10.0, g_mc / 10.0), g_mc});
  }
  return s;
}
}  // namespace

TEST_CASE("cdf file rendering") {
  const auto curves = curves_from_samples(toy_samples());
  REQUIRE(curves.size() == 2);
  const std::string text = render_cdf_csv(curves[0]);
  CHECK(text ==
        "# arch=cf sweep=p0\n"
        "snr_db,cumulative_probability\n"
        "10.000000,0.333333\n"
        "11.000000,0.666667\n"
        "12.000000,1.000000\n");
}

TEST_CASE("summary rendering and recomputability") {
  const ExperimentConfig cfg = parse_config_string("");
  const auto samples = toy_samples();
  const auto curves = curves_from_samples(samples);
  const std::vector<PairedComparison> cmp{{"cf", "p0", "mc", "p0"}};
  const std::string summary = render_summary_csv(cfg, curves, cmp);
  CHECK(summary.find("cdf,cf,p0,,,") != std::string::npos);
  // cf beats mc only at trial 0 (10 > 9); ties never count
  CHECK(summary.find("paired,cf,p0,mc,p0,,,,0.333333") != std::string::npos);

  // byte-stable round trip through the samples file
  const std::string samples_text = render_samples_csv(cfg, samples);
  const auto parsed = parse_samples_csv(samples_text);
  REQUIRE(parsed.size() == samples.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].gamma_linear == samples[i].gamma_linear);
    CHECK(parsed[i].gamma_db == samples[i].gamma_db);
  }
  const auto curves2 = curves_from_samples(parsed);
  CHECK(render_summary_csv(cfg, curves2, cmp) == summary);
}

TEST_CASE("self check validates a written run directory") {
  const ExperimentConfig cfg = parse_config_string("");
  const auto samples = toy_samples();
  const auto curves = curves_from_samples(samples);
  const std::vector<PairedComparison> cmp{{"cf", "p0", "mc", "p0"}};

  const auto dir = std::filesystem::temp_directory_path() / "isac_selfcheck_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_text_file(dir / "samples.csv", render_samples_csv(cfg, samples));
  for (const auto& c : curves) write_text_file(dir / cdf_filename(c), render_cdf_csv(c));
  write_text_file(dir / "summary.csv", render_summary_csv(cfg, curves, cmp));
  write_text_file(dir / "manifest.json", "{}\n");

  CHECK(self_check_run_dir(dir).ok);

  // corrupt the summary: the check must notice
  std::string broken = render_summary_csv(cfg, curves, cmp);
  broken.back() = '9';
  write_text_file(dir / "summary.csv", broken);
  CHECK_FALSE(self_check_run_dir(dir).ok);
  std::filesystem::remove_all(dir);
}
