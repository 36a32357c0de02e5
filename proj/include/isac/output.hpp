#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "isac/config.hpp"
#include "isac/errors.hpp"
#include "isac/experiments.hpp"

namespace isac {

namespace detail {

inline std::string fmt_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline std::string fmt_f6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

}  // namespace detail

/// Marker line recorded in every CSV: the modeling choices a reader needs to
/// interpret absolute levels.
inline std::string provenance_line(const ExperimentConfig& cfg) {
  std::string s = "# power_semantics=per_resource_element steering_norm=";
  s += (cfg.steering_norm == SteeringNorm::Unit) ? "unit" : "literal";
  s += " csi_mode=";
  s += (cfg.csi_mode == CsiMode::Perfect) ? "perfect" : "mmse";
  s += "\n";
  return s;
}

inline std::string render_samples_csv(const ExperimentConfig& cfg,
                                      const std::vector<SnrSample>& samples) {
  std::string out = provenance_line(cfg);
  out += "trial,arch,sweep_id,gamma_linear,gamma_db\n";
  for (const SnrSample& s : samples) {
    out += std::to_string(s.trial);
    out += ',';
    out += s.arch;
    out += ',';
    out += s.sweep_id;
    out += ',';
    out += detail::fmt_g17(s.gamma_linear);
    out += ',';
    out += detail::fmt_g17(s.gamma_db);
    out += '\n';
  }
  return out;
}

/// One curve of a study: all per-trial dB values of one (arch, sweep) pair,
/// trial order preserved.
struct Curve {
  std::string arch;
  std::string sweep_id;
  std::vector<double> gamma_db;  // by trial
};

inline std::vector<Curve> curves_from_samples(const std::vector<SnrSample>& samples) {
  std::vector<Curve> curves;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const SnrSample& s : samples) {
    const auto key = std::make_pair(s.arch, s.sweep_id);
    auto it = index.find(key);
    if (it == index.end()) {
      index.emplace(key, curves.size());
      curves.push_back({s.arch, s.sweep_id, {}});
      it = index.find(key);
    }
    curves[it->second].gamma_db.push_back(s.gamma_db);
  }
  return curves;
}

inline const Curve* find_curve(const std::vector<Curve>& curves, const std::string& arch,
                               const std::string& sweep) {
  for (const Curve& c : curves)
    if (c.arch == arch && c.sweep_id == sweep) return &c;
  return nullptr;
}

/// Plot-ready CDF text: sorted dB value against cumulative probability i/N,
/// both rounded to six decimals so repeated runs emit identical bytes. The
/// final row carries probability 1 exactly.
inline std::string render_cdf_csv(const Curve& curve) {
  EmpiricalCdf cdf{curve.gamma_db};
  std::string out = "# arch=" + curve.arch + " sweep=" + curve.sweep_id + "\n";
  out += "snr_db,cumulative_probability\n";
  const auto& v = cdf.sorted_values_db();
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += detail::fmt_f6(v[i]);
    out += ',';
    out += detail::fmt_f6(static_cast<double>(i + 1) / n);
    out += '\n';
  }
  return out;
}

inline std::string cdf_filename(const Curve& curve) {
  return "cdf_" + curve.arch + "_" + curve.sweep_id + ".csv";
}

/// Summary table: one percentile record per curve (5/50/95), then one paired
/// record per planned comparison with the strict exceed fraction of the
/// first-named curve over the second.
inline std::string render_summary_csv(const ExperimentConfig& cfg,
                                      const std::vector<Curve>& curves,
                                      const std::vector<PairedComparison>& comparisons) {
  std::string out = provenance_line(cfg);
  out += "record,arch,sweep_id,arch_b,sweep_id_b,p5_db,p50_db,p95_db,exceed_fraction\n";
  for (const Curve& c : curves) {
    EmpiricalCdf cdf{c.gamma_db};
    out += "cdf," + c.arch + "," + c.sweep_id + ",,,";
    out += detail::fmt_f6(cdf.percentile(5.0)) + ",";
    out += detail::fmt_f6(cdf.percentile(50.0)) + ",";
    out += detail::fmt_f6(cdf.percentile(95.0)) + ",\n";
  }
  for (const PairedComparison& pc : comparisons) {
    const Curve* a = find_curve(curves, pc.arch_a, pc.sweep_a);
    const Curve* b = find_curve(curves, pc.arch_b, pc.sweep_b);
    if (!a || !b) throw DomainError("summary: comparison references a missing curve");
    out += "paired," + pc.arch_a + "," + pc.sweep_a + "," + pc.arch_b + "," + pc.sweep_b +
           ",,,,";
    out += detail::fmt_f6(exceed_fraction(a->gamma_db, b->gamma_db)) + "\n";
  }
  return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// samples.csv parsing (self-check and external reuse)
// ---------------------------------------------------------------------------

inline std::vector<SnrSample> parse_samples_csv(const std::string& text) {
  std::vector<SnrSample> samples;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line != "trial,arch,sweep_id,gamma_linear,gamma_db")
        throw IoError("samples.csv: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::array<std::string, 5> fields;
    std::size_t start = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) throw IoError("samples.csv: malformed row");
      fields[static_cast<std::size_t>(f)] = line.substr(start, comma - start);
      start = comma + 1;
    }
    fields[4] = line.substr(start);
    SnrSample s;
    s.trial = std::stoll(fields[0]);
    s.arch = fields[1];
    s.sweep_id = fields[2];
    s.gamma_linear = std::stod(fields[3]);
    s.gamma_db = std::stod(fields[4]);
    samples.push_back(std::move(s));
  }
  if (!header_seen) throw IoError("samples.csv: missing header");
  return samples;
}

/// Re-derives every CDF file and the summary from samples.csv in a run
/// directory and compares bytes. Returns a diagnostic for any mismatch.
struct SelfCheckReport {
  bool ok = true;
  std::vector<std::string> messages;
};

inline SelfCheckReport self_check_run_dir(const std::filesystem::path& dir) {
  SelfCheckReport report;
  auto fail = [&report](const std::string& msg) {
    report.ok = false;
    report.messages.push_back(msg);
  };

  const auto samples_path = dir / "samples.csv";
  const std::string samples_text = read_text_file(samples_path);
  const std::vector<SnrSample> samples = parse_samples_csv(samples_text);
  if (samples.empty()) {
    fail("samples.csv holds no rows");
    return report;
  }
  const std::vector<Curve> curves = curves_from_samples(samples);

  // The provenance line and comparison set are taken from the emitted
  // summary; everything numeric is recomputed from the samples.
  const auto summary_path = dir / "summary.csv";
  const std::string summary_text = read_text_file(summary_path);
  std::vector<PairedComparison> comparisons;
  std::string provenance;
  {
    std::istringstream in(summary_text);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '#') {
        provenance = line + "\n";
        continue;
      }
      if (line.rfind("paired,", 0) == 0) {
        std::vector<std::string> f;
        std::size_t start = 0;
        while (true) {
          const std::size_t comma = line.find(',', start);
          if (comma == std::string::npos) {
            f.push_back(line.substr(start));
            break;
          }
          f.push_back(line.substr(start, comma - start));
          start = comma + 1;
        }
        if (f.size() < 5) {
          fail("summary.csv: malformed paired record");
          continue;
        }
        comparisons.push_back({f[1], f[2], f[3], f[4]});
      }
    }
  }

  std::string expected_summary = provenance;
  expected_summary += "record,arch,sweep_id,arch_b,sweep_id_b,p5_db,p50_db,p95_db,exceed_fraction\n";
  for (const Curve& c : curves) {
    EmpiricalCdf cdf{c.gamma_db};
    expected_summary += "cdf," + c.arch + "," + c.sweep_id + ",,,";
    expected_summary += detail::fmt_f6(cdf.percentile(5.0)) + ",";
    expected_summary += detail::fmt_f6(cdf.percentile(50.0)) + ",";
    expected_summary += detail::fmt_f6(cdf.percentile(95.0)) + ",\n";
  }
  for (const PairedComparison& pc : comparisons) {
    const Curve* a = find_curve(curves, pc.arch_a, pc.sweep_a);
    const Curve* b = find_curve(curves, pc.arch_b, pc.sweep_b);
    if (!a || !b) {
      fail("summary.csv: paired record references missing curve " + pc.arch_a + "/" +
           pc.sweep_a + " vs " + pc.arch_b + "/" + pc.sweep_b);
      continue;
    }
    expected_summary += "paired," + pc.arch_a + "," + pc.sweep_a + "," + pc.arch_b + "," +
                        pc.sweep_b + ",,,,";
    expected_summary += detail::fmt_f6(exceed_fraction(a->gamma_db, b->gamma_db)) + "\n";
  }
  if (expected_summary != summary_text)
    fail("summary.csv does not match the values recomputed from samples.csv");

  for (const Curve& c : curves) {
    const auto path = dir / cdf_filename(c);
    if (!std::filesystem::exists(path)) {
      fail("missing CDF file " + path.filename().string());
      continue;
    }
    if (render_cdf_csv(c) != read_text_file(path))
      fail(path.filename().string() + " does not match samples.csv");
  }

  if (!std::filesystem::exists(dir / "manifest.json"))
    fail("manifest.json missing (run incomplete)");
  return report;
}

}  // namespace isac
