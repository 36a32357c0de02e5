#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "isac/config.hpp"
#include "isac/detector.hpp"
#include "isac/errors.hpp"
#include "isac/geometry.hpp"
#include "isac/rng.hpp"
#include "isac/stats.hpp"
#include "isac/transmit.hpp"

namespace isac {

/// One point of a study: the cell-free configuration under test and the
/// fairness-matched co-located configuration. Antenna-deployment studies use
/// architecture-specific points (has_cf/has_mc).
struct SweepPoint {
  std::string id;
  int n_subcarriers = 12;
  CfSizes cf;
  McSizes mc;
  bool has_cf = true;
  bool has_mc = true;
};

struct PairedComparison {
  std::string arch_a, sweep_a;  // convention: the distributed side
  std::string arch_b, sweep_b;  // the co-located side
};

struct StudyPlan {
  std::string experiment;  // A | B | C | custom
  std::vector<SweepPoint> sweeps;
  std::vector<PairedComparison> comparisons;
};

struct TrialOutput {
  double cf_gamma_linear = std::numeric_limits<double>::quiet_NaN();
  double mc_gamma_linear = std::numeric_limits<double>::quiet_NaN();
};

struct SnrSample {
  std::int64_t trial = 0;
  std::string arch;      // "cf" | "mc"
  std::string sweep_id;
  double gamma_linear = 0.0;
  double gamma_db = 0.0;
};

/// Empirical CDF over per-trial SNR values in dB.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values_db) : values_(std::move(values_db)) {
    if (values_.empty()) throw DomainError("EmpiricalCdf: empty sample");
    std::sort(values_.begin(), values_.end());
  }

  const std::vector<double>& sorted_values_db() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double percentile(double q) const { return percentile_sorted(values_, q); }

 private:
  std::vector<double> values_;
};

/// Fraction of paired trials where sample a strictly exceeds sample b.
inline double exceed_fraction(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || a.size() != b.size())
    throw DomainError("exceed_fraction: paired inputs of equal nonzero length required");
  std::size_t wins = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) ++wins;
  return static_cast<double>(wins) / static_cast<double>(a.size());
}

namespace detail {

/// Precoders and power split of one transmit node, from the channel
/// estimates of its served UEs. Draw order per node: for each served UE
/// ascending, the shadowing deviate, then per subcarrier the Rician draw and
/// the pilot noise.
inline NodePrecoders make_node_precoders(const ExperimentConfig& cfg,
                                         const Position3D& node_pos,
                                         const ArrayConfig& tx_array,
                                         const std::vector<Position3D>& ues,
                                         const std::vector<int>& served_ues,
                                         const Position3D& probed, bool probes_cell,
                                         double budget_w, const OfdmNumerology& num,
                                         Rng& rng) {
  const bool sense_on = probes_cell && cfg.sensing_beam_enabled;
  const PowerSplit split = allocate_power_uniform(
      budget_w, static_cast<int>(served_ues.size()), sense_on ? 1 : 0);

  NodePrecoders np;
  np.n_antennas = tx_array.num_elements;
  np.comm.reserve(served_ues.size());
  np.comm_power_w.assign(served_ues.size(), split.per_ue_w);

  const double k_factor = db_to_linear(cfg.k_factor_db);
  const double noise_w = cfg.noise_variance_w();
  const int pilot_len = std::max(cfg.k_ues, 1);

  for (int k : served_ues) {
    const Position3D& ue = ues[static_cast<std::size_t>(k)];
    const double d = distance(node_pos, ue);
    const double shadow_db = cfg.shadow_sigma_db * rng.gaussian();
    const double lsf = db_to_linear(
        pathloss_db(d, cfg.pathloss_intercept_db, cfg.pathloss_exponent) + shadow_db);
    const CVec los = steering_vector(tx_array, angles_between(node_pos, ue));

    std::vector<CVec> per_sc(static_cast<std::size_t>(num.n_subcarriers));
    for (int n = 0; n < num.n_subcarriers; ++n) {
      const CVec h = rician_vector(lsf, k_factor, los, rng);
      const ChannelEstimate ce = estimate_ue_channel(
          h, lsf, cfg.pilot_power_w, pilot_len, cfg.k_ues, noise_w, cfg.csi_mode, rng);
      per_sc[static_cast<std::size_t>(n)] =
          build_comm_precoder(ce.estimate, ce.expected_norm_sq);
    }
    np.comm.push_back(std::move(per_sc));
  }

  if (sense_on) {
    np.sense = build_sense_precoder(tx_array, node_pos, probed, cfg.steering_norm);
    np.sense_power_w = split.per_cell_w;
  } else if (probes_cell) {
    // Sensing beam disabled by configuration: the node still exists but all
    // power goes to communication.
    np.sense.clear();
    np.sense_power_w = 0.0;
  }
  return np;
}

}  // namespace detail

/// Distributed-architecture sensing SNR for one realization.
inline double evaluate_cf_trial(const ExperimentConfig& cfg, const SweepPoint& sp,
                                const EntityDrop& drop, Rng& deploy_rng, Rng& rng) {
  CfLayoutParams lay;
  lay.m_cf = sp.cf.m_cf;
  lay.m_tx = sp.cf.m_tx;
  lay.m_rx = sp.cf.m_rx;
  lay.ap_array = ArrayConfig{sp.cf.na_cf, 0.5, ArrayAxis::Y};
  lay.area_m = cfg.area_m;
  lay.ap_height_m = cfg.ap_height_m;
  lay.per_ap_power_w = sp.cf.p_per_ap_w;
  lay.sensing_zones = cfg.sensing_zones;
  lay.zone_scope = cfg.zone_scope;
  CfDeployment dep = drop_cf_deployment(lay, deploy_rng);
  assign_serving_sets(dep, drop.ue_positions, cfg.serving_mode, cfg.serving_nearest_q);

  OfdmNumerology num = cfg.numerology();
  num.n_subcarriers = sp.n_subcarriers;

  const int zone = tile_index(cfg.area_m, cfg.sensing_zones, drop.target.position.x,
                              drop.target.position.y);
  const auto& probe_tx = dep.zone_tx_sets[static_cast<std::size_t>(zone)];
  const auto& probe_rx = dep.zone_rx_sets[static_cast<std::size_t>(zone)];
  if (probe_rx.empty())
    throw DomainError("no receive AP associated with the probed zone");

  // Serving map: which served-UE list each transmit node sees.
  std::vector<std::vector<int>> served_by_node(dep.ap_positions.size());
  for (std::size_t k = 0; k < dep.serving_sets.size(); ++k)
    for (int m : dep.serving_sets[k])
      served_by_node[static_cast<std::size_t>(m)].push_back(static_cast<int>(k));

  // Grids of every transmit node, ascending tAP order. Every tAP's echo
  // contributes a response column whether or not it aims a sensing beam.
  std::vector<TransmitGrid> grids;
  std::vector<Position3D> tx_positions;
  grids.reserve(dep.tx_set.size());
  tx_positions.reserve(dep.tx_set.size());
  for (int m : dep.tx_set) {
    const bool probes =
        std::find(probe_tx.begin(), probe_tx.end(), m) != probe_tx.end();
    const NodePrecoders np = detail::make_node_precoders(
        cfg, dep.ap_positions[static_cast<std::size_t>(m)], dep.ap_array,
        drop.ue_positions, served_by_node[static_cast<std::size_t>(m)],
        drop.target.position, probes, dep.per_ap_power_w, num, rng);
    grids.push_back(synthesize_grid(np, num, cfg.alphabet, rng));
    tx_positions.push_back(dep.ap_positions[static_cast<std::size_t>(m)]);
  }

  std::vector<CfSensingResponse> responses;
  responses.reserve(probe_rx.size());
  for (int l : probe_rx) {
    responses.push_back(build_response_cf(
        tx_positions, dep.ap_array, dep.ap_positions[static_cast<std::size_t>(l)],
        dep.ap_array, drop.target, grids, num, cfg.wavelength_m()));
  }
  return sensing_snr_cf(responses, drop.target.rcs_variance_m2, cfg.noise_variance_w());
}

/// Co-located-architecture sensing SNR for one realization: only the BS
/// responsible for the target's cell illuminates and collects.
inline double evaluate_mc_trial(const ExperimentConfig& cfg, const SweepPoint& sp,
                                const EntityDrop& drop, Rng& rng) {
  McLayoutParams lay;
  lay.m_mc = sp.mc.m_mc;
  lay.tx_array = ArrayConfig{sp.mc.na_tx, 0.5, ArrayAxis::Y};
  lay.rx_array = ArrayConfig{sp.mc.na_rx, 0.5, ArrayAxis::Y};
  lay.area_m = cfg.area_m;
  lay.bs_height_m = cfg.bs_height_m;
  lay.per_bs_power_w = sp.mc.p_per_bs_w;
  McDeployment mc = drop_mc_deployment(lay);
  assign_ue_cells(mc, drop.ue_positions);

  OfdmNumerology num = cfg.numerology();
  num.n_subcarriers = sp.n_subcarriers;

  const int bs = responsible_bs(mc, drop.target.position);
  const NodePrecoders np = detail::make_node_precoders(
      cfg, mc.bs_positions[static_cast<std::size_t>(bs)], mc.tx_array,
      drop.ue_positions, mc.ue_assignment[static_cast<std::size_t>(bs)],
      drop.target.position, true, mc.per_bs_power_w, num, rng);
  const TransmitGrid grid = synthesize_grid(np, num, cfg.alphabet, rng);

  const McSensingResponse resp = build_response_mc(
      mc.bs_positions[static_cast<std::size_t>(bs)], mc.tx_array, mc.rx_array,
      drop.target, grid, num, cfg.wavelength_m());
  return sensing_snr_mc(resp, drop.target.rcs_variance_m2, cfg.noise_variance_w());
}

/// One Monte-Carlo trial. Both architectures see the identical UE/target
/// drop (the drop stream ignores the sweep hash); deployment fading and
/// symbol draws come from per-(trial, sweep, architecture) streams.
inline TrialOutput run_trial(const ExperimentConfig& cfg, const SweepPoint& sp,
                             std::uint64_t trial) {
  const std::uint64_t sw = sweep_hash(sp.id);

  Rng drop_rng(derive_seed(cfg.seed, trial, 0, kTagDrop));
  EntityDropParams ep;
  ep.k_ues = cfg.k_ues;
  ep.area_m = cfg.area_m;
  ep.ue_height_m = cfg.ue_height_m;
  ep.target_z_min_m = cfg.target_z_min_m;
  ep.target_z_max_m = cfg.target_z_max_m;
  ep.target_speed_mps = cfg.target_speed_mps;
  ep.rcs_variance_m2 = cfg.rcs_variance_m2();
  const EntityDrop drop = drop_entities(ep, drop_rng);

  TrialOutput out;
  if (sp.has_cf) {
    Rng deploy_rng(cfg.layout == LayoutMode::Fixed
                       ? derive_seed(cfg.seed, 0, sw, kTagFixedLayout)
                       : derive_seed(cfg.seed, trial, sw, kTagCfDeploy));
    Rng rng(derive_seed(cfg.seed, trial, sw, kTagCfRealization));
    out.cf_gamma_linear = evaluate_cf_trial(cfg, sp, drop, deploy_rng, rng);
  }
  if (sp.has_mc) {
    Rng rng(derive_seed(cfg.seed, trial, sw, kTagMcRealization));
    out.mc_gamma_linear = evaluate_mc_trial(cfg, sp, drop, rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Study planners
// ---------------------------------------------------------------------------

namespace detail {

inline std::string split_id(int tx, int rx) {
  return "tx" + std::to_string(tx) + "rx" + std::to_string(rx);
}

inline SweepPoint split_point(const ExperimentConfig& cfg, int tx, int rx, int n_sc,
                              const std::string& id) {
  SweepPoint sp;
  sp.id = id;
  sp.n_subcarriers = n_sc;
  sp.cf = CfSizes{cfg.m_cf, cfg.na_cf, tx, rx, cfg.p_per_tap_w};
  sp.mc = map_cf_to_fair_mc(sp.cf);
  return sp;
}

}  // namespace detail

/// Single sweep point taken directly from the configuration.
inline StudyPlan plan_custom(const ExperimentConfig& cfg) {
  StudyPlan plan;
  plan.experiment = "custom";
  const std::string id = detail::split_id(cfg.m_tx, cfg.m_rx) + "_nc" +
                         std::to_string(cfg.n_subcarriers);
  plan.sweeps.push_back(
      detail::split_point(cfg, cfg.m_tx, cfg.m_rx, cfg.n_subcarriers, id));
  plan.comparisons.push_back({"cf", id, "mc", id});
  return plan;
}

/// Subcarrier sweep 1..n_subcarriers under a transmit-heavy and a balanced
/// transceiver split.
inline StudyPlan plan_a(const ExperimentConfig& cfg) {
  if (cfg.m_cf < 9)
    throw ConfigError("experiment A requires m_cf >= 9 for its transceiver splits");
  StudyPlan plan;
  plan.experiment = "A";
  const std::vector<std::pair<int, int>> splits = {{cfg.m_cf - 2, 2}, {cfg.m_cf - 8, 8}};
  for (const auto& [tx, rx] : splits) {
    for (int nc = 1; nc <= cfg.n_subcarriers; ++nc) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "nc%02d_", nc);
      const std::string id = buf + detail::split_id(tx, rx);
      plan.sweeps.push_back(detail::split_point(cfg, tx, rx, nc, id));
      plan.comparisons.push_back({"cf", id, "mc", id});
    }
  }
  return plan;
}

/// Transceiver-allocation sweep at fixed node and antenna counts: heavily
/// transmit-sided, balanced (75/25), and heavily receive-sided splits.
inline StudyPlan plan_b(const ExperimentConfig& cfg) {
  if (cfg.m_cf < 4)
    throw ConfigError("experiment B requires m_cf >= 4");
  StudyPlan plan;
  plan.experiment = "B";
  std::vector<std::pair<int, int>> splits;
  splits.emplace_back(cfg.m_cf - 1, 1);
  const int tx_balanced = (3 * cfg.m_cf) / 4;
  if (tx_balanced > 1 && tx_balanced < cfg.m_cf - 1)
    splits.emplace_back(tx_balanced, cfg.m_cf - tx_balanced);
  splits.emplace_back(1, cfg.m_cf - 1);
  for (const auto& [tx, rx] : splits) {
    const std::string id = detail::split_id(tx, rx);
    plan.sweeps.push_back(detail::split_point(cfg, tx, rx, cfg.n_subcarriers, id));
    plan.comparisons.push_back({"cf", id, "mc", id});
  }
  return plan;
}

/// Antenna-deployment sweep at a fixed antenna total N = m_cf * na_cf:
/// distributed variants with 1 and 4 antennas per AP against co-located
/// variants with 1, 2 and 4 BSs, everyone assigning 75% of antennas (or
/// nodes) to transmission and sharing the same total power.
inline StudyPlan plan_c(const ExperimentConfig& cfg) {
  StudyPlan plan;
  plan.experiment = "C";
  const int n_total = cfg.m_cf * cfg.na_cf;
  const double total_power_w = cfg.m_cf * cfg.p_per_tap_w;

  std::vector<std::string> cf_ids;
  for (int na : {1, 4}) {
    if (n_total % na != 0)
      throw ConfigError("experiment C: total antenna count " + std::to_string(n_total) +
                        " not divisible by per-AP count " + std::to_string(na));
    const int m_cf = n_total / na;
    const int tx = (3 * m_cf) / 4;
    const int rx = m_cf - tx;
    if (tx < 1 || rx < 1)
      throw ConfigError("experiment C: split leaves an empty role set");
    SweepPoint sp;
    sp.id = "cf_na" + std::to_string(na);
    sp.n_subcarriers = cfg.n_subcarriers;
    sp.cf = CfSizes{m_cf, na, tx, rx, total_power_w / m_cf};
    sp.has_mc = false;
    plan.sweeps.push_back(sp);
    cf_ids.push_back(sp.id);
  }

  std::vector<std::string> mc_ids;
  for (int m : {1, 2, 4}) {
    if (n_total % m != 0)
      throw ConfigError("experiment C: total antenna count " + std::to_string(n_total) +
                        " not divisible by BS count " + std::to_string(m));
    const int na = n_total / m;
    const int tx = (3 * na) / 4;
    const int rx = na - tx;
    if (tx < 1 || rx < 1)
      throw ConfigError("experiment C: split leaves an empty antenna set");
    SweepPoint sp;
    sp.id = "mc_m" + std::to_string(m);
    sp.n_subcarriers = cfg.n_subcarriers;
    sp.mc = McSizes{m, tx, rx, total_power_w / m};
    sp.has_cf = false;
    plan.sweeps.push_back(sp);
    mc_ids.push_back(sp.id);
  }

  for (const std::string& a : cf_ids)
    for (const std::string& b : mc_ids) plan.comparisons.push_back({"cf", a, "mc", b});
  return plan;
}

inline StudyPlan plan_study(const ExperimentConfig& cfg, const std::string& experiment) {
  if (experiment == "A") return plan_a(cfg);
  if (experiment == "B") return plan_b(cfg);
  if (experiment == "C") return plan_c(cfg);
  if (experiment == "custom") return plan_custom(cfg);
  throw ConfigError("unknown experiment '" + experiment + "' (expected A|B|C|custom)");
}

// ---------------------------------------------------------------------------
// Study runner
// ---------------------------------------------------------------------------

struct StudyResult {
  // per sweep point, per trial
  std::vector<std::vector<TrialOutput>> trials;
};

/// Runs every (sweep, trial) combination. Trials are data-parallel: each one
/// seeds itself from (master seed, trial, sweep), so results are identical
/// for any worker count and collection order.
inline StudyResult run_study(const ExperimentConfig& cfg, const StudyPlan& plan,
                             int workers) {
  if (workers < 1) workers = 1;
  StudyResult result;
  result.trials.resize(plan.sweeps.size());

  for (std::size_t s = 0; s < plan.sweeps.size(); ++s) {
    const SweepPoint& sp = plan.sweeps[s];
    auto& slot = result.trials[s];
    slot.assign(static_cast<std::size_t>(cfg.trials), TrialOutput{});

    std::atomic<std::int64_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto work = [&]() {
      while (true) {
        const std::int64_t t = next.fetch_add(1);
        if (t >= cfg.trials) return;
        try {
          slot[static_cast<std::size_t>(t)] =
              run_trial(cfg, sp, static_cast<std::uint64_t>(t));
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error)
            first_error = std::make_exception_ptr(DomainError(
                "trial " + std::to_string(t) + ", sweep '" + sp.id + "': " + e.what()));
          return;
        }
      }
    };

    if (workers == 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
  }
  return result;
}

/// Flattens a study result into emission-ready rows: sweep-major, then trial,
/// the distributed sample before the co-located one.
inline std::vector<SnrSample> collect_samples(const StudyPlan& plan,
                                              const StudyResult& result) {
  std::vector<SnrSample> rows;
  for (std::size_t s = 0; s < plan.sweeps.size(); ++s) {
    const SweepPoint& sp = plan.sweeps[s];
    for (std::size_t t = 0; t < result.trials[s].size(); ++t) {
      const TrialOutput& out = result.trials[s][t];
      if (sp.has_cf)
        rows.push_back({static_cast<std::int64_t>(t), "cf", sp.id, out.cf_gamma_linear,
                        linear_to_db(out.cf_gamma_linear)});
      if (sp.has_mc)
        rows.push_back({static_cast<std::int64_t>(t), "mc", sp.id, out.mc_gamma_linear,
                        linear_to_db(out.mc_gamma_linear)});
    }
  }
  return rows;
}

}  // namespace isac
