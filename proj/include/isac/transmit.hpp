#pragma once

#include <cmath>
#include <vector>

#include "isac/channels.hpp"
#include "isac/errors.hpp"
#include "isac/geometry.hpp"
#include "isac/linalg.hpp"
#include "isac/rng.hpp"

namespace isac {

struct OfdmNumerology {
  int n_subcarriers = 12;
  int n_symbols = 14;
  double scs_hz = 30e3;
  double cp_s = 2.34e-6;

  double bandwidth_hz() const { return n_subcarriers * scs_hz; }
  double symbol_duration_s() const { return 1.0 / scs_hz + cp_s; }
  int resource_elements() const { return n_subcarriers * n_symbols; }
};

inline void validate(const OfdmNumerology& num) {
  if (num.n_subcarriers < 1) throw ConfigError("n_subcarriers must be >= 1");
  if (num.n_symbols < 1) throw ConfigError("n_symbols must be >= 1");
  if (!(num.scs_hz > 0.0)) throw ConfigError("scs_hz must be > 0");
  if (num.cp_s < 0.0) throw ConfigError("cp_s must be >= 0");
}

/// Frequency-domain baseband grid of one transmit node: an N_a vector per
/// (subcarrier, symbol) resource element, antenna index fastest.
struct TransmitGrid {
  int n_antennas = 0;
  int n_subcarriers = 0;
  int n_symbols = 0;
  CVec data;

  const cd* re(int subcarrier, int symbol) const {
    return data.data() +
           static_cast<std::size_t>(n_antennas) *
               (static_cast<std::size_t>(subcarrier) +
                static_cast<std::size_t>(n_subcarriers) * static_cast<std::size_t>(symbol));
  }
  cd* re(int subcarrier, int symbol) {
    return data.data() +
           static_cast<std::size_t>(n_antennas) *
               (static_cast<std::size_t>(subcarrier) +
                static_cast<std::size_t>(n_subcarriers) * static_cast<std::size_t>(symbol));
  }
};

enum class SteeringNorm { Unit, Literal };
enum class SymbolAlphabet { UniformPhase, Qpsk };

/// Maximum-ratio precoder: conjugate of the channel estimate scaled by the
/// analytic expected squared norm of the estimate (not the sample norm), so
/// E[||w||^2] = 1 over the estimate ensemble.
inline CVec build_comm_precoder(const CVec& estimate, double expected_norm_sq) {
  if (!(expected_norm_sq > 0.0))
    throw DomainError("build_comm_precoder: degenerate channel (zero expected norm)");
  const double inv = 1.0 / std::sqrt(expected_norm_sq);
  CVec w(estimate.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::conj(estimate[i]) * inv;
  return w;
}

/// Sensing precoder: the array response steered at the probed position. The
/// default mode rescales to unit norm so the sensing power coefficient reads
/// as radiated watts; literal mode keeps the raw steering vector.
inline CVec build_sense_precoder(const ArrayConfig& arr, const Position3D& node,
                                 const Position3D& probed, SteeringNorm mode) {
  const Angles ang = angles_between(node, probed);
  CVec w = steering_vector(arr, ang);
  if (mode == SteeringNorm::Unit) {
    const double inv = 1.0 / std::sqrt(static_cast<double>(arr.num_elements));
    for (cd& v : w) v *= inv;
  }
  return w;
}

struct PowerSplit {
  double per_ue_w = 0.0;    // mu
  double per_cell_w = 0.0;  // eta
};

/// Uniform split of a node's per-resource-element budget across its served
/// UEs and probed cells. A node with no consumers emits nothing; a node with
/// only the sensing task puts the whole budget there.
inline PowerSplit allocate_power_uniform(double budget_w, int n_served_ues,
                                         int n_probed_cells) {
  if (!(budget_w > 0.0)) throw ConfigError("power budget must be > 0");
  PowerSplit split;
  const int consumers = n_served_ues + n_probed_cells;
  if (consumers == 0) return split;
  const double share = budget_w / static_cast<double>(consumers);
  if (n_served_ues > 0) split.per_ue_w = share;
  if (n_probed_cells > 0) split.per_cell_w = share;
  return split;
}

/// Everything one transmit node needs to synthesize its grid. Communication
/// precoders are per served UE and per subcarrier (the estimate is
/// frequency-selective); the sensing beam is frequency flat. A node with no
/// sources at all emits the zero grid, so the antenna count is carried
/// explicitly.
struct NodePrecoders {
  int n_antennas = 0;
  std::vector<std::vector<CVec>> comm;  // [served ue][subcarrier] -> N_a precoder
  std::vector<double> comm_power_w;     // mu per served UE
  CVec sense;                           // empty when the node probes no cell
  double sense_power_w = 0.0;           // eta
};

/// Dual-purpose downlink grid:
///   s(n, n') = sum_k sqrt(mu_k) w_k(n) x_k(n, n') + sqrt(eta) w_0 x_0(n, n'),
/// with every symbol an independent unit-modulus draw. The same routine
/// serves both architectures; only the precoder/power sets differ.
inline TransmitGrid synthesize_grid(const NodePrecoders& np, const OfdmNumerology& num,
                                    SymbolAlphabet alphabet, Rng& rng) {
  validate(num);
  if (np.comm.size() != np.comm_power_w.size())
    throw DomainError("synthesize_grid: precoder/power count mismatch");

  int n_antennas = np.n_antennas;
  if (n_antennas == 0) n_antennas = static_cast<int>(np.sense.size());
  if (!np.sense.empty() && static_cast<int>(np.sense.size()) != n_antennas)
    throw DomainError("synthesize_grid: inconsistent precoder lengths");
  for (const auto& per_ue : np.comm) {
    if (static_cast<int>(per_ue.size()) != num.n_subcarriers)
      throw DomainError("synthesize_grid: precoders must cover every subcarrier");
    if (!per_ue.empty()) {
      const int na = static_cast<int>(per_ue.front().size());
      if (n_antennas != 0 && na != n_antennas)
        throw DomainError("synthesize_grid: inconsistent precoder lengths");
      n_antennas = na;
    }
  }
  if (n_antennas == 0) throw DomainError("synthesize_grid: node has no antennas");

  TransmitGrid grid;
  grid.n_antennas = n_antennas;
  grid.n_subcarriers = num.n_subcarriers;
  grid.n_symbols = num.n_symbols;
  grid.data.assign(static_cast<std::size_t>(n_antennas) *
                       static_cast<std::size_t>(num.resource_elements()),
                   cd{0.0, 0.0});

  auto draw = [&rng, alphabet]() {
    return alphabet == SymbolAlphabet::UniformPhase ? rng.unit_phase() : rng.qpsk();
  };

  for (int sym = 0; sym < num.n_symbols; ++sym) {
    for (int sc = 0; sc < num.n_subcarriers; ++sc) {
      cd* s = grid.re(sc, sym);
      for (std::size_t u = 0; u < np.comm.size(); ++u) {
        const cd x = draw();
        const cd scale = std::sqrt(np.comm_power_w[u]) * x;
        const CVec& w = np.comm[u][static_cast<std::size_t>(sc)];
        for (int a = 0; a < n_antennas; ++a) s[a] += scale * w[static_cast<std::size_t>(a)];
      }
      if (!np.sense.empty()) {
        const cd x0 = draw();
        const cd scale = std::sqrt(np.sense_power_w) * x0;
        for (int a = 0; a < n_antennas; ++a) s[a] += scale * np.sense[static_cast<std::size_t>(a)];
      }
    }
  }
  return grid;
}

}  // namespace isac
