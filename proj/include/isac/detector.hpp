#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "isac/channels.hpp"
#include "isac/errors.hpp"
#include "isac/geometry.hpp"
#include "isac/linalg.hpp"
#include "isac/rng.hpp"
#include "isac/stats.hpp"
#include "isac/transmit.hpp"

namespace isac {

/// Stacked sensing response of one receive node in the distributed
/// architecture, kept in factored form: every stacked row block (one
/// resource element) is the receive steering vector scaled by one complex
/// coefficient per transmit node,
///   d_m(n, n') = sqrt(beta_m) * a_rx * (a_tx,m^H s_m(n, n'))
///                * exp(-j 2 pi n df tau_m) * exp(+j 2 pi n' f_d,m T_s).
/// The full (N_a * N_c * N_s) x |M_tx| matrix is only materialized by the
/// reference path; production statistics run on the |M_tx| x |M_tx| Gram
/// matrix accumulated over resource elements.
///
/// Stacked row order: antenna fastest, then subcarrier, then symbol.
struct CfSensingResponse {
  CVec rx_steering;  // N_a entries
  CMatrix coeffs;    // (N_c * N_s) rows, |M_tx| columns; row b = g(n, n')^T
  int n_subcarriers = 0;
  int n_symbols = 0;

  std::size_t n_rx_antennas() const { return rx_steering.size(); }
  std::size_t n_blocks() const { return coeffs.rows(); }
  std::size_t n_tx_nodes() const { return coeffs.cols(); }
  std::size_t stacked_rows() const { return n_rx_antennas() * n_blocks(); }

  double rx_norm_sq() const { return norm_sq(rx_steering); }

  /// G = ||a_rx||^2 * coeffs^H coeffs; equals the Gram matrix of the stacked
  /// response because every row block is a common vector times a scalar.
  CMatrix gram() const {
    CMatrix g = gram_matrix(coeffs);
    const double na2 = rx_norm_sq();
    for (cd& v : g.data()) v *= na2;
    return g;
  }

  /// Pivot threshold in eigenvalue units for the numerical rank of the
  /// stacked response. The relative singular-value tolerance is
  /// max(rows, cols) * eps; applied to the Gram matrix the resolvable floor
  /// is the square root of that (conditioning is squared on the Gram), so
  /// pivots are cut at tol * lambda_max instead of tol^2 * lambda_max.
  double gram_pivot_threshold(const CMatrix& g) const {
    double max_diag = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
      max_diag = std::max(max_diag, g(i, i).real());
    return rank_rel_tol(stacked_rows(), n_tx_nodes()) * max_diag;
  }

  int rank() const {
    const CMatrix g = gram();
    return static_cast<int>(pivoted_cholesky(g, gram_pivot_threshold(g)).rank);
  }

  /// Explicit stacked matrix; reference/testing path only.
  CMatrix materialize() const {
    CMatrix d(stacked_rows(), n_tx_nodes());
    for (std::size_t b = 0; b < n_blocks(); ++b)
      for (std::size_t i = 0; i < n_rx_antennas(); ++i)
        for (std::size_t m = 0; m < n_tx_nodes(); ++m)
          d(b * n_rx_antennas() + i, m) = rx_steering[i] * coeffs(b, m);
    return d;
  }
};

/// Monostatic counterpart: a single stacked vector.
struct McSensingResponse {
  CVec rx_steering;  // N_a_rx entries
  CVec coeffs;       // one complex coefficient per resource element
  int n_subcarriers = 0;
  int n_symbols = 0;

  std::size_t stacked_rows() const { return rx_steering.size() * coeffs.size(); }
  double norm_sq_stacked() const { return norm_sq(rx_steering) * norm_sq(coeffs); }

  CVec materialize() const {
    CVec d(stacked_rows());
    std::size_t idx = 0;
    for (const cd& g : coeffs)
      for (const cd& a : rx_steering) d[idx++] = a * g;
    return d;
  }
};

/// Builds the stacked response seen by one receive node: one column per
/// transmit node, phases taken at the true delay/Doppler of each bistatic
/// leg (the detector is matched; Doppler is assumed known).
inline CfSensingResponse build_response_cf(const std::vector<Position3D>& tx_positions,
                                           const ArrayConfig& tx_array,
                                           const Position3D& rx_position,
                                           const ArrayConfig& rx_array,
                                           const TargetState& target,
                                           const std::vector<TransmitGrid>& grids,
                                           const OfdmNumerology& num, double wavelength) {
  if (grids.size() != tx_positions.size())
    throw DomainError("build_response_cf: one grid per transmit node required");
  const std::size_t n_tx = tx_positions.size();
  const double ts = num.symbol_duration_s();

  CfSensingResponse resp;
  resp.n_subcarriers = num.n_subcarriers;
  resp.n_symbols = num.n_symbols;
  resp.rx_steering = steering_vector(rx_array, angles_between(rx_position, target.position));

  std::vector<CVec> a_tx(n_tx);
  std::vector<double> sqrt_beta(n_tx);
  std::vector<DelayDoppler> dd(n_tx);
  for (std::size_t m = 0; m < n_tx; ++m) {
    a_tx[m] = steering_vector(tx_array, angles_between(tx_positions[m], target.position));
    sqrt_beta[m] =
        std::sqrt(target_lsf_bistatic(tx_positions[m], target.position, rx_position, wavelength));
    dd[m] = bistatic_delay_doppler(tx_positions[m], target.position, target.velocity,
                                   rx_position, wavelength);
    if (static_cast<std::size_t>(grids[m].n_antennas) != a_tx[m].size() ||
        grids[m].n_subcarriers != num.n_subcarriers || grids[m].n_symbols != num.n_symbols)
      throw DomainError("build_response_cf: grid dimensions mismatch");
  }

  resp.coeffs = CMatrix(static_cast<std::size_t>(num.resource_elements()), n_tx);
  for (int sym = 0; sym < num.n_symbols; ++sym) {
    for (int sc = 0; sc < num.n_subcarriers; ++sc) {
      const std::size_t b = static_cast<std::size_t>(sc) +
                            static_cast<std::size_t>(num.n_subcarriers) *
                                static_cast<std::size_t>(sym);
      for (std::size_t m = 0; m < n_tx; ++m) {
        const cd* s = grids[m].re(sc, sym);
        cd beam{0.0, 0.0};
        for (std::size_t a = 0; a < a_tx[m].size(); ++a)
          beam += std::conj(a_tx[m][a]) * s[a];
        resp.coeffs(b, m) = sqrt_beta[m] * beam *
                            delay_phase(sc, num.scs_hz, dd[m].delay_s) *
                            doppler_phase(sym, ts, dd[m].doppler_hz);
      }
    }
  }
  return resp;
}

/// Monostatic stacked response of one co-located BS (arrival and departure
/// angles coincide; round-trip delay, doubled radial Doppler).
inline McSensingResponse build_response_mc(const Position3D& bs_position,
                                           const ArrayConfig& tx_array,
                                           const ArrayConfig& rx_array,
                                           const TargetState& target,
                                           const TransmitGrid& grid,
                                           const OfdmNumerology& num, double wavelength) {
  if (static_cast<std::size_t>(grid.n_antennas) !=
          static_cast<std::size_t>(tx_array.num_elements) ||
      grid.n_subcarriers != num.n_subcarriers || grid.n_symbols != num.n_symbols)
    throw DomainError("build_response_mc: grid dimensions mismatch");

  const Angles ang = angles_between(bs_position, target.position);
  const CVec a_tx = steering_vector(tx_array, ang);
  const double sqrt_beta =
      std::sqrt(target_lsf_bistatic(bs_position, target.position, bs_position, wavelength));
  const DelayDoppler dd =
      monostatic_delay_doppler(bs_position, target.position, target.velocity, wavelength);
  const double ts = num.symbol_duration_s();

  McSensingResponse resp;
  resp.n_subcarriers = num.n_subcarriers;
  resp.n_symbols = num.n_symbols;
  resp.rx_steering = steering_vector(rx_array, ang);
  resp.coeffs.resize(static_cast<std::size_t>(num.resource_elements()));
  for (int sym = 0; sym < num.n_symbols; ++sym) {
    for (int sc = 0; sc < num.n_subcarriers; ++sc) {
      const cd* s = grid.re(sc, sym);
      cd beam{0.0, 0.0};
      for (std::size_t a = 0; a < a_tx.size(); ++a) beam += std::conj(a_tx[a]) * s[a];
      resp.coeffs[static_cast<std::size_t>(sc) +
                  static_cast<std::size_t>(num.n_subcarriers) * static_cast<std::size_t>(sym)] =
          sqrt_beta * beam * delay_phase(sc, num.scs_hz, dd.delay_s) *
          doppler_phase(sym, ts, dd.doppler_hz);
    }
  }
  return resp;
}

/// One observation vector stacked over the frame: y = D alpha + z under H1,
/// pure noise under H0. Noise entries are i.i.d. CN(0, noise_variance_w).
inline CVec simulate_observation_cf(const CfSensingResponse& resp,
                                    const CVec* rcs_draws, double noise_variance_w,
                                    Rng& rng) {
  if (rcs_draws && rcs_draws->size() != resp.n_tx_nodes())
    throw DomainError("simulate_observation: one reflectivity per transmit node required");
  const double sigma = std::sqrt(noise_variance_w);
  CVec y(resp.stacked_rows());
  std::size_t idx = 0;
  for (std::size_t b = 0; b < resp.n_blocks(); ++b) {
    cd mix{0.0, 0.0};
    if (rcs_draws) {
      for (std::size_t m = 0; m < resp.n_tx_nodes(); ++m)
        mix += resp.coeffs(b, m) * (*rcs_draws)[m];
    }
    for (std::size_t i = 0; i < resp.n_rx_antennas(); ++i)
      y[idx++] = resp.rx_steering[i] * mix + sigma * rng.cnormal();
  }
  return y;
}

inline CVec simulate_observation_mc(const McSensingResponse& resp,
                                    const cd* rcs_draw, double noise_variance_w,
                                    Rng& rng) {
  const double sigma = std::sqrt(noise_variance_w);
  CVec y(resp.stacked_rows());
  std::size_t idx = 0;
  for (const cd& g : resp.coeffs) {
    const cd mix = rcs_draw ? g * (*rcs_draw) : cd{0.0, 0.0};
    for (const cd& a : resp.rx_steering) y[idx++] = a * mix + sigma * rng.cnormal();
  }
  return y;
}

/// Per-receive-node projection of an observation onto the range of the
/// stacked response: statistic, numerical rank, and the ML reflectivity
/// estimate. Runs entirely on the Gram matrix: with c = D^H y and a
/// rank-revealing factorization of G = D^H D restricted to the accepted
/// pivot set J, ||P y||^2 = c_J^H G_JJ^{-1} c_J.
struct CfProjection {
  double statistic = 0.0;
  int rank = 0;
  CVec alpha_hat;  // basic ML solution; zero on discarded pivots
};

inline CfProjection project_observation_cf(const CfSensingResponse& resp, const CVec& y) {
  if (y.size() != resp.stacked_rows())
    throw DomainError("project_observation_cf: observation length mismatch");

  // c = D^H y accumulated per resource element.
  CVec u(resp.n_blocks());
  for (std::size_t b = 0; b < resp.n_blocks(); ++b) {
    cd s{0.0, 0.0};
    for (std::size_t i = 0; i < resp.n_rx_antennas(); ++i)
      s += std::conj(resp.rx_steering[i]) * y[b * resp.n_rx_antennas() + i];
    u[b] = s;
  }
  CVec c = adjoint_apply(resp.coeffs, u);

  const CMatrix g = resp.gram();
  const PivotedCholesky pc = pivoted_cholesky(g, resp.gram_pivot_threshold(g));

  CfProjection out;
  out.rank = static_cast<int>(pc.rank);
  out.alpha_hat.assign(resp.n_tx_nodes(), cd{0.0, 0.0});
  if (pc.rank == 0) return out;

  CVec c_j(pc.rank);
  for (std::size_t k = 0; k < pc.rank; ++k) c_j[k] = c[pc.perm[k]];
  const CVec t = forward_solve(pc.l, c_j);
  out.statistic = norm_sq(t);
  const CVec w = backward_solve_adjoint(pc.l, t);
  for (std::size_t k = 0; k < pc.rank; ++k) out.alpha_hat[pc.perm[k]] = w[k];
  return out;
}

/// Distributed GLRT statistic: sum over receive nodes of the projected
/// observation energy. Throws when every response is identically zero (the
/// test is undefined).
inline double glrt_statistic_cf(const std::vector<CfSensingResponse>& responses,
                                const std::vector<CVec>& observations) {
  if (responses.size() != observations.size())
    throw DomainError("glrt_statistic_cf: response/observation count mismatch");
  double stat = 0.0;
  int total_rank = 0;
  for (std::size_t l = 0; l < responses.size(); ++l) {
    const CfProjection p = project_observation_cf(responses[l], observations[l]);
    stat += p.statistic;
    total_rank += p.rank;
  }
  if (total_rank == 0) throw DomainError("glrt_statistic_cf: all responses are zero");
  return stat;
}

/// Reference implementation of the same statistic through the explicitly
/// materialized stacked matrix and an orthonormal basis of its column space.
inline double glrt_statistic_cf_explicit(const std::vector<CfSensingResponse>& responses,
                                         const std::vector<CVec>& observations) {
  if (responses.size() != observations.size())
    throw DomainError("glrt_statistic_cf_explicit: response/observation count mismatch");
  double stat = 0.0;
  std::size_t total_rank = 0;
  for (std::size_t l = 0; l < responses.size(); ++l) {
    const CMatrix d = responses[l].materialize();
    const CMatrix q = mgs_orthonormal_basis(
        d, rank_rel_tol(d.rows(), d.cols()));
    const CVec proj = adjoint_apply(q, observations[l]);
    stat += norm_sq(proj);
    total_rank += q.cols();
  }
  if (total_rank == 0)
    throw DomainError("glrt_statistic_cf_explicit: all responses are zero");
  return stat;
}

/// Matched-filter GLRT of the co-located architecture: |d^H y|^2 / ||d||^2.
inline double glrt_statistic_mc(const McSensingResponse& resp, const CVec& y) {
  if (y.size() != resp.stacked_rows())
    throw DomainError("glrt_statistic_mc: observation length mismatch");
  const double dn = resp.norm_sq_stacked();
  if (!(dn > 0.0)) throw DomainError("glrt_statistic_mc: zero response");
  cd inner{0.0, 0.0};
  std::size_t idx = 0;
  for (const cd& g : resp.coeffs)
    for (const cd& a : resp.rx_steering) inner += std::conj(a * g) * y[idx++];
  return std::norm(inner) / dn;
}

/// Detection threshold for a target false-alarm probability. Under H0 the
/// projection statistic is the squared norm of projected white complex
/// Gaussian noise: Gamma(shape = total rank, scale = noise variance). The
/// co-located test is the shape-1 (exponential) special case.
inline double threshold_from_pfa(int total_rank, double noise_variance_w, double pfa) {
  if (total_rank < 1) throw DomainError("threshold_from_pfa: rank must be >= 1");
  if (!(noise_variance_w > 0.0))
    throw DomainError("threshold_from_pfa: noise variance must be > 0");
  if (!(pfa > 0.0 && pfa < 1.0))
    throw DomainError("threshold_from_pfa: pfa must lie in (0, 1)");
  return noise_variance_w * gamma_quantile(static_cast<double>(total_rank), 1.0 - pfa);
}

struct GlrtOutcome {
  double statistic = 0.0;
  double threshold = 0.0;
  bool target_declared = false;  // H1 iff statistic > threshold
  CVec alpha_estimate;           // concatenated per receive node (CF), scalar (MC)
};

inline GlrtOutcome run_glrt_cf(const std::vector<CfSensingResponse>& responses,
                               const std::vector<CVec>& observations,
                               double noise_variance_w, double pfa) {
  GlrtOutcome out;
  int total_rank = 0;
  for (std::size_t l = 0; l < responses.size(); ++l) {
    const CfProjection p = project_observation_cf(responses[l], observations[l]);
    out.statistic += p.statistic;
    total_rank += p.rank;
    out.alpha_estimate.insert(out.alpha_estimate.end(), p.alpha_hat.begin(),
                              p.alpha_hat.end());
  }
  if (total_rank == 0) throw DomainError("run_glrt_cf: all responses are zero");
  out.threshold = threshold_from_pfa(total_rank, noise_variance_w, pfa);
  out.target_declared = out.statistic > out.threshold;
  return out;
}

inline GlrtOutcome run_glrt_mc(const McSensingResponse& resp, const CVec& y,
                               double noise_variance_w, double pfa) {
  GlrtOutcome out;
  out.statistic = glrt_statistic_mc(resp, y);
  out.threshold = threshold_from_pfa(1, noise_variance_w, pfa);
  out.target_declared = out.statistic > out.threshold;
  const double dn = resp.norm_sq_stacked();
  cd inner{0.0, 0.0};
  std::size_t idx = 0;
  for (const cd& g : resp.coeffs)
    for (const cd& a : resp.rx_steering) inner += std::conj(a * g) * y[idx++];
  out.alpha_estimate = {inner / dn};
  return out;
}

/// Received sensing SNR of the distributed architecture with a shared
/// reflectivity variance (R = sigma_alpha^2 I):
///   gamma = sum_l tr(D_l R D_l^H) / (sigma_z^2 sum_l r_l).
inline double sensing_snr_cf(const std::vector<CfSensingResponse>& responses,
                             double rcs_variance_m2, double noise_variance_w) {
  double num = 0.0;
  int total_rank = 0;
  for (const CfSensingResponse& r : responses) {
    num += rcs_variance_m2 * r.rx_norm_sq() * frobenius_norm_sq(r.coeffs);
    total_rank += r.rank();
  }
  if (total_rank == 0)
    throw DomainError("sensing_snr_cf: zero total rank, SNR undefined");
  return num / (noise_variance_w * static_cast<double>(total_rank));
}

/// Full-covariance variant: tr(D R D^H) = tr(R G).
inline double sensing_snr_cf(const std::vector<CfSensingResponse>& responses,
                             const CMatrix& rcs_covariance, double noise_variance_w) {
  double num = 0.0;
  int total_rank = 0;
  for (const CfSensingResponse& r : responses) {
    if (rcs_covariance.rows() != r.n_tx_nodes() || rcs_covariance.cols() != r.n_tx_nodes())
      throw DomainError("sensing_snr_cf: covariance dimension mismatch");
    const CMatrix g = r.gram();
    cd tr{0.0, 0.0};
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) tr += rcs_covariance(i, j) * g(j, i);
    num += tr.real();
    total_rank += static_cast<int>(pivoted_cholesky(g, r.gram_pivot_threshold(g)).rank);
  }
  if (total_rank == 0)
    throw DomainError("sensing_snr_cf: zero total rank, SNR undefined");
  return num / (noise_variance_w * static_cast<double>(total_rank));
}

/// Received sensing SNR of the co-located architecture:
/// gamma = sigma_alpha^2 ||d||^2 / sigma_z^2.
inline double sensing_snr_mc(const McSensingResponse& resp, double rcs_variance_m2,
                             double noise_variance_w) {
  if (!(noise_variance_w > 0.0))
    throw DomainError("sensing_snr_mc: noise variance must be > 0");
  return rcs_variance_m2 * resp.norm_sq_stacked() / noise_variance_w;
}

struct DetectionEstimate {
  double probability = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

/// Monte-Carlo detection probability of the co-located test at a given
/// false-alarm level, with a Wilson 95% interval. Diagnostic helper.
inline DetectionEstimate detection_probability_mc(const McSensingResponse& resp,
                                                  double rcs_variance_m2,
                                                  double noise_variance_w, double pfa,
                                                  std::size_t trials, Rng& rng) {
  if (trials == 0) throw DomainError("detection_probability_mc: trials must be >= 1");
  const double delta = threshold_from_pfa(1, noise_variance_w, pfa);
  const double sigma_alpha = std::sqrt(rcs_variance_m2);
  std::size_t hits = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const cd alpha = sigma_alpha * rng.cnormal();
    const CVec y = simulate_observation_mc(resp, &alpha, noise_variance_w, rng);
    if (glrt_statistic_mc(resp, y) > delta) ++hits;
  }
  const WilsonInterval w = wilson_interval(hits, trials);
  return {w.estimate, w.lo, w.hi};
}

}  // namespace isac
