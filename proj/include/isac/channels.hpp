#pragma once

#include <cmath>
#include <complex>
#include <utility>
#include <vector>

#include "isac/errors.hpp"
#include "isac/geometry.hpp"
#include "isac/linalg.hpp"
#include "isac/rng.hpp"

namespace isac {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Angles {
  double azimuth = 0.0;    // horizontal plane, from the global x-axis, (-pi, pi]
  double elevation = 0.0;  // from the horizontal plane, [-pi/2, pi/2]
};

/// Azimuth/elevation of `to` as seen from `from` under the global convention
/// above. Throws for coincident points.
inline Angles angles_between(const Position3D& from, const Position3D& to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  const double dz = to.z - from.z;
  const double horiz = std::hypot(dx, dy);
  const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (!(r > 1e-9)) throw GeometryError("angles_between: coincident points");
  Angles a;
  a.azimuth = (horiz == 0.0) ? 0.0 : std::atan2(dy, dx);
  if (a.azimuth <= -kPi) a.azimuth = kPi;  // keep azimuth in (-pi, pi]
  a.elevation = std::atan2(dz, horiz);
  return a;
}

/// ULA response vector. With the default y-axis orientation, element n has
/// phase 2*pi*spacing*n*cos(elevation)*sin(azimuth); an x-axis array uses the
/// cosine of the azimuth instead. Entries are unit modulus, so the squared
/// norm equals the element count.
inline CVec steering_vector(const ArrayConfig& arr, double azimuth, double elevation) {
  validate(arr);
  const double dir = (arr.axis == ArrayAxis::Y)
                         ? std::cos(elevation) * std::sin(azimuth)
                         : std::cos(elevation) * std::cos(azimuth);
  const double step = kTwoPi * arr.spacing_wavelengths * dir;
  CVec a(static_cast<std::size_t>(arr.num_elements));
  for (int n = 0; n < arr.num_elements; ++n) {
    const double ph = step * n;
    a[static_cast<std::size_t>(n)] = {std::cos(ph), std::sin(ph)};
  }
  return a;
}

inline CVec steering_vector(const ArrayConfig& arr, const Angles& a) {
  return steering_vector(arr, a.azimuth, a.elevation);
}

/// Geometry factor of the bistatic radar equation,
/// beta = lambda^2 / ((4*pi)^3 * d_tx^2 * d_rx^2). The target reflectivity is
/// carried separately by the complex RCS draw, so beta excludes it. With
/// tx == rx this reduces to the monostatic lambda^2 / ((4*pi)^3 * d^4).
inline double target_lsf_bistatic(const Position3D& tx, const Position3D& target,
                                  const Position3D& rx, double wavelength) {
  const double d_tx = distance(tx, target);
  const double d_rx = distance(rx, target);
  if (!(d_tx > 1e-9) || !(d_rx > 1e-9))
    throw GeometryError("target_lsf_bistatic: zero-length propagation leg");
  const double four_pi = 4.0 * kPi;
  return wavelength * wavelength /
         (four_pi * four_pi * four_pi * d_tx * d_tx * d_rx * d_rx);
}

struct DelayDoppler {
  double delay_s = 0.0;
  double doppler_hz = 0.0;
};

/// Bistatic delay (sum of both legs over c) and Doppler shift. The Doppler
/// sign convention is positive when the target closes on a node: with
/// u the unit vector from target toward the node, f_d = (v.u_tx + v.u_rx)/lambda.
inline DelayDoppler bistatic_delay_doppler(const Position3D& tx, const Position3D& target,
                                           const std::array<double, 3>& velocity,
                                           const Position3D& rx, double wavelength) {
  const double d_tx = distance(tx, target);
  const double d_rx = distance(rx, target);
  if (!(d_tx > 1e-9) || !(d_rx > 1e-9))
    throw GeometryError("bistatic_delay_doppler: zero-length propagation leg");
  const double ux_tx = (tx.x - target.x) / d_tx;
  const double uy_tx = (tx.y - target.y) / d_tx;
  const double uz_tx = (tx.z - target.z) / d_tx;
  const double ux_rx = (rx.x - target.x) / d_rx;
  const double uy_rx = (rx.y - target.y) / d_rx;
  const double uz_rx = (rx.z - target.z) / d_rx;
  DelayDoppler out;
  out.delay_s = (d_tx + d_rx) / kSpeedOfLight;
  out.doppler_hz = (velocity[0] * (ux_tx + ux_rx) + velocity[1] * (uy_tx + uy_rx) +
                    velocity[2] * (uz_tx + uz_rx)) /
                   wavelength;
  return out;
}

inline DelayDoppler monostatic_delay_doppler(const Position3D& node,
                                             const Position3D& target,
                                             const std::array<double, 3>& velocity,
                                             double wavelength) {
  return bistatic_delay_doppler(node, target, velocity, node, wavelength);
}

/// One transmit-target-receive link, with the reflectivity draw held fixed
/// across every resource element of a coherence block (Swerling-I).
struct TargetLink {
  double lsf_gain = 0.0;   // beta, linear
  double delay_s = 0.0;    // tau
  double doppler_hz = 0.0; // f_d
  cd rcs_draw{1.0, 0.0};   // alpha
  Angles aod;              // departure at the transmit node
  Angles aoa;              // arrival at the receive node
};

inline cd delay_phase(int subcarrier, double scs_hz, double delay_s) {
  const double ph = -kTwoPi * subcarrier * scs_hz * delay_s;
  return {std::cos(ph), std::sin(ph)};
}

inline cd doppler_phase(int symbol, double symbol_duration_s, double doppler_hz) {
  const double ph = kTwoPi * symbol * doppler_hz * symbol_duration_s;
  return {std::cos(ph), std::sin(ph)};
}

/// Bistatic target channel on resource element (n, n'):
/// H = alpha * sqrt(beta) * a_rx * a_tx^H * exp(-j 2 pi n df tau)
///                                    * exp(+j 2 pi n' f_d T_s).
/// Rank one by construction; the two phase factors are unit modulus, so the
/// entry magnitudes do not depend on (n, n').
inline CMatrix target_channel_cf(const TargetLink& link, const ArrayConfig& rx_arr,
                                 const ArrayConfig& tx_arr, int subcarrier, int symbol,
                                 int n_subcarriers, int n_symbols, double scs_hz,
                                 double symbol_duration_s) {
  if (subcarrier < 0 || subcarrier >= n_subcarriers || symbol < 0 || symbol >= n_symbols)
    throw DomainError("target_channel: resource-element index out of range");
  const CVec a_rx = steering_vector(rx_arr, link.aoa);
  const CVec a_tx = steering_vector(tx_arr, link.aod);
  const cd scale = link.rcs_draw * std::sqrt(link.lsf_gain) *
                   delay_phase(subcarrier, scs_hz, link.delay_s) *
                   doppler_phase(symbol, symbol_duration_s, link.doppler_hz);
  CMatrix h(a_rx.size(), a_tx.size());
  for (std::size_t i = 0; i < a_rx.size(); ++i)
    for (std::size_t j = 0; j < a_tx.size(); ++j)
      h(i, j) = scale * a_rx[i] * std::conj(a_tx[j]);
  return h;
}

/// Monostatic variant: arrival and departure angles coincide; the link is
/// expected to carry the round-trip delay and doubled radial Doppler.
inline CMatrix target_channel_mc(const TargetLink& link, const ArrayConfig& rx_arr,
                                 const ArrayConfig& tx_arr, int subcarrier, int symbol,
                                 int n_subcarriers, int n_symbols, double scs_hz,
                                 double symbol_duration_s) {
  TargetLink mono = link;
  mono.aod = link.aoa;
  return target_channel_cf(mono, rx_arr, tx_arr, subcarrier, symbol, n_subcarriers,
                           n_symbols, scs_hz, symbol_duration_s);
}

/// Rician fading vector (UE link): sqrt(beta/(K+1)) * (sqrt(K) e^{j psi} a + n),
/// NLoS entries i.i.d. CN(0, 1). The phase is redrawn on every call, i.e.
/// per subcarrier.
inline CVec rician_vector(double lsf, double k_factor, const CVec& los_steering, Rng& rng) {
  if (!(lsf > 0.0)) throw DomainError("rician_vector: lsf must be > 0");
  if (k_factor < 0.0) throw DomainError("rician_vector: K must be >= 0");
  const double kappa = std::sqrt(lsf / (1.0 + k_factor));
  const double psi = rng.uniform_range(0.0, kTwoPi);
  const cd los = std::sqrt(k_factor) * cd{std::cos(psi), std::sin(psi)};
  CVec h(los_steering.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = kappa * (los * los_steering[i] + rng.cnormal());
  return h;
}

/// Rician fading matrix (direct node-to-node link), LoS part from the outer
/// product of the two array responses.
inline CMatrix rician_matrix(double lsf, double k_factor, const CVec& a_rx,
                             const CVec& a_tx, Rng& rng) {
  if (!(lsf > 0.0)) throw DomainError("rician_matrix: lsf must be > 0");
  if (k_factor < 0.0) throw DomainError("rician_matrix: K must be >= 0");
  const double kappa = std::sqrt(lsf / (1.0 + k_factor));
  const double psi = rng.uniform_range(0.0, kTwoPi);
  const cd ell = std::sqrt(k_factor) * cd{std::cos(psi), std::sin(psi)};
  CMatrix g(a_rx.size(), a_tx.size());
  for (std::size_t i = 0; i < a_rx.size(); ++i)
    for (std::size_t j = 0; j < a_tx.size(); ++j)
      g(i, j) = kappa * (ell * a_rx[i] * std::conj(a_tx[j]) + rng.cnormal());
  return g;
}

/// Distance-power-law gain for UE and node-to-node links in dB:
/// intercept - slope * log10(d / 1 m).
inline double pathloss_db(double distance_m, double intercept_db, double slope_db_decade) {
  if (!(distance_m > 0.0)) throw GeometryError("pathloss_db: non-positive distance");
  return intercept_db - slope_db_decade * std::log10(distance_m);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

enum class CsiMode { Perfect, Mmse };

struct ChannelEstimate {
  CVec estimate;
  double error_variance = 0.0;    // per-entry mean squared error
  double expected_norm_sq = 0.0;  // analytic E[||estimate||^2]
};

/// Per-antenna linear MMSE estimate from an orthogonal pilot of length
/// pilot_len at power pilot_power_w:
///   h_hat = c * (h + w),  c = p*tau*beta / (p*tau*beta + sigma^2),
/// with w the pilot noise scaled to variance sigma^2/(p*tau) per entry.
/// Perfect-CSI mode returns the true channel unchanged.
inline ChannelEstimate estimate_ue_channel(const CVec& true_channel, double lsf,
                                           double pilot_power_w, int pilot_len,
                                           int n_ues, double noise_variance_w,
                                           CsiMode mode, Rng& rng) {
  if (pilot_len < n_ues)
    throw DomainError("pilot length shorter than the UE count: pilot contamination unsupported");
  ChannelEstimate ce;
  const auto n_a = static_cast<double>(true_channel.size());
  if (mode == CsiMode::Perfect) {
    ce.estimate = true_channel;
    ce.error_variance = 0.0;
    ce.expected_norm_sq = n_a * lsf;
    return ce;
  }
  const double ptau = pilot_power_w * static_cast<double>(pilot_len);
  const double c = ptau * lsf / (ptau * lsf + noise_variance_w);
  const double noise_scale = std::sqrt(noise_variance_w / ptau);
  ce.estimate.resize(true_channel.size());
  for (std::size_t i = 0; i < true_channel.size(); ++i)
    ce.estimate[i] = c * (true_channel[i] + noise_scale * rng.cnormal());
  ce.error_variance = lsf - lsf * lsf * ptau / (ptau * lsf + noise_variance_w);
  ce.expected_norm_sq = n_a * c * lsf;
  return ce;
}

}  // namespace isac
