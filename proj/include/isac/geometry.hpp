#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac {

struct Position3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double distance(const Position3D& a, const Position3D& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Uniform linear array along a horizontal axis. Spacing is in wavelengths.
enum class ArrayAxis { X, Y };

struct ArrayConfig {
  int num_elements = 1;
  double spacing_wavelengths = 0.5;
  ArrayAxis axis = ArrayAxis::Y;
};

inline void validate(const ArrayConfig& a) {
  if (a.num_elements < 1) throw ConfigError("array num_elements must be >= 1");
  if (!(a.spacing_wavelengths > 0.0))
    throw ConfigError("array spacing must be > 0 wavelengths");
}

struct RectZone {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
  bool contains(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
};

/// Grid dimensions used for both MC cells and CF sensing zones:
/// 1 -> whole area, 2 -> two vertical halves, perfect square -> sqrt x sqrt.
inline std::pair<int, int> tiling_dims(int count) {
  if (count == 1) return {1, 1};
  if (count == 2) return {2, 1};
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(count))));
  if (root * root == count) return {root, root};
  throw ConfigError("unsupported cell/zone count " + std::to_string(count) +
                    " (expected 1, 2, or a perfect square)");
}

inline std::vector<RectZone> tile_area(double area_m, int count) {
  const auto [nx, ny] = tiling_dims(count);
  const double wx = area_m / nx;
  const double wy = area_m / ny;
  std::vector<RectZone> zones;
  zones.reserve(static_cast<std::size_t>(count));
  for (int ix = 0; ix < nx; ++ix)
    for (int iy = 0; iy < ny; ++iy)
      zones.push_back({ix * wx, iy * wy, (ix + 1) * wx, (iy + 1) * wy});
  return zones;
}

/// Index of the tile containing (x, y); points on a shared boundary resolve
/// to the lower tile index.
inline int tile_index(double area_m, int count, double x, double y) {
  if (x < 0.0 || x > area_m || y < 0.0 || y > area_m)
    throw GeometryError("position outside the service area");
  const auto [nx, ny] = tiling_dims(count);
  const double wx = area_m / nx;
  const double wy = area_m / ny;
  int ix = static_cast<int>(std::floor(x / wx));
  if (ix > 0 && x <= ix * wx) --ix;
  ix = std::min(ix, nx - 1);
  int iy = static_cast<int>(std::floor(y / wy));
  if (iy > 0 && y <= iy * wy) --iy;
  iy = std::min(iy, ny - 1);
  return ix * ny + iy;
}

/// Which access points illuminate/collect for a probed zone: the whole
/// network (default), or only members located inside the zone.
enum class ZoneScope { FullNetwork, ZoneRestricted };

struct CfDeployment {
  std::vector<Position3D> ap_positions;
  ArrayConfig ap_array;
  std::vector<int> tx_set;  // ascending AP indices with the transmit role
  std::vector<int> rx_set;  // ascending AP indices with the receive role
  std::vector<RectZone> zones;
  double per_ap_power_w = 1.0;
  std::vector<std::vector<int>> serving_sets;   // per UE: serving tAP indices
  std::vector<std::vector<int>> zone_tx_sets;   // per zone: illuminating tAPs
  std::vector<std::vector<int>> zone_rx_sets;   // per zone: collecting rAPs
};

struct McDeployment {
  std::vector<Position3D> bs_positions;
  ArrayConfig tx_array;
  ArrayConfig rx_array;
  std::vector<RectZone> cell_bounds;
  double per_bs_power_w = 1.0;
  double area_m = 0.0;
  std::vector<std::vector<int>> ue_assignment;  // per cell: UE indices
};

struct TargetState {
  Position3D position;
  std::array<double, 3> velocity{0.0, 0.0, 0.0};
  double rcs_variance_m2 = 1.0;
};

struct CfLayoutParams {
  int m_cf = 32;
  int m_tx = 24;
  int m_rx = 8;
  ArrayConfig ap_array;
  double area_m = 1000.0;
  double ap_height_m = 10.0;
  double per_ap_power_w = 1.0;
  int sensing_zones = 4;
  ZoneScope zone_scope = ZoneScope::FullNetwork;
};

/// Drops one cell-free layout: AP coordinates uniform over the area at the
/// configured height, transmit/receive roles assigned by uniform selection
/// without replacement. Zone association defaults to full cooperation.
inline CfDeployment drop_cf_deployment(const CfLayoutParams& p, Rng& rng) {
  if (p.m_tx < 1 || p.m_rx < 1)
    throw ConfigError("cell-free layout needs at least one tAP and one rAP");
  if (p.m_tx + p.m_rx != p.m_cf)
    throw ConfigError("m_tx + m_rx must equal m_cf");
  validate(p.ap_array);

  CfDeployment dep;
  dep.ap_array = p.ap_array;
  dep.per_ap_power_w = p.per_ap_power_w;
  dep.ap_positions.reserve(static_cast<std::size_t>(p.m_cf));
  for (int m = 0; m < p.m_cf; ++m) {
    const double x = rng.uniform_range(0.0, p.area_m);
    const double y = rng.uniform_range(0.0, p.area_m);
    dep.ap_positions.push_back({x, y, p.ap_height_m});
  }

  std::vector<int> order(static_cast<std::size_t>(p.m_cf));
  for (int m = 0; m < p.m_cf; ++m) order[static_cast<std::size_t>(m)] = m;
  rng.shuffle(order);
  dep.tx_set.assign(order.begin(), order.begin() + p.m_tx);
  dep.rx_set.assign(order.begin() + p.m_tx, order.end());
  std::sort(dep.tx_set.begin(), dep.tx_set.end());
  std::sort(dep.rx_set.begin(), dep.rx_set.end());

  dep.zones = tile_area(p.area_m, p.sensing_zones);
  dep.zone_tx_sets.assign(dep.zones.size(), dep.tx_set);
  dep.zone_rx_sets.assign(dep.zones.size(), dep.rx_set);
  if (p.zone_scope == ZoneScope::ZoneRestricted) {
    for (std::size_t z = 0; z < dep.zones.size(); ++z) {
      auto inside = [&](int ap) {
        const auto& pos = dep.ap_positions[static_cast<std::size_t>(ap)];
        return dep.zones[z].contains(pos.x, pos.y);
      };
      auto& zt = dep.zone_tx_sets[z];
      auto& zr = dep.zone_rx_sets[z];
      zt.erase(std::remove_if(zt.begin(), zt.end(), [&](int ap) { return !inside(ap); }),
               zt.end());
      zr.erase(std::remove_if(zr.begin(), zr.end(), [&](int ap) { return !inside(ap); }),
               zr.end());
    }
  }
  return dep;
}

struct McLayoutParams {
  int m_mc = 4;
  ArrayConfig tx_array;
  ArrayConfig rx_array;
  double area_m = 1000.0;
  double bs_height_m = 10.0;
  double per_bs_power_w = 8.0;
};

/// Deterministic multi-cell layout: one BS at the centroid of each cell.
inline McDeployment drop_mc_deployment(const McLayoutParams& p) {
  validate(p.tx_array);
  validate(p.rx_array);
  McDeployment dep;
  dep.tx_array = p.tx_array;
  dep.rx_array = p.rx_array;
  dep.per_bs_power_w = p.per_bs_power_w;
  dep.area_m = p.area_m;
  dep.cell_bounds = tile_area(p.area_m, p.m_mc);
  for (const RectZone& c : dep.cell_bounds)
    dep.bs_positions.push_back(
        {0.5 * (c.x0 + c.x1), 0.5 * (c.y0 + c.y1), p.bs_height_m});
  dep.ue_assignment.assign(dep.cell_bounds.size(), {});
  return dep;
}

struct EntityDropParams {
  int k_ues = 16;
  double area_m = 1000.0;
  double ue_height_m = 1.65;
  double target_z_min_m = 20.0;
  double target_z_max_m = 100.0;
  double target_speed_mps = 10.0;
  double rcs_variance_m2 = 10.0;
};

struct EntityDrop {
  std::vector<Position3D> ue_positions;
  TargetState target;
};

/// Drops the UEs and the target: UEs uniform at fixed height, target uniform
/// in the area with uniform altitude in [z_min, z_max] and a horizontal
/// velocity of configured speed in a uniformly random direction.
inline EntityDrop drop_entities(const EntityDropParams& p, Rng& rng) {
  if (p.k_ues < 0) throw ConfigError("k_ues must be >= 0");
  if (!(p.rcs_variance_m2 > 0.0)) throw ConfigError("rcs variance must be > 0");
  if (p.target_z_max_m < p.target_z_min_m)
    throw ConfigError("target altitude range is empty");

  EntityDrop out;
  out.ue_positions.reserve(static_cast<std::size_t>(p.k_ues));
  for (int k = 0; k < p.k_ues; ++k) {
    out.ue_positions.push_back({rng.uniform_range(0.0, p.area_m),
                                rng.uniform_range(0.0, p.area_m), p.ue_height_m});
  }
  out.target.position = {rng.uniform_range(0.0, p.area_m),
                         rng.uniform_range(0.0, p.area_m),
                         rng.uniform_range(p.target_z_min_m, p.target_z_max_m)};
  const double heading = rng.uniform_range(0.0, kTwoPi);
  out.target.velocity = {p.target_speed_mps * std::cos(heading),
                         p.target_speed_mps * std::sin(heading), 0.0};
  out.target.rcs_variance_m2 = p.rcs_variance_m2;
  return out;
}

struct CfSizes {
  int m_cf = 32;
  int na_cf = 4;
  int m_tx = 24;
  int m_rx = 8;
  double p_per_ap_w = 1.0;
};

struct McSizes {
  int m_mc = 4;
  int na_tx = 24;
  int na_rx = 8;
  double p_per_bs_w = 8.0;
};

/// Fairness mapping between the architectures: as many BSs as a cell-free AP
/// has antennas, co-located arrays sized by the tAP/rAP split, and per-BS
/// power chosen so that M_mc * P_mc = M_cf * P_cf exactly.
inline McSizes map_cf_to_fair_mc(const CfSizes& cf) {
  McSizes mc;
  mc.m_mc = cf.na_cf;
  mc.na_tx = cf.m_tx;
  mc.na_rx = cf.m_rx;
  mc.p_per_bs_w =
      static_cast<double>(cf.m_cf) * cf.p_per_ap_w / static_cast<double>(cf.na_cf);
  return mc;
}

/// BS responsible for a position: the cell whose bounds contain (x, y),
/// boundary ties resolving to the lower index.
inline int responsible_bs(const McDeployment& mc, const Position3D& p) {
  return tile_index(mc.area_m, static_cast<int>(mc.cell_bounds.size()), p.x, p.y);
}

inline void assign_ue_cells(McDeployment& mc, const std::vector<Position3D>& ues) {
  for (auto& cell : mc.ue_assignment) cell.clear();
  for (std::size_t k = 0; k < ues.size(); ++k) {
    const int cell = responsible_bs(mc, ues[k]);
    mc.ue_assignment[static_cast<std::size_t>(cell)].push_back(static_cast<int>(k));
  }
}

enum class ServingMode { AllTransmitters, NearestQ };

/// UE-to-tAP association. Canonical cell-free default serves every UE from
/// every tAP; the nearest-Q option keeps the Q closest tAPs per UE.
inline void assign_serving_sets(CfDeployment& dep, const std::vector<Position3D>& ues,
                                ServingMode mode, int q = 0) {
  dep.serving_sets.assign(ues.size(), {});
  for (std::size_t k = 0; k < ues.size(); ++k) {
    if (mode == ServingMode::AllTransmitters) {
      dep.serving_sets[k] = dep.tx_set;
      continue;
    }
    std::vector<std::pair<double, int>> by_dist;
    by_dist.reserve(dep.tx_set.size());
    for (int m : dep.tx_set)
      by_dist.emplace_back(distance(dep.ap_positions[static_cast<std::size_t>(m)], ues[k]), m);
    std::sort(by_dist.begin(), by_dist.end());
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(std::max(q, 1)),
                                            by_dist.size());
    for (std::size_t i = 0; i < take; ++i) dep.serving_sets[k].push_back(by_dist[i].second);
    std::sort(dep.serving_sets[k].begin(), dep.serving_sets[k].end());
  }
}

}  // namespace isac
