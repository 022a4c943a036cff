#include "v2x/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "v2x/errors.hpp"

namespace v2x {

double pathloss_v2i_db(double d_km) {
  if (!(d_km > 0.0)) throw std::domain_error("pathloss_v2i_db: distance must be > 0");
  return 128.1 + 37.6 * std::log10(d_km);
}

double v2v_breakpoint_m(double carrier_ghz, double tx_height_m, double rx_height_m) {
  return 4.0 * (tx_height_m - 1.0) * (rx_height_m - 1.0) * carrier_ghz * 1e9 /
         winner_b1::kSpeedOfLight;
}

double pathloss_v2v_db(double d_m, double carrier_ghz, double tx_height_m, double rx_height_m) {
  using namespace winner_b1;
  const double d = std::max(d_m, kMinDistanceM);
  if (d < v2v_breakpoint_m(carrier_ghz, tx_height_m, rx_height_m))
    return kNearSlope * std::log10(d) + kNearIntercept + kNearFreqCoeff * std::log10(carrier_ghz / 5.0);
  return kFarSlope * std::log10(d) + kFarIntercept -
         kFarHeightCoeff * std::log10(tx_height_m - 1.0) -
         kFarHeightCoeff * std::log10(rx_height_m - 1.0) +
         kFarFreqCoeff * std::log10(carrier_ghz / 5.0);
}

double update_shadowing(double prev_db, double delta_d_m, double std_db, double decorr_m, Rng& rng) {
  if (delta_d_m == 0.0) return prev_db;
  const double rho = std::exp(-delta_d_m / decorr_m);
  return rho * prev_db + std::sqrt(1.0 - rho * rho) * std_db * standard_normal(rng);
}

double sample_fast_fading(Rng& rng) { return unit_exponential(rng); }

double compose_gain(double pl_db, double shadow_db, double tx_gain_db, double rx_gain_db,
                    double h_linear) {
  return db_to_linear(tx_gain_db + rx_gain_db - pl_db - shadow_db) * h_linear;
}

namespace {

double bs_distance_km(const TopologyState& topo, const SimConfig& cfg, int v) {
  const double horizontal = pair_distance(topo, Node::vehicle(v), Node::base_station());
  const double dh = cfg.bs_height_m - cfg.vehicle_height_m;
  return std::sqrt(horizontal * horizontal + dh * dh) / 1000.0;
}

void fill_pathloss(Propagation& p, const TopologyState& topo, const SimConfig& cfg) {
  const int n = p.num_vehicles;
  for (int v = 0; v < n; ++v) {
    p.bs_pathloss_db[static_cast<std::size_t>(v)] = pathloss_v2i_db(bs_distance_km(topo, cfg, v));
    for (int u = 0; u < n; ++u) {
      if (u == v) continue;
      p.pair_pathloss_db[static_cast<std::size_t>(v * n + u)] = pathloss_v2v_db(
          pair_distance(topo, Node::vehicle(v), Node::vehicle(u)), cfg.carrier_ghz,
          cfg.vehicle_height_m, cfg.vehicle_height_m);
    }
  }
}

}  // namespace

Propagation initial_propagation(const TopologyState& topo, const SimConfig& cfg, Rng& rng) {
  Propagation p;
  const int n = static_cast<int>(topo.vehicles.size());
  p.num_vehicles = n;
  p.bs_pathloss_db.assign(static_cast<std::size_t>(n), 0.0);
  p.bs_shadow_db.assign(static_cast<std::size_t>(n), 0.0);
  p.pair_pathloss_db.assign(static_cast<std::size_t>(n * n), 0.0);
  p.pair_shadow_db.assign(static_cast<std::size_t>(n * n), 0.0);
  fill_pathloss(p, topo, cfg);
  for (int v = 0; v < n; ++v)
    p.bs_shadow_db[static_cast<std::size_t>(v)] = cfg.v2i_shadow_std_db * standard_normal(rng);
  for (int v = 0; v < n; ++v)
    for (int u = v + 1; u < n; ++u) {
      const double s = cfg.v2v_shadow_std_db * standard_normal(rng);
      p.pair_shadow_db[static_cast<std::size_t>(v * n + u)] = s;
      p.pair_shadow_db[static_cast<std::size_t>(u * n + v)] = s;
    }
  return p;
}

Propagation update_propagation(const Propagation& prop, const TopologyState& prev,
                               const TopologyState& next, const SimConfig& cfg, Rng& rng) {
  const int n = prop.num_vehicles;
  if (n != static_cast<int>(next.vehicles.size()) || n != static_cast<int>(prev.vehicles.size()))
    throw UsageError("update_propagation: vehicle count changed");
  Propagation p = prop;
  fill_pathloss(p, next, cfg);
  std::vector<double> moved(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const auto i = static_cast<std::size_t>(v);
    moved[i] = (next.vehicles[i].position - prev.vehicles[i].position).norm();
    // A wrap across the border shows up as a huge jump; use the travelled distance.
    moved[i] = std::min(moved[i], next.vehicles[i].speed * cfg.large_scale_interval_s);
  }
  for (int v = 0; v < n; ++v) {
    auto& s = p.bs_shadow_db[static_cast<std::size_t>(v)];
    s = update_shadowing(s, moved[static_cast<std::size_t>(v)], cfg.v2i_shadow_std_db,
                         cfg.v2i_decorrelation_m, rng);
  }
  for (int v = 0; v < n; ++v)
    for (int u = v + 1; u < n; ++u) {
      const double delta = moved[static_cast<std::size_t>(v)] + moved[static_cast<std::size_t>(u)];
      const double s = update_shadowing(p.pair_shadow_db[static_cast<std::size_t>(v * n + u)], delta,
                                        cfg.v2v_shadow_std_db, cfg.v2v_decorrelation_m, rng);
      p.pair_shadow_db[static_cast<std::size_t>(v * n + u)] = s;
      p.pair_shadow_db[static_cast<std::size_t>(u * n + v)] = s;
    }
  return p;
}

}  // namespace v2x

namespace v2x {

LargeScaleState link_large_scale(const Propagation& prop, const TopologyState& topo,
                                 const SimConfig& cfg) {
  const int M = cfg.num_v2i;
  const int K = cfg.num_v2v;
  const double bs_link_gain = cfg.vehicle_antenna_gain_dbi + cfg.bs_antenna_gain_dbi;
  const double v2v_link_gain = 2.0 * cfg.vehicle_antenna_gain_dbi;
  LargeScaleState ls;
  auto& a = ls.alpha_db;
  auto& s = ls.shadow_db;
  a.v2v_signal.resize(K);
  s.v2v_signal.resize(K);
  a.v2v_cross.assign(static_cast<std::size_t>(K * K), 0.0);
  s.v2v_cross.assign(static_cast<std::size_t>(K * K), 0.0);
  a.v2v_to_bs.resize(K);
  s.v2v_to_bs.resize(K);
  a.v2i_to_bs.resize(M);
  s.v2i_to_bs.resize(M);
  a.v2i_to_v2v.resize(static_cast<std::size_t>(M * K));
  s.v2i_to_v2v.resize(static_cast<std::size_t>(M * K));

  // Vehicle-to-vehicle path; a node talking to itself never happens for the
  // signal family but may for cross families (full-duplex self-interference),
  // which is treated as the minimum-distance path.
  auto vv = [&](int from, int to, double* shadow) {
    if (from == to) {
      *shadow = 0.0;
      return v2v_link_gain - pathloss_v2v_db(0.0, cfg.carrier_ghz, cfg.vehicle_height_m,
                                             cfg.vehicle_height_m);
    }
    *shadow = prop.pair_shadow(from, to);
    return v2v_link_gain - prop.pair_pl(from, to) - *shadow;
  };
  auto vb = [&](int v, double* shadow) {
    *shadow = prop.bs_shadow_db[static_cast<std::size_t>(v)];
    return bs_link_gain - prop.bs_pathloss_db[static_cast<std::size_t>(v)] - *shadow;
  };

  for (int k = 0; k < K; ++k) {
    const auto& pk = topo.v2v_pairs[static_cast<std::size_t>(k)];
    a.v2v_signal[k] = vv(pk.tx, pk.rx, &s.v2v_signal[k]);
    a.v2v_to_bs[k] = vb(pk.tx, &s.v2v_to_bs[k]);
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      const auto& pj = topo.v2v_pairs[static_cast<std::size_t>(j)];
      const auto idx = static_cast<std::size_t>(j * K + k);
      a.v2v_cross[idx] = vv(pj.tx, pk.rx, &s.v2v_cross[idx]);
    }
  }
  for (int m = 0; m < M; ++m) {
    const int veh = topo.v2i_vehicles[static_cast<std::size_t>(m)];
    a.v2i_to_bs[m] = vb(veh, &s.v2i_to_bs[m]);
    for (int k = 0; k < K; ++k) {
      const auto idx = static_cast<std::size_t>(m * K + k);
      a.v2i_to_v2v[idx] = vv(veh, topo.v2v_pairs[static_cast<std::size_t>(k)].rx, &s.v2i_to_v2v[idx]);
    }
  }
  return ls;
}

FastFadingState draw_fast_fading(int num_v2i, int num_v2v, Rng& rng) {
  const auto M = static_cast<std::size_t>(num_v2i);
  const auto K = static_cast<std::size_t>(num_v2v);
  FastFadingState f;
  f.num_subbands = num_v2i;
  auto fill = [&](std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (double& x : v) x = sample_fast_fading(rng);
  };
  fill(f.v2v_signal, K * M);
  fill(f.v2v_cross, K * K * M);
  fill(f.v2v_to_bs, K * M);
  fill(f.v2i_to_bs, M);
  fill(f.v2i_to_v2v, M * K);
  return f;
}

}  // namespace v2x
