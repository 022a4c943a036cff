#pragma once

#include <vector>

#include "v2x/config.hpp"
#include "v2x/rng.hpp"
#include "v2x/topology.hpp"

namespace v2x {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }

// WINNER+ B1 LOS constants. Effective antenna heights are h - 1 m.
namespace winner_b1 {
inline constexpr double kNearSlope = 22.7;
inline constexpr double kNearIntercept = 41.0;
inline constexpr double kNearFreqCoeff = 20.0;
inline constexpr double kFarSlope = 40.0;
inline constexpr double kFarIntercept = 9.45;
inline constexpr double kFarHeightCoeff = 17.3;
inline constexpr double kFarFreqCoeff = 2.7;
inline constexpr double kMinDistanceM = 3.0;
inline constexpr double kSpeedOfLight = 3e8;
}  // namespace winner_b1

// 128.1 + 37.6 log10(d), d in km. Throws std::domain_error for d <= 0.
double pathloss_v2i_db(double d_km);

// WINNER+ B1 LOS dual-slope path loss, distance clamped to >= 3 m.
double pathloss_v2v_db(double d_m, double carrier_ghz, double tx_height_m = 1.5,
                       double rx_height_m = 1.5);

double v2v_breakpoint_m(double carrier_ghz, double tx_height_m = 1.5, double rx_height_m = 1.5);

// First-order autoregressive log-normal shadowing update:
// rho * prev + sqrt(1 - rho^2) * N(0, std^2), rho = exp(-delta_d / decorr).
double update_shadowing(double prev_db, double delta_d_m, double std_db, double decorr_m, Rng& rng);

// Rayleigh power gain, Exp(1).
double sample_fast_fading(Rng& rng);

// 10^((tx_gain + rx_gain - pl - shadow) / 10) * h
double compose_gain(double pl_db, double shadow_db, double tx_gain_db, double rx_gain_db,
                    double h_linear);

// Path loss and shadowing per vehicle-to-BS path and per unordered vehicle
// pair. Frequency independent.
struct Propagation {
  int num_vehicles = 0;
  std::vector<double> bs_pathloss_db;     // [v]
  std::vector<double> bs_shadow_db;       // [v]
  std::vector<double> pair_pathloss_db;   // [v * n + u], symmetric, diagonal unused
  std::vector<double> pair_shadow_db;     // [v * n + u], symmetric

  double pair_pl(int v, int u) const { return pair_pathloss_db[static_cast<std::size_t>(v * num_vehicles + u)]; }
  double pair_shadow(int v, int u) const { return pair_shadow_db[static_cast<std::size_t>(v * num_vehicles + u)]; }

  bool operator==(const Propagation&) const = default;
};

// Path loss for the current positions plus fresh independent shadowing.
Propagation initial_propagation(const TopologyState& topo, const SimConfig& cfg, Rng& rng);

// Path loss for `next` and shadowing evolved by the distance each endpoint
// moved between `prev` and `next`.
Propagation update_propagation(const Propagation& prop, const TopologyState& prev,
                               const TopologyState& next, const SimConfig& cfg, Rng& rng);

}  // namespace v2x

namespace v2x {

// Per-link values over the five channel families of a network with M V2I
// and K V2V links. Frequency independent.
struct LinkFamilies {
  std::vector<double> v2v_signal;  // [k]: V2V transmitter k -> receiver k
  std::vector<double> v2v_cross;   // [j * K + k]: V2V transmitter j -> receiver k
  std::vector<double> v2v_to_bs;   // [k]: V2V transmitter k -> BS
  std::vector<double> v2i_to_bs;   // [m]: V2I transmitter m -> BS
  std::vector<double> v2i_to_v2v;  // [m * K + k]: V2I transmitter m -> V2V receiver k
  bool operator==(const LinkFamilies&) const = default;
};

// alpha_db is the total large-scale gain in dB (antenna gains minus path loss
// and shadowing); shadow_db is the shadowing part of each entry.
struct LargeScaleState {
  LinkFamilies alpha_db;
  LinkFamilies shadow_db;
  bool operator==(const LargeScaleState&) const = default;
};

LargeScaleState link_large_scale(const Propagation& prop, const TopologyState& topo,
                                 const SimConfig& cfg);

// Small-scale power gains, independent per sub-band. V2I families are only
// kept on their own sub-band.
struct FastFadingState {
  int num_subbands = 0;
  std::vector<double> v2v_signal;  // [k * M + m]
  std::vector<double> v2v_cross;   // [(j * K + k) * M + m]
  std::vector<double> v2v_to_bs;   // [k * M + m]
  std::vector<double> v2i_to_bs;   // [m]
  std::vector<double> v2i_to_v2v;  // [m * K + k]
  bool operator==(const FastFadingState&) const = default;
};

// Always consumes the same number of draws for a given (M, K).
FastFadingState draw_fast_fading(int num_v2i, int num_v2v, Rng& rng);

}  // namespace v2x
