#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "v2x/channel.hpp"
#include "v2x/config.hpp"
#include "v2x/rng.hpp"
#include "v2x/topology.hpp"

namespace v2x {

// One V2V agent's choice: a sub-band and a power level. `off` means no
// transmission at all (used for delivered links and the no-V2V scheme).
struct Action {
  int subband = -1;
  int power_idx = -1;

  static Action off() { return {}; }
  bool is_off() const { return subband < 0; }
  int flat(int num_power_levels) const { return subband * num_power_levels + power_idx; }
  static Action from_flat(int flat, int num_power_levels) {
    return {flat / num_power_levels, flat % num_power_levels};
  }
  bool operator==(const Action&) const = default;
};

using JointAction = std::vector<Action>;

// Composed linear channel gains for one coherence interval, laid out like
// FastFadingState.
struct LinkGains {
  int num_v2i = 0;
  int num_v2v = 0;
  std::vector<double> v2v_signal;  // g_k[m]            [k * M + m]
  std::vector<double> v2v_cross;   // g_{j,k}[m]        [(j * K + k) * M + m]
  std::vector<double> v2v_to_bs;   // g_{k,B}[m]        [k * M + m]
  std::vector<double> v2i_to_bs;   // g^_{m,B}[m]       [m]
  std::vector<double> v2i_to_v2v;  // g^_{m,k}[m]       [m * K + k]

  double signal(int k, int m) const { return v2v_signal[static_cast<std::size_t>(k * num_v2i + m)]; }
  double cross(int j, int k, int m) const {
    return v2v_cross[static_cast<std::size_t>((j * num_v2v + k) * num_v2i + m)];
  }
  double to_bs(int k, int m) const { return v2v_to_bs[static_cast<std::size_t>(k * num_v2i + m)]; }
  double v2i_bs(int m) const { return v2i_to_bs[static_cast<std::size_t>(m)]; }
  double v2i_v2v(int m, int k) const { return v2i_to_v2v[static_cast<std::size_t>(m * num_v2v + k)]; }
};

LinkGains compose_link_gains(const LargeScaleState& ls, const FastFadingState& ff, int num_v2i,
                             int num_v2v);

// Noise power at the receiver including its noise figure, in mW.
double bs_noise_mw(const SimConfig& cfg);
double vehicle_noise_mw(const SimConfig& cfg);

// Transmit power of a V2V action in mW (0 for `off`).
double v2v_power_mw(const SimConfig& cfg, const Action& a);

double compute_capacity(double sinr, double bandwidth_hz);

// SINR of V2I link m on its own sub-band under the joint action.
double compute_sinr_v2i(const SimConfig& cfg, const LinkGains& g, std::span<const Action> joint, int m);

// Interference power I_k[m] at V2V receiver k on sub-band m, excluding link
// k's own transmitter.
double compute_interference_v2v(const SimConfig& cfg, const LinkGains& g,
                                std::span<const Action> joint, int k, int m);

// SINR of V2V link k on the sub-band it selected; 0 when it is off.
double compute_sinr_v2v(const SimConfig& cfg, const LinkGains& g, std::span<const Action> joint, int k);

struct RadioOutcome {
  std::vector<double> v2i_sinr;         // [m]
  std::vector<double> v2i_capacity;     // [m], bits/s
  std::vector<double> v2v_sinr;         // [k]
  std::vector<double> v2v_rate;         // [k], bits/s on the selected sub-band
  std::vector<double> interference_mw;  // [k * M + m]
};

RadioOutcome evaluate_radio(const SimConfig& cfg, const LinkGains& g, std::span<const Action> joint);

struct EnvState {
  LargeScaleState large_scale;
  FastFadingState fast_fading;
  double payload_bits = 0.0;
  std::vector<double> remaining_bits;  // B_k
  std::vector<double> remaining_ms;    // T_k
  int step_t = 0;
  std::vector<std::uint8_t> delivered;
  // I_k[m] as measured during the previous step, [k * M + m].
  std::vector<double> measured_interference_mw;
  bool done = false;
};

struct StepOutcome {
  double reward = 0.0;
  std::vector<double> v2i_sinr;
  std::vector<double> v2i_capacity;
  std::vector<double> v2v_sinr;
  std::vector<double> v2v_rate;
  std::vector<double> v2v_reward;      // L_k
  std::vector<double> delivered_bits;  // bits removed from B_k this step
  std::vector<double> interference_mw;
  bool done = false;

  double v2i_sum() const;
};

// Training-progress fingerprint appended to every observation.
struct Fingerprint {
  double episode_fraction = 0.0;  // e / total episodes
  double epsilon = 0.0;
};

using Observation = std::vector<double>;

// Normalization of observation entries.
inline constexpr double kObservationDbScale = 120.0;

// Builds the observation of agent k: g_k[m], g_{j,k}[m] for j != k, g_{k,B}[m],
// g^_{m,k}[m], I_k[m] (all in dB / 120), B_k / 8B, T_k / T, e, epsilon.
Observation build_observation(const SimConfig& cfg, const EnvState& state, const LinkGains& gains,
                              int k, std::span<const double> interference_mw, Fingerprint fp);

struct EnvStreams {
  Rng mobility;
  Rng shadowing;
  Rng fading;
};

EnvStreams training_streams(const SeedTree& seeds);
EnvStreams evaluation_streams(const SeedTree& seeds);
Rng topology_stream(const SeedTree& seeds);

// The episodic environment: topology, channels, payload bookkeeping and the
// shared reward. Single-writer.
class Environment {
 public:
  Environment(SimConfig cfg, Rng topology_rng, EnvStreams streams);

  const SimConfig& config() const { return cfg_; }
  const TopologyState& topology() const { return topo_; }
  const EnvState& state() const { return state_; }
  // Replaces the state wholesale, e.g. to freeze a channel draw.
  void set_state(EnvState state);

  // Starts an episode with a full payload. With refresh_large_scale the
  // vehicles move by one large-scale interval and path loss/shadowing are
  // updated first. Fast fading is always redrawn.
  void reset(bool refresh_large_scale, int payload_bytes);
  void reset(bool refresh_large_scale) { reset(refresh_large_scale, cfg_.payload_bytes); }

  // Applies the joint action for one coherence interval. Throws UsageError
  // when the episode is already done.
  StepOutcome step(std::span<const Action> joint, const RewardParams& reward);

  Observation observe(int k, Fingerprint fp) const;
  LinkGains gains() const;
  bool done() const { return state_.done; }
  int num_agents() const { return cfg_.num_v2v; }

 private:
  SimConfig cfg_;
  TopologyState topo_;
  Propagation prop_;
  EnvStreams streams_;
  EnvState state_;
};

// Per-step V2V rates of one episode, used to judge payload delivery.
struct EpisodeLog {
  double payload_bits = 0.0;
  double step_s = 1e-3;
  std::vector<std::vector<double>> v2v_rates;  // [t][k], bits/s
};

struct DeliveryResult {
  std::vector<bool> success;  // per link
  double rate = 0.0;          // fraction of links that delivered
};

// Link k succeeds iff its transmitted bits reach the payload before T ends.
DeliveryResult delivery_success(const EpisodeLog& log);

// Fraction of successful links over a set of episodes.
double aggregate_delivery_rate(std::span<const DeliveryResult> results);

}  // namespace v2x
