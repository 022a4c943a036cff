#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace v2x {

// Physical and protocol parameters of the simulated network. Defaults are the
// urban-case values (simulation area halved in both dimensions).
struct SimConfig {
  int num_v2i = 4;        // M, also the number of sub-bands
  int num_v2v = 4;        // K
  int num_vehicles = 8;

  double carrier_ghz = 2.0;
  double total_bandwidth_hz = 4e6;

  double bs_height_m = 25.0;
  double vehicle_height_m = 1.5;
  double bs_antenna_gain_dbi = 8.0;
  double vehicle_antenna_gain_dbi = 3.0;
  double bs_noise_figure_db = 5.0;
  double vehicle_noise_figure_db = 9.0;

  double v2i_power_dbm = 23.0;
  std::vector<double> v2v_power_levels_dbm{23.0, 10.0, 5.0, -100.0};
  double noise_dbm = -114.0;

  int time_budget_ms = 100;
  int step_ms = 1;
  int payload_bytes = 2 * 1060;

  double v2i_shadow_std_db = 8.0;
  double v2v_shadow_std_db = 3.0;
  double v2i_decorrelation_m = 50.0;
  double v2v_decorrelation_m = 10.0;

  // Manhattan grid: blocks_x * blocks_y blocks tiling the area, one two-way
  // road through the middle of each block row/column.
  double area_width_m = 1299.0 / 2.0;
  double area_height_m = 750.0 / 2.0;
  int blocks_x = 3;
  int blocks_y = 3;
  double lane_width_m = 3.5;
  int lanes_per_direction = 2;

  double speed_kmh = 36.0;
  double large_scale_interval_s = 0.1;

  // End an episode once every payload is delivered instead of at T.
  bool early_exit = false;

  double subband_bandwidth_hz() const { return total_bandwidth_hz / num_v2i; }
  double speed_mps() const { return speed_kmh / 3.6; }
  double step_s() const { return step_ms * 1e-3; }
  int steps_per_episode() const { return time_budget_ms / step_ms; }
  int num_power_levels() const { return static_cast<int>(v2v_power_levels_dbm.size()); }
  int num_actions() const { return num_v2i * num_power_levels(); }
  int observation_size() const { return num_v2i * (num_v2v + 3) + 4; }
  // Index of the lowest power level (the effectively-silent action).
  int silent_power_index() const;

  // Throws ConfigError naming the config key that violates a constraint.
  void validate() const;

  bool operator==(const SimConfig&) const = default;
};

// Per-step reward R = lambda_c * sum_m C^c_m + lambda_d * sum_k L_k, where
// L_k is the V2V rate until delivery and beta afterwards.
struct RewardParams {
  double lambda_c = 0.1;
  double lambda_d = 0.9;
  double beta = 1.0;

  void validate() const;
  bool operator==(const RewardParams&) const = default;
};

// How RewardParams are derived when not given explicitly: weights applied to
// the random-policy-normalized reward terms, and beta as a multiple of the
// largest V2V rate seen during calibration.
struct RewardSettings {
  double v2i_weight = 0.1;
  double v2v_weight = 0.9;
  double beta_scale = 1.5;
  int calibration_steps = 1000;
  std::optional<double> lambda_c;
  std::optional<double> lambda_d;
  std::optional<double> beta;

  void validate() const;
  bool operator==(const RewardSettings&) const = default;
};

struct TrainConfig {
  int total_episodes = 3000;
  int anneal_episodes = 2400;
  double epsilon_final = 0.02;
  double gamma = 1.0;
  int target_sync_period = 4;
  int large_scale_refresh_period = 20;
  int batch_size = 32;
  int replay_capacity = 100000;
  int minibatches_per_episode = 10;
  double learning_rate = 1e-3;
  double rmsprop_decay = 0.9;
  double rmsprop_epsilon = 1e-8;
  std::vector<int> hidden_layers{500, 250, 120};
  int payload_bytes = 2 * 1060;
  // Multiplies the rewards stored for learning. With gamma = 1 the Q targets
  // are whole-episode returns; 0.01 keeps them near per-step magnitudes for
  // 100-step episodes. The greedy policy is unchanged by the scale, the
  // optimizer's conditioning is not. Logged returns are never scaled.
  double reward_scale = 0.01;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

}  // namespace v2x
