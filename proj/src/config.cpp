#include "v2x/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "v2x/errors.hpp"

namespace v2x {

namespace {

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw ConfigError(std::string(key) + ": " + what);
}

}  // namespace

int SimConfig::silent_power_index() const {
  auto it = std::min_element(v2v_power_levels_dbm.begin(), v2v_power_levels_dbm.end());
  return static_cast<int>(it - v2v_power_levels_dbm.begin());
}

void SimConfig::validate() const {
  require(num_v2i >= 1, "m_links", "must be >= 1");
  require(num_v2v >= 1, "k_links", "must be >= 1");
  require(num_vehicles >= std::max(num_v2i, num_v2v + 1), "num_vehicles",
          "must be >= max(m_links, k_links + 1)");
  require(carrier_ghz > 0, "carrier_ghz", "must be > 0");
  require(total_bandwidth_hz > 0, "bandwidth_hz", "must be > 0");
  require(bs_height_m > 1.0, "bs_height_m", "must be > 1 m");
  require(vehicle_height_m > 1.0, "vehicle_height_m", "must be > 1 m");
  require(!v2v_power_levels_dbm.empty(), "v2v_power_levels_dbm", "must be non-empty");
  require(*std::min_element(v2v_power_levels_dbm.begin(), v2v_power_levels_dbm.end()) <= -100.0,
          "v2v_power_levels_dbm", "must contain the -100 dBm (zero power) level");
  for (double p : v2v_power_levels_dbm)
    require(std::isfinite(p), "v2v_power_levels_dbm", "levels must be finite");
  require(time_budget_ms > 0, "time_budget_ms", "must be > 0");
  require(step_ms > 0, "step_ms", "must be > 0");
  require(time_budget_ms % step_ms == 0, "time_budget_ms", "must be divisible by step_ms");
  require(payload_bytes > 0, "payload_bytes", "must be > 0");
  require(v2i_shadow_std_db >= 0, "v2i_shadow_std_db", "must be >= 0");
  require(v2v_shadow_std_db >= 0, "v2v_shadow_std_db", "must be >= 0");
  require(v2i_decorrelation_m > 0, "v2i_decorrelation_m", "must be > 0");
  require(v2v_decorrelation_m > 0, "v2v_decorrelation_m", "must be > 0");
  require(blocks_x >= 1, "blocks_x", "must be >= 1");
  require(blocks_y >= 1, "blocks_y", "must be >= 1");
  require(lane_width_m > 0, "lane_width_m", "must be > 0");
  require(lanes_per_direction >= 1, "lanes_per_direction", "must be >= 1");
  const double half_road = lane_width_m * lanes_per_direction;
  require(area_width_m / blocks_x > 2 * half_road, "area_width_m",
          "blocks must be wider than a road");
  require(area_height_m / blocks_y > 2 * half_road, "area_height_m",
          "blocks must be taller than a road");
  require(speed_kmh >= 0, "speed_kmh", "must be >= 0");
  require(large_scale_interval_s > 0, "large_scale_interval_s", "must be > 0");
}

void RewardParams::validate() const {
  require(lambda_c > 0, "lambda_c", "must be > 0");
  require(lambda_d > 0, "lambda_d", "must be > 0");
  require(beta > 0, "beta", "must be > 0");
}

void RewardSettings::validate() const {
  require(v2i_weight > 0, "v2i_weight", "must be > 0");
  require(v2v_weight > 0, "v2v_weight", "must be > 0");
  require(beta_scale > 0, "beta_scale", "must be > 0");
  require(calibration_steps >= 1, "calibration_steps", "must be >= 1");
  if (lambda_c) require(*lambda_c > 0, "lambda_c", "must be > 0");
  if (lambda_d) require(*lambda_d > 0, "lambda_d", "must be > 0");
  if (beta) require(*beta > 0, "beta", "must be > 0");
}

void TrainConfig::validate() const {
  require(total_episodes >= 1, "total_episodes", "must be >= 1");
  require(anneal_episodes >= 1, "anneal_episodes", "must be >= 1");
  require(anneal_episodes <= total_episodes, "anneal_episodes", "must be <= total_episodes");
  require(epsilon_final >= 0 && epsilon_final <= 1, "epsilon_final", "must be in [0, 1]");
  require(gamma >= 0 && gamma <= 1, "gamma", "must be in [0, 1]");
  require(target_sync_period >= 1, "target_sync_period", "must be >= 1");
  require(large_scale_refresh_period >= 1, "large_scale_refresh_period", "must be >= 1");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(replay_capacity >= batch_size, "replay_capacity", "must be >= batch_size");
  require(minibatches_per_episode >= 0, "minibatches_per_episode", "must be >= 0");
  require(learning_rate >= 0, "learning_rate", "must be >= 0");
  require(rmsprop_decay >= 0 && rmsprop_decay < 1, "rmsprop_decay", "must be in [0, 1)");
  require(rmsprop_epsilon > 0, "rmsprop_epsilon", "must be > 0");
  for (int h : hidden_layers) require(h >= 1, "hidden_layers", "widths must be >= 1");
  require(payload_bytes > 0, "train_payload_bytes", "must be > 0");
  require(reward_scale > 0 && std::isfinite(reward_scale), "reward_scale", "must be finite and > 0");
}

}  // namespace v2x
