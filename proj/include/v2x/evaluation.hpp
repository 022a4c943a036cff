#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/env.hpp"

namespace v2x {

// A joint decision rule for all V2V links.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode(const Environment& /*env*/) {}
  virtual JointAction act(const Environment& env) = 0;
};

struct TraceRow {
  int episode = 0;
  int step = 0;
  int link = 0;
  Action action;
  double power_dbm = 0.0;  // meaningless when action.is_off()
  double v2v_rate_bps = 0.0;
  double remaining_bits = 0.0;
  double v2i_sum_capacity_bps = 0.0;
  double reward = 0.0;
};

struct EvaluationOptions {
  int episodes = 200;
  int payload_bytes = 2 * 1060;
  std::uint64_t seed = 1;
  RewardParams reward;
  bool record_trace = false;
};

struct EvaluationResult {
  int payload_bytes = 0;
  int num_links = 0;
  std::vector<double> episode_v2i_mean;    // per-episode mean of the per-step V2I sum
  std::vector<double> episode_return;
  std::vector<DeliveryResult> delivery;    // per episode
  std::vector<double> step_v2i_sum;        // every evaluated step, in order
  std::vector<double> step_v2i_upper;      // no-V2V V2I sum on the same channel draw
  std::vector<TraceRow> trace;

  int episodes() const { return static_cast<int>(episode_v2i_mean.size()); }
  double v2i_mean() const;
  double delivery_probability() const;
};

// Runs `policy` greedily over fresh evaluation episodes. The topology is the
// seed's drop; mobility, shadowing and fading come from the seed's
// evaluation streams, so every policy sees the same channel draws.
EvaluationResult run_evaluation(Policy& policy, const SimConfig& cfg, const EvaluationOptions& opts);

// Aggregates for one (scheme, payload) cell of the results table.
struct PayloadMetrics {
  std::string scheme;
  int payload_bytes = 0;
  int episodes = 0;
  double v2i_sum_capacity_mean = 0.0;  // bits/s
  double v2i_ci95 = 0.0;               // normal-approximation half-width
  double delivery_probability = 0.0;
  double delivery_ci95 = 0.0;          // Wilson half-width
  bool operator==(const PayloadMetrics&) const = default;
};

PayloadMetrics summarize(const std::string& scheme, const EvaluationResult& result);

// Half-width of the 95% Wilson score interval for `successes` out of `n`.
double wilson_half_width(std::size_t successes, std::size_t n);

}  // namespace v2x
