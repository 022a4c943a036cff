#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/env.hpp"
#include "v2x/evaluation.hpp"
#include "v2x/nn.hpp"
#include "v2x/rng.hpp"

namespace v2x {

// Linear anneal from 1 to epsilon_final over anneal_episodes, then constant.
double epsilon_schedule(int episode, const TrainConfig& cfg);

// Index of the largest value; ties go to the lowest index.
int argmax(std::span<const double> values);

// Epsilon-greedy choice over q_values.
int select_action(std::span<const double> q_values, double epsilon, Rng& rng);

// Epsilon-greedy choice where the greedy branch is computed only if needed.
// Consumes exactly one uniform draw, plus one index draw when exploring.
template <class GreedyFn>
int select_action_lazy(int num_actions, double epsilon, Rng& rng, GreedyFn&& greedy) {
  if (uniform01(rng) < epsilon) return static_cast<int>(uniform_index(rng, static_cast<std::size_t>(num_actions)));
  return greedy();
}

// r + gamma * max_a' Q_target(z', a'), with no bootstrap on terminal samples.
std::vector<double> td_targets(std::span<const Experience* const> batch, const QNetwork& target, double gamma);

// One learner: online and target network, optimizer, replay memory and the
// random streams it owns.
struct Agent {
  QNetwork online;
  QNetwork target;
  RmsProp optimizer;
  ReplayMemory memory;
  Rng replay_rng;
};

Agent make_agent(const std::vector<int>& dims, const TrainConfig& cfg, Rng& init_rng, Rng replay_rng);

// target := online
void sync_target(Agent& agent);

// `count` minibatch updates; skipped while the memory holds fewer than a batch.
void learn_from_replay(Agent& agent, const TrainConfig& cfg, int count);

// Layer sizes: observation, hidden layers, 4M actions.
std::vector<int> network_dims(int observation_size, const SimConfig& sim, const TrainConfig& train);

struct EpisodeRecord {
  int episode = 0;
  double epsilon = 0.0;
  double episode_return = 0.0;
  double mean_v2i_capacity = 0.0;  // mean over steps of the V2I sum, bits/s
  double delivery_rate_so_far = 0.0;
  bool operator==(const EpisodeRecord&) const = default;
};

struct AgentSet {
  std::vector<Agent> agents;
  Fingerprint deployment;  // fingerprint of the very last training step
  RewardParams reward;
};

struct TrainResult {
  AgentSet agents;
  std::vector<EpisodeRecord> log;
};

// Rewards derived from a random-policy run on the initial channel conditions
// of the seed's training environment, unless set explicitly.
RewardParams calibrate_reward(const SimConfig& sim, const RewardSettings& settings, std::uint64_t seed);

TrainResult train_marl(const SimConfig& sim, const TrainConfig& train, const RewardParams& reward,
                       std::uint64_t seed);

// Greedy distributed execution of trained agents.
class MarlPolicy : public Policy {
 public:
  explicit MarlPolicy(const AgentSet& agents) : agents_(&agents) {}
  std::string name() const override { return "marl"; }
  JointAction act(const Environment& env) override;

 private:
  const AgentSet* agents_;
};

PayloadMetrics evaluate(const AgentSet& agents, const SimConfig& sim, int episodes, int payload_bytes,
                        std::uint64_t seed);

// Cumulative fraction of delivered links, updated episode by episode.
class DeliveryTally {
 public:
  void add(const std::vector<std::uint8_t>& delivered);
  double rate() const { return total_ ? static_cast<double>(ok_) / static_cast<double>(total_) : 0.0; }

 private:
  std::size_t ok_ = 0;
  std::size_t total_ = 0;
};

}  // namespace v2x
