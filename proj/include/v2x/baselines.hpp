#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "v2x/config.hpp"
#include "v2x/env.hpp"
#include "v2x/evaluation.hpp"
#include "v2x/nn.hpp"
#include "v2x/trainer.hpp"

namespace v2x {

enum class Scheme { marl, sarl, random, max_v2v, no_v2v };

std::string scheme_name(Scheme s);
// Accepts the CLI spellings marl, sarl, random, maxv2v, nov2v.
std::optional<Scheme> parse_scheme(std::string_view name);

// Uniform flat action in [0, 4M) per agent, drawn in agent order.
JointAction random_policy(const SimConfig& cfg, Rng& rng);

inline constexpr std::uint64_t kDefaultJointSpaceCap = 10'000'000;

// (4M)^K, saturating at UINT64_MAX.
std::uint64_t joint_space_size(const SimConfig& cfg);

// Joint action maximizing the sum V2V rate on the given channel draw, over
// links that are still transmitting (delivered links are returned off).
// Ties go to the lowest flat joint index, agent 0 being the most significant
// digit. Throws CapacityError when (4M)^K exceeds `cap`.
JointAction max_v2v_exhaustive(const SimConfig& cfg, const LinkGains& gains,
                               std::span<const std::uint8_t> delivered,
                               std::uint64_t cap = kDefaultJointSpaceCap);
JointAction max_v2v_exhaustive(const Environment& env, std::uint64_t cap = kDefaultJointSpaceCap);

// Sum of the V2V rates the environment would compute for `joint`.
double sum_v2v_rate(const SimConfig& cfg, const LinkGains& gains, std::span<const Action> joint);

// Per-sub-band V2I capacities with every V2V link silent.
std::vector<double> no_v2v_upper_bound(const SimConfig& cfg, const LinkGains& gains);
double no_v2v_sum_capacity(const SimConfig& cfg, const LinkGains& gains);

class RandomPolicy : public Policy {
 public:
  explicit RandomPolicy(Rng rng) : rng_(std::move(rng)) {}
  std::string name() const override { return "random"; }
  JointAction act(const Environment& env) override { return random_policy(env.config(), rng_); }

 private:
  Rng rng_;
};

class MaxV2VPolicy : public Policy {
 public:
  explicit MaxV2VPolicy(std::uint64_t cap = kDefaultJointSpaceCap) : cap_(cap) {}
  std::string name() const override { return "maxv2v"; }
  JointAction act(const Environment& env) override { return max_v2v_exhaustive(env, cap_); }

 private:
  std::uint64_t cap_;
};

class NoV2VPolicy : public Policy {
 public:
  std::string name() const override { return "nov2v"; }
  JointAction act(const Environment& env) override {
    return JointAction(static_cast<std::size_t>(env.num_agents()), Action::off());
  }
};

// Single-agent RL: one shared network; within each step the agents update
// their actions one at a time, others' latest actions held fixed.

// Action every agent holds at the start of an episode.
Action sarl_initial_action(const SimConfig& cfg);

// Observation of agent k for the shared network: the MARL channel and
// payload entries, with interference computed under the currently held joint
// action and no fingerprint. Length M(K+3)+2.
Observation sarl_observation(const Environment& env, int k, std::span<const Action> held);
int sarl_observation_size(const SimConfig& cfg);

// Runs one round of sub-decisions over agents 0..K-1, updating `held` in
// place. Returns the observations and flat actions of every sub-decision.
// When `history` is given, the held joint action after each sub-decision is
// appended to it.
struct SarlRound {
  std::vector<Observation> observations;
  std::vector<int> actions;
};
SarlRound sarl_round_robin(const QNetwork& net, const Environment& env, JointAction& held, double epsilon,
                           Rng& rng, std::vector<JointAction>* history = nullptr);

struct SarlResult {
  Agent agent;
  RewardParams reward;
  std::vector<EpisodeRecord> log;
};

SarlResult sarl_train(const SimConfig& sim, const TrainConfig& train, const RewardParams& reward,
                      std::uint64_t seed);

class SarlPolicy : public Policy {
 public:
  explicit SarlPolicy(const QNetwork& net) : net_(&net) {}
  std::string name() const override { return "sarl"; }
  void begin_episode(const Environment& env) override;
  JointAction act(const Environment& env) override;

 private:
  const QNetwork* net_;
  JointAction held_;
  Rng unused_;
};

}  // namespace v2x
