#include "v2x/trainer.hpp"

#include <algorithm>
#include <numeric>

#include "v2x/errors.hpp"

namespace v2x {

double epsilon_schedule(int episode, const TrainConfig& cfg) {
  if (episode < 0) throw UsageError("epsilon_schedule: episode must be >= 0");
  if (episode >= cfg.anneal_episodes) return cfg.epsilon_final;
  return 1.0 + (cfg.epsilon_final - 1.0) * static_cast<double>(episode) / static_cast<double>(cfg.anneal_episodes);
}

int argmax(std::span<const double> values) {
  if (values.empty()) throw UsageError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return static_cast<int>(best);
}

int select_action(std::span<const double> q_values, double epsilon, Rng& rng) {
  if (q_values.empty()) throw UsageError("select_action: empty q-values");
  return select_action_lazy(static_cast<int>(q_values.size()), epsilon, rng,
                            [&] { return argmax(q_values); });
}

std::vector<double> td_targets(std::span<const Experience* const> batch, const QNetwork& target,
                               double gamma) {
  std::vector<double> out(batch.size());
  std::vector<double> next;
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out[i] = batch[i]->reward;
    if (batch[i]->terminal || gamma == 0.0) continue;
    next.insert(next.end(), batch[i]->next_observation.begin(), batch[i]->next_observation.end());
    rows.push_back(i);
  }
  if (rows.empty()) return out;
  const std::vector<double> q = target.forward_batch(next, rows.size());
  const auto A = static_cast<std::size_t>(target.output_size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double best = *std::max_element(q.begin() + static_cast<std::ptrdiff_t>(r * A),
                                          q.begin() + static_cast<std::ptrdiff_t>((r + 1) * A));
    out[rows[r]] += gamma * best;
  }
  return out;
}

Agent make_agent(const std::vector<int>& dims, const TrainConfig& cfg, Rng& init_rng, Rng replay_rng) {
  Agent a;
  a.online = QNetwork::glorot(dims, init_rng);
  a.target = a.online;
  a.optimizer = RmsProp(a.online, cfg.learning_rate, cfg.rmsprop_decay, cfg.rmsprop_epsilon);
  a.memory = ReplayMemory(static_cast<std::size_t>(cfg.replay_capacity));
  a.replay_rng = std::move(replay_rng);
  return a;
}

void sync_target(Agent& agent) { agent.target = agent.online; }

void learn_from_replay(Agent& agent, const TrainConfig& cfg, int count) {
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  if (agent.memory.size() < batch_size) return;
  for (int b = 0; b < count; ++b) {
    const auto batch = agent.memory.sample(batch_size, agent.replay_rng);
    const auto targets = td_targets(batch, agent.target, cfg.gamma);
    std::vector<TrainingSample> samples(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i)
      samples[i] = {batch[i]->observation, batch[i]->action, targets[i]};
    agent.optimizer.step(agent.online, backward(agent.online, samples));
  }
}

std::vector<int> network_dims(int observation_size, const SimConfig& sim, const TrainConfig& train) {
  std::vector<int> dims{observation_size};
  dims.insert(dims.end(), train.hidden_layers.begin(), train.hidden_layers.end());
  dims.push_back(sim.num_actions());
  return dims;
}

void DeliveryTally::add(const std::vector<std::uint8_t>& delivered) {
  for (auto d : delivered) ok_ += d ? 1 : 0;
  total_ += delivered.size();
}

RewardParams calibrate_reward(const SimConfig& sim, const RewardSettings& settings, std::uint64_t seed) {
  settings.validate();
  RewardParams p;
  if (settings.lambda_c && settings.lambda_d && settings.beta) {
    p = {*settings.lambda_c, *settings.lambda_d, *settings.beta};
    p.validate();
    return p;
  }
  const SeedTree seeds(seed);
  const Environment env(sim, topology_stream(seeds), training_streams(seeds));
  Rng fading = seeds.stream("calibration", 0);
  Rng actions = seeds.stream("calibration", 1);
  const int M = sim.num_v2i;
  const int K = sim.num_v2v;
  const int A = sim.num_actions();
  const int P = sim.num_power_levels();
  double v2i_total = 0.0;
  double v2v_total = 0.0;
  double max_rate = 0.0;
  JointAction joint(static_cast<std::size_t>(K));
  for (int t = 0; t < settings.calibration_steps; ++t) {
    const FastFadingState ff = draw_fast_fading(M, K, fading);
    const LinkGains g = compose_link_gains(env.state().large_scale, ff, M, K);
    for (auto& a : joint)
      a = Action::from_flat(static_cast<int>(uniform_index(actions, static_cast<std::size_t>(A))), P);
    const RadioOutcome r = evaluate_radio(sim, g, joint);
    v2i_total += std::accumulate(r.v2i_capacity.begin(), r.v2i_capacity.end(), 0.0);
    v2v_total += std::accumulate(r.v2v_rate.begin(), r.v2v_rate.end(), 0.0);
    max_rate = std::max(max_rate, *std::max_element(r.v2v_rate.begin(), r.v2v_rate.end()));
  }
  const double n = settings.calibration_steps;
  p.lambda_c = settings.lambda_c.value_or(settings.v2i_weight / (v2i_total / n));
  p.lambda_d = settings.lambda_d.value_or(v2v_total > 0 ? settings.v2v_weight / (v2v_total / n) : settings.v2v_weight);
  p.beta = settings.beta.value_or(max_rate > 0 ? settings.beta_scale * max_rate : settings.beta_scale);
  p.validate();
  return p;
}

TrainResult train_marl(const SimConfig& sim, const TrainConfig& train, const RewardParams& reward,
                       std::uint64_t seed) {
  train.validate();
  reward.validate();
  SimConfig cfg = sim;
  cfg.payload_bytes = train.payload_bytes;
  const SeedTree seeds(seed);
  Environment env(cfg, topology_stream(seeds), training_streams(seeds));
  const int K = cfg.num_v2v;
  const int A = cfg.num_actions();
  const int P = cfg.num_power_levels();
  const auto dims = network_dims(cfg.observation_size(), cfg, train);

  TrainResult result;
  result.agents.reward = reward;
  std::vector<Rng> explore;
  for (int k = 0; k < K; ++k) {
    Rng init = seeds.stream("init", static_cast<std::uint64_t>(k));
    result.agents.agents.push_back(make_agent(dims, train, init, seeds.stream("replay", static_cast<std::uint64_t>(k))));
    explore.push_back(seeds.stream("exploration", static_cast<std::uint64_t>(k)));
  }
  auto& agents = result.agents.agents;

  DeliveryTally tally;
  Fingerprint fp;
  std::vector<Observation> obs(static_cast<std::size_t>(K));
  std::vector<int> flat(static_cast<std::size_t>(K));
  JointAction joint(static_cast<std::size_t>(K));
  for (int e = 0; e < train.total_episodes; ++e) {
    const double eps = epsilon_schedule(e, train);
    fp = {static_cast<double>(e) / train.total_episodes, eps};
    env.reset(e > 0 && e % train.large_scale_refresh_period == 0);
    for (int k = 0; k < K; ++k) obs[static_cast<std::size_t>(k)] = env.observe(k, fp);
    double ret = 0.0;
    double v2i = 0.0;
    int steps = 0;
    while (!env.done()) {
      for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        flat[k] = select_action_lazy(A, eps, explore[k], [&] { return argmax(agents[k].online.forward(obs[k])); });
        joint[k] = Action::from_flat(flat[k], P);
      }
      const StepOutcome out = env.step(joint, reward);
      for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
        Observation next = env.observe(static_cast<int>(k), fp);
        agents[k].memory.push({obs[k], flat[k], train.reward_scale * out.reward, next, out.done});
        obs[k] = std::move(next);
      }
      ret += out.reward;
      v2i += out.v2i_sum();
      ++steps;
    }
    for (auto& agent : agents) learn_from_replay(agent, train, train.minibatches_per_episode);
    if ((e + 1) % train.target_sync_period == 0)
      for (auto& agent : agents) sync_target(agent);
    tally.add(env.state().delivered);
    result.log.push_back({e, eps, ret, v2i / steps, tally.rate()});
  }
  result.agents.deployment = fp;
  return result;
}

JointAction MarlPolicy::act(const Environment& env) {
  const auto& agents = agents_->agents;
  const SimConfig& cfg = env.config();
  if (static_cast<int>(agents.size()) != cfg.num_v2v)
    throw UsageError("marl policy: trained for " + std::to_string(agents.size()) + " agents, environment has " +
                     std::to_string(cfg.num_v2v));
  JointAction joint(agents.size());
  for (std::size_t k = 0; k < agents.size(); ++k) {
    const QNetwork& net = agents[k].online;
    if (net.input_size() != cfg.observation_size() || net.output_size() != cfg.num_actions())
      throw UsageError("marl policy: network dimensions do not match the environment");
    const auto q = net.forward(env.observe(static_cast<int>(k), agents_->deployment));
    joint[k] = Action::from_flat(argmax(q), cfg.num_power_levels());
  }
  return joint;
}

PayloadMetrics evaluate(const AgentSet& agents, const SimConfig& sim, int episodes, int payload_bytes,
                        std::uint64_t seed) {
  MarlPolicy policy(agents);
  EvaluationOptions opts;
  opts.episodes = episodes;
  opts.payload_bytes = payload_bytes;
  opts.seed = seed;
  opts.reward = agents.reward;
  return summarize(policy.name(), run_evaluation(policy, sim, opts));
}

}  // namespace v2x
