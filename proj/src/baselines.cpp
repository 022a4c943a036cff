#include "v2x/baselines.hpp"

#include <limits>
#include <numeric>

#include "v2x/errors.hpp"

namespace v2x {

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::marl: return "marl";
    case Scheme::sarl: return "sarl";
    case Scheme::random: return "random";
    case Scheme::max_v2v: return "maxv2v";
    case Scheme::no_v2v: return "nov2v";
  }
  return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view name) {
  for (Scheme s : {Scheme::marl, Scheme::sarl, Scheme::random, Scheme::max_v2v, Scheme::no_v2v})
    if (scheme_name(s) == name) return s;
  return std::nullopt;
}

JointAction random_policy(const SimConfig& cfg, Rng& rng) {
  JointAction joint(static_cast<std::size_t>(cfg.num_v2v));
  const auto A = static_cast<std::size_t>(cfg.num_actions());
  for (auto& a : joint) a = Action::from_flat(static_cast<int>(uniform_index(rng, A)), cfg.num_power_levels());
  return joint;
}

std::uint64_t joint_space_size(const SimConfig& cfg) {
  const auto A = static_cast<std::uint64_t>(cfg.num_actions());
  std::uint64_t size = 1;
  for (int k = 0; k < cfg.num_v2v; ++k) {
    if (size > std::numeric_limits<std::uint64_t>::max() / A) return std::numeric_limits<std::uint64_t>::max();
    size *= A;
  }
  return size;
}

double sum_v2v_rate(const SimConfig& cfg, const LinkGains& gains, std::span<const Action> joint) {
  const double W = cfg.subband_bandwidth_hz();
  double sum = 0.0;
  for (int k = 0; k < cfg.num_v2v; ++k) sum += compute_capacity(compute_sinr_v2v(cfg, gains, joint, k), W);
  return sum;
}

JointAction max_v2v_exhaustive(const SimConfig& cfg, const LinkGains& gains,
                               std::span<const std::uint8_t> delivered, std::uint64_t cap) {
  const int K = cfg.num_v2v;
  const int P = cfg.num_power_levels();
  const int A = cfg.num_actions();
  const std::uint64_t size = joint_space_size(cfg);
  if (size > cap)
    throw CapacityError("max_v2v_exhaustive: joint action space " + std::to_string(size) + " exceeds cap " +
                            std::to_string(cap),
                        size);
  if (static_cast<int>(delivered.size()) != K) throw UsageError("max_v2v_exhaustive: delivered mask size");

  std::vector<int> active;
  for (int k = 0; k < K; ++k)
    if (!delivered[static_cast<std::size_t>(k)]) active.push_back(k);
  JointAction best(static_cast<std::size_t>(K), Action::off());
  if (active.empty()) return best;

  // Rate of link k depends on its own action and, for every other link, on
  // which power it uses on the same sub-band (code p + 1) or that it is
  // elsewhere (code 0). Table entries replay the environment's arithmetic.
  const int others = static_cast<int>(active.size()) - 1;
  std::size_t combos = 1;
  for (int i = 0; i < others; ++i) combos *= static_cast<std::size_t>(P + 1);
  const double W = cfg.subband_bandwidth_hz();
  const double noise = vehicle_noise_mw(cfg);
  const double v2i_mw = dbm_to_mw(cfg.v2i_power_dbm);
  std::vector<std::vector<double>> table(active.size(), std::vector<double>(static_cast<std::size_t>(A) * combos));
  for (std::size_t ai = 0; ai < active.size(); ++ai) {
    const int k = active[ai];
    for (int flat = 0; flat < A; ++flat) {
      const Action a = Action::from_flat(flat, P);
      for (std::size_t c = 0; c < combos; ++c) {
        double interference = v2i_mw * gains.v2i_v2v(a.subband, k);
        std::size_t rest = c;
        for (std::size_t bi = 0; bi < active.size(); ++bi) {
          if (bi == ai) continue;
          const int code = static_cast<int>(rest % static_cast<std::size_t>(P + 1));
          rest /= static_cast<std::size_t>(P + 1);
          if (code == 0) continue;
          interference += v2v_power_mw(cfg, Action{a.subband, code - 1}) * gains.cross(active[bi], k, a.subband);
        }
        const double sinr = v2v_power_mw(cfg, a) * gains.signal(k, a.subband) / (noise + interference);
        table[ai][static_cast<std::size_t>(flat) * combos + c] = compute_capacity(sinr, W);
      }
    }
  }

  // Odometer over active links; the last one changes fastest, so visiting
  // order is ascending in the flat joint index.
  const std::size_t n = active.size();
  std::vector<int> digits(n, 0);
  std::vector<int> best_digits(n, 0);
  double best_sum = -std::numeric_limits<double>::infinity();
  while (true) {
    double sum = 0.0;
    for (int k = 0, ai = 0; k < K; ++k) {
      if (delivered[static_cast<std::size_t>(k)]) continue;
      const int sub = digits[static_cast<std::size_t>(ai)] / P;
      std::size_t c = 0;
      std::size_t scale = 1;
      for (std::size_t bi = 0; bi < n; ++bi) {
        if (bi == static_cast<std::size_t>(ai)) continue;
        const int d = digits[bi];
        if (d / P == sub) c += static_cast<std::size_t>(d % P + 1) * scale;
        scale *= static_cast<std::size_t>(P + 1);
      }
      sum += table[static_cast<std::size_t>(ai)][static_cast<std::size_t>(digits[static_cast<std::size_t>(ai)]) * combos + c];
      ++ai;
    }
    if (sum > best_sum) {
      best_sum = sum;
      best_digits = digits;
    }
    std::size_t pos = n;
    while (pos > 0) {
      --pos;
      if (++digits[pos] < A) break;
      digits[pos] = 0;
      if (pos == 0) {
        pos = n;
        break;
      }
    }
    if (pos == n) break;
  }
  for (std::size_t ai = 0; ai < n; ++ai)
    best[static_cast<std::size_t>(active[ai])] = Action::from_flat(best_digits[ai], P);
  return best;
}

JointAction max_v2v_exhaustive(const Environment& env, std::uint64_t cap) {
  return max_v2v_exhaustive(env.config(), env.gains(), env.state().delivered, cap);
}

std::vector<double> no_v2v_upper_bound(const SimConfig& cfg, const LinkGains& gains) {
  const JointAction silent(static_cast<std::size_t>(cfg.num_v2v), Action::off());
  std::vector<double> c(static_cast<std::size_t>(cfg.num_v2i));
  for (int m = 0; m < cfg.num_v2i; ++m)
    c[static_cast<std::size_t>(m)] =
        compute_capacity(compute_sinr_v2i(cfg, gains, silent, m), cfg.subband_bandwidth_hz());
  return c;
}

double no_v2v_sum_capacity(const SimConfig& cfg, const LinkGains& gains) {
  const auto c = no_v2v_upper_bound(cfg, gains);
  return std::accumulate(c.begin(), c.end(), 0.0);
}

Action sarl_initial_action(const SimConfig& cfg) { return Action{0, cfg.silent_power_index()}; }

int sarl_observation_size(const SimConfig& cfg) { return cfg.observation_size() - 2; }

Observation sarl_observation(const Environment& env, int k, std::span<const Action> held) {
  const SimConfig& cfg = env.config();
  const LinkGains g = env.gains();
  std::vector<double> interference(static_cast<std::size_t>(cfg.num_v2v * cfg.num_v2i));
  for (int j = 0; j < cfg.num_v2v; ++j)
    for (int m = 0; m < cfg.num_v2i; ++m)
      interference[static_cast<std::size_t>(j * cfg.num_v2i + m)] = compute_interference_v2v(cfg, g, held, j, m);
  Observation z = build_observation(cfg, env.state(), g, k, interference, {});
  z.resize(z.size() - 2);
  return z;
}

SarlRound sarl_round_robin(const QNetwork& net, const Environment& env, JointAction& held, double epsilon,
                           Rng& rng, std::vector<JointAction>* history) {
  const SimConfig& cfg = env.config();
  const int K = cfg.num_v2v;
  if (static_cast<int>(held.size()) != K) throw UsageError("sarl: held joint action has the wrong size");
  if (net.input_size() != sarl_observation_size(cfg) || net.output_size() != cfg.num_actions())
    throw UsageError("sarl: network dimensions do not match the environment");
  SarlRound round;
  for (int k = 0; k < K; ++k) {
    Observation z = sarl_observation(env, k, held);
    const int a = select_action_lazy(cfg.num_actions(), epsilon, rng, [&] { return argmax(net.forward(z)); });
    held[static_cast<std::size_t>(k)] = Action::from_flat(a, cfg.num_power_levels());
    if (history) history->push_back(held);
    round.observations.push_back(std::move(z));
    round.actions.push_back(a);
  }
  return round;
}

SarlResult sarl_train(const SimConfig& sim, const TrainConfig& train, const RewardParams& reward,
                      std::uint64_t seed) {
  train.validate();
  reward.validate();
  SimConfig cfg = sim;
  cfg.payload_bytes = train.payload_bytes;
  const SeedTree seeds(seed);
  Environment env(cfg, topology_stream(seeds), training_streams(seeds));
  const int K = cfg.num_v2v;
  const auto dims = network_dims(sarl_observation_size(cfg), cfg, train);
  Rng init = seeds.stream("sarl-init");
  SarlResult result{make_agent(dims, train, init, seeds.stream("sarl-replay")), reward, {}};
  Rng explore = seeds.stream("sarl-exploration");
  DeliveryTally tally;
  for (int e = 0; e < train.total_episodes; ++e) {
    const double eps = epsilon_schedule(e, train);
    env.reset(e > 0 && e % train.large_scale_refresh_period == 0);
    JointAction held(static_cast<std::size_t>(K), sarl_initial_action(cfg));
    double ret = 0.0;
    double v2i = 0.0;
    int steps = 0;
    SarlRound round = sarl_round_robin(result.agent.online, env, held, eps, explore);
    while (true) {
      const StepOutcome out = env.step(held, reward);
      ret += out.reward;
      v2i += out.v2i_sum();
      ++steps;
      // The next observations are those seen at the start of the following
      // round; at the terminal step they are built but never bootstrapped.
      std::vector<Observation> next(static_cast<std::size_t>(K));
      SarlRound following;
      if (!out.done) {
        following = sarl_round_robin(result.agent.online, env, held, eps, explore);
        next = following.observations;
      } else {
        for (int k = 0; k < K; ++k) next[static_cast<std::size_t>(k)] = sarl_observation(env, k, held);
      }
      for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k)
        result.agent.memory.push(
            {round.observations[k], round.actions[k], train.reward_scale * out.reward, next[k], out.done});
      if (out.done) break;
      round = std::move(following);
    }
    learn_from_replay(result.agent, train, train.minibatches_per_episode * K);
    if ((e + 1) % train.target_sync_period == 0) sync_target(result.agent);
    tally.add(env.state().delivered);
    result.log.push_back({e, eps, ret, v2i / steps, tally.rate()});
  }
  return result;
}

void SarlPolicy::begin_episode(const Environment& env) {
  held_.assign(static_cast<std::size_t>(env.num_agents()), sarl_initial_action(env.config()));
}

JointAction SarlPolicy::act(const Environment& env) {
  if (held_.size() != static_cast<std::size_t>(env.num_agents())) begin_episode(env);
  sarl_round_robin(*net_, env, held_, 0.0, unused_);
  return held_;
}

}  // namespace v2x
