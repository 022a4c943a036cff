#include "v2x/evaluation.hpp"

#include <cmath>
#include <numeric>

#include "v2x/baselines.hpp"
#include "v2x/errors.hpp"

namespace v2x {

double EvaluationResult::v2i_mean() const {
  if (episode_v2i_mean.empty()) return 0.0;
  return std::accumulate(episode_v2i_mean.begin(), episode_v2i_mean.end(), 0.0) /
         static_cast<double>(episode_v2i_mean.size());
}

double EvaluationResult::delivery_probability() const { return aggregate_delivery_rate(delivery); }

EvaluationResult run_evaluation(Policy& policy, const SimConfig& cfg, const EvaluationOptions& opts) {
  if (opts.episodes < 1) throw ConfigError("eval_episodes: must be >= 1");
  const SeedTree seeds(opts.seed);
  Environment env(cfg, topology_stream(seeds), evaluation_streams(seeds));
  const int K = cfg.num_v2v;
  EvaluationResult res;
  res.payload_bytes = opts.payload_bytes;
  res.num_links = K;
  for (int e = 0; e < opts.episodes; ++e) {
    env.reset(true, opts.payload_bytes);
    policy.begin_episode(env);
    EpisodeLog log;
    log.payload_bits = env.state().payload_bits;
    log.step_s = cfg.step_s();
    double v2i_total = 0.0;
    double ret = 0.0;
    int steps = 0;
    while (!env.done()) {
      const double upper = no_v2v_sum_capacity(cfg, env.gains());
      const JointAction joint = policy.act(env);
      const int t = env.state().step_t;
      const StepOutcome out = env.step(joint, opts.reward);
      const double v2i = out.v2i_sum();
      res.step_v2i_sum.push_back(v2i);
      res.step_v2i_upper.push_back(upper);
      v2i_total += v2i;
      ret += out.reward;
      ++steps;
      log.v2v_rates.push_back(out.v2v_rate);
      if (opts.record_trace) {
        for (int k = 0; k < K; ++k) {
          const auto ku = static_cast<std::size_t>(k);
          TraceRow row;
          row.episode = e;
          row.step = t;
          row.link = k;
          row.action = joint[ku];
          if (!row.action.is_off())
            row.power_dbm = cfg.v2v_power_levels_dbm[static_cast<std::size_t>(row.action.power_idx)];
          row.v2v_rate_bps = out.v2v_rate[ku];
          row.remaining_bits = env.state().remaining_bits[ku];
          row.v2i_sum_capacity_bps = v2i;
          row.reward = out.reward;
          res.trace.push_back(row);
        }
      }
    }
    res.episode_v2i_mean.push_back(v2i_total / steps);
    res.episode_return.push_back(ret);
    res.delivery.push_back(delivery_success(log));
  }
  return res;
}

double wilson_half_width(std::size_t successes, std::size_t n) {
  if (n == 0) return 0.0;
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  return z / (1.0 + z * z / nn) * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn));
}

PayloadMetrics summarize(const std::string& scheme, const EvaluationResult& r) {
  PayloadMetrics m;
  m.scheme = scheme;
  m.payload_bytes = r.payload_bytes;
  m.episodes = r.episodes();
  m.v2i_sum_capacity_mean = r.v2i_mean();
  const std::size_t n = r.episode_v2i_mean.size();
  if (n > 1) {
    double ss = 0.0;
    for (double v : r.episode_v2i_mean) ss += (v - m.v2i_sum_capacity_mean) * (v - m.v2i_sum_capacity_mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    m.v2i_ci95 = 1.959963984540054 * sd / std::sqrt(static_cast<double>(n));
  }
  std::size_t ok = 0;
  std::size_t total = 0;
  for (const auto& d : r.delivery) {
    for (bool s : d.success) ok += s ? 1 : 0;
    total += d.success.size();
  }
  m.delivery_probability = total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
  m.delivery_ci95 = wilson_half_width(ok, total);
  return m;
}

}  // namespace v2x
