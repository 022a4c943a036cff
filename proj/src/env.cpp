#include "v2x/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "v2x/errors.hpp"

namespace v2x {

LinkGains compose_link_gains(const LargeScaleState& ls, const FastFadingState& ff, int num_v2i,
                             int num_v2v) {
  const int M = num_v2i;
  const int K = num_v2v;
  const auto& a = ls.alpha_db;
  // compose_gain with the whole large-scale part folded into one dB figure.
  auto g = [](double alpha_db, double h) { return compose_gain(-alpha_db, 0.0, 0.0, 0.0, h); };
  LinkGains out;
  out.num_v2i = M;
  out.num_v2v = K;
  out.v2v_signal.resize(ff.v2v_signal.size());
  out.v2v_cross.assign(ff.v2v_cross.size(), 0.0);
  out.v2v_to_bs.resize(ff.v2v_to_bs.size());
  out.v2i_to_bs.resize(ff.v2i_to_bs.size());
  out.v2i_to_v2v.resize(ff.v2i_to_v2v.size());
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m) {
      const auto i = static_cast<std::size_t>(k * M + m);
      out.v2v_signal[i] = g(a.v2v_signal[k], ff.v2v_signal[i]);
      out.v2v_to_bs[i] = g(a.v2v_to_bs[k], ff.v2v_to_bs[i]);
      for (int j = 0; j < K; ++j) {
        if (j == k) continue;
        const auto c = static_cast<std::size_t>((j * K + k) * M + m);
        out.v2v_cross[c] = g(a.v2v_cross[static_cast<std::size_t>(j * K + k)], ff.v2v_cross[c]);
      }
    }
  for (int m = 0; m < M; ++m) {
    out.v2i_to_bs[m] = g(a.v2i_to_bs[m], ff.v2i_to_bs[m]);
    for (int k = 0; k < K; ++k) {
      const auto i = static_cast<std::size_t>(m * K + k);
      out.v2i_to_v2v[i] = g(a.v2i_to_v2v[i], ff.v2i_to_v2v[i]);
    }
  }
  return out;
}

double bs_noise_mw(const SimConfig& cfg) {
  return dbm_to_mw(cfg.noise_dbm + cfg.bs_noise_figure_db);
}

double vehicle_noise_mw(const SimConfig& cfg) {
  return dbm_to_mw(cfg.noise_dbm + cfg.vehicle_noise_figure_db);
}

double v2v_power_mw(const SimConfig& cfg, const Action& a) {
  if (a.is_off()) return 0.0;
  return dbm_to_mw(cfg.v2v_power_levels_dbm[static_cast<std::size_t>(a.power_idx)]);
}

double compute_capacity(double sinr, double bandwidth_hz) {
  return bandwidth_hz * std::log2(1.0 + sinr);
}

double compute_sinr_v2i(const SimConfig& cfg, const LinkGains& g, std::span<const Action> joint,
                        int m) {
  double denom = bs_noise_mw(cfg);
  for (std::size_t k = 0; k < joint.size(); ++k)
    if (joint[k].subband == m) denom += v2v_power_mw(cfg, joint[k]) * g.to_bs(static_cast<int>(k), m);
  return dbm_to_mw(cfg.v2i_power_dbm) * g.v2i_bs(m) / denom;
}

double compute_interference_v2v(const SimConfig& cfg, const LinkGains& g,
                                std::span<const Action> joint, int k, int m) {
  double interference = dbm_to_mw(cfg.v2i_power_dbm) * g.v2i_v2v(m, k);
  for (std::size_t j = 0; j < joint.size(); ++j) {
    if (static_cast<int>(j) == k || joint[j].subband != m) continue;
    interference += v2v_power_mw(cfg, joint[j]) * g.cross(static_cast<int>(j), k, m);
  }
  return interference;
}

double compute_sinr_v2v(const SimConfig& cfg, const LinkGains& g, std::span<const Action> joint,
                        int k) {
  const Action& a = joint[static_cast<std::size_t>(k)];
  if (a.is_off()) return 0.0;
  const double interference = compute_interference_v2v(cfg, g, joint, k, a.subband);
  return v2v_power_mw(cfg, a) * g.signal(k, a.subband) / (vehicle_noise_mw(cfg) + interference);
}

RadioOutcome evaluate_radio(const SimConfig& cfg, const LinkGains& g, std::span<const Action> joint) {
  const int M = cfg.num_v2i;
  const int K = cfg.num_v2v;
  const double W = cfg.subband_bandwidth_hz();
  RadioOutcome r;
  r.v2i_sinr.resize(M);
  r.v2i_capacity.resize(M);
  r.v2v_sinr.resize(K);
  r.v2v_rate.resize(K);
  r.interference_mw.resize(static_cast<std::size_t>(K * M));
  for (int m = 0; m < M; ++m) {
    r.v2i_sinr[m] = compute_sinr_v2i(cfg, g, joint, m);
    r.v2i_capacity[m] = compute_capacity(r.v2i_sinr[m], W);
  }
  for (int k = 0; k < K; ++k) {
    for (int m = 0; m < M; ++m)
      r.interference_mw[static_cast<std::size_t>(k * M + m)] = compute_interference_v2v(cfg, g, joint, k, m);
    r.v2v_sinr[k] = compute_sinr_v2v(cfg, g, joint, k);
    r.v2v_rate[k] = compute_capacity(r.v2v_sinr[k], W);
  }
  return r;
}

double StepOutcome::v2i_sum() const {
  return std::accumulate(v2i_capacity.begin(), v2i_capacity.end(), 0.0);
}

Observation build_observation(const SimConfig& cfg, const EnvState& state, const LinkGains& gains,
                              int k, std::span<const double> interference_mw, Fingerprint fp) {
  const int M = cfg.num_v2i;
  const int K = cfg.num_v2v;
  if (k < 0 || k >= K) throw UsageError("observe: agent index out of range");
  auto db = [](double lin) { return linear_to_db(lin) / kObservationDbScale; };
  Observation z;
  z.reserve(static_cast<std::size_t>(cfg.observation_size()));
  for (int m = 0; m < M; ++m) z.push_back(db(gains.signal(k, m)));
  for (int j = 0; j < K; ++j) {
    if (j == k) continue;
    for (int m = 0; m < M; ++m) z.push_back(db(gains.cross(j, k, m)));
  }
  for (int m = 0; m < M; ++m) z.push_back(db(gains.to_bs(k, m)));
  for (int m = 0; m < M; ++m) z.push_back(db(gains.v2i_v2v(m, k)));
  for (int m = 0; m < M; ++m) z.push_back(db(interference_mw[static_cast<std::size_t>(k * M + m)]));
  z.push_back(std::max(state.remaining_bits[static_cast<std::size_t>(k)], 0.0) / state.payload_bits);
  z.push_back(state.remaining_ms[static_cast<std::size_t>(k)] / cfg.time_budget_ms);
  z.push_back(fp.episode_fraction);
  z.push_back(fp.epsilon);
  return z;
}

EnvStreams training_streams(const SeedTree& seeds) {
  return {seeds.stream("mobility"), seeds.stream("shadowing"), seeds.stream("fading")};
}

EnvStreams evaluation_streams(const SeedTree& seeds) {
  return {seeds.stream("evaluation", 0), seeds.stream("evaluation", 1),
          seeds.stream("evaluation", 2)};
}

Rng topology_stream(const SeedTree& seeds) { return seeds.stream("topology"); }

Environment::Environment(SimConfig cfg, Rng topology_rng, EnvStreams streams)
    : cfg_(std::move(cfg)), streams_(std::move(streams)) {
  cfg_.validate();
  topo_ = drop_vehicles(cfg_, topology_rng);
  prop_ = initial_propagation(topo_, cfg_, streams_.shadowing);
  reset(false);
}

void Environment::set_state(EnvState state) { state_ = std::move(state); }

LinkGains Environment::gains() const {
  return compose_link_gains(state_.large_scale, state_.fast_fading, cfg_.num_v2i, cfg_.num_v2v);
}

void Environment::reset(bool refresh_large_scale, int payload_bytes) {
  if (payload_bytes <= 0) throw UsageError("reset: payload must be positive");
  const int M = cfg_.num_v2i;
  const int K = cfg_.num_v2v;
  if (refresh_large_scale) {
    TopologyState next = update_positions(topo_, cfg_.large_scale_interval_s, streams_.mobility);
    prop_ = update_propagation(prop_, topo_, next, cfg_, streams_.shadowing);
    topo_ = std::move(next);
  }
  state_.large_scale = link_large_scale(prop_, topo_, cfg_);
  state_.fast_fading = draw_fast_fading(M, K, streams_.fading);
  state_.payload_bits = 8.0 * payload_bytes;
  state_.remaining_bits.assign(static_cast<std::size_t>(K), state_.payload_bits);
  state_.remaining_ms.assign(static_cast<std::size_t>(K), static_cast<double>(cfg_.time_budget_ms));
  state_.step_t = 0;
  state_.delivered.assign(static_cast<std::size_t>(K), 0);
  state_.done = false;
  // Nothing measured yet: only the V2I transmitters are on the air.
  const JointAction silent(static_cast<std::size_t>(K), Action::off());
  const LinkGains g = gains();
  state_.measured_interference_mw.resize(static_cast<std::size_t>(K * M));
  for (int k = 0; k < K; ++k)
    for (int m = 0; m < M; ++m)
      state_.measured_interference_mw[static_cast<std::size_t>(k * M + m)] =
          compute_interference_v2v(cfg_, g, silent, k, m);
}

StepOutcome Environment::step(std::span<const Action> joint, const RewardParams& reward) {
  if (state_.done) throw UsageError("step: episode is already done");
  const int M = cfg_.num_v2i;
  const int K = cfg_.num_v2v;
  if (static_cast<int>(joint.size()) != K)
    throw UsageError("step: expected " + std::to_string(K) + " actions, got " + std::to_string(joint.size()));
  JointAction effective(joint.begin(), joint.end());
  for (int k = 0; k < K; ++k) {
    const Action& a = effective[static_cast<std::size_t>(k)];
    if (!a.is_off() && (a.subband >= M || a.power_idx < 0 || a.power_idx >= cfg_.num_power_levels()))
      throw UsageError("step: action out of range for agent " + std::to_string(k));
    // A link with nothing left to send stays silent.
    if (state_.delivered[static_cast<std::size_t>(k)]) effective[static_cast<std::size_t>(k)] = Action::off();
  }

  const RadioOutcome radio = evaluate_radio(cfg_, gains(), effective);
  StepOutcome out;
  out.v2i_sinr = radio.v2i_sinr;
  out.v2i_capacity = radio.v2i_capacity;
  out.v2v_sinr = radio.v2v_sinr;
  out.v2v_rate = radio.v2v_rate;
  out.interference_mw = radio.interference_mw;
  out.v2v_reward.resize(static_cast<std::size_t>(K));
  out.delivered_bits.assign(static_cast<std::size_t>(K), 0.0);

  const double dt = cfg_.step_s();
  for (std::size_t k = 0; k < static_cast<std::size_t>(K); ++k) {
    if (state_.delivered[k]) {
      out.v2v_reward[k] = reward.beta;
      continue;
    }
    out.v2v_reward[k] = out.v2v_rate[k];
    const double sent = std::min(out.v2v_rate[k] * dt, state_.remaining_bits[k]);
    out.delivered_bits[k] = sent;
    state_.remaining_bits[k] -= sent;
    if (state_.remaining_bits[k] <= 0.0) {
      state_.remaining_bits[k] = 0.0;
      state_.delivered[k] = 1;
    }
  }
  const double v2v_sum = std::accumulate(out.v2v_reward.begin(), out.v2v_reward.end(), 0.0);
  out.reward = reward.lambda_c * out.v2i_sum() + reward.lambda_d * v2v_sum;

  state_.measured_interference_mw = radio.interference_mw;
  ++state_.step_t;
  const double left_ms = cfg_.time_budget_ms - static_cast<double>(state_.step_t) * cfg_.step_ms;
  std::fill(state_.remaining_ms.begin(), state_.remaining_ms.end(), left_ms);
  const bool all_delivered =
      std::all_of(state_.delivered.begin(), state_.delivered.end(), [](std::uint8_t d) { return d != 0; });
  state_.done = state_.step_t >= cfg_.steps_per_episode() || (cfg_.early_exit && all_delivered);
  out.done = state_.done;
  state_.fast_fading = draw_fast_fading(M, K, streams_.fading);
  return out;
}

Observation Environment::observe(int k, Fingerprint fp) const {
  return build_observation(cfg_, state_, gains(), k, state_.measured_interference_mw, fp);
}

DeliveryResult delivery_success(const EpisodeLog& log) {
  DeliveryResult r;
  if (log.v2v_rates.empty()) return r;
  const std::size_t K = log.v2v_rates.front().size();
  std::vector<double> remaining(K, log.payload_bits);
  for (const auto& rates : log.v2v_rates)
    for (std::size_t k = 0; k < K; ++k)
      if (remaining[k] > 0.0) remaining[k] -= std::min(rates[k] * log.step_s, remaining[k]);
  r.success.resize(K);
  std::size_t ok = 0;
  for (std::size_t k = 0; k < K; ++k) {
    r.success[k] = remaining[k] <= 0.0;
    ok += r.success[k] ? 1 : 0;
  }
  r.rate = K ? static_cast<double>(ok) / static_cast<double>(K) : 0.0;
  return r;
}

double aggregate_delivery_rate(std::span<const DeliveryResult> results) {
  std::size_t ok = 0;
  std::size_t total = 0;
  for (const auto& r : results) {
    for (bool s : r.success) ok += s ? 1 : 0;
    total += r.success.size();
  }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 0.0;
}

}  // namespace v2x
