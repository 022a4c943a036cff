#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "v2x/channel.hpp"
#include "v2x/errors.hpp"
#include "v2x/experiment.hpp"
#include "v2x/rng.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> scheme;
  std::optional<int> payload_multiplier;
  std::optional<int> episodes;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config (defaults when omitted)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--scheme", o.scheme, "marl, sarl, random, maxv2v or nov2v");
}

v2x::ExperimentSpec resolve(const Options& o) {
  v2x::ExperimentSpec spec = o.config.empty() ? v2x::ExperimentSpec{} : v2x::load_config(o.config);
  if (o.seed) spec.seed = *o.seed;
  if (o.out) spec.output_dir = *o.out;
  if (o.scheme) {
    const auto s = v2x::parse_scheme(*o.scheme);
    if (!s) throw v2x::ConfigError("scheme: unknown scheme '" + *o.scheme + "'");
    spec.scheme = *s;
  }
  if (o.payload_multiplier) spec.payload_multipliers = {*o.payload_multiplier};
  spec.validate();
  return spec;
}

int validate_channel(const Options& o) {
  const v2x::ExperimentSpec spec = resolve(o);
  const v2x::SimConfig& c = spec.sim;
  const v2x::SeedTree seeds(spec.seed);
  const long n = o.episodes ? static_cast<long>(*o.episodes) : 1000000L;
  bool ok = true;

  v2x::Rng fading = seeds.stream("validate-channel", 0);
  double sum = 0.0;
  for (long i = 0; i < n; ++i) sum += v2x::sample_fast_fading(fading);
  const double mean = sum / static_cast<double>(n);
  const bool fading_ok = std::abs(mean - 1.0) <= 0.01;
  ok = ok && fading_ok;
  std::printf("fast_fading_mean,%.6f,%s\n", mean, fading_ok ? "ok" : "out_of_tolerance");

  struct Shadow {
    const char* name;
    double std_db;
    double decorr_m;
  };
  const double step_m = c.speed_mps() * c.large_scale_interval_s;
  int stream = 1;
  for (const Shadow s : {Shadow{"v2i_shadowing_std_db", c.v2i_shadow_std_db, c.v2i_decorrelation_m},
                         Shadow{"v2v_shadowing_std_db", c.v2v_shadow_std_db, c.v2v_decorrelation_m}}) {
    v2x::Rng rng = seeds.stream("validate-channel", static_cast<std::uint64_t>(stream++));
    double x = s.std_db * v2x::standard_normal(rng);
    double s1 = 0.0, s2 = 0.0;
    for (long i = 0; i < n; ++i) {
      x = v2x::update_shadowing(x, step_m, s.std_db, s.decorr_m, rng);
      s1 += x;
      s2 += x * x;
    }
    const double m = s1 / static_cast<double>(n);
    const double sd = std::sqrt(s2 / static_cast<double>(n) - m * m);
    const bool good = s.std_db == 0.0 ? sd == 0.0 : std::abs(sd - s.std_db) <= 0.05 * s.std_db;
    ok = ok && good;
    std::printf("%s,%.6f,%s\n", s.name, sd, good ? "ok" : "out_of_tolerance");
  }
  for (double d_m : {10.0, 50.0, 100.0, 300.0})
    std::printf("pathloss_v2v_db@%gm,%.4f\n", d_m,
                v2x::pathloss_v2v_db(d_m, c.carrier_ghz, c.vehicle_height_m, c.vehicle_height_m));
  for (double d_km : {0.05, 0.1, 0.5})
    std::printf("pathloss_v2i_db@%gkm,%.4f\n", d_km, v2x::pathloss_v2i_db(d_km));
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent spectrum sharing simulator for vehicular networks"};
  app.require_subcommand(1);
  Options o;

  auto* train = app.add_subcommand("train", "train MARL or SARL agents and write checkpoints");
  add_common(train, o);
  train->add_option("--episodes", o.episodes, "training episodes (annealing keeps its 80% share)");

  auto* eval = app.add_subcommand("eval", "evaluate checkpoints written by train");
  add_common(eval, o);
  eval->add_option("--payload-multiplier", o.payload_multiplier, "evaluate a single payload of N x 1060 bytes");
  eval->add_option("--episodes", o.episodes, "evaluation episodes per payload");

  auto* baseline = app.add_subcommand("baseline", "evaluate a baseline scheme");
  add_common(baseline, o);
  baseline->add_option("--payload-multiplier", o.payload_multiplier, "evaluate a single payload of N x 1060 bytes");
  baseline->add_option("--episodes", o.episodes, "evaluation episodes per payload");

  auto* sweep = app.add_subcommand("sweep", "train if needed, then evaluate every payload multiplier");
  add_common(sweep, o);
  sweep->add_option("--payload-multiplier", o.payload_multiplier, "evaluate a single payload of N x 1060 bytes");
  sweep->add_option("--episodes", o.episodes, "evaluation episodes per payload");

  auto* channel = app.add_subcommand("validate-channel", "print channel model statistics");
  channel->add_option("--config", o.config, "JSON experiment config");
  channel->add_option("--seed", o.seed, "master seed");
  channel->add_option("--episodes", o.episodes, "number of samples (default 1000000)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (channel->parsed()) return validate_channel(o);

    v2x::ExperimentSpec spec = resolve(o);
    v2x::Stage stage = v2x::Stage::full;
    if (train->parsed()) {
      stage = v2x::Stage::train;
      if (o.episodes) {
        spec.train.total_episodes = *o.episodes;
        spec.train.anneal_episodes = static_cast<int>(std::lround(0.8 * *o.episodes));
      }
      if (spec.scheme != v2x::Scheme::marl && spec.scheme != v2x::Scheme::sarl)
        throw v2x::ConfigError("scheme: train needs marl or sarl");
    } else {
      if (eval->parsed()) stage = v2x::Stage::evaluate;
      if (baseline->parsed() && spec.scheme == v2x::Scheme::marl)
        throw v2x::ConfigError("scheme: baseline needs sarl, random, maxv2v or nov2v");
      if (o.episodes) spec.eval_episodes = *o.episodes;
    }
    spec.validate();
    const v2x::ExperimentResult r = v2x::run_experiment(spec, stage);
    if (stage == v2x::Stage::train) {
      if (!r.training_log.empty()) {
        const auto& last = r.training_log.back();
        std::cout << "trained " << r.training_log.size() << " episodes, last return " << last.episode_return
                  << ", delivery so far " << last.delivery_rate_so_far << "\n";
      }
    } else {
      std::cout << v2x::metrics_csv(r.metrics);
    }
    std::cerr << "artifacts in " << spec.output_dir << "\n";
    return 0;
  } catch (const v2x::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const v2x::CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
