#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "v2x/baselines.hpp"
#include "v2x/config.hpp"
#include "v2x/evaluation.hpp"
#include "v2x/trainer.hpp"

namespace v2x {

inline constexpr int kPayloadUnitBytes = 1060;

struct ExperimentSpec {
  Scheme scheme = Scheme::marl;
  SimConfig sim;
  TrainConfig train;
  RewardSettings reward;
  int eval_episodes = 200;
  std::vector<int> payload_multipliers{1, 2, 3, 4, 5, 6};
  std::uint64_t seed = 1;
  std::string output_dir = "out";

  void validate() const;
  std::vector<int> payload_sizes_bytes() const;
  bool operator==(const ExperimentSpec&) const = default;
};

// Flat JSON object; absent keys keep their defaults, an empty document means
// all defaults. Unknown keys, type mismatches and constraint violations throw
// ConfigError naming the key.
ExperimentSpec parse_config(const std::string& text);
ExperimentSpec load_config(const std::filesystem::path& path);
// Every key, fully resolved. parse_config(dump_config(s)) == s.
std::string dump_config(const ExperimentSpec& spec);

inline constexpr const char* kMetricsHeader =
    "scheme,payload_bytes,episodes,v2i_sum_capacity_bps_mean,v2i_ci95,delivery_probability,delivery_ci95";
inline constexpr const char* kTraceHeader =
    "episode,step,link,subband,power_dbm,v2v_rate_bps,remaining_bits,v2i_sum_capacity_bps,reward";
inline constexpr const char* kTrainingLogHeader = "episode,epsilon,return,mean_v2i_capacity,delivery_rate_so_far";

std::string metrics_csv(const std::vector<PayloadMetrics>& rows);
std::string trace_csv(const std::vector<TraceRow>& rows);
std::string training_log_csv(const std::vector<EpisodeRecord>& rows);

// Minimal standalone SVG line chart.
struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series);

enum class Stage { train, evaluate, full };

struct ExperimentResult {
  RewardParams reward;
  std::vector<EpisodeRecord> training_log;
  std::vector<PayloadMetrics> metrics;
  std::vector<std::filesystem::path> files;  // artifacts written
};

// Runs the experiment and writes its artifacts under spec.output_dir:
//   config.json, reward.json, metrics.csv, metrics_v2i.svg, metrics_delivery.svg
//   traces/<scheme>_<bytes>.csv, training_log.csv, training_return.svg,
//   checkpoints/ (one network per agent plus the config snapshot).
// Stage::train stops after training; Stage::evaluate reads checkpoints left by
// an earlier train stage. Files written by a failing run are removed.
ExperimentResult run_experiment(const ExperimentSpec& spec, Stage stage = Stage::full);

}  // namespace v2x
