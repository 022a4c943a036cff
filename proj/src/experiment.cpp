#include "v2x/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "v2x/errors.hpp"
#include "v2x/nn.hpp"

namespace v2x {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void bad_type(const std::string& key, const char* expected) {
  throw ConfigError(key + ": expected " + expected);
}

void read(const json& v, const std::string& key, int& out) {
  if (!v.is_number_integer()) bad_type(key, "an integer");
  const auto x = v.get<std::int64_t>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) bad_type(key, "a 32-bit integer");
  out = static_cast<int>(x);
}

void read(const json& v, const std::string& key, std::uint64_t& out) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    bad_type(key, "a non-negative integer");
  out = v.get<std::uint64_t>();
}

void read(const json& v, const std::string& key, double& out) {
  if (!v.is_number()) bad_type(key, "a number");
  out = v.get<double>();
}

void read(const json& v, const std::string& key, bool& out) {
  if (!v.is_boolean()) bad_type(key, "true or false");
  out = v.get<bool>();
}

void read(const json& v, const std::string& key, std::string& out) {
  if (!v.is_string()) bad_type(key, "a string");
  out = v.get<std::string>();
}

void read(const json& v, const std::string& key, std::optional<double>& out) {
  if (v.is_null()) {
    out.reset();
    return;
  }
  double x = 0.0;
  read(v, key, x);
  out = x;
}

void read(const json& v, const std::string& key, Scheme& out) {
  std::string name;
  read(v, key, name);
  const auto s = parse_scheme(name);
  if (!s) throw ConfigError(key + ": unknown scheme '" + name + "' (marl, sarl, random, maxv2v, nov2v)");
  out = *s;
}

template <class T>
void read(const json& v, const std::string& key, std::vector<T>& out) {
  if (!v.is_array()) bad_type(key, "an array");
  std::vector<T> items(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) read(v[i], key, items[i]);
  out = std::move(items);
}

json write(Scheme s) { return scheme_name(s); }
json write(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
template <class T>
json write(const T& v) {
  return json(v);
}

// Applies f(key, member) to every configurable field.
template <class Spec, class F>
void for_each_field(Spec& s, F&& f) {
  f("scheme", s.scheme);
  f("seed", s.seed);
  f("output_dir", s.output_dir);
  f("eval_episodes", s.eval_episodes);
  f("payload_multipliers", s.payload_multipliers);

  auto& c = s.sim;
  f("m_links", c.num_v2i);
  f("k_links", c.num_v2v);
  f("num_vehicles", c.num_vehicles);
  f("carrier_ghz", c.carrier_ghz);
  f("bandwidth_hz", c.total_bandwidth_hz);
  f("bs_height_m", c.bs_height_m);
  f("vehicle_height_m", c.vehicle_height_m);
  f("bs_antenna_gain_dbi", c.bs_antenna_gain_dbi);
  f("vehicle_antenna_gain_dbi", c.vehicle_antenna_gain_dbi);
  f("bs_noise_figure_db", c.bs_noise_figure_db);
  f("vehicle_noise_figure_db", c.vehicle_noise_figure_db);
  f("v2i_power_dbm", c.v2i_power_dbm);
  f("v2v_power_levels_dbm", c.v2v_power_levels_dbm);
  f("noise_dbm", c.noise_dbm);
  f("time_budget_ms", c.time_budget_ms);
  f("step_ms", c.step_ms);
  f("payload_bytes", c.payload_bytes);
  f("v2i_shadow_std_db", c.v2i_shadow_std_db);
  f("v2v_shadow_std_db", c.v2v_shadow_std_db);
  f("v2i_decorrelation_m", c.v2i_decorrelation_m);
  f("v2v_decorrelation_m", c.v2v_decorrelation_m);
  f("area_width_m", c.area_width_m);
  f("area_height_m", c.area_height_m);
  f("blocks_x", c.blocks_x);
  f("blocks_y", c.blocks_y);
  f("lane_width_m", c.lane_width_m);
  f("lanes_per_direction", c.lanes_per_direction);
  f("speed_kmh", c.speed_kmh);
  f("large_scale_interval_s", c.large_scale_interval_s);
  f("early_exit", c.early_exit);

  auto& r = s.reward;
  f("v2i_weight", r.v2i_weight);
  f("v2v_weight", r.v2v_weight);
  f("beta_scale", r.beta_scale);
  f("calibration_steps", r.calibration_steps);
  f("lambda_c", r.lambda_c);
  f("lambda_d", r.lambda_d);
  f("beta", r.beta);

  auto& t = s.train;
  f("total_episodes", t.total_episodes);
  f("anneal_episodes", t.anneal_episodes);
  f("epsilon_final", t.epsilon_final);
  f("gamma", t.gamma);
  f("target_sync_period", t.target_sync_period);
  f("large_scale_refresh_period", t.large_scale_refresh_period);
  f("batch_size", t.batch_size);
  f("replay_capacity", t.replay_capacity);
  f("minibatches_per_episode", t.minibatches_per_episode);
  f("learning_rate", t.learning_rate);
  f("rmsprop_decay", t.rmsprop_decay);
  f("rmsprop_epsilon", t.rmsprop_epsilon);
  f("hidden_layers", t.hidden_layers);
  f("train_payload_bytes", t.payload_bytes);
  f("reward_scale", t.reward_scale);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Records every file written so a failing run can remove them again.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

  void ensure_dir(const fs::path& rel) {
    const fs::path dir = root_ / rel;
    std::vector<fs::path> missing;
    for (fs::path p = dir; !p.empty() && !fs::exists(p); p = p.parent_path()) {
      missing.push_back(p);
      if (p == p.parent_path()) break;
    }
    fs::create_directories(dir);
    for (auto it = missing.rbegin(); it != missing.rend(); ++it) dirs_.push_back(*it);
  }

  fs::path path(const fs::path& rel) const { return root_ / rel; }

  void write(const fs::path& rel, const std::string& content) {
    ensure_dir(rel.parent_path());
    const fs::path p = root_ / rel;
    const bool existed = fs::exists(p);
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    // Files left by an earlier stage are overwritten but never removed.
    if (!existed) created_.push_back(p);
    files_.push_back(p);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + p.string());
  }

  void record(const fs::path& rel) {
    if (!fs::exists(root_ / rel)) created_.push_back(root_ / rel);
    files_.push_back(root_ / rel);
  }

  void rollback() noexcept {
    std::error_code ec;
    for (const auto& f : created_) fs::remove(f, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);  // only if empty
  }

  const std::vector<fs::path>& files() const { return files_; }

 private:
  fs::path root_;
  std::vector<fs::path> files_;
  std::vector<fs::path> created_;
  std::vector<fs::path> dirs_;
};

json reward_json(const RewardParams& r) { return {{"lambda_c", r.lambda_c}, {"lambda_d", r.lambda_d}, {"beta", r.beta}}; }

RewardParams reward_from_json(const json& j) {
  RewardParams r;
  r.lambda_c = j.at("lambda_c").get<double>();
  r.lambda_d = j.at("lambda_d").get<double>();
  r.beta = j.at("beta").get<double>();
  return r;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool needs_training(Scheme s) { return s == Scheme::marl || s == Scheme::sarl; }

}  // namespace

void ExperimentSpec::validate() const {
  sim.validate();
  train.validate();
  reward.validate();
  if (eval_episodes < 1) throw ConfigError("eval_episodes: must be >= 1");
  if (payload_multipliers.empty()) throw ConfigError("payload_multipliers: must be non-empty");
  for (int m : payload_multipliers)
    if (m < 1) throw ConfigError("payload_multipliers: entries must be >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir: must be non-empty");
}

std::vector<int> ExperimentSpec::payload_sizes_bytes() const {
  std::vector<int> out;
  for (int m : payload_multipliers) out.push_back(m * kPayloadUnitBytes);
  return out;
}

ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  const bool blank = std::all_of(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); });
  if (blank) return spec;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: top level must be an object");
  std::size_t known = 0;
  for_each_field(spec, [&](const char* key, auto& member) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    read(*it, key, member);
    ++known;
  });
  if (known != doc.size()) {
    for (const auto& [key, value] : doc.items()) {
      bool found = false;
      for_each_field(spec, [&](const char* k, auto&) { found = found || key == k; });
      if (!found) throw ConfigError(key + ": unknown key");
    }
  }
  spec.validate();
  return spec;
}

ExperimentSpec load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentSpec& spec) {
  json doc = json::object();
  for_each_field(spec, [&](const char* key, const auto& member) { doc[key] = write(member); });
  return doc.dump(2) + "\n";
}

std::string metrics_csv(const std::vector<PayloadMetrics>& rows) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows)
    out += r.scheme + "," + std::to_string(r.payload_bytes) + "," + std::to_string(r.episodes) + "," +
           num(r.v2i_sum_capacity_mean) + "," + num(r.v2i_ci95) + "," + num(r.delivery_probability) + "," +
           num(r.delivery_ci95) + "\n";
  return out;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = std::string(kTraceHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.episode) + "," + std::to_string(r.step) + "," + std::to_string(r.link) + ",";
    if (r.action.is_off())
      out += "-1,off,";
    else
      out += std::to_string(r.action.subband) + "," + num(r.power_dbm) + ",";
    out += num(r.v2v_rate_bps) + "," + num(r.remaining_bits) + "," + num(r.v2i_sum_capacity_bps) + "," +
           num(r.reward) + "\n";
  }
  return out;
}

std::string training_log_csv(const std::vector<EpisodeRecord>& rows) {
  std::string out = std::string(kTrainingLogHeader) + "\n";
  for (const auto& r : rows)
    out += std::to_string(r.episode) + "," + num(r.epsilon) + "," + num(r.episode_return) + "," +
           num(r.mean_v2i_capacity) + "," + num(r.delivery_rate_so_far) + "\n";
  return out;
}

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<SvgSeries>& series) {
  constexpr double W = 640, H = 400, L = 70, R = 20, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (!(x0 < x1)) x1 = x0 + 1;
  if (!(y0 < y1)) y1 = y0 + 1;
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label
    << "</text>\n";
  o << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
    << H / 2 << ")\">" << y_label << "</text>\n";
  o << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"10\">" << num(x0) << "</text>\n";
  o << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\" font-size=\"10\">" << num(x1)
    << "</text>\n";
  o << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"10\">" << num(y0)
    << "</text>\n";
  o << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << num(y1)
    << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % std::size(colors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i)
      o << (i ? " " : "") << px(series[s].x[i]) << "," << py(series[s].y[i]);
    o << "\"/>\n";
    o << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (s + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
      << color << "\">" << series[s].label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

ExperimentResult run_experiment(const ExperimentSpec& spec, Stage stage) {
  spec.validate();
  ArtifactWriter out(spec.output_dir);
  ExperimentResult result;
  try {
    out.ensure_dir("");
    out.write("config.json", dump_config(spec));
    const std::string scheme = scheme_name(spec.scheme);
    const bool trained = needs_training(spec.scheme);

    AgentSet marl;
    QNetwork sarl_net;
    if (stage == Stage::evaluate && trained) {
      const fs::path ck = out.path("checkpoints");
      const json manifest = json::parse(read_file(ck / "manifest.json"));
      if (manifest.at("scheme").get<std::string>() != scheme)
        throw ConfigError("scheme: checkpoints were trained for " + manifest.at("scheme").get<std::string>());
      result.reward = reward_from_json(manifest.at("reward"));
      if (spec.scheme == Scheme::marl) {
        marl.reward = result.reward;
        marl.deployment = {manifest.at("episode_fraction").get<double>(), manifest.at("epsilon").get<double>()};
        const int agents = manifest.at("agents").get<int>();
        for (int k = 0; k < agents; ++k) {
          Agent a;
          a.online = load_checkpoint(ck / ("agent_" + std::to_string(k) + ".qnet"));
          marl.agents.push_back(std::move(a));
        }
      } else {
        sarl_net = load_checkpoint(ck / "sarl.qnet");
      }
    } else {
      SimConfig calib = spec.sim;
      calib.payload_bytes = spec.train.payload_bytes;
      result.reward = calibrate_reward(calib, spec.reward, spec.seed);
    }
    out.write("reward.json", reward_json(result.reward).dump(2) + "\n");

    if (stage != Stage::evaluate && trained) {
      json manifest = {{"scheme", scheme}, {"reward", reward_json(result.reward)}};
      if (spec.scheme == Scheme::marl) {
        TrainResult tr = train_marl(spec.sim, spec.train, result.reward, spec.seed);
        result.training_log = tr.log;
        marl = std::move(tr.agents);
        out.ensure_dir("checkpoints");
        for (std::size_t k = 0; k < marl.agents.size(); ++k) {
          const fs::path rel = fs::path("checkpoints") / ("agent_" + std::to_string(k) + ".qnet");
          out.record(rel);
          save_checkpoint(marl.agents[k].online, out.path(rel));
        }
        manifest["agents"] = marl.agents.size();
        manifest["episode_fraction"] = marl.deployment.episode_fraction;
        manifest["epsilon"] = marl.deployment.epsilon;
      } else {
        SarlResult sr = sarl_train(spec.sim, spec.train, result.reward, spec.seed);
        result.training_log = sr.log;
        sarl_net = sr.agent.online;
        out.ensure_dir("checkpoints");
        out.record("checkpoints/sarl.qnet");
        save_checkpoint(sarl_net, out.path("checkpoints/sarl.qnet"));
      }
      out.write("checkpoints/config.json", dump_config(spec));
      out.write("checkpoints/manifest.json", manifest.dump(2) + "\n");
      out.write("training_log.csv", training_log_csv(result.training_log));
      SvgSeries ret{"return", {}, {}};
      for (const auto& r : result.training_log) {
        ret.x.push_back(r.episode);
        ret.y.push_back(r.episode_return);
      }
      out.write("training_return.svg", svg_line_chart(scheme + " training", "episode", "return", {ret}));
    }
    if (stage == Stage::train) {
      result.files = out.files();
      return result;
    }

    SvgSeries v2i{scheme, {}, {}};
    SvgSeries delivery{scheme, {}, {}};
    for (int bytes : spec.payload_sizes_bytes()) {
      std::unique_ptr<Policy> policy;
      switch (spec.scheme) {
        case Scheme::marl: policy = std::make_unique<MarlPolicy>(marl); break;
        case Scheme::sarl: policy = std::make_unique<SarlPolicy>(sarl_net); break;
        case Scheme::random: policy = std::make_unique<RandomPolicy>(SeedTree(spec.seed).stream("random-policy")); break;
        case Scheme::max_v2v: policy = std::make_unique<MaxV2VPolicy>(); break;
        case Scheme::no_v2v: policy = std::make_unique<NoV2VPolicy>(); break;
      }
      EvaluationOptions opts;
      opts.episodes = spec.eval_episodes;
      opts.payload_bytes = bytes;
      opts.seed = spec.seed;
      opts.reward = result.reward;
      opts.record_trace = true;
      const EvaluationResult ev = run_evaluation(*policy, spec.sim, opts);
      out.write(fs::path("traces") / (scheme + "_" + std::to_string(bytes) + ".csv"), trace_csv(ev.trace));
      result.metrics.push_back(summarize(scheme, ev));
      v2i.x.push_back(bytes);
      v2i.y.push_back(result.metrics.back().v2i_sum_capacity_mean / 1e6);
      delivery.x.push_back(bytes);
      delivery.y.push_back(result.metrics.back().delivery_probability);
    }
    out.write("metrics.csv", metrics_csv(result.metrics));
    out.write("metrics_v2i.svg", svg_line_chart("V2I sum capacity", "payload (bytes)", "Mbps", {v2i}));
    out.write("metrics_delivery.svg",
              svg_line_chart("V2V delivery probability", "payload (bytes)", "probability", {delivery}));
  } catch (...) {
    out.rollback();
    throw;
  }
  result.files = out.files();
  return result;
}

}  // namespace v2x
