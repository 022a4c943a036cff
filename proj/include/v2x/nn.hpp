#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "v2x/rng.hpp"

namespace v2x {

// Fully connected action-value network: ReLU hidden layers, identity output.
// Layer l maps dims[l] inputs to dims[l+1] outputs; its weights are stored
// row-major as [input][output].
class QNetwork {
 public:
  QNetwork() = default;
  // All parameters zero.
  explicit QNetwork(std::vector<int> layer_dims);
  // Uniform(+-sqrt(6 / (fan_in + fan_out))) weights, zero biases.
  static QNetwork glorot(std::vector<int> layer_dims, Rng& rng);

  const std::vector<int>& layer_dims() const { return dims_; }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  int input_size() const { return dims_.front(); }
  int output_size() const { return dims_.back(); }
  std::size_t num_parameters() const;

  std::vector<double>& weights(int layer) { return weights_[static_cast<std::size_t>(layer)]; }
  const std::vector<double>& weights(int layer) const { return weights_[static_cast<std::size_t>(layer)]; }
  std::vector<double>& biases(int layer) { return biases_[static_cast<std::size_t>(layer)]; }
  const std::vector<double>& biases(int layer) const { return biases_[static_cast<std::size_t>(layer)]; }

  // Throws UsageError on an input of the wrong length.
  std::vector<double> forward(std::span<const double> input) const;
  // `inputs` holds `count` rows of input_size() values; returns count rows of
  // output_size() values. Row results are bit-identical to forward().
  std::vector<double> forward_batch(std::span<const double> inputs, std::size_t count) const;

  bool operator==(const QNetwork&) const = default;

 private:
  // Per-layer activations for a batch; acts[0] is the input.
  std::vector<std::vector<double>> forward_all(std::span<const double> inputs, std::size_t count) const;

  friend struct Backprop;

  std::vector<int> dims_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> biases_;
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients zeros_like(const QNetwork& net);
};

struct TrainingSample {
  std::span<const double> observation;
  int action = 0;
  double target = 0.0;
};

// Sum over the batch of (target - Q(observation, action))^2.
double batch_loss(const QNetwork& net, std::span<const TrainingSample> batch);

// Gradient of batch_loss with respect to every parameter.
Gradients backward(const QNetwork& net, std::span<const TrainingSample> batch);

class RmsProp {
 public:
  RmsProp() = default;
  RmsProp(const QNetwork& net, double learning_rate, double decay = 0.9, double stabilizer = 1e-8);

  // acc = decay * acc + (1 - decay) * g^2; p -= lr * g / sqrt(acc + stabilizer)
  void step(QNetwork& net, const Gradients& grads);

  double learning_rate() const { return lr_; }
  const Gradients& accumulators() const { return acc_; }

 private:
  double lr_ = 1e-3;
  double decay_ = 0.9;
  double stabilizer_ = 1e-8;
  Gradients acc_;
};

struct Experience {
  std::vector<double> observation;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_observation;
  bool terminal = false;
};

// Fixed-capacity FIFO of experiences with uniform sampling.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 100000);

  void push(Experience e);
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  // i = 0 is the oldest stored experience.
  const Experience& at(std::size_t i) const;

  // Uniform draws with replacement. Throws UsageError when fewer than
  // batch_size experiences are stored.
  std::vector<const Experience*> sample(std::size_t batch_size, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // slot the next push overwrites once full
  std::vector<Experience> items_;
};

// Binary checkpoint: magic "V2XQNET\0", u32 version, u32 layer count + 1,
// u32 dims, then per layer the row-major weights and the biases as
// little-endian IEEE-754 doubles.
void save_checkpoint(const QNetwork& net, const std::filesystem::path& path);
QNetwork load_checkpoint(const std::filesystem::path& path);

}  // namespace v2x
