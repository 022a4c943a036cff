#include "v2x/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "v2x/errors.hpp"

namespace v2x {

namespace {

// y[0..n) += a * x[0..n)
inline void axpy(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

}  // namespace

QNetwork::QNetwork(std::vector<int> layer_dims) : dims_(std::move(layer_dims)) {
  if (dims_.size() < 2) throw UsageError("QNetwork: need at least input and output sizes");
  for (int d : dims_)
    if (d < 1) throw UsageError("QNetwork: layer sizes must be >= 1");
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    weights_.emplace_back(static_cast<std::size_t>(dims_[l]) * static_cast<std::size_t>(dims_[l + 1]), 0.0);
    biases_.emplace_back(static_cast<std::size_t>(dims_[l + 1]), 0.0);
  }
}

QNetwork QNetwork::glorot(std::vector<int> layer_dims, Rng& rng) {
  QNetwork net(std::move(layer_dims));
  for (int l = 0; l < net.num_layers(); ++l) {
    const double r = std::sqrt(6.0 / (net.dims_[l] + net.dims_[l + 1]));
    for (double& w : net.weights(l)) w = (2.0 * uniform01(rng) - 1.0) * r;
  }
  return net;
}

std::size_t QNetwork::num_parameters() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
  return n;
}

std::vector<std::vector<double>> QNetwork::forward_all(std::span<const double> inputs,
                                                       std::size_t count) const {
  if (dims_.empty()) throw UsageError("forward: empty network");
  const auto in0 = static_cast<std::size_t>(dims_.front());
  if (inputs.size() != count * in0)
    throw UsageError("forward: expected " + std::to_string(count * in0) + " inputs, got " +
                     std::to_string(inputs.size()));
  std::vector<std::vector<double>> acts;
  acts.reserve(dims_.size());
  acts.emplace_back(inputs.begin(), inputs.end());
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto in = static_cast<std::size_t>(dims_[l]);
    const auto out = static_cast<std::size_t>(dims_[l + 1]);
    const std::vector<double>& x = acts.back();
    std::vector<double> y(count * out);
    for (std::size_t b = 0; b < count; ++b) std::copy(biases_[l].begin(), biases_[l].end(), y.begin() + b * out);
    // Input-major loop keeps one weight row hot across the whole batch; each
    // output still accumulates in increasing input order.
    for (std::size_t i = 0; i < in; ++i) {
      const double* w = weights_[l].data() + i * out;
      for (std::size_t b = 0; b < count; ++b) {
        const double xi = x[b * in + i];
        if (xi != 0.0) axpy(xi, w, y.data() + b * out, out);
      }
    }
    if (l + 1 < weights_.size())
      for (double& v : y) v = v > 0.0 ? v : 0.0;
    acts.push_back(std::move(y));
  }
  return acts;
}

std::vector<double> QNetwork::forward(std::span<const double> input) const {
  return forward_batch(input, 1);
}

std::vector<double> QNetwork::forward_batch(std::span<const double> inputs, std::size_t count) const {
  auto acts = forward_all(inputs, count);
  return std::move(acts.back());
}

Gradients Gradients::zeros_like(const QNetwork& net) {
  Gradients g;
  for (int l = 0; l < net.num_layers(); ++l) {
    g.weights.emplace_back(net.weights(l).size(), 0.0);
    g.biases.emplace_back(net.biases(l).size(), 0.0);
  }
  return g;
}

namespace {

std::vector<double> stack_inputs(const QNetwork& net, std::span<const TrainingSample> batch) {
  const auto in = static_cast<std::size_t>(net.input_size());
  std::vector<double> x;
  x.reserve(batch.size() * in);
  for (const auto& s : batch) {
    if (s.observation.size() != in) throw UsageError("backward: observation size mismatch");
    if (s.action < 0 || s.action >= net.output_size()) throw UsageError("backward: action out of range");
    x.insert(x.end(), s.observation.begin(), s.observation.end());
  }
  return x;
}

}  // namespace

double batch_loss(const QNetwork& net, std::span<const TrainingSample> batch) {
  const std::vector<double> x = stack_inputs(net, batch);
  const std::vector<double> q = net.forward_batch(x, batch.size());
  const auto out = static_cast<std::size_t>(net.output_size());
  double loss = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const double r = batch[b].target - q[b * out + static_cast<std::size_t>(batch[b].action)];
    loss += r * r;
  }
  return loss;
}

struct Backprop {
  static Gradients run(const QNetwork& net, std::span<const TrainingSample> batch) {
    if (batch.empty()) throw UsageError("backward: empty batch");
    const std::size_t n = batch.size();
    const std::vector<double> x = stack_inputs(net, batch);
    const auto acts = net.forward_all(x, n);
    const int L = net.num_layers();
    Gradients g = Gradients::zeros_like(net);

    // d loss / d Q is nonzero only at each sample's taken action.
    auto out = static_cast<std::size_t>(net.output_size());
    std::vector<double> delta(n * out, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      const auto a = static_cast<std::size_t>(batch[b].action);
      delta[b * out + a] = -2.0 * (batch[b].target - acts.back()[b * out + a]);
    }

    for (int l = L - 1; l >= 0; --l) {
      const auto lu = static_cast<std::size_t>(l);
      const auto in = static_cast<std::size_t>(net.dims_[lu]);
      out = static_cast<std::size_t>(net.dims_[lu + 1]);
      const std::vector<double>& a_in = acts[lu];
      std::vector<double>& gw = g.weights[lu];
      std::vector<double>& gb = g.biases[lu];
      for (std::size_t b = 0; b < n; ++b) axpy(1.0, delta.data() + b * out, gb.data(), out);
      for (std::size_t i = 0; i < in; ++i) {
        double* row = gw.data() + i * out;
        for (std::size_t b = 0; b < n; ++b) {
          const double xi = a_in[b * in + i];
          if (xi != 0.0) axpy(xi, delta.data() + b * out, row, out);
        }
      }
      if (l == 0) break;
      // delta_prev[b][i] = sum_o delta[b][o] * W[i][o], masked by ReLU.
      const std::vector<double>& w = net.weights_[lu];
      std::vector<double> wt(in * out);
      for (std::size_t i = 0; i < in; ++i)
        for (std::size_t o = 0; o < out; ++o) wt[o * in + i] = w[i * out + o];
      std::vector<double> prev(n * in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double* wrow = wt.data() + o * in;
        for (std::size_t b = 0; b < n; ++b) {
          const double d = delta[b * out + o];
          if (d != 0.0) axpy(d, wrow, prev.data() + b * in, in);
        }
      }
      for (std::size_t j = 0; j < n * in; ++j)
        if (!(a_in[j] > 0.0)) prev[j] = 0.0;
      delta = std::move(prev);
    }
    return g;
  }
};

Gradients backward(const QNetwork& net, std::span<const TrainingSample> batch) {
  return Backprop::run(net, batch);
}

RmsProp::RmsProp(const QNetwork& net, double learning_rate, double decay, double stabilizer)
    : lr_(learning_rate), decay_(decay), stabilizer_(stabilizer), acc_(Gradients::zeros_like(net)) {}

void RmsProp::step(QNetwork& net, const Gradients& grads) {
  if (acc_.weights.size() != grads.weights.size()) throw UsageError("RmsProp: shape mismatch");
  auto update = [&](std::vector<double>& p, const std::vector<double>& gr, std::vector<double>& acc) {
    if (p.size() != gr.size() || p.size() != acc.size()) throw UsageError("RmsProp: shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc[i] = decay_ * acc[i] + (1.0 - decay_) * gr[i] * gr[i];
      p[i] -= lr_ * gr[i] / std::sqrt(acc[i] + stabilizer_);
    }
  };
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto lu = static_cast<std::size_t>(l);
    update(net.weights(l), grads.weights[lu], acc_.weights[lu]);
    update(net.biases(l), grads.biases[lu], acc_.biases[lu]);
  }
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw UsageError("ReplayMemory: capacity must be >= 1");
}

void ReplayMemory::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
    return;
  }
  items_[head_] = std::move(e);
  head_ = (head_ + 1) % capacity_;
}

const Experience& ReplayMemory::at(std::size_t i) const {
  if (i >= items_.size()) throw UsageError("ReplayMemory: index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<const Experience*> ReplayMemory::sample(std::size_t batch_size, Rng& rng) const {
  if (items_.size() < batch_size)
    throw UsageError("ReplayMemory: " + std::to_string(items_.size()) + " stored, " +
                     std::to_string(batch_size) + " requested");
  std::vector<const Experience*> out;
  out.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) out.push_back(&items_[uniform_index(rng, items_.size())]);
  return out;
}

namespace {

constexpr char kMagic[8] = {'V', '2', 'X', 'Q', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

template <class T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const QNetwork& net, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open " + path.string());
  os.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(os, kVersion);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(net.layer_dims().size()));
  for (int d : net.layer_dims()) write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(d));
  for (int l = 0; l < net.num_layers(); ++l) {
    for (double w : net.weights(l)) write_pod(os, w);
    for (double b : net.biases(l)) write_pod(os, b);
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

QNetwork load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  if (read_pod<std::uint32_t>(is) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  const auto n = read_pod<std::uint32_t>(is);
  if (n < 2 || n > 64) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> dims;
  for (std::uint32_t i = 0; i < n; ++i) dims.push_back(static_cast<int>(read_pod<std::uint32_t>(is)));
  QNetwork net(dims);
  for (int l = 0; l < net.num_layers(); ++l) {
    for (double& w : net.weights(l)) w = read_pod<double>(is);
    for (double& b : net.biases(l)) b = read_pod<double>(is);
  }
  return net;
}

}  // namespace v2x
