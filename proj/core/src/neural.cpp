#include "atomic_li/neural.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

#include "atomic_li/errors.hpp"
#include "atomic_li/rng.hpp"

namespace ali {
namespace {

double dot(const double* a, const double* b, std::size_t n) noexcept {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

void axpy(double* y, double alpha, const double* x, std::size_t n) noexcept {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void layer_forward(const DenseLayer& layer, const double* in, double* out) noexcept {
  const std::size_t m = layer.outputs;
  if (m == 1) {
    out[0] = layer.bias[0] + dot(in, layer.weights.data(), layer.inputs);
    return;
  }
  std::copy(layer.bias.begin(), layer.bias.end(), out);
  for (std::size_t j = 0; j < layer.inputs; ++j)
    if (in[j] != 0.0) axpy(out, in[j], layer.weights.data() + j * m, m);
}

void encode(const BinaryEncoding& bits, double* out) noexcept {
  for (std::size_t j = 0; j < kKeyBits; ++j) out[j] = bits[j];
}

void encode_key(std::uint64_t key, double* out) noexcept {
  for (std::size_t j = 0; j < kKeyBits; ++j) out[j] = static_cast<double>((key >> (63 - j)) & 1u);
}

/// Scratch buffers for one forward/backward pass; activations[0] is the input.
class Workspace {
 public:
  explicit Workspace(const LayerStack& layers) {
    activations_.emplace_back(layers.front().inputs);
    for (const DenseLayer& layer : layers) activations_.emplace_back(layer.outputs);
    deltas_ = activations_;
  }

  double* input() noexcept { return activations_.front().data(); }

  double forward(const LayerStack& layers) noexcept {
    const std::size_t last = layers.size() - 1;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      double* out = activations_[l + 1].data();
      layer_forward(layers[l], activations_[l].data(), out);
      if (l != last)
        for (std::size_t o = 0; o < layers[l].outputs; ++o) out[o] = std::max(out[o], 0.0);
    }
    return activations_.back()[0];
  }

  /// Accumulates d(scale * (out - target)^2)/d(params) into grad; forward() must have run.
  double accumulate(const LayerStack& layers, LayerStack& grad, double target, double scale) noexcept {
    const double error = activations_.back()[0] - target;
    deltas_.back()[0] = 2.0 * scale * error;
    for (std::size_t l = layers.size(); l-- > 0;) {
      const DenseLayer& layer = layers[l];
      DenseLayer& g = grad[l];
      const double* in = activations_[l].data();
      const double* delta = deltas_[l + 1].data();
      const std::size_t m = layer.outputs;
      for (std::size_t o = 0; o < m; ++o) g.bias[o] += delta[o];
      for (std::size_t j = 0; j < layer.inputs; ++j)
        if (in[j] != 0.0) axpy(g.weights.data() + j * m, in[j], delta, m);
      if (l == 0) break;
      // Back through the relu of layer l-1: zero where its output was clamped.
      double* prev = deltas_[l].data();
      for (std::size_t j = 0; j < layer.inputs; ++j)
        prev[j] = in[j] > 0.0 ? dot(layer.weights.data() + j * m, delta, m) : 0.0;
    }
    return error * error;
  }

 private:
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> deltas_;
};

std::string expect_field(std::istream& in, const char* name) {
  std::string key;
  std::string value;
  if (!(in >> key >> value) || key != name)
    throw LoadError(LoadErrorKind::malformed_header, std::string("expected field '") + name + "'");
  return value;
}

std::size_t parse_count(const std::string& text) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) throw LoadError(LoadErrorKind::malformed_header, "bad count '" + text + "'");
  return static_cast<std::size_t>(value);
}

double read_value(std::istream& in) {
  double value = 0.0;
  if (!(in >> value)) throw LoadError(LoadErrorKind::truncated, "neural model parameters ended early");
  return value;
}

}  // namespace

static_assert(kHiddenWidth >= kKeyBits);

BinaryEncoding binarize(std::uint64_t key) noexcept {
  BinaryEncoding bits{};
  for (std::size_t j = 0; j < kKeyBits; ++j) bits[j] = static_cast<std::uint8_t>((key >> (63 - j)) & 1u);
  return bits;
}

NeuralModel::NeuralModel(int hidden_layers, double rank_scale, std::size_t width) : rank_scale_(rank_scale) {
  if (hidden_layers < 0 || hidden_layers > 2) throw InvalidArgument("hidden layer count must be 0, 1 or 2");
  if (width == 0) throw InvalidArgument("hidden width must be positive");
  std::size_t inputs = kKeyBits;
  for (int h = 0; h < hidden_layers; ++h) {
    layers_.emplace_back(inputs, width);
    inputs = width;
  }
  layers_.emplace_back(inputs, 1);
}

NeuralModel NeuralModel::initialized(int hidden_layers, double rank_scale, std::uint64_t seed, std::size_t width) {
  NeuralModel model(hidden_layers, rank_scale, width);
  Rng rng(seed);
  for (DenseLayer& layer : model.layers_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.inputs));
    for (double& w : layer.weights) w = (2.0 * rng.unit() - 1.0) * limit;
  }
  return model;
}

std::size_t NeuralModel::parameter_count() const noexcept {
  std::size_t count = 0;
  for (const DenseLayer& layer : layers_) count += layer.weights.size() + layer.bias.size();
  return count;
}

bool NeuralModel::finite() const noexcept {
  auto all_finite = [](const std::vector<double>& values) {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  };
  return std::isfinite(rank_scale_) && std::all_of(layers_.begin(), layers_.end(), [&](const DenseLayer& layer) {
           return all_finite(layer.weights) && all_finite(layer.bias);
         });
}

double NeuralModel::forward_raw(const BinaryEncoding& encoding) const {
  std::size_t widest = kKeyBits;
  for (const DenseLayer& layer : layers_) widest = std::max(widest, layer.outputs);
  std::array<double, kHiddenWidth> stack_a, stack_b;
  std::vector<double> heap_a, heap_b;
  double* a = stack_a.data();
  double* b = stack_b.data();
  if (widest > kHiddenWidth) {
    heap_a.resize(widest);
    heap_b.resize(widest);
    a = heap_a.data();
    b = heap_b.data();
  }
  encode(encoding, a);
  const std::size_t last = layers_.size() - 1;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layer_forward(layers_[l], a, b);
    if (l != last)
      for (std::size_t o = 0; o < layers_[l].outputs; ++o) b[o] = std::max(b[o], 0.0);
    std::swap(a, b);
  }
  return a[0];
}

double batch_loss(const NeuralModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw InvalidArgument("batch must not be empty");
  double total = 0.0;
  for (const Sample& sample : batch) {
    const double diff = model.forward_raw(sample.encoding) - sample.target;
    total += diff * diff;
  }
  return total / static_cast<double>(batch.size());
}

LayerStack zeros_like(const LayerStack& like) {
  LayerStack out;
  out.reserve(like.size());
  for (const DenseLayer& layer : like) out.emplace_back(layer.inputs, layer.outputs);
  return out;
}

LayerStack backward(const NeuralModel& model, std::span<const Sample> batch) {
  if (batch.empty()) throw InvalidArgument("batch must not be empty");
  LayerStack grad = zeros_like(model.layers());
  Workspace ws(model.layers());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const Sample& sample : batch) {
    encode(sample.encoding, ws.input());
    ws.forward(model.layers());
    ws.accumulate(model.layers(), grad, sample.target, scale);
  }
  return grad;
}

void momentum_step(LayerStack& params, LayerStack& velocity, const LayerStack& grad, double learning_rate,
                   double momentum) {
  for (std::size_t l = 0; l < params.size(); ++l) {
    auto update = [&](std::vector<double>& p, std::vector<double>& v, const std::vector<double>& g) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        v[i] = momentum * v[i] - learning_rate * g[i];
        p[i] += v[i];
      }
    };
    update(params[l].weights, velocity[l].weights, grad[l].weights);
    update(params[l].bias, velocity[l].bias, grad[l].bias);
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw InvalidArgument("learning rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(stop_tolerance >= 0.0)) throw InvalidArgument("stop tolerance must be >= 0");
}

NeuralModel train_nn(const SortedTable& table, int hidden_layers, const TrainConfig& config, TrainSummary* summary) {
  config.validate();
  const std::size_t n = table.size();
  const double rank_scale = static_cast<double>(n - 1);
  NeuralModel model = NeuralModel::initialized(hidden_layers, rank_scale, config.seed);
  LayerStack& params = model.layers();
  LayerStack velocity = zeros_like(params);
  LayerStack grad = zeros_like(params);
  Workspace ws(params);

  // Separate stream from the initializer so changing the epoch count never
  // changes the starting weights.
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainSummary local;
  double previous_loss = 0.0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (DenseLayer& g : grad) {
        std::fill(g.weights.begin(), g.weights.end(), 0.0);
        std::fill(g.bias.begin(), g.bias.end(), 0.0);
      }
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t rank = order[i];
        encode_key(table[rank], ws.input());
        ws.forward(params);
        epoch_loss += ws.accumulate(params, grad, static_cast<double>(rank) / rank_scale, scale);
      }
      momentum_step(params, velocity, grad, config.learning_rate, config.momentum);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss)) throw Divergence(epoch + 1);
    local.epochs_run = epoch + 1;
    local.final_loss = epoch_loss;
    if (config.stop_tolerance > 0.0 && epoch > 0 && std::abs(previous_loss - epoch_loss) <= config.stop_tolerance) {
      local.stopped_early = true;
      break;
    }
    previous_loss = epoch_loss;
  }
  if (!model.finite()) throw Divergence(local.epochs_run);
  if (summary) *summary = local;
  return model;
}

void write_neural(std::ostream& out, const NeuralModel& model) {
  const auto old_precision = out.precision(17);
  const LayerStack& layers = model.layers();
  out << "nn\n"
      << "hidden_layers " << model.hidden_layers() << '\n'
      << "width " << (layers.size() > 1 ? layers.front().outputs : 0) << '\n'
      << "rank_scale " << model.rank_scale() << '\n';
  for (const DenseLayer& layer : layers) {
    out << "layer " << layer.inputs << ' ' << layer.outputs << '\n';
    for (std::size_t o = 0; o < layer.outputs; ++o)
      for (std::size_t j = 0; j < layer.inputs; ++j) out << layer.weight(o, j) << '\n';
    for (double b : layer.bias) out << b << '\n';
  }
  out.precision(old_precision);
}

NeuralModel read_neural(std::istream& in) {
  const std::size_t hidden = parse_count(expect_field(in, "hidden_layers"));
  const std::size_t width = parse_count(expect_field(in, "width"));
  const std::string scale_text = expect_field(in, "rank_scale");
  if (hidden > 2 || (hidden > 0 && width == 0))
    throw LoadError(LoadErrorKind::malformed_header, "unsupported neural architecture");
  double rank_scale = 0.0;
  try {
    rank_scale = std::stod(scale_text);
  } catch (const std::exception&) {
    throw LoadError(LoadErrorKind::malformed_header, "bad rank_scale '" + scale_text + "'");
  }
  NeuralModel model(static_cast<int>(hidden), rank_scale, hidden > 0 ? width : kHiddenWidth);
  for (DenseLayer& layer : model.layers()) {
    std::string tag;
    std::size_t inputs = 0, outputs = 0;
    if (!(in >> tag >> inputs >> outputs) || tag != "layer" || inputs != layer.inputs || outputs != layer.outputs)
      throw LoadError(LoadErrorKind::malformed_header, "layer shape does not match the declared architecture");
    for (std::size_t o = 0; o < layer.outputs; ++o)
      for (std::size_t j = 0; j < layer.inputs; ++j) layer.weight(o, j) = read_value(in);
    for (double& b : layer.bias) b = read_value(in);
  }
  if (!model.finite()) throw LoadError(LoadErrorKind::malformed_header, "non-finite neural parameters");
  return model;
}

}  // namespace ali
