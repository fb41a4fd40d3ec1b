#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "atomic_li/dataset.hpp"

namespace ali {

inline constexpr std::size_t kKeyBits = 64;
inline constexpr std::size_t kHiddenWidth = 256;

/// Bit j holds (key >> (63 - j)) & 1, i.e. most significant bit first.
using BinaryEncoding = std::array<std::uint8_t, kKeyBits>;

BinaryEncoding binarize(std::uint64_t key) noexcept;

/// Fully connected layer. Weights are kept input-major
/// (weights[in * outputs + out]) so both passes stream contiguous rows;
/// use weight(out, in) for the mathematical (outputs x inputs) view.
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  DenseLayer() = default;
  DenseLayer(std::size_t in, std::size_t out) : inputs(in), outputs(out), weights(in * out), bias(out) {}

  double& weight(std::size_t out, std::size_t in) { return weights[in * outputs + out]; }
  double weight(std::size_t out, std::size_t in) const { return weights[in * outputs + out]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Parameter-shaped container, used for gradients and momentum buffers.
using LayerStack = std::vector<DenseLayer>;

/// Feed-forward regressor 64 -> (256)^H -> 1 with relu hidden units and a
/// linear output. forward() yields a rank fraction; predict() scales it by
/// rank_scale into a 0-based rank.
class NeuralModel {
 public:
  NeuralModel() = default;

  /// Zero-initialized network with `hidden_layers` hidden layers of `width` units.
  NeuralModel(int hidden_layers, double rank_scale, std::size_t width = kHiddenWidth);

  /// Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) weights, zero biases.
  static NeuralModel initialized(int hidden_layers, double rank_scale, std::uint64_t seed,
                                 std::size_t width = kHiddenWidth);

  int hidden_layers() const noexcept { return static_cast<int>(layers_.size()) - 1; }
  double rank_scale() const noexcept { return rank_scale_; }
  std::size_t parameter_count() const noexcept;
  bool finite() const noexcept;

  LayerStack& layers() noexcept { return layers_; }
  const LayerStack& layers() const noexcept { return layers_; }

  /// Network output (rank fraction, unscaled).
  double forward_raw(const BinaryEncoding& encoding) const;
  /// rank_scale * forward_raw(encoding).
  double forward(const BinaryEncoding& encoding) const { return rank_scale_ * forward_raw(encoding); }
  double predict(std::uint64_t key) const { return forward(binarize(key)); }

  friend bool operator==(const NeuralModel&, const NeuralModel&) = default;

 private:
  LayerStack layers_;
  double rank_scale_ = 1.0;
};

struct Sample {
  BinaryEncoding encoding{};
  double target = 0.0;
};

/// Mean over the batch of (forward_raw - target)^2.
double batch_loss(const NeuralModel& model, std::span<const Sample> batch);

/// Exact gradient of batch_loss with respect to every parameter; the relu
/// subgradient at 0 is taken as 0. Throws InvalidArgument on an empty batch.
LayerStack backward(const NeuralModel& model, std::span<const Sample> batch);

/// velocity <- momentum * velocity - learning_rate * grad; params <- params + velocity.
void momentum_step(LayerStack& params, LayerStack& velocity, const LayerStack& grad, double learning_rate,
                   double momentum);

/// LayerStack of zeros with the same shapes as `like`.
LayerStack zeros_like(const LayerStack& like);

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 200;
  double stop_tolerance = 0.0;  // 0 disables the early stop
  std::uint64_t seed = 42;

  /// lr 0.1, momentum 0.9, batch 64, 200 epochs.
  static TrainConfig desk() { return {}; }
  /// As desk() but with the full 2000 epochs.
  static TrainConfig full() {
    TrainConfig config;
    config.epochs = 2000;
    return config;
  }

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

struct TrainSummary {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  bool stopped_early = false;
};

/// Mini-batch SGD with momentum on the MSE between forward_raw and the
/// normalized rank r / (n - 1). Batches are reshuffled every epoch. Throws
/// Divergence if an epoch's loss is not finite.
NeuralModel train_nn(const SortedTable& table, int hidden_layers, const TrainConfig& config,
                     TrainSummary* summary = nullptr);

void write_neural(std::ostream& out, const NeuralModel& model);
/// Parses the body written by write_neural (after its "nn" tag line).
NeuralModel read_neural(std::istream& in);

}  // namespace ali
