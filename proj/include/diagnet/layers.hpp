#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "diagnet/rng.hpp"
#include "diagnet/tensor.hpp"

namespace diagnet {

/// A trainable tensor and its accumulated gradient.
struct Param {
  Tensor value;
  Tensor grad;

  explicit Param(Shape s) : value(s), grad(std::move(s)) {}
};

enum class LayerKind { Conv2d, MaxPool2, Relu, Linear, Flatten };

std::string_view to_string(LayerKind k);

/// 3x3 convolution, stride 1, zero padding 1. Input {C, H, W}.
class Conv2d {
 public:
  Conv2d(std::size_t in_channels, std::size_t out_channels);

  Tensor forward(const Tensor& x);
  /// Accumulates weight and bias gradients. Returns the input gradient, or an
  /// empty tensor when `need_input_grad` is false.
  Tensor backward(const Tensor& upstream, bool need_input_grad = true);

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t fan_in() const { return in_ * 9; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  std::size_t in_;
  std::size_t out_;
  Param weight_;  // {out, in, 3, 3}
  Param bias_;    // {out}
  Tensor padded_;  // last input with a one-pixel zero border
  std::vector<double> flipped_;
  bool cached_ = false;
};

/// 2x2 max pooling with stride 2. Ties go to the first index in row-major
/// window order.
class MaxPool2 {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream, bool need_input_grad = true);

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
  bool cached_ = false;
};

class Relu {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream, bool need_input_grad = true);

 private:
  std::optional<Tensor> input_;
};

/// y = W x + b with W of shape {out, in}.
class Linear {
 public:
  Linear(std::size_t in, std::size_t out);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream, bool need_input_grad = true);

  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  std::size_t fan_in() const { return in_; }
  Param& weight() { return weight_; }
  Param& bias() { return bias_; }

 private:
  std::size_t in_;
  std::size_t out_;
  Param weight_;
  Param bias_;
  std::optional<Tensor> input_;
};

/// Reshape to rank 1.
class Flatten {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream, bool need_input_grad = true);

 private:
  std::optional<Shape> input_shape_;
};

using Layer = std::variant<Conv2d, MaxPool2, Relu, Linear, Flatten>;

LayerKind kind_of(const Layer& l);
Tensor forward(Layer& l, const Tensor& x);
Tensor backward(Layer& l, const Tensor& upstream, bool need_input_grad = true);
/// Trainable parameters of a layer (weight first, then bias).
std::vector<Param*> params_of(Layer& l);

/// Weights ~ Uniform(-s, s) with s = sqrt(6 / fan_in); biases zero.
void init_params(Layer& l, Rng& rng);

/// A fixed sequence of layers.
class Sequential {
 public:
  Sequential() = default;
  explicit Sequential(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  void add(Layer l) { layers_.push_back(std::move(l)); }
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& upstream, bool need_input_grad = true);

  std::vector<Param*> params();
  void zero_grad();
  void init(Rng& rng);

  std::span<Layer> layers() { return layers_; }
  std::size_t size() const { return layers_.size(); }

 private:
  std::vector<Layer> layers_;
};

/// Fused softmax + negative log-likelihood.
struct LossResult {
  double loss = 0;
  Tensor grad;   // d loss / d logits = p - onehot(target)
  Tensor probs;
};

/// Softmax with max subtraction.
Tensor softmax(const Tensor& logits);

/// Throws std::invalid_argument when fewer than 2 logits or target is out of
/// range.
LossResult softmax_cross_entropy(const Tensor& logits, std::size_t target);

/// SGD with momentum: v <- momentum * v + g, p <- p - lr * v.
class SgdMomentum {
 public:
  explicit SgdMomentum(double learning_rate, double momentum = 0.9)
      : lr_(learning_rate), momentum_(momentum) {}

  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }
  double momentum() const { return momentum_; }

  /// Applies one update using `grad_scale * grad` of every parameter.
  /// Velocities are created on the first call and are matched by position.
  void step(std::span<Param* const> params, double grad_scale = 1.0);

 private:
  double lr_;
  double momentum_;
  std::vector<Tensor> velocity_;
};

// Checkpoints. Text layout:
//   diagnet-params 1
//   <count>
//   <rank> <d0> ... <dn-1>
//   <values as %.17g, space separated, one line per tensor>
// Reading back reproduces every double exactly.
std::string write_params(std::span<Param* const> params);
/// Throws std::runtime_error on malformed text or a shape mismatch.
void read_params(std::string_view text, std::span<Param* const> params);

}  // namespace diagnet
