#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "diagnet/embedding.hpp"
#include "diagnet/gradcheck.hpp"
#include "diagnet/layers.hpp"
#include "diagnet/synthgen.hpp"
#include "diagnet/topology.hpp"

namespace diagnet {

/// Branch selection and layer widths of the fusion classifier.
struct ModelConfig {
  bool use_diagram = true;
  bool use_topology = true;
  bool use_text = true;
  std::size_t dim_diagram = 120;
  std::size_t dim_topology = 100;
  std::size_t dim_text = 40;
  std::size_t reducer_hidden = 80;
  std::size_t fused_dim = 128;
  std::size_t input_side = 64;
  std::size_t num_classes = kNumClasses;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  RenderMode topology_mode = RenderMode::DirectedAware;

  /// Throws std::invalid_argument if no branch is enabled, a width is zero,
  /// or input_side is not a positive multiple of 4.
  void check() const;
  /// Width of the concatenated branch features.
  std::size_t concat_dim() const;
  /// "diagram+topology+text" style name of the enabled branches.
  std::string variant_name() const;

  std::string to_json() const;
  static ModelConfig from_json(std::string_view text);
};

/// Network inputs of one example; tensors of disabled branches stay empty.
struct ModelInputs {
  Tensor diagram;   // {1, side, side}
  Tensor topology;  // {1, side, side}
  Tensor text;      // {embedding_dim}
};

/// Builds the inputs of the enabled branches: the diagram raster (inverted
/// when `invert`), the rendered topology, and the mean token embedding.
ModelInputs prepare_inputs(const Example& e, const ModelConfig& cfg, const EmbeddingTable& table, bool invert);

/// Three-branch classifier: a convolutional branch for the diagram, one for
/// the topology raster, a fully connected text branch, a fusion layer over
/// the concatenated branch features and a linear classifier.
///
/// Disabled branches are not constructed and do not widen the fusion input.
/// forward() caches activations for backward(); one instance must not be
/// used from two threads at once.
class FusionModel {
 public:
  /// Parameters are initialized from `seed`.
  FusionModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // Individual stages.
  Tensor diagram_features(const Tensor& x);
  Tensor topology_features(const Tensor& x);
  Tensor text_features(const Tensor& x_t);
  /// Classifier logits from the enabled branch features. Absent branches are
  /// passed as empty tensors.
  Tensor fuse_logits(const Tensor& v_diagram, const Tensor& v_text, const Tensor& v_topology);

  Tensor logits(const ModelInputs& in);
  /// Softmax of logits().
  Tensor forward(const ModelInputs& in);
  /// Propagates d loss / d logits through the cached forward pass and
  /// accumulates parameter gradients. Returns input gradients for the
  /// enabled branches when `need_input_grad` is set.
  ModelInputs backward(const Tensor& grad_logits, bool need_input_grad = false);

  std::vector<Param*> params();
  void zero_grad();
  std::size_t param_count();

  /// Config header line followed by the parameter checkpoint.
  std::string save();
  static FusionModel load(std::string_view text);

  /// Parameters of the text branch; empty when the branch is disabled.
  std::vector<Param*> text_params();

 private:
  static Sequential make_visual(std::size_t side, std::size_t hidden, std::size_t out);

  ModelConfig cfg_;
  std::optional<Sequential> diagram_;
  std::optional<Sequential> topology_;
  std::optional<Sequential> text_;
  Sequential fusion_;
  Sequential classifier_;
};

/// Predicted class probabilities for one example.
Tensor model_forward(const Example& e, FusionModel& model, const EmbeddingTable& table, bool invert);

/// Central-difference check of the whole model with softmax cross-entropy,
/// over every parameter and every input element.
GradCheckReport grad_check_model(FusionModel& model, const ModelInputs& inputs, std::size_t target,
                                 double eps = kGradCheckEpsilon);

struct GradCheckCase {
  std::string name;
  double max_error = 0;
  double threshold = 0;
  bool passed() const { return max_error < threshold; }
};

/// Finite-difference checks of every layer type in isolation (followed by
/// softmax cross-entropy) and of a tiny end-to-end fusion model with all
/// three branches. Linear and ReLU must agree to 1e-7, the rest to 1e-4.
std::vector<GradCheckCase> gradcheck_suite(std::uint64_t seed);

}  // namespace diagnet
