#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diagnet/model.hpp"

namespace diagnet {

/// Two-phase constant learning-rate schedule with momentum SGD.
struct Hyper {
  int epochs_phase1 = 30;
  double lr_phase1 = 4e-3;
  int epochs_phase2 = 30;
  double lr_phase2 = 1e-4;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;

  int epochs() const { return epochs_phase1 + epochs_phase2; }
  double learning_rate(int epoch) const { return epoch < epochs_phase1 ? lr_phase1 : lr_phase2; }
  void check() const;
};

struct Metrics {
  double overall_accuracy = 0;
  /// Zero for classes without examples; see class_counts.
  std::vector<double> per_class_accuracy;
  std::vector<int> class_counts;
  /// confusion[true][predicted].
  std::vector<std::vector<int>> confusion;
  /// Mean training loss per epoch; empty for a pure evaluation.
  std::vector<double> loss_history;

  bool operator==(const Metrics&) const = default;
};

/// Network inputs and labels of one split, computed once and reused across
/// epochs and model variants.
struct PreparedSet {
  std::vector<ModelInputs> inputs;
  std::vector<std::size_t> labels;
  std::size_t size() const { return labels.size(); }
};

/// Prepares the inputs of every example in `split` for the branches enabled in
/// `cfg`.
PreparedSet prepare_split(const Corpus& corpus, Split split, const ModelConfig& cfg, const EmbeddingTable& table);

/// Metrics from predicted and true labels.
Metrics metrics_from_predictions(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                 std::size_t num_classes);

/// One forward per example, argmax prediction; the model is not modified.
Metrics evaluate(FusionModel& model, const PreparedSet& set);
Metrics evaluate(FusionModel& model, const Corpus& corpus, Split split, const EmbeddingTable& table);

/// Accuracy on the examples of classes `a` and `b` when the prediction is
/// restricted to whichever of the two has the larger probability.
double pair_accuracy(FusionModel& model, const PreparedSet& set, std::size_t a, std::size_t b);

struct TrainResult {
  FusionModel model;
  Metrics test;
  Metrics train;
};

/// Trains a freshly initialized model. Fully determined by the sets, config
/// and hyper. Throws std::invalid_argument when the training set is empty.
TrainResult train(const PreparedSet& train_set, const PreparedSet& test_set, const ModelConfig& cfg, const Hyper& hyper);
TrainResult train(const Corpus& corpus, const ModelConfig& cfg, const Hyper& hyper, const EmbeddingTable& table);

/// Options shared by the experiment suites. With `repeats` > 1 each
/// accuracy is the mean over that many seeds derived from hyper.seed.
struct ExperimentOptions {
  ModelConfig base;
  unsigned jobs = 1;
  int repeats = 1;
};

struct AblationRow {
  std::string variant;
  double accuracy = 0;
};

/// The six branch combinations, in report order.
std::vector<ModelConfig> ablation_variants(const ModelConfig& base);
std::vector<AblationRow> ablate(const Corpus& corpus, const Hyper& hyper, const EmbeddingTable& table,
                                const ExperimentOptions& opt = {});

struct DirectionRow {
  std::string name;  // class name or "overall"
  int count = 0;     // test examples; 0 means the class is absent
  double acc_directed = 0;
  double acc_undirected = 0;
};

struct DirectionResult {
  /// Twelve class rows followed by the overall row.
  std::vector<DirectionRow> rows;
  /// pair_accuracy over {directed graph, undirected graph}.
  double pair_directed = 0;
  double pair_undirected = 0;
  int pair_count = 0;
};

/// Topology-only models trained with directed-aware and undirected-only
/// topology rasters.
DirectionResult direction_study(const Corpus& corpus, const Hyper& hyper, const EmbeddingTable& table,
                                const ExperimentOptions& opt = {});

struct SweepPoint {
  std::size_t dim = 0;
  double accuracy = 0;
};

std::vector<std::size_t> default_sweep_dims();
/// Full model with dim_topology taken from `dims`.
std::vector<SweepPoint> dim_sweep(const Corpus& corpus, const Hyper& hyper, const EmbeddingTable& table,
                                  const std::vector<std::size_t>& dims, const ExperimentOptions& opt = {});

// Reports. Every number is printed with "%.6f" so reruns are byte-identical.
std::string accuracy_header(int repeats);
std::string ablation_csv(const std::vector<AblationRow>& rows, int repeats = 1);
std::string ablation_table(const std::vector<AblationRow>& rows);
std::string direction_csv(const DirectionResult& r);
std::string direction_table(const DirectionResult& r);
std::string sweep_csv(const std::vector<SweepPoint>& pts, int repeats = 1);
std::string sweep_table(const std::vector<SweepPoint>& pts);
std::string confusion_csv(const Metrics& m);
std::string metrics_json(const Metrics& test, const Metrics& train, const ModelConfig& cfg, const Hyper& hyper);

}  // namespace diagnet
