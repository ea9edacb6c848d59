#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "diagnet/annotation.hpp"
#include "diagnet/raster.hpp"
#include "diagnet/rng.hpp"

namespace diagnet {

inline constexpr int kDefaultCanvas = 128;
/// 951 training diagrams out of 1294.
inline constexpr double kDefaultTrainFraction = 951.0 / 1294.0;
/// Chance that a semantic object carries a text description.
inline constexpr double kDescriptionRate = 0.3;

struct CorpusSpec {
  int per_class_count = 40;
  int canvas_w = kDefaultCanvas;
  int canvas_h = kDefaultCanvas;
  std::uint64_t seed = 1;
  double train_fraction = kDefaultTrainFraction;
  /// Class indices to generate, in output order. Empty means all twelve.
  std::vector<int> classes;

  /// Throws std::invalid_argument when a field is out of range.
  void check() const;
  std::vector<int> class_list() const;
  /// floor((1 - train_fraction) * per_class_count).
  int test_count() const;
};

enum class Split { Train, Test };
std::string_view to_string(Split s);

struct Example {
  DiagramAnnotation annotation;
  GrayRaster diagram{1, 1};
  Split split = Split::Train;
  bool operator==(const Example&) const = default;
};

struct Corpus {
  CorpusSpec spec;
  /// True when diagrams are dark ink on a light background.
  bool invert = false;
  std::vector<Example> examples;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One synthetic diagram of the given class. Consumes two values from `rng`:
/// a structure seed and a style seed.
Example generate_diagram(std::string_view class_label, Rng& rng, int canvas_w, int canvas_h);

/// Structure (layout and relations) comes from `structure_seed` alone; drawn
/// shapes and text descriptions come from `style_seed`. Two calls with equal
/// structure seeds differ only in style.
Example generate_diagram(std::string_view class_label, std::uint64_t structure_seed,
                         std::uint64_t style_seed, int canvas_w, int canvas_h);

/// Per class: per_class_count examples, the last test_count() of them in the
/// test split. Example (class c, index i) is drawn from mix_seed(seed, c, i).
Corpus generate_corpus(const CorpusSpec& spec);

/// A directed graph and an undirected graph with identical node boxes, edge
/// endpoint pairs, drawn shapes and descriptions. They differ in the class
/// label, relation symbols, connector labels and the arrowhead pixels.
std::pair<Example, Example> paired_graphs(Rng& rng, int canvas_w, int canvas_h);

struct ClassStats {
  std::string name;
  int diagrams = 0;
  int objects = 0;
  int relations = 0;
};

/// Twelve rows in class-index order followed by a "total" row.
std::vector<ClassStats> corpus_stats(const Corpus& c);
std::string format_stats(const std::vector<ClassStats>& rows);

/// Six-word description vocabulary of a class (four own words plus the two
/// words shared by every class).
const std::vector<std::string>& class_vocabulary(int class_index);

// On-disk corpus: corpus.json (generation settings), manifest.csv (annotation, diagram,
// class, split) and one <stem>.json + <stem>.png per example.
void write_corpus(const Corpus& c, const std::filesystem::path& dir);
/// Throws std::runtime_error on missing files, ValidationError/ParseError on
/// bad annotations, ImageError on bad images.
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace diagnet
