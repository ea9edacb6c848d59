#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "diagnet/annotation.hpp"
#include "diagnet/tensor.hpp"

namespace diagnet {

inline constexpr std::size_t kDefaultEmbeddingDim = 50;

/// Word vectors keyed by lowercase token.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// Stand-in for a downloaded table: every token maps to a unit-norm
  /// pseudo-random vector seeded by the FNV-1a hash of its bytes.
  static EmbeddingTable hashed(std::size_t dim);

  /// Width of the rows; 0 for an empty explicit table.
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return rows_.size(); }
  bool is_hashed() const { return hashed_; }

  /// Later inserts of the same token replace earlier ones. Throws
  /// std::invalid_argument when the width differs from existing rows.
  void insert(std::string token, std::vector<double> vec);
  std::optional<std::vector<double>> lookup(std::string_view token) const;

 private:
  std::size_t dim_ = 0;
  bool hashed_ = false;
  std::unordered_map<std::string, std::vector<double>> rows_;
};

/// Parses "token v1 ... vd" lines (GloVe text layout). Blank lines are
/// skipped. Throws std::invalid_argument on ragged rows or bad numbers.
EmbeddingTable load_embeddings(std::string_view text);

/// Mean of the token vectors (lowercased; unknown tokens count as zero
/// vectors). Returns zeros of length `dim` for an empty token list.
Tensor embed_text(std::span<const std::string> tokens, const EmbeddingTable& table, std::size_t dim);

/// Whitespace tokens of the global description and every object
/// description, sorted so the result does not depend on object order.
std::vector<std::string> text_tokens(const DiagramAnnotation& a);

}  // namespace diagnet
