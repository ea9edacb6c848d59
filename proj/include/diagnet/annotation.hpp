#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace diagnet {

inline constexpr int kNumClasses = 12;

/// Category names, in the fixed order used for class indices.
inline constexpr std::array<std::string_view, kNumClasses> kClassNames = {
    "array list",      "linked list",      "binary tree", "non-binary tree",
    "queue",           "stack",            "directed graph", "undirected graph",
    "deadlock",        "flow chart",       "logic circuit",  "network topology"};

/// Index of a category name. Throws std::invalid_argument listing the legal
/// names when `label` is not one of them.
int class_index(std::string_view label);
std::string_view class_name(int index);

/// Axis-aligned box in canvas pixels. `lower` < `upper` on the vertical axis.
struct BBox {
  int left = 0;
  int right = 0;
  int lower = 0;
  int upper = 0;

  int width() const { return right - left; }
  int height() const { return upper - lower; }
  /// True when the interiors intersect; shared edges do not count.
  bool overlaps(const BBox& o) const {
    return left < o.right && o.left < right && lower < o.upper && o.lower < upper;
  }
  bool operator==(const BBox&) const = default;
};

enum class ObjectKind { SemanticShape, LogicalSymbol };
enum class SymbolLabel { Arrow, Line };

std::string_view to_string(ObjectKind k);
std::string_view to_string(SymbolLabel s);

struct DiagramObject {
  int id = 0;
  ObjectKind kind = ObjectKind::SemanticShape;
  std::string label;
  std::string description;
  BBox bbox;
  bool operator==(const DiagramObject&) const = default;
};

/// A relation triple <head, symbol, tail>. Directedness follows the symbol.
struct Relation {
  int id = 0;
  SymbolLabel symbol = SymbolLabel::Line;
  int head_id = 0;
  int tail_id = 0;

  bool directed() const { return symbol == SymbolLabel::Arrow; }
  bool operator==(const Relation&) const = default;
};

struct GlobalAttributes {
  std::string source;
  std::string class_label;
  std::string description;
  bool operator==(const GlobalAttributes&) const = default;
};

struct DiagramAnnotation {
  GlobalAttributes global;
  int canvas_w = 0;
  int canvas_h = 0;
  std::vector<DiagramObject> objects;
  std::vector<Relation> relations;

  const DiagramObject* find_object(int id) const;
  bool operator==(const DiagramAnnotation&) const = default;
};

struct Violation {
  std::string field;
  std::string rule;
  std::string message() const { return field + ": " + rule; }
};

/// Checks every structural invariant. Empty result means valid.
std::vector<Violation> validate(const DiagramAnnotation& a);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what), line_(line), column_(column) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

/// Parses the JSON annotation format. Unknown keys are ignored.
/// Throws ParseError on malformed text and ValidationError on schema or
/// invariant violations.
DiagramAnnotation parse_annotation(std::string_view text);

/// Canonical form: fixed key order, objects and relations sorted by id, one
/// object or relation per line. Throws ValidationError on invalid input.
std::string serialize_annotation(const DiagramAnnotation& a);

}  // namespace diagnet
