#include "diagnet/annotation.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include <json.hpp>

namespace diagnet {

using nlohmann::json;

int class_index(std::string_view label) {
  for (int i = 0; i < kNumClasses; ++i) {
    if (kClassNames[i] == label) return i;
  }
  std::string legal;
  for (auto name : kClassNames) {
    if (!legal.empty()) legal += ", ";
    legal += name;
  }
  throw std::invalid_argument("unknown class \"" + std::string(label) +
                              "\"; expected one of: " + legal);
}

std::string_view class_name(int index) {
  if (index < 0 || index >= kNumClasses) throw std::out_of_range("class index out of range");
  return kClassNames[index];
}

std::string_view to_string(ObjectKind k) {
  return k == ObjectKind::SemanticShape ? "semantic-shape" : "logical-symbol";
}

std::string_view to_string(SymbolLabel s) { return s == SymbolLabel::Arrow ? "arrow" : "line"; }

const DiagramObject* DiagramAnnotation::find_object(int id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

namespace {

std::string join_violations(const std::vector<Violation>& vs) {
  std::string out = "invalid annotation";
  for (const auto& v : vs) out += "; " + v.message();
  return out;
}

void check_bbox(const BBox& b, int canvas_w, int canvas_h, const std::string& field,
                std::vector<Violation>& out) {
  if (b.right <= b.left) out.push_back({field, "BBox ordering requires right > left"});
  if (b.upper <= b.lower) out.push_back({field, "BBox ordering requires upper > lower"});
  const bool inside = b.left >= 0 && b.right >= 0 && b.lower >= 0 && b.upper >= 0 &&
                      b.left <= canvas_w && b.right <= canvas_w && b.lower <= canvas_h &&
                      b.upper <= canvas_h;
  if (!inside) out.push_back({field, "BBox must lie within the canvas"});
}

}  // namespace

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::vector<Violation> validate(const DiagramAnnotation& a) {
  std::vector<Violation> out;
  bool known_class = false;
  for (auto name : kClassNames) known_class = known_class || name == a.global.class_label;
  if (!known_class) {
    out.push_back({"class", "\"" + a.global.class_label + "\" is not in the 12-category set"});
  }
  if (a.canvas_w < 16 || a.canvas_h < 16) out.push_back({"canvas", "width and height must be >= 16"});

  std::set<int> object_ids;
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const auto& o = a.objects[i];
    const std::string field = "objects[" + std::to_string(i) + "]";
    if (o.id < 1) out.push_back({field + ".id", "ids are positive integers starting at 1"});
    if (!object_ids.insert(o.id).second) {
      out.push_back({field + ".id", "duplicate object id " + std::to_string(o.id)});
    }
    if (o.label.empty()) out.push_back({field + ".label", "label must be non-empty"});
    check_bbox(o.bbox, a.canvas_w, a.canvas_h, field + ".bbox", out);
  }

  std::set<int> relation_ids;
  for (std::size_t i = 0; i < a.relations.size(); ++i) {
    const auto& r = a.relations[i];
    const std::string field = "relations[" + std::to_string(i) + "]";
    if (r.id < 1) out.push_back({field + ".id", "ids are positive integers starting at 1"});
    if (!relation_ids.insert(r.id).second) {
      out.push_back({field + ".id", "duplicate relation id " + std::to_string(r.id)});
    }
    if (!object_ids.contains(r.head_id)) {
      out.push_back({field + ".head", "dangling head_id " + std::to_string(r.head_id)});
    }
    if (!object_ids.contains(r.tail_id)) {
      out.push_back({field + ".tail", "dangling tail_id " + std::to_string(r.tail_id)});
    }
    if (r.head_id == r.tail_id) out.push_back({field, "head_id and tail_id must differ"});
  }
  return out;
}

namespace {

// Line and column (both 1-based) of a byte offset.
std::pair<std::size_t, std::size_t> locate(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Schema access that reports the JSON path on failure.
class Reader {
 public:
  explicit Reader(std::vector<Violation>& out) : out_(out) {}

  const json* member(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      out_.push_back({path + key, "missing required key"});
      return nullptr;
    }
    return &*it;
  }

  std::string str(const json& obj, const char* key, const std::string& path) {
    const json* v = member(obj, key, path);
    if (v == nullptr) return {};
    if (!v->is_string()) {
      out_.push_back({path + key, "must be a string"});
      return {};
    }
    return v->get<std::string>();
  }

  int integer(const json& v, const std::string& field) {
    if (!v.is_number_integer()) {
      out_.push_back({field, "must be an integer"});
      return 0;
    }
    const auto n = v.get<long long>();
    if (n < INT32_MIN || n > INT32_MAX) {
      out_.push_back({field, "integer out of range"});
      return 0;
    }
    return static_cast<int>(n);
  }

  int integer(const json& obj, const char* key, const std::string& path) {
    const json* v = member(obj, key, path);
    return v == nullptr ? 0 : integer(*v, path + key);
  }

  std::vector<int> int_array(const json& obj, const char* key, const std::string& path,
                             std::size_t n) {
    const json* v = member(obj, key, path);
    if (v == nullptr) return std::vector<int>(n, 0);
    if (!v->is_array() || v->size() != n) {
      out_.push_back({path + key, "must be an array of " + std::to_string(n) + " integers"});
      return std::vector<int>(n, 0);
    }
    std::vector<int> out;
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back(integer((*v)[i], path + key + "[" + std::to_string(i) + "]"));
    }
    return out;
  }

 private:
  std::vector<Violation>& out_;
};

}  // namespace

DiagramAnnotation parse_annotation(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    auto [line, col] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError("parse error at line " + std::to_string(line) + ", column " +
                         std::to_string(col) + ": " + e.what(),
                     line, col);
  }
  if (!doc.is_object()) throw ValidationError(std::vector<Violation>{{"document", "top level must be an object"}});

  std::vector<Violation> problems;
  Reader rd(problems);
  DiagramAnnotation a;
  a.global.source = rd.str(doc, "source", "");
  a.global.class_label = rd.str(doc, "class", "");
  a.global.description = rd.str(doc, "description", "");
  const auto canvas = rd.int_array(doc, "canvas", "", 2);
  a.canvas_w = canvas[0];
  a.canvas_h = canvas[1];

  if (const json* objs = rd.member(doc, "objects", ""); objs != nullptr) {
    if (!objs->is_array()) {
      problems.push_back({"objects", "must be an array"});
    } else {
      for (std::size_t i = 0; i < objs->size(); ++i) {
        const json& o = (*objs)[i];
        const std::string path = "objects[" + std::to_string(i) + "].";
        if (!o.is_object()) {
          problems.push_back({path, "must be an object"});
          continue;
        }
        DiagramObject obj;
        obj.id = rd.integer(o, "id", path);
        const std::string kind = rd.str(o, "kind", path);
        if (kind == "semantic-shape") {
          obj.kind = ObjectKind::SemanticShape;
        } else if (kind == "logical-symbol") {
          obj.kind = ObjectKind::LogicalSymbol;
        } else {
          problems.push_back({path + "kind", "must be \"semantic-shape\" or \"logical-symbol\""});
        }
        obj.label = rd.str(o, "label", path);
        obj.description = rd.str(o, "description", path);
        const auto bb = rd.int_array(o, "bbox", path, 4);
        obj.bbox = BBox{bb[0], bb[2], bb[1], bb[3]};
        a.objects.push_back(std::move(obj));
      }
    }
  }

  if (const json* rels = rd.member(doc, "relations", ""); rels != nullptr) {
    if (!rels->is_array()) {
      problems.push_back({"relations", "must be an array"});
    } else {
      for (std::size_t i = 0; i < rels->size(); ++i) {
        const json& r = (*rels)[i];
        const std::string path = "relations[" + std::to_string(i) + "].";
        if (!r.is_object()) {
          problems.push_back({path, "must be an object"});
          continue;
        }
        Relation rel;
        rel.id = rd.integer(r, "id", path);
        const std::string symbol = rd.str(r, "symbol", path);
        if (symbol == "arrow") {
          rel.symbol = SymbolLabel::Arrow;
        } else if (symbol == "line") {
          rel.symbol = SymbolLabel::Line;
        } else {
          problems.push_back({path + "symbol", "must be \"arrow\" or \"line\""});
        }
        rel.head_id = rd.integer(r, "head", path);
        rel.tail_id = rd.integer(r, "tail", path);
        a.relations.push_back(rel);
      }
    }
  }

  if (!problems.empty()) throw ValidationError(std::move(problems));
  if (auto v = validate(a); !v.empty()) throw ValidationError(std::move(v));
  return a;
}

std::string serialize_annotation(const DiagramAnnotation& a) {
  if (auto v = validate(a); !v.empty()) throw ValidationError(std::move(v));

  std::vector<const DiagramObject*> objects;
  for (const auto& o : a.objects) objects.push_back(&o);
  std::sort(objects.begin(), objects.end(),
            [](const auto* x, const auto* y) { return x->id < y->id; });
  std::vector<const Relation*> relations;
  for (const auto& r : a.relations) relations.push_back(&r);
  std::sort(relations.begin(), relations.end(),
            [](const auto* x, const auto* y) { return x->id < y->id; });

  auto quote = [](const std::string& s) { return json(s).dump(); };

  std::ostringstream os;
  os << "{\n";
  os << "  \"source\": " << quote(a.global.source) << ",\n";
  os << "  \"class\": " << quote(a.global.class_label) << ",\n";
  os << "  \"description\": " << quote(a.global.description) << ",\n";
  os << "  \"canvas\": [" << a.canvas_w << ", " << a.canvas_h << "],\n";
  os << "  \"objects\": [";
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = *objects[i];
    os << (i == 0 ? "\n" : ",\n");
    os << "    {\"id\": " << o.id << ", \"kind\": \"" << to_string(o.kind)
       << "\", \"label\": " << quote(o.label) << ", \"description\": " << quote(o.description)
       << ", \"bbox\": [" << o.bbox.left << ", " << o.bbox.lower << ", " << o.bbox.right << ", "
       << o.bbox.upper << "]}";
  }
  os << (objects.empty() ? "],\n" : "\n  ],\n");
  os << "  \"relations\": [";
  for (std::size_t i = 0; i < relations.size(); ++i) {
    const auto& r = *relations[i];
    os << (i == 0 ? "\n" : ",\n");
    os << "    {\"id\": " << r.id << ", \"symbol\": \"" << to_string(r.symbol)
       << "\", \"head\": " << r.head_id << ", \"tail\": " << r.tail_id << "}";
  }
  os << (relations.empty() ? "]\n" : "\n  ]\n");
  os << "}\n";
  return os.str();
}

}  // namespace diagnet
