#include <set>

#include "doctest.h"
#include "diagnet/annotation.hpp"
#include "diagnet/synthgen.hpp"

using namespace diagnet;

namespace {

const char* kMinimal = R"({
  "source": "unit", "class": "array list", "description": "",
  "canvas": [32, 32],
  "objects": [{"id": 1, "kind": "semantic-shape", "label": "cell", "description": "", "bbox": [2, 2, 10, 10]}],
  "relations": []
})";

DiagramAnnotation two_nodes() {
  DiagramAnnotation a;
  a.global = {"unit", "linked list", "a chain"};
  a.canvas_w = a.canvas_h = 64;
  a.objects = {{1, ObjectKind::SemanticShape, "node", "next", {4, 12, 4, 12}},
               {2, ObjectKind::SemanticShape, "node", "", {30, 40, 4, 12}},
               {3, ObjectKind::LogicalSymbol, "arrow", "", {12, 30, 6, 10}}};
  a.relations = {{1, SymbolLabel::Arrow, 1, 2}};
  return a;
}

bool mentions(const std::vector<Violation>& v, const std::string& needle) {
  for (const auto& x : v) {
    if (x.message().find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST_SUITE("annotation") {

TEST_CASE("class indices follow the category table") {
  CHECK(class_index("array list") == 0);
  CHECK(class_index("directed graph") == 6);
  CHECK(class_index("network topology") == 11);
  std::set<int> seen;
  for (int i = 0; i < kNumClasses; ++i) {
    CHECK(class_index(class_name(i)) == i);
    seen.insert(class_index(class_name(i)));
  }
  CHECK(seen.size() == 12);
}

TEST_CASE("unknown class names list the legal values") {
  try {
    class_index("hash table");
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("hash table") != std::string::npos);
    for (auto name : kClassNames) CHECK(msg.find(name) != std::string::npos);
  }
}

TEST_CASE("minimal document parses") {
  const auto a = parse_annotation(kMinimal);
  CHECK(a.objects.size() == 1);
  CHECK(a.relations.empty());
  CHECK(a.canvas_w == 32);
  CHECK(a.objects[0].bbox == BBox{2, 10, 2, 10});
}

TEST_CASE("unknown keys are ignored") {
  std::string text = kMinimal;
  text.insert(1, "\"extra\": {\"nested\": [1, 2]},");
  CHECK(parse_annotation(text) == parse_annotation(kMinimal));
}

TEST_CASE("valid annotation has no violations") { CHECK(validate(two_nodes()).empty()); }

TEST_CASE("dangling head is reported") {
  auto a = two_nodes();
  a.relations[0].head_id = 7;
  const auto v = validate(a);
  REQUIRE(v.size() == 1);
  CHECK(mentions(v, "dangling head_id 7"));
  CHECK_THROWS_AS(serialize_annotation(a), ValidationError);
}

TEST_CASE("bbox ordering violation names the rule") {
  auto a = two_nodes();
  a.objects[1].bbox = {40, 30, 4, 12};
  const auto v = validate(a);
  REQUIRE(v.size() == 1);
  CHECK(mentions(v, "BBox ordering"));
}

TEST_CASE("class outside the category set") {
  auto a = two_nodes();
  a.global.class_label = "hash table";
  const auto v = validate(a);
  REQUIRE(v.size() == 1);
  CHECK(v[0].field == "class");
  CHECK(mentions(v, "12-category set"));
}

TEST_CASE("other invariants") {
  SUBCASE("self relation") {
    auto a = two_nodes();
    a.relations[0].tail_id = 1;
    CHECK(validate(a).size() == 1);
  }
  SUBCASE("duplicate object id") {
    auto a = two_nodes();
    a.objects[2].id = 2;
    CHECK(mentions(validate(a), "duplicate object id 2"));
  }
  SUBCASE("duplicate relation id") {
    auto a = two_nodes();
    a.relations.push_back({1, SymbolLabel::Line, 2, 1});
    CHECK(mentions(validate(a), "duplicate relation id 1"));
  }
  SUBCASE("empty label") {
    auto a = two_nodes();
    a.objects[0].label.clear();
    CHECK(validate(a).size() == 1);
  }
  SUBCASE("box outside canvas") {
    auto a = two_nodes();
    a.objects[1].bbox.right = 65;
    CHECK(validate(a).size() == 1);
  }
  SUBCASE("tiny canvas") {
    auto a = two_nodes();
    a.canvas_w = 15;
    CHECK(!validate(a).empty());
  }
}

TEST_CASE("malformed text reports a position") {
  try {
    parse_annotation("{\n  \"source\": \"x\",\n  oops\n}");
    FAIL("expected an exception");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("schema violations are validation errors") {
  CHECK_THROWS_AS(parse_annotation("[1, 2]"), ValidationError);
  std::string bad_kind = kMinimal;
  bad_kind.replace(bad_kind.find("semantic-shape"), 14, "blob");
  CHECK_THROWS_AS(parse_annotation(bad_kind), ValidationError);
  std::string no_canvas = kMinimal;
  no_canvas.replace(no_canvas.find("\"canvas\""), 8, "\"canvaz\"");
  CHECK_THROWS_AS(parse_annotation(no_canvas), ValidationError);
}

TEST_CASE("serialization sorts by id and is canonical") {
  auto a = two_nodes();
  auto shuffled = a;
  std::swap(shuffled.objects[0], shuffled.objects[2]);
  const auto text = serialize_annotation(shuffled);
  CHECK(text == serialize_annotation(a));
  CHECK(text.find("\"id\": 1") < text.find("\"id\": 2"));
  CHECK(parse_annotation(text) == a);
}

TEST_CASE("round trip over generated diagrams") {
  CorpusSpec spec;
  spec.per_class_count = 4;
  spec.seed = 11;
  const Corpus c = generate_corpus(spec);
  for (const auto& ex : c.examples) {
    CHECK(validate(ex.annotation).empty());
    const auto text = serialize_annotation(ex.annotation);
    const auto back = parse_annotation(text);
    CHECK(back == ex.annotation);
    CHECK(serialize_annotation(back) == text);
  }
}

}  // TEST_SUITE
