#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "diagnet/model.hpp"

using namespace diagnet;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.input_side = 16;
  c.dim_diagram = c.dim_topology = c.dim_text = 8;
  c.reducer_hidden = 8;
  c.fused_dim = 8;
  c.embedding_dim = 6;
  return c;
}

Example sample(const char* cls, std::uint64_t seed) {
  Rng rng(seed);
  return generate_diagram(cls, rng, 128, 128);
}

Example with_descriptions(Example e) {
  e.annotation.global.description = "enqueue front rear";
  for (auto& o : e.annotation.objects) {
    if (o.kind == ObjectKind::SemanticShape) o.description = "pointer next";
  }
  return e;
}

double prob_sum(const Tensor& p) {
  double s = 0;
  for (double v : p.data()) s += v;
  return s;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("config checks and names") {
  ModelConfig c;
  CHECK(c.concat_dim() == 260);
  CHECK(c.variant_name() == "diagram+topology+text");
  c.use_text = false;
  CHECK(c.concat_dim() == 220);
  CHECK(c.variant_name() == "diagram+topology");
  c.use_diagram = c.use_topology = false;
  CHECK_THROWS_AS(c.check(), std::invalid_argument);
  ModelConfig d;
  d.dim_text = 0;
  CHECK_THROWS_AS(d.check(), std::invalid_argument);
  d = {};
  d.input_side = 30;
  CHECK_THROWS_AS(d.check(), std::invalid_argument);
  d = {};
  d.topology_mode = RenderMode::UndirectedOnly;
  d.dim_topology = 60;
  const ModelConfig back = ModelConfig::from_json(d.to_json());
  CHECK(back.topology_mode == RenderMode::UndirectedOnly);
  CHECK(back.dim_topology == 60);
  CHECK(back.to_json() == d.to_json());
}

TEST_CASE("branch output widths") {
  FusionModel m(ModelConfig{}, 1);
  const Tensor img({1, 64, 64}, 0.5);
  CHECK(m.diagram_features(img).shape() == Shape{120});
  CHECK(m.topology_features(img).shape() == Shape{100});
  const Tensor v = m.text_features(Tensor({50}, 0.1));
  CHECK(v.shape() == Shape{40});
  for (double x : v.data()) CHECK(x >= 0);
  CHECK_THROWS_AS(m.diagram_features(Tensor({1, 32, 32})), ShapeError);
  CHECK_THROWS_AS(m.text_features(Tensor({49})), ShapeError);
  // The fusion layer reads the 260-wide concatenation.
  const auto ps = m.params();
  CHECK(ps[ps.size() - 4]->value.shape() == Shape{128, 260});
  CHECK(ps.back()->value.shape() == Shape{12});
}

TEST_CASE("disabled branches are absent") {
  ModelConfig c;
  c.use_text = false;
  FusionModel m(c, 1);
  CHECK(m.text_params().empty());
  CHECK_THROWS_AS(m.text_features(Tensor({50})), std::logic_error);
  const auto ps = m.params();
  CHECK(ps[ps.size() - 4]->value.shape() == Shape{128, 220});
}

TEST_CASE("zero inputs with zero biases give zero features") {
  FusionModel m(ModelConfig{}, 2);
  CHECK(m.diagram_features(Tensor({1, 64, 64}, 0.0)) == Tensor({120}, 0.0));
  CHECK(m.text_features(Tensor({50}, 0.0)) == Tensor({40}, 0.0));
}

TEST_CASE("zero fusion weights give uniform probabilities") {
  FusionModel m(ModelConfig{}, 3);
  const auto ps = m.params();
  ps[ps.size() - 4]->value.fill(0);
  ps[ps.size() - 3]->value.fill(0);
  ps[ps.size() - 1]->value.fill(0);
  const auto table = EmbeddingTable::hashed(50);
  const Tensor p = model_forward(sample("stack", 1), m, table, false);
  for (double v : p.data()) CHECK(v == doctest::Approx(1.0 / 12).epsilon(1e-12));
}

TEST_CASE("every variant yields a probability vector") {
  const auto table = EmbeddingTable::hashed(50);
  const Example e = with_descriptions(sample("queue", 4));
  for (int mask = 1; mask < 8; ++mask) {
    ModelConfig c;
    c.use_diagram = mask & 1;
    c.use_topology = mask & 2;
    c.use_text = mask & 4;
    FusionModel m(c, 5);
    const Tensor p = model_forward(e, m, table, false);
    CHECK(p.size() == 12);
    CHECK(std::abs(prob_sum(p) - 1) < 1e-9);
    const auto arg = std::max_element(p.data().begin(), p.data().end()) - p.data().begin();
    CHECK((arg >= 0 && arg < 12));
  }
}

TEST_CASE("forward is deterministic and seeds reproduce parameters") {
  const auto table = EmbeddingTable::hashed(50);
  const Example e = with_descriptions(sample("binary tree", 6));
  FusionModel a(ModelConfig{}, 9), b(ModelConfig{}, 9);
  CHECK(model_forward(e, a, table, false) == model_forward(e, a, table, false));
  CHECK(model_forward(e, a, table, false) == model_forward(e, b, table, false));
  FusionModel c(ModelConfig{}, 10);
  CHECK(model_forward(e, a, table, false) != model_forward(e, c, table, false));
}

TEST_CASE("disabling a branch keeps the other branches' initial weights") {
  ModelConfig full, no_text;
  no_text.use_text = false;
  FusionModel a(full, 4), b(no_text, 4);
  const Tensor img({1, 64, 64}, 0.25);
  CHECK(a.diagram_features(img) == b.diagram_features(img));
  CHECK(a.topology_features(img) == b.topology_features(img));
}

TEST_CASE("object order does not change the prediction") {
  const auto table = EmbeddingTable::hashed(50);
  const Example e = with_descriptions(sample("directed graph", 7));
  Example shuffled = e;
  std::reverse(shuffled.annotation.objects.begin(), shuffled.annotation.objects.end());
  FusionModel m(ModelConfig{}, 11);
  CHECK(model_forward(e, m, table, false) == model_forward(shuffled, m, table, false));
}

TEST_CASE("text is ignored when the text branch is off") {
  const auto table = EmbeddingTable::hashed(50);
  ModelConfig c;
  c.use_text = false;
  FusionModel m(c, 12);
  const Example e = sample("flow chart", 8);
  const Example mutated = with_descriptions(e);
  CHECK(model_forward(e, m, table, false) == model_forward(mutated, m, table, false));

  ModelConfig full;
  FusionModel f(full, 12);
  CHECK(model_forward(e, f, table, false) != model_forward(mutated, f, table, false));
}

TEST_CASE("backward through a model without text leaves no text gradient") {
  ModelConfig c = small_config();
  c.use_text = false;
  FusionModel m(c, 13);
  const ModelInputs in = prepare_inputs(sample("deadlock", 9), c, EmbeddingTable::hashed(6), false);
  m.zero_grad();
  const auto loss = softmax_cross_entropy(m.logits(in), 8);
  const ModelInputs grads = m.backward(loss.grad, true);
  CHECK(grads.text.size() == 0);
  CHECK(grads.diagram.shape() == Shape{1, 16, 16});
  CHECK(grads.topology.shape() == Shape{1, 16, 16});
}

TEST_CASE("end-to-end finite differences on a tiny model") {
  ModelConfig c = small_config();
  FusionModel m(c, 14);
  Rng rng(15);
  for (Param* p : m.params()) {
    if (p->value.rank() == 1) {
      for (auto& v : p->value.data()) v = rng.uniform(0, 0.2);
    }
  }
  ModelInputs in = prepare_inputs(with_descriptions(sample("linked list", 10)), c, EmbeddingTable::hashed(6), false);
  // Flat regions of a rendered diagram tie inside max-pool windows, where the
  // loss is not differentiable. A little jitter breaks the ties.
  for (auto& v : in.diagram.data()) v += rng.uniform(0, 0.01);
  for (auto& v : in.topology.data()) v += rng.uniform(0, 0.01);
  CHECK(grad_check_model(m, in, 1).max_error() < 1e-4);
}

TEST_CASE("gradient check suite passes") {
  const auto cases = gradcheck_suite(1);
  CHECK(cases.size() >= 6);
  for (const auto& k : cases) {
    INFO(k.name);
    CHECK(k.passed());
  }
}

TEST_CASE("save and load reproduce the model") {
  const auto table = EmbeddingTable::hashed(50);
  ModelConfig c;
  c.use_diagram = false;
  c.topology_mode = RenderMode::UndirectedOnly;
  FusionModel m(c, 16);
  const std::string text = m.save();
  FusionModel back = FusionModel::load(text);
  CHECK(back.config().to_json() == c.to_json());
  const Example e = with_descriptions(sample("network topology", 11));
  CHECK(model_forward(e, m, table, false) == model_forward(e, back, table, false));
  CHECK(back.save() == text);
  CHECK_THROWS(FusionModel::load("not a model"));
}

TEST_CASE("softmax stays normalized after training steps") {
  ModelConfig c = small_config();
  FusionModel m(c, 17);
  const auto table = EmbeddingTable::hashed(6);
  const ModelInputs in = prepare_inputs(with_descriptions(sample("stack", 12)), c, table, false);
  SgdMomentum opt(0.05);
  for (int step = 0; step < 10; ++step) {
    m.zero_grad();
    const auto loss = softmax_cross_entropy(m.logits(in), 5);
    m.backward(loss.grad);
    opt.step(m.params());
    CHECK(std::abs(prob_sum(m.forward(in)) - 1) < 1e-9);
  }
}

}  // TEST_SUITE

TEST_SUITE("model") {

TEST_CASE("embedding table") {
  const EmbeddingTable t = load_embeddings("cat 1 2 3\n\ndog 4 5 6\ncat 7 8 9\n");
  CHECK(t.size() == 2);
  CHECK(t.dim() == 3);
  CHECK(*t.lookup("cat") == std::vector<double>{7, 8, 9});
  CHECK(load_embeddings("").size() == 0);
  CHECK_THROWS_AS(load_embeddings("a 1 2 3\nb 1 2\n"), std::invalid_argument);
  CHECK_THROWS_AS(load_embeddings("a 1 x 3\n"), std::invalid_argument);

  const std::vector<std::string> none;
  CHECK(embed_text(none, t, 3) == Tensor({3}, 0.0));
  const std::vector<std::string> one{"DOG"};
  CHECK(embed_text(one, t, 3) == Tensor({3}, std::vector<double>{4, 5, 6}));
  const std::vector<std::string> two{"dog", "cat"};
  CHECK(embed_text(two, t, 3) == Tensor({3}, std::vector<double>{5.5, 6.5, 7.5}));
  const std::vector<std::string> oov{"dog", "unknown"};
  CHECK(embed_text(oov, t, 3) == Tensor({3}, std::vector<double>{2, 2.5, 3}));
}

TEST_CASE("hashed embeddings are unit vectors and stable") {
  const auto a = EmbeddingTable::hashed(50);
  const auto b = EmbeddingTable::hashed(50);
  const auto va = a.lookup("pointer");
  REQUIRE(va.has_value());
  CHECK(*va == *b.lookup("pointer"));
  double n = 0;
  for (double x : *va) n += x * x;
  CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(*a.lookup("pointer") != *a.lookup("stack"));
  CHECK(*a.lookup("Pointer") == *a.lookup("pointer"));
}

TEST_CASE("text tokens ignore object order") {
  DiagramAnnotation a;
  a.global.description = "b a";
  a.objects = {{1, ObjectKind::SemanticShape, "x", "c d", {}}, {2, ObjectKind::SemanticShape, "x", "e", {}}};
  auto b = a;
  std::swap(b.objects[0], b.objects[1]);
  const auto t = text_tokens(a);
  CHECK(t == text_tokens(b));
  CHECK(t.size() == 5);
}

}  // TEST_SUITE
