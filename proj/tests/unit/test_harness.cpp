#include <cmath>

#include "doctest.h"
#include "diagnet/harness.hpp"

using namespace diagnet;

namespace {

Corpus two_class_corpus(int per_class, std::uint64_t seed) {
  CorpusSpec spec;
  spec.per_class_count = per_class;
  spec.seed = seed;
  spec.classes = {0, 6};
  return generate_corpus(spec);
}

Hyper quick(int e1, int e2) {
  Hyper h;
  h.epochs_phase1 = e1;
  h.epochs_phase2 = e2;
  return h;
}

ModelConfig small_model() {
  ModelConfig c;
  c.input_side = 32;
  c.dim_diagram = 16;
  c.dim_topology = 16;
  c.dim_text = 8;
  c.reducer_hidden = 16;
  c.fused_dim = 16;
  return c;
}

}  // namespace

TEST_SUITE("harness") {

TEST_CASE("hyper schedule") {
  Hyper h;
  CHECK(h.epochs() == 60);
  CHECK(h.learning_rate(0) == 4e-3);
  CHECK(h.learning_rate(29) == 4e-3);
  CHECK(h.learning_rate(30) == 1e-4);
  CHECK(h.learning_rate(59) == 1e-4);
  CHECK(h.momentum == 0.9);
  h.batch_size = 0;
  CHECK_THROWS_AS(h.check(), std::invalid_argument);
}

TEST_CASE("metrics arithmetic") {
  const std::vector<std::size_t> truth{0, 0, 1, 1, 1, 2};
  SUBCASE("perfect") {
    const Metrics m = metrics_from_predictions(truth, truth, 3);
    CHECK(m.overall_accuracy == 1.0);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        if (i != j) CHECK(m.confusion[i][j] == 0);
      }
    }
  }
  SUBCASE("constant predictor scores the majority share") {
    const std::vector<std::size_t> pred(6, 1);
    const Metrics m = metrics_from_predictions(truth, pred, 3);
    CHECK(m.overall_accuracy == doctest::Approx(0.5));
    CHECK(m.per_class_accuracy == std::vector<double>{0, 1, 0});
  }
  SUBCASE("trace ratio and row sums") {
    const std::vector<std::size_t> pred{0, 1, 1, 2, 1, 0};
    const Metrics m = metrics_from_predictions(truth, pred, 4);
    int trace = 0, total = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      int row = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        row += m.confusion[i][j];
        total += m.confusion[i][j];
      }
      trace += m.confusion[i][i];
      CHECK(row == m.class_counts[i]);
    }
    CHECK(m.overall_accuracy == doctest::Approx(static_cast<double>(trace) / total));
    CHECK(m.class_counts[3] == 0);
    CHECK(m.per_class_accuracy[1] == doctest::Approx(2.0 / 3));
  }
}

TEST_CASE("tiny two-class training fits its training set") {
  const Corpus c = two_class_corpus(8, 1);
  const auto table = EmbeddingTable::hashed(50);
  const TrainResult r = train(c, ModelConfig{}, Hyper{}, table);
  CHECK(r.train.overall_accuracy == 1.0);
  REQUIRE(r.train.loss_history.size() == 60);
  for (double l : r.train.loss_history) CHECK(std::isfinite(l));
  CHECK(r.train.loss_history.back() < r.train.loss_history.front());
  CHECK(r.test.overall_accuracy >= 0.0);
  CHECK(r.test.overall_accuracy <= 1.0);
}

TEST_CASE("training is deterministic and evaluation pure") {
  const Corpus c = two_class_corpus(6, 2);
  const auto table = EmbeddingTable::hashed(50);
  const Hyper h = quick(3, 2);
  TrainResult a = train(c, small_model(), h, table);
  TrainResult b = train(c, small_model(), h, table);
  CHECK(a.test == b.test);
  CHECK(a.train == b.train);
  CHECK(a.model.save() == b.model.save());
  const std::string before = a.model.save();
  CHECK(evaluate(a.model, c, Split::Test, table) == evaluate(a.model, c, Split::Test, table));
  CHECK(a.model.save() == before);

  Hyper other = h;
  other.seed = 2;
  CHECK(train(c, small_model(), other, table).model.save() != before);
}

TEST_CASE("empty training split is rejected") {
  Corpus empty;
  const auto table = EmbeddingTable::hashed(50);
  CHECK_THROWS_AS(train(empty, ModelConfig{}, Hyper{}, table), std::invalid_argument);
}

TEST_CASE("pair accuracy restricts the prediction") {
  const Corpus c = two_class_corpus(6, 3);
  const auto table = EmbeddingTable::hashed(50);
  const ModelConfig cfg = small_model();
  FusionModel m(cfg, 1);
  const PreparedSet set = prepare_split(c, Split::Train, cfg, table);
  const double acc = pair_accuracy(m, set, 0, 6);
  CHECK((acc >= 0 && acc <= 1));
  // Restricting to two classes can only help relative to the full argmax.
  CHECK(acc >= evaluate(m, set).overall_accuracy);
}

TEST_CASE("variants without text ignore text") {
  const Corpus c = two_class_corpus(20, 4);
  const auto table = EmbeddingTable::hashed(50);
  for (const auto& v : ablation_variants(small_model())) {
    if (v.use_text) continue;
    TrainResult r = train(c, v, quick(1, 1), table);
    int checked = 0;
    for (const auto& e : c.examples) {
      if (e.split != Split::Test || checked == 5) continue;
      Example mutated = e;
      mutated.annotation.global.description = "push pop top lifo";
      for (auto& o : mutated.annotation.objects) o.description = "gate signal xor";
      CHECK(model_forward(e, r.model, table, c.invert) == model_forward(mutated, r.model, table, c.invert));
      ++checked;
    }
    CHECK(checked == 5);
  }
}

TEST_CASE("experiment suites") {
  const Corpus c = two_class_corpus(4, 5);
  const auto table = EmbeddingTable::hashed(50);
  const Hyper h = quick(1, 1);
  ExperimentOptions opt;
  opt.base = small_model();

  SUBCASE("ablation") {
    const auto rows = ablate(c, h, table, opt);
    REQUIRE(rows.size() == 6);
    const char* order[] = {"diagram", "topology", "diagram+topology", "diagram+text", "topology+text",
                           "diagram+topology+text"};
    for (int i = 0; i < 6; ++i) {
      CHECK(rows[i].variant == order[i]);
      CHECK((rows[i].accuracy >= 0 && rows[i].accuracy <= 1));
    }
    opt.jobs = 3;
    const auto parallel = ablate(c, h, table, opt);
    CHECK(ablation_csv(parallel) == ablation_csv(rows));
    CHECK(ablation_csv(rows).rfind("variant,accuracy\n", 0) == 0);
  }
  SUBCASE("sweep") {
    const auto dims = default_sweep_dims();
    REQUIRE(dims.size() == 10);
    CHECK(dims.front() == 20);
    CHECK(dims.back() == 200);
    const std::vector<std::size_t> few{20, 40};
    const auto pts = dim_sweep(c, h, table, few, opt);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1].dim == 40);
    CHECK(sweep_csv(pts) == sweep_csv(dim_sweep(c, h, table, few, opt)));
  }
  SUBCASE("repeats average over seeds") {
    opt.repeats = 2;
    const auto pts = dim_sweep(c, h, table, {20}, opt);
    CHECK((pts[0].accuracy >= 0 && pts[0].accuracy <= 1));
    CHECK(sweep_csv(pts, 2).rfind("dim,mean_accuracy_2_seeds\n", 0) == 0);
  }
}

TEST_CASE("direction study") {
  const auto table = EmbeddingTable::hashed(50);
  ExperimentOptions opt;
  opt.base = small_model();
  SUBCASE("layout") {
    const Corpus c = two_class_corpus(4, 6);
    const DirectionResult r = direction_study(c, quick(1, 1), table, opt);
    REQUIRE(r.rows.size() == 13);
    CHECK(r.rows.back().name == "overall");
    CHECK(r.rows[6].count == 1);
    CHECK(r.rows[1].count == 0);
    CHECK(r.pair_count == 1);
    const std::string csv = direction_csv(r);
    CHECK(csv.rfind("class,acc_directed,acc_undirected\n", 0) == 0);
    CHECK(csv.find("n/a") != std::string::npos);
  }
  SUBCASE("undirected classes give identical columns") {
    CorpusSpec spec;
    spec.per_class_count = 4;
    spec.classes = {2, 7, 11};
    const Corpus c = generate_corpus(spec);
    const DirectionResult r = direction_study(c, quick(2, 1), table, opt);
    for (const auto& row : r.rows) CHECK(row.acc_directed == row.acc_undirected);
  }
}

TEST_CASE("report formats") {
  Metrics m = metrics_from_predictions(std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{0, 0}, 12);
  m.loss_history = {1.5, 0.25};
  const std::string csv = confusion_csv(m);
  CHECK(csv.rfind("true\\predicted,array list,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 13);
  const std::string js = metrics_json(m, m, ModelConfig{}, Hyper{});
  CHECK(js.find("\"variant\"") != std::string::npos);
  CHECK(js.find("0.500000") != std::string::npos);
  CHECK(js.find("null") != std::string::npos);
  CHECK(accuracy_header(1) == "accuracy");
  CHECK(accuracy_header(5) == "mean_accuracy_5_seeds");
  const std::vector<AblationRow> rows{{"diagram", 0.5}};
  CHECK(ablation_csv(rows) == "variant,accuracy\ndiagram,0.500000\n");
  CHECK(ablation_table(rows).find("diagram") != std::string::npos);
}

}  // TEST_SUITE
