#include "diagnet/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace diagnet {

void Hyper::check() const {
  if (epochs_phase1 < 0 || epochs_phase2 < 0) throw std::invalid_argument("epoch counts must be >= 0");
  if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
  if (!(lr_phase1 >= 0) || !(lr_phase2 >= 0)) throw std::invalid_argument("learning rates must be >= 0");
  if (!(momentum >= 0 && momentum < 1)) throw std::invalid_argument("momentum must be in [0, 1)");
}

PreparedSet prepare_split(const Corpus& corpus, Split split, const ModelConfig& cfg, const EmbeddingTable& table) {
  PreparedSet set;
  for (const Example& e : corpus.examples) {
    if (e.split != split) continue;
    set.inputs.push_back(prepare_inputs(e, cfg, table, corpus.invert));
    set.labels.push_back(static_cast<std::size_t>(class_index(e.annotation.global.class_label)));
  }
  return set;
}

Metrics metrics_from_predictions(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                                 std::size_t num_classes) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("prediction count differs from label count");
  Metrics m;
  m.confusion.assign(num_classes, std::vector<int>(num_classes, 0));
  m.class_counts.assign(num_classes, 0);
  m.per_class_accuracy.assign(num_classes, 0.0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= num_classes || predicted[i] >= num_classes) throw std::out_of_range("class index out of range");
    ++m.confusion[truth[i]][predicted[i]];
    ++m.class_counts[truth[i]];
    if (truth[i] == predicted[i]) ++correct;
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (m.class_counts[c] > 0) m.per_class_accuracy[c] = double(m.confusion[c][c]) / m.class_counts[c];
  }
  m.overall_accuracy = truth.empty() ? 0.0 : double(correct) / double(truth.size());
  return m;
}

namespace {

std::size_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

// Runs task(i) for i in [0, n) on up to `jobs` threads. Results are written
// by index, so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          task(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::uint64_t repeat_seed(std::uint64_t seed, int k) {
  return k == 0 ? seed : mix_seed(seed, 0x7265706561ULL, static_cast<std::uint64_t>(k));
}

}  // namespace

Metrics evaluate(FusionModel& model, const PreparedSet& set) {
  std::vector<std::size_t> pred;
  pred.reserve(set.size());
  for (const auto& in : set.inputs) pred.push_back(argmax(model.logits(in)));
  return metrics_from_predictions(set.labels, pred, model.config().num_classes);
}

Metrics evaluate(FusionModel& model, const Corpus& corpus, Split split, const EmbeddingTable& table) {
  return evaluate(model, prepare_split(corpus, split, model.config(), table));
}

double pair_accuracy(FusionModel& model, const PreparedSet& set, std::size_t a, std::size_t b) {
  std::size_t n = 0, correct = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const std::size_t y = set.labels[i];
    if (y != a && y != b) continue;
    const Tensor z = model.logits(set.inputs[i]);
    const std::size_t pred = z[b] > z[a] ? b : a;
    ++n;
    if (pred == y) ++correct;
  }
  return n == 0 ? 0.0 : double(correct) / double(n);
}

TrainResult train(const PreparedSet& train_set, const PreparedSet& test_set, const ModelConfig& cfg,
                  const Hyper& hyper) {
  hyper.check();
  if (train_set.size() == 0) throw std::invalid_argument("training split is empty");
  FusionModel model(cfg, hyper.seed);
  SgdMomentum opt(hyper.lr_phase1, hyper.momentum);
  const std::vector<Param*> params = model.params();

  std::vector<double> history;
  std::vector<std::size_t> order(train_set.size());
  for (int epoch = 0; epoch < hyper.epochs(); ++epoch) {
    opt.set_learning_rate(hyper.learning_rate(epoch));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(hyper.seed, 0x73687566ULL, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += hyper.batch_size) {
      const std::size_t end = std::min(order.size(), start + hyper.batch_size);
      model.zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const LossResult lr = softmax_cross_entropy(model.logits(train_set.inputs[i]), train_set.labels[i]);
        loss_sum += lr.loss;
        model.backward(lr.grad);
      }
      opt.step(params, 1.0 / double(end - start));
    }
    history.push_back(loss_sum / double(order.size()));
  }

  Metrics test = evaluate(model, test_set);
  test.loss_history = history;
  Metrics tr = evaluate(model, train_set);
  tr.loss_history = history;
  return TrainResult{std::move(model), std::move(test), std::move(tr)};
}

TrainResult train(const Corpus& corpus, const ModelConfig& cfg, const Hyper& hyper, const EmbeddingTable& table) {
  const PreparedSet tr = prepare_split(corpus, Split::Train, cfg, table);
  const PreparedSet te = prepare_split(corpus, Split::Test, cfg, table);
  return train(tr, te, cfg, hyper);
}

std::vector<ModelConfig> ablation_variants(const ModelConfig& base) {
  const bool table[6][3] = {
      // diagram, topology, text
      {true, false, false}, {false, true, false}, {true, true, false},
      {true, false, true},  {false, true, true},  {true, true, true},
  };
  std::vector<ModelConfig> out;
  for (const auto& row : table) {
    ModelConfig c = base;
    c.use_diagram = row[0];
    c.use_topology = row[1];
    c.use_text = row[2];
    out.push_back(c);
  }
  return out;
}

namespace {

// Mean test accuracy of each config over opt.repeats seeds, all trained on
// the same prepared sets.
std::vector<double> run_configs(const PreparedSet& tr, const PreparedSet& te, const std::vector<ModelConfig>& cfgs,
                                const Hyper& hyper, const ExperimentOptions& opt) {
  if (opt.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  const std::size_t reps = static_cast<std::size_t>(opt.repeats);
  std::vector<double> acc(cfgs.size() * reps);
  parallel_for(acc.size(), opt.jobs, [&](std::size_t i) {
    Hyper h = hyper;
    h.seed = repeat_seed(hyper.seed, static_cast<int>(i % reps));
    acc[i] = train(tr, te, cfgs[i / reps], h).test.overall_accuracy;
  });
  std::vector<double> mean(cfgs.size(), 0.0);
  for (std::size_t i = 0; i < acc.size(); ++i) mean[i / reps] += acc[i];
  for (auto& m : mean) m /= double(reps);
  return mean;
}

ModelConfig all_branches(ModelConfig c) {
  c.use_diagram = c.use_topology = c.use_text = true;
  return c;
}

}  // namespace

std::vector<AblationRow> ablate(const Corpus& corpus, const Hyper& hyper, const EmbeddingTable& table,
                                const ExperimentOptions& opt) {
  const ModelConfig full = all_branches(opt.base);
  const PreparedSet tr = prepare_split(corpus, Split::Train, full, table);
  const PreparedSet te = prepare_split(corpus, Split::Test, full, table);
  const auto variants = ablation_variants(opt.base);
  const auto acc = run_configs(tr, te, variants, hyper, opt);
  std::vector<AblationRow> rows;
  for (std::size_t i = 0; i < variants.size(); ++i) rows.push_back({variants[i].variant_name(), acc[i]});
  return rows;
}

DirectionResult direction_study(const Corpus& corpus, const Hyper& hyper, const EmbeddingTable& table,
                                const ExperimentOptions& opt) {
  if (opt.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
  ModelConfig cfg[2] = {opt.base, opt.base};
  for (int m = 0; m < 2; ++m) {
    cfg[m].use_diagram = cfg[m].use_text = false;
    cfg[m].use_topology = true;
    cfg[m].topology_mode = m == 0 ? RenderMode::DirectedAware : RenderMode::UndirectedOnly;
  }
  PreparedSet tr[2], te[2];
  for (int m = 0; m < 2; ++m) {
    tr[m] = prepare_split(corpus, Split::Train, cfg[m], table);
    te[m] = prepare_split(corpus, Split::Test, cfg[m], table);
  }
  if (tr[0].size() == 0) throw std::invalid_argument("training split is empty");

  const std::size_t reps = static_cast<std::size_t>(opt.repeats);
  const std::size_t dg = static_cast<std::size_t>(class_index("directed graph"));
  const std::size_t ug = static_cast<std::size_t>(class_index("undirected graph"));
  std::vector<Metrics> metrics(2 * reps);
  std::vector<double> pair(2 * reps);
  parallel_for(2 * reps, opt.jobs, [&](std::size_t i) {
    const std::size_t m = i / reps;
    Hyper h = hyper;
    h.seed = repeat_seed(hyper.seed, static_cast<int>(i % reps));
    TrainResult r = train(tr[m], te[m], cfg[m], h);
    pair[i] = pair_accuracy(r.model, te[m], dg, ug);
    metrics[i] = std::move(r.test);
  });

  DirectionResult out;
  const std::size_t nc = opt.base.num_classes;
  auto mean = [&](std::size_t m, auto get) {
    double s = 0;
    for (std::size_t k = 0; k < reps; ++k) s += get(metrics[m * reps + k]);
    return s / double(reps);
  };
  for (std::size_t c = 0; c < nc; ++c) {
    DirectionRow row;
    row.name = c < kNumClasses ? std::string(class_name(static_cast<int>(c))) : std::to_string(c);
    row.count = metrics[0].class_counts[c];
    row.acc_directed = mean(0, [&](const Metrics& mt) { return mt.per_class_accuracy[c]; });
    row.acc_undirected = mean(1, [&](const Metrics& mt) { return mt.per_class_accuracy[c]; });
    out.rows.push_back(row);
  }
  DirectionRow overall;
  overall.name = "overall";
  overall.count = static_cast<int>(te[0].size());
  overall.acc_directed = mean(0, [](const Metrics& mt) { return mt.overall_accuracy; });
  overall.acc_undirected = mean(1, [](const Metrics& mt) { return mt.overall_accuracy; });
  out.rows.push_back(overall);

  for (std::size_t k = 0; k < reps; ++k) {
    out.pair_directed += pair[k] / double(reps);
    out.pair_undirected += pair[reps + k] / double(reps);
  }
  out.pair_count = metrics[0].class_counts[dg] + metrics[0].class_counts[ug];
  return out;
}

std::vector<std::size_t> default_sweep_dims() {
  std::vector<std::size_t> d;
  for (std::size_t v = 20; v <= 200; v += 20) d.push_back(v);
  return d;
}

std::vector<SweepPoint> dim_sweep(const Corpus& corpus, const Hyper& hyper, const EmbeddingTable& table,
                                  const std::vector<std::size_t>& dims, const ExperimentOptions& opt) {
  const ModelConfig full = all_branches(opt.base);
  const PreparedSet tr = prepare_split(corpus, Split::Train, full, table);
  const PreparedSet te = prepare_split(corpus, Split::Test, full, table);
  std::vector<ModelConfig> cfgs;
  for (std::size_t d : dims) {
    ModelConfig c = full;
    c.dim_topology = d;
    c.check();
    cfgs.push_back(c);
  }
  const auto acc = run_configs(tr, te, cfgs, hyper, opt);
  std::vector<SweepPoint> pts;
  for (std::size_t i = 0; i < dims.size(); ++i) pts.push_back({dims[i], acc[i]});
  return pts;
}

// ---- reports ----------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

}  // namespace

std::string accuracy_header(int repeats) {
  return repeats <= 1 ? "accuracy" : "mean_accuracy_" + std::to_string(repeats) + "_seeds";
}

std::string ablation_csv(const std::vector<AblationRow>& rows, int repeats) {
  std::string out = "variant," + accuracy_header(repeats) + "\n";
  for (const auto& r : rows) out += r.variant + "," + fmt(r.accuracy) + "\n";
  return out;
}

std::string ablation_table(const std::vector<AblationRow>& rows) {
  std::string out = pad("variant", 26) + "accuracy\n";
  for (const auto& r : rows) out += pad(r.variant, 26) + fmt(r.accuracy) + "\n";
  return out;
}

std::string direction_csv(const DirectionResult& r) {
  std::string out = "class,acc_directed,acc_undirected\n";
  for (const auto& row : r.rows) {
    if (row.count == 0) {
      out += row.name + ",n/a,n/a\n";
    } else {
      out += row.name + "," + fmt(row.acc_directed) + "," + fmt(row.acc_undirected) + "\n";
    }
  }
  return out;
}

std::string direction_table(const DirectionResult& r) {
  std::string out = pad("class", 20) + pad("directed", 12) + "undirected\n";
  for (const auto& row : r.rows) {
    if (row.count == 0) {
      out += pad(row.name, 20) + pad("n/a", 12) + "n/a\n";
    } else {
      out += pad(row.name, 20) + pad(fmt(row.acc_directed), 12) + fmt(row.acc_undirected) + "\n";
    }
  }
  out += "graph pair (" + std::to_string(r.pair_count) + " examples): directed " + fmt(r.pair_directed) +
         ", undirected " + fmt(r.pair_undirected) + "\n";
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& pts, int repeats) {
  std::string out = "dim," + accuracy_header(repeats) + "\n";
  for (const auto& p : pts) out += std::to_string(p.dim) + "," + fmt(p.accuracy) + "\n";
  return out;
}

std::string sweep_table(const std::vector<SweepPoint>& pts) {
  std::string out = pad("dim_topology", 14) + "accuracy\n";
  for (const auto& p : pts) out += pad(std::to_string(p.dim), 14) + fmt(p.accuracy) + "\n";
  return out;
}

std::string confusion_csv(const Metrics& m) {
  const std::size_t n = m.confusion.size();
  auto name = [](std::size_t c) {
    return c < kNumClasses ? std::string(class_name(static_cast<int>(c))) : std::to_string(c);
  };
  std::string out = "true\\predicted";
  for (std::size_t c = 0; c < n; ++c) out += "," + name(c);
  out += "\n";
  for (std::size_t r = 0; r < n; ++r) {
    out += name(r);
    for (std::size_t c = 0; c < n; ++c) out += "," + std::to_string(m.confusion[r][c]);
    out += "\n";
  }
  return out;
}

std::string metrics_json(const Metrics& test, const Metrics& train, const ModelConfig& cfg, const Hyper& hyper) {
  // Numbers go through fmt() and are emitted as raw JSON so the text is
  // stable across platforms.
  auto list = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
    return s + "]";
  };
  std::string out = "{\n";
  out += "  \"variant\": \"" + cfg.variant_name() + "\",\n";
  out += "  \"config\": " + cfg.to_json() + ",\n";
  out += "  \"hyper\": {\"epochs_phase1\": " + std::to_string(hyper.epochs_phase1) +
         ", \"lr_phase1\": " + fmt(hyper.lr_phase1) + ", \"epochs_phase2\": " + std::to_string(hyper.epochs_phase2) +
         ", \"lr_phase2\": " + fmt(hyper.lr_phase2) + ", \"momentum\": " + fmt(hyper.momentum) +
         ", \"batch_size\": " + std::to_string(hyper.batch_size) + ", \"seed\": " + std::to_string(hyper.seed) +
         "},\n";
  out += "  \"test_accuracy\": " + fmt(test.overall_accuracy) + ",\n";
  out += "  \"train_accuracy\": " + fmt(train.overall_accuracy) + ",\n";
  out += "  \"per_class_accuracy\": {";
  for (std::size_t c = 0; c < test.per_class_accuracy.size(); ++c) {
    const std::string name = c < kNumClasses ? std::string(class_name(static_cast<int>(c))) : std::to_string(c);
    out += (c ? ", " : "") + nlohmann::json(name).dump() + ": " +
           (test.class_counts[c] == 0 ? std::string("null") : fmt(test.per_class_accuracy[c]));
  }
  out += "},\n";
  out += "  \"loss_history\": " + list(test.loss_history) + "\n";
  out += "}\n";
  return out;
}

}  // namespace diagnet
