// Command-line front end: corpus generation, topology rendering, statistics,
// training, evaluation and the experiment suites.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "diagnet/harness.hpp"
#include "diagnet/png.hpp"

namespace fs = std::filesystem;
using namespace diagnet;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw DataError("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

// Anything that goes wrong while reading user-supplied inputs is a data error.
template <typename F>
auto load(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const DataError&) {
    throw;
  } catch (const std::exception& e) {
    throw DataError(what + ": " + e.what());
  }
}

std::vector<int> parse_classes(const std::string& spec) {
  if (spec == "all") return {};
  std::vector<int> out;
  std::istringstream is(spec);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      out.push_back(class_index(item));
    } catch (const std::exception& e) {
      throw UsageError(std::string("--classes: ") + e.what());
    }
  }
  if (out.empty()) throw UsageError("--classes: empty list");
  return out;
}

struct CommonOpts {
  std::string corpus;
  std::string embeddings;
  std::string out = ".";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  int repeats = 1;
  Hyper hyper;
  std::size_t input_side = 64;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool experiment) {
  cmd->add_option("--corpus", o.corpus, "Corpus directory written by gen")->required();
  cmd->add_option("--embeddings", o.embeddings, "GloVe-format text file (default: hashed stand-in table)");
  cmd->add_option("--seed", o.seed, "Seed for initialization and shuffling")->capture_default_str();
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--epochs1", o.hyper.epochs_phase1, "Epochs at the first learning rate")->capture_default_str();
  cmd->add_option("--epochs2", o.hyper.epochs_phase2, "Epochs at the second learning rate")->capture_default_str();
  cmd->add_option("--lr1", o.hyper.lr_phase1, "First-phase learning rate")->capture_default_str();
  cmd->add_option("--lr2", o.hyper.lr_phase2, "Second-phase learning rate")->capture_default_str();
  cmd->add_option("--batch", o.hyper.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--input-side", o.input_side, "Network input side in pixels")->capture_default_str();
  if (experiment) {
    cmd->add_option("--jobs", o.jobs, "Variants trained in parallel")->capture_default_str();
    cmd->add_option("--repeats", o.repeats, "Report the mean over this many seeds")->capture_default_str();
  }
}

void check_common(CommonOpts& o) {
  o.hyper.seed = o.seed;
  try {
    o.hyper.check();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (o.jobs == 0) throw UsageError("--jobs must be >= 1");
  if (o.repeats < 1) throw UsageError("--repeats must be >= 1");
  if (!fs::is_directory(o.corpus)) throw DataError("corpus directory not found: " + o.corpus);
  if (!o.embeddings.empty() && !fs::is_regular_file(o.embeddings)) {
    throw DataError("embeddings file not found: " + o.embeddings);
  }
}

EmbeddingTable embeddings_for(const CommonOpts& o) {
  if (o.embeddings.empty()) return EmbeddingTable::hashed(kDefaultEmbeddingDim);
  return load(o.embeddings, [&] { return load_embeddings(read_file(o.embeddings)); });
}

ModelConfig base_config(const CommonOpts& o, const EmbeddingTable& table) {
  ModelConfig c;
  c.input_side = o.input_side;
  if (table.dim() != 0) c.embedding_dim = table.dim();
  try {
    c.check();
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  return c;
}

Corpus corpus_for(const CommonOpts& o) {
  return load(o.corpus, [&] { return read_corpus(o.corpus); });
}

fs::path out_dir(const std::string& out) {
  fs::create_directories(out);
  return out;
}

ModelConfig variant_config(ModelConfig c, const std::string& variant) {
  c.use_diagram = c.use_topology = c.use_text = false;
  std::istringstream is(variant);
  std::string part;
  while (std::getline(is, part, '+')) {
    if (part == "diagram") {
      c.use_diagram = true;
    } else if (part == "topology") {
      c.use_topology = true;
    } else if (part == "text") {
      c.use_text = true;
    } else {
      throw UsageError("--variant: unknown branch \"" + part + "\" (expected diagram, topology, text joined by +)");
    }
  }
  if (!c.use_diagram && !c.use_topology && !c.use_text) throw UsageError("--variant: no branch selected");
  return c;
}

std::string eval_json(const Metrics& m, const std::string& split) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", m.overall_accuracy);
  std::string out = "{\n  \"split\": \"" + split + "\",\n  \"examples\": " +
                    std::to_string(std::accumulate(m.class_counts.begin(), m.class_counts.end(), 0)) +
                    ",\n  \"accuracy\": " + buf + "\n}\n";
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Diagram classification toolkit: synthetic corpora, topology rendering and fusion-model experiments"};
  app.require_subcommand(1);

  // gen
  CorpusSpec gen_spec;
  std::string gen_classes = "all", gen_out;
  int gen_canvas = kDefaultCanvas;
  bool gen_invert = false;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic annotated corpus");
  gen->add_option("--classes", gen_classes, "\"all\" or comma-separated class names")->capture_default_str();
  gen->add_option("--per-class", gen_spec.per_class_count, "Diagrams per class")->capture_default_str();
  gen->add_option("--seed", gen_spec.seed, "Generator seed")->capture_default_str();
  gen->add_option("--canvas", gen_canvas, "Canvas side in pixels")->capture_default_str();
  gen->add_option("--train-fraction", gen_spec.train_fraction, "Share of each class in the training split");
  gen->add_flag("--invert", gen_invert, "Store dark ink on a light background");
  gen->add_option("--out", gen_out, "Output directory")->required();

  // topo
  std::string topo_in, topo_out = ".";
  bool topo_undirected = false;
  auto* topo = app.add_subcommand("topo", "Render the topology raster of an annotation file");
  topo->add_option("--in", topo_in, "Annotation JSON file")->required();
  topo->add_flag("--undirected", topo_undirected, "Draw every relation as undirected");
  topo->add_option("--out", topo_out, "Output directory")->capture_default_str();

  // stats
  std::string stats_corpus, stats_out;
  auto* stats = app.add_subcommand("stats", "Print per-class diagram, object and relation counts");
  stats->add_option("--corpus", stats_corpus, "Corpus directory")->required();
  stats->add_option("--out", stats_out, "Also write stats.csv to this directory");

  // train
  CommonOpts train_o;
  std::string train_variant = "diagram+topology+text";
  bool train_undirected = false;
  std::size_t train_dim_topology = 100;
  auto* trn = app.add_subcommand("train", "Train one model and write metrics, confusion matrix and checkpoint");
  add_common(trn, train_o, false);
  trn->add_option("--variant", train_variant, "Branches joined by +")->capture_default_str();
  trn->add_flag("--undirected", train_undirected, "Undirected-only topology rasters");
  trn->add_option("--dim-topology", train_dim_topology, "Topology feature width")->capture_default_str();

  // eval
  std::string eval_corpus, eval_model, eval_split = "test", eval_out = ".", eval_embeddings;
  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus split");
  evl->add_option("--corpus", eval_corpus, "Corpus directory")->required();
  evl->add_option("--model", eval_model, "Checkpoint written by train")->required();
  evl->add_option("--embeddings", eval_embeddings, "GloVe-format text file (default: hashed stand-in table)");
  evl->add_option("--split", eval_split, "train or test")->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  evl->add_option("--out", eval_out, "Output directory")->capture_default_str();

  CommonOpts ablate_o, dir_o, sweep_o;
  auto* abl = app.add_subcommand("ablate", "Train the six branch combinations");
  add_common(abl, ablate_o, true);
  auto* dir = app.add_subcommand("direction", "Topology-only models with directed-aware vs undirected-only rasters");
  add_common(dir, dir_o, true);
  auto* swp = app.add_subcommand("sweep", "Full model over topology feature widths 20..200");
  add_common(swp, sweep_o, true);
  std::vector<std::size_t> sweep_dims = default_sweep_dims();
  swp->add_option("--dims", sweep_dims, "Topology widths to train")->delimiter(',');

  std::uint64_t gc_seed = 1;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks of every layer and the full model");
  gc->add_option("--seed", gc_seed, "Seed for weights and inputs")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*gen) {
    gen_spec.canvas_w = gen_spec.canvas_h = gen_canvas;
    gen_spec.classes = parse_classes(gen_classes);
    try {
      gen_spec.check();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    Corpus c;
    try {
      c = generate_corpus(gen_spec);
    } catch (const PlacementError& e) {
      // Layouts only fail to fit when the requested canvas is too small.
      throw UsageError(std::string(e.what()) + " (try a larger --canvas)");
    }
    if (gen_invert) {
      c.invert = true;
      for (auto& ex : c.examples) {
        for (auto& p : ex.diagram.pixels()) p = static_cast<std::uint8_t>(255 - p);
      }
    }
    write_corpus(c, out_dir(gen_out));
    std::cout << "wrote " << c.examples.size() << " diagrams to " << gen_out << "\n";
  } else if (*topo) {
    const auto ann = load(topo_in, [&] { return parse_annotation(read_file(topo_in)); });
    // Relations that end on a logical symbol are valid annotations but have no topology.
    const GrayRaster r = load(topo_in, [&] {
      return render_topology(ann, topo_undirected ? RenderMode::UndirectedOnly : RenderMode::DirectedAware);
    });
    const auto bytes = encode_png(r);
    const fs::path dst = out_dir(topo_out) / (fs::path(topo_in).stem().string() +
                                              (topo_undirected ? ".topo-u.png" : ".topo.png"));
    write_file(dst, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    std::cout << "wrote " << dst.string() << "\n";
  } else if (*stats) {
    const Corpus c = load(stats_corpus, [&] { return read_corpus(stats_corpus); });
    const auto rows = corpus_stats(c);
    std::cout << format_stats(rows);
    if (!stats_out.empty()) {
      std::string csv = "class,diagrams,objects,relations\n";
      for (const auto& r : rows) {
        csv += r.name + "," + std::to_string(r.diagrams) + "," + std::to_string(r.objects) + "," +
               std::to_string(r.relations) + "\n";
      }
      write_file(out_dir(stats_out) / "stats.csv", csv);
    }
  } else if (*trn) {
    check_common(train_o);
    const EmbeddingTable table = embeddings_for(train_o);
    ModelConfig cfg = variant_config(base_config(train_o, table), train_variant);
    if (train_undirected) cfg.topology_mode = RenderMode::UndirectedOnly;
    cfg.dim_topology = train_dim_topology;
    try {
      cfg.check();
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
    const Corpus c = corpus_for(train_o);
    TrainResult r = train(c, cfg, train_o.hyper, table);
    const fs::path out = out_dir(train_o.out);
    write_file(out / "metrics.json", metrics_json(r.test, r.train, cfg, train_o.hyper));
    write_file(out / "confusion.csv", confusion_csv(r.test));
    write_file(out / "model.txt", r.model.save());
    std::printf("%s: test accuracy %.6f, train accuracy %.6f\n", cfg.variant_name().c_str(),
                r.test.overall_accuracy, r.train.overall_accuracy);
  } else if (*evl) {
    if (!eval_embeddings.empty() && !fs::is_regular_file(eval_embeddings)) {
      throw DataError("embeddings file not found: " + eval_embeddings);
    }
    FusionModel model = load(eval_model, [&] { return FusionModel::load(read_file(eval_model)); });
    const EmbeddingTable table =
        eval_embeddings.empty()
            ? EmbeddingTable::hashed(model.config().embedding_dim)
            : load(eval_embeddings, [&] { return load_embeddings(read_file(eval_embeddings)); });
    const Corpus c = load(eval_corpus, [&] { return read_corpus(eval_corpus); });
    const Metrics m =
        load("evaluation", [&] { return evaluate(model, c, eval_split == "train" ? Split::Train : Split::Test, table); });
    const fs::path out = out_dir(eval_out);
    write_file(out / "eval.json", eval_json(m, eval_split));
    write_file(out / "confusion.csv", confusion_csv(m));
    std::printf("%s accuracy %.6f\n", eval_split.c_str(), m.overall_accuracy);
  } else if (*abl || *dir || *swp) {
    CommonOpts& o = *abl ? ablate_o : *dir ? dir_o : sweep_o;
    check_common(o);
    if (*swp) {
      if (sweep_dims.empty()) throw UsageError("--dims: empty list");
      for (std::size_t d : sweep_dims) {
        if (d == 0) throw UsageError("--dims: widths must be >= 1");
      }
    }
    const EmbeddingTable table = embeddings_for(o);
    ExperimentOptions opt;
    opt.base = base_config(o, table);
    opt.jobs = o.jobs;
    opt.repeats = o.repeats;
    const Corpus c = corpus_for(o);
    const fs::path out = out_dir(o.out);
    if (*abl) {
      const auto rows = ablate(c, o.hyper, table, opt);
      write_file(out / "ablation.csv", ablation_csv(rows, o.repeats));
      write_file(out / "ablation.txt", ablation_table(rows));
      std::cout << ablation_table(rows);
    } else if (*dir) {
      const auto res = direction_study(c, o.hyper, table, opt);
      write_file(out / "direction.csv", direction_csv(res));
      write_file(out / "direction.txt", direction_table(res));
      std::cout << direction_table(res);
    } else {
      const auto pts = dim_sweep(c, o.hyper, table, sweep_dims, opt);
      write_file(out / "sweep.csv", sweep_csv(pts, o.repeats));
      write_file(out / "sweep.txt", sweep_table(pts));
      std::cout << sweep_table(pts);
    }
  } else if (*gc) {
    bool ok = true;
    for (const auto& c : gradcheck_suite(gc_seed)) {
      std::printf("%-12s max relative error %.3e (limit %.0e) %s\n", c.name.c_str(), c.max_error, c.threshold,
                  c.passed() ? "ok" : "FAILED");
      ok = ok && c.passed();
    }
    if (!ok) {
      std::cerr << "error: gradient check failed\n";
      return kInternal;
    }
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Training allocates and frees activation buffers of a few hundred KB per
  // example; keeping them on the heap avoids an mmap/munmap pair each time.
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
