#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "diagnet/annotation.hpp"
#include "diagnet/png.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "diagnet_cli_unit";

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

Run cli(const std::string& args) {
  fs::create_directories(kWork);
  const fs::path out = kWork / "stdout.txt", err = kWork / "stderr.txt";
  const std::string cmd = std::string("'") + DIAGNET_CLI_PATH + "' " + args + " >'" + out.string() + "' 2>'" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string p(const fs::path& x) { return "'" + x.string() + "'"; }

// One small corpus shared by the cases below.
const fs::path& corpus() {
  static const fs::path dir = [] {
    const fs::path d = kWork / "corpus";
    fs::remove_all(d);
    const Run r = cli("gen --per-class 4 --seed 1 --out " + p(d));
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

std::string quick_common(const fs::path& out) {
  return "--corpus " + p(corpus()) + " --epochs1 1 --epochs2 1 --input-side 16 --out " + p(out);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help exits zero without side effects") {
  fs::remove_all(kWork / "help");
  const Run top = cli("--help");
  CHECK(top.code == 0);
  CHECK(top.out.find("gen") != std::string::npos);
  for (const char* sub : {"gen", "topo", "stats", "train", "eval", "ablate", "direction", "sweep", "gradcheck"}) {
    const Run r = cli(std::string(sub) + " --help --out " + p(kWork / "help"));
    CHECK(r.code == 0);
    CHECK(r.out.find("Usage") != std::string::npos);
  }
  CHECK_FALSE(fs::exists(kWork / "help"));
}

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("gen --per-class 4").code == 1);
  CHECK(cli("gen --bogus --out " + p(kWork / "x")).code == 1);
  CHECK(cli("gen --per-class 2 --out " + p(kWork / "x")).code == 1);
  CHECK(cli("gen --classes 'hash table' --out " + p(kWork / "x")).code == 1);
  const Run small = cli("gen --per-class 4 --canvas 16 --out " + p(kWork / "tiny"));
  CHECK(small.code == 1);
  CHECK(small.err.find("--canvas") != std::string::npos);
  CHECK(cli("train --variant diagram+color " + quick_common(kWork / "x")).code == 1);
  CHECK(cli("eval --corpus " + p(corpus()) + " --model m --split dev").code == 1);
}

TEST_CASE("data errors exit 2") {
  CHECK(cli("stats --corpus " + p(kWork / "no-such-dir")).code == 2);
  CHECK(cli("topo --in " + p(kWork / "missing.json")).code == 2);
  const fs::path bad = kWork / "bad.json";
  std::ofstream(bad) << R"({"source": "", "class": "hash table", "description": "", "canvas": [32, 32],
    "objects": [], "relations": []})";
  const Run r = cli("topo --in " + p(bad) + " --out " + p(kWork));
  CHECK(r.code == 2);
  CHECK(r.err.find("12-category") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  const fs::path arrow_to_arrow = kWork / "arrow_to_arrow.json";
  std::ofstream(arrow_to_arrow) << R"({"source": "", "class": "directed graph", "description": "", "canvas": [64, 64],
    "objects": [{"id": 1, "kind": "semantic-shape", "label": "v", "description": "", "bbox": [2, 2, 10, 10]},
                {"id": 2, "kind": "logical-symbol", "label": "arrow", "description": "", "bbox": [20, 20, 30, 30]}],
    "relations": [{"id": 1, "symbol": "arrow", "head": 1, "tail": 2}]})";
  CHECK(cli("topo --in " + p(arrow_to_arrow) + " --out " + p(kWork)).code == 2);
}

TEST_CASE("gen then stats counts 48 diagrams") {
  const Run r = cli("stats --corpus " + p(corpus()) + " --out " + p(kWork / "stats"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("total") != std::string::npos);
  const std::string csv = slurp(kWork / "stats" / "stats.csv");
  CHECK(csv.find("\ntotal,48,") != std::string::npos);
}

TEST_CASE("topo writes a canvas-sized png next to its name") {
  fs::path ann;
  for (const auto& e : fs::directory_iterator(corpus())) {
    if (e.path().extension() == ".json" && e.path().filename() != "corpus.json") {
      ann = e.path();
      break;
    }
  }
  REQUIRE(!ann.empty());
  const auto a = diagnet::parse_annotation(slurp(ann));
  const fs::path out = kWork / "topo";
  fs::remove_all(out);
  const std::string before = slurp(ann);
  REQUIRE(cli("topo --in " + p(ann) + " --out " + p(out)).code == 0);
  REQUIRE(cli("topo --undirected --in " + p(ann) + " --out " + p(out)).code == 0);
  const std::string stem = ann.stem().string();
  for (const char* suffix : {".topo.png", ".topo-u.png"}) {
    const std::string bytes = slurp(out / (stem + suffix));
    const auto img = diagnet::decode_image(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
    CHECK(img.width() == a.canvas_w);
    CHECK(img.height() == a.canvas_h);
  }
  CHECK(slurp(ann) == before);
}

TEST_CASE("train then eval") {
  const fs::path out = kWork / "train";
  fs::remove_all(out);
  REQUIRE(cli("train " + quick_common(out)).code == 0);
  for (const char* f : {"metrics.json", "confusion.csv", "model.txt"}) CHECK(fs::exists(out / f));
  const fs::path ev = kWork / "eval";
  const Run r = cli("eval --corpus " + p(corpus()) + " --model " + p(out / "model.txt") + " --out " + p(ev));
  CHECK(r.code == 0);
  CHECK(slurp(ev / "confusion.csv") == slurp(out / "confusion.csv"));
  CHECK(fs::exists(ev / "eval.json"));
}

TEST_CASE("experiment reports are reproducible") {
  const fs::path a = kWork / "abl_a", b = kWork / "abl_b";
  REQUIRE(cli("ablate " + quick_common(a)).code == 0);
  REQUIRE(cli("ablate --jobs 2 " + quick_common(b)).code == 0);
  const std::string abl = slurp(a / "ablation.csv");
  CHECK(abl == slurp(b / "ablation.csv"));
  CHECK(std::count(abl.begin(), abl.end(), '\n') == 7);

  REQUIRE(cli("sweep --dims 20,40 " + quick_common(a)).code == 0);
  REQUIRE(cli("sweep --dims 20,40 " + quick_common(b)).code == 0);
  CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));

  REQUIRE(cli("direction " + quick_common(a)).code == 0);
  REQUIRE(cli("direction " + quick_common(b)).code == 0);
  CHECK(slurp(a / "direction.csv") == slurp(b / "direction.csv"));
}

TEST_CASE("gradcheck command") {
  const Run r = cli("gradcheck");
  CHECK(r.code == 0);
  CHECK(r.out.find("linear") != std::string::npos);
}

}  // TEST_SUITE
