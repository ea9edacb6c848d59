#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "diagnet/png.hpp"
#include "diagnet/synthgen.hpp"

namespace diagnet {

namespace fs = std::filesystem;

namespace {

std::string slug(std::string_view name) {
  std::string s(name);
  for (auto& c : s) {
    if (c == ' ') c = '-';
  }
  return s;
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw std::runtime_error("write failed: " + p.string());
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

void write_corpus(const Corpus& c, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json meta;
  meta["per_class"] = c.spec.per_class_count;
  meta["canvas"] = {c.spec.canvas_w, c.spec.canvas_h};
  meta["seed"] = c.spec.seed;
  meta["train_fraction"] = c.spec.train_fraction;
  meta["classes"] = c.spec.class_list();
  meta["invert"] = c.invert;
  write_file(dir / "corpus.json", meta.dump(2) + "\n");

  std::string manifest = "annotation,diagram,class,split\n";
  char stem[64];
  for (std::size_t i = 0; i < c.examples.size(); ++i) {
    const Example& ex = c.examples[i];
    std::snprintf(stem, sizeof stem, "%04zu_%s", i, slug(ex.annotation.global.class_label).c_str());
    const std::string ann = std::string(stem) + ".json";
    const std::string png = std::string(stem) + ".png";
    write_file(dir / ann, serialize_annotation(ex.annotation));
    const auto bytes = encode_png(ex.diagram);
    write_file(dir / png, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    manifest += ann + "," + png + "," + ex.annotation.global.class_label + "," +
                std::string(to_string(ex.split)) + "\n";
  }
  write_file(dir / "manifest.csv", manifest);
}

Corpus read_corpus(const fs::path& dir) {
  Corpus c;
  if (fs::exists(dir / "corpus.json")) {
    const auto meta = nlohmann::json::parse(read_file(dir / "corpus.json"));
    c.spec.per_class_count = meta.value("per_class", c.spec.per_class_count);
    if (meta.contains("canvas")) {
      c.spec.canvas_w = meta["canvas"].at(0).get<int>();
      c.spec.canvas_h = meta["canvas"].at(1).get<int>();
    }
    c.spec.seed = meta.value("seed", c.spec.seed);
    c.spec.train_fraction = meta.value("train_fraction", c.spec.train_fraction);
    c.spec.classes = meta.value("classes", std::vector<int>{});
    c.invert = meta.value("invert", false);
  }

  std::istringstream manifest(read_file(dir / "manifest.csv"));
  std::string line;
  std::getline(manifest, line);  // header
  std::size_t row = 1;
  while (std::getline(manifest, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) cols.push_back(field);
    if (cols.size() != 4) {
      throw std::runtime_error("manifest.csv line " + std::to_string(row) + ": expected 4 columns");
    }
    Example ex;
    try {
      ex.annotation = parse_annotation(read_file(dir / cols[0]));
    } catch (const std::exception& e) {
      throw std::runtime_error(cols[0] + ": " + e.what());
    }
    const std::string png = read_file(dir / cols[1]);
    ex.diagram = decode_image(std::span(reinterpret_cast<const std::uint8_t*>(png.data()), png.size()));
    if (ex.diagram.width() != ex.annotation.canvas_w || ex.diagram.height() != ex.annotation.canvas_h) {
      throw std::runtime_error(cols[1] + ": image size does not match annotation canvas");
    }
    if (ex.annotation.global.class_label != cols[2]) {
      throw std::runtime_error("manifest.csv line " + std::to_string(row) + ": class mismatch with " + cols[0]);
    }
    if (cols[3] == "train") {
      ex.split = Split::Train;
    } else if (cols[3] == "test") {
      ex.split = Split::Test;
    } else {
      throw std::runtime_error("manifest.csv line " + std::to_string(row) + ": split must be train or test");
    }
    c.examples.push_back(std::move(ex));
  }
  return c;
}

}  // namespace diagnet
