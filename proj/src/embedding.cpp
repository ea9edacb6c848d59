#include "diagnet/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "diagnet/rng.hpp"

namespace diagnet {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

EmbeddingTable EmbeddingTable::hashed(std::size_t dim) {
  EmbeddingTable t;
  t.dim_ = dim;
  t.hashed_ = true;
  return t;
}

void EmbeddingTable::insert(std::string token, std::vector<double> vec) {
  if (hashed_) throw std::logic_error("cannot insert into a hashed embedding table");
  if (!rows_.empty() && vec.size() != dim_) {
    throw std::invalid_argument("embedding for \"" + token + "\" has " + std::to_string(vec.size()) +
                                " values, table has " + std::to_string(dim_));
  }
  dim_ = vec.size();
  rows_.insert_or_assign(lower(token), std::move(vec));
}

std::optional<std::vector<double>> EmbeddingTable::lookup(std::string_view token) const {
  const std::string key = lower(token);
  if (hashed_) {
    Rng rng(splitmix64(fnv1a(key)));
    std::vector<double> v(dim_);
    double norm = 0;
    for (auto& x : v) {
      x = rng.uniform(-1.0, 1.0);
      norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
  }
  auto it = rows_.find(key);
  if (it == rows_.end()) return std::nullopt;
  return it->second;
}

EmbeddingTable load_embeddings(std::string_view text) {
  EmbeddingTable t;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::istringstream ls{std::string(line)};
    std::string token;
    if (!(ls >> token)) continue;
    std::vector<double> vec;
    std::string num;
    while (ls >> num) {
      double v = 0;
      auto [p, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
      if (ec != std::errc() || p != num.data() + num.size()) {
        throw std::invalid_argument("embeddings line " + std::to_string(line_no) + ": bad number \"" + num + "\"");
      }
      vec.push_back(v);
    }
    if (vec.empty()) throw std::invalid_argument("embeddings line " + std::to_string(line_no) + ": no values");
    if (t.size() > 0 && vec.size() != t.dim()) {
      throw std::invalid_argument("embeddings line " + std::to_string(line_no) + ": ragged row with " +
                                  std::to_string(vec.size()) + " values, expected " + std::to_string(t.dim()));
    }
    t.insert(std::move(token), std::move(vec));
  }
  return t;
}

Tensor embed_text(std::span<const std::string> tokens, const EmbeddingTable& table, std::size_t dim) {
  if (table.dim() != 0 && table.dim() != dim) {
    throw ShapeError("embedding table has width " + std::to_string(table.dim()) + ", model expects " +
                     std::to_string(dim));
  }
  Tensor out({dim});
  if (tokens.empty()) return out;
  for (const auto& tok : tokens) {
    if (auto v = table.lookup(tok)) {
      for (std::size_t i = 0; i < dim; ++i) out[i] += (*v)[i];
    }
  }
  for (auto& x : out.data()) x /= static_cast<double>(tokens.size());
  return out;
}

std::vector<std::string> text_tokens(const DiagramAnnotation& a) {
  std::vector<std::string> out;
  auto split = [&](const std::string& s) {
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(lower(tok));
  };
  split(a.global.description);
  for (const auto& o : a.objects) split(o.description);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace diagnet
