#include "diagnet/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "diagnet/png.hpp"

namespace diagnet {

void CorpusSpec::check() const {
  if (per_class_count < 4) throw std::invalid_argument("per_class_count must be >= 4");
  if (canvas_w < 16 || canvas_h < 16) throw std::invalid_argument("canvas sides must be >= 16");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  for (int c : classes) {
    if (c < 0 || c >= kNumClasses) throw std::invalid_argument("class index out of range");
  }
}

std::vector<int> CorpusSpec::class_list() const {
  if (!classes.empty()) return classes;
  std::vector<int> all(kNumClasses);
  for (int i = 0; i < kNumClasses; ++i) all[i] = i;
  return all;
}

int CorpusSpec::test_count() const {
  // The epsilon keeps exact products such as 0.3 * 10 from flooring to 2.
  return static_cast<int>(std::floor((1.0 - train_fraction) * per_class_count + 1e-9));
}

std::string_view to_string(Split s) { return s == Split::Train ? "train" : "test"; }

const std::vector<std::string>& class_vocabulary(int class_index) {
  static const std::vector<std::vector<std::string>> vocab = [] {
    const char* own[kNumClasses][4] = {
        {"index", "array", "slot", "contiguous"},   {"pointer", "next", "link", "chain"},
        {"left", "right", "child", "binary"},       {"subtree", "children", "branch", "hierarchy"},
        {"enqueue", "dequeue", "front", "rear"},    {"push", "pop", "top", "lifo"},
        {"digraph", "arc", "indegree", "outdegree"}, {"vertex", "adjacent", "neighbor", "degree"},
        {"thread", "resource", "wait", "hold"},     {"start", "decision", "process", "end"},
        {"gate", "signal", "and", "xor"},           {"hub", "router", "host", "switch"}};
    std::vector<std::vector<std::string>> out;
    for (auto& words : own) {
      std::vector<std::string> v(std::begin(words), std::end(words));
      v.emplace_back("element");
      v.emplace_back("structure");
      out.push_back(std::move(v));
    }
    return out;
  }();
  return vocab.at(class_index);
}

namespace {

// Upper bound on how far a small layout is enlarged to fill the canvas.
constexpr double kMaxFitScale = 3.0;
// Smallest node box that still has a drawable outline.
constexpr int kMinNodeSide = 4;

enum class DrawnShape { Circle, Rectangle, Diamond };

struct NodePlan {
  BBox box;
  std::string role;
  std::optional<DrawnShape> shape;  // unset: sampled
};

struct EdgePlan {
  int head = 0;  // node indices
  int tail = 0;
  bool directed = false;
  std::vector<Point> waypoints;
};

struct Plan {
  std::vector<NodePlan> nodes;
  std::vector<EdgePlan> edges;
};

struct Canvas {
  int w;
  int h;
  double u;  // shorter side
  int margin;

  Canvas(int w_, int h_) : w(w_), h(h_), u(std::min(w_, h_)), margin(static_cast<int>(std::lround(0.04 * std::min(w_, h_)))) {}
  int px(double frac) const { return std::max(1, static_cast<int>(std::lround(frac * u))); }
};

[[noreturn]] void too_small(std::string_view what) {
  throw PlacementError("canvas too small to place " + std::string(what));
}

BBox box_at(const Canvas& cv, double cx, double cy, int bw, int bh) {
  BBox b;
  b.left = std::clamp(static_cast<int>(std::lround(cx - bw / 2.0)), 0, cv.w - bw);
  b.right = b.left + bw;
  b.lower = std::clamp(static_cast<int>(std::lround(cy - bh / 2.0)), 0, cv.h - bh);
  b.upper = b.lower + bh;
  return b;
}

BBox grown(const BBox& b, int g) { return {b.left - g, b.right + g, b.lower - g, b.upper + g}; }

bool clear_of(const BBox& b, const std::vector<NodePlan>& nodes, int gap) {
  const BBox g = grown(b, gap);
  return std::none_of(nodes.begin(), nodes.end(), [&](const NodePlan& n) { return g.overlaps(n.box); });
}

// Rejection sampling of a free spot inside the margins.
BBox place_random(Rng& rng, const Canvas& cv, int bw, int bh, const std::vector<NodePlan>& nodes, int gap) {
  const int max_left = cv.w - cv.margin - bw;
  const int max_lower = cv.h - cv.margin - bh;
  if (max_left < cv.margin || max_lower < cv.margin) too_small("a node");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    BBox b;
    b.left = rng.uniform_int(cv.margin, max_left);
    b.lower = rng.uniform_int(cv.margin, max_lower);
    b.right = b.left + bw;
    b.upper = b.lower + bh;
    if (clear_of(b, nodes, gap)) return b;
  }
  too_small(std::to_string(nodes.size() + 1) + " non-overlapping nodes after 1000 attempts");
}

// ---- Per-class structure ---------------------------------------------------

// Cells of width cw sharing borders, left to right.
std::vector<BBox> cell_row(int x0, int y0, int n, int cw, int ch) {
  std::vector<BBox> cells;
  for (int i = 0; i < n; ++i) cells.push_back({x0 + i * cw, x0 + (i + 1) * cw, y0, y0 + ch});
  return cells;
}

Plan plan_array_list(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(4, 8);
  const double fit = std::min(static_cast<double>(cv.w - 2 * cv.margin) / n, 0.16 * cv.u);
  const int cw = static_cast<int>(fit * rng.uniform(0.8, 1.0));
  const int ch = std::max(4, static_cast<int>(cw * rng.uniform(0.7, 1.1)));
  if (cw < 4 || cv.h - cv.margin - ch < cv.margin) too_small("array cells");
  const int x0 = rng.uniform_int(cv.margin, cv.w - cv.margin - n * cw);
  const int y0 = rng.uniform_int(cv.margin, cv.h - cv.margin - ch);
  Plan p;
  for (const auto& b : cell_row(x0, y0, n, cw, ch)) p.nodes.push_back({b, "cell", std::nullopt});
  return p;
}

Plan plan_linked_list(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(3, 7);
  const int avail = cv.w - 2 * cv.margin;
  const int b = static_cast<int>(std::min(avail / (n * 1.6), 0.16 * cv.u) * rng.uniform(0.8, 1.0));
  if (b < 4) too_small("list nodes");
  const int slack = avail - n * b;
  const int gap = std::max(3, static_cast<int>(slack / (n - 1) * rng.uniform(0.5, 1.0)));
  const int total = n * b + (n - 1) * gap;
  if (total > avail) too_small("list nodes");
  const int bh = std::max(4, static_cast<int>(b * rng.uniform(0.7, 1.1)));
  const int x0 = rng.uniform_int(cv.margin, cv.w - cv.margin - total);
  const int y0 = rng.uniform_int(cv.margin, cv.h - cv.margin - bh);
  Plan p;
  for (int i = 0; i < n; ++i) {
    const int l = x0 + i * (b + gap);
    p.nodes.push_back({{l, l + b, y0, y0 + bh}, "node", std::nullopt});
    if (i > 0) p.edges.push_back({i - 1, i, true, {}});
  }
  return p;
}

// Tidy layered layout: leaves take consecutive columns, parents sit at the
// mean column of their children, one row per depth.
Plan layout_tree(Rng& rng, const Canvas& cv, const std::vector<int>& parent) {
  const int n = static_cast<int>(parent.size());
  std::vector<std::vector<int>> children(n);
  for (int i = 1; i < n; ++i) children[parent[i]].push_back(i);
  std::vector<int> depth(n, 0);
  for (int i = 1; i < n; ++i) depth[i] = depth[parent[i]] + 1;  // parents precede children
  const int max_depth = *std::max_element(depth.begin(), depth.end());

  std::vector<double> slot(n, 0.0);
  int next_leaf = 0;
  auto assign = [&](auto&& self, int v) -> void {
    if (children[v].empty()) {
      slot[v] = next_leaf++;
      return;
    }
    double sum = 0;
    for (int c : children[v]) {
      self(self, c);
      sum += slot[c];
    }
    slot[v] = sum / static_cast<double>(children[v].size());
  };
  assign(assign, 0);

  const double col_w = static_cast<double>(cv.w - 2 * cv.margin) / next_leaf;
  const double row_h = static_cast<double>(cv.h - 2 * cv.margin) / (max_depth + 1);
  const double cell = std::min(std::min(col_w, row_h) * rng.uniform(0.45, 0.6), 0.14 * cv.u);
  const int bw = static_cast<int>(cell);
  const int bh = std::max(4, static_cast<int>(cell * rng.uniform(0.75, 1.0)));
  if (bw < 4) too_small("tree nodes");

  Plan p;
  for (int v = 0; v < n; ++v) {
    const double cx = cv.margin + (slot[v] + 0.5) * col_w;
    const double cy = cv.margin + (depth[v] + 0.5) * row_h;
    p.nodes.push_back({box_at(cv, cx, cy, bw, bh), "node", std::nullopt});
  }
  for (int v = 1; v < n; ++v) p.edges.push_back({parent[v], v, false, {}});
  return p;
}

Plan plan_binary_tree(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(3, 9);
  std::vector<int> parent(n, -1), nchild(n, 0);
  for (int i = 1; i < n; ++i) {
    std::vector<int> open;
    for (int j = 0; j < i; ++j) {
      if (nchild[j] < 2) open.push_back(j);
    }
    parent[i] = open[rng.below(open.size())];
    ++nchild[parent[i]];
  }
  return layout_tree(rng, cv, parent);
}

Plan plan_non_binary_tree(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(4, 10);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::vector<int> parent(n, -1), nchild(n, 0);
    for (int i = 1; i < n; ++i) {
      std::vector<int> open;
      for (int j = 0; j < i; ++j) {
        if (nchild[j] < 4) open.push_back(j);
      }
      parent[i] = open[rng.below(open.size())];
      ++nchild[parent[i]];
    }
    const int widest = *std::max_element(nchild.begin(), nchild.end());
    // A root whose children are all leaves, with 4+ of them, is a star.
    const bool star = nchild[0] == n - 1 && n - 1 >= 4;
    if (widest >= 3 && !star) return layout_tree(rng, cv, parent);
  }
  too_small("a non-binary tree");
}

Plan plan_queue(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(4, 8);
  const double fit = std::min(static_cast<double>(cv.w - 2 * cv.margin) / n, 0.16 * cv.u);
  const int cw = static_cast<int>(fit * rng.uniform(0.8, 1.0));
  const int ch = std::max(4, static_cast<int>(cw * rng.uniform(0.7, 1.1)));
  const int mw = std::max(4, static_cast<int>(cw * rng.uniform(0.7, 0.9)));
  const int mh = std::max(4, static_cast<int>(ch * rng.uniform(0.6, 0.8)));
  const int gap = std::max(4, cv.px(0.1));
  if (cw < 4 || cv.h - 2 * cv.margin < ch + gap + mh) too_small("queue cells");
  const int x0 = rng.uniform_int(cv.margin, cv.w - cv.margin - n * cw);
  const bool above = rng.bernoulli(0.5);
  const int y0 = above ? rng.uniform_int(cv.margin + mh + gap, cv.h - cv.margin - ch)
                       : rng.uniform_int(cv.margin, cv.h - cv.margin - ch - gap - mh);
  const int my = above ? y0 - gap - mh : y0 + ch + gap;
  Plan p;
  for (const auto& b : cell_row(x0, y0, n, cw, ch)) p.nodes.push_back({b, "cell", std::nullopt});
  const auto& first = p.nodes.front().box;
  const auto& last = p.nodes.back().box;
  const int fl = std::clamp((first.left + first.right - mw) / 2, 0, cv.w - mw);
  const int rl = std::clamp((last.left + last.right - mw) / 2, 0, cv.w - mw);
  p.nodes.push_back({{fl, fl + mw, my, my + mh}, "front", std::nullopt});
  p.nodes.push_back({{rl, rl + mw, my, my + mh}, "rear", std::nullopt});
  p.edges.push_back({n, 0, true, {}});
  p.edges.push_back({n - 1, n + 1, true, {}});
  return p;
}

Plan plan_stack(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(3, 7);
  const int cw = std::max(6, cv.px(rng.uniform(0.2, 0.3)));
  const int ch = static_cast<int>(std::min(static_cast<double>(cv.h - 2 * cv.margin) / n, 0.12 * cv.u) *
                                  rng.uniform(0.8, 1.0));
  const int mw = std::max(4, static_cast<int>(cw * rng.uniform(0.4, 0.6)));
  const int mh = std::max(4, ch);
  const int gap = std::max(4, cv.px(0.1));
  if (ch < 4 || cv.w - 2 * cv.margin < cw + gap + mw) too_small("stack cells");
  const bool left = rng.bernoulli(0.5);
  const int x0 = left ? rng.uniform_int(cv.margin + mw + gap, cv.w - cv.margin - cw)
                      : rng.uniform_int(cv.margin, cv.w - cv.margin - cw - gap - mw);
  const int y0 = rng.uniform_int(cv.margin, cv.h - cv.margin - n * ch);
  Plan p;
  for (int i = 0; i < n; ++i) p.nodes.push_back({{x0, x0 + cw, y0 + i * ch, y0 + (i + 1) * ch}, "cell", std::nullopt});
  const int mx = left ? x0 - gap - mw : x0 + cw + gap;
  p.nodes.push_back({{mx, mx + mw, y0, y0 + mh}, "top", std::nullopt});
  p.edges.push_back({n, 0, true, {}});
  return p;
}

// Structural predicates over directed edge lists. A random directed graph
// that happens to match one of these is resampled so each class keeps a
// distinct relation structure.
struct Degrees {
  std::vector<int> in, out;
};

Degrees degrees(int n, const std::vector<EdgePlan>& edges) {
  Degrees d{std::vector<int>(n, 0), std::vector<int>(n, 0)};
  for (const auto& e : edges) {
    ++d.out[e.head];
    ++d.in[e.tail];
  }
  return d;
}

bool is_single_four_cycle(int n, const std::vector<EdgePlan>& edges) {
  if (n != 4 || edges.size() != 4) return false;
  const auto d = degrees(n, edges);
  for (int i = 0; i < n; ++i) {
    if (d.in[i] != 1 || d.out[i] != 1) return false;
  }
  return true;
}

// Order of a directed Hamiltonian path, or empty.
std::vector<int> hamiltonian_path(int n, const std::vector<EdgePlan>& edges) {
  if (static_cast<int>(edges.size()) != n - 1) return {};
  const auto d = degrees(n, edges);
  std::vector<int> next(n, -1);
  int start = -1;
  for (int i = 0; i < n; ++i) {
    if (d.in[i] > 1 || d.out[i] > 1) return {};
    if (d.in[i] == 0) {
      if (start != -1) return {};
      start = i;
    }
  }
  if (start == -1) return {};
  for (const auto& e : edges) next[e.head] = e.tail;
  std::vector<int> order;
  for (int v = start; v != -1 && static_cast<int>(order.size()) <= n; v = next[v]) order.push_back(v);
  return static_cast<int>(order.size()) == n ? order : std::vector<int>{};
}

bool is_chain_with_loop_back(int n, const std::vector<EdgePlan>& edges) {
  if (static_cast<int>(edges.size()) != n) return false;
  for (std::size_t skip = 0; skip < edges.size(); ++skip) {
    std::vector<EdgePlan> rest;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (i != skip) rest.push_back(edges[i]);
    }
    const auto order = hamiltonian_path(n, rest);
    if (order.empty()) continue;
    std::vector<int> pos(n);
    for (int i = 0; i < n; ++i) pos[order[i]] = i;
    const int from = pos[edges[skip].head];
    const int to = pos[edges[skip].tail];
    if (from >= 1 && from <= n - 2 && to < from) return true;
  }
  return false;
}

bool is_circuit_like(int n, const std::vector<EdgePlan>& edges) {
  const auto d = degrees(n, edges);
  int sources = 0, sinks = 0;
  for (int i = 0; i < n; ++i) {
    if (d.in[i] == 0) ++sources;
    if (d.out[i] == 0) ++sinks;
    if (d.in[i] > 0 && d.out[i] > 0 && d.in[i] < 2) return false;
  }
  if (sources < 2 || sinks != 1) return false;
  // Kahn's algorithm: acyclic iff every node is removed.
  std::vector<int> indeg = d.in;
  std::vector<int> ready;
  for (int i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push_back(i);
  }
  int removed = 0;
  while (!ready.empty()) {
    const int v = ready.back();
    ready.pop_back();
    ++removed;
    for (const auto& e : edges) {
      if (e.head == v && --indeg[e.tail] == 0) ready.push_back(e.tail);
    }
  }
  return removed == n;
}

Plan plan_graph(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(4, 8);
  Plan p;
  for (int i = 0; i < n; ++i) {
    const int bw = cv.px(rng.uniform(0.08, 0.12));
    const int bh = std::max(4, static_cast<int>(bw * rng.uniform(0.8, 1.2)));
    p.nodes.push_back({place_random(rng, cv, bw, bh, p.nodes, cv.px(0.06)), "vertex", std::nullopt});
  }
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) pairs.emplace_back(a, b);
  }
  const int m = rng.uniform_int(n, std::min(2 * n, static_cast<int>(pairs.size())));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    rng.shuffle(pairs);
    p.edges.clear();
    for (int k = 0; k < m; ++k) {
      auto [a, b] = pairs[k];
      if (rng.bernoulli(0.5)) std::swap(a, b);
      p.edges.push_back({a, b, true, {}});
    }
    if (!is_single_four_cycle(n, p.edges) && !is_chain_with_loop_back(n, p.edges) &&
        !is_circuit_like(n, p.edges)) {
      return p;
    }
  }
  too_small("a generic directed graph");
}

Plan plan_deadlock(Rng& rng, const Canvas& cv) {
  const double cx = cv.w / 2.0 + rng.uniform(-0.06, 0.06) * cv.u;
  const double cy = cv.h / 2.0 + rng.uniform(-0.06, 0.06) * cv.u;
  const double half = rng.uniform(0.22, 0.3) * cv.u;
  const double mirror = rng.bernoulli(0.5) ? -1.0 : 1.0;
  // T1, R1, T2, R2 around the square.
  const double corner[4][2] = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  const char* roles[4] = {"thread", "resource", "thread", "resource"};
  Plan p;
  for (int i = 0; i < 4; ++i) {
    const int bw = cv.px(rng.uniform(0.1, 0.14));
    const int bh = std::max(4, static_cast<int>(bw * rng.uniform(0.8, 1.2)));
    const double x = cx + mirror * corner[i][0] * half + rng.uniform(-0.04, 0.04) * cv.u;
    const double y = cy + corner[i][1] * half + rng.uniform(-0.04, 0.04) * cv.u;
    BBox b = box_at(cv, x, y, bw, bh);
    if (!clear_of(b, p.nodes, 2)) too_small("deadlock nodes");
    p.nodes.push_back({b, roles[i], std::nullopt});
  }
  for (int i = 0; i < 4; ++i) p.edges.push_back({i, (i + 1) % 4, true, {}});
  return p;
}

Plan plan_flow_chart(Rng& rng, const Canvas& cv) {
  const int n = rng.uniform_int(4, 7);
  const double row_h = static_cast<double>(cv.h - 2 * cv.margin) / n;
  const int bh = static_cast<int>(row_h * rng.uniform(0.45, 0.6));
  const int bw = cv.px(rng.uniform(0.18, 0.26));
  if (bh < 4) too_small("flow chart steps");
  const double x_mid = cv.w / 2.0 + rng.uniform(-0.15, 0.05) * cv.u;
  const int decision = rng.uniform_int(1, n - 2);
  Plan p;
  for (int i = 0; i < n; ++i) {
    const double x = x_mid + rng.uniform(-0.04, 0.04) * cv.u;
    const double y = cv.margin + (i + 0.5) * row_h;
    std::string role = i == 0 ? "start" : i == n - 1 ? "end" : i == decision ? "decision" : "process";
    std::optional<DrawnShape> shape;
    if (i == decision) shape = DrawnShape::Diamond;
    p.nodes.push_back({box_at(cv, x, y, bw, bh), std::move(role), shape});
    if (i > 0) p.edges.push_back({i - 1, i, true, {}});
  }
  const int target = rng.uniform_int(0, decision - 1);
  int right = 0;
  for (int i = target; i <= decision; ++i) right = std::max(right, p.nodes[i].box.right);
  const double xr = std::min(right + 0.08 * cv.u, cv.w - 2.0);
  const auto& from = p.nodes[decision].box;
  const auto& to = p.nodes[target].box;
  p.edges.push_back({decision, target, true,
                     {{xr, (from.lower + from.upper) / 2.0}, {xr, (to.lower + to.upper) / 2.0}}});
  return p;
}

Plan plan_logic_circuit(Rng& rng, const Canvas& cv) {
  const int inputs = rng.uniform_int(2, 4);
  const int gates = rng.uniform_int(2, 3);
  const int in_w = cv.px(0.08);
  const int gate_w = cv.px(rng.uniform(0.1, 0.13));
  const int x_in = cv.margin;
  const int x_out = cv.w - cv.margin - in_w;
  Plan p;
  const double row_h = static_cast<double>(cv.h - 2 * cv.margin) / inputs;
  for (int i = 0; i < inputs; ++i) {
    const double y = cv.margin + (i + 0.5) * row_h + rng.uniform(-0.1, 0.1) * row_h;
    p.nodes.push_back({box_at(cv, x_in + in_w / 2.0, y, in_w, in_w), "input", std::nullopt});
  }
  for (int g = 0; g < gates; ++g) {
    const double x = x_in + (g + 1) * static_cast<double>(x_out - x_in) / (gates + 1) + in_w / 2.0;
    BBox b{};
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      const double y = rng.uniform(cv.margin + gate_w / 2.0, cv.h - cv.margin - gate_w / 2.0);
      b = box_at(cv, x, y, gate_w, gate_w);
      placed = clear_of(b, p.nodes, cv.px(0.04));
    }
    if (!placed) too_small("logic gates");
    p.nodes.push_back({b, "gate", std::nullopt});
  }
  const double y_out = cv.h / 2.0 + rng.uniform(-0.2, 0.2) * cv.u;
  BBox out = box_at(cv, x_out + in_w / 2.0, y_out, in_w, in_w);
  if (!clear_of(out, p.nodes, 2)) too_small("circuit output");
  p.nodes.push_back({out, "output", std::nullopt});
  const int out_idx = inputs + gates;

  // Every gate reads at least two wires; every input drives something.
  std::vector<int> unused(inputs);
  for (int i = 0; i < inputs; ++i) unused[i] = i;
  rng.shuffle(unused);
  std::vector<bool> drives(out_idx, false);
  for (int g = 0; g < gates; ++g) {
    const int gate = inputs + g;
    std::vector<int> src;
    const bool last = g == gates - 1;
    while (!unused.empty() && (src.size() < 2 || last)) {
      src.push_back(unused.back());
      unused.pop_back();
    }
    std::vector<int> pool;
    for (int v = 0; v < gate; ++v) {
      if (std::find(src.begin(), src.end(), v) == src.end()) pool.push_back(v);
    }
    rng.shuffle(pool);
    while (src.size() < 2) {
      src.push_back(pool.back());
      pool.pop_back();
    }
    std::sort(src.begin(), src.end());
    for (int s : src) {
      p.edges.push_back({s, gate, true, {}});
      drives[s] = true;
    }
  }
  for (int g = 0; g < gates; ++g) {
    if (!drives[inputs + g]) p.edges.push_back({inputs + g, out_idx, true, {}});
  }
  return p;
}

Plan plan_network(Rng& rng, const Canvas& cv) {
  const int leaves = rng.uniform_int(4, 8);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Plan p;
    const int hub = cv.px(rng.uniform(0.12, 0.16));
    const double hx = cv.w / 2.0 + rng.uniform(-0.08, 0.08) * cv.u;
    const double hy = cv.h / 2.0 + rng.uniform(-0.08, 0.08) * cv.u;
    p.nodes.push_back({box_at(cv, hx, hy, hub, hub), "hub", std::nullopt});
    const double theta0 = rng.uniform(0.0, 2 * std::numbers::pi);
    const double step = 2 * std::numbers::pi / leaves;
    bool ok = true;
    for (int i = 0; i < leaves && ok; ++i) {
      const double th = theta0 + i * step + rng.uniform(-0.25, 0.25) * step;
      const double rho = rng.uniform(0.3, 0.42) * cv.u;
      const int s = cv.px(rng.uniform(0.08, 0.11));
      const double x = std::clamp(hx + rho * std::cos(th), cv.margin + s / 2.0, cv.w - cv.margin - s / 2.0);
      const double y = std::clamp(hy + rho * std::sin(th), cv.margin + s / 2.0, cv.h - cv.margin - s / 2.0);
      BBox b = box_at(cv, x, y, s, s);
      ok = clear_of(b, p.nodes, 2);
      p.nodes.push_back({b, "host", std::nullopt});
      p.edges.push_back({0, i + 1, false, {}});
    }
    if (ok) return p;
  }
  too_small("a star network");
}

Plan plan_structure(int cls, Rng& rng, const Canvas& cv) {
  switch (cls) {
    case 0: return plan_array_list(rng, cv);
    case 1: return plan_linked_list(rng, cv);
    case 2: return plan_binary_tree(rng, cv);
    case 3: return plan_non_binary_tree(rng, cv);
    case 4: return plan_queue(rng, cv);
    case 5: return plan_stack(rng, cv);
    case 6: return plan_graph(rng, cv);
    case 7: {
      Plan p = plan_graph(rng, cv);
      for (auto& e : p.edges) e.directed = false;
      return p;
    }
    case 8: return plan_deadlock(rng, cv);
    case 9: return plan_flow_chart(rng, cv);
    case 10: return plan_logic_circuit(rng, cv);
    default: return plan_network(rng, cv);
  }
}

// Scales the layout about its extent and centers it, the way a diagram is
// cropped before it is collected. Coordinates go through one monotone map per
// axis, so shared borders stay shared and disjoint boxes stay disjoint.
void fit_to_canvas(Plan& p, const Canvas& cv) {
  double x0 = cv.w, x1 = 0, y0 = cv.h, y1 = 0;
  for (const auto& n : p.nodes) {
    x0 = std::min<double>(x0, n.box.left);
    x1 = std::max<double>(x1, n.box.right);
    y0 = std::min<double>(y0, n.box.lower);
    y1 = std::max<double>(y1, n.box.upper);
  }
  for (const auto& e : p.edges) {
    for (const auto& w : e.waypoints) {
      x0 = std::min(x0, w.x);
      x1 = std::max(x1, w.x);
      y0 = std::min(y0, w.y);
      y1 = std::max(y1, w.y);
    }
  }
  const double avail_w = cv.w - 2.0 * cv.margin, avail_h = cv.h - 2.0 * cv.margin;
  const double s = std::clamp(std::min(avail_w / (x1 - x0), avail_h / (y1 - y0)), 1.0, kMaxFitScale);
  const double ox = cv.margin + (avail_w - s * (x1 - x0)) / 2.0;
  const double oy = cv.margin + (avail_h - s * (y1 - y0)) / 2.0;
  auto fx = [&](double x) { return ox + (x - x0) * s; };
  auto fy = [&](double y) { return oy + (y - y0) * s; };
  auto ix = [&](int x) { return std::clamp(static_cast<int>(std::lround(fx(x))), 0, cv.w); };
  auto iy = [&](int y) { return std::clamp(static_cast<int>(std::lround(fy(y))), 0, cv.h); };
  for (auto& n : p.nodes) n.box = {ix(n.box.left), ix(n.box.right), iy(n.box.lower), iy(n.box.upper)};
  for (auto& e : p.edges) {
    for (auto& w : e.waypoints) w = {fx(w.x), fy(w.y)};
  }
}

Plan plan_for(int cls, Rng& rng, const Canvas& cv) {
  Plan p = plan_structure(cls, rng, cv);
  for (const auto& n : p.nodes) {
    if (n.box.width() < kMinNodeSide || n.box.height() < kMinNodeSide) too_small("legible nodes");
  }
  fit_to_canvas(p, cv);
  return p;
}

// ---- Drawing --------------------------------------------------------------

std::vector<Point> outline(const BBox& b, DrawnShape s) {
  const double l = b.left + 0.5, r = b.right - 0.5, lo = b.lower + 0.5, up = b.upper - 0.5;
  const double cx = (l + r) / 2, cy = (lo + up) / 2;
  switch (s) {
    case DrawnShape::Rectangle: return {{l, lo}, {r, lo}, {r, up}, {l, up}};
    case DrawnShape::Diamond: return {{cx, lo}, {r, cy}, {cx, up}, {l, cy}};
    case DrawnShape::Circle: {
      std::vector<Point> pts;
      for (int k = 0; k < 24; ++k) {
        const double a = 2 * std::numbers::pi * k / 24;
        pts.push_back({cx + (r - cx) * std::cos(a), cy + (up - cy) * std::sin(a)});
      }
      return pts;
    }
  }
  return {};
}

Point center(const BBox& b) { return {(b.left + b.right) / 2.0, (b.lower + b.upper) / 2.0}; }

// Where the ray from the box center toward `toward` leaves the box.
Point box_exit(const BBox& b, Point toward) {
  const Point c = center(b);
  const double dx = toward.x - c.x, dy = toward.y - c.y;
  double s = 1.0;
  if (dx != 0) s = std::min(s, (b.width() / 2.0) / std::abs(dx));
  if (dy != 0) s = std::min(s, (b.height() / 2.0) / std::abs(dy));
  return {c.x + dx * s, c.y + dy * s};
}

struct Stroke {
  std::vector<Point> path;
  BBox extent;
};

Stroke draw_edge(GrayRaster& r, const Canvas& cv, const Plan& plan, const EdgePlan& e, double thickness) {
  const BBox& hb = plan.nodes[e.head].box;
  const BBox& tb = plan.nodes[e.tail].box;
  const Point first = e.waypoints.empty() ? center(tb) : e.waypoints.front();
  const Point last = e.waypoints.empty() ? center(hb) : e.waypoints.back();
  std::vector<Point> path{box_exit(hb, first)};
  path.insert(path.end(), e.waypoints.begin(), e.waypoints.end());
  path.push_back(box_exit(tb, last));
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!(path[i] == path[i + 1])) fill_wedge(r, path[i], thickness, path[i + 1], thickness);
  }
  double pad = thickness;
  if (e.directed) {
    const Point tip = path.back();
    const Point prev = path[path.size() - 2];
    const double len = std::hypot(tip.x - prev.x, tip.y - prev.y);
    if (len > 0) {
      const double ux = (tip.x - prev.x) / len, uy = (tip.y - prev.y) / len;
      const double al = std::max(4.0, 0.045 * cv.u);
      const double aw = std::max(2.0, 0.025 * cv.u);
      const Point base{tip.x - ux * al, tip.y - uy * al};
      const std::vector<Point> tri{tip, {base.x - uy * aw, base.y + ux * aw}, {base.x + uy * aw, base.y - ux * aw}};
      fill_polygon(r, tri);
      pad = std::max(pad, aw);
    }
  }
  double minx = path[0].x, maxx = path[0].x, miny = path[0].y, maxy = path[0].y;
  for (const auto& p : path) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  BBox ext;
  ext.left = std::clamp(static_cast<int>(std::floor(minx - pad)), 0, cv.w);
  ext.right = std::clamp(static_cast<int>(std::ceil(maxx + pad)), 0, cv.w);
  ext.lower = std::clamp(static_cast<int>(std::floor(miny - pad)), 0, cv.h);
  ext.upper = std::clamp(static_cast<int>(std::ceil(maxy + pad)), 0, cv.h);
  if (ext.right <= ext.left) (ext.right < cv.w ? ext.right = ext.left + 1 : ext.left = ext.right - 1);
  if (ext.upper <= ext.lower) (ext.upper < cv.h ? ext.upper = ext.lower + 1 : ext.lower = ext.upper - 1);
  return {std::move(path), ext};
}

std::string sample_description(Rng& rng, int vocab_class) {
  if (!rng.bernoulli(kDescriptionRate)) return {};
  const auto& vocab = class_vocabulary(vocab_class);
  const int k = rng.uniform_int(2, 4);
  std::string out;
  for (int i = 0; i < k; ++i) {
    if (i) out += ' ';
    out += vocab[rng.below(vocab.size())];
  }
  return out;
}

Example build_example(const Plan& plan, int cls, int vocab_class, const Canvas& cv, std::uint64_t style_seed) {
  Rng style(style_seed);
  Example ex;
  ex.diagram = GrayRaster(cv.w, cv.h);
  DiagramAnnotation& a = ex.annotation;
  a.global.source = "synthetic";
  a.global.class_label = std::string(class_name(cls));
  a.canvas_w = cv.w;
  a.canvas_h = cv.h;
  const double thickness = std::max(1.0, std::round(cv.u / 128.0));

  int id = 1;
  for (const auto& node : plan.nodes) {
    const DrawnShape shape = node.shape ? *node.shape : static_cast<DrawnShape>(style.below(3));
    const auto pts = outline(node.box, shape);
    stroke_polygon(ex.diagram, pts, thickness);
    a.objects.push_back({id++, ObjectKind::SemanticShape, node.role, sample_description(style, vocab_class), node.box});
  }
  int rel_id = 1;
  for (const auto& e : plan.edges) {
    const Stroke s = draw_edge(ex.diagram, cv, plan, e, thickness);
    const SymbolLabel sym = e.directed ? SymbolLabel::Arrow : SymbolLabel::Line;
    a.objects.push_back({id++, ObjectKind::LogicalSymbol, std::string(to_string(sym)), "", s.extent});
    a.relations.push_back({rel_id++, sym, e.head + 1, e.tail + 1});
  }
  return ex;
}

}  // namespace

Example generate_diagram(std::string_view class_label, std::uint64_t structure_seed,
                         std::uint64_t style_seed, int canvas_w, int canvas_h) {
  const int cls = class_index(class_label);
  if (canvas_w < 16 || canvas_h < 16) throw PlacementError("canvas sides must be >= 16");
  const Canvas cv(canvas_w, canvas_h);
  Rng structure(structure_seed);
  const Plan plan = plan_for(cls, structure, cv);
  return build_example(plan, cls, cls, cv, style_seed);
}

Example generate_diagram(std::string_view class_label, Rng& rng, int canvas_w, int canvas_h) {
  const std::uint64_t structure_seed = rng.next();
  const std::uint64_t style_seed = rng.next();
  return generate_diagram(class_label, structure_seed, style_seed, canvas_w, canvas_h);
}

std::pair<Example, Example> paired_graphs(Rng& rng, int canvas_w, int canvas_h) {
  const std::uint64_t structure_seed = rng.next();
  const std::uint64_t style_seed = rng.next();
  const Canvas cv(canvas_w, canvas_h);
  Rng structure(structure_seed);
  Plan plan = plan_graph(structure, cv);
  fit_to_canvas(plan, cv);
  const int directed = class_index("directed graph");
  const int undirected = class_index("undirected graph");
  Example d = build_example(plan, directed, directed, cv, style_seed);
  for (auto& e : plan.edges) e.directed = false;
  Example u = build_example(plan, undirected, directed, cv, style_seed);
  return {std::move(d), std::move(u)};
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.check();
  Corpus c;
  c.spec = spec;
  const int n_test = spec.test_count();
  for (int cls : spec.class_list()) {
    for (int i = 0; i < spec.per_class_count; ++i) {
      Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(cls), static_cast<std::uint64_t>(i)));
      Example ex = generate_diagram(class_name(cls), rng, spec.canvas_w, spec.canvas_h);
      ex.split = i >= spec.per_class_count - n_test ? Split::Test : Split::Train;
      c.examples.push_back(std::move(ex));
    }
  }
  return c;
}

std::vector<ClassStats> corpus_stats(const Corpus& c) {
  std::vector<ClassStats> rows(kNumClasses + 1);
  for (int i = 0; i < kNumClasses; ++i) rows[i].name = std::string(class_name(i));
  rows[kNumClasses].name = "total";
  for (const auto& ex : c.examples) {
    auto& row = rows[class_index(ex.annotation.global.class_label)];
    row.diagrams += 1;
    row.objects += static_cast<int>(ex.annotation.objects.size());
    row.relations += static_cast<int>(ex.annotation.relations.size());
  }
  for (int i = 0; i < kNumClasses; ++i) {
    rows[kNumClasses].diagrams += rows[i].diagrams;
    rows[kNumClasses].objects += rows[i].objects;
    rows[kNumClasses].relations += rows[i].relations;
  }
  return rows;
}

std::string format_stats(const std::vector<ClassStats>& rows) {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof line, "%-18s %9s %9s %10s\n", "Category", "Diagrams", "Objects", "Relations");
  out += line;
  for (const auto& r : rows) {
    if (r.name == "total") out += std::string(49, '-') + "\n";
    std::snprintf(line, sizeof line, "%-18s %9d %9d %10d\n", r.name.c_str(), r.diagrams, r.objects, r.relations);
    out += line;
  }
  return out;
}

}  // namespace diagnet
