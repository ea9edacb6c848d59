#include "diagnet/topology.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace diagnet {

double lambda_r(int canvas_w, int canvas_h) {
  return std::pow(static_cast<double>(canvas_h) * static_cast<double>(canvas_w), 1.0 / 8.0) / 10.0;
}

double raw_node_radius(const BBox& b, int canvas_w, int canvas_h) {
  const double lam = lambda_r(canvas_w, canvas_h);
  const double area = static_cast<double>(b.height()) * static_cast<double>(b.width());
  return lam * lam * std::sqrt(area) / std::numbers::pi;
}

TopologyNode node_geometry(const BBox& b, int canvas_w, int canvas_h) {
  TopologyNode n;
  n.cx = (b.left + b.right) / 2.0;
  n.cy = (b.lower + b.upper) / 2.0;
  n.radius = std::max(raw_node_radius(b, canvas_w, canvas_h), kMinNodeRadius);
  return n;
}

TopologyEdge edge_geometry(const Relation& rel, const std::map<int, TopologyNode>& nodes,
                           RenderMode mode) {
  auto head = nodes.find(rel.head_id);
  auto tail = nodes.find(rel.tail_id);
  if (head == nodes.end()) throw std::out_of_range("no topology node for head id " + std::to_string(rel.head_id));
  if (tail == nodes.end()) throw std::out_of_range("no topology node for tail id " + std::to_string(rel.tail_id));

  TopologyEdge e;
  e.head = rel.head_id;
  e.tail = rel.tail_id;
  e.directed = mode == RenderMode::DirectedAware && rel.directed();
  if (e.directed) {
    e.w_head = 0.0;
    e.w_tail = tail->second.radius;
  } else {
    e.w_head = e.w_tail = (head->second.radius + tail->second.radius) / 2.0;
  }
  return e;
}

Topology build_topology(const DiagramAnnotation& a, RenderMode mode) {
  Topology t;
  t.canvas_w = a.canvas_w;
  t.canvas_h = a.canvas_h;
  std::map<int, TopologyNode> by_id;
  for (const auto& o : a.objects) {
    if (o.kind != ObjectKind::SemanticShape) continue;
    TopologyNode n = node_geometry(o.bbox, a.canvas_w, a.canvas_h);
    n.object_id = o.id;
    by_id.emplace(o.id, n);
    t.nodes.push_back(n);
  }
  for (const auto& r : a.relations) {
    for (int id : {r.head_id, r.tail_id}) {
      const DiagramObject* o = a.find_object(id);
      if (o != nullptr && o->kind == ObjectKind::LogicalSymbol) {
        throw std::invalid_argument("relation " + std::to_string(r.id) +
                                    " references logical-symbol object " + std::to_string(id));
      }
    }
    t.edges.push_back(edge_geometry(r, by_id, mode));
  }
  return t;
}

GrayRaster rasterize(const Topology& t) {
  GrayRaster out(t.canvas_w, t.canvas_h);
  std::map<int, const TopologyNode*> by_id;
  for (const auto& n : t.nodes) by_id.emplace(n.object_id, &n);
  for (const auto& e : t.edges) {
    const TopologyNode& h = *by_id.at(e.head);
    const TopologyNode& k = *by_id.at(e.tail);
    // Coincident centers leave nothing to draw between them.
    if (h.cx == k.cx && h.cy == k.cy) continue;
    fill_wedge(out, {h.cx, h.cy}, e.w_head, {k.cx, k.cy}, e.w_tail);
  }
  for (const auto& n : t.nodes) fill_circle(out, n.cx, n.cy, n.radius);
  return out;
}

GrayRaster render_topology(const DiagramAnnotation& a, RenderMode mode) {
  return rasterize(build_topology(a, mode));
}

}  // namespace diagnet
