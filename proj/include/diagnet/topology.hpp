#pragma once

#include <map>
#include <vector>

#include "diagnet/annotation.hpp"
#include "diagnet/raster.hpp"

namespace diagnet {

/// How relation wedges are drawn. UndirectedOnly draws every relation as a
/// constant-width band.
enum class RenderMode { DirectedAware, UndirectedOnly };

/// Abstract circle standing in for one semantic-shape object.
struct TopologyNode {
  int object_id = 0;
  double cx = 0;
  double cy = 0;
  double radius = 0;
};

/// Tapered band between two node centers.
struct TopologyEdge {
  int head = 0;
  int tail = 0;
  double w_head = 0;
  double w_tail = 0;
  bool directed = false;
};

struct Topology {
  int canvas_w = 0;
  int canvas_h = 0;
  std::vector<TopologyNode> nodes;
  std::vector<TopologyEdge> edges;
};

inline constexpr double kMinNodeRadius = 2.0;

/// Canvas regularizer: (w * h)^(1/8) / 10.
double lambda_r(int canvas_w, int canvas_h);

/// lambda_r^2 * sqrt(box height * box width) / pi, before clamping.
double raw_node_radius(const BBox& b, int canvas_w, int canvas_h);

/// Circle at the box midpoint with radius max(raw_node_radius, kMinNodeRadius).
TopologyNode node_geometry(const BBox& b, int canvas_w, int canvas_h);

/// Undirected (or any relation under UndirectedOnly): both widths are the mean
/// of the two radii. Directed: zero width at the head, tail radius at the tail.
/// Throws std::out_of_range when an endpoint has no node.
TopologyEdge edge_geometry(const Relation& rel, const std::map<int, TopologyNode>& nodes,
                           RenderMode mode);

/// Geometry for every semantic-shape object and every relation. Throws
/// std::invalid_argument when a relation endpoint is a logical symbol.
Topology build_topology(const DiagramAnnotation& a, RenderMode mode);

/// Rasterizes the topology at canvas size: wedges first, then circles.
GrayRaster render_topology(const DiagramAnnotation& a, RenderMode mode);
GrayRaster rasterize(const Topology& t);

}  // namespace diagnet
