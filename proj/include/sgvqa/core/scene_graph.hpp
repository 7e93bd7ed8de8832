#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sgvqa::core {

struct ObjectNode {
  std::string name;
  std::vector<std::string> attributes;
  std::optional<double> confidence;
  std::optional<std::vector<double>> attribute_confidences;

  bool operator==(const ObjectNode&) const = default;
};

struct RelationEdge {
  std::string relation;
  int source = 0;
  int receiver = 0;
  std::optional<double> confidence;

  bool operator==(const RelationEdge&) const = default;
};

struct SceneGraph {
  std::string image_id;
  std::vector<ObjectNode> nodes;
  std::vector<RelationEdge> edges;

  bool operator==(const SceneGraph&) const = default;

  int node_count() const { return static_cast<int>(nodes.size()); }
  int edge_count() const { return static_cast<int>(edges.size()); }

  // Throws if any edge endpoint is out of range or a constraint is violated.
  void validate() const;
};

struct GraphStats {
  int object_count = 0;
  int edge_count = 0;
  double attrs_per_object = 0.0;
  std::map<std::string, int> relation_histogram;
  int self_loop_count = 0;
};

GraphStats graph_stats(const SceneGraph& g);

struct OverlapReport {
  int gt_objects = 0;
  int matched_objects = 0;
  int missing_objects = 0;
  double spurious_attributes_per_object = 0.0;
  int matched_attributes = 0;
  int gt_edges = 0;
  int matched_edges = 0;
};

// Object matching is by exact lowercase name, greedy in node order, each side
// matched at most once. Spurious counts are measured on `gen` only.
OverlapReport overlap_report(const SceneGraph& gt, const SceneGraph& gen);

}  // namespace sgvqa::core
