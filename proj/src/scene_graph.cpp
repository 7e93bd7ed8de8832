#include "sgvqa/core/scene_graph.hpp"

#include <algorithm>

#include "sgvqa/util.hpp"

namespace sgvqa::core {

void SceneGraph::validate() const {
  for (size_t k = 0; k < edges.size(); ++k) {
    const RelationEdge& e = edges[k];
    if (e.source < 0 || e.source >= node_count() || e.receiver < 0 ||
        e.receiver >= node_count())
      fail("SceneGraph '", image_id, "': edge ", k, " endpoints (", e.source, ", ", e.receiver,
           ") outside ", node_count(), " nodes");
  }
  for (size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].name.empty()) fail("SceneGraph '", image_id, "': node ", i, " has empty name");
    if (nodes[i].attribute_confidences &&
        nodes[i].attribute_confidences->size() != nodes[i].attributes.size())
      fail("SceneGraph '", image_id, "': node ", i,
           " attribute_confidences length mismatches attributes");
  }
}

GraphStats graph_stats(const SceneGraph& g) {
  GraphStats s;
  s.object_count = g.node_count();
  s.edge_count = g.edge_count();
  size_t attrs = 0;
  for (const ObjectNode& n : g.nodes) attrs += n.attributes.size();
  s.attrs_per_object =
      g.nodes.empty() ? 0.0 : static_cast<double>(attrs) / static_cast<double>(g.nodes.size());
  for (const RelationEdge& e : g.edges) {
    s.relation_histogram[e.relation]++;
    if (e.source == e.receiver) s.self_loop_count++;
  }
  return s;
}

OverlapReport overlap_report(const SceneGraph& gt, const SceneGraph& gen) {
  if (gt.image_id != gen.image_id)
    fail("overlap_report: image_id mismatch '", gt.image_id, "' vs '", gen.image_id, "'");

  OverlapReport rep;
  rep.gt_objects = gt.node_count();
  rep.gt_edges = gt.edge_count();

  // Greedy name matching: gt node -> index of matched gen node.
  std::vector<int> match(gt.nodes.size(), -1);
  std::vector<bool> gen_used(gen.nodes.size(), false);
  for (size_t i = 0; i < gt.nodes.size(); ++i) {
    const std::string name = to_lower(gt.nodes[i].name);
    for (size_t j = 0; j < gen.nodes.size(); ++j) {
      if (!gen_used[j] && to_lower(gen.nodes[j].name) == name) {
        match[i] = static_cast<int>(j);
        gen_used[j] = true;
        break;
      }
    }
  }
  for (int m : match)
    if (m >= 0) rep.matched_objects++;
  rep.missing_objects = rep.gt_objects - rep.matched_objects;

  // Attribute overlap and spurious counts on matched pairs.
  int spurious_total = 0;
  for (size_t i = 0; i < gt.nodes.size(); ++i) {
    if (match[i] < 0) continue;
    const ObjectNode& a = gt.nodes[i];
    const ObjectNode& b = gen.nodes[match[i]];
    std::map<std::string, int> gt_attrs;
    for (const std::string& s : a.attributes) gt_attrs[to_lower(s)]++;
    for (const std::string& s : b.attributes) {
      auto it = gt_attrs.find(to_lower(s));
      if (it != gt_attrs.end() && it->second > 0) {
        rep.matched_attributes++;
        it->second--;
      } else {
        spurious_total++;
      }
    }
  }
  rep.spurious_attributes_per_object =
      rep.matched_objects == 0
          ? 0.0
          : static_cast<double>(spurious_total) / static_cast<double>(rep.matched_objects);

  // An edge matches when both endpoints are matched objects and the relation
  // name agrees; each gen edge is consumed at most once.
  std::vector<bool> gen_edge_used(gen.edges.size(), false);
  for (const RelationEdge& e : gt.edges) {
    if (match[e.source] < 0 || match[e.receiver] < 0) continue;
    const std::string rel = to_lower(e.relation);
    for (size_t j = 0; j < gen.edges.size(); ++j) {
      const RelationEdge& f = gen.edges[j];
      if (!gen_edge_used[j] && f.source == match[e.source] && f.receiver == match[e.receiver] &&
          to_lower(f.relation) == rel) {
        gen_edge_used[j] = true;
        rep.matched_edges++;
        break;
      }
    }
  }
  return rep;
}

}  // namespace sgvqa::core
