#include "sgvqa/core/graph_io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>

#include "sgvqa/util.hpp"

namespace sgvqa::core {

namespace {

std::string padded_key(int index) {
  std::string s = std::to_string(index);
  return std::string(s.size() >= 6 ? 0 : 6 - s.size(), '0') + s;
}

}  // namespace

ParseResult parse_scene_graph(const Json& record, const std::string& image_id) {
  if (!record.is_object() || !record.contains("objects"))
    fail("parse_scene_graph: record for '", image_id, "' has no \"objects\" map");
  const Json& objects = record.at("objects");

  // std::map gives the sorted key order that defines node indices.
  std::map<std::string, const Json*> ordered;
  for (auto it = objects.begin(); it != objects.end(); ++it) ordered[it.key()] = &it.value();

  ParseResult result;
  result.graph.image_id = image_id;
  std::map<std::string, int> node_index;
  for (const auto& [key, obj] : ordered) {
    if (!obj->contains("name"))
      fail("parse_scene_graph: object '", key, "' in '", image_id, "' is missing \"name\"");
    ObjectNode node;
    node.name = obj->at("name").get<std::string>();
    if (obj->contains("attributes"))
      node.attributes = obj->at("attributes").get<std::vector<std::string>>();
    if (obj->contains("confidence")) node.confidence = obj->at("confidence").get<double>();
    if (obj->contains("attribute_confidences")) {
      node.attribute_confidences = obj->at("attribute_confidences").get<std::vector<double>>();
      if (node.attribute_confidences->size() != node.attributes.size())
        fail("parse_scene_graph: object '", key, "' in '", image_id,
             "' attribute_confidences length mismatches attributes");
    }
    node_index[key] = result.graph.node_count();
    result.graph.nodes.push_back(std::move(node));
  }
  for (const auto& [key, obj] : ordered) {
    if (!obj->contains("relations")) continue;
    const Json& rels = obj->at("relations");
    const Json* confs = obj->contains("relation_confidences") ? &obj->at("relation_confidences") : nullptr;
    for (size_t r = 0; r < rels.size(); ++r) {
      const Json& rel = rels[r];
      const std::string target = rel.at("object").get<std::string>();
      auto it = node_index.find(target);
      if (it == node_index.end()) {
        result.dropped_relations++;
        continue;
      }
      RelationEdge edge;
      edge.relation = rel.at("name").get<std::string>();
      edge.source = node_index.at(key);
      edge.receiver = it->second;
      if (confs && r < confs->size() && !(*confs)[r].is_null())
        edge.confidence = (*confs)[r].get<double>();
      result.graph.edges.push_back(std::move(edge));
    }
  }
  result.graph.validate();
  return result;
}

Json serialize_graph(const SceneGraph& g) {
  Json objects = Json::object();
  std::vector<std::vector<size_t>> by_source(g.nodes.size());
  for (size_t k = 0; k < g.edges.size(); ++k) by_source[g.edges[k].source].push_back(k);

  for (int i = 0; i < g.node_count(); ++i) {
    const ObjectNode& n = g.nodes[i];
    Json obj;
    obj["name"] = n.name;
    obj["attributes"] = n.attributes;
    if (n.confidence) obj["confidence"] = *n.confidence;
    if (n.attribute_confidences) obj["attribute_confidences"] = *n.attribute_confidences;
    Json rels = Json::array();
    Json rel_confs = Json::array();
    bool any_conf = false;
    for (size_t k : by_source[i]) {
      const RelationEdge& e = g.edges[k];
      rels.push_back({{"name", e.relation}, {"object", padded_key(e.receiver)}});
      rel_confs.push_back(e.confidence ? Json(*e.confidence) : Json(nullptr));
      if (e.confidence) any_conf = true;
    }
    obj["relations"] = std::move(rels);
    if (any_conf) obj["relation_confidences"] = std::move(rel_confs);
    objects[padded_key(i)] = std::move(obj);
  }
  return Json{{"objects", std::move(objects)}};
}

SceneGraph deserialize_graph(const Json& doc, const std::string& image_id) {
  return parse_scene_graph(doc, image_id).graph;
}

SceneGraph canonicalized(SceneGraph g) {
  std::stable_sort(g.edges.begin(), g.edges.end(),
                   [](const RelationEdge& a, const RelationEdge& b) { return a.source < b.source; });
  return g;
}

Json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '", path, "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    // e.byte is the offset of the offending byte.
    fail("parse error in '", path, "' at byte ", e.byte, ": ", e.what());
  }
}

void write_json_file(const Json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot open '", path, "' for writing");
  out << doc.dump(1, '\t') << '\n';
  if (!out) fail("write failed for '", path, "'");
}

std::vector<SceneGraph> load_scene_graph_file(const std::string& path, int* dropped) {
  const Json doc = parse_json_file(path);
  if (!doc.is_object()) fail("scene graph file '", path, "' must be a JSON object");
  std::vector<SceneGraph> graphs;
  int total_dropped = 0;
  // nlohmann objects iterate in sorted key order, keeping file order stable.
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    ParseResult r = parse_scene_graph(it.value(), it.key());
    total_dropped += r.dropped_relations;
    graphs.push_back(std::move(r.graph));
  }
  if (dropped) *dropped = total_dropped;
  return graphs;
}

void save_scene_graph_file(const std::vector<SceneGraph>& graphs, const std::string& path) {
  Json doc = Json::object();
  for (const SceneGraph& g : graphs) doc[g.image_id] = serialize_graph(g);
  write_json_file(doc, path);
}

}  // namespace sgvqa::core
