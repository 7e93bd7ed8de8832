#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "sgvqa/core/scene_graph.hpp"

namespace sgvqa::core {

using Json = nlohmann::json;

struct ParseResult {
  SceneGraph graph;
  int dropped_relations = 0;  // relations that referenced absent object ids
};

// One image record: { "objects": { id -> { "name", "attributes", "relations",
// optional confidences } } }. Node order is the sorted order of object keys.
ParseResult parse_scene_graph(const Json& record, const std::string& image_id);

// Inverse of parse_scene_graph. Object keys are zero-padded node indices so
// that key-sorted parsing recovers the node order; edges are grouped under
// their source object, which canonicalizes edge order by source.
Json serialize_graph(const SceneGraph& g);
SceneGraph deserialize_graph(const Json& doc, const std::string& image_id);

// Stable edge reordering matching what serialization preserves.
SceneGraph canonicalized(SceneGraph g);

// Whole files: { image_id -> record }.
std::vector<SceneGraph> load_scene_graph_file(const std::string& path, int* dropped = nullptr);
void save_scene_graph_file(const std::vector<SceneGraph>& graphs, const std::string& path);

Json parse_json_file(const std::string& path);  // errors carry the byte offset
void write_json_file(const Json& doc, const std::string& path);

}  // namespace sgvqa::core
