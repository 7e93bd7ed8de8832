#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "sgvqa/core/graph_io.hpp"
#include "sgvqa/core/scene_graph.hpp"
#include "sgvqa/core/vocabulary.hpp"
#include "sgvqa/util.hpp"

using namespace sgvqa;
using core::Json;
using core::ObjectNode;
using core::RelationEdge;
using core::SceneGraph;

namespace {

Json two_object_record() {
  return Json::parse(R"({
    "objects": {
      "101": {"name": "apple", "attributes": ["red"], "relations": [{"name": "on", "object": "102"}]},
      "102": {"name": "table", "attributes": [], "relations": []}
    }
  })");
}

}  // namespace

TEST_CASE("parse_scene_graph on a minimal record") {
  core::ParseResult r = core::parse_scene_graph(two_object_record(), "img1");
  CHECK(r.graph.node_count() == 2);
  CHECK(r.graph.edge_count() == 1);
  CHECK(r.dropped_relations == 0);
  CHECK(r.graph.nodes[0].name == "apple");
  CHECK(r.graph.edges[0].source == 0);
  CHECK(r.graph.edges[0].receiver == 1);
  CHECK(r.graph.edges[0].relation == "on");
}

TEST_CASE("parse drops relations to absent objects and counts them") {
  Json rec = two_object_record();
  rec["objects"]["101"]["relations"].push_back({{"name", "near"}, {"object", "999"}});
  core::ParseResult r = core::parse_scene_graph(rec, "img1");
  CHECK(r.graph.edge_count() == 1);
  CHECK(r.dropped_relations == 1);
}

TEST_CASE("parse errors name the offending object key") {
  Json rec = two_object_record();
  rec["objects"]["101"].erase("name");
  CHECK_THROWS_WITH_AS(core::parse_scene_graph(rec, "img1"),
                       doctest::Contains("'101'"), std::runtime_error);
}

TEST_CASE("a sixteen object record reports sixteen objects") {
  Json objects = Json::object();
  for (int i = 0; i < 16; ++i)
    objects[std::to_string(100 + i)] = {{"name", "thing" + std::to_string(i)},
                                        {"attributes", Json::array()},
                                        {"relations", Json::array()}};
  core::ParseResult r = core::parse_scene_graph(Json{{"objects", objects}}, "img16");
  CHECK(core::graph_stats(r.graph).object_count == 16);
}

TEST_CASE("graph_stats matches brute-force recount") {
  SceneGraph g;
  g.image_id = "s";
  g.nodes = {{"red apple", {"red", "shiny"}, {}, {}}, {"table", {}, {}, {}}, {"cat", {"small"}, {}, {}}};
  g.edges = {{"on", 0, 1, {}}, {"near", 2, 1, {}}, {"on", 2, 2, {}}};
  core::GraphStats s = core::graph_stats(g);
  CHECK(s.object_count == 3);
  CHECK(s.edge_count == 3);
  CHECK(s.attrs_per_object == doctest::Approx(1.0));
  CHECK(s.relation_histogram.at("on") == 2);
  CHECK(s.relation_histogram.at("near") == 1);
  int hist_total = 0;
  for (auto& [k, v] : s.relation_histogram) hist_total += v;
  CHECK(hist_total == s.edge_count);
  CHECK(s.self_loop_count == 1);
}

TEST_CASE("vocabulary basics") {
  SceneGraph g;
  g.image_id = "v";
  g.nodes = {{"red apple", {}, {}, {}}};
  core::Vocabulary v = core::build_vocabulary({g}, {"what is red?"}, 1);
  CHECK(v.lookup("red") != core::Vocabulary::kUnk);
  CHECK(v.lookup("apple") != core::Vocabulary::kUnk);
  CHECK(v.lookup("zebra") == core::Vocabulary::kUnk);
  CHECK(v.lookup(core::Vocabulary::kPadToken) == 0);
  CHECK(v.lookup(core::Vocabulary::kUnkToken) == 1);

  SUBCASE("min_count threshold sends rare tokens to UNK") {
    core::Vocabulary v2 = core::build_vocabulary({g}, {"what is red red?"}, 2);
    CHECK(v2.lookup("red") != core::Vocabulary::kUnk);   // appears twice in question + name
    CHECK(v2.lookup("apple") == core::Vocabulary::kUnk); // appears once
  }
  SUBCASE("empty corpus is an error") {
    CHECK_THROWS(core::build_vocabulary({}, {}, 1));
  }
  SUBCASE("hash changes with content") {
    core::Vocabulary v3 = core::build_vocabulary({g}, {"what is blue?"}, 1);
    CHECK(v.hash() != v3.hash());
    CHECK(v.hash() == core::build_vocabulary({g}, {"what is red?"}, 1).hash());
  }
}

TEST_CASE("overlap_report identity and asymmetry") {
  SceneGraph g;
  g.image_id = "o";
  g.nodes = {{"apple", {"red"}, {}, {}}, {"table", {"wooden"}, {}, {}}, {"apple", {}, {}, {}}};
  g.edges = {{"on", 0, 1, {}}, {"under", 1, 2, {}}};

  core::OverlapReport rep = core::overlap_report(g, g);
  CHECK(rep.gt_objects == 3);
  CHECK(rep.missing_objects == 0);
  CHECK(rep.matched_objects == 3);
  CHECK(rep.matched_edges == rep.gt_edges);
  CHECK(rep.spurious_attributes_per_object == 0.0);

  SUBCASE("relation renames zero out edge overlap but not object overlap") {
    SceneGraph gen = g;
    for (auto& e : gen.edges) e.relation = "zzz_" + e.relation;
    core::OverlapReport r2 = core::overlap_report(g, gen);
    CHECK(r2.matched_edges == 0);
    CHECK(r2.matched_objects == 3);
  }
  SUBCASE("image id mismatch is an error") {
    SceneGraph gen = g;
    gen.image_id = "other";
    CHECK_THROWS(core::overlap_report(g, gen));
  }
  SUBCASE("invariant: matched + missing = gt") {
    SceneGraph gen = g;
    gen.nodes.erase(gen.nodes.begin());
    for (auto& e : gen.edges) {
      e.source = 0;
      e.receiver = 0;
    }
    gen.nodes.resize(2);
    core::OverlapReport r3 = core::overlap_report(g, gen);
    CHECK(r3.matched_objects + r3.missing_objects == r3.gt_objects);
  }
}

TEST_CASE("serialize round-trips") {
  SUBCASE("empty edge graph") {
    SceneGraph g;
    g.image_id = "e";
    g.nodes = {{"lamp", {"small", "metal"}, {}, {}}};
    CHECK(core::deserialize_graph(core::serialize_graph(g), "e") == g);
  }
  SUBCASE("graph with confidences") {
    SceneGraph g;
    g.image_id = "c";
    g.nodes = {{"lamp", {"small"}, 0.75, std::vector<double>{0.5}},
               {"desk", {}, 0.25, {}}};
    g.edges = {{"on", 0, 1, 0.125}, {"near", 0, 1, {}}};
    SceneGraph back = core::deserialize_graph(core::serialize_graph(g), "c");
    CHECK(back == g);
  }
}

TEST_CASE("corrupted document reports a byte offset") {
  const std::string path = "/tmp/sgvqa_bad.json";
  {
    std::ofstream out(path);
    out << "{\"objects\": {\"1\": {\"name\": }}}";
  }
  CHECK_THROWS_WITH_AS(core::parse_json_file(path), doctest::Contains("byte"),
                       std::runtime_error);
}

TEST_CASE("scene graph file save/load preserves every graph") {
  std::vector<SceneGraph> graphs;
  for (int i = 0; i < 4; ++i) {
    SceneGraph g;
    g.image_id = "img" + std::to_string(i);
    g.nodes = {{"node" + std::to_string(i), {"attr"}, {}, {}}, {"other", {}, {}, {}}};
    g.edges = {{"rel", 0, 1, {}}};
    graphs.push_back(g);
  }
  const std::string path = "/tmp/sgvqa_graphs.json";
  core::save_scene_graph_file(graphs, path);
  std::vector<SceneGraph> back = core::load_scene_graph_file(path);
  REQUIRE(back.size() == graphs.size());
  for (size_t i = 0; i < graphs.size(); ++i) CHECK(back[i] == graphs[i]);
}
