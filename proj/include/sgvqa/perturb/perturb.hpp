#pragma once

#include <string>
#include <vector>

#include "sgvqa/core/scene_graph.hpp"
#include "sgvqa/nn/rng.hpp"

namespace sgvqa::perturb {

struct CorruptionSpec {
  double level = 0.0;  // per-component corruption probability

  void validate() const;
};

// Each component class is hit independently with chance `level`, using only
// material from within the graph plus the UNK token: node names and
// attributes and relation names become UNK, edge endpoints are replaced by
// another edge's original endpoints. Node and edge counts never change.
core::SceneGraph corrupt(const core::SceneGraph& gt, const CorruptionSpec& spec, nn::Rng& rng);

struct FilterSpec {
  enum class Mode { none, top_k, threshold };
  Mode mode = Mode::none;
  int k_objects = 40;
  int k_attrs_per_object = 3;
  int k_relations = 80;
  double t_object = 0.1;
  double t_attribute = 0.9;
  double t_relation = 0.8;

  void validate() const;
  static Mode mode_from_string(const std::string& s);
};

// Confidence-based cleanup. Ties in top-k keep the lower original index;
// edges whose endpoints are dropped are dropped; node indices are compacted.
core::SceneGraph filter(const core::SceneGraph& g, const FilterSpec& spec);

enum class AblateTarget { relations, attributes, relations_unk };
AblateTarget ablate_target_from_string(const std::string& s);

core::SceneGraph ablate(const core::SceneGraph& g, AblateTarget what);

struct ConfidenceRange {
  double lo = 0.0;
  double hi = 1.0;
};

// Synthetic stand-in for a scene-graph generator: drops objects, appends
// spurious attributes, forgets and hallucinates edges, and attaches
// confidences with genuine components drawn from a higher-mean range than
// spurious ones.
struct DegradeSpec {
  double p_drop_object = 3.0 / 16.0;
  double spurious_attr_rate = 2.0;   // mean spurious attributes per object
  double p_keep_edge = 0.15;
  double edge_resample_rate = 6.0;   // mean hallucinated edges per graph
  std::vector<std::string> attribute_vocab;
  std::vector<std::string> relation_vocab;
  ConfidenceRange object_confidence{0.55, 1.0};
  ConfidenceRange genuine_attribute{0.6, 1.0};
  ConfidenceRange spurious_attribute{0.05, 0.6};
  ConfidenceRange genuine_relation{0.6, 1.0};
  ConfidenceRange spurious_relation{0.05, 0.6};

  void validate() const;
};

core::SceneGraph synth_degrade(const core::SceneGraph& gt, const DegradeSpec& spec,
                               nn::Rng& rng);

}  // namespace sgvqa::perturb
