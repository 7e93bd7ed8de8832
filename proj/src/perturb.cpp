#include "sgvqa/perturb/perturb.hpp"

#include <algorithm>
#include <numeric>

#include "sgvqa/core/vocabulary.hpp"
#include "sgvqa/util.hpp"

namespace sgvqa::perturb {

namespace {
const char* kUnk = core::Vocabulary::kUnkToken;
}

void CorruptionSpec::validate() const {
  if (level < 0.0 || level > 1.0) fail("CorruptionSpec: level ", level, " outside [0, 1]");
}

core::SceneGraph corrupt(const core::SceneGraph& gt, const CorruptionSpec& spec, nn::Rng& rng) {
  spec.validate();
  core::SceneGraph out = gt;
  for (core::ObjectNode& n : out.nodes) {
    if (rng.bernoulli(spec.level)) n.name = kUnk;
    for (std::string& a : n.attributes)
      if (rng.bernoulli(spec.level)) a = kUnk;
  }
  // Endpoint replacements read the original edge list so one draw never
  // cascades through another.
  const std::vector<core::RelationEdge> original = gt.edges;
  for (size_t k = 0; k < out.edges.size(); ++k) {
    if (rng.bernoulli(spec.level) && original.size() > 1) {
      size_t j = static_cast<size_t>(rng.uniform_index(static_cast<int>(original.size()) - 1));
      if (j >= k) ++j;
      out.edges[k].source = original[j].source;
      out.edges[k].receiver = original[j].receiver;
    }
  }
  for (core::RelationEdge& e : out.edges)
    if (rng.bernoulli(spec.level)) e.relation = kUnk;
  return out;
}

void FilterSpec::validate() const {
  if (mode == Mode::top_k && (k_objects <= 0 || k_attrs_per_object <= 0 || k_relations <= 0))
    fail("FilterSpec: top_k requires positive k values");
  if (mode == Mode::threshold) {
    for (double t : {t_object, t_attribute, t_relation})
      if (t < 0.0 || t > 1.0) fail("FilterSpec: thresholds must lie in [0, 1]");
  }
}

FilterSpec::Mode FilterSpec::mode_from_string(const std::string& s) {
  const std::string v = to_lower(trim(s));
  if (v == "none") return Mode::none;
  if (v == "top_k" || v == "topk" || v == "top-k") return Mode::top_k;
  if (v == "threshold") return Mode::threshold;
  fail("FilterSpec: unknown mode '", s, "'");
}

namespace {

double need_node_confidence(const core::ObjectNode& n, size_t index) {
  if (!n.confidence)
    fail("filter: object ", index, " ('", n.name, "') is missing a confidence");
  return *n.confidence;
}

double need_attr_confidence(const core::ObjectNode& n, size_t node_index, size_t attr_index) {
  if (!n.attribute_confidences)
    fail("filter: attribute '", n.attributes[attr_index], "' of object ", node_index,
         " is missing a confidence");
  return (*n.attribute_confidences)[attr_index];
}

double need_edge_confidence(const core::RelationEdge& e, size_t index) {
  if (!e.confidence)
    fail("filter: relation ", index, " ('", e.relation, "') is missing a confidence");
  return *e.confidence;
}

// Indices of the k largest values, ties resolved toward the lower index; the
// returned list is in ascending index order.
std::vector<size_t> top_k_indices(const std::vector<double>& values, size_t k) {
  std::vector<size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return values[a] > values[b]; });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

core::SceneGraph rebuild(const core::SceneGraph& g, const std::vector<size_t>& kept_nodes,
                         const std::vector<std::vector<size_t>>& kept_attrs,
                         const std::vector<size_t>& kept_edges) {
  core::SceneGraph out;
  out.image_id = g.image_id;
  std::vector<int> remap(g.nodes.size(), -1);
  for (size_t pos = 0; pos < kept_nodes.size(); ++pos) {
    const size_t i = kept_nodes[pos];
    remap[i] = static_cast<int>(pos);
    const core::ObjectNode& n = g.nodes[i];
    core::ObjectNode kept;
    kept.name = n.name;
    kept.confidence = n.confidence;
    if (n.attribute_confidences) kept.attribute_confidences = std::vector<double>{};
    for (size_t a : kept_attrs[pos]) {
      kept.attributes.push_back(n.attributes[a]);
      if (n.attribute_confidences)
        kept.attribute_confidences->push_back((*n.attribute_confidences)[a]);
    }
    out.nodes.push_back(std::move(kept));
  }
  for (size_t k : kept_edges) {
    core::RelationEdge e = g.edges[k];
    e.source = remap[static_cast<size_t>(e.source)];
    e.receiver = remap[static_cast<size_t>(e.receiver)];
    out.edges.push_back(std::move(e));
  }
  return out;
}

}  // namespace

core::SceneGraph filter(const core::SceneGraph& g, const FilterSpec& spec) {
  spec.validate();
  if (spec.mode == FilterSpec::Mode::none) return g;

  std::vector<size_t> kept_nodes;
  if (spec.mode == FilterSpec::Mode::top_k) {
    std::vector<double> conf;
    for (size_t i = 0; i < g.nodes.size(); ++i) conf.push_back(need_node_confidence(g.nodes[i], i));
    kept_nodes = top_k_indices(conf, static_cast<size_t>(spec.k_objects));
  } else {
    for (size_t i = 0; i < g.nodes.size(); ++i)
      if (need_node_confidence(g.nodes[i], i) >= spec.t_object) kept_nodes.push_back(i);
  }

  std::vector<std::vector<size_t>> kept_attrs(kept_nodes.size());
  for (size_t pos = 0; pos < kept_nodes.size(); ++pos) {
    const core::ObjectNode& n = g.nodes[kept_nodes[pos]];
    if (n.attributes.empty()) continue;
    std::vector<double> conf;
    for (size_t a = 0; a < n.attributes.size(); ++a)
      conf.push_back(need_attr_confidence(n, kept_nodes[pos], a));
    if (spec.mode == FilterSpec::Mode::top_k) {
      kept_attrs[pos] = top_k_indices(conf, static_cast<size_t>(spec.k_attrs_per_object));
    } else {
      for (size_t a = 0; a < conf.size(); ++a)
        if (conf[a] >= spec.t_attribute) kept_attrs[pos].push_back(a);
    }
  }

  std::vector<int> remap(g.nodes.size(), -1);
  for (size_t pos = 0; pos < kept_nodes.size(); ++pos) remap[kept_nodes[pos]] = static_cast<int>(pos);
  std::vector<size_t> edge_candidates;
  for (size_t k = 0; k < g.edges.size(); ++k) {
    const core::RelationEdge& e = g.edges[k];
    if (remap[static_cast<size_t>(e.source)] >= 0 && remap[static_cast<size_t>(e.receiver)] >= 0)
      edge_candidates.push_back(k);
  }
  std::vector<size_t> kept_edges;
  if (spec.mode == FilterSpec::Mode::top_k) {
    std::vector<double> conf;
    for (size_t k : edge_candidates) conf.push_back(need_edge_confidence(g.edges[k], k));
    for (size_t sel : top_k_indices(conf, static_cast<size_t>(spec.k_relations)))
      kept_edges.push_back(edge_candidates[sel]);
  } else {
    for (size_t k : edge_candidates)
      if (need_edge_confidence(g.edges[k], k) >= spec.t_relation) kept_edges.push_back(k);
  }
  return rebuild(g, kept_nodes, kept_attrs, kept_edges);
}

AblateTarget ablate_target_from_string(const std::string& s) {
  const std::string v = to_lower(trim(s));
  if (v == "relations") return AblateTarget::relations;
  if (v == "attributes") return AblateTarget::attributes;
  if (v == "relations_unk" || v == "relations-unk") return AblateTarget::relations_unk;
  fail("ablate: unknown target '", s, "'");
}

core::SceneGraph ablate(const core::SceneGraph& g, AblateTarget what) {
  core::SceneGraph out = g;
  switch (what) {
    case AblateTarget::relations:
      out.edges.clear();
      break;
    case AblateTarget::attributes:
      for (core::ObjectNode& n : out.nodes) {
        n.attributes.clear();
        n.attribute_confidences.reset();
      }
      break;
    case AblateTarget::relations_unk:
      for (core::RelationEdge& e : out.edges) e.relation = kUnk;
      break;
  }
  return out;
}

void DegradeSpec::validate() const {
  if (p_drop_object < 0.0 || p_drop_object > 1.0 || p_keep_edge < 0.0 || p_keep_edge > 1.0)
    fail("DegradeSpec: probabilities must lie in [0, 1]");
  if (spurious_attr_rate < 0.0 || edge_resample_rate < 0.0)
    fail("DegradeSpec: rates must be nonnegative");
}

core::SceneGraph synth_degrade(const core::SceneGraph& gt, const DegradeSpec& spec,
                               nn::Rng& rng) {
  spec.validate();
  if (spec.spurious_attr_rate > 0.0 && spec.attribute_vocab.empty())
    fail("synth_degrade: empty attribute vocabulary for spurious sampling");
  if (spec.edge_resample_rate > 0.0 && spec.relation_vocab.empty())
    fail("synth_degrade: empty relation vocabulary for edge resampling");

  std::vector<int> survivors;
  for (int i = 0; i < gt.node_count(); ++i)
    if (!rng.bernoulli(spec.p_drop_object)) survivors.push_back(i);
  if (survivors.empty() && gt.node_count() > 0)
    survivors.push_back(rng.uniform_index(gt.node_count()));

  core::SceneGraph out;
  out.image_id = gt.image_id;
  std::vector<int> remap(gt.nodes.size(), -1);
  for (size_t pos = 0; pos < survivors.size(); ++pos) {
    const core::ObjectNode& src = gt.nodes[static_cast<size_t>(survivors[pos])];
    remap[static_cast<size_t>(survivors[pos])] = static_cast<int>(pos);
    core::ObjectNode n;
    n.name = src.name;
    n.confidence = rng.uniform(spec.object_confidence.lo, spec.object_confidence.hi);
    n.attribute_confidences = std::vector<double>{};
    for (const std::string& a : src.attributes) {
      n.attributes.push_back(a);
      n.attribute_confidences->push_back(
          rng.uniform(spec.genuine_attribute.lo, spec.genuine_attribute.hi));
    }
    const int spurious = rng.poisson(spec.spurious_attr_rate);
    for (int s = 0; s < spurious; ++s) {
      n.attributes.push_back(
          spec.attribute_vocab[static_cast<size_t>(rng.uniform_index(
              static_cast<int>(spec.attribute_vocab.size())))]);
      n.attribute_confidences->push_back(
          rng.uniform(spec.spurious_attribute.lo, spec.spurious_attribute.hi));
    }
    out.nodes.push_back(std::move(n));
  }

  for (const core::RelationEdge& e : gt.edges) {
    const int s = remap[static_cast<size_t>(e.source)];
    const int r = remap[static_cast<size_t>(e.receiver)];
    if (s < 0 || r < 0) continue;
    if (!rng.bernoulli(spec.p_keep_edge)) continue;
    core::RelationEdge kept;
    kept.relation = e.relation;
    kept.source = s;
    kept.receiver = r;
    kept.confidence = rng.uniform(spec.genuine_relation.lo, spec.genuine_relation.hi);
    out.edges.push_back(std::move(kept));
  }
  const int resampled = rng.poisson(spec.edge_resample_rate);
  const int nv = out.node_count();
  for (int k = 0; k < resampled && nv >= 1; ++k) {
    core::RelationEdge e;
    e.source = rng.uniform_index(nv);
    e.receiver = nv > 1 ? (e.source + 1 + rng.uniform_index(nv - 1)) % nv : e.source;
    e.relation = spec.relation_vocab[static_cast<size_t>(
        rng.uniform_index(static_cast<int>(spec.relation_vocab.size())))];
    e.confidence = rng.uniform(spec.spurious_relation.lo, spec.spurious_relation.hi);
    out.edges.push_back(std::move(e));
  }
  return out;
}

}  // namespace sgvqa::perturb
