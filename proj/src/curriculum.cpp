#include "sgvqa/curriculum/curriculum.hpp"

#include <algorithm>

#include "sgvqa/util.hpp"

namespace sgvqa::curriculum {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::component_swap: return "component_swap";
    case Mode::whole_graph_swap: return "whole_graph_swap";
    case Mode::mixed_dataset: return "mixed_dataset";
  }
  fail("to_string: bad curriculum Mode");
}

Mode mode_from_string(const std::string& s) {
  const std::string v = to_lower(trim(s));
  if (v == "component_swap") return Mode::component_swap;
  if (v == "whole_graph_swap") return Mode::whole_graph_swap;
  if (v == "mixed_dataset") return Mode::mixed_dataset;
  fail("unknown curriculum mode '", s, "'");
}

double CurriculumSchedule::probability(int epoch) const {
  if (epoch < 1 || epoch > total_epochs())
    fail("CurriculumSchedule: epoch ", epoch, " outside 1..", total_epochs());
  return epochs[static_cast<size_t>(epoch - 1)].first;
}

double CurriculumSchedule::proportion(int epoch) const {
  if (epoch < 1 || epoch > total_epochs())
    fail("CurriculumSchedule: epoch ", epoch, " outside 1..", total_epochs());
  return epochs[static_cast<size_t>(epoch - 1)].second;
}

void CurriculumSchedule::validate() const {
  if (warmup_epochs < 0) fail("CurriculumSchedule: negative warm-up");
  for (const auto& [p, q] : epochs)
    if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0)
      fail("CurriculumSchedule: probability/proportion outside [0, 1]");
  for (size_t e = static_cast<size_t>(warmup_epochs) + 1; e < epochs.size(); ++e) {
    if (epochs[e].first < epochs[e - 1].first || epochs[e].second < epochs[e - 1].second)
      fail("CurriculumSchedule: ramp must be non-decreasing after warm-up (epoch ", e + 1, ")");
  }
}

CurriculumSchedule schedule_default(int total_epochs, Mode mode) {
  constexpr int kWarmup = 2;
  if (total_epochs <= kWarmup)
    fail("schedule_default: need more than ", kWarmup, " epochs, got ", total_epochs);
  CurriculumSchedule s;
  s.warmup_epochs = kWarmup;
  s.mode = mode;
  for (int e = 0; e < kWarmup; ++e) s.epochs.emplace_back(0.0, 0.0);
  const int ramp = total_epochs - kWarmup;
  for (int i = 0; i < ramp; ++i) {
    const double v = ramp == 1 ? 0.9 : 0.1 + 0.8 * static_cast<double>(i) / (ramp - 1);
    s.epochs.emplace_back(v, v);
  }
  s.validate();
  return s;
}

namespace {

// Chooses floor(proportion * count) distinct indices uniformly.
std::vector<int> choose_components(int count, double proportion, nn::Rng& rng) {
  const int wanted = static_cast<int>(proportion * count);
  std::vector<int> pool(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) pool[static_cast<size_t>(i)] = i;
  for (int i = 0; i < wanted; ++i) {
    const int j = i + rng.uniform_index(count - i);
    std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
  }
  pool.resize(static_cast<size_t>(wanted));
  std::sort(pool.begin(), pool.end());
  return pool;
}

// gt node -> noisy node, exact lowercase-name matches first, remaining gt
// nodes drawing uniformly from the unmatched noisy pool (all noisy nodes once
// the pool runs dry).
std::vector<int> align_nodes(const core::SceneGraph& gt, const core::SceneGraph& noisy,
                             nn::Rng& rng) {
  std::vector<int> alignment(gt.nodes.size(), -1);
  std::vector<bool> used(noisy.nodes.size(), false);
  for (size_t i = 0; i < gt.nodes.size(); ++i) {
    const std::string name = to_lower(gt.nodes[i].name);
    for (size_t j = 0; j < noisy.nodes.size(); ++j)
      if (!used[j] && to_lower(noisy.nodes[j].name) == name) {
        alignment[i] = static_cast<int>(j);
        used[j] = true;
        break;
      }
  }
  std::vector<int> unmatched;
  for (size_t j = 0; j < noisy.nodes.size(); ++j)
    if (!used[j]) unmatched.push_back(static_cast<int>(j));
  for (size_t i = 0; i < alignment.size(); ++i) {
    if (alignment[i] >= 0) continue;
    if (!unmatched.empty()) {
      const int pick = rng.uniform_index(static_cast<int>(unmatched.size()));
      alignment[i] = unmatched[static_cast<size_t>(pick)];
      unmatched.erase(unmatched.begin() + pick);
    } else {
      alignment[i] = rng.uniform_index(noisy.node_count());
    }
  }
  return alignment;
}

}  // namespace

core::SceneGraph inject_noise(const core::SceneGraph& gt, const core::SceneGraph& noisy,
                              double probability, double proportion, nn::Rng& rng,
                              SwapTrace* trace) {
  if (gt.image_id != noisy.image_id)
    fail("inject_noise: image_id mismatch '", gt.image_id, "' vs '", noisy.image_id, "'");
  if (probability < 0.0 || probability > 1.0 || proportion < 0.0 || proportion > 1.0)
    fail("inject_noise: probability and proportion must lie in [0, 1]");

  SwapTrace local;
  SwapTrace& tr = trace ? *trace : local;
  tr = SwapTrace{};
  if (noisy.nodes.empty()) return gt;

  core::SceneGraph out = gt;

  // Noisy edge endpoints are mapped back through the alignment; noisy nodes
  // nobody aligned to fall back to a uniform gt node.
  std::vector<int> alignment = align_nodes(gt, noisy, rng);
  std::vector<int> inverse(noisy.nodes.size(), -1);
  for (size_t i = 0; i < alignment.size(); ++i)
    if (inverse[static_cast<size_t>(alignment[i])] < 0)
      inverse[static_cast<size_t>(alignment[i])] = static_cast<int>(i);
  auto map_to_gt = [&](int noisy_index) {
    const int mapped = inverse[static_cast<size_t>(noisy_index)];
    return mapped >= 0 ? mapped : rng.uniform_index(gt.node_count());
  };

  tr.nodes_triggered = rng.bernoulli(probability);
  if (tr.nodes_triggered) {
    for (int i : choose_components(gt.node_count(), proportion, rng)) {
      const int j = alignment[static_cast<size_t>(i)];
      tr.node_swaps.push_back({i, j});
    }
  }
  tr.edge_pairs_triggered = rng.bernoulli(probability);
  if (tr.edge_pairs_triggered && !gt.edges.empty() && !noisy.edges.empty()) {
    for (int k : choose_components(gt.edge_count(), proportion, rng)) {
      const core::RelationEdge& ne =
          noisy.edges[static_cast<size_t>(rng.uniform_index(noisy.edge_count()))];
      tr.edge_pair_swaps.push_back({k, map_to_gt(ne.source), map_to_gt(ne.receiver)});
    }
  }
  tr.relations_triggered = rng.bernoulli(probability);
  if (tr.relations_triggered && !gt.edges.empty() && !noisy.edges.empty()) {
    for (int k : choose_components(gt.edge_count(), proportion, rng)) {
      const core::RelationEdge& ne =
          noisy.edges[static_cast<size_t>(rng.uniform_index(noisy.edge_count()))];
      tr.relation_swaps.push_back({k, ne.relation});
    }
  }
  return replay_swaps(gt, noisy, tr);
}

core::SceneGraph replay_swaps(const core::SceneGraph& gt, const core::SceneGraph& noisy,
                              const SwapTrace& trace) {
  core::SceneGraph out = gt;
  for (const SwapTrace::NodeSwap& s : trace.node_swaps) {
    const core::ObjectNode& src = noisy.nodes.at(static_cast<size_t>(s.noisy_node));
    core::ObjectNode& dst = out.nodes.at(static_cast<size_t>(s.node));
    dst.name = src.name;
    dst.attributes = src.attributes;
    dst.attribute_confidences.reset();
  }
  for (const SwapTrace::EdgePairSwap& s : trace.edge_pair_swaps) {
    core::RelationEdge& e = out.edges.at(static_cast<size_t>(s.edge));
    e.source = s.new_source;
    e.receiver = s.new_receiver;
  }
  for (const SwapTrace::RelationSwap& s : trace.relation_swaps)
    out.edges.at(static_cast<size_t>(s.edge)).relation = s.relation;
  out.validate();
  return out;
}

}  // namespace sgvqa::curriculum
