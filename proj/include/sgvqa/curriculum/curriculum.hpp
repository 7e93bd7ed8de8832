#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sgvqa/core/scene_graph.hpp"
#include "sgvqa/nn/rng.hpp"

namespace sgvqa::curriculum {

enum class Mode { component_swap, whole_graph_swap, mixed_dataset };
std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Per-epoch (probability, proportion) noise-injection controls. Both ramps
// must be non-decreasing after the warm-up epochs.
struct CurriculumSchedule {
  int warmup_epochs = 2;
  std::vector<std::pair<double, double>> epochs;  // includes the warm-up entries
  Mode mode = Mode::component_swap;

  int total_epochs() const { return static_cast<int>(epochs.size()); }
  double probability(int epoch) const;  // 1-based epoch
  double proportion(int epoch) const;
  void validate() const;
};

// Two warm-up epochs at (0, 0), then a linear ramp from (0.1, 0.1) to
// (0.9, 0.9) over the remaining epochs.
CurriculumSchedule schedule_default(int total_epochs, Mode mode = Mode::component_swap);

// Record of the swaps applied to one example; enough to rebuild the output
// graph from (gt, noisy, trace) without redrawing randomness.
struct SwapTrace {
  bool nodes_triggered = false;
  bool edge_pairs_triggered = false;
  bool relations_triggered = false;

  struct NodeSwap {
    int node = 0;        // index in the gt graph
    int noisy_node = 0;  // aligned node in the noisy graph
  };
  struct EdgePairSwap {
    int edge = 0;
    int new_source = 0;
    int new_receiver = 0;
  };
  struct RelationSwap {
    int edge = 0;
    std::string relation;
  };

  std::vector<NodeSwap> node_swaps;
  std::vector<EdgePairSwap> edge_pair_swaps;
  std::vector<RelationSwap> relation_swaps;

  bool empty() const {
    return node_swaps.empty() && edge_pair_swaps.empty() && relation_swaps.empty();
  }
};

// One probability draw per component class; a triggered class swaps
// floor(proportion * count) uniformly chosen components with counterparts
// from the noisy graph. Node alignment is by exact name first, then uniform
// over unmatched noisy nodes. An empty noisy graph is a no-op.
core::SceneGraph inject_noise(const core::SceneGraph& gt, const core::SceneGraph& noisy,
                              double probability, double proportion, nn::Rng& rng,
                              SwapTrace* trace = nullptr);

core::SceneGraph replay_swaps(const core::SceneGraph& gt, const core::SceneGraph& noisy,
                              const SwapTrace& trace);

}  // namespace sgvqa::curriculum
