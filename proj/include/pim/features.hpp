#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pim/graph.hpp"

namespace pim {

// Biased second-order random walks (node2vec style).
struct WalkConfig {
  int walks_per_node = 10;
  int walk_length = 20;
  double return_bias = 1.0;  // p
  double inout_bias = 1.0;   // q
  std::uint64_t seed = 0;

  void validate() const;
};

// Skip-gram with negative sampling.
struct SgnsConfig {
  int dim = 16;
  int window = 5;
  int negatives = 5;
  int epochs = 1;
  double learning_rate = 0.025;
  std::uint64_t seed = 0;

  void validate() const;
};

using Walk = std::vector<NodeId>;
using WalkSet = std::vector<Walk>;

// r walks for every node with out-degree > 0, ordered by (round, start node).
// A walk that reaches a node without out-edges stops there.
WalkSet generate_walks(const Graph& g, const WalkConfig& cfg);

// Trains one embedding per node. Node and context vectors share a single
// table, so nodes that co-occur within the window get a large dot product.
FeatureTable train_sgns(const WalkSet& walks, const SgnsConfig& cfg, std::size_t num_nodes);

// Called after every single SGNS update with the current table; used by tests
// to log the learning trajectory.
using SgnsObserver = std::function<void(const Matrix& table)>;
FeatureTable train_sgns(const WalkSet& walks, const SgnsConfig& cfg, std::size_t num_nodes,
                        const SgnsObserver& observer);

}  // namespace pim
