#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pim/downstream.hpp"
#include "pim/graph.hpp"

namespace pim {

enum class SynthTopology { kGrid, kRandomGeometric };

struct SynthConfig {
  SynthTopology topology = SynthTopology::kGrid;
  int grid_width = 8;
  int grid_height = 8;
  int geometric_nodes = 64;
  double geometric_radius = 0.2;  // in the unit square

  double base_length = 100.0;  // meters
  double length_noise = 0.2;   // eta: length = base * (1 + U(-eta, eta))

  // Speed field, one value per undirected road. On grids every third row and
  // column is an arterial driven at arterial_factor times the base speed.
  double base_speed = 10.0;  // m/s
  double arterial_factor = 2.0;
  double speed_noise = 0.1;

  int num_paths = 200;
  int min_hops = 2;
  double detour_factor = 1.3;  // variants must satisfy length <= factor * shortest
  int max_variants = 3;        // shortest path plus up to two detours
  int max_retries = 10000;

  double label_noise = 0.05;  // per-path multiplicative N(0, sigma)
  double temperature = 30.0;  // seconds, for ranking scores
  std::uint64_t seed = 0;

  void validate() const;
};

SynthTopology parse_topology(const std::string& s);
const char* to_string(SynthTopology t);

// Bidirectional road network; both directions of a road share one length.
Graph gen_graph(const SynthConfig& cfg);

// Speed of the road u-v (symmetric), a pure function of cfg and the pair.
double edge_speed(const SynthConfig& cfg, NodeId u, NodeId v);

struct SynthCorpus {
  std::vector<Path> paths;
  std::vector<std::int64_t> groups;  // OD group id per path
};

// Samples distinct OD pairs and emits the shortest path plus detours within
// the factor bound, until num_paths paths exist. Throws kNoPath when retries
// run out.
SynthCorpus gen_paths(const Graph& g, const SynthConfig& cfg);

struct SynthLabels {
  std::vector<TravelTimeLabel> travel_times;
  std::vector<RankLabel> ranks;
};

// Travel time = sum(length / speed) * (1 + N(0, label_noise)); ranking score
// is softmax(-time / temperature) within each OD group.
SynthLabels gen_labels(const Graph& g, const SynthCorpus& corpus, const SynthConfig& cfg);

}  // namespace pim
