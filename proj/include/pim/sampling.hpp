#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "pim/graph.hpp"

namespace pim {

// Jaccard similarity of the node sets of `a` and `b`, both taken without the
// source and destination of `a`. Two empty sets count as identical (1.0).
double path_similarity(const Path& a, const Path& b);

// Lazily enumerates loopless s->d paths in order of (total length, node
// sequence). Lengths are summed hop by hop from the source.
class YenEnumerator {
 public:
  // Throws kInvalidArgument if s == d or either node is invalid.
  YenEnumerator(const Graph& g, NodeId source, NodeId destination);

  // Next path in order, or nullopt once every loopless path was produced.
  std::optional<Path> next();

  const std::vector<Path>& produced() const noexcept { return found_; }

 private:
  using Candidate = std::pair<double, std::vector<NodeId>>;

  std::optional<std::vector<NodeId>> spur_path(NodeId spur, const std::vector<char>& blocked_nodes,
                                               const std::set<std::pair<NodeId, NodeId>>& blocked_edges) const;
  double sequence_length(const std::vector<NodeId>& nodes) const;

  const Graph* g_;
  NodeId source_;
  NodeId destination_;
  bool started_ = false;
  std::vector<Path> found_;
  std::set<Candidate> candidates_;
};

// Up to k shortest loopless paths. Throws kNoPath if d is unreachable.
std::vector<Path> yen_k_shortest(const Graph& g, NodeId s, NodeId d, int k);

struct DiversityConfig {
  int k = 2;
  double threshold = 0.6;  // maximum pairwise similarity, in [0, 1)
  // Cap on how many paths of the Yen stream are inspected.
  std::size_t max_candidates = 64;

  void validate() const;
};

struct DiversifiedPaths {
  std::vector<Path> paths;
  bool insufficient = false;  // fewer than k accepted
};

// Greedy filter over a precomputed shortest-path stream.
DiversifiedPaths diversify(std::span<const Path> stream, const DiversityConfig& cfg);

// Greedy filter over the Yen stream; throws kNoPath if d is unreachable.
DiversifiedPaths diversified_top_k(const Graph& g, NodeId s, NodeId d, const DiversityConfig& cfg);

enum class NegativeKind { kRandom, kDiversified };

struct Negative {
  Path path;
  NegativeKind kind;
  double overlap;  // path_similarity(input, path)
};

struct NegativeSet {
  std::size_t input_id = 0;
  std::vector<Negative> negatives;  // easy -> hard, overlap non-decreasing
  bool backfilled = false;          // diversified candidates were unavailable
};

enum class SamplingStrategy { kCurriculum, kRandomOnly, kTopKOnly };

struct NegativeConfig {
  int num_negatives = 4;
  // Curriculum: the first min(num_random, K) negatives are random corpus
  // paths, the rest are diversified. Ignored by the other strategies.
  int num_random = 2;
  // Diversity thresholds for the diversified negatives are spread evenly
  // over [tau_low, tau_high].
  double tau_low = 0.6;
  double tau_high = 0.9;
  std::size_t max_candidates = 64;
  SamplingStrategy strategy = SamplingStrategy::kCurriculum;

  void validate() const;
};

// Negatives for corpus[input_id]. Deterministic in (seed, input_id).
NegativeSet sample_negatives(const Graph& g, std::span<const Path> corpus, std::size_t input_id,
                             const NegativeConfig& cfg, std::uint64_t seed);

std::vector<NegativeSet> sample_all_negatives(const Graph& g, std::span<const Path> corpus,
                                              const NegativeConfig& cfg, std::uint64_t seed);

enum class CurriculumMode { kStaged, kAll };

// Active negatives at a 1-based stage: the easiest min(stage, K) when staged,
// all of them otherwise.
std::span<const Negative> curriculum_schedule(int stage, const NegativeSet& ns, CurriculumMode mode);

// Stage for a 0-based epoch: advances every max(1, epochs / K) epochs.
int curriculum_stage(int epoch, int total_epochs, int num_negatives);

struct NodePartition {
  std::vector<NodeId> positive;  // only in the input path (X)
  std::vector<NodeId> negative;  // only in the negatives (Y)
};

// Throws kEmptyPartition when both sets are empty.
NodePartition node_partition(const Path& input, std::span<const Negative> active);
NodePartition node_partition(const Path& input, std::span<const Path> active);

// Negative-set file: one line per input path,
//   <input_id>\t<backfilled 0|1>\t<kind r|d>:<n1,n2,...>@<overlap>\t...
// with node ids in original numbering.
void save_negatives(const Graph& g, std::span<const NegativeSet> sets, std::ostream& out);
void save_negatives_file(const Graph& g, std::span<const NegativeSet> sets, const std::string& path);
std::vector<NegativeSet> load_negatives(const Graph& g, std::istream& in);
std::vector<NegativeSet> load_negatives_file(const Graph& g, const std::string& path);

}  // namespace pim
