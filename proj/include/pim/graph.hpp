#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pim {

using NodeId = std::int32_t;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct Edge {
  NodeId from = 0;
  NodeId to = 0;
  double length = 0.0;  // meters
};

// Directed graph over dense ids 0..N-1. Immutable after construction.
class Graph {
 public:
  Graph() = default;

  // Builds from compact ids. Throws kInvalidArgument on an out-of-range
  // endpoint, a duplicate directed edge, or a negative/non-finite length.
  Graph(std::size_t num_nodes, std::vector<Edge> edges,
        std::vector<std::int64_t> original_ids = {});

  std::size_t num_nodes() const noexcept { return out_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  // Outgoing edges of `u`, sorted by target id.
  std::span<const Edge> out_edges(NodeId u) const;
  std::span<const Edge> in_edges(NodeId v) const;

  bool has_edge(NodeId u, NodeId v) const;
  std::optional<double> edge_length(NodeId u, NodeId v) const;
  bool is_valid_node(NodeId u) const noexcept {
    return u >= 0 && static_cast<std::size_t>(u) < num_nodes();
  }

  // Self-loop edges are kept but can never appear on a loopless path.
  bool has_self_loop(NodeId u) const;

  // original_id(i) is the id used in input files for compact node i.
  std::int64_t original_id(NodeId u) const;
  std::optional<NodeId> compact_id(std::int64_t original) const;
  const std::vector<std::int64_t>& remap_table() const noexcept { return original_; }

 private:
  std::vector<Edge> edges_;
  std::vector<std::vector<Edge>> out_;
  std::vector<std::vector<Edge>> in_;
  std::vector<std::int64_t> original_;  // sorted ascending
};

// Parses `u,v,length` records. Ids are compacted in ascending order of the
// original id. Errors carry the 1-based line number as detail().
Graph load_graph(std::istream& in);
Graph load_graph_file(const std::string& path);

// Writes edges with original ids so a reload reproduces the graph.
void save_graph(const Graph& g, std::ostream& out);
void save_graph_file(const Graph& g, const std::string& path);

// N x D node features, one row per compact node id.
class FeatureTable {
 public:
  FeatureTable() = default;
  explicit FeatureTable(Matrix values);

  std::size_t num_nodes() const noexcept { return static_cast<std::size_t>(values_.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(values_.cols()); }
  const Matrix& values() const noexcept { return values_; }
  auto row(NodeId u) const { return values_.row(u); }

 private:
  Matrix values_;
};

FeatureTable load_features(std::istream& in);
FeatureTable load_features_file(const std::string& path);
void save_features(const FeatureTable& f, std::ostream& out);
void save_features_file(const FeatureTable& f, const std::string& path);

// Loopless node sequence with Z >= 2 whose hops are graph edges. Only
// validate_path() constructs one.
class Path {
 public:
  const std::vector<NodeId>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  NodeId source() const noexcept { return nodes_.front(); }
  NodeId destination() const noexcept { return nodes_.back(); }
  NodeId operator[](std::size_t k) const noexcept { return nodes_[k]; }

  friend bool operator==(const Path&, const Path&) = default;
  friend auto operator<=>(const Path&, const Path&) = default;

 private:
  explicit Path(std::vector<NodeId> nodes) : nodes_(std::move(nodes)) {}
  friend Path validate_path(const Graph& g, std::span<const NodeId> ids);

  std::vector<NodeId> nodes_;
};

// Throws kTooShort, kMissingEdge (detail = first broken hop index) or
// kRepeatedNode (detail = node id).
Path validate_path(const Graph& g, std::span<const NodeId> ids);

double path_length(const Graph& g, const Path& p);

// Z x D matrix, row k = features of the k-th node.
Matrix initial_view(const Graph& g, const FeatureTable& f, const Path& p);

// Path files hold one comma-separated path per line in original ids.
std::vector<Path> load_paths(const Graph& g, std::istream& in);
std::vector<Path> load_paths_file(const Graph& g, const std::string& path);
void save_paths(const Graph& g, std::span<const Path> paths, std::ostream& out);
void save_paths_file(const Graph& g, std::span<const Path> paths, const std::string& path);

}  // namespace pim
