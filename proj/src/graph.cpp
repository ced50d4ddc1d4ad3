#include "pim/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>

#include "pim/error.hpp"
#include "text_util.hpp"

namespace pim {

namespace {

bool by_target(const Edge& a, const Edge& b) { return a.to < b.to; }
bool by_source(const Edge& a, const Edge& b) { return a.from < b.from; }

}  // namespace

Graph::Graph(std::size_t num_nodes, std::vector<Edge> edges,
             std::vector<std::int64_t> original_ids)
    : edges_(std::move(edges)), out_(num_nodes), in_(num_nodes), original_(std::move(original_ids)) {
  if (original_.empty()) {
    original_.resize(num_nodes);
    for (std::size_t i = 0; i < num_nodes; ++i) original_[i] = static_cast<std::int64_t>(i);
  }
  if (original_.size() != num_nodes)
    throw Error(ErrorCode::kInvalidArgument, "remap table size does not match node count");
  if (!std::is_sorted(original_.begin(), original_.end()) ||
      std::adjacent_find(original_.begin(), original_.end()) != original_.end())
    throw Error(ErrorCode::kInvalidArgument, "remap table must be strictly increasing");

  for (const auto& e : edges_) {
    if (!is_valid_node(e.from) || !is_valid_node(e.to))
      throw Error(ErrorCode::kInvalidArgument,
                  "edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                      ") has an endpoint outside 0.." + std::to_string(num_nodes));
    if (!std::isfinite(e.length) || e.length < 0.0)
      throw Error(ErrorCode::kInvalidArgument, "edge length must be finite and >= 0");
    out_[e.from].push_back(e);
    in_[e.to].push_back(e);
  }
  for (auto& adj : out_) {
    std::sort(adj.begin(), adj.end(), by_target);
    if (std::adjacent_find(adj.begin(), adj.end(), [](const Edge& a, const Edge& b) {
          return a.to == b.to;
        }) != adj.end())
      throw Error(ErrorCode::kInvalidArgument, "duplicate directed edge");
  }
  for (auto& adj : in_) std::sort(adj.begin(), adj.end(), by_source);
}

std::span<const Edge> Graph::out_edges(NodeId u) const { return out_.at(u); }
std::span<const Edge> Graph::in_edges(NodeId v) const { return in_.at(v); }

std::optional<double> Graph::edge_length(NodeId u, NodeId v) const {
  if (!is_valid_node(u) || !is_valid_node(v)) return std::nullopt;
  const auto& adj = out_[u];
  const auto it = std::lower_bound(adj.begin(), adj.end(), Edge{u, v, 0.0}, by_target);
  if (it == adj.end() || it->to != v) return std::nullopt;
  return it->length;
}

bool Graph::has_edge(NodeId u, NodeId v) const { return edge_length(u, v).has_value(); }
bool Graph::has_self_loop(NodeId u) const { return has_edge(u, u); }

std::int64_t Graph::original_id(NodeId u) const { return original_.at(u); }

std::optional<NodeId> Graph::compact_id(std::int64_t original) const {
  const auto it = std::lower_bound(original_.begin(), original_.end(), original);
  if (it == original_.end() || *it != original) return std::nullopt;
  return static_cast<NodeId>(it - original_.begin());
}

Graph load_graph(std::istream& in) {
  struct Record {
    std::int64_t u, v;
    double length;
    std::size_t line;
  };
  std::vector<Record> records;
  std::set<std::pair<std::int64_t, std::int64_t>> seen;
  std::set<std::int64_t> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_comment(line);
    if (body.empty()) continue;
    const auto fields = detail::split(body, ',');
    if (fields.size() != 3) detail::parse_error(line_no, "expected u,v,length");
    const auto u = detail::parse_int(fields[0]);
    const auto v = detail::parse_int(fields[1]);
    const auto len = detail::parse_double(fields[2]);
    if (!u || !v || !len) detail::parse_error(line_no, "malformed record");
    if (*u < 0 || *v < 0) detail::parse_error(line_no, "node ids must be nonnegative");
    if (!std::isfinite(*len) || *len < 0.0) detail::parse_error(line_no, "negative or non-finite length");
    if (!seen.emplace(*u, *v).second) detail::parse_error(line_no, "duplicate edge");
    ids.insert(*u);
    ids.insert(*v);
    records.push_back({*u, *v, *len, line_no});
  }
  std::vector<std::int64_t> original(ids.begin(), ids.end());
  std::map<std::int64_t, NodeId> compact;
  for (std::size_t i = 0; i < original.size(); ++i) compact[original[i]] = static_cast<NodeId>(i);
  std::vector<Edge> edges;
  edges.reserve(records.size());
  for (const auto& r : records) edges.push_back({compact[r.u], compact[r.v], r.length});
  const std::size_t n = original.size();
  return Graph(n, std::move(edges), std::move(original));
}

Graph load_graph_file(const std::string& path) {
  auto in = detail::open_in(path);
  return load_graph(in);
}

void save_graph(const Graph& g, std::ostream& out) {
  for (const auto& e : g.edges())
    out << g.original_id(e.from) << ',' << g.original_id(e.to) << ','
        << detail::format_double(e.length) << '\n';
}

void save_graph_file(const Graph& g, const std::string& path) {
  auto out = detail::open_out(path);
  save_graph(g, out);
}

FeatureTable::FeatureTable(Matrix values) : values_(std::move(values)) {
  if (values_.rows() == 0 || values_.cols() == 0)
    throw Error(ErrorCode::kInvalidArgument, "feature table must be non-empty");
  if (!values_.allFinite()) throw Error(ErrorCode::kNumeric, "feature table has non-finite entries");
}

FeatureTable load_features(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::pair<std::int64_t, std::int64_t>> header;
  Matrix values;
  std::int64_t row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_comment(line);
    if (body.empty()) continue;
    const auto fields = detail::split_ws(body);
    if (!header) {
      if (fields.size() != 2) detail::parse_error(line_no, "expected header 'N D'");
      const auto n = detail::parse_int(fields[0]);
      const auto d = detail::parse_int(fields[1]);
      if (!n || !d || *n <= 0 || *d <= 0) detail::parse_error(line_no, "invalid header");
      header.emplace(*n, *d);
      values.resize(*n, *d);
      continue;
    }
    if (row >= header->first) detail::parse_error(line_no, "more rows than declared N");
    if (static_cast<std::int64_t>(fields.size()) != header->second)
      detail::parse_error(line_no, "expected " + std::to_string(header->second) + " values");
    for (std::int64_t c = 0; c < header->second; ++c) {
      const auto v = detail::parse_double(fields[c]);
      if (!v) detail::parse_error(line_no, "malformed value");
      values(row, c) = *v;
    }
    ++row;
  }
  if (!header) throw Error(ErrorCode::kParse, "empty feature file");
  if (row != header->first)
    throw Error(ErrorCode::kParse, "feature file declares " + std::to_string(header->first) +
                                       " rows but has " + std::to_string(row));
  return FeatureTable(std::move(values));
}

FeatureTable load_features_file(const std::string& path) {
  auto in = detail::open_in(path);
  return load_features(in);
}

void save_features(const FeatureTable& f, std::ostream& out) {
  const auto& m = f.values();
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << detail::format_double(m(r, c));
    }
    out << '\n';
  }
}

void save_features_file(const FeatureTable& f, const std::string& path) {
  auto out = detail::open_out(path);
  save_features(f, out);
}

Path validate_path(const Graph& g, std::span<const NodeId> ids) {
  if (ids.size() < 2)
    throw Error(ErrorCode::kTooShort, "path needs at least 2 nodes, got " + std::to_string(ids.size()));
  for (const auto id : ids)
    if (!g.is_valid_node(id))
      throw Error(ErrorCode::kInvalidArgument, "node " + std::to_string(id) + " is not in the graph");
  for (std::size_t k = 0; k + 1 < ids.size(); ++k)
    if (!g.has_edge(ids[k], ids[k + 1]))
      throw Error(ErrorCode::kMissingEdge,
                  "no edge " + std::to_string(ids[k]) + "->" + std::to_string(ids[k + 1]) +
                      " at hop " + std::to_string(k),
                  static_cast<std::int64_t>(k));
  std::vector<NodeId> sorted(ids.begin(), ids.end());
  std::sort(sorted.begin(), sorted.end());
  const auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end())
    throw Error(ErrorCode::kRepeatedNode, "node " + std::to_string(*dup) + " repeats", *dup);
  return Path(std::vector<NodeId>(ids.begin(), ids.end()));
}

double path_length(const Graph& g, const Path& p) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) total += *g.edge_length(p[k], p[k + 1]);
  return total;
}

Matrix initial_view(const Graph& g, const FeatureTable& f, const Path& p) {
  if (f.num_nodes() != g.num_nodes())
    throw Error(ErrorCode::kShapeMismatch, "feature table has " + std::to_string(f.num_nodes()) +
                                               " rows but graph has " + std::to_string(g.num_nodes()) +
                                               " nodes");
  Matrix view(static_cast<Eigen::Index>(p.size()), static_cast<Eigen::Index>(f.dim()));
  for (std::size_t k = 0; k < p.size(); ++k) view.row(static_cast<Eigen::Index>(k)) = f.row(p[k]);
  return view;
}

std::vector<Path> load_paths(const Graph& g, std::istream& in) {
  std::vector<Path> paths;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_comment(line);
    if (body.empty()) continue;
    std::vector<NodeId> ids;
    for (const auto field : detail::split(body, ',')) {
      const auto v = detail::parse_int(field);
      if (!v) detail::parse_error(line_no, "malformed node id");
      const auto c = g.compact_id(*v);
      if (!c) detail::parse_error(line_no, "unknown node id " + std::to_string(*v));
      ids.push_back(*c);
    }
    try {
      paths.push_back(validate_path(g, ids));
    } catch (const Error& e) {
      detail::parse_error(line_no, e.what());
    }
  }
  return paths;
}

std::vector<Path> load_paths_file(const Graph& g, const std::string& path) {
  auto in = detail::open_in(path);
  return load_paths(g, in);
}

void save_paths(const Graph& g, std::span<const Path> paths, std::ostream& out) {
  for (const auto& p : paths) {
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) out << ',';
      out << g.original_id(p[k]);
    }
    out << '\n';
  }
}

void save_paths_file(const Graph& g, std::span<const Path> paths, const std::string& path) {
  auto out = detail::open_out(path);
  save_paths(g, paths, out);
}

}  // namespace pim
