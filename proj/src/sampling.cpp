#include "pim/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <string>

#include "pim/error.hpp"
#include "pim/parallel.hpp"
#include "pim/rng.hpp"
#include "text_util.hpp"

namespace pim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<NodeId> interior_set(const std::vector<NodeId>& nodes, NodeId s, NodeId d) {
  std::vector<NodeId> out;
  out.reserve(nodes.size());
  for (const auto v : nodes)
    if (v != s && v != d) out.push_back(v);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

double path_similarity(const Path& a, const Path& b) {
  const auto sa = interior_set(a.nodes(), a.source(), a.destination());
  const auto sb = interior_set(b.nodes(), a.source(), a.destination());
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<NodeId> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const double uni = static_cast<double>(sa.size() + sb.size() - common.size());
  return static_cast<double>(common.size()) / uni;
}

YenEnumerator::YenEnumerator(const Graph& g, NodeId source, NodeId destination)
    : g_(&g), source_(source), destination_(destination) {
  if (!g.is_valid_node(source) || !g.is_valid_node(destination))
    throw Error(ErrorCode::kInvalidArgument, "source or destination is not a graph node");
  if (source == destination) throw Error(ErrorCode::kInvalidArgument, "source equals destination");
}

double YenEnumerator::sequence_length(const std::vector<NodeId>& nodes) const {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) total += *g_->edge_length(nodes[k], nodes[k + 1]);
  return total;
}

std::optional<std::vector<NodeId>> YenEnumerator::spur_path(
    NodeId spur, const std::vector<char>& blocked_nodes,
    const std::set<std::pair<NodeId, NodeId>>& blocked_edges) const {
  const std::size_t n = g_->num_nodes();
  std::vector<double> dist(n, kInf);
  std::vector<NodeId> parent(n, -1);
  std::vector<char> done(n, 0);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[destination_] = 0.0;
  heap.emplace(0.0, destination_);
  // Distances to the destination over the reverse graph.
  while (!heap.empty()) {
    const auto [du, u] = heap.top();
    heap.pop();
    if (done[u]) continue;
    done[u] = 1;
    if (u == spur) break;
    for (const auto& e : g_->in_edges(u)) {
      const NodeId w = e.from;
      if (blocked_nodes[w] || done[w] || blocked_edges.count({w, u})) continue;
      const double cand = du + e.length;
      if (cand < dist[w]) {
        dist[w] = cand;
        parent[w] = u;
        heap.emplace(cand, w);
      }
    }
  }
  if (!done[spur]) return std::nullopt;

  // Walk tight edges choosing the smallest next id, which yields the
  // lexicographically smallest shortest path.
  std::vector<NodeId> seq{spur};
  std::vector<char> on_path(n, 0);
  on_path[spur] = 1;
  NodeId cur = spur;
  bool ok = true;
  while (cur != destination_) {
    NodeId pick = -1;
    for (const auto& e : g_->out_edges(cur)) {
      const NodeId v = e.to;
      if (blocked_nodes[v] || on_path[v] || !done[v] || blocked_edges.count({cur, v})) continue;
      if (e.length + dist[v] == dist[cur]) {
        pick = v;
        break;
      }
    }
    if (pick < 0) {
      ok = false;
      break;
    }
    seq.push_back(pick);
    on_path[pick] = 1;
    cur = pick;
  }
  if (!ok) {
    // Zero-length cycles can trap the greedy walk; the Dijkstra tree is loopless.
    seq.assign(1, spur);
    for (NodeId v = parent[spur]; v >= 0; v = parent[v]) seq.push_back(v);
  }
  return seq;
}

std::optional<Path> YenEnumerator::next() {
  const std::size_t n = g_->num_nodes();
  if (!started_) {
    started_ = true;
    auto first = spur_path(source_, std::vector<char>(n, 0), {});
    if (!first) return std::nullopt;
    found_.push_back(validate_path(*g_, *first));
    return found_.back();
  }
  if (found_.empty()) return std::nullopt;

  const auto& last = found_.back().nodes();
  for (std::size_t i = 0; i + 1 < last.size(); ++i) {
    const NodeId spur = last[i];
    std::set<std::pair<NodeId, NodeId>> blocked_edges;
    for (const auto& p : found_) {
      const auto& q = p.nodes();
      if (q.size() > i + 1 && std::equal(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(i) + 1, q.begin()))
        blocked_edges.emplace(q[i], q[i + 1]);
    }
    std::vector<char> blocked_nodes(n, 0);
    for (std::size_t r = 0; r < i; ++r) blocked_nodes[last[r]] = 1;
    auto tail = spur_path(spur, blocked_nodes, blocked_edges);
    if (!tail) continue;
    std::vector<NodeId> full(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(i));
    full.insert(full.end(), tail->begin(), tail->end());
    candidates_.emplace(sequence_length(full), std::move(full));
  }
  while (!candidates_.empty()) {
    auto best = candidates_.extract(candidates_.begin()).value();
    const bool seen = std::any_of(found_.begin(), found_.end(),
                                  [&](const Path& p) { return p.nodes() == best.second; });
    if (seen) continue;
    found_.push_back(validate_path(*g_, best.second));
    return found_.back();
  }
  return std::nullopt;
}

std::vector<Path> yen_k_shortest(const Graph& g, NodeId s, NodeId d, int k) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  YenEnumerator yen(g, s, d);
  std::vector<Path> out;
  while (static_cast<int>(out.size()) < k) {
    auto p = yen.next();
    if (!p) break;
    out.push_back(std::move(*p));
  }
  if (out.empty())
    throw Error(ErrorCode::kNoPath, "no path from " + std::to_string(s) + " to " + std::to_string(d));
  return out;
}

void DiversityConfig::validate() const {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (!(threshold >= 0.0 && threshold < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "diversity threshold must lie in [0, 1)");
  if (max_candidates < 1) throw Error(ErrorCode::kInvalidArgument, "max_candidates must be >= 1");
}

DiversifiedPaths diversify(std::span<const Path> stream, const DiversityConfig& cfg) {
  cfg.validate();
  DiversifiedPaths out;
  const std::size_t limit = std::min(stream.size(), cfg.max_candidates);
  for (std::size_t i = 0; i < limit && static_cast<int>(out.paths.size()) < cfg.k; ++i) {
    const auto& cand = stream[i];
    const bool ok = std::all_of(out.paths.begin(), out.paths.end(), [&](const Path& p) {
      return path_similarity(p, cand) <= cfg.threshold;
    });
    if (ok) out.paths.push_back(cand);
  }
  out.insufficient = static_cast<int>(out.paths.size()) < cfg.k;
  return out;
}

namespace {

// Yen stream truncated at max_candidates; empty when d is unreachable.
std::vector<Path> yen_stream(const Graph& g, NodeId s, NodeId d, std::size_t max_candidates) {
  YenEnumerator yen(g, s, d);
  std::vector<Path> stream;
  while (stream.size() < max_candidates) {
    auto p = yen.next();
    if (!p) break;
    stream.push_back(std::move(*p));
  }
  return stream;
}

}  // namespace

DiversifiedPaths diversified_top_k(const Graph& g, NodeId s, NodeId d, const DiversityConfig& cfg) {
  cfg.validate();
  const auto stream = yen_stream(g, s, d, cfg.max_candidates);
  if (stream.empty())
    throw Error(ErrorCode::kNoPath, "no path from " + std::to_string(s) + " to " + std::to_string(d));
  return diversify(stream, cfg);
}

void NegativeConfig::validate() const {
  if (num_negatives < 1) throw Error(ErrorCode::kInvalidArgument, "number of negatives must be >= 1");
  if (num_random < 0) throw Error(ErrorCode::kInvalidArgument, "num_random must be >= 0");
  if (!(tau_low >= 0.0 && tau_low < 1.0 && tau_high >= 0.0 && tau_high < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "diversity thresholds must lie in [0, 1)");
  if (max_candidates < 1) throw Error(ErrorCode::kInvalidArgument, "max_candidates must be >= 1");
}

NegativeSet sample_negatives(const Graph& g, std::span<const Path> corpus, std::size_t input_id,
                             const NegativeConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (input_id >= corpus.size()) throw Error(ErrorCode::kInvalidArgument, "input id out of range");
  const Path& input = corpus[input_id];

  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (i != input_id && corpus[i] != input) pool.push_back(i);
  if (pool.size() < 2)
    throw Error(ErrorCode::kInvalidArgument, "corpus needs at least 2 paths other than the input");

  auto rng = make_rng(seed, input_id);
  const int k = cfg.num_negatives;
  int random_count = 0;
  switch (cfg.strategy) {
    case SamplingStrategy::kCurriculum: random_count = std::min(cfg.num_random, k); break;
    case SamplingStrategy::kRandomOnly: random_count = k; break;
    case SamplingStrategy::kTopKOnly: random_count = 0; break;
  }
  const int diversified_count = k - random_count;

  NegativeSet set;
  set.input_id = input_id;
  std::vector<Path> chosen;
  // Partial Fisher-Yates over the pool keeps random draws without replacement.
  std::size_t drawn = 0;
  auto draw_random = [&]() -> bool {
    while (drawn < pool.size()) {
      const std::size_t j = drawn + uniform_index(rng, pool.size() - drawn);
      std::swap(pool[drawn], pool[j]);
      const Path& cand = corpus[pool[drawn++]];
      if (std::find(chosen.begin(), chosen.end(), cand) != chosen.end()) continue;
      chosen.push_back(cand);
      set.negatives.push_back({cand, NegativeKind::kRandom, path_similarity(input, cand)});
      return true;
    }
    return false;
  };

  for (int i = 0; i < random_count; ++i)
    if (!draw_random()) throw Error(ErrorCode::kInvalidArgument, "not enough distinct corpus paths for negatives");

  if (diversified_count > 0) {
    const auto stream = yen_stream(g, input.source(), input.destination(), cfg.max_candidates);
    for (int j = 0; j < diversified_count; ++j) {
      const double tau = diversified_count == 1
                             ? cfg.tau_low
                             : cfg.tau_low + (cfg.tau_high - cfg.tau_low) * j / (diversified_count - 1);
      DiversityConfig dc{.k = k + 2, .threshold = tau, .max_candidates = cfg.max_candidates};
      const auto result = diversify(stream, dc);
      const auto it = std::find_if(result.paths.begin(), result.paths.end(), [&](const Path& p) {
        return p != input && std::find(chosen.begin(), chosen.end(), p) == chosen.end();
      });
      if (it != result.paths.end()) {
        chosen.push_back(*it);
        set.negatives.push_back({*it, NegativeKind::kDiversified, path_similarity(input, *it)});
      } else {
        set.backfilled = true;
        if (!draw_random())
          throw Error(ErrorCode::kInvalidArgument, "not enough distinct corpus paths to backfill negatives");
      }
    }
  }

  std::stable_sort(set.negatives.begin(), set.negatives.end(),
                   [](const Negative& a, const Negative& b) { return a.overlap < b.overlap; });
  return set;
}

std::vector<NegativeSet> sample_all_negatives(const Graph& g, std::span<const Path> corpus,
                                              const NegativeConfig& cfg, std::uint64_t seed) {
  std::vector<NegativeSet> sets(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { sets[i] = sample_negatives(g, corpus, i, cfg, seed); });
  return sets;
}

std::span<const Negative> curriculum_schedule(int stage, const NegativeSet& ns, CurriculumMode mode) {
  if (stage < 1) throw Error(ErrorCode::kInvalidArgument, "stage must be >= 1");
  std::span<const Negative> all(ns.negatives);
  if (mode == CurriculumMode::kAll) return all;
  return all.first(std::min<std::size_t>(static_cast<std::size_t>(stage), all.size()));
}

int curriculum_stage(int epoch, int total_epochs, int num_negatives) {
  const int per_stage = std::max(1, total_epochs / std::max(1, num_negatives));
  return std::min(num_negatives, 1 + epoch / per_stage);
}

namespace {

NodePartition partition_impl(const Path& input, const std::vector<NodeId>& negative_nodes_raw) {
  std::vector<NodeId> in_nodes(input.nodes());
  std::sort(in_nodes.begin(), in_nodes.end());
  std::vector<NodeId> neg_nodes(negative_nodes_raw);
  std::sort(neg_nodes.begin(), neg_nodes.end());
  neg_nodes.erase(std::unique(neg_nodes.begin(), neg_nodes.end()), neg_nodes.end());
  NodePartition part;
  std::set_difference(in_nodes.begin(), in_nodes.end(), neg_nodes.begin(), neg_nodes.end(),
                      std::back_inserter(part.positive));
  std::set_difference(neg_nodes.begin(), neg_nodes.end(), in_nodes.begin(), in_nodes.end(),
                      std::back_inserter(part.negative));
  if (part.positive.empty() && part.negative.empty())
    throw Error(ErrorCode::kEmptyPartition, "input path and negatives cover the same nodes");
  return part;
}

}  // namespace

NodePartition node_partition(const Path& input, std::span<const Negative> active) {
  if (active.empty()) throw Error(ErrorCode::kInvalidArgument, "no active negatives");
  std::vector<NodeId> nodes;
  for (const auto& n : active) nodes.insert(nodes.end(), n.path.nodes().begin(), n.path.nodes().end());
  return partition_impl(input, nodes);
}

NodePartition node_partition(const Path& input, std::span<const Path> active) {
  if (active.empty()) throw Error(ErrorCode::kInvalidArgument, "no active negatives");
  std::vector<NodeId> nodes;
  for (const auto& p : active) nodes.insert(nodes.end(), p.nodes().begin(), p.nodes().end());
  return partition_impl(input, nodes);
}

void save_negatives(const Graph& g, std::span<const NegativeSet> sets, std::ostream& out) {
  for (const auto& s : sets) {
    out << s.input_id << '\t' << (s.backfilled ? 1 : 0);
    for (const auto& n : s.negatives) {
      out << '\t' << (n.kind == NegativeKind::kRandom ? 'r' : 'd') << ':';
      for (std::size_t k = 0; k < n.path.size(); ++k) {
        if (k) out << ',';
        out << g.original_id(n.path[k]);
      }
      out << '@' << detail::format_double(n.overlap);
    }
    out << '\n';
  }
}

void save_negatives_file(const Graph& g, std::span<const NegativeSet> sets, const std::string& path) {
  auto out = detail::open_out(path);
  save_negatives(g, sets, out);
}

std::vector<NegativeSet> load_negatives(const Graph& g, std::istream& in) {
  std::vector<NegativeSet> sets;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_comment(line);
    if (body.empty()) continue;
    const auto fields = detail::split(body, '\t');
    if (fields.size() < 3) detail::parse_error(line_no, "expected input id, flag and negatives");
    const auto id = detail::parse_int(fields[0]);
    const auto flag = detail::parse_int(fields[1]);
    if (!id || *id < 0 || !flag || (*flag != 0 && *flag != 1)) detail::parse_error(line_no, "malformed header fields");
    NegativeSet set;
    set.input_id = static_cast<std::size_t>(*id);
    set.backfilled = *flag == 1;
    for (std::size_t f = 2; f < fields.size(); ++f) {
      const auto rec = fields[f];
      const auto at = rec.rfind('@');
      if (rec.size() < 3 || rec[1] != ':' || (rec[0] != 'r' && rec[0] != 'd') || at == std::string_view::npos)
        detail::parse_error(line_no, "malformed negative record");
      const auto overlap = detail::parse_double(rec.substr(at + 1));
      if (!overlap) detail::parse_error(line_no, "malformed overlap");
      std::vector<NodeId> ids;
      for (const auto tok : detail::split(rec.substr(2, at - 2), ',')) {
        const auto v = detail::parse_int(tok);
        const auto c = v ? g.compact_id(*v) : std::nullopt;
        if (!c) detail::parse_error(line_no, "unknown node id");
        ids.push_back(*c);
      }
      try {
        set.negatives.push_back({validate_path(g, ids),
                                 rec[0] == 'r' ? NegativeKind::kRandom : NegativeKind::kDiversified, *overlap});
      } catch (const Error& e) {
        detail::parse_error(line_no, e.what());
      }
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<NegativeSet> load_negatives_file(const Graph& g, const std::string& path) {
  auto in = detail::open_in(path);
  return load_negatives(g, in);
}

}  // namespace pim
