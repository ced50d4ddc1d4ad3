#include "pim/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "pim/error.hpp"
#include "pim/rng.hpp"
#include "pim/sampling.hpp"

namespace pim {

void SynthConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw Error(ErrorCode::kInvalidArgument, msg);
  };
  if (topology == SynthTopology::kGrid) {
    require(grid_width >= 1 && grid_height >= 1, "grid dimensions must be >= 1");
    require(grid_width * grid_height >= 2, "grid needs at least 2 nodes");
  } else {
    require(geometric_nodes >= 2, "geometric_nodes must be >= 2");
    require(geometric_radius > 0.0, "geometric_radius must be > 0");
  }
  require(base_length > 0.0 && std::isfinite(base_length), "base_length must be > 0");
  require(length_noise >= 0.0 && length_noise < 1.0, "length_noise must be in [0, 1)");
  require(base_speed > 0.0, "base_speed must be > 0");
  require(arterial_factor > 0.0, "arterial_factor must be > 0");
  require(speed_noise >= 0.0 && speed_noise < 1.0, "speed_noise must be in [0, 1)");
  require(num_paths >= 1, "num_paths must be >= 1");
  require(min_hops >= 1, "min_hops must be >= 1");
  require(detour_factor >= 1.0, "detour_factor must be >= 1");
  require(max_variants >= 1, "max_variants must be >= 1");
  require(max_retries >= 1, "max_retries must be >= 1");
  require(label_noise >= 0.0, "label_noise must be >= 0");
  require(temperature > 0.0, "temperature must be > 0");
}

SynthTopology parse_topology(const std::string& s) {
  if (s == "grid") return SynthTopology::kGrid;
  if (s == "geometric" || s == "random-geometric") return SynthTopology::kRandomGeometric;
  throw Error(ErrorCode::kInvalidArgument, "unknown topology '" + s + "'");
}

const char* to_string(SynthTopology t) { return t == SynthTopology::kGrid ? "grid" : "geometric"; }

namespace {

std::uint64_t pair_key(NodeId u, NodeId v) {
  const auto a = static_cast<std::uint64_t>(std::min(u, v));
  const auto b = static_cast<std::uint64_t>(std::max(u, v));
  return (a << 32) | b;
}

// Symmetric U(-1, 1) draw for the road u-v on a named stream.
double road_draw(std::uint64_t seed, std::uint64_t stream, NodeId u, NodeId v) {
  auto rng = make_rng(derive_seed(seed, stream), pair_key(u, v));
  return std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
}

constexpr std::uint64_t kLengthStream = 0x1e;
constexpr std::uint64_t kSpeedStream = 0x5d;

}  // namespace

Graph gen_graph(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<Edge> edges;
  auto add_road = [&](NodeId u, NodeId v, double base) {
    const double len = base * (1.0 + cfg.length_noise * road_draw(cfg.seed, kLengthStream, u, v));
    edges.push_back({u, v, len});
    edges.push_back({v, u, len});
  };

  if (cfg.topology == SynthTopology::kGrid) {
    const int w = cfg.grid_width, h = cfg.grid_height;
    auto id = [w](int x, int y) { return static_cast<NodeId>(y * w + x); };
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) add_road(id(x, y), id(x + 1, y), cfg.base_length);
        if (y + 1 < h) add_road(id(x, y), id(x, y + 1), cfg.base_length);
      }
    return Graph(static_cast<std::size_t>(w * h), std::move(edges));
  }

  const int n = cfg.geometric_nodes;
  auto rng = make_rng(cfg.seed, 0x9e0);
  std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(n));
  for (auto& p : pts) {
    p.first = uniform01(rng);
    p.second = uniform01(rng);
  }
  // Distances are scaled so a road of length radius is base_length long.
  const double scale = cfg.base_length / cfg.geometric_radius;
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v) {
      const double d = std::hypot(pts[u].first - pts[v].first, pts[u].second - pts[v].second);
      if (d <= cfg.geometric_radius && d > 0.0) add_road(u, v, d * scale);
    }
  return Graph(static_cast<std::size_t>(n), std::move(edges));
}

double edge_speed(const SynthConfig& cfg, NodeId u, NodeId v) {
  double speed = cfg.base_speed * (1.0 + cfg.speed_noise * road_draw(cfg.seed, kSpeedStream, u, v));
  if (cfg.topology == SynthTopology::kGrid) {
    const int w = cfg.grid_width;
    const int ux = u % w, uy = u / w, vx = v % w, vy = v / w;
    const bool arterial = (uy == vy && uy % 3 == 0) || (ux == vx && ux % 3 == 0);
    if (arterial) speed *= cfg.arterial_factor;
  }
  return speed;
}

SynthCorpus gen_paths(const Graph& g, const SynthConfig& cfg) {
  cfg.validate();
  const auto n = g.num_nodes();
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "graph needs at least 2 nodes");
  auto rng = make_rng(cfg.seed, 0xc0de);
  SynthCorpus out;
  std::set<std::pair<NodeId, NodeId>> used;
  std::int64_t group = 0;
  int retries = 0;
  while (static_cast<int>(out.paths.size()) < cfg.num_paths) {
    if (retries > cfg.max_retries)
      throw Error(ErrorCode::kNoPath, "could not sample enough OD pairs after " + std::to_string(cfg.max_retries) +
                                          " retries");
    const auto s = static_cast<NodeId>(uniform_index(rng, n));
    const auto d = static_cast<NodeId>(uniform_index(rng, n));
    if (s == d || used.count({s, d})) {
      ++retries;
      continue;
    }
    YenEnumerator yen(g, s, d);
    auto shortest = yen.next();
    if (!shortest || static_cast<int>(shortest->size()) - 1 < cfg.min_hops) {
      ++retries;
      continue;
    }
    used.insert({s, d});
    const double bound = cfg.detour_factor * path_length(g, *shortest);
    out.paths.push_back(*shortest);
    out.groups.push_back(group);
    int variants = 1;
    while (variants < cfg.max_variants && static_cast<int>(out.paths.size()) < cfg.num_paths) {
      auto p = yen.next();
      if (!p || path_length(g, *p) > bound * (1.0 + 1e-12)) break;
      out.paths.push_back(std::move(*p));
      out.groups.push_back(group);
      ++variants;
    }
    ++group;
  }
  return out;
}

SynthLabels gen_labels(const Graph& g, const SynthCorpus& corpus, const SynthConfig& cfg) {
  cfg.validate();
  if (corpus.groups.size() != corpus.paths.size())
    throw Error(ErrorCode::kShapeMismatch, "group ids and paths differ in length");
  SynthLabels out;
  std::vector<double> times(corpus.paths.size());
  for (std::size_t i = 0; i < corpus.paths.size(); ++i) {
    const auto& p = corpus.paths[i];
    double t = 0.0;
    for (std::size_t k = 0; k + 1 < p.size(); ++k) t += *g.edge_length(p[k], p[k + 1]) / edge_speed(cfg, p[k], p[k + 1]);
    double factor = 1.0;
    if (cfg.label_noise > 0.0) {
      auto rng = make_rng(derive_seed(cfg.seed, 0x1abe1), i);
      factor += std::normal_distribution<double>(0.0, cfg.label_noise)(rng);
    }
    // A travel time cannot be negative; extreme draws are clipped.
    times[i] = t * std::max(factor, 0.05);
    out.travel_times.push_back({i, times[i]});
  }

  std::map<std::int64_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < times.size(); ++i) members[corpus.groups[i]].push_back(i);
  std::vector<double> scores(times.size());
  for (const auto& [gid, idx] : members) {
    // Softmax shifted by the fastest member.
    double best = std::numeric_limits<double>::infinity();
    for (const auto k : idx) best = std::min(best, times[k]);
    double z = 0.0;
    for (const auto k : idx) z += std::exp(-(times[k] - best) / cfg.temperature);
    for (const auto k : idx) scores[k] = std::exp(-(times[k] - best) / cfg.temperature) / z;
  }
  for (std::size_t i = 0; i < times.size(); ++i) out.ranks.push_back({i, corpus.groups[i], scores[i]});
  return out;
}

}  // namespace pim
