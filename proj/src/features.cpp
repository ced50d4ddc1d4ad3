#include "pim/features.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pim/error.hpp"
#include "pim/parallel.hpp"
#include "pim/rng.hpp"

namespace pim {

void WalkConfig::validate() const {
  if (walks_per_node < 1) throw Error(ErrorCode::kInvalidArgument, "walks_per_node must be >= 1");
  if (walk_length < 2) throw Error(ErrorCode::kInvalidArgument, "walk_length must be >= 2");
  if (!(return_bias > 0.0) || !(inout_bias > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "walk biases p and q must be > 0");
}

void SgnsConfig::validate() const {
  if (dim < 1) throw Error(ErrorCode::kInvalidArgument, "dim must be >= 1");
  if (window < 1) throw Error(ErrorCode::kInvalidArgument, "window must be >= 1");
  if (negatives < 1) throw Error(ErrorCode::kInvalidArgument, "negatives must be >= 1");
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
}

namespace {

Walk one_walk(const Graph& g, const WalkConfig& cfg, NodeId start, Rng& rng) {
  Walk walk{start};
  walk.reserve(static_cast<std::size_t>(cfg.walk_length));
  std::vector<double> weights;
  while (walk.size() < static_cast<std::size_t>(cfg.walk_length)) {
    const NodeId cur = walk.back();
    const auto out = g.out_edges(cur);
    if (out.empty()) break;
    if (walk.size() == 1) {
      walk.push_back(out[uniform_index(rng, out.size())].to);
      continue;
    }
    const NodeId prev = walk[walk.size() - 2];
    weights.clear();
    for (const auto& e : out) {
      if (e.to == prev)
        weights.push_back(1.0 / cfg.return_bias);
      else if (g.has_edge(prev, e.to))
        weights.push_back(1.0);
      else
        weights.push_back(1.0 / cfg.inout_bias);
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    walk.push_back(out[pick(rng)].to);
  }
  return walk;
}

}  // namespace

WalkSet generate_walks(const Graph& g, const WalkConfig& cfg) {
  cfg.validate();
  if (g.num_edges() == 0) throw Error(ErrorCode::kInvalidArgument, "graph has no edges");
  std::vector<NodeId> starts;
  for (std::size_t u = 0; u < g.num_nodes(); ++u)
    if (!g.out_edges(static_cast<NodeId>(u)).empty()) starts.push_back(static_cast<NodeId>(u));

  const std::size_t rounds = static_cast<std::size_t>(cfg.walks_per_node);
  WalkSet walks(rounds * starts.size());
  parallel_for(walks.size(), [&](std::size_t i) {
    const std::size_t round = i / starts.size();
    const NodeId start = starts[i % starts.size()];
    auto rng = make_rng(cfg.seed, static_cast<std::uint64_t>(start) * rounds + round);
    walks[i] = one_walk(g, cfg, start, rng);
  });
  return walks;
}

FeatureTable train_sgns(const WalkSet& walks, const SgnsConfig& cfg, std::size_t num_nodes) {
  return train_sgns(walks, cfg, num_nodes, nullptr);
}

FeatureTable train_sgns(const WalkSet& walks, const SgnsConfig& cfg, std::size_t num_nodes,
                        const SgnsObserver& observer) {
  cfg.validate();
  if (walks.empty()) throw Error(ErrorCode::kInvalidArgument, "walk set is empty");
  if (num_nodes == 0) throw Error(ErrorCode::kInvalidArgument, "node count must be >= 1");

  // Smoothed unigram^0.75 noise distribution; +1 keeps unseen nodes drawable.
  std::vector<double> counts(num_nodes, 1.0);
  std::size_t tokens = 0;
  for (const auto& w : walks)
    for (const auto v : w) {
      if (v < 0 || static_cast<std::size_t>(v) >= num_nodes)
        throw Error(ErrorCode::kInvalidArgument, "walk node out of range");
      counts[v] += 1.0;
      ++tokens;
    }
  for (auto& c : counts) c = std::pow(c, 0.75);
  std::discrete_distribution<std::size_t> noise(counts.begin(), counts.end());

  auto rng = make_rng(cfg.seed);
  const auto n = static_cast<Eigen::Index>(num_nodes);
  const auto d = static_cast<Eigen::Index>(cfg.dim);
  Matrix table(n, d);
  const double half = 0.5 / static_cast<double>(cfg.dim);
  std::uniform_real_distribution<double> init(-half, half);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < d; ++c) table(r, c) = init(rng);

  const double total_steps = static_cast<double>(tokens) * cfg.epochs;
  double step = 0.0;
  RowVector center_grad(d);
  auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& walk : walks) {
      for (std::size_t i = 0; i < walk.size(); ++i, step += 1.0) {
        const double lr = cfg.learning_rate * std::max(1e-4, 1.0 - step / total_steps);
        const NodeId center = walk[i];
        const std::size_t lo = i >= static_cast<std::size_t>(cfg.window) ? i - cfg.window : 0;
        const std::size_t hi = std::min(walk.size() - 1, i + static_cast<std::size_t>(cfg.window));
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const NodeId context = walk[j];
          center_grad.setZero();
          {
            const double g = lr * (1.0 - sigmoid(table.row(center).dot(table.row(context))));
            center_grad += g * table.row(context);
            table.row(context) += g * table.row(center);
          }
          for (int k = 0; k < cfg.negatives; ++k) {
            const auto neg = static_cast<NodeId>(noise(rng));
            if (neg == center || neg == context) continue;
            const double g = -lr * sigmoid(table.row(center).dot(table.row(neg)));
            center_grad += g * table.row(neg);
            table.row(neg) += g * table.row(center);
          }
          table.row(center) += center_grad;
          if (observer) observer(table);
        }
      }
    }
  }
  return FeatureTable(std::move(table));
}

}  // namespace pim
