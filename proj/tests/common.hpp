#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "pim/graph.hpp"
#include "pim/rng.hpp"
#include "pim/sampling.hpp"
#include "pim/training.hpp"

namespace pim::test {

inline Graph make_graph(std::size_t n, const std::vector<std::tuple<int, int, double>>& edges) {
  std::vector<Edge> es;
  for (const auto& [u, v, w] : edges) es.push_back({u, v, w});
  return Graph(n, std::move(es));
}

inline Path make_path(const Graph& g, std::vector<NodeId> ids) { return validate_path(g, ids); }

// Every loopless s->d path with its length (summed from the source), ordered
// by (length, node sequence). Exponential; only for tiny graphs.
inline std::vector<std::pair<double, std::vector<NodeId>>> all_simple_paths(const Graph& g, NodeId s, NodeId d) {
  std::vector<std::pair<double, std::vector<NodeId>>> out;
  std::vector<NodeId> stack{s};
  std::vector<char> on(g.num_nodes(), 0);
  on[s] = 1;
  std::function<void(double)> dfs = [&](double len) {
    const NodeId u = stack.back();
    if (u == d) {
      out.emplace_back(len, stack);
      return;
    }
    for (const auto& e : g.out_edges(u)) {
      if (on[e.to]) continue;
      on[e.to] = 1;
      stack.push_back(e.to);
      dfs(len + e.length);
      stack.pop_back();
      on[e.to] = 0;
    }
  };
  dfs(0.0);
  std::sort(out.begin(), out.end());
  return out;
}

// Random digraph with integer lengths 1..5 (ties are common on purpose).
inline Graph random_graph(std::uint64_t seed, std::size_t n, double density) {
  auto rng = make_rng(seed, 0x7e57);
  std::vector<Edge> es;
  std::uniform_int_distribution<int> len(1, 5);
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = 0; v < n; ++v)
      if (u != v && uniform01(rng) < density)
        es.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v), static_cast<double>(len(rng))});
  return Graph(n, std::move(es));
}

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = u(rng);
  return m;
}

// 6-node toy instance: a ring with a chord, an input path, K = 2 negatives
// and a model whose parameters (discriminators included) are all random.
struct ToyInstance {
  Graph graph;
  FeatureTable features;
  Path input;
  std::vector<Negative> negatives;
  Model model;
};

inline ToyInstance toy_instance(std::uint64_t seed, int dim = 4, int hidden = 3, int out = 3) {
  auto rng = make_rng(seed, 0x70f);
  std::vector<std::tuple<int, int, double>> e;
  for (int u = 0; u < 6; ++u) {
    e.emplace_back(u, (u + 1) % 6, 1.0);
    e.emplace_back((u + 1) % 6, u, 1.0);
  }
  e.emplace_back(1, 4, 1.0);
  e.emplace_back(4, 1, 1.0);
  Graph g = make_graph(6, e);
  FeatureTable f(random_matrix(rng, 6, dim));
  const Path input = make_path(g, {0, 1, 2, 3});
  std::vector<Negative> negs;
  for (const auto& ids : {std::vector<NodeId>{0, 5, 4, 3}, std::vector<NodeId>{0, 1, 4, 3}}) {
    const Path p = make_path(g, ids);
    negs.push_back({p, NegativeKind::kDiversified, path_similarity(input, p)});
  }
  Model m = init_model(dim, hidden, out, seed);
  for (auto& [name, p] : m.named()) *p = random_matrix(rng, p->rows(), p->cols(), 0.8);
  return {std::move(g), std::move(f), input, std::move(negs), std::move(m)};
}

// Central-difference check of sample_objective's analytic gradient; returns
// max |analytic - numeric| / max(1, |analytic|).
inline double objective_grad_error(const ToyInstance& t, MiMode mode, double eps = 1e-5) {
  std::vector<Matrix> analytic;
  sample_objective(t.model, t.graph, t.features, t.input, t.negatives, mode, &analytic);
  Model work = t.model;
  auto params = work.named();
  auto value = [&] {
    const auto o = sample_objective(work, t.graph, t.features, t.input, t.negatives, mode, nullptr);
    return o.global + o.local;
  };
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Matrix& m = *params[p].second;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double orig = m(i);
      m(i) = orig + eps;
      const double up = value();
      m(i) = orig - eps;
      const double down = value();
      m(i) = orig;
      const double a = analytic[p](i);
      worst = std::max(worst, std::abs(a - (up - down) / (2.0 * eps)) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("pim_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace pim::test
