#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "common.hpp"
#include "pim/error.hpp"
#include "pim/synth.hpp"

using namespace pim;

namespace {

std::vector<std::tuple<NodeId, NodeId, double>> edge_multiset(const Graph& g) {
  std::vector<std::tuple<NodeId, NodeId, double>> out;
  for (const auto& e : g.edges()) out.emplace_back(e.from, e.to, e.length);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(SynthGraph, GridCounts) {
  SynthConfig c;
  c.grid_width = 2;
  c.grid_height = 2;
  const auto g = gen_graph(c);
  EXPECT_EQ(g.num_nodes(), 4u);
  EXPECT_EQ(g.num_edges(), 8u);
  for (const auto& e : g.edges()) EXPECT_EQ(g.edge_length(e.to, e.from), e.length);
}

TEST(SynthGraph, NoNoiseMeansBaseLength) {
  SynthConfig c;
  c.length_noise = 0.0;
  const auto g = gen_graph(c);
  for (const auto& e : g.edges()) EXPECT_EQ(e.length, c.base_length);
}

TEST(SynthGraph, DeterministicPerSeed) {
  SynthConfig c;
  c.seed = 3;
  EXPECT_EQ(edge_multiset(gen_graph(c)), edge_multiset(gen_graph(c)));
  auto d = c;
  d.seed = 4;
  EXPECT_NE(edge_multiset(gen_graph(c)), edge_multiset(gen_graph(d)));
  const auto g = gen_graph(c);
  for (const auto& e : g.edges()) {
    EXPECT_GE(e.length, c.base_length * (1.0 - c.length_noise));
    EXPECT_LE(e.length, c.base_length * (1.0 + c.length_noise));
  }
}

TEST(SynthGraph, GeometricTopology) {
  SynthConfig c;
  c.topology = SynthTopology::kRandomGeometric;
  c.geometric_nodes = 40;
  c.geometric_radius = 0.3;
  c.seed = 5;
  const auto g = gen_graph(c);
  EXPECT_EQ(g.num_nodes(), 40u);
  for (const auto& e : g.edges()) EXPECT_TRUE(g.has_edge(e.to, e.from));
  EXPECT_EQ(parse_topology("geometric"), SynthTopology::kRandomGeometric);
  EXPECT_THROW(parse_topology("torus"), Error);
}

TEST(SynthGraph, SpeedsAreSymmetricWithArterials) {
  SynthConfig c;
  c.speed_noise = 0.0;
  EXPECT_EQ(edge_speed(c, 1, 2), edge_speed(c, 2, 1));
  // Row 0 is an arterial, row 1 is not.
  EXPECT_DOUBLE_EQ(edge_speed(c, 1, 2), c.base_speed * c.arterial_factor);
  EXPECT_DOUBLE_EQ(edge_speed(c, 9, 10), c.base_speed);
}

TEST(SynthPaths, ContractOnSmallGrid) {
  SynthConfig c;
  c.grid_width = 5;
  c.grid_height = 5;
  c.num_paths = 10;
  c.seed = 1;
  const auto g = gen_graph(c);
  const auto corpus = gen_paths(g, c);
  ASSERT_EQ(corpus.paths.size(), 10u);
  ASSERT_EQ(corpus.groups.size(), 10u);
  for (const auto& p : corpus.paths) {
    EXPECT_EQ(validate_path(g, p.nodes()), p);
    EXPECT_GE(p.size(), static_cast<std::size_t>(c.min_hops + 1));
  }
}

TEST(SynthPaths, UnitDetourGivesShortestOnly) {
  SynthConfig c;
  c.detour_factor = 1.0;
  c.num_paths = 40;
  const auto g = gen_graph(c);
  for (const auto& p : gen_paths(g, c).paths)
    EXPECT_EQ(path_length(g, p), path_length(g, yen_k_shortest(g, p.source(), p.destination(), 1).front()));
}

TEST(SynthPaths, DetourGroupsExist) {
  SynthConfig c;
  c.seed = 7;
  const auto g = gen_graph(c);
  const auto corpus = gen_paths(g, c);
  std::map<std::int64_t, std::vector<const Path*>> groups;
  for (std::size_t i = 0; i < corpus.paths.size(); ++i) groups[corpus.groups[i]].push_back(&corpus.paths[i]);
  std::size_t multi = 0;
  for (const auto& [id, members] : groups) {
    if (members.size() < 2) continue;
    ++multi;
    const double best = path_length(g, *members.front());
    for (const auto* p : members) {
      EXPECT_EQ(p->source(), members.front()->source());
      EXPECT_EQ(p->destination(), members.front()->destination());
      EXPECT_LE(path_length(g, *p), c.detour_factor * best * (1.0 + 1e-12));
    }
  }
  EXPECT_GT(multi, 0u);
}

TEST(SynthLabels, ZeroNoiseUniformSpeed) {
  SynthConfig c;
  c.label_noise = 0.0;
  c.speed_noise = 0.0;
  c.arterial_factor = 1.0;
  c.num_paths = 30;
  const auto g = gen_graph(c);
  const auto corpus = gen_paths(g, c);
  const auto labels = gen_labels(g, corpus, c);
  ASSERT_EQ(labels.travel_times.size(), corpus.paths.size());
  for (std::size_t i = 0; i < corpus.paths.size(); ++i)
    EXPECT_NEAR(labels.travel_times[i].seconds, path_length(g, corpus.paths[i]) / c.base_speed, 1e-9);
}

TEST(SynthLabels, RankScoresPerGroup) {
  SynthConfig c;
  c.seed = 11;
  const auto g = gen_graph(c);
  const auto corpus = gen_paths(g, c);
  const auto labels = gen_labels(g, corpus, c);
  std::map<std::int64_t, double> sums;
  std::map<std::int64_t, std::vector<std::pair<double, double>>> members;  // (time, score)
  for (std::size_t i = 0; i < labels.ranks.size(); ++i) {
    const auto& r = labels.ranks[i];
    EXPECT_GE(r.score, 0.0);
    EXPECT_LE(r.score, 1.0);
    sums[r.group_id] += r.score;
    members[r.group_id].emplace_back(labels.travel_times[r.path_id].seconds, r.score);
  }
  for (const auto& [id, s] : sums) EXPECT_NEAR(s, 1.0, 1e-12);
  for (auto& [id, m] : members) {
    if (m.size() == 1) {
      EXPECT_EQ(m.front().second, 1.0);
    }
    std::sort(m.begin(), m.end());
    for (std::size_t k = 1; k < m.size(); ++k) {
      if (m[k].first > m[k - 1].first) {
        EXPECT_LT(m[k].second, m[k - 1].second);
      }
    }
  }
}

TEST(SynthLabels, EqualTimesSplitEvenly) {
  // Two routes of the same length on a uniform square.
  SynthConfig c;
  c.grid_width = 2;
  c.grid_height = 2;
  c.length_noise = 0.0;
  c.speed_noise = 0.0;
  c.arterial_factor = 1.0;
  c.label_noise = 0.0;
  const auto g = gen_graph(c);
  SynthCorpus corpus;
  corpus.paths = {test::make_path(g, {0, 1, 3}), test::make_path(g, {0, 2, 3})};
  corpus.groups = {0, 0};
  const auto labels = gen_labels(g, corpus, c);
  EXPECT_DOUBLE_EQ(labels.ranks[0].score, 0.5);
  EXPECT_DOUBLE_EQ(labels.ranks[1].score, 0.5);
}

TEST(Synth, WholePipelineDeterministic) {
  SynthConfig c;
  c.seed = 21;
  c.num_paths = 50;
  const auto g1 = gen_graph(c);
  const auto g2 = gen_graph(c);
  const auto p1 = gen_paths(g1, c);
  const auto p2 = gen_paths(g2, c);
  EXPECT_EQ(p1.paths, p2.paths);
  EXPECT_EQ(p1.groups, p2.groups);
  const auto l1 = gen_labels(g1, p1, c);
  const auto l2 = gen_labels(g2, p2, c);
  for (std::size_t i = 0; i < l1.travel_times.size(); ++i)
    EXPECT_EQ(l1.travel_times[i].seconds, l2.travel_times[i].seconds);
}

TEST(Synth, ConfigValidation) {
  SynthConfig c;
  c.num_paths = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.label_noise = -0.1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.detour_factor = 0.5;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Synth, UnreachableRetriesRunOut) {
  SynthConfig c;
  c.grid_width = 2;
  c.grid_height = 1;
  c.min_hops = 3;
  c.max_retries = 50;
  const auto g = gen_graph(c);
  EXPECT_THROW(gen_paths(g, c), Error);
}
