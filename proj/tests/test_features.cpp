#include <gtest/gtest.h>

#include <map>

#include "common.hpp"
#include "pim/error.hpp"
#include "pim/features.hpp"

using namespace pim;
using pim::test::make_graph;

namespace {

double cosine(const RowVector& a, const RowVector& b) { return a.dot(b) / (a.norm() * b.norm()); }

}  // namespace

TEST(Walks, ForcedChain) {
  const auto g = make_graph(3, {{0, 1, 1}, {1, 2, 1}});
  WalkConfig c;
  c.walks_per_node = 1;
  c.walk_length = 3;
  const auto walks = generate_walks(g, c);
  // Node 2 has no out-edges and gets no walks; node 1's walk stops at 2.
  ASSERT_EQ(walks.size(), 2u);
  EXPECT_EQ(walks[0], (Walk{0, 1, 2}));
  EXPECT_EQ(walks[1], (Walk{1, 2}));
}

TEST(Walks, IsolatedNodeGetsNoWalks) {
  const auto g = make_graph(4, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}});
  WalkConfig c;
  c.walks_per_node = 3;
  for (const auto& w : generate_walks(g, c)) {
    EXPECT_NE(w.front(), 3);
    for (std::size_t k = 0; k + 1 < w.size(); ++k) EXPECT_TRUE(g.has_edge(w[k], w[k + 1]));
  }
  EXPECT_EQ(generate_walks(g, c).size(), 9u);
}

TEST(Walks, UnbiasedTransitionsAreUniform) {
  // Hub 0 with four spokes; 1 -> 2 adds a distance-1 neighbor, which must not
  // matter when p = q = 1.
  const auto g = make_graph(5, {{0, 1, 1}, {0, 2, 1}, {0, 3, 1}, {0, 4, 1}, {1, 0, 1}, {2, 0, 1},
                                {3, 0, 1}, {4, 0, 1}, {1, 2, 1}});
  WalkConfig c;
  c.walks_per_node = 400;
  c.walk_length = 30;
  c.seed = 5;
  std::map<NodeId, double> counts;
  double total = 0.0;
  for (const auto& w : generate_walks(g, c))
    for (std::size_t k = 1; k + 1 < w.size(); ++k)
      if (w[k] == 0) {
        counts[w[k + 1]] += 1.0;
        total += 1.0;
      }
  ASSERT_GT(total, 1e4);
  double chi2 = 0.0;
  for (NodeId v = 1; v <= 4; ++v) {
    const double expected = total / 4.0;
    chi2 += (counts[v] - expected) * (counts[v] - expected) / expected;
  }
  // 3 degrees of freedom; p = 0.01 at 11.345.
  EXPECT_LT(chi2, 11.345);
}

TEST(Walks, ReturnBiasShiftsTransitions) {
  const auto g = make_graph(3, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 1, 1}});
  WalkConfig c;
  c.walks_per_node = 200;
  c.walk_length = 10;
  c.return_bias = 100.0;  // discourage going back
  c.inout_bias = 0.01;    // encourage moving outward
  std::size_t back = 0, out = 0;
  for (const auto& w : generate_walks(g, c))
    for (std::size_t k = 1; k + 1 < w.size(); ++k)
      if (w[k] == 1) (w[k + 1] == w[k - 1] ? back : out) += 1;
  EXPECT_LT(back * 20, out);
}

TEST(Walks, Deterministic) {
  const auto g = test::random_graph(4, 10, 0.4);
  WalkConfig c;
  c.seed = 9;
  EXPECT_EQ(generate_walks(g, c), generate_walks(g, c));
  c.seed = 10;
  const auto other = generate_walks(g, c);
  c.seed = 9;
  EXPECT_NE(generate_walks(g, c), other);
}

TEST(Walks, ConfigValidation) {
  WalkConfig c;
  c.walk_length = 1;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.return_bias = 0.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Sgns, TwoCliquesSeparate) {
  std::vector<std::tuple<int, int, double>> e;
  for (int base : {0, 4})
    for (int u = 0; u < 4; ++u)
      for (int v = 0; v < 4; ++v)
        if (u != v) e.emplace_back(base + u, base + v, 1.0);
  const auto g = make_graph(8, e);
  WalkConfig w;
  w.seed = 1;
  SgnsConfig s;
  s.dim = 8;
  s.seed = 1;
  s.epochs = 3;
  const auto f = train_sgns(generate_walks(g, w), s, 8);
  double intra = 0.0, inter = 0.0;
  int ni = 0, nx = 0;
  for (NodeId a = 0; a < 8; ++a)
    for (NodeId b = a + 1; b < 8; ++b) {
      const double c = cosine(f.row(a), f.row(b));
      if ((a < 4) == (b < 4)) intra += c, ++ni;
      else inter += c, ++nx;
    }
  EXPECT_GT(intra / ni, inter / nx);
}

TEST(Sgns, BridgedCommunities) {
  std::vector<std::tuple<int, int, double>> e;
  for (int base : {0, 5})
    for (int u = 0; u < 5; ++u)
      for (int v = 0; v < 5; ++v)
        if (u != v) e.emplace_back(base + u, base + v, 1.0);
  e.emplace_back(4, 5, 1.0);
  e.emplace_back(5, 4, 1.0);
  const auto g = make_graph(10, e);
  WalkConfig w;
  w.seed = 2;
  SgnsConfig s;
  s.dim = 8;
  s.seed = 2;
  s.epochs = 3;
  const auto f = train_sgns(generate_walks(g, w), s, 10);
  EXPECT_TRUE(f.values().allFinite());
  double intra = 0.0, inter = 0.0;
  int ni = 0, nx = 0;
  for (NodeId a = 0; a < 10; ++a)
    for (NodeId b = a + 1; b < 10; ++b) {
      const double c = cosine(f.row(a), f.row(b));
      if ((a < 5) == (b < 5)) intra += c, ++ni;
      else inter += c, ++nx;
    }
  EXPECT_GT(intra / ni, inter / nx);
}

TEST(Sgns, RepeatedPairDotIncreases) {
  const WalkSet walks(20, Walk{0, 1});
  SgnsConfig s;
  s.dim = 4;
  s.window = 1;
  s.negatives = 1;
  s.seed = 3;
  std::vector<double> dots;
  train_sgns(walks, s, 3, [&](const Matrix& t) {
    if (dots.size() < 11) dots.push_back(t.row(0).dot(t.row(1)));
  });
  ASSERT_EQ(dots.size(), 11u);
  for (std::size_t i = 1; i < dots.size(); ++i) EXPECT_GT(dots[i], dots[i - 1]) << "update " << i;
}

TEST(Sgns, DegenerateSingleNode) {
  SgnsConfig s;
  s.dim = 1;
  const auto f = train_sgns(WalkSet{Walk{0}}, s, 1);
  EXPECT_EQ(f.num_nodes(), 1u);
  EXPECT_EQ(f.dim(), 1u);
  EXPECT_TRUE(f.values().allFinite());
}

TEST(Sgns, DeterministicAndValidated) {
  const auto g = test::random_graph(8, 12, 0.3);
  WalkConfig w;
  SgnsConfig s;
  s.seed = 4;
  const auto walks = generate_walks(g, w);
  EXPECT_EQ(train_sgns(walks, s, 12).values(), train_sgns(walks, s, 12).values());
  EXPECT_THROW(train_sgns(WalkSet{}, s, 12), Error);
  s.window = 0;
  EXPECT_THROW(train_sgns(walks, s, 12), Error);
}
