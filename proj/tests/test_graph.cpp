#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "common.hpp"
#include "pim/error.hpp"
#include "pim/graph.hpp"

using namespace pim;
using pim::test::make_graph;
using pim::test::make_path;

namespace {

ErrorCode code_of(const std::function<void()>& fn, std::optional<std::int64_t>* detail = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (detail) *detail = e.detail();
    return e.code();
  }
  return ErrorCode::kOk;
}

Graph load(const std::string& text) {
  std::istringstream in(text);
  return load_graph(in);
}

}  // namespace

TEST(Graph, MinimalChain) {
  const auto g = load("0,1,1.0\n1,2,1.0\n");
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(0, 1));
  EXPECT_FALSE(g.has_edge(1, 0));
}

TEST(Graph, SelfLoopKeptButFlagged) {
  const auto g = load("0,0,1.0\n0,1,2.0\n");
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_self_loop(0));
  EXPECT_FALSE(g.has_self_loop(1));
  const std::vector<NodeId> ids{0, 0};
  EXPECT_EQ(code_of([&] { validate_path(g, ids); }), ErrorCode::kRepeatedNode);
}

TEST(Graph, SparseIdsAreCompacted) {
  const auto g = load("# roads\n5,9,1.5\n9,12,2.5\n12,5,3\n");
  ASSERT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.remap_table(), (std::vector<std::int64_t>{5, 9, 12}));
  EXPECT_EQ(g.compact_id(9), 1);
  EXPECT_FALSE(g.compact_id(7).has_value());

  std::ostringstream out;
  save_graph(g, out);
  const auto again = load(out.str());
  auto multiset = [](const Graph& h) {
    std::vector<std::tuple<std::int64_t, std::int64_t, double>> es;
    for (const auto& e : h.edges()) es.emplace_back(h.original_id(e.from), h.original_id(e.to), e.length);
    std::sort(es.begin(), es.end());
    return es;
  };
  EXPECT_EQ(multiset(g), multiset(again));
}

TEST(Graph, LoadErrorsCarryLineNumbers) {
  std::optional<std::int64_t> line;
  EXPECT_EQ(code_of([] { load("0,1,1\n1,2\n"); }, &line), ErrorCode::kParse);
  EXPECT_EQ(line, 2);
  EXPECT_EQ(code_of([] { load("0,1,1\n\n1,2,-3\n"); }, &line), ErrorCode::kParse);
  EXPECT_EQ(line, 3);
  EXPECT_EQ(code_of([] { load("0,1,1\n0,1,2\n"); }, &line), ErrorCode::kParse);
  EXPECT_EQ(line, 2);
  EXPECT_EQ(code_of([] { load("a,1,1\n"); }, &line), ErrorCode::kParse);
  EXPECT_EQ(line, 1);
}

TEST(Graph, ConstructorRejectsBadEdges) {
  EXPECT_EQ(code_of([] { make_graph(2, {{0, 2, 1.0}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { make_graph(2, {{0, 1, 1.0}, {0, 1, 2.0}}); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([] { make_graph(2, {{0, 1, -1.0}}); }), ErrorCode::kInvalidArgument);
}

TEST(ValidatePath, Examples) {
  const auto chain = make_graph(3, {{0, 1, 1}, {1, 2, 1}});
  EXPECT_EQ(make_path(chain, {0, 1, 2}).size(), 3u);

  std::optional<std::int64_t> detail;
  EXPECT_EQ(code_of([&] { make_path(chain, {0, 2}); }, &detail), ErrorCode::kMissingEdge);
  EXPECT_EQ(detail, 0);
  EXPECT_EQ(code_of([&] { make_path(chain, {0, 1, 0}); }, &detail), ErrorCode::kMissingEdge);
  EXPECT_EQ(detail, 1);

  const auto cycle = make_graph(3, {{0, 1, 1}, {1, 0, 1}, {1, 2, 1}, {2, 0, 1}});
  EXPECT_EQ(code_of([&] { make_path(cycle, {0, 1, 0}); }, &detail), ErrorCode::kRepeatedNode);
  EXPECT_EQ(detail, 0);
  EXPECT_EQ(code_of([&] { make_path(cycle, {1}); }), ErrorCode::kTooShort);
  EXPECT_EQ(code_of([&] { make_path(cycle, {0, 7}); }), ErrorCode::kInvalidArgument);
}

TEST(ValidatePath, RoundTrips) {
  const auto g = test::random_graph(3, 8, 0.5);
  const auto paths = test::all_simple_paths(g, 0, 7);
  ASSERT_FALSE(paths.empty());
  for (const auto& [len, ids] : paths) {
    const Path p = make_path(g, ids);
    EXPECT_EQ(validate_path(g, p.nodes()), p);
    EXPECT_DOUBLE_EQ(path_length(g, p), len);
  }
}

TEST(InitialView, RowsAreFeatureRows) {
  const auto g = make_graph(3, {{0, 1, 1}, {1, 2, 1}, {2, 1, 1}, {1, 0, 1}});
  Matrix fm(3, 2);
  fm << 1, 0, 0, 1, 1, 1;
  const FeatureTable f(fm);
  const Matrix iv = initial_view(g, f, make_path(g, {0, 1, 2}));
  EXPECT_EQ(iv, fm);
  const Matrix rev = initial_view(g, f, make_path(g, {2, 1, 0}));
  EXPECT_EQ(rev, fm.colwise().reverse().eval());
  EXPECT_EQ(initial_view(g, f, make_path(g, {1, 2})).rows(), 2);

  const FeatureTable small(Matrix::Ones(2, 2));
  EXPECT_EQ(code_of([&] { initial_view(g, small, make_path(g, {0, 1})); }), ErrorCode::kShapeMismatch);
}

TEST(Features, RoundTripAndErrors) {
  auto rng = make_rng(11);
  const FeatureTable f(test::random_matrix(rng, 5, 3));
  std::stringstream io;
  save_features(f, io);
  const auto back = load_features(io);
  EXPECT_LT((back.values() - f.values()).cwiseAbs().maxCoeff(), 1e-8);

  std::istringstream short_file("5 3\n1 2 3\n1 2 3\n1 2 3\n1 2 3\n");
  EXPECT_EQ(code_of([&] { load_features(short_file); }), ErrorCode::kParse);
  std::istringstream empty_file("0 3\n");
  EXPECT_NE(code_of([&] { load_features(empty_file); }), ErrorCode::kOk);
  EXPECT_NE(code_of([] { FeatureTable(Matrix(0, 3)); }), ErrorCode::kOk);
}

TEST(Paths, FileRoundTripUsesOriginalIds) {
  const auto g = load("10,20,1\n20,30,1\n30,10,1\n");
  std::istringstream in("10,20,30\n# skip\n30,10\n");
  const auto paths = load_paths(g, in);
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].nodes(), (std::vector<NodeId>{0, 1, 2}));
  std::ostringstream out;
  save_paths(g, paths, out);
  EXPECT_EQ(out.str(), "10,20,30\n30,10\n");

  std::istringstream bad("10,30\n");
  std::optional<std::int64_t> detail;
  EXPECT_NE(code_of([&] { load_paths(g, bad); }, &detail), ErrorCode::kOk);
}
