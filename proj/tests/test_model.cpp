#include <gtest/gtest.h>

#include <cmath>

#include "common.hpp"
#include "pim/encoder.hpp"
#include "pim/error.hpp"
#include "pim/infomax.hpp"
#include "pim/synth.hpp"
#include "pim/training.hpp"

using namespace pim;

namespace {

const double kLn2 = std::log(2.0);

struct SmallCorpus {
  Graph graph;
  FeatureTable features;
  std::vector<Path> paths;
  std::vector<NegativeSet> negatives;
};

SmallCorpus small_corpus(std::uint64_t seed) {
  SynthConfig sc;
  sc.grid_width = 4;
  sc.grid_height = 4;
  sc.num_paths = 24;
  sc.seed = seed;
  SmallCorpus c;
  c.graph = gen_graph(sc);
  c.paths = gen_paths(c.graph, sc).paths;
  auto rng = make_rng(seed, 1);
  c.features = FeatureTable(test::random_matrix(rng, static_cast<Eigen::Index>(c.graph.num_nodes()), 4));
  c.negatives = sample_all_negatives(c.graph, c.paths, NegativeConfig{}, seed);
  return c;
}

TrainConfig small_train(int epochs) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = 8;
  t.hidden_dim = 6;
  t.output_dim = 5;
  t.learning_rate = 0.01;
  t.seed = 3;
  return t;
}

}  // namespace

TEST(Encoder, InitContract) {
  const auto a = init_encoder(4, 3, 2, 9);
  const auto b = init_encoder(4, 3, 2, 9);
  const auto na = a.named();
  const auto nb = b.named();
  ASSERT_EQ(na.size(), nb.size());
  const double bound = std::sqrt(1.0 / 3.0);
  for (std::size_t i = 0; i < na.size(); ++i) {
    EXPECT_EQ(*na[i].second, *nb[i].second) << na[i].first;
    if (na[i].first.rfind("b_", 0) == 0) {
      EXPECT_TRUE(na[i].second->isZero()) << na[i].first;
    } else {
      EXPECT_LE(na[i].second->cwiseAbs().maxCoeff(), bound) << na[i].first;
    }
  }
  EXPECT_NE(init_encoder(4, 3, 2, 10).w_z, a.w_z);
  EXPECT_THROW(init_encoder(0, 3, 2, 1), Error);
}

TEST(Encoder, ShapesAndDegenerateSizes) {
  auto rng = make_rng(4);
  const auto e = init_encoder(4, 1, 3, 1);
  const RowVector out = encode(e, test::random_matrix(rng, 2, 4));
  EXPECT_EQ(out.cols(), 3);
  EXPECT_TRUE(out.allFinite());
  for (int z = 2; z < 7; ++z) EXPECT_EQ(encode(init_encoder(4, 5, 7, 2), test::random_matrix(rng, z, 4)).cols(), 7);
  EXPECT_THROW(encode(e, Matrix(0, 4)), Error);
  EXPECT_THROW(encode(e, Matrix::Ones(2, 3)), Error);
}

TEST(Encoder, ZeroViewGivesZero) {
  const auto e = init_encoder(3, 4, 2, 5);
  EXPECT_TRUE(encode(e, Matrix::Zero(3, 3)).isZero());
}

TEST(Encoder, RowOrderMatters) {
  int changed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto rng = make_rng(seed, 2);
    const auto e = init_encoder(4, 4, 4, seed);
    const Matrix v = test::random_matrix(rng, 3, 4);
    Matrix perm(3, 4);
    perm << v.row(2), v.row(0), v.row(1);
    if ((encode(e, v) - encode(e, perm)).cwiseAbs().maxCoeff() > 1e-9) ++changed;
  }
  EXPECT_GE(changed, 99);
}

TEST(Encoder, GradientOfOutputNorm) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto rng = make_rng(seed, 3);
    auto p = init_encoder(4, 3, 3, seed);
    for (auto& [name, m] : p.named()) *m = test::random_matrix(rng, m->rows(), m->cols(), 0.7);
    const Matrix view = test::random_matrix(rng, 4, 4);
    std::vector<Matrix> params;
    for (const auto& [name, m] : p.named()) params.push_back(*m);
    auto f = [&](ad::Tape& tape, std::span<const ad::Var> v) {
      const EncoderVars ev{v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7], v[8], v[9]};
      const auto out = encode(ev, tape.constant(view));
      return ad::sum(ad::mul(out, out));
    };
    EXPECT_LT(ad::grad_check(f, params), 1e-5) << "seed " << seed;
  }
}

TEST(Discriminators, ZeroInitScoresHalf) {
  auto rng = make_rng(5);
  const auto pp = init_path_path(4, 3, 1);
  const auto pn = init_path_node(4, 3);
  EXPECT_TRUE(pp.bilinear.isZero());
  EXPECT_TRUE(pn.bilinear.isZero());
  const RowVector p = test::random_matrix(rng, 1, 3);
  EXPECT_DOUBLE_EQ(score_path_view(pp, p, test::random_matrix(rng, 3, 4)), 0.5);
  EXPECT_DOUBLE_EQ(score_path_path(pp, p, test::random_matrix(rng, 1, 3)), 0.5);
  EXPECT_DOUBLE_EQ(score_path_node(pn, p, test::random_matrix(rng, 1, 4)), 0.5);

  PathNodeDisc trained{test::random_matrix(rng, 3, 4)};
  EXPECT_DOUBLE_EQ(score_path_node(trained, p, RowVector::Zero(4)), 0.5);
  EXPECT_THROW(score_path_node(trained, p, RowVector::Zero(3)), Error);
}

TEST(Discriminators, MonotoneInBilinearScore) {
  PathPathDisc d = init_path_path(2, 2, 1);
  d.bilinear = Matrix::Identity(2, 2);
  const RowVector p = RowVector::Ones(2);
  const RowVector g = RowVector::Constant(2, 0.1);
  double last = 0.5;
  for (double s = 1.0; s < 20.0; s *= 2.0) {
    const double now = score_path_path(d, p, s * g);
    EXPECT_GT(now, last);
    last = now;
  }
}

TEST(Objectives, InitialValueIsMinusLn2) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rng = make_rng(seed, 6);
    ad::Tape t;
    const auto pp = bind_path_path(t, init_path_path(4, 3, seed));
    const auto pn = bind_path_node(t, init_path_node(4, 3));
    const auto repr = t.constant(test::random_matrix(rng, 1, 3, 5.0));
    const auto view = t.constant(test::random_matrix(rng, 4, 4, 5.0));
    const int k = 1 + static_cast<int>(seed % 4);
    const auto g = global_mi(pp, repr, view, t.constant(test::random_matrix(rng, k, 3, 5.0)));
    const auto l = local_mi(pn, repr, test::random_matrix(rng, 2, 4), test::random_matrix(rng, 1 + seed % 3, 4));
    EXPECT_NEAR(g.scalar(), -kLn2, 1e-9);
    EXPECT_NEAR(l.scalar(), -kLn2, 1e-9);
    EXPECT_NEAR(joint_objective(g, l).scalar(), -2.0 * kLn2, 1e-9);
  }
}

TEST(Objectives, GlobalWeighting) {
  // Positive logit 2, four negatives with logit 0: each term weighs 1/5.
  ad::Tape t;
  PathPathDisc d = init_path_path(1, 1, 1);
  d.bilinear = Matrix::Constant(1, 1, 1.0);
  d.projection = Matrix::Constant(1, 1, 1.0);
  const auto vars = bind_path_path(t, d);
  const auto repr = t.constant(Matrix::Constant(1, 1, 1.0));
  const auto view = t.constant(Matrix::Constant(3, 1, 2.0));
  const auto g = global_mi(vars, repr, view, t.constant(Matrix::Zero(4, 1)));
  const double expected = (std::log(1.0 / (1.0 + std::exp(-2.0))) + 4.0 * std::log(0.5)) / 5.0;
  EXPECT_NEAR(g.scalar(), expected, 1e-12);
  EXPECT_THROW(global_mi(vars, repr, view, t.constant(Matrix(0, 1))), Error);
}

TEST(Objectives, PerfectDiscriminatorApproachesZero) {
  ad::Tape t;
  PathPathDisc d = init_path_path(1, 1, 1);
  d.bilinear = Matrix::Constant(1, 1, 1.0);
  d.projection = Matrix::Constant(1, 1, 1.0);
  const auto vars = bind_path_path(t, d);
  // Logits of +-9: log sigmoid(9) is about -1.2e-4.
  const auto repr = t.constant(Matrix::Constant(1, 1, 3.0));
  const auto g = global_mi(vars, repr, t.constant(Matrix::Constant(2, 1, 3.0)),
                           t.constant(Matrix::Constant(2, 1, -3.0)));
  EXPECT_LT(g.scalar(), 0.0);
  EXPECT_GT(g.scalar(), -1e-3);
}

TEST(Objectives, LocalNormalization) {
  ad::Tape t;
  auto rng = make_rng(8);
  PathNodeDisc d{test::random_matrix(rng, 2, 3)};
  const auto vars = bind_path_node(t, d);
  const RowVector p = test::random_matrix(rng, 1, 2);
  const auto repr = t.constant(p);
  const Matrix xs = test::random_matrix(rng, 2, 3);
  const Matrix ys = test::random_matrix(rng, 3, 3);
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) expected += std::log(score_path_node(d, p, xs.row(i)));
  for (int i = 0; i < 3; ++i) expected += std::log(1.0 - score_path_node(d, p, ys.row(i)));
  EXPECT_NEAR(local_mi(vars, repr, xs, ys).scalar(), expected / 5.0, 1e-12);

  double only_y = 0.0;
  for (int i = 0; i < 3; ++i) only_y += std::log(1.0 - score_path_node(d, p, ys.row(i)));
  EXPECT_NEAR(local_mi(vars, repr, Matrix(), ys).scalar(), only_y / 3.0, 1e-12);

  try {
    local_mi(vars, repr, Matrix(), Matrix());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyPartition);
  }
}

TEST(Objectives, JointGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto t = test::toy_instance(seed);
    for (const auto mode : {MiMode::kJoint, MiMode::kGlobalOnly, MiMode::kLocalOnly})
      EXPECT_LT(test::objective_grad_error(t, mode), 1e-4) << "seed " << seed << " mode " << to_string(mode);
  }
}

TEST(Training, TwoPathToyLearnsToDiscriminate) {
  const auto toy = test::toy_instance(1);
  const std::vector<Path> corpus{toy.input, toy.negatives[0].path};
  std::vector<NegativeSet> negs(2);
  negs[0].input_id = 0;
  negs[0].negatives.push_back({corpus[1], NegativeKind::kRandom, path_similarity(corpus[0], corpus[1])});
  negs[1].input_id = 1;
  negs[1].negatives.push_back({corpus[0], NegativeKind::kRandom, path_similarity(corpus[1], corpus[0])});
  TrainConfig cfg = small_train(200);
  cfg.batch_size = 2;
  cfg.num_negatives = 1;
  const auto [m, trace] = train(cfg, toy.graph, toy.features, corpus, negs);
  ASSERT_EQ(trace.epochs.size(), 200u);

  const Matrix v0 = initial_view(toy.graph, toy.features, corpus[0]);
  const Matrix v1 = initial_view(toy.graph, toy.features, corpus[1]);
  const RowVector p0 = encode(m.encoder, v0);
  const RowVector p1 = encode(m.encoder, v1);
  EXPECT_GT(score_path_view(m.path_path, p0, v0), score_path_path(m.path_path, p0, p1));

  const auto part = node_partition(corpus[0], std::span<const Path>(&corpus[1], 1));
  for (const auto x : part.positive)
    for (const auto y : part.negative)
      EXPECT_GT(score_path_node(m.path_node, p0, toy.features.row(x)),
                score_path_node(m.path_node, p0, toy.features.row(y)));
}

TEST(Training, FirstBatchAndAblationColumns) {
  const auto c = small_corpus(2);
  auto cfg = small_train(3);
  const auto [m, trace] = train(cfg, c.graph, c.features, c.paths, c.negatives);
  EXPECT_NEAR(trace.initial_joint, -2.0 * kLn2, 1e-9);
  ASSERT_EQ(trace.epochs.size(), 3u);
  EXPECT_EQ(m.epoch, 3);

  cfg.mi_mode = MiMode::kGlobalOnly;
  for (const auto& r : train(cfg, c.graph, c.features, c.paths, c.negatives).second.epochs)
    EXPECT_EQ(r.local, 0.0);
  cfg.mi_mode = MiMode::kLocalOnly;
  for (const auto& r : train(cfg, c.graph, c.features, c.paths, c.negatives).second.epochs)
    EXPECT_EQ(r.global, 0.0);
}

TEST(Training, StagedCurriculumRecordsStages) {
  const auto c = small_corpus(3);
  auto cfg = small_train(8);
  const auto trace = train(cfg, c.graph, c.features, c.paths, c.negatives).second;
  std::vector<int> stages;
  for (const auto& r : trace.epochs) stages.push_back(r.stage);
  EXPECT_EQ(stages, (std::vector<int>{1, 1, 2, 2, 3, 3, 4, 4}));
  cfg.curriculum = CurriculumMode::kAll;
  for (const auto& r : train(cfg, c.graph, c.features, c.paths, c.negatives).second.epochs) EXPECT_EQ(r.stage, 4);
}

TEST(Training, ObjectiveImproves) {
  const auto c = small_corpus(4);
  const auto trace = train(small_train(40), c.graph, c.features, c.paths, c.negatives).second;
  EXPECT_GT(trace.epochs.back().joint, trace.epochs.front().joint + 0.2);
}

TEST(Training, DeterministicAndCheckpointRoundTrip) {
  const auto c = small_corpus(5);
  auto cfg = small_train(4);
  // A staged schedule restarts on resume, so compare with all negatives active.
  cfg.curriculum = CurriculumMode::kAll;
  const auto [a, ta] = train(cfg, c.graph, c.features, c.paths, c.negatives);
  const auto [b, tb] = train(cfg, c.graph, c.features, c.paths, c.negatives);
  ASSERT_EQ(ta.epochs.size(), tb.epochs.size());
  for (std::size_t i = 0; i < ta.epochs.size(); ++i) EXPECT_EQ(ta.epochs[i].joint, tb.epochs[i].joint);

  test::TempDir dir("ckpt");
  save_checkpoint(a, dir.file("model"));
  const Model back = load_checkpoint(dir.file("model"));
  EXPECT_EQ(back.epoch, a.epoch);
  EXPECT_EQ(back.adam.step, a.adam.step);
  const Matrix ea = embed_corpus(a.encoder, c.graph, c.features, c.paths);
  EXPECT_EQ(embed_corpus(back.encoder, c.graph, c.features, c.paths), ea);
  EXPECT_EQ(embed_corpus(b.encoder, c.graph, c.features, c.paths), ea);

  // Resuming from the checkpoint matches training straight through.
  auto more = cfg;
  more.epochs = 2;
  Model resumed = back;
  train_in_place(resumed, more, c.graph, c.features, c.paths, c.negatives);
  auto longer = cfg;
  longer.epochs = 6;
  const auto straight = train(longer, c.graph, c.features, c.paths, c.negatives).first;
  EXPECT_EQ(resumed.encoder.readout, straight.encoder.readout);
}

TEST(Training, RejectsMismatchedInputs) {
  const auto c = small_corpus(6);
  auto cfg = small_train(1);
  EXPECT_THROW(train(cfg, c.graph, c.features, c.paths, std::span(c.negatives).first(3)), Error);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train(cfg, c.graph, c.features, c.paths, c.negatives), Error);
}

TEST(Embed, ShapeAndIdenticalRows) {
  const auto c = small_corpus(7);
  const auto e = init_encoder(4, 6, 5, 1);
  const std::vector<Path> twice{c.paths[0], c.paths[1], c.paths[0]};
  const Matrix m = embed_corpus(e, c.graph, c.features, twice);
  EXPECT_EQ(m.rows(), 3);
  EXPECT_EQ(m.cols(), 5);
  EXPECT_EQ(m.row(0), m.row(2));
}

TEST(Finetune, ConstantTargetsAndErrors) {
  const auto c = small_corpus(8);
  const auto e = init_encoder(4, 6, 5, 1);
  const std::vector<double> targets(c.paths.size(), 42.0);
  FinetuneConfig fc;
  fc.epochs = 1;
  double before = 0.0, after = 0.0;
  for (const double p : predict(finetune(e, c.graph, c.features, c.paths, targets, fc), c.graph, c.features, c.paths))
    before = std::max(before, std::abs(p - 42.0));
  fc.epochs = 20;
  fc.learning_rate = 0.01;
  const auto s = finetune(e, c.graph, c.features, c.paths, targets, fc);
  for (const double p : predict(s, c.graph, c.features, c.paths)) after = std::max(after, std::abs(p - 42.0));
  // Predictions start at the target mean plus the random head's output and shrink toward it.
  EXPECT_LT(before, 1.0);
  EXPECT_LT(after, before);
  EXPECT_LT(after, 0.05);
  EXPECT_THROW(finetune(e, c.graph, c.features, {}, {}, fc), Error);
}

TEST(Finetune, FitsTrainingTargets) {
  const auto c = small_corpus(9);
  std::vector<double> targets;
  for (const auto& p : c.paths) targets.push_back(path_length(c.graph, p));
  FinetuneConfig fc;
  fc.epochs = 150;
  fc.learning_rate = 0.01;
  const auto e = init_encoder(4, 8, 8, 2);
  double mean = 0.0;
  for (const double t : targets) mean += t / static_cast<double>(targets.size());
  double base = 0.0, fitted = 0.0;
  const auto pred = predict(finetune(e, c.graph, c.features, c.paths, targets, fc), c.graph, c.features, c.paths);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    base += std::abs(targets[i] - mean);
    fitted += std::abs(targets[i] - pred[i]);
  }
  EXPECT_LT(fitted, 0.5 * base);

  test::TempDir dir("sup");
  const auto s = finetune(e, c.graph, c.features, c.paths, targets, fc);
  save_supervised(s, dir.file("m"));
  EXPECT_EQ(predict(load_supervised(dir.file("m")), c.graph, c.features, c.paths),
            predict(s, c.graph, c.features, c.paths));
}
