#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "pim/pim.h"

namespace fs = std::filesystem;

namespace {

class CApi : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("pim_capi_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  void TearDown() override {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string file(const std::string& name) const { return (dir / name).string(); }

  // Small synthetic corpus written through the API and loaded back.
  void make_corpus() {
    pim_synth_config sc;
    pim_synth_config_default(&sc);
    sc.grid_width = 4;
    sc.grid_height = 4;
    sc.num_paths = 30;
    sc.seed = 3;
    ASSERT_EQ(pim_synth_write(&sc, dir.c_str()), PIM_OK) << pim_last_error();
    ASSERT_EQ(pim_graph_load(file("graph.csv").c_str(), &g), PIM_OK);
    ASSERT_EQ(pim_paths_load(g, file("paths.csv").c_str(), &paths), PIM_OK);
    pim_feature_config fc;
    pim_feature_config_default(&fc);
    fc.dim = 4;
    fc.seed = 3;
    ASSERT_EQ(pim_features_train(g, &fc, &feats), PIM_OK) << pim_last_error();
  }

  fs::path dir;
  pim_graph* g = nullptr;
  pim_paths* paths = nullptr;
  pim_features* feats = nullptr;
};

}  // namespace

TEST_F(CApi, ErrorsAreReportedPerStatus) {
  pim_graph* none = nullptr;
  EXPECT_EQ(pim_graph_load(file("missing.csv").c_str(), &none), PIM_ERR_IO);
  EXPECT_EQ(none, nullptr);
  EXPECT_NE(std::string(pim_last_error()), "");
  EXPECT_STREQ(pim_status_name(PIM_ERR_IO), "io");

  std::ofstream(file("bad.csv")) << "0,1,1\n1,2,x\n";
  EXPECT_EQ(pim_graph_load(file("bad.csv").c_str(), &none), PIM_ERR_PARSE);
  EXPECT_EQ(pim_last_error_detail(), 2);

  EXPECT_EQ(pim_graph_load(nullptr, &none), PIM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(pim_graph_load(file("bad.csv").c_str(), nullptr), PIM_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(pim_version()), "");
}

TEST_F(CApi, GraphAndPathValidation) {
  std::ofstream(file("g.csv")) << "# chain\n10,20,1\n20,30,1\n";
  ASSERT_EQ(pim_graph_load(file("g.csv").c_str(), &g), PIM_OK);
  EXPECT_EQ(pim_graph_num_nodes(g), 3u);
  EXPECT_EQ(pim_graph_num_edges(g), 2u);

  const int64_t good[] = {10, 20, 30};
  EXPECT_EQ(pim_path_validate(g, good, 3), PIM_OK);
  const int64_t skip[] = {10, 30};
  EXPECT_EQ(pim_path_validate(g, skip, 2), PIM_ERR_MISSING_EDGE);
  EXPECT_EQ(pim_last_error_detail(), 0);
  EXPECT_EQ(pim_path_validate(g, good, 1), PIM_ERR_TOO_SHORT);
  const int64_t unknown[] = {10, 99};
  EXPECT_EQ(pim_path_validate(g, unknown, 2), PIM_ERR_INVALID_ARGUMENT);

  ASSERT_EQ(pim_graph_save(g, file("g2.csv").c_str()), PIM_OK);
  pim_graph* again = nullptr;
  ASSERT_EQ(pim_graph_load(file("g2.csv").c_str(), &again), PIM_OK);
  EXPECT_EQ(pim_graph_num_edges(again), 2u);
  pim_graph_free(again);
  pim_graph_free(g);
}

TEST_F(CApi, MetricsCompute) {
  const double pred[] = {110, 270};
  const double truth[] = {100, 300};
  pim_regression_metrics m;
  ASSERT_EQ(pim_regression_metrics_compute(pred, truth, 2, &m), PIM_OK);
  EXPECT_DOUBLE_EQ(m.mae, 20.0);
  EXPECT_DOUBLE_EQ(m.mare, 0.1);
  EXPECT_DOUBLE_EQ(m.mape, 10.0);

  const double a[] = {1, 2, 3, 4};
  const double b[] = {4, 3, 2, 1};
  const int64_t groups[] = {0, 0, 0, 0};
  pim_rank_metrics r;
  ASSERT_EQ(pim_rank_metrics_compute(a, b, groups, 4, &r), PIM_OK);
  EXPECT_DOUBLE_EQ(r.kendall_tau, -1.0);
  EXPECT_DOUBLE_EQ(r.spearman_rho, -1.0);
  EXPECT_EQ(r.groups_used, 1u);
}

TEST_F(CApi, PipelineEndToEnd) {
  make_corpus();
  EXPECT_EQ(pim_paths_count(paths), 30u);
  EXPECT_EQ(pim_features_dim(feats), 4u);

  pim_negative_config nc;
  pim_negative_config_default(&nc);
  nc.seed = 4;
  pim_negatives* negs = nullptr;
  ASSERT_EQ(pim_negatives_sample(g, paths, &nc, &negs), PIM_OK) << pim_last_error();
  EXPECT_EQ(pim_negatives_count(negs), 30u);
  ASSERT_EQ(pim_negatives_save(g, negs, file("neg.txt").c_str()), PIM_OK);
  pim_negatives* negs2 = nullptr;
  ASSERT_EQ(pim_negatives_load(g, file("neg.txt").c_str(), &negs2), PIM_OK);
  EXPECT_EQ(pim_negatives_backfilled(negs2), pim_negatives_backfilled(negs));

  pim_train_config tc;
  pim_train_config_default(&tc);
  tc.epochs = 3;
  tc.hidden_dim = 5;
  tc.output_dim = 5;
  const std::string trace = file("trace.csv");
  tc.loss_trace_path = trace.c_str();
  pim_model* model = nullptr;
  ASSERT_EQ(pim_train(&tc, g, feats, paths, negs2, &model), PIM_OK) << pim_last_error();
  EXPECT_EQ(pim_model_epoch(model), 3);
  EXPECT_TRUE(fs::exists(trace));
  double acc = -1.0;
  ASSERT_EQ(pim_model_pair_accuracy(model, g, feats, paths, negs2, &acc), PIM_OK);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);

  ASSERT_EQ(pim_model_save(model, file("model").c_str()), PIM_OK);
  pim_model* loaded = nullptr;
  ASSERT_EQ(pim_model_load(file("model").c_str(), &loaded), PIM_OK);

  pim_matrix* e1 = nullptr;
  pim_matrix* e2 = nullptr;
  ASSERT_EQ(pim_embed(model, g, feats, paths, &e1), PIM_OK);
  ASSERT_EQ(pim_embed(loaded, g, feats, paths, &e2), PIM_OK);
  ASSERT_EQ(pim_matrix_rows(e1), 30u);
  ASSERT_EQ(pim_matrix_cols(e1), 5u);
  const std::vector<double> v1(pim_matrix_data(e1), pim_matrix_data(e1) + 150);
  const std::vector<double> v2(pim_matrix_data(e2), pim_matrix_data(e2) + 150);
  EXPECT_EQ(v1, v2);
  ASSERT_EQ(pim_matrix_save(e1, file("emb.txt").c_str()), PIM_OK);

  pim_regression_metrics held;
  pim_rank_metrics held_rank;
  int has_rank = -1;
  ASSERT_EQ(pim_regress_labels(e1, file("travel_times.csv").c_str(), PIM_REGRESSOR_RIDGE, 1e-3, 7,
                               file("pred.csv").c_str(), &held, &held_rank, &has_rank),
            PIM_OK)
      << pim_last_error();
  EXPECT_EQ(has_rank, 0);
  EXPECT_GT(held.mae, 0.0);
  ASSERT_EQ(pim_regress_labels(e1, file("rank_scores.csv").c_str(), PIM_REGRESSOR_GP, 0, 7, nullptr, &held,
                               &held_rank, &has_rank),
            PIM_OK)
      << pim_last_error();
  EXPECT_EQ(has_rank, 1);

  pim_regression_metrics same;
  pim_rank_metrics same_rank;
  ASSERT_EQ(pim_eval_label_files(file("travel_times.csv").c_str(), file("travel_times.csv").c_str(), &same,
                                 &same_rank, &has_rank),
            PIM_OK);
  EXPECT_EQ(same.mae, 0.0);
  ASSERT_EQ(pim_eval_label_files(file("rank_scores.csv").c_str(), file("rank_scores.csv").c_str(), &same,
                                 &same_rank, &has_rank),
            PIM_OK);
  EXPECT_EQ(has_rank, 1);
  EXPECT_EQ(same.mae, 0.0);

  pim_finetune_config ft;
  pim_finetune_config_default(&ft);
  ft.epochs = 2;
  pim_supervised* sup = nullptr;
  pim_regression_metrics ft_held;
  ASSERT_EQ(pim_finetune(model, g, feats, paths, file("travel_times.csv").c_str(), 7, 0.5, &ft, &sup, &ft_held),
            PIM_OK)
      << pim_last_error();
  std::vector<double> pred(30);
  ASSERT_EQ(pim_supervised_predict(sup, g, feats, paths, pred.data(), pred.size()), PIM_OK);
  EXPECT_EQ(pim_supervised_predict(sup, g, feats, paths, pred.data(), 3), PIM_ERR_SHAPE_MISMATCH);
  pim_supervised* cold = nullptr;
  ft.hidden_dim = 3;
  ft.output_dim = 3;
  ASSERT_EQ(pim_finetune(nullptr, g, feats, paths, file("travel_times.csv").c_str(), 7, 1.0, &ft, &cold, &ft_held),
            PIM_OK)
      << pim_last_error();

  pim_matrix* mean = nullptr;
  ASSERT_EQ(pim_embed_mean_features(g, feats, paths, &mean), PIM_OK);
  EXPECT_EQ(pim_matrix_cols(mean), 4u);

  pim_supervised_free(cold);
  pim_supervised_free(sup);
  pim_matrix_free(mean);
  pim_matrix_free(e1);
  pim_matrix_free(e2);
  pim_model_free(loaded);
  pim_model_free(model);
  pim_negatives_free(negs);
  pim_negatives_free(negs2);
  pim_features_free(feats);
  pim_paths_free(paths);
  pim_graph_free(g);
}

TEST_F(CApi, ConfigConflictsAreRejected) {
  make_corpus();
  pim_negative_config nc;
  pim_negative_config_default(&nc);
  nc.num_negatives = 0;
  pim_negatives* negs = nullptr;
  EXPECT_EQ(pim_negatives_sample(g, paths, &nc, &negs), PIM_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(negs, nullptr);
  pim_negative_config_default(&nc);
  nc.tau_low = 1.5;
  EXPECT_EQ(pim_negatives_sample(g, paths, &nc, &negs), PIM_ERR_INVALID_ARGUMENT);
  pim_features_free(feats);
  pim_paths_free(paths);
  pim_graph_free(g);
}

TEST_F(CApi, TinyAblation) {
  pim_ablation_config ac;
  pim_ablation_config_default(&ac);
  EXPECT_EQ(ac.num_seeds, 3u);
  static const uint64_t seeds[] = {1};
  ac.seeds = seeds;
  ac.num_seeds = 1;
  ac.synth.grid_width = 4;
  ac.synth.grid_height = 4;
  ac.synth.num_paths = 30;
  ac.features.dim = 4;
  ac.train.epochs = 2;
  ac.train.hidden_dim = 4;
  ac.train.output_dim = 4;
  ac.regressor = PIM_REGRESSOR_RIDGE;
  ASSERT_EQ(pim_ablate(&ac, PIM_AXIS_MI_MODE, file("abl.csv").c_str()), PIM_OK) << pim_last_error();
  std::ifstream in(file("abl.csv"));
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "variant,mean_mae,mae_seed0");
  EXPECT_EQ(lines[1].rfind("global,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("local,", 0), 0u);
  EXPECT_EQ(lines[3].rfind("joint,", 0), 0u);
}
