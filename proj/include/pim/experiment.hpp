#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pim/downstream.hpp"
#include "pim/features.hpp"
#include "pim/graph.hpp"
#include "pim/sampling.hpp"
#include "pim/synth.hpp"
#include "pim/training.hpp"

namespace pim {

// Everything needed to go from a synthetic corpus to a downstream MAE.
struct ExperimentConfig {
  SynthConfig synth;
  WalkConfig walks;
  SgnsConfig sgns;
  NegativeConfig negatives;
  TrainConfig train;
  RegressorKind regressor = RegressorKind::kGaussianProcess;
  RegressorHyper hyper;
  std::uint64_t split_seed = 7;
};

// 8x8 grid, 200 paths, seed 7, with the desk-scale model sizes.
ExperimentConfig standard_experiment();

struct PreparedData {
  Graph graph;
  SynthCorpus corpus;
  SynthLabels labels;
  FeatureTable features;
  Split split;
  std::vector<double> travel_times;

  // Validation and test rows together; no model selection uses them.
  std::vector<std::size_t> heldout() const;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

// Fits on the training rows of `x` and returns MAE on the held-out rows.
double heldout_mae(const Matrix& x, const PreparedData& data, RegressorKind kind, const RegressorHyper& hyper = {});

// Row i = mean of the node features along path i.
Matrix mean_feature_embeddings(const Graph& g, const FeatureTable& f, std::span<const Path> paths);

// Samples negatives and trains on the whole corpus with `seed`.
Model train_pim(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed,
                LossTrace* trace = nullptr);

enum class AblationAxis { kMiMode, kStrategy, kNegatives, kBaseline };

AblationAxis parse_ablation_axis(const std::string& s);
const char* to_string(AblationAxis a);

struct AblationRow {
  std::string label;
  std::vector<double> mae;  // one per seed
  double mean_mae = 0.0;
};

// mi-mode: global, local, joint. sampling-strategy: random, topk,
// curriculum. negatives: K = 1..4. baseline: mean of node features vs PIM.
std::vector<AblationRow> run_ablation(AblationAxis axis, const ExperimentConfig& cfg, const PreparedData& data,
                                      std::span<const std::uint64_t> seeds, RegressorKind kind);

void save_ablation_table(std::span<const AblationRow> rows, std::ostream& out);

// Label-efficiency comparison: a supervised encoder trained from scratch on
// all training labels versus PIM-initialized fine-tuning on subsets.
struct PretrainConfig {
  FinetuneConfig finetune;
  std::vector<double> fractions{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

struct PretrainResult {
  double cold_mae = 0.0;                 // mean over seeds, 100% of labels
  std::vector<double> fractions;
  std::vector<double> pretrained_mae;    // mean over seeds, per fraction
  // Smallest fraction whose mean MAE is at most cold_mae.
  std::optional<double> fraction_needed;
};

// `pretrained`, when given, holds one model per seed (as from train_pim) and
// skips the pre-training runs.
PretrainResult run_pretrain_comparison(const ExperimentConfig& cfg, const PreparedData& data,
                                       const PretrainConfig& pcfg, std::span<const std::uint64_t> seeds,
                                       std::span<const Model> pretrained = {});

}  // namespace pim
