#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pim/encoder.hpp"
#include "pim/graph.hpp"
#include "pim/infomax.hpp"
#include "pim/sampling.hpp"

namespace pim {

enum class MiMode { kJoint, kGlobalOnly, kLocalOnly };

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int hidden_dim = 16;  // H
  int output_dim = 16;  // D'
  int num_negatives = 4;
  CurriculumMode curriculum = CurriculumMode::kStaged;
  MiMode mi_mode = MiMode::kJoint;
  std::uint64_t seed = 0;
  // When set, a checkpoint is written to this directory after every epoch.
  std::string checkpoint_dir;

  void validate() const;
};

const char* to_string(MiMode m);
const char* to_string(CurriculumMode m);
MiMode parse_mi_mode(const std::string& s);
CurriculumMode parse_curriculum_mode(const std::string& s);

// Adam moment buffers, one pair per parameter in Model::named() order.
struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
};

struct Model {
  EncoderParams encoder;
  PathPathDisc path_path;
  PathNodeDisc path_node;
  AdamState adam;
  int epoch = 0;

  std::vector<std::pair<std::string, Matrix*>> named();
  std::vector<std::pair<std::string, const Matrix*>> named() const;
};

Model init_model(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);

struct EpochRecord {
  int epoch = 0;
  double global = 0.0;
  double local = 0.0;
  double joint = 0.0;
  int stage = 0;
  int empty_partitions = 0;  // samples whose local term was skipped
};

struct LossTrace {
  std::vector<EpochRecord> epochs;
  double initial_joint = 0.0;  // first batch, before any update
};

void save_loss_trace(const LossTrace& trace, std::ostream& out);
void save_loss_trace_file(const LossTrace& trace, const std::string& path);

// Per-sample objective terms for the current parameters.
struct SampleObjective {
  double global = 0.0;
  double local = 0.0;
  bool local_skipped = false;
};

// Evaluates (and optionally differentiates) one sample's objective. When
// `grads` is non-null it receives d(objective)/d(param) in Model::named()
// order.
SampleObjective sample_objective(const Model& model, const Graph& g, const FeatureTable& f,
                                 const Path& input, std::span<const Negative> active, MiMode mode,
                                 std::vector<Matrix>* grads);

// Adam ascent on the batch-mean objective. Throws kNumeric naming the
// offending sample when an objective or gradient is not finite.
std::pair<Model, LossTrace> train(const TrainConfig& cfg, const Graph& g, const FeatureTable& f,
                                  std::span<const Path> corpus, std::span<const NegativeSet> negatives);

// Continues training an existing model for cfg.epochs more epochs. A staged
// curriculum restarts at stage 1; shuffling follows the model's epoch count.
LossTrace train_in_place(Model& model, const TrainConfig& cfg, const Graph& g, const FeatureTable& f,
                         std::span<const Path> corpus, std::span<const NegativeSet> negatives);

// |paths| x D' representations, no gradient recording.
Matrix embed_corpus(const EncoderParams& encoder, const Graph& g, const FeatureTable& f,
                    std::span<const Path> paths);

// Fraction of correctly classified path-path pairs at threshold 0.5: each
// path's positive pair plus its random (easy) negatives.
double pair_accuracy(const Model& model, const Graph& g, const FeatureTable& f, std::span<const Path> paths,
                     std::span<const NegativeSet> negatives);

// Checkpoint directory: manifest.txt (text) + params.bin (little-endian
// float64 segments).
void save_checkpoint(const Model& model, const std::string& dir);
Model load_checkpoint(const std::string& dir);

// Supervised regressor: encoder followed by a linear head D' -> 1. Targets
// are standardized internally.
struct SupervisedModel {
  EncoderParams encoder;
  Matrix head_weight;  // D' x 1
  Matrix head_bias;    // 1 x 1
  double target_mean = 0.0;
  double target_scale = 1.0;
};

struct FinetuneConfig {
  int epochs = 30;
  int batch_size = 16;
  double learning_rate = 1e-3;
  bool freeze_encoder = false;  // train the head only
  std::uint64_t seed = 0;
};

// Minimizes mean squared error over (path, target) pairs, updating head and
// encoder. The encoder starts from `encoder`.
SupervisedModel finetune(const EncoderParams& encoder, const Graph& g, const FeatureTable& f,
                         std::span<const Path> paths, std::span<const double> targets,
                         const FinetuneConfig& cfg);

std::vector<double> predict(const SupervisedModel& model, const Graph& g, const FeatureTable& f,
                            std::span<const Path> paths);

void save_supervised(const SupervisedModel& model, const std::string& dir);
SupervisedModel load_supervised(const std::string& dir);

}  // namespace pim
