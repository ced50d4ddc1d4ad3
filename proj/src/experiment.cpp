#include "pim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

#include "pim/error.hpp"
#include "pim/rng.hpp"
#include "text_util.hpp"

namespace pim {

ExperimentConfig standard_experiment() {
  ExperimentConfig cfg;
  cfg.synth.grid_width = 8;
  cfg.synth.grid_height = 8;
  cfg.synth.num_paths = 200;
  cfg.synth.seed = 7;
  cfg.walks.seed = 7;
  cfg.sgns.seed = 7;
  cfg.sgns.dim = 16;
  cfg.train.hidden_dim = 64;
  cfg.train.output_dim = 64;
  cfg.train.epochs = 100;
  cfg.split_seed = 7;
  return cfg;
}

std::vector<std::size_t> PreparedData::heldout() const {
  std::vector<std::size_t> out = split.validation;
  out.insert(out.end(), split.test.begin(), split.test.end());
  return out;
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  PreparedData d;
  d.graph = gen_graph(cfg.synth);
  d.corpus = gen_paths(d.graph, cfg.synth);
  d.labels = gen_labels(d.graph, d.corpus, cfg.synth);
  d.features = train_sgns(generate_walks(d.graph, cfg.walks), cfg.sgns, d.graph.num_nodes());
  d.split = split_indices(d.corpus.paths.size(), cfg.split_seed);
  for (const auto& l : d.labels.travel_times) d.travel_times.push_back(l.seconds);
  return d;
}

double heldout_mae(const Matrix& x, const PreparedData& data, RegressorKind kind, const RegressorHyper& hyper) {
  if (static_cast<std::size_t>(x.rows()) != data.travel_times.size())
    throw Error(ErrorCode::kShapeMismatch, "embedding rows differ from label count");
  const auto& train = data.split.train;
  Matrix xtr(static_cast<Eigen::Index>(train.size()), x.cols());
  std::vector<double> ytr;
  for (std::size_t i = 0; i < train.size(); ++i) {
    xtr.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(train[i]));
    ytr.push_back(data.travel_times[train[i]]);
  }
  const auto reg = fit(kind, xtr, ytr, hyper);
  std::vector<double> pred, truth;
  for (const auto i : data.heldout()) {
    pred.push_back(reg.predict(RowVector(x.row(static_cast<Eigen::Index>(i)))));
    truth.push_back(data.travel_times[i]);
  }
  return metrics(pred, truth).mae;
}

Matrix mean_feature_embeddings(const Graph& g, const FeatureTable& f, std::span<const Path> paths) {
  Matrix out(static_cast<Eigen::Index>(paths.size()), static_cast<Eigen::Index>(f.dim()));
  for (std::size_t i = 0; i < paths.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = initial_view(g, f, paths[i]).colwise().mean();
  return out;
}

Model train_pim(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed, LossTrace* trace) {
  const auto negatives = sample_all_negatives(data.graph, data.corpus.paths, cfg.negatives, seed);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  tc.num_negatives = cfg.negatives.num_negatives;
  auto [model, t] = train(tc, data.graph, data.features, data.corpus.paths, negatives);
  if (trace) *trace = std::move(t);
  return model;
}

AblationAxis parse_ablation_axis(const std::string& s) {
  if (s == "mi-mode") return AblationAxis::kMiMode;
  if (s == "sampling-strategy" || s == "strategy") return AblationAxis::kStrategy;
  if (s == "K" || s == "k" || s == "negatives") return AblationAxis::kNegatives;
  if (s == "baseline") return AblationAxis::kBaseline;
  throw Error(ErrorCode::kInvalidArgument, "unknown ablation axis '" + s + "'");
}

const char* to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::kMiMode: return "mi-mode";
    case AblationAxis::kStrategy: return "sampling-strategy";
    case AblationAxis::kNegatives: return "K";
    case AblationAxis::kBaseline: return "baseline";
  }
  return "?";
}

namespace {

AblationRow run_row(const std::string& label, const ExperimentConfig& cfg, const PreparedData& data,
                    std::span<const std::uint64_t> seeds, RegressorKind kind) {
  AblationRow row{label, {}, 0.0};
  for (const auto seed : seeds) {
    const Model m = train_pim(cfg, data, seed);
    row.mae.push_back(heldout_mae(embed_corpus(m.encoder, data.graph, data.features, data.corpus.paths), data,
                                  kind, cfg.hyper));
  }
  row.mean_mae = std::accumulate(row.mae.begin(), row.mae.end(), 0.0) / static_cast<double>(row.mae.size());
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(AblationAxis axis, const ExperimentConfig& cfg, const PreparedData& data,
                                      std::span<const std::uint64_t> seeds, RegressorKind kind) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  std::vector<AblationRow> rows;
  switch (axis) {
    case AblationAxis::kMiMode:
      for (const auto mode : {MiMode::kGlobalOnly, MiMode::kLocalOnly, MiMode::kJoint}) {
        auto c = cfg;
        c.train.mi_mode = mode;
        rows.push_back(run_row(to_string(mode), c, data, seeds, kind));
      }
      break;
    case AblationAxis::kStrategy:
      for (const auto& [strategy, label] : {std::pair{SamplingStrategy::kRandomOnly, "random"},
                                           std::pair{SamplingStrategy::kTopKOnly, "topk"},
                                           std::pair{SamplingStrategy::kCurriculum, "curriculum"}}) {
        auto c = cfg;
        c.negatives.strategy = strategy;
        rows.push_back(run_row(label, c, data, seeds, kind));
      }
      break;
    case AblationAxis::kNegatives:
      for (int k = 1; k <= 4; ++k) {
        auto c = cfg;
        c.negatives.num_negatives = k;
        c.negatives.num_random = std::min(c.negatives.num_random, k);
        rows.push_back(run_row("K=" + std::to_string(k), c, data, seeds, kind));
      }
      break;
    case AblationAxis::kBaseline: {
      const double base =
          heldout_mae(mean_feature_embeddings(data.graph, data.features, data.corpus.paths), data, kind, cfg.hyper);
      // The baseline has no training randomness; it is repeated per seed so
      // rows line up.
      rows.push_back({"mean-node-features", std::vector<double>(seeds.size(), base), base});
      rows.push_back(run_row("pim", cfg, data, seeds, kind));
      break;
    }
  }
  return rows;
}

void save_ablation_table(std::span<const AblationRow> rows, std::ostream& out) {
  out << "variant,mean_mae";
  const std::size_t n = rows.empty() ? 0 : rows.front().mae.size();
  for (std::size_t i = 0; i < n; ++i) out << ",mae_seed" << i;
  out << '\n';
  for (const auto& r : rows) {
    out << r.label << ',' << detail::format_double(r.mean_mae);
    for (const double m : r.mae) out << ',' << detail::format_double(m);
    out << '\n';
  }
}

PretrainResult run_pretrain_comparison(const ExperimentConfig& cfg, const PreparedData& data,
                                       const PretrainConfig& pcfg, std::span<const std::uint64_t> seeds,
                                       std::span<const Model> pretrained) {
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no seeds given");
  if (!pretrained.empty() && pretrained.size() != seeds.size())
    throw Error(ErrorCode::kInvalidArgument, "one pretrained model per seed expected");
  if (pcfg.fractions.empty()) throw Error(ErrorCode::kInvalidArgument, "no label fractions given");
  for (const double fr : pcfg.fractions)
    if (!(fr > 0.0 && fr <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "label fractions must be in (0, 1]");

  const auto heldout = data.heldout();
  std::vector<Path> test_paths;
  std::vector<double> test_truth;
  for (const auto i : heldout) {
    test_paths.push_back(data.corpus.paths[i]);
    test_truth.push_back(data.travel_times[i]);
  }
  auto eval = [&](const SupervisedModel& m) {
    return metrics(predict(m, data.graph, data.features, test_paths), test_truth).mae;
  };

  PretrainResult res;
  res.fractions = pcfg.fractions;
  std::sort(res.fractions.begin(), res.fractions.end());
  res.pretrained_mae.assign(res.fractions.size(), 0.0);
  const double ns = static_cast<double>(seeds.size());
  for (std::size_t si = 0; si < seeds.size(); ++si) {
    const auto seed = seeds[si];
    std::vector<std::size_t> train = data.split.train;
    auto rng = make_rng(seed, 0xf4ac);
    std::shuffle(train.begin(), train.end(), rng);
    auto subset = [&](double fr) {
      const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(fr * static_cast<double>(train.size()))));
      std::pair<std::vector<Path>, std::vector<double>> out;
      for (std::size_t k = 0; k < std::min(n, train.size()); ++k) {
        out.first.push_back(data.corpus.paths[train[k]]);
        out.second.push_back(data.travel_times[train[k]]);
      }
      return out;
    };
    FinetuneConfig fc = pcfg.finetune;
    fc.seed = seed;

    const auto all = subset(1.0);
    const auto cold_init = init_encoder(static_cast<int>(data.features.dim()), cfg.train.hidden_dim,
                                        cfg.train.output_dim, derive_seed(seed, 0xc01d));
    res.cold_mae += eval(finetune(cold_init, data.graph, data.features, all.first, all.second, fc)) / ns;

    const Model pim = pretrained.empty() ? train_pim(cfg, data, seed) : pretrained[si];
    for (std::size_t j = 0; j < res.fractions.size(); ++j) {
      const auto part = subset(res.fractions[j]);
      res.pretrained_mae[j] +=
          eval(finetune(pim.encoder, data.graph, data.features, part.first, part.second, fc)) / ns;
    }
  }
  for (std::size_t j = 0; j < res.fractions.size(); ++j)
    if (res.pretrained_mae[j] <= res.cold_mae) {
      res.fraction_needed = res.fractions[j];
      break;
    }
  return res;
}

}  // namespace pim
