#include "pim/pim.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <new>
#include <string>
#include <vector>

#include "pim/downstream.hpp"
#include "pim/error.hpp"
#include "pim/experiment.hpp"
#include "pim/features.hpp"
#include "pim/graph.hpp"
#include "pim/parallel.hpp"
#include "pim/rng.hpp"
#include "pim/sampling.hpp"
#include "pim/synth.hpp"
#include "pim/training.hpp"
#include "text_util.hpp"

struct pim_graph {
  pim::Graph g;
};
struct pim_features {
  pim::FeatureTable f;
};
struct pim_paths {
  std::vector<pim::Path> paths;
};
struct pim_negatives {
  std::vector<pim::NegativeSet> sets;
};
struct pim_model {
  pim::Model m;
};
struct pim_matrix {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> m;
};
struct pim_supervised {
  pim::SupervisedModel s;
};

namespace {

thread_local std::string g_last_error;
thread_local std::int64_t g_last_detail = 0;

pim_status fail(pim_status s, std::string msg, std::int64_t detail = 0) {
  g_last_error = std::move(msg);
  g_last_detail = detail;
  return s;
}

template <typename Fn>
pim_status guard(Fn&& fn) {
  try {
    fn();
    return PIM_OK;
  } catch (const pim::Error& e) {
    return fail(static_cast<pim_status>(e.code()), e.what(), e.detail().value_or(0));
  } catch (const std::bad_alloc&) {
    return fail(PIM_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PIM_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PIM_ERR_INTERNAL, "unknown failure");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw pim::Error(pim::ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

pim::SynthConfig to_cpp(const pim_synth_config& c) {
  pim::SynthConfig s;
  s.topology = c.geometric ? pim::SynthTopology::kRandomGeometric : pim::SynthTopology::kGrid;
  s.grid_width = c.grid_width;
  s.grid_height = c.grid_height;
  s.geometric_nodes = c.geometric_nodes;
  s.geometric_radius = c.geometric_radius;
  s.base_length = c.base_length;
  s.length_noise = c.length_noise;
  s.base_speed = c.base_speed;
  s.arterial_factor = c.arterial_factor;
  s.speed_noise = c.speed_noise;
  s.num_paths = c.num_paths;
  s.min_hops = c.min_hops;
  s.detour_factor = c.detour_factor;
  s.max_variants = c.max_variants;
  s.label_noise = c.label_noise;
  s.temperature = c.temperature;
  s.seed = c.seed;
  return s;
}

void to_cpp(const pim_feature_config& c, pim::WalkConfig& w, pim::SgnsConfig& s) {
  w.walks_per_node = c.walks_per_node;
  w.walk_length = c.walk_length;
  w.return_bias = c.return_bias;
  w.inout_bias = c.inout_bias;
  w.seed = c.seed;
  s.dim = c.dim;
  s.window = c.window;
  s.negatives = c.negatives;
  s.epochs = c.epochs;
  s.learning_rate = c.learning_rate;
  s.seed = c.seed;
}

pim::NegativeConfig to_cpp(const pim_negative_config& c) {
  pim::NegativeConfig n;
  n.num_negatives = c.num_negatives;
  n.num_random = c.num_random;
  n.tau_low = c.tau_low;
  n.tau_high = c.tau_high;
  n.max_candidates = c.max_candidates;
  switch (c.strategy) {
    case PIM_STRATEGY_CURRICULUM: n.strategy = pim::SamplingStrategy::kCurriculum; break;
    case PIM_STRATEGY_RANDOM: n.strategy = pim::SamplingStrategy::kRandomOnly; break;
    case PIM_STRATEGY_TOPK: n.strategy = pim::SamplingStrategy::kTopKOnly; break;
    default: throw pim::Error(pim::ErrorCode::kInvalidArgument, "unknown sampling strategy");
  }
  return n;
}

pim::TrainConfig to_cpp(const pim_train_config& c) {
  pim::TrainConfig t;
  t.epochs = c.epochs;
  t.batch_size = c.batch_size;
  t.learning_rate = c.learning_rate;
  t.beta1 = c.beta1;
  t.beta2 = c.beta2;
  t.adam_eps = c.adam_eps;
  t.hidden_dim = c.hidden_dim;
  t.output_dim = c.output_dim;
  t.num_negatives = c.num_negatives;
  if (c.curriculum != PIM_CURRICULUM_STAGED && c.curriculum != PIM_CURRICULUM_ALL)
    throw pim::Error(pim::ErrorCode::kInvalidArgument, "unknown curriculum mode");
  t.curriculum = c.curriculum == PIM_CURRICULUM_ALL ? pim::CurriculumMode::kAll : pim::CurriculumMode::kStaged;
  switch (c.mi_mode) {
    case PIM_MI_JOINT: t.mi_mode = pim::MiMode::kJoint; break;
    case PIM_MI_GLOBAL: t.mi_mode = pim::MiMode::kGlobalOnly; break;
    case PIM_MI_LOCAL: t.mi_mode = pim::MiMode::kLocalOnly; break;
    default: throw pim::Error(pim::ErrorCode::kInvalidArgument, "unknown MI mode");
  }
  t.seed = c.seed;
  if (c.checkpoint_dir) t.checkpoint_dir = c.checkpoint_dir;
  return t;
}

pim::RegressorKind to_cpp(pim_regressor r) {
  if (r == PIM_REGRESSOR_RIDGE) return pim::RegressorKind::kRidge;
  if (r == PIM_REGRESSOR_GP) return pim::RegressorKind::kGaussianProcess;
  throw pim::Error(pim::ErrorCode::kInvalidArgument, "unknown regressor");
}

void copy_metrics(const pim::RegressionMetrics& m, pim_regression_metrics* out) {
  if (!out) return;
  out->mae = m.mae;
  out->mare = m.mare;
  out->mape = m.mape;
  out->mape_excluded = m.mape_excluded;
}

// Label file with either two (travel time) or three (rank score) columns.
struct LabelFile {
  bool rank = false;
  std::vector<std::size_t> ids;
  std::vector<std::int64_t> groups;
  std::vector<double> values;
};

LabelFile read_labels(const std::string& path) {
  std::size_t columns = 0;
  {
    auto in = pim::detail::open_in(path);
    std::string line;
    while (std::getline(in, line)) {
      const auto body = pim::detail::strip_comment(line);
      if (body.empty()) continue;
      columns = pim::detail::split(body, ',').size();
      break;
    }
  }
  LabelFile lf;
  if (columns == 3) {
    lf.rank = true;
    for (const auto& l : pim::load_rank_labels_file(path)) {
      lf.ids.push_back(l.path_id);
      lf.groups.push_back(l.group_id);
      lf.values.push_back(l.score);
    }
  } else if (columns == 2) {
    for (const auto& l : pim::load_travel_times_file(path)) {
      lf.ids.push_back(l.path_id);
      lf.values.push_back(l.seconds);
    }
  } else if (columns == 0) {
    throw pim::Error(pim::ErrorCode::kParse, "label file '" + path + "' is empty");
  } else {
    throw pim::Error(pim::ErrorCode::kParse, "label file '" + path + "' must have 2 or 3 columns");
  }
  return lf;
}

}  // namespace

extern "C" {

const char* pim_last_error(void) { return g_last_error.c_str(); }
int64_t pim_last_error_detail(void) { return g_last_detail; }

const char* pim_status_name(pim_status s) {
  if (s < PIM_OK || s > PIM_ERR_INTERNAL) return "unknown";
  return pim::error_code_name(static_cast<pim::ErrorCode>(s));
}

const char* pim_version(void) { return "1.0.0"; }

void pim_set_max_threads(int n) { pim::set_max_threads(n > 0 ? static_cast<std::size_t>(n) : 0); }

pim_status pim_graph_load(const char* path, pim_graph** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pim_graph{pim::load_graph_file(path)};
  });
}

pim_status pim_graph_save(const pim_graph* g, const char* path) {
  return guard([&] {
    require(g, "graph");
    require(path, "path");
    pim::save_graph_file(g->g, path);
  });
}

size_t pim_graph_num_nodes(const pim_graph* g) { return g ? g->g.num_nodes() : 0; }
size_t pim_graph_num_edges(const pim_graph* g) { return g ? g->g.num_edges() : 0; }
void pim_graph_free(pim_graph* g) { delete g; }

pim_status pim_paths_load(const pim_graph* g, const char* path, pim_paths** out) {
  return guard([&] {
    require(g, "graph");
    require(path, "path");
    require(out, "out");
    *out = new pim_paths{pim::load_paths_file(g->g, path)};
  });
}

pim_status pim_paths_save(const pim_graph* g, const pim_paths* p, const char* path) {
  return guard([&] {
    require(g, "graph");
    require(p, "paths");
    require(path, "path");
    pim::save_paths_file(g->g, p->paths, path);
  });
}

pim_status pim_path_validate(const pim_graph* g, const int64_t* ids, size_t n) {
  return guard([&] {
    require(g, "graph");
    if (n > 0) require(ids, "ids");
    std::vector<pim::NodeId> compact;
    for (size_t i = 0; i < n; ++i) {
      const auto c = g->g.compact_id(ids[i]);
      if (!c) throw pim::Error(pim::ErrorCode::kInvalidArgument, "node " + std::to_string(ids[i]) + " is not in the graph");
      compact.push_back(*c);
    }
    pim::validate_path(g->g, compact);
  });
}

size_t pim_paths_count(const pim_paths* p) { return p ? p->paths.size() : 0; }
void pim_paths_free(pim_paths* p) { delete p; }

void pim_synth_config_default(pim_synth_config* cfg) {
  if (!cfg) return;
  const pim::SynthConfig s;
  *cfg = pim_synth_config{s.grid_width,  s.grid_height,     0,
                          s.geometric_nodes, s.geometric_radius, s.base_length,
                          s.length_noise, s.base_speed,      s.arterial_factor,
                          s.speed_noise, s.num_paths,        s.min_hops,
                          s.detour_factor, s.max_variants,   s.label_noise,
                          s.temperature, s.seed};
}

pim_status pim_synth_write(const pim_synth_config* cfg, const char* out_dir) {
  return guard([&] {
    require(cfg, "config");
    require(out_dir, "out_dir");
    const auto c = to_cpp(*cfg);
    const auto g = pim::gen_graph(c);
    const auto corpus = pim::gen_paths(g, c);
    const auto labels = pim::gen_labels(g, corpus, c);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw pim::Error(pim::ErrorCode::kIo, std::string("cannot create '") + out_dir + "': " + ec.message());
    const std::string dir(out_dir);
    pim::save_graph_file(g, dir + "/graph.csv");
    pim::save_paths_file(g, corpus.paths, dir + "/paths.csv");
    pim::save_travel_times_file(labels.travel_times, dir + "/travel_times.csv");
    pim::save_rank_labels_file(labels.ranks, dir + "/rank_scores.csv");
  });
}

void pim_feature_config_default(pim_feature_config* cfg) {
  if (!cfg) return;
  const pim::WalkConfig w;
  const pim::SgnsConfig s;
  *cfg = pim_feature_config{w.walks_per_node, w.walk_length, w.return_bias, w.inout_bias, s.dim,
                            s.window,         s.negatives,   s.epochs,      s.learning_rate, w.seed};
}

pim_status pim_features_train(const pim_graph* g, const pim_feature_config* cfg, pim_features** out) {
  return guard([&] {
    require(g, "graph");
    require(cfg, "config");
    require(out, "out");
    pim::WalkConfig w;
    pim::SgnsConfig s;
    to_cpp(*cfg, w, s);
    w.validate();
    s.validate();
    *out = new pim_features{pim::train_sgns(pim::generate_walks(g->g, w), s, g->g.num_nodes())};
  });
}

pim_status pim_features_load(const char* path, pim_features** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pim_features{pim::load_features_file(path)};
  });
}

pim_status pim_features_save(const pim_features* f, const char* path) {
  return guard([&] {
    require(f, "features");
    require(path, "path");
    pim::save_features_file(f->f, path);
  });
}

size_t pim_features_dim(const pim_features* f) { return f ? f->f.dim() : 0; }
void pim_features_free(pim_features* f) { delete f; }

void pim_negative_config_default(pim_negative_config* cfg) {
  if (!cfg) return;
  const pim::NegativeConfig n;
  *cfg = pim_negative_config{n.num_negatives, n.num_random, n.tau_low, n.tau_high, n.max_candidates,
                             PIM_STRATEGY_CURRICULUM, 0};
}

pim_status pim_negatives_sample(const pim_graph* g, const pim_paths* corpus, const pim_negative_config* cfg,
                                pim_negatives** out) {
  return guard([&] {
    require(g, "graph");
    require(corpus, "corpus");
    require(cfg, "config");
    require(out, "out");
    *out = new pim_negatives{pim::sample_all_negatives(g->g, corpus->paths, to_cpp(*cfg), cfg->seed)};
  });
}

pim_status pim_negatives_load(const pim_graph* g, const char* path, pim_negatives** out) {
  return guard([&] {
    require(g, "graph");
    require(path, "path");
    require(out, "out");
    *out = new pim_negatives{pim::load_negatives_file(g->g, path)};
  });
}

pim_status pim_negatives_save(const pim_graph* g, const pim_negatives* n, const char* path) {
  return guard([&] {
    require(g, "graph");
    require(n, "negatives");
    require(path, "path");
    pim::save_negatives_file(g->g, n->sets, path);
  });
}

size_t pim_negatives_count(const pim_negatives* n) { return n ? n->sets.size() : 0; }

size_t pim_negatives_backfilled(const pim_negatives* n) {
  if (!n) return 0;
  return static_cast<size_t>(
      std::count_if(n->sets.begin(), n->sets.end(), [](const pim::NegativeSet& s) { return s.backfilled; }));
}

void pim_negatives_free(pim_negatives* n) { delete n; }

void pim_train_config_default(pim_train_config* cfg) {
  if (!cfg) return;
  const pim::TrainConfig t;
  *cfg = pim_train_config{t.epochs,     t.batch_size, t.learning_rate,     t.beta1,         t.beta2,
                          t.adam_eps,   t.hidden_dim, t.output_dim,        t.num_negatives, PIM_CURRICULUM_STAGED,
                          PIM_MI_JOINT, t.seed,       nullptr,             nullptr};
}

pim_status pim_train(const pim_train_config* cfg, const pim_graph* g, const pim_features* f,
                     const pim_paths* corpus, const pim_negatives* negatives, pim_model** out) {
  return guard([&] {
    require(cfg, "config");
    require(g, "graph");
    require(f, "features");
    require(corpus, "corpus");
    require(negatives, "negatives");
    require(out, "out");
    auto [model, trace] = pim::train(to_cpp(*cfg), g->g, f->f, corpus->paths, negatives->sets);
    if (cfg->loss_trace_path) pim::save_loss_trace_file(trace, cfg->loss_trace_path);
    *out = new pim_model{std::move(model)};
  });
}

pim_status pim_model_save(const pim_model* m, const char* dir) {
  return guard([&] {
    require(m, "model");
    require(dir, "dir");
    pim::save_checkpoint(m->m, dir);
  });
}

pim_status pim_model_load(const char* dir, pim_model** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new pim_model{pim::load_checkpoint(dir)};
  });
}

int pim_model_epoch(const pim_model* m) { return m ? m->m.epoch : 0; }

pim_status pim_model_pair_accuracy(const pim_model* m, const pim_graph* g, const pim_features* f,
                                   const pim_paths* paths, const pim_negatives* negatives, double* out) {
  return guard([&] {
    require(m, "model");
    require(g, "graph");
    require(f, "features");
    require(paths, "paths");
    require(negatives, "negatives");
    require(out, "out");
    *out = pim::pair_accuracy(m->m, g->g, f->f, paths->paths, negatives->sets);
  });
}

void pim_model_free(pim_model* m) { delete m; }

pim_status pim_embed(const pim_model* m, const pim_graph* g, const pim_features* f, const pim_paths* paths,
                     pim_matrix** out) {
  return guard([&] {
    require(m, "model");
    require(g, "graph");
    require(f, "features");
    require(paths, "paths");
    require(out, "out");
    *out = new pim_matrix{pim::embed_corpus(m->m.encoder, g->g, f->f, paths->paths)};
  });
}

pim_status pim_embed_mean_features(const pim_graph* g, const pim_features* f, const pim_paths* paths,
                                   pim_matrix** out) {
  return guard([&] {
    require(g, "graph");
    require(f, "features");
    require(paths, "paths");
    require(out, "out");
    *out = new pim_matrix{pim::mean_feature_embeddings(g->g, f->f, paths->paths)};
  });
}

pim_status pim_matrix_load(const char* path, pim_matrix** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new pim_matrix{pim::load_features_file(path).values()};
  });
}

pim_status pim_matrix_save(const pim_matrix* m, const char* path) {
  return guard([&] {
    require(m, "matrix");
    require(path, "path");
    pim::save_features_file(pim::FeatureTable(pim::Matrix(m->m)), path);
  });
}

size_t pim_matrix_rows(const pim_matrix* m) { return m ? static_cast<size_t>(m->m.rows()) : 0; }
size_t pim_matrix_cols(const pim_matrix* m) { return m ? static_cast<size_t>(m->m.cols()) : 0; }
const double* pim_matrix_data(const pim_matrix* m) { return m ? m->m.data() : nullptr; }
void pim_matrix_free(pim_matrix* m) { delete m; }

pim_status pim_regression_metrics_compute(const double* pred, const double* truth, size_t n,
                                          pim_regression_metrics* out) {
  return guard([&] {
    require(pred, "pred");
    require(truth, "truth");
    require(out, "out");
    copy_metrics(pim::metrics({pred, n}, {truth, n}), out);
  });
}

pim_status pim_rank_metrics_compute(const double* pred, const double* truth, const int64_t* groups, size_t n,
                                    pim_rank_metrics* out) {
  return guard([&] {
    require(pred, "pred");
    require(truth, "truth");
    require(groups, "groups");
    require(out, "out");
    const auto r = pim::rank_metrics({pred, n}, {truth, n}, {groups, n});
    *out = pim_rank_metrics{r.kendall_tau, r.spearman_rho, r.groups_used, r.groups_skipped};
  });
}

pim_status pim_eval_label_files(const char* pred_path, const char* truth_path, pim_regression_metrics* regression,
                                pim_rank_metrics* rank, int* has_rank) {
  return guard([&] {
    require(pred_path, "pred_path");
    require(truth_path, "truth_path");
    const auto pred = read_labels(pred_path);
    const auto truth = read_labels(truth_path);
    if (pred.rank != truth.rank) throw pim::Error(pim::ErrorCode::kShapeMismatch, "label files differ in layout");
    std::map<std::size_t, std::size_t> by_id;
    for (std::size_t i = 0; i < pred.ids.size(); ++i)
      if (!by_id.emplace(pred.ids[i], i).second)
        throw pim::Error(pim::ErrorCode::kParse, "duplicate path id " + std::to_string(pred.ids[i]) + " in predictions");
    std::vector<double> p, t;
    std::vector<std::int64_t> groups;
    for (std::size_t i = 0; i < truth.ids.size(); ++i) {
      const auto it = by_id.find(truth.ids[i]);
      if (it == by_id.end())
        throw pim::Error(pim::ErrorCode::kShapeMismatch,
                         "no prediction for path id " + std::to_string(truth.ids[i]));
      p.push_back(pred.values[it->second]);
      t.push_back(truth.values[i]);
      if (truth.rank) groups.push_back(truth.groups[i]);
    }
    copy_metrics(pim::metrics(p, t), regression);
    if (has_rank) *has_rank = truth.rank ? 1 : 0;
    if (truth.rank && rank) {
      const auto r = pim::rank_metrics(p, t, groups);
      *rank = pim_rank_metrics{r.kendall_tau, r.spearman_rho, r.groups_used, r.groups_skipped};
    }
  });
}

pim_status pim_regress_labels(const pim_matrix* embeddings, const char* labels_path, pim_regressor kind,
                              double ridge_lambda, uint64_t split_seed, const char* pred_path,
                              pim_regression_metrics* heldout, pim_rank_metrics* heldout_rank, int* has_rank) {
  return guard([&] {
    require(embeddings, "embeddings");
    require(labels_path, "labels_path");
    const auto labels = read_labels(labels_path);
    const auto rows = static_cast<std::size_t>(embeddings->m.rows());
    for (const auto id : labels.ids)
      if (id >= rows)
        throw pim::Error(pim::ErrorCode::kShapeMismatch,
                         "label path id " + std::to_string(id) + " has no embedding row");
    const auto split = pim::split_indices(labels.ids.size(), split_seed);
    pim::Matrix xtr(static_cast<Eigen::Index>(split.train.size()), embeddings->m.cols());
    std::vector<double> ytr;
    for (std::size_t i = 0; i < split.train.size(); ++i) {
      xtr.row(static_cast<Eigen::Index>(i)) = embeddings->m.row(static_cast<Eigen::Index>(labels.ids[split.train[i]]));
      ytr.push_back(labels.values[split.train[i]]);
    }
    pim::RegressorHyper hyper;
    hyper.ridge_lambda = ridge_lambda;
    const auto reg = pim::fit(to_cpp(kind), xtr, ytr, hyper);
    std::vector<double> pred(labels.ids.size());
    for (std::size_t i = 0; i < labels.ids.size(); ++i)
      pred[i] = reg.predict(pim::RowVector(embeddings->m.row(static_cast<Eigen::Index>(labels.ids[i]))));
    std::vector<double> hp, ht;
    std::vector<std::int64_t> hg;
    for (const auto& part : {split.validation, split.test})
      for (const auto i : part) {
        hp.push_back(pred[i]);
        ht.push_back(labels.values[i]);
        if (labels.rank) hg.push_back(labels.groups[i]);
      }
    if (heldout && !hp.empty()) copy_metrics(pim::metrics(hp, ht), heldout);
    if (has_rank) *has_rank = labels.rank ? 1 : 0;
    if (labels.rank && heldout_rank) {
      const auto r = pim::rank_metrics(hp, ht, hg);
      *heldout_rank = pim_rank_metrics{r.kendall_tau, r.spearman_rho, r.groups_used, r.groups_skipped};
    }
    if (pred_path) {
      if (labels.rank) {
        std::vector<pim::RankLabel> out;
        for (std::size_t i = 0; i < pred.size(); ++i) out.push_back({labels.ids[i], labels.groups[i], pred[i]});
        pim::save_rank_labels_file(out, pred_path);
      } else {
        std::vector<pim::TravelTimeLabel> out;
        for (std::size_t i = 0; i < pred.size(); ++i) out.push_back({labels.ids[i], pred[i]});
        pim::save_travel_times_file(out, pred_path);
      }
    }
  });
}

void pim_finetune_config_default(pim_finetune_config* cfg) {
  if (!cfg) return;
  const pim::FinetuneConfig f;
  const pim::TrainConfig t;
  *cfg = pim_finetune_config{f.epochs, f.batch_size, f.learning_rate, f.freeze_encoder ? 1 : 0, f.seed,
                             t.hidden_dim, t.output_dim};
}

pim_status pim_finetune(const pim_model* model, const pim_graph* g, const pim_features* f, const pim_paths* paths,
                        const char* labels_path, uint64_t split_seed, double label_fraction,
                        const pim_finetune_config* cfg, pim_supervised** out, pim_regression_metrics* heldout) {
  return guard([&] {
    require(g, "graph");
    require(f, "features");
    require(paths, "paths");
    require(labels_path, "labels_path");
    require(cfg, "config");
    require(out, "out");
    if (!(label_fraction > 0.0 && label_fraction <= 1.0))
      throw pim::Error(pim::ErrorCode::kInvalidArgument, "label fraction must be in (0, 1]");
    const auto labels = pim::load_travel_times_file(labels_path);
    for (const auto& l : labels)
      if (l.path_id >= paths->paths.size())
        throw pim::Error(pim::ErrorCode::kShapeMismatch, "label path id " + std::to_string(l.path_id) + " has no path");
    const auto split = pim::split_indices(labels.size(), split_seed);
    const auto n = std::max<std::size_t>(
        1, static_cast<std::size_t>(label_fraction * static_cast<double>(split.train.size())));
    std::vector<pim::Path> train_paths;
    std::vector<double> targets;
    for (std::size_t k = 0; k < std::min(n, split.train.size()); ++k) {
      train_paths.push_back(paths->paths[labels[split.train[k]].path_id]);
      targets.push_back(labels[split.train[k]].seconds);
    }
    pim::FinetuneConfig fc;
    fc.epochs = cfg->epochs;
    fc.batch_size = cfg->batch_size;
    fc.learning_rate = cfg->learning_rate;
    fc.freeze_encoder = cfg->freeze_encoder != 0;
    fc.seed = cfg->seed;
    const auto encoder = model ? model->m.encoder
                               : pim::init_encoder(static_cast<int>(f->f.dim()), cfg->hidden_dim, cfg->output_dim,
                                                   pim::derive_seed(cfg->seed, 0xc01d));
    auto sup = pim::finetune(encoder, g->g, f->f, train_paths, targets, fc);
    if (heldout) {
      std::vector<pim::Path> hp;
      std::vector<double> ht;
      for (const auto& part : {split.validation, split.test})
        for (const auto i : part) {
          hp.push_back(paths->paths[labels[i].path_id]);
          ht.push_back(labels[i].seconds);
        }
      if (!hp.empty()) copy_metrics(pim::metrics(pim::predict(sup, g->g, f->f, hp), ht), heldout);
    }
    *out = new pim_supervised{std::move(sup)};
  });
}

pim_status pim_supervised_save(const pim_supervised* s, const char* dir) {
  return guard([&] {
    require(s, "model");
    require(dir, "dir");
    pim::save_supervised(s->s, dir);
  });
}

pim_status pim_supervised_load(const char* dir, pim_supervised** out) {
  return guard([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new pim_supervised{pim::load_supervised(dir)};
  });
}

pim_status pim_supervised_predict(const pim_supervised* s, const pim_graph* g, const pim_features* f,
                                  const pim_paths* paths, double* out, size_t n) {
  return guard([&] {
    require(s, "model");
    require(g, "graph");
    require(f, "features");
    require(paths, "paths");
    require(out, "out");
    if (n != paths->paths.size()) throw pim::Error(pim::ErrorCode::kShapeMismatch, "output length differs from path count");
    const auto pred = pim::predict(s->s, g->g, f->f, paths->paths);
    std::copy(pred.begin(), pred.end(), out);
  });
}

void pim_supervised_free(pim_supervised* s) { delete s; }

void pim_ablation_config_default(pim_ablation_config* cfg) {
  if (!cfg) return;
  static const uint64_t kSeeds[] = {1, 2, 3};
  const auto std_cfg = pim::standard_experiment();
  pim_synth_config_default(&cfg->synth);
  cfg->synth.grid_width = std_cfg.synth.grid_width;
  cfg->synth.grid_height = std_cfg.synth.grid_height;
  cfg->synth.num_paths = std_cfg.synth.num_paths;
  cfg->synth.seed = std_cfg.synth.seed;
  pim_feature_config_default(&cfg->features);
  cfg->features.dim = std_cfg.sgns.dim;
  cfg->features.seed = std_cfg.sgns.seed;
  pim_negative_config_default(&cfg->negatives);
  pim_train_config_default(&cfg->train);
  cfg->train.hidden_dim = std_cfg.train.hidden_dim;
  cfg->train.output_dim = std_cfg.train.output_dim;
  cfg->train.epochs = std_cfg.train.epochs;
  cfg->regressor = std_cfg.regressor == pim::RegressorKind::kRidge ? PIM_REGRESSOR_RIDGE : PIM_REGRESSOR_GP;
  cfg->ridge_lambda = std_cfg.hyper.ridge_lambda;
  cfg->split_seed = std_cfg.split_seed;
  cfg->seeds = kSeeds;
  cfg->num_seeds = 3;
}

pim_status pim_ablate(const pim_ablation_config* cfg, pim_axis axis, const char* table_path) {
  return guard([&] {
    require(cfg, "config");
    require(table_path, "table_path");
    if (cfg->num_seeds > 0) require(cfg->seeds, "seeds");
    pim::ExperimentConfig e;
    e.synth = to_cpp(cfg->synth);
    to_cpp(cfg->features, e.walks, e.sgns);
    e.negatives = to_cpp(cfg->negatives);
    e.train = to_cpp(cfg->train);
    e.regressor = to_cpp(cfg->regressor);
    e.hyper.ridge_lambda = cfg->ridge_lambda;
    e.split_seed = cfg->split_seed;
    pim::AblationAxis a;
    switch (axis) {
      case PIM_AXIS_MI_MODE: a = pim::AblationAxis::kMiMode; break;
      case PIM_AXIS_STRATEGY: a = pim::AblationAxis::kStrategy; break;
      case PIM_AXIS_NEGATIVES: a = pim::AblationAxis::kNegatives; break;
      case PIM_AXIS_BASELINE: a = pim::AblationAxis::kBaseline; break;
      default: throw pim::Error(pim::ErrorCode::kInvalidArgument, "unknown ablation axis");
    }
    const auto data = pim::prepare_data(e);
    const auto rows = pim::run_ablation(a, e, data, {cfg->seeds, cfg->num_seeds}, e.regressor);
    auto out = pim::detail::open_out(table_path);
    pim::save_ablation_table(rows, out);
  });
}

}  // extern "C"
