#include "pim/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "checkpoint_io.hpp"
#include "pim/error.hpp"
#include "pim/parallel.hpp"
#include "pim/rng.hpp"
#include "text_util.hpp"

namespace pim {

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(ErrorCode::kInvalidArgument, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be > 0");
  if (num_negatives < 1) throw Error(ErrorCode::kInvalidArgument, "number of negatives must be >= 1");
  if (hidden_dim < 1 || output_dim < 1) throw Error(ErrorCode::kInvalidArgument, "model dimensions must be >= 1");
}

const char* to_string(MiMode m) {
  switch (m) {
    case MiMode::kJoint: return "joint";
    case MiMode::kGlobalOnly: return "global";
    case MiMode::kLocalOnly: return "local";
  }
  return "?";
}

const char* to_string(CurriculumMode m) { return m == CurriculumMode::kStaged ? "staged" : "all"; }

MiMode parse_mi_mode(const std::string& s) {
  if (s == "joint") return MiMode::kJoint;
  if (s == "global" || s == "global-only") return MiMode::kGlobalOnly;
  if (s == "local" || s == "local-only") return MiMode::kLocalOnly;
  throw Error(ErrorCode::kInvalidArgument, "unknown MI mode '" + s + "'");
}

CurriculumMode parse_curriculum_mode(const std::string& s) {
  if (s == "staged") return CurriculumMode::kStaged;
  if (s == "all") return CurriculumMode::kAll;
  throw Error(ErrorCode::kInvalidArgument, "unknown curriculum mode '" + s + "'");
}

std::vector<std::pair<std::string, Matrix*>> Model::named() {
  auto out = encoder.named();
  for (auto& e : path_path.named()) out.push_back(e);
  for (auto& e : path_node.named()) out.push_back(e);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> Model::named() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (const auto& [name, m] : const_cast<Model*>(this)->named()) out.emplace_back(name, m);
  return out;
}

Model init_model(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed) {
  Model m;
  m.encoder = init_encoder(input_dim, hidden_dim, output_dim, seed);
  m.path_path = init_path_path(input_dim, output_dim, seed);
  m.path_node = init_path_node(input_dim, output_dim);
  return m;
}

void save_loss_trace(const LossTrace& trace, std::ostream& out) {
  out << "epoch,global,local,joint,stage\n";
  for (const auto& r : trace.epochs)
    out << r.epoch << ',' << detail::format_double(r.global) << ',' << detail::format_double(r.local) << ','
        << detail::format_double(r.joint) << ',' << r.stage << '\n';
}

void save_loss_trace_file(const LossTrace& trace, const std::string& path) {
  auto out = detail::open_out(path);
  save_loss_trace(trace, out);
}

namespace {

Matrix features_of(const FeatureTable& f, const std::vector<NodeId>& nodes) {
  Matrix m(static_cast<Eigen::Index>(nodes.size()), static_cast<Eigen::Index>(f.dim()));
  for (std::size_t i = 0; i < nodes.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = f.row(nodes[i]);
  return m;
}

// In-place Adam update; `direction` is +1 for ascent, -1 for descent.
void adam_step(std::vector<std::pair<std::string, Matrix*>>& params, AdamState& st, const std::vector<Matrix>& grads,
               double lr, double beta1, double beta2, double eps, double direction) {
  if (st.m.size() != params.size()) {
    st.m.clear();
    st.v.clear();
    for (const auto& [name, p] : params) {
      st.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      st.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++st.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * grads[i];
    st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * grads[i].cwiseProduct(grads[i]);
    const Matrix mhat = st.m[i] / c1;
    const Matrix vhat = st.v[i] / c2;
    *params[i].second += direction * lr * mhat.cwiseQuotient((vhat.array().sqrt() + eps).matrix());
  }
}

std::vector<ad::Var> bind_model(ad::Tape& tape, const Model& model, bool trainable, EncoderVars& enc,
                                PathPathVars& pp, PathNodeVars& pn) {
  enc = bind_encoder(tape, model.encoder, trainable);
  pp = bind_path_path(tape, model.path_path, trainable);
  pn = bind_path_node(tape, model.path_node, trainable);
  return {enc.w_z, enc.w_r, enc.w_n, enc.u_z, enc.u_r, enc.u_n, enc.b_z,
          enc.b_r, enc.b_n, enc.readout, pp.bilinear, pp.projection, pn.bilinear};
}

std::vector<Matrix> collect_grads(const std::vector<ad::Var>& vars) {
  std::vector<Matrix> out;
  out.reserve(vars.size());
  for (const auto& v : vars)
    out.push_back(v.grad().size() ? v.grad() : Matrix::Zero(v.rows(), v.cols()));
  return out;
}

bool all_finite(const std::vector<Matrix>& ms) {
  return std::all_of(ms.begin(), ms.end(), [](const Matrix& m) { return m.allFinite(); });
}

}  // namespace

SampleObjective sample_objective(const Model& model, const Graph& g, const FeatureTable& f, const Path& input,
                                 std::span<const Negative> active, MiMode mode, std::vector<Matrix>* grads) {
  ad::Tape tape;
  EncoderVars enc;
  PathPathVars pp;
  PathNodeVars pn;
  const auto vars = bind_model(tape, model, grads != nullptr, enc, pp, pn);

  const ad::Var view = tape.constant(initial_view(g, f, input));
  const ad::Var repr = encode(enc, view);
  SampleObjective result;
  std::optional<ad::Var> objective;

  if (mode != MiMode::kLocalOnly) {
    if (active.empty()) throw Error(ErrorCode::kInvalidArgument, "sample has no active negatives");
    std::vector<ad::Var> negs;
    negs.reserve(active.size());
    for (const auto& n : active) negs.push_back(encode(enc, tape.constant(initial_view(g, f, n.path))));
    const ad::Var gl = global_mi(pp, repr, view, ad::concat_rows(negs));
    result.global = gl.scalar();
    objective = gl;
  }
  if (mode != MiMode::kGlobalOnly) {
    try {
      const auto part = node_partition(input, active);
      const ad::Var lo = local_mi(pn, repr, features_of(f, part.positive), features_of(f, part.negative));
      result.local = lo.scalar();
      objective = objective ? joint_objective(*objective, lo) : lo;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyPartition) throw;
      result.local_skipped = true;
    }
  }
  if (grads) {
    if (objective) {
      tape.backward(*objective);
      *grads = collect_grads(vars);
    } else {
      grads->clear();
      for (const auto& v : vars) grads->push_back(Matrix::Zero(v.rows(), v.cols()));
    }
  }
  return result;
}

LossTrace train_in_place(Model& model, const TrainConfig& cfg, const Graph& g, const FeatureTable& f,
                         std::span<const Path> corpus, std::span<const NegativeSet> negatives) {
  cfg.validate();
  if (corpus.empty()) throw Error(ErrorCode::kInvalidArgument, "training corpus is empty");
  if (negatives.size() != corpus.size())
    throw Error(ErrorCode::kInvalidArgument, "every corpus path needs a negative set");
  for (std::size_t i = 0; i < negatives.size(); ++i)
    if (negatives[i].negatives.empty())
      throw Error(ErrorCode::kInvalidArgument, "negative set " + std::to_string(i) + " is empty");
  model.encoder.validate();
  if (model.encoder.input_dim() != static_cast<Eigen::Index>(f.dim()))
    throw Error(ErrorCode::kShapeMismatch, "encoder input dimension does not match the feature table");

  auto params = model.named();
  LossTrace trace;
  std::vector<std::size_t> order(corpus.size());
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  bool first_batch = model.epoch == 0;

  for (int e = 0; e < cfg.epochs; ++e) {
    const int stage = cfg.curriculum == CurriculumMode::kStaged ? curriculum_stage(e, cfg.epochs, cfg.num_negatives)
                                                                : cfg.num_negatives;
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(model.epoch));
    std::shuffle(order.begin(), order.end(), rng);

    EpochRecord rec;
    rec.epoch = model.epoch;
    rec.stage = stage;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      std::vector<SampleObjective> objs(count);
      std::vector<std::vector<Matrix>> grads(count);
      parallel_for(count, [&](std::size_t j) {
        const std::size_t id = order[start + j];
        const auto& ns = negatives[id];
        auto active = curriculum_schedule(stage, ns, CurriculumMode::kStaged);
        active = active.first(std::min<std::size_t>(active.size(), static_cast<std::size_t>(cfg.num_negatives)));
        objs[j] = sample_objective(model, g, f, corpus[id], active, cfg.mi_mode, &grads[j]);
      });
      std::vector<Matrix> total = std::move(grads[0]);
      for (std::size_t j = 0; j < count; ++j) {
        const auto& o = objs[j];
        if (!std::isfinite(o.global) || !std::isfinite(o.local) || (j > 0 && !all_finite(grads[j])) ||
            (j == 0 && !all_finite(total)))
          throw Error(ErrorCode::kNumeric, "non-finite objective or gradient at sample " +
                                               std::to_string(order[start + j]) + " in epoch " +
                                               std::to_string(model.epoch),
                      static_cast<std::int64_t>(order[start + j]));
        if (j > 0)
          for (std::size_t p = 0; p < total.size(); ++p) total[p] += grads[j][p];
        rec.global += o.global;
        rec.local += o.local;
        rec.empty_partitions += o.local_skipped ? 1 : 0;
        if (first_batch) trace.initial_joint += (o.global + o.local) / static_cast<double>(count);
      }
      first_batch = false;
      for (auto& t : total) t /= static_cast<double>(count);
      adam_step(params, model.adam, total, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps, +1.0);
    }
    const double n = static_cast<double>(corpus.size());
    rec.global /= n;
    rec.local /= n;
    rec.joint = rec.global + rec.local;
    trace.epochs.push_back(rec);
    ++model.epoch;
    for (const auto& [name, p] : params)
      if (!p->allFinite()) throw Error(ErrorCode::kNumeric, "parameter " + name + " became non-finite");
    if (!cfg.checkpoint_dir.empty()) save_checkpoint(model, cfg.checkpoint_dir);
  }
  return trace;
}

std::pair<Model, LossTrace> train(const TrainConfig& cfg, const Graph& g, const FeatureTable& f,
                                  std::span<const Path> corpus, std::span<const NegativeSet> negatives) {
  cfg.validate();
  Model model = init_model(static_cast<int>(f.dim()), cfg.hidden_dim, cfg.output_dim, cfg.seed);
  auto trace = train_in_place(model, cfg, g, f, corpus, negatives);
  return {std::move(model), std::move(trace)};
}

Matrix embed_corpus(const EncoderParams& encoder, const Graph& g, const FeatureTable& f,
                    std::span<const Path> paths) {
  encoder.validate();
  Matrix out(static_cast<Eigen::Index>(paths.size()), encoder.output_dim());
  parallel_for(paths.size(), [&](std::size_t i) {
    out.row(static_cast<Eigen::Index>(i)) = encode(encoder, initial_view(g, f, paths[i]));
  });
  return out;
}

double pair_accuracy(const Model& model, const Graph& g, const FeatureTable& f, std::span<const Path> paths,
                     std::span<const NegativeSet> negatives) {
  if (negatives.size() != paths.size()) throw Error(ErrorCode::kInvalidArgument, "one negative set per path expected");
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Matrix view = initial_view(g, f, paths[i]);
    const RowVector p = encode(model.encoder, view);
    correct += score_path_view(model.path_path, p, view) > 0.5 ? 1 : 0;
    ++total;
    for (const auto& n : negatives[i].negatives) {
      if (n.kind != NegativeKind::kRandom) continue;
      const RowVector q = encode(model.encoder, initial_view(g, f, n.path));
      correct += score_path_path(model.path_path, p, q) < 0.5 ? 1 : 0;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

void save_checkpoint(const Model& model, const std::string& dir) {
  auto segs = model.named();
  const auto base = segs;
  for (std::size_t i = 0; i < model.adam.m.size() && i < base.size(); ++i)
    segs.emplace_back("adam_m/" + base[i].first, &model.adam.m[i]);
  for (std::size_t i = 0; i < model.adam.v.size() && i < base.size(); ++i)
    segs.emplace_back("adam_v/" + base[i].first, &model.adam.v[i]);
  detail::write_segments(dir, "pim-checkpoint 1",
                         {{"epoch", std::to_string(model.epoch)}, {"adam_step", std::to_string(model.adam.step)}},
                         segs);
}

Model load_checkpoint(const std::string& dir) {
  auto file = detail::read_segments(dir, "pim-checkpoint 1");
  Model model;
  auto take = [&](const std::string& name) -> Matrix {
    auto it = file.segments.find(name);
    if (it == file.segments.end()) throw Error(ErrorCode::kParse, "checkpoint is missing segment '" + name + "'");
    return std::move(it->second);
  };
  auto params = model.named();
  for (auto& [name, m] : params) *m = take(name);
  if (file.segments.count("adam_m/" + params.front().first)) {
    for (const auto& [name, m] : params) {
      model.adam.m.push_back(take("adam_m/" + name));
      model.adam.v.push_back(take("adam_v/" + name));
    }
  }
  for (const auto& [k, v] : file.header) {
    const auto n = detail::parse_int(v);
    if (!n) throw Error(ErrorCode::kParse, "malformed checkpoint header value for '" + k + "'");
    if (k == "epoch") model.epoch = static_cast<int>(*n);
    if (k == "adam_step") model.adam.step = *n;
  }
  model.encoder.validate();
  return model;
}

namespace {

std::vector<std::pair<std::string, Matrix*>> supervised_params(SupervisedModel& m, bool include_encoder) {
  std::vector<std::pair<std::string, Matrix*>> out;
  if (include_encoder) out = m.encoder.named();
  out.emplace_back("head_weight", &m.head_weight);
  out.emplace_back("head_bias", &m.head_bias);
  return out;
}

}  // namespace

SupervisedModel finetune(const EncoderParams& encoder, const Graph& g, const FeatureTable& f,
                         std::span<const Path> paths, std::span<const double> targets, const FinetuneConfig& cfg) {
  if (paths.empty()) throw Error(ErrorCode::kInvalidArgument, "no labeled paths");
  if (paths.size() != targets.size()) throw Error(ErrorCode::kInvalidArgument, "paths and targets differ in length");
  if (cfg.epochs < 1 || cfg.batch_size < 1 || !(cfg.learning_rate > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "invalid fine-tuning configuration");
  encoder.validate();

  SupervisedModel model;
  model.encoder = encoder;
  const auto dout = encoder.output_dim();
  auto rng = make_rng(cfg.seed, 7);
  const double a = std::sqrt(1.0 / static_cast<double>(dout));
  std::uniform_real_distribution<double> dist(-a, a);
  model.head_weight.resize(dout, 1);
  for (Eigen::Index i = 0; i < dout; ++i) model.head_weight(i) = dist(rng);
  model.head_bias = Matrix::Zero(1, 1);

  const double n = static_cast<double>(targets.size());
  model.target_mean = std::accumulate(targets.begin(), targets.end(), 0.0) / n;
  double var = 0.0;
  for (const double t : targets) var += (t - model.target_mean) * (t - model.target_mean);
  var /= n;
  model.target_scale = var > 0.0 ? std::sqrt(var) : 1.0;

  std::vector<Matrix> views(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i) views[i] = initial_view(g, f, paths[i]);

  auto params = supervised_params(model, !cfg.freeze_encoder);
  AdamState adam;
  std::vector<std::size_t> order(paths.size());
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int e = 0; e < cfg.epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto shuffle_rng = make_rng(cfg.seed, 0xf1eeULL + static_cast<std::uint64_t>(e));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      std::vector<std::vector<Matrix>> grads(count);
      parallel_for(count, [&](std::size_t j) {
        const std::size_t id = order[start + j];
        ad::Tape tape;
        const auto enc = bind_encoder(tape, model.encoder, !cfg.freeze_encoder);
        const ad::Var w = tape.variable(model.head_weight);
        const ad::Var b = tape.variable(model.head_bias);
        const ad::Var pred = ad::add(ad::matmul(encode(enc, tape.constant(views[id])), w), b);
        const double target = (targets[id] - model.target_mean) / model.target_scale;
        const ad::Var err = ad::add_scalar(pred, -target);
        const ad::Var loss = ad::mul(err, err);
        tape.backward(loss);
        std::vector<ad::Var> vars;
        if (!cfg.freeze_encoder)
          vars = {enc.w_z, enc.w_r, enc.w_n, enc.u_z, enc.u_r, enc.u_n, enc.b_z, enc.b_r, enc.b_n, enc.readout};
        vars.push_back(w);
        vars.push_back(b);
        grads[j] = collect_grads(vars);
      });
      std::vector<Matrix> total = std::move(grads[0]);
      for (std::size_t j = 1; j < count; ++j)
        for (std::size_t p = 0; p < total.size(); ++p) total[p] += grads[j][p];
      for (auto& t : total) t /= static_cast<double>(count);
      if (!all_finite(total)) throw Error(ErrorCode::kNumeric, "non-finite gradient during fine-tuning");
      adam_step(params, adam, total, cfg.learning_rate, 0.9, 0.999, 1e-8, -1.0);
    }
  }
  return model;
}

std::vector<double> predict(const SupervisedModel& model, const Graph& g, const FeatureTable& f,
                            std::span<const Path> paths) {
  std::vector<double> out(paths.size());
  parallel_for(paths.size(), [&](std::size_t i) {
    const RowVector p = encode(model.encoder, initial_view(g, f, paths[i]));
    const double z = (p * model.head_weight).value() + model.head_bias(0, 0);
    out[i] = z * model.target_scale + model.target_mean;
  });
  return out;
}

void save_supervised(const SupervisedModel& model, const std::string& dir) {
  auto& mut = const_cast<SupervisedModel&>(model);
  std::vector<std::pair<std::string, const Matrix*>> segs;
  for (const auto& [name, m] : supervised_params(mut, true)) segs.emplace_back(name, m);
  detail::write_segments(dir, "pim-supervised 1",
                         {{"target_mean", detail::format_double(model.target_mean)},
                          {"target_scale", detail::format_double(model.target_scale)}},
                         segs);
}

SupervisedModel load_supervised(const std::string& dir) {
  auto file = detail::read_segments(dir, "pim-supervised 1");
  SupervisedModel model;
  for (auto& [name, m] : supervised_params(model, true)) {
    auto it = file.segments.find(name);
    if (it == file.segments.end()) throw Error(ErrorCode::kParse, "supervised model is missing segment '" + name + "'");
    *m = std::move(it->second);
  }
  for (const auto& [k, v] : file.header) {
    const auto x = detail::parse_double(v);
    if (!x) throw Error(ErrorCode::kParse, "malformed header value for '" + k + "'");
    if (k == "target_mean") model.target_mean = *x;
    if (k == "target_scale") model.target_scale = *x;
  }
  model.encoder.validate();
  return model;
}

}  // namespace pim
