// Command-line driver. Every stage reads and writes plain files and leaves a
// JSON manifest (resolved config, seeds, file digests, timings) next to its
// outputs.
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pim/pim.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int kUsageExit = 64;
constexpr int kSoftwareExit = 70;

struct StatusError : std::runtime_error {
  pim_status status;
  std::int64_t detail;
  StatusError(pim_status s, std::string msg, std::int64_t d) : std::runtime_error(std::move(msg)), status(s), detail(d) {}
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(pim_status s) {
  if (s != PIM_OK) throw StatusError(s, pim_last_error(), pim_last_error_detail());
}

// RAII wrapper for library handles.
template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using GraphH = Handle<pim_graph, pim_graph_free>;
using FeaturesH = Handle<pim_features, pim_features_free>;
using PathsH = Handle<pim_paths, pim_paths_free>;
using NegativesH = Handle<pim_negatives, pim_negatives_free>;
using ModelH = Handle<pim_model, pim_model_free>;
using MatrixH = Handle<pim_matrix, pim_matrix_free>;
using SupervisedH = Handle<pim_supervised, pim_supervised_free>;

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + p.string() + "' for hashing");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

// A file digests to its hash; a directory to {relative file: hash}.
json digest(const std::string& path) {
  const fs::path p(path);
  if (fs::is_directory(p)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(p))
      if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    json out = json::object();
    for (const auto& f : files) out[fs::relative(f, p).generic_string()] = sha256_file(f);
    return out;
  }
  return sha256_file(p);
}

struct Run {
  std::string subcommand;
  CLI::App* app = nullptr;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::string manifest_path;
  std::uint64_t seed = 0;
  json extra = json::object();
};

json resolved_config(const CLI::App& app) {
  json cfg = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "help-all" || name == "config") continue;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      cfg[name] = r.empty() ? std::string("true") : r.back();
    } else {
      cfg[name] = opt->get_default_str();
    }
  }
  return cfg;
}

void write_manifest(const Run& run, double seconds) {
  json m;
  m["tool"] = "pim";
  m["version"] = pim_version();
  m["subcommand"] = run.subcommand;
  m["config"] = resolved_config(*run.app);
  m["seed"] = run.seed;
  json in = json::object(), out = json::object();
  for (const auto& p : run.inputs) in[p] = digest(p);
  for (const auto& p : run.outputs) out[p] = digest(p);
  m["inputs"] = in;
  m["outputs"] = out;
  m["timings"] = {{"wall_seconds", seconds}};
  if (!run.extra.empty()) m["results"] = run.extra;
  std::ofstream f(run.manifest_path);
  if (!f) throw UsageError("cannot write manifest '" + run.manifest_path + "'");
  f << m.dump(2) << '\n';
}

std::string manifest_for_file(const std::string& out) { return out + ".manifest.json"; }
std::string manifest_for_dir(const std::string& dir) { return (fs::path(dir) / "manifest.json").string(); }

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::pair<int, int> parse_grid(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t a = 0, b = 0;
    const int w = std::stoi(s.substr(0, x), &a);
    const int h = std::stoi(s.substr(x + 1), &b);
    if (a != x || b != s.size() - x - 1) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::exception&) {
    throw UsageError("--grid expects WxH, got '" + s + "'");
  }
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoull(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw UsageError("--seeds expects a comma-separated list of integers, got '" + s + "'");
    }
  }
  if (out.empty()) throw UsageError("--seeds is empty");
  return out;
}

pim_mi_mode parse_mi(const std::string& s) {
  if (s == "joint") return PIM_MI_JOINT;
  if (s == "global") return PIM_MI_GLOBAL;
  if (s == "local") return PIM_MI_LOCAL;
  throw UsageError("unknown --mi-mode '" + s + "'");
}

pim_strategy parse_strategy(const std::string& s) {
  if (s == "curriculum") return PIM_STRATEGY_CURRICULUM;
  if (s == "random") return PIM_STRATEGY_RANDOM;
  if (s == "topk") return PIM_STRATEGY_TOPK;
  throw UsageError("unknown --strategy '" + s + "'");
}

pim_regressor parse_regressor(const std::string& s) {
  if (s == "ridge") return PIM_REGRESSOR_RIDGE;
  if (s == "gp") return PIM_REGRESSOR_GP;
  throw UsageError("unknown --regressor '" + s + "'");
}

// Reads `key=value` lines, or the "config" object of a manifest, and turns
// them into --key=value arguments.
std::vector<std::string> config_args(const std::string& path, const std::string& subcommand) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::string> args;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json m;
    try {
      m = json::parse(text);
    } catch (const json::exception& e) {
      throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (m.contains("subcommand") && m["subcommand"] != subcommand)
      throw UsageError("manifest '" + path + "' belongs to subcommand '" + m["subcommand"].get<std::string>() + "'");
    const json cfg = m.value("config", json::object());
    for (const auto& [k, v] : cfg.items())
      args.push_back("--" + k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()));
    return args;
  }
  std::stringstream lines(text);
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(n) + ": expected key=value");
    auto key = line.substr(0, eq);
    auto val = line.substr(eq + 1);
    key.erase(key.find_last_not_of(" \t") + 1);
    val.erase(0, val.find_first_not_of(" \t"));
    args.push_back("--" + key + "=" + val);
  }
  return args;
}

void print_metrics_table(const pim_regression_metrics& r, const pim_rank_metrics* rank) {
  std::cout << std::left << std::setw(10) << "metric" << "value\n";
  std::cout << std::setw(10) << "MAE" << r.mae << '\n';
  std::cout << std::setw(10) << "MARE" << r.mare << '\n';
  std::cout << std::setw(10) << "MAPE" << r.mape << '\n';
  if (rank) {
    if (rank->groups_used == 0) {
      std::cout << std::setw(10) << "tau" << "n/a\n" << std::setw(10) << "rho" << "n/a\n";
    } else {
      std::cout << std::setw(10) << "tau" << rank->kendall_tau << '\n';
      std::cout << std::setw(10) << "rho" << rank->spearman_rho << '\n';
    }
    std::cout << std::setw(10) << "groups" << rank->groups_used << " used, " << rank->groups_skipped << " skipped\n";
  }
}

void write_metrics_csv(const std::string& path, const pim_regression_metrics& r, const pim_rank_metrics* rank) {
  ensure_parent(path);
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << std::setprecision(17) << "mae,mare,mape,mape_excluded";
  if (rank) f << ",kendall_tau,spearman_rho,groups_used,groups_skipped";
  f << '\n' << r.mae << ',' << r.mare << ',' << r.mape << ',' << r.mape_excluded;
  if (rank) f << ',' << rank->kendall_tau << ',' << rank->spearman_rho << ',' << rank->groups_used << ',' << rank->groups_skipped;
  f << '\n';
}

json metrics_json(const pim_regression_metrics& r) {
  return {{"mae", r.mae}, {"mare", r.mare}, {"mape", r.mape}, {"mape_excluded", r.mape_excluded}};
}

int emit_error(const std::string& kind, std::int64_t detail, const std::string& message, int code) {
  json e = {{"error", kind}, {"detail", detail}, {"message", message}};
  std::cerr << e.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Path InfoMax: unsupervised path representations on road networks"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  int threads = 0;
  app.add_option("--threads", threads, "Cap on worker threads (PIM_THREADS also applies)");

  Run run;
  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key=value file or a manifest.json; flags override it");
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic road network, path corpus and labels");
  pim_synth_config sc;
  pim_synth_config_default(&sc);
  std::string grid = std::to_string(sc.grid_width) + "x" + std::to_string(sc.grid_height), topology = "grid",
              synth_out;
  synth->add_option("--grid", grid, "Grid size WxH")->capture_default_str();
  synth->add_option("--topology", topology, "grid | geometric")->check(CLI::IsMember({"grid", "geometric"}));
  synth->add_option("--nodes", sc.geometric_nodes, "Node count for geometric graphs");
  synth->add_option("--radius", sc.geometric_radius, "Connection radius for geometric graphs");
  synth->add_option("--base-length", sc.base_length, "Base road length (m)");
  synth->add_option("--length-noise", sc.length_noise, "Relative length perturbation eta");
  synth->add_option("--speed", sc.base_speed, "Base speed (m/s)");
  synth->add_option("--arterial-factor", sc.arterial_factor, "Speed multiplier on arterial roads");
  synth->add_option("--speed-noise", sc.speed_noise, "Relative speed perturbation");
  synth->add_option("--paths", sc.num_paths, "Number of corpus paths");
  synth->add_option("--min-hops", sc.min_hops, "Minimum hops of a shortest path");
  synth->add_option("--detour", sc.detour_factor, "Detour factor bound for path variants");
  synth->add_option("--variants", sc.max_variants, "Paths per OD pair (shortest included)");
  synth->add_option("--label-noise", sc.label_noise, "Multiplicative travel-time noise sigma");
  synth->add_option("--temperature", sc.temperature, "Ranking-score temperature (s)");
  synth->add_option("--seed", sc.seed, "Seed");
  synth->add_option("--out", synth_out, "Output directory")->required();
  add_config(synth);

  // features
  auto* features = app.add_subcommand("features", "Train node2vec-style node features");
  pim_feature_config fc;
  pim_feature_config_default(&fc);
  std::string feat_graph, feat_out;
  features->add_option("--graph", feat_graph, "Graph file")->required();
  features->add_option("--out", feat_out, "Feature file to write")->required();
  features->add_option("--walks-per-node", fc.walks_per_node, "Walks per node (r)");
  features->add_option("--walk-length", fc.walk_length, "Walk length (l)");
  features->add_option("--p", fc.return_bias, "Return bias p");
  features->add_option("--q", fc.inout_bias, "In-out bias q");
  features->add_option("--dim", fc.dim, "Feature dimension D");
  features->add_option("--window", fc.window, "Skip-gram window");
  features->add_option("--negatives", fc.negatives, "Negative samples per pair");
  features->add_option("--epochs", fc.epochs, "Passes over the walks");
  features->add_option("--lr", fc.learning_rate, "Initial learning rate");
  features->add_option("--seed", fc.seed, "Seed");
  add_config(features);

  // negatives
  auto* negatives = app.add_subcommand("negatives", "Sample curriculum negative paths");
  pim_negative_config nc;
  pim_negative_config_default(&nc);
  std::string neg_graph, neg_paths, neg_out, neg_strategy = "curriculum";
  int neg_diversified = -1;
  negatives->add_option("--graph", neg_graph, "Graph file")->required();
  negatives->add_option("--paths", neg_paths, "Path corpus")->required();
  negatives->add_option("--out", neg_out, "Negative-set file to write")->required();
  negatives->add_option("-K,--num-negatives", nc.num_negatives, "Negatives per path");
  negatives->add_option("--random", nc.num_random, "Random negatives (curriculum)");
  negatives->add_option("--diversified", neg_diversified, "Diversified negatives (curriculum); -1 = K - random");
  negatives->add_option("--tau-low", nc.tau_low, "Lowest diversity threshold");
  negatives->add_option("--tau-high", nc.tau_high, "Highest diversity threshold");
  negatives->add_option("--max-candidates", nc.max_candidates, "Shortest paths inspected per OD pair");
  negatives->add_option("--strategy", neg_strategy, "curriculum | random | topk");
  negatives->add_option("--seed", nc.seed, "Seed");
  add_config(negatives);

  // train
  auto* train = app.add_subcommand("train", "Train the path encoder and discriminators");
  pim_train_config tc;
  pim_train_config_default(&tc);
  std::string tr_graph, tr_features, tr_paths, tr_negatives, tr_out, tr_curriculum = "staged", tr_mi = "joint";
  train->add_option("--graph", tr_graph, "Graph file")->required();
  train->add_option("--features", tr_features, "Node feature file")->required();
  train->add_option("--paths", tr_paths, "Path corpus")->required();
  train->add_option("--negatives", tr_negatives, "Negative-set file")->required();
  train->add_option("--out", tr_out, "Checkpoint directory")->required();
  train->add_option("--epochs", tc.epochs, "Epochs");
  train->add_option("--batch-size", tc.batch_size, "Batch size");
  train->add_option("--lr", tc.learning_rate, "Adam learning rate");
  train->add_option("--hidden", tc.hidden_dim, "Hidden size H");
  train->add_option("--output-dim", tc.output_dim, "Representation size D'");
  train->add_option("-K,--num-negatives", tc.num_negatives, "Negatives per path used by the curriculum");
  train->add_option("--curriculum", tr_curriculum, "staged | all")->check(CLI::IsMember({"staged", "all"}));
  train->add_option("--mi-mode", tr_mi, "joint | global | local");
  train->add_option("--seed", tc.seed, "Seed");
  add_config(train);

  // embed
  auto* embed = app.add_subcommand("embed", "Embed a path corpus with a trained encoder");
  std::string em_graph, em_features, em_paths, em_model, em_out;
  bool em_mean = false;
  embed->add_option("--graph", em_graph, "Graph file")->required();
  embed->add_option("--features", em_features, "Node feature file")->required();
  embed->add_option("--paths", em_paths, "Path corpus")->required();
  embed->add_option("--model", em_model, "Checkpoint directory");
  embed->add_flag("--mean-features", em_mean, "Mean of node features instead of the encoder (baseline)");
  embed->add_option("--out", em_out, "Embedding file to write")->required();
  add_config(embed);

  // eval
  auto* eval = app.add_subcommand("eval", "Score predictions, or regress labels from embeddings and score them");
  std::string ev_pred, ev_truth, ev_embeddings, ev_labels, ev_pred_out, ev_out, ev_regressor = "gp";
  double ev_lambda = 1e-3;
  std::uint64_t ev_split_seed = 7;
  eval->add_option("--pred", ev_pred, "Prediction label file");
  eval->add_option("--truth", ev_truth, "Ground-truth label file");
  eval->add_option("--embeddings", ev_embeddings, "Embedding file (regression mode)");
  eval->add_option("--labels", ev_labels, "Label file (regression mode)");
  eval->add_option("--pred-out", ev_pred_out, "Where to write regression predictions");
  eval->add_option("--regressor", ev_regressor, "ridge | gp");
  eval->add_option("--lambda", ev_lambda, "Ridge penalty");
  eval->add_option("--split-seed", ev_split_seed, "Seed of the 85/10/5 split");
  eval->add_option("--out", ev_out, "Metrics CSV to write")->required();
  add_config(eval);

  // finetune
  auto* finetune = app.add_subcommand("finetune", "Supervised travel-time model, optionally PIM-initialized");
  pim_finetune_config ftc;
  pim_finetune_config_default(&ftc);
  std::string ft_graph, ft_features, ft_paths, ft_labels, ft_model, ft_out;
  double ft_fraction = 1.0;
  std::uint64_t ft_split_seed = 7;
  finetune->add_option("--graph", ft_graph, "Graph file")->required();
  finetune->add_option("--features", ft_features, "Node feature file")->required();
  finetune->add_option("--paths", ft_paths, "Path corpus")->required();
  finetune->add_option("--labels", ft_labels, "Travel-time label file")->required();
  finetune->add_option("--model", ft_model, "PIM checkpoint to start from (cold start when absent)");
  finetune->add_option("--out", ft_out, "Supervised model directory")->required();
  finetune->add_option("--epochs", ftc.epochs, "Epochs");
  finetune->add_option("--batch-size", ftc.batch_size, "Batch size");
  finetune->add_option("--lr", ftc.learning_rate, "Adam learning rate");
  finetune->add_option("--freeze", ftc.freeze_encoder, "Train the head only (0/1)");
  finetune->add_option("--label-fraction", ft_fraction, "Fraction of the training labels used");
  finetune->add_option("--split-seed", ft_split_seed, "Seed of the 85/10/5 split");
  finetune->add_option("--hidden", ftc.hidden_dim, "Hidden size for cold starts");
  finetune->add_option("--output-dim", ftc.output_dim, "Representation size for cold starts");
  finetune->add_option("--seed", ftc.seed, "Seed");
  add_config(finetune);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run an ablation axis on the synthetic corpus");
  pim_ablation_config ac;
  pim_ablation_config_default(&ac);
  std::string ab_axis, ab_out, ab_seeds = "1,2,3", ab_regressor = ac.regressor == PIM_REGRESSOR_GP ? "gp" : "ridge";
  std::string ab_grid = std::to_string(ac.synth.grid_width) + "x" + std::to_string(ac.synth.grid_height);
  ablate->add_option("--axis", ab_axis, "mi-mode | sampling-strategy | K | baseline")
      ->required()
      ->check(CLI::IsMember({"mi-mode", "sampling-strategy", "K", "baseline"}));
  ablate->add_option("--out", ab_out, "Comparison table (CSV) to write")->required();
  ablate->add_option("--seeds", ab_seeds, "Comma-separated training seeds");
  ablate->add_option("--grid", ab_grid, "Grid size WxH");
  ablate->add_option("--paths", ac.synth.num_paths, "Number of corpus paths");
  ablate->add_option("--data-seed", ac.synth.seed, "Seed of the synthetic corpus and features");
  ablate->add_option("--dim", ac.features.dim, "Node feature dimension D");
  ablate->add_option("--epochs", ac.train.epochs, "Training epochs");
  ablate->add_option("--hidden", ac.train.hidden_dim, "Hidden size H");
  ablate->add_option("--output-dim", ac.train.output_dim, "Representation size D'");
  ablate->add_option("--lr", ac.train.learning_rate, "Adam learning rate");
  ablate->add_option("--regressor", ab_regressor, "ridge | gp");
  ablate->add_option("--lambda", ac.ridge_lambda, "Ridge penalty");
  ablate->add_option("--split-seed", ac.split_seed, "Seed of the 85/10/5 split");
  add_config(ablate);

  // Splice config-file values in front of the command-line flags so the
  // latter win under the take-last policy.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string sub;
    std::size_t sub_pos = 0;
    for (std::size_t i = 0; i < args.size() && sub.empty(); ++i)
      for (const CLI::App* s : app.get_subcommands({}))
        if (s->get_name() == args[i]) {
          sub = args[i];
          sub_pos = i;
        }
    for (std::size_t i = sub_pos; !sub.empty() && i < args.size(); ++i) {
      std::string file;
      if (args[i] == "--config" && i + 1 < args.size()) file = args[i + 1];
      else if (args[i].rfind("--config=", 0) == 0) file = args[i].substr(9);
      if (file.empty()) continue;
      const auto extra = config_args(file, sub);
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, extra.begin(), extra.end());
      break;
    }
  } catch (const UsageError& e) {
    return emit_error("usage", 0, e.what(), kUsageExit);
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    return emit_error("usage", 0, e.what(), kUsageExit);
  }

  if (threads > 0) pim_set_max_threads(threads);

  try {
    if (synth->parsed()) {
      run.subcommand = "synth";
      run.app = synth;
      std::tie(sc.grid_width, sc.grid_height) = parse_grid(grid);
      sc.geometric = topology == "geometric";
      run.seed = sc.seed;
      check(pim_synth_write(&sc, synth_out.c_str()));
      for (const char* f : {"graph.csv", "paths.csv", "travel_times.csv", "rank_scores.csv"})
        run.outputs.push_back((fs::path(synth_out) / f).string());
      run.manifest_path = manifest_for_dir(synth_out);
    } else if (features->parsed()) {
      run.subcommand = "features";
      run.app = features;
      run.seed = fc.seed;
      GraphH g;
      check(pim_graph_load(feat_graph.c_str(), g.out()));
      FeaturesH f;
      check(pim_features_train(g.get(), &fc, f.out()));
      ensure_parent(feat_out);
      check(pim_features_save(f.get(), feat_out.c_str()));
      run.inputs = {feat_graph};
      run.outputs = {feat_out};
      run.manifest_path = manifest_for_file(feat_out);
    } else if (negatives->parsed()) {
      run.subcommand = "negatives";
      run.app = negatives;
      nc.strategy = parse_strategy(neg_strategy);
      if (neg_diversified >= 0) {
        if (neg_diversified > nc.num_negatives)
          throw UsageError("config conflict: K = " + std::to_string(nc.num_negatives) + " is smaller than the " +
                           std::to_string(neg_diversified) + " requested diversified negatives");
        if (negatives->get_option("--random")->count() > 0 && nc.num_random + neg_diversified != nc.num_negatives)
          throw UsageError("config conflict: --random + --diversified must equal K");
        nc.num_random = nc.num_negatives - neg_diversified;
      }
      if (nc.num_random > nc.num_negatives)
        throw UsageError("config conflict: --random " + std::to_string(nc.num_random) + " exceeds K = " +
                         std::to_string(nc.num_negatives));
      run.seed = nc.seed;
      GraphH g;
      check(pim_graph_load(neg_graph.c_str(), g.out()));
      PathsH p;
      check(pim_paths_load(g.get(), neg_paths.c_str(), p.out()));
      NegativesH n;
      check(pim_negatives_sample(g.get(), p.get(), &nc, n.out()));
      ensure_parent(neg_out);
      check(pim_negatives_save(g.get(), n.get(), neg_out.c_str()));
      run.inputs = {neg_graph, neg_paths};
      run.outputs = {neg_out};
      run.extra = {{"sets", pim_negatives_count(n.get())}, {"backfilled", pim_negatives_backfilled(n.get())}};
      run.manifest_path = manifest_for_file(neg_out);
    } else if (train->parsed()) {
      run.subcommand = "train";
      run.app = train;
      tc.mi_mode = parse_mi(tr_mi);
      tc.curriculum = tr_curriculum == "all" ? PIM_CURRICULUM_ALL : PIM_CURRICULUM_STAGED;
      run.seed = tc.seed;
      GraphH g;
      check(pim_graph_load(tr_graph.c_str(), g.out()));
      FeaturesH f;
      check(pim_features_load(tr_features.c_str(), f.out()));
      PathsH p;
      check(pim_paths_load(g.get(), tr_paths.c_str(), p.out()));
      NegativesH n;
      check(pim_negatives_load(g.get(), tr_negatives.c_str(), n.out()));
      fs::create_directories(tr_out);
      const std::string trace = (fs::path(tr_out) / "loss_trace.csv").string();
      tc.loss_trace_path = trace.c_str();
      ModelH m;
      check(pim_train(&tc, g.get(), f.get(), p.get(), n.get(), m.out()));
      check(pim_model_save(m.get(), tr_out.c_str()));
      double acc = 0.0;
      check(pim_model_pair_accuracy(m.get(), g.get(), f.get(), p.get(), n.get(), &acc));
      run.inputs = {tr_graph, tr_features, tr_paths, tr_negatives};
      run.outputs = {tr_out};
      run.extra = {{"pair_accuracy", acc}, {"epochs", pim_model_epoch(m.get())}};
      run.manifest_path = manifest_for_dir(tr_out);
    } else if (embed->parsed()) {
      run.subcommand = "embed";
      run.app = embed;
      if (em_mean == !em_model.empty()) throw UsageError("give exactly one of --model and --mean-features");
      GraphH g;
      check(pim_graph_load(em_graph.c_str(), g.out()));
      FeaturesH f;
      check(pim_features_load(em_features.c_str(), f.out()));
      PathsH p;
      check(pim_paths_load(g.get(), em_paths.c_str(), p.out()));
      MatrixH e;
      if (em_mean) {
        check(pim_embed_mean_features(g.get(), f.get(), p.get(), e.out()));
      } else {
        ModelH m;
        check(pim_model_load(em_model.c_str(), m.out()));
        check(pim_embed(m.get(), g.get(), f.get(), p.get(), e.out()));
        run.inputs.push_back(em_model);
      }
      ensure_parent(em_out);
      check(pim_matrix_save(e.get(), em_out.c_str()));
      run.inputs.insert(run.inputs.end(), {em_graph, em_features, em_paths});
      run.outputs = {em_out};
      run.manifest_path = manifest_for_file(em_out);
    } else if (eval->parsed()) {
      run.subcommand = "eval";
      run.app = eval;
      const bool files_mode = !ev_pred.empty() || !ev_truth.empty();
      const bool regress_mode = !ev_embeddings.empty() || !ev_labels.empty();
      if (files_mode == regress_mode)
        throw UsageError("give either --pred/--truth or --embeddings/--labels");
      pim_regression_metrics reg{};
      pim_rank_metrics rank{};
      int has_rank = 0;
      if (files_mode) {
        if (ev_pred.empty() || ev_truth.empty()) throw UsageError("--pred and --truth go together");
        check(pim_eval_label_files(ev_pred.c_str(), ev_truth.c_str(), &reg, &rank, &has_rank));
        run.inputs = {ev_pred, ev_truth};
      } else {
        if (ev_embeddings.empty() || ev_labels.empty()) throw UsageError("--embeddings and --labels go together");
        run.seed = ev_split_seed;
        MatrixH e;
        check(pim_matrix_load(ev_embeddings.c_str(), e.out()));
        const std::string pred_out = ev_pred_out.empty() ? ev_out + ".pred.csv" : ev_pred_out;
        ensure_parent(pred_out);
        check(pim_regress_labels(e.get(), ev_labels.c_str(), parse_regressor(ev_regressor), ev_lambda, ev_split_seed,
                                 pred_out.c_str(), &reg, &rank, &has_rank));
        run.inputs = {ev_embeddings, ev_labels};
        run.outputs.push_back(pred_out);
      }
      write_metrics_csv(ev_out, reg, has_rank ? &rank : nullptr);
      print_metrics_table(reg, has_rank ? &rank : nullptr);
      run.outputs.push_back(ev_out);
      run.extra = metrics_json(reg);
      run.manifest_path = manifest_for_file(ev_out);
    } else if (finetune->parsed()) {
      run.subcommand = "finetune";
      run.app = finetune;
      run.seed = ftc.seed;
      GraphH g;
      check(pim_graph_load(ft_graph.c_str(), g.out()));
      FeaturesH f;
      check(pim_features_load(ft_features.c_str(), f.out()));
      PathsH p;
      check(pim_paths_load(g.get(), ft_paths.c_str(), p.out()));
      ModelH m;
      if (!ft_model.empty()) check(pim_model_load(ft_model.c_str(), m.out()));
      SupervisedH s;
      pim_regression_metrics heldout{};
      check(pim_finetune(m.get(), g.get(), f.get(), p.get(), ft_labels.c_str(), ft_split_seed, ft_fraction, &ftc,
                         s.out(), &heldout));
      check(pim_supervised_save(s.get(), ft_out.c_str()));
      print_metrics_table(heldout, nullptr);
      run.inputs = {ft_graph, ft_features, ft_paths, ft_labels};
      if (!ft_model.empty()) run.inputs.push_back(ft_model);
      run.outputs = {ft_out};
      run.extra = {{"heldout", metrics_json(heldout)}};
      run.manifest_path = manifest_for_dir(ft_out);
    } else if (ablate->parsed()) {
      run.subcommand = "ablate";
      run.app = ablate;
      std::tie(ac.synth.grid_width, ac.synth.grid_height) = parse_grid(ab_grid);
      const auto seeds = parse_seeds(ab_seeds);
      ac.seeds = seeds.data();
      ac.num_seeds = seeds.size();
      ac.regressor = parse_regressor(ab_regressor);
      ac.features.seed = ac.synth.seed;
      run.seed = ac.synth.seed;
      const pim_axis axis = ab_axis == "mi-mode"             ? PIM_AXIS_MI_MODE
                            : ab_axis == "sampling-strategy" ? PIM_AXIS_STRATEGY
                            : ab_axis == "K"                 ? PIM_AXIS_NEGATIVES
                                                             : PIM_AXIS_BASELINE;
      ensure_parent(ab_out);
      check(pim_ablate(&ac, axis, ab_out.c_str()));
      std::ifstream table(ab_out);
      std::string line;
      std::cout << "axis " << ab_axis << " (held-out travel-time MAE, " << ab_regressor << ")\n";
      while (std::getline(table, line)) {
        std::replace(line.begin(), line.end(), ',', '\t');
        std::cout << line << '\n';
      }
      run.outputs = {ab_out};
      run.manifest_path = manifest_for_file(ab_out);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_manifest(run, secs);
  } catch (const StatusError& e) {
    return emit_error(pim_status_name(e.status), e.detail, e.what(), static_cast<int>(e.status));
  } catch (const UsageError& e) {
    return emit_error("usage", 0, e.what(), kUsageExit);
  } catch (const std::exception& e) {
    return emit_error("internal", 0, e.what(), kSoftwareExit);
  }
  return 0;
}
