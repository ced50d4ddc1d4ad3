#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pim/graph.hpp"

namespace pim {

enum class RegressorKind { kRidge, kGaussianProcess };

const char* to_string(RegressorKind k);
RegressorKind parse_regressor_kind(const std::string& s);

struct RegressorHyper {
  double ridge_lambda = 1e-3;
  // GP defaults when unset: gamma = 1 / median pairwise squared distance,
  // noise = 0.01 * var(y).
  std::optional<double> gp_gamma;
  std::optional<double> gp_noise;
};

class Regressor {
 public:
  RegressorKind kind() const noexcept { return kind_; }
  double predict(const RowVector& x) const;
  std::vector<double> predict(const Matrix& xs) const;

  // Ridge: weights and intercept. GP: bandwidth and noise actually used.
  const Vector& weights() const noexcept { return weights_; }
  double intercept() const noexcept { return intercept_; }
  double gamma() const noexcept { return gamma_; }
  double noise() const noexcept { return noise_; }

 private:
  friend Regressor fit(RegressorKind, const Matrix&, std::span<const double>, const RegressorHyper&);

  RegressorKind kind_ = RegressorKind::kRidge;
  Vector weights_;
  double intercept_ = 0.0;
  // GP state: predictions are mean(y) + k(x, X) alpha.
  Matrix train_x_;
  Vector alpha_;
  double gamma_ = 0.0;
  double noise_ = 0.0;
};

// Ridge solves (Xc'Xc + lambda I) w = Xc'yc on centered data and adds the
// intercept back. GP uses an RBF kernel exp(-gamma |a-b|^2) around the
// target mean; K + noise I must be positive definite. Throws kSingular for a
// rank-deficient ridge system at lambda = 0 or a GP factorization failure.
Regressor fit(RegressorKind kind, const Matrix& x, std::span<const double> y, const RegressorHyper& hyper = {});

struct RegressionMetrics {
  double mae = 0.0;
  double mare = 0.0;
  double mape = 0.0;  // percent, over nonzero truths
  std::size_t mape_excluded = 0;
};

RegressionMetrics metrics(std::span<const double> pred, std::span<const double> truth);

struct RankMetrics {
  double kendall_tau = 0.0;
  double spearman_rho = 0.0;
  std::size_t groups_used = 0;
  std::size_t groups_skipped = 0;  // singletons or all-tied groups
};

// Tie-adjusted Kendall tau-b; nullopt when either side is constant.
std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b);
// Pearson correlation of average ranks; nullopt when either side is constant.
std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b);

// Per-group coefficients averaged over groups with >= 2 paths.
RankMetrics rank_metrics(std::span<const double> pred, std::span<const double> truth,
                         std::span<const std::int64_t> groups);

struct Split {
  std::vector<std::size_t> train, validation, test;
};

// Seeded shuffle into floor(0.85 n) / floor(0.10 n) / rest.
Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction = 0.85,
                    double validation_fraction = 0.10);

// Label files.
struct TravelTimeLabel {
  std::size_t path_id;
  double seconds;
};
struct RankLabel {
  std::size_t path_id;
  std::int64_t group_id;
  double score;
};

void save_travel_times(std::span<const TravelTimeLabel> labels, std::ostream& out);
void save_travel_times_file(std::span<const TravelTimeLabel> labels, const std::string& path);
std::vector<TravelTimeLabel> load_travel_times(std::istream& in);
std::vector<TravelTimeLabel> load_travel_times_file(const std::string& path);

void save_rank_labels(std::span<const RankLabel> labels, std::ostream& out);
void save_rank_labels_file(std::span<const RankLabel> labels, const std::string& path);
std::vector<RankLabel> load_rank_labels(std::istream& in);
std::vector<RankLabel> load_rank_labels_file(const std::string& path);

}  // namespace pim
