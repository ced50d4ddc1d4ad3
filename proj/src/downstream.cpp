#include "pim/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "pim/error.hpp"
#include "pim/rng.hpp"
#include "text_util.hpp"

namespace pim {

const char* to_string(RegressorKind k) { return k == RegressorKind::kRidge ? "ridge" : "gp"; }

RegressorKind parse_regressor_kind(const std::string& s) {
  if (s == "ridge") return RegressorKind::kRidge;
  if (s == "gp" || s == "gaussian-process") return RegressorKind::kGaussianProcess;
  throw Error(ErrorCode::kInvalidArgument, "unknown regressor '" + s + "'");
}

namespace {

double sq_dist(const RowVector& a, const RowVector& b) { return (a - b).squaredNorm(); }

}  // namespace

double Regressor::predict(const RowVector& x) const {
  if (kind_ == RegressorKind::kRidge) {
    if (x.size() != weights_.size()) throw Error(ErrorCode::kShapeMismatch, "input dimension mismatch");
    return intercept_ + x.dot(weights_.transpose());
  }
  if (x.size() != train_x_.cols()) throw Error(ErrorCode::kShapeMismatch, "input dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < train_x_.rows(); ++i)
    acc += std::exp(-gamma_ * sq_dist(x, train_x_.row(i))) * alpha_(i);
  return intercept_ + acc;
}

std::vector<double> Regressor::predict(const Matrix& xs) const {
  std::vector<double> out(static_cast<std::size_t>(xs.rows()));
  for (Eigen::Index i = 0; i < xs.rows(); ++i) out[static_cast<std::size_t>(i)] = predict(RowVector(xs.row(i)));
  return out;
}

Regressor fit(RegressorKind kind, const Matrix& x, std::span<const double> y, const RegressorHyper& hyper) {
  const auto n = x.rows();
  if (n != static_cast<Eigen::Index>(y.size())) throw Error(ErrorCode::kShapeMismatch, "X and y differ in length");
  if (n < 2) throw Error(ErrorCode::kInvalidArgument, "need at least 2 training rows");
  if (!x.allFinite()) throw Error(ErrorCode::kNumeric, "training inputs are not finite");
  const Vector yv = Eigen::Map<const Vector>(y.data(), n);
  const double ymean = yv.mean();

  Regressor r;
  r.kind_ = kind;
  if (kind == RegressorKind::kRidge) {
    const RowVector xmean = x.colwise().mean();
    const Matrix xc = x.rowwise() - xmean;
    const Vector yc = yv.array() - ymean;
    if (hyper.ridge_lambda < 0.0) throw Error(ErrorCode::kInvalidArgument, "ridge lambda must be >= 0");
    if (hyper.ridge_lambda == 0.0) {
      Eigen::ColPivHouseholderQR<Matrix> qr(xc);
      if (qr.rank() < xc.cols()) throw Error(ErrorCode::kSingular, "ridge system is singular (collinear inputs, lambda = 0)");
      r.weights_ = qr.solve(yc);
    } else {
      Matrix a = xc.transpose() * xc;
      a.diagonal().array() += hyper.ridge_lambda;
      Eigen::LLT<Matrix> llt(a);
      if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSingular, "ridge normal matrix is not positive definite");
      r.weights_ = llt.solve(xc.transpose() * yc);
    }
    r.intercept_ = ymean - xmean.dot(r.weights_.transpose());
    return r;
  }

  double gamma = 0.0;
  if (hyper.gp_gamma) {
    gamma = *hyper.gp_gamma;
  } else {
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) d.push_back(sq_dist(x.row(i), x.row(j)));
    const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    gamma = *mid > 0.0 ? 1.0 / *mid : 1.0;
  }
  double noise = 0.0;
  if (hyper.gp_noise) {
    noise = *hyper.gp_noise;
  } else {
    const double var = (yv.array() - ymean).square().mean();
    noise = var > 0.0 ? 0.01 * var : 1e-6;
  }
  if (!(gamma >= 0.0) || !(noise >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "GP hyperparameters must be >= 0");

  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0 + noise;
    for (Eigen::Index j = i + 1; j < n; ++j) k(i, j) = k(j, i) = std::exp(-gamma * sq_dist(x.row(i), x.row(j)));
  }
  Eigen::LLT<Matrix> llt(k);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kSingular, "GP kernel matrix is not positive definite");
  r.alpha_ = llt.solve(Vector(yv.array() - ymean));
  r.train_x_ = x;
  r.intercept_ = ymean;
  r.gamma_ = gamma;
  r.noise_ = noise;
  return r;
}

RegressionMetrics metrics(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size()) throw Error(ErrorCode::kShapeMismatch, "prediction and truth lengths differ");
  if (pred.empty()) throw Error(ErrorCode::kInvalidArgument, "no predictions");
  RegressionMetrics m;
  double abs_err = 0.0, abs_truth = 0.0, pct = 0.0;
  std::size_t pct_count = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = std::abs(pred[i] - truth[i]);
    abs_err += e;
    abs_truth += std::abs(truth[i]);
    if (truth[i] != 0.0) {
      pct += e / std::abs(truth[i]);
      ++pct_count;
    } else {
      ++m.mape_excluded;
    }
  }
  m.mae = abs_err / static_cast<double>(pred.size());
  m.mare = abs_truth > 0.0 ? abs_err / abs_truth : 0.0;
  m.mape = pct_count ? 100.0 * pct / static_cast<double>(pct_count) : 0.0;
  return m;
}

std::optional<double> kendall_tau_b(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeMismatch, "rank inputs differ in length");
  double concordant = 0, discordant = 0, ties_a = 0, ties_b = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const double da = a[i] - a[j], db = b[i] - b[j];
      if (da == 0.0) ties_a += 1;
      if (db == 0.0) ties_b += 1;
      if (da == 0.0 || db == 0.0) continue;
      if ((da > 0) == (db > 0)) concordant += 1;
      else discordant += 1;
    }
  const double n0 = static_cast<double>(a.size()) * static_cast<double>(a.size() - 1) / 2.0;
  const double denom = std::sqrt((n0 - ties_a) * (n0 - ties_b));
  if (!(denom > 0.0)) return std::nullopt;
  return (concordant - discordant) / denom;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman_rho(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::kShapeMismatch, "rank inputs differ in length");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

RankMetrics rank_metrics(std::span<const double> pred, std::span<const double> truth,
                         std::span<const std::int64_t> groups) {
  if (pred.size() != truth.size() || pred.size() != groups.size())
    throw Error(ErrorCode::kShapeMismatch, "pred, truth and groups differ in length");
  std::vector<std::int64_t> ids(groups.begin(), groups.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  RankMetrics m;
  for (const auto gid : ids) {
    std::vector<double> p, t;
    for (std::size_t i = 0; i < groups.size(); ++i)
      if (groups[i] == gid) {
        p.push_back(pred[i]);
        t.push_back(truth[i]);
      }
    const auto tau = p.size() >= 2 ? kendall_tau_b(p, t) : std::nullopt;
    const auto rho = p.size() >= 2 ? spearman_rho(p, t) : std::nullopt;
    if (!tau || !rho) {
      ++m.groups_skipped;
      continue;
    }
    m.kendall_tau += *tau;
    m.spearman_rho += *rho;
    ++m.groups_used;
  }
  if (m.groups_used) {
    m.kendall_tau /= static_cast<double>(m.groups_used);
    m.spearman_rho /= static_cast<double>(m.groups_used);
  }
  return m;
}

Split split_indices(std::size_t n, std::uint64_t seed, double train_fraction, double validation_fraction) {
  if (train_fraction < 0 || validation_fraction < 0 || train_fraction + validation_fraction > 1.0)
    throw Error(ErrorCode::kInvalidArgument, "invalid split fractions");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed, 0x5917);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(n)));
  Split s;
  s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.validation.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                      idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), idx.end());
  return s;
}

namespace {

// Reads CSV rows, skipping comments, blank lines and a non-numeric header.
template <typename Fn>
void read_csv(std::istream& in, std::size_t expected_fields, Fn&& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::strip_comment(line);
    if (body.empty()) continue;
    const auto fields = detail::split(body, ',');
    if (first) {
      first = false;
      if (!detail::parse_int(fields[0])) continue;
    }
    if (fields.size() != expected_fields)
      detail::parse_error(line_no, "expected " + std::to_string(expected_fields) + " fields");
    on_row(fields, line_no);
  }
}

}  // namespace

void save_travel_times(std::span<const TravelTimeLabel> labels, std::ostream& out) {
  out << "path_id,travel_time_seconds\n";
  for (const auto& l : labels) out << l.path_id << ',' << detail::format_double(l.seconds) << '\n';
}

void save_travel_times_file(std::span<const TravelTimeLabel> labels, const std::string& path) {
  auto out = detail::open_out(path);
  save_travel_times(labels, out);
}

std::vector<TravelTimeLabel> load_travel_times(std::istream& in) {
  std::vector<TravelTimeLabel> out;
  read_csv(in, 2, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const auto id = detail::parse_int(f[0]);
    const auto t = detail::parse_double(f[1]);
    if (!id || *id < 0 || !t || !std::isfinite(*t)) detail::parse_error(line, "malformed travel-time record");
    out.push_back({static_cast<std::size_t>(*id), *t});
  });
  return out;
}

std::vector<TravelTimeLabel> load_travel_times_file(const std::string& path) {
  auto in = detail::open_in(path);
  return load_travel_times(in);
}

void save_rank_labels(std::span<const RankLabel> labels, std::ostream& out) {
  out << "path_id,group_id,rank_score\n";
  for (const auto& l : labels)
    out << l.path_id << ',' << l.group_id << ',' << detail::format_double(l.score) << '\n';
}

void save_rank_labels_file(std::span<const RankLabel> labels, const std::string& path) {
  auto out = detail::open_out(path);
  save_rank_labels(labels, out);
}

std::vector<RankLabel> load_rank_labels(std::istream& in) {
  std::vector<RankLabel> out;
  read_csv(in, 3, [&](const std::vector<std::string_view>& f, std::size_t line) {
    const auto id = detail::parse_int(f[0]);
    const auto g = detail::parse_int(f[1]);
    const auto s = detail::parse_double(f[2]);
    if (!id || *id < 0 || !g || !s || !std::isfinite(*s)) detail::parse_error(line, "malformed ranking record");
    out.push_back({static_cast<std::size_t>(*id), *g, *s});
  });
  return out;
}

std::vector<RankLabel> load_rank_labels_file(const std::string& path) {
  auto in = detail::open_in(path);
  return load_rank_labels(in);
}

}  // namespace pim
