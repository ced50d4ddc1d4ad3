#include "pim/infomax.hpp"

#include <cmath>

#include "pim/error.hpp"
#include "pim/rng.hpp"

namespace pim {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

std::vector<std::pair<std::string, Matrix*>> PathPathDisc::named() {
  return {{"pp_bilinear", &bilinear}, {"pp_projection", &projection}};
}

std::vector<std::pair<std::string, Matrix*>> PathNodeDisc::named() { return {{"pn_bilinear", &bilinear}}; }

PathPathDisc init_path_path(int input_dim, int output_dim, std::uint64_t seed) {
  if (input_dim < 1 || output_dim < 1) throw Error(ErrorCode::kInvalidArgument, "dimensions must be >= 1");
  auto rng = make_rng(seed, 1);
  const double a = std::sqrt(1.0 / input_dim);
  std::uniform_real_distribution<double> dist(-a, a);
  PathPathDisc d;
  d.bilinear = Matrix::Zero(output_dim, output_dim);
  d.projection.resize(input_dim, output_dim);
  for (Eigen::Index i = 0; i < d.projection.size(); ++i) d.projection(i) = dist(rng);
  return d;
}

PathNodeDisc init_path_node(int input_dim, int output_dim) {
  if (input_dim < 1 || output_dim < 1) throw Error(ErrorCode::kInvalidArgument, "dimensions must be >= 1");
  return {Matrix::Zero(output_dim, input_dim)};
}

PathPathVars bind_path_path(ad::Tape& tape, const PathPathDisc& d, bool trainable) {
  if (trainable) return {tape.variable(d.bilinear), tape.variable(d.projection)};
  return {tape.constant(d.bilinear), tape.constant(d.projection)};
}

PathNodeVars bind_path_node(ad::Tape& tape, const PathNodeDisc& d, bool trainable) {
  return {trainable ? tape.variable(d.bilinear) : tape.constant(d.bilinear)};
}

ad::Var path_view_logit(const PathPathVars& d, ad::Var repr, ad::Var view) {
  using namespace ad;
  const Var pooled = matmul(mean_rows(view), d.projection);  // 1 x D'
  return matmul(matmul(repr, d.bilinear), transpose(pooled));
}

ad::Var path_path_logits(const PathPathVars& d, ad::Var repr, ad::Var others) {
  using namespace ad;
  return matmul(matmul(repr, d.bilinear), transpose(others));
}

ad::Var path_node_logits(const PathNodeVars& d, ad::Var repr, ad::Var feats) {
  using namespace ad;
  return matmul(matmul(repr, d.bilinear), transpose(feats));
}

double score_path_view(const PathPathDisc& d, const RowVector& repr, const Matrix& view) {
  if (view.cols() != d.projection.rows() || repr.size() != d.bilinear.rows())
    throw Error(ErrorCode::kShapeMismatch, "score_path_view: shape mismatch");
  const RowVector pooled = view.colwise().mean() * d.projection;
  return logistic((repr * d.bilinear * pooled.transpose()).value());
}

double score_path_path(const PathPathDisc& d, const RowVector& repr, const RowVector& other) {
  if (repr.size() != d.bilinear.rows() || other.size() != d.bilinear.cols())
    throw Error(ErrorCode::kShapeMismatch, "score_path_path: shape mismatch");
  return logistic((repr * d.bilinear * other.transpose()).value());
}

double score_path_node(const PathNodeDisc& d, const RowVector& repr, const RowVector& feature) {
  if (repr.size() != d.bilinear.rows() || feature.size() != d.bilinear.cols())
    throw Error(ErrorCode::kShapeMismatch, "score_path_node: shape mismatch");
  return logistic((repr * d.bilinear * feature.transpose()).value());
}

ad::Var global_mi(const PathPathVars& d, ad::Var repr, ad::Var view, ad::Var negatives) {
  using namespace ad;
  if (negatives.rows() < 1) throw Error(ErrorCode::kInvalidArgument, "global objective needs at least one negative");
  const Var pos = log(sigmoid(path_view_logit(d, repr, view)), kSafeLogFloor);
  // 1 - sigmoid(x) == sigmoid(-x)
  const Var neg = log(sigmoid(scale(path_path_logits(d, repr, negatives), -1.0)), kSafeLogFloor);
  const double k = static_cast<double>(negatives.rows());
  return scale(add(pos, sum(neg)), 1.0 / (1.0 + k));
}

ad::Var local_mi(const PathNodeVars& d, ad::Var repr, const Matrix& positive_feats,
                 const Matrix& negative_feats) {
  using namespace ad;
  const auto nx = positive_feats.rows(), ny = negative_feats.rows();
  if (nx + ny == 0) throw Error(ErrorCode::kEmptyPartition, "local objective needs at least one node");
  Tape& tape = *repr.tape();
  Var total = tape.constant(Matrix::Zero(1, 1));
  if (nx > 0) {
    const Var logits = path_node_logits(d, repr, tape.constant(positive_feats));
    total = add(total, sum(log(sigmoid(logits), kSafeLogFloor)));
  }
  if (ny > 0) {
    const Var logits = path_node_logits(d, repr, tape.constant(negative_feats));
    total = add(total, sum(log(sigmoid(scale(logits, -1.0)), kSafeLogFloor)));
  }
  return scale(total, 1.0 / static_cast<double>(nx + ny));
}

ad::Var joint_objective(ad::Var global, ad::Var local) { return ad::add(global, local); }

}  // namespace pim
