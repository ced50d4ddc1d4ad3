#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pim/autodiff.hpp"
#include "pim/graph.hpp"

namespace pim {

inline constexpr double kSafeLogFloor = 1e-12;

// Bilinear path-path discriminator. Initial views are mean-pooled and
// projected into the representation space by `projection` before scoring.
struct PathPathDisc {
  Matrix bilinear;    // D' x D', zero at init
  Matrix projection;  // D x D'

  std::vector<std::pair<std::string, Matrix*>> named();
};

// Bilinear path-node discriminator.
struct PathNodeDisc {
  Matrix bilinear;  // D' x D, zero at init

  std::vector<std::pair<std::string, Matrix*>> named();
};

// Zero bilinear forms; projection ~ U(-a, a), a = sqrt(1/D).
PathPathDisc init_path_path(int input_dim, int output_dim, std::uint64_t seed);
PathNodeDisc init_path_node(int input_dim, int output_dim);

struct PathPathVars {
  ad::Var bilinear, projection;
};
struct PathNodeVars {
  ad::Var bilinear;
};

PathPathVars bind_path_path(ad::Tape& tape, const PathPathDisc& d, bool trainable = true);
PathNodeVars bind_path_node(ad::Tape& tape, const PathNodeDisc& d, bool trainable = true);

// Pre-sigmoid scores.
ad::Var path_view_logit(const PathPathVars& d, ad::Var repr, ad::Var view);
ad::Var path_path_logits(const PathPathVars& d, ad::Var repr, ad::Var others);  // 1 x K
ad::Var path_node_logits(const PathNodeVars& d, ad::Var repr, ad::Var feats);   // 1 x m

// Probabilities in (0, 1).
double score_path_view(const PathPathDisc& d, const RowVector& repr, const Matrix& view);
double score_path_path(const PathPathDisc& d, const RowVector& repr, const RowVector& other);
double score_path_node(const PathNodeDisc& d, const RowVector& repr, const RowVector& feature);

// 1/(1+K) [log D(p, IV) + sum_j log(1 - D(p, p_j))], safe-log floored.
// `negatives` stacks the K negative representations as rows.
ad::Var global_mi(const PathPathVars& d, ad::Var repr, ad::Var view, ad::Var negatives);

// 1/|X u Y| [sum_X log D(p, v) + sum_Y log(1 - D(p, v))]. Either feature
// block may have zero rows (pass an empty Matrix); both empty throws
// kEmptyPartition.
ad::Var local_mi(const PathNodeVars& d, ad::Var repr, const Matrix& positive_feats,
                 const Matrix& negative_feats);

// Unweighted sum.
ad::Var joint_objective(ad::Var global, ad::Var local);

}  // namespace pim
