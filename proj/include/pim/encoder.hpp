#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pim/autodiff.hpp"
#include "pim/graph.hpp"

namespace pim {

// Single-layer GRU over the rows of an initial view, read out linearly from
// the final hidden state.
struct EncoderParams {
  // Input-to-hidden (D x H), hidden-to-hidden (H x H), biases (1 x H) for the
  // update (z), reset (r) and candidate (n) paths.
  Matrix w_z, w_r, w_n;
  Matrix u_z, u_r, u_n;
  Matrix b_z, b_r, b_n;
  Matrix readout;  // H x D'

  Eigen::Index input_dim() const { return w_z.rows(); }
  Eigen::Index hidden_dim() const { return w_z.cols(); }
  Eigen::Index output_dim() const { return readout.cols(); }

  // Stable (name, matrix) listing used by checkpoints and the optimizer.
  std::vector<std::pair<std::string, Matrix*>> named();
  std::vector<std::pair<std::string, const Matrix*>> named() const;

  // Throws kShapeMismatch / kNumeric when shapes disagree or values are not finite.
  void validate() const;
};

// Weights ~ U(-a, a) with a = sqrt(1/H); biases zero.
EncoderParams init_encoder(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);

// Encoder parameters recorded on a tape.
struct EncoderVars {
  ad::Var w_z, w_r, w_n, u_z, u_r, u_n, b_z, b_r, b_n, readout;
};

// `trainable` selects variable (gradient-tracked) or constant recording.
EncoderVars bind_encoder(ad::Tape& tape, const EncoderParams& params, bool trainable = true);

// Representation (1 x D') of a Z x D view.
ad::Var encode(const EncoderVars& enc, ad::Var view);

// Gradient-free convenience wrapper.
RowVector encode(const EncoderParams& params, const Matrix& view);

}  // namespace pim
