#include "pim/encoder.hpp"

#include <cmath>

#include "pim/error.hpp"
#include "pim/rng.hpp"

namespace pim {

std::vector<std::pair<std::string, Matrix*>> EncoderParams::named() {
  return {{"w_z", &w_z}, {"w_r", &w_r}, {"w_n", &w_n}, {"u_z", &u_z}, {"u_r", &u_r},
          {"u_n", &u_n}, {"b_z", &b_z}, {"b_r", &b_r}, {"b_n", &b_n}, {"readout", &readout}};
}

std::vector<std::pair<std::string, const Matrix*>> EncoderParams::named() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  for (const auto& [name, m] : const_cast<EncoderParams*>(this)->named()) out.emplace_back(name, m);
  return out;
}

void EncoderParams::validate() const {
  const auto d = input_dim(), h = hidden_dim();
  auto check = [](const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c)
      throw Error(ErrorCode::kShapeMismatch, std::string("encoder parameter ") + name + " has the wrong shape");
    if (!m.allFinite()) throw Error(ErrorCode::kNumeric, std::string("encoder parameter ") + name + " is not finite");
  };
  if (d < 1 || h < 1 || output_dim() < 1) throw Error(ErrorCode::kShapeMismatch, "encoder dimensions must be >= 1");
  check(w_z, d, h, "w_z");
  check(w_r, d, h, "w_r");
  check(w_n, d, h, "w_n");
  check(u_z, h, h, "u_z");
  check(u_r, h, h, "u_r");
  check(u_n, h, h, "u_n");
  check(b_z, 1, h, "b_z");
  check(b_r, 1, h, "b_r");
  check(b_n, 1, h, "b_n");
  check(readout, h, output_dim(), "readout");
}

EncoderParams init_encoder(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1)
    throw Error(ErrorCode::kInvalidArgument, "encoder dimensions must be >= 1");
  auto rng = make_rng(seed);
  const double a = std::sqrt(1.0 / hidden_dim);
  std::uniform_real_distribution<double> dist(-a, a);
  auto uniform = [&](int r, int c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = dist(rng);
    return m;
  };
  EncoderParams p;
  p.w_z = uniform(input_dim, hidden_dim);
  p.w_r = uniform(input_dim, hidden_dim);
  p.w_n = uniform(input_dim, hidden_dim);
  p.u_z = uniform(hidden_dim, hidden_dim);
  p.u_r = uniform(hidden_dim, hidden_dim);
  p.u_n = uniform(hidden_dim, hidden_dim);
  p.b_z = Matrix::Zero(1, hidden_dim);
  p.b_r = Matrix::Zero(1, hidden_dim);
  p.b_n = Matrix::Zero(1, hidden_dim);
  p.readout = uniform(hidden_dim, output_dim);
  return p;
}

EncoderVars bind_encoder(ad::Tape& tape, const EncoderParams& p, bool trainable) {
  auto put = [&](const Matrix& m) { return trainable ? tape.variable(m) : tape.constant(m); };
  return {put(p.w_z), put(p.w_r), put(p.w_n), put(p.u_z), put(p.u_r),
          put(p.u_n), put(p.b_z), put(p.b_r), put(p.b_n), put(p.readout)};
}

ad::Var encode(const EncoderVars& enc, ad::Var view) {
  using namespace ad;
  if (view.rows() < 1) throw Error(ErrorCode::kShapeMismatch, "cannot encode an empty view");
  if (view.cols() != enc.w_z.rows())
    throw Error(ErrorCode::kShapeMismatch, "view has " + std::to_string(view.cols()) +
                                               " columns but the encoder expects " +
                                               std::to_string(enc.w_z.rows()));
  Tape& tape = *view.tape();
  // Input projections for all steps at once.
  const Var xz = add(matmul(view, enc.w_z), enc.b_z);
  const Var xr = add(matmul(view, enc.w_r), enc.b_r);
  const Var xn = add(matmul(view, enc.w_n), enc.b_n);
  Var h = tape.constant(Matrix::Zero(1, enc.w_z.cols()));
  for (Eigen::Index t = 0; t < view.rows(); ++t) {
    const Var z = sigmoid(add(row(xz, t), matmul(h, enc.u_z)));
    const Var r = sigmoid(add(row(xr, t), matmul(h, enc.u_r)));
    const Var n = tanh(add(row(xn, t), matmul(mul(r, h), enc.u_n)));
    // h' = (1 - z) * n + z * h
    h = add(n, mul(z, sub(h, n)));
  }
  return matmul(h, enc.readout);
}

RowVector encode(const EncoderParams& params, const Matrix& view) {
  ad::Tape tape;
  const auto enc = bind_encoder(tape, params, false);
  return encode(enc, tape.constant(view)).value().row(0);
}

}  // namespace pim
