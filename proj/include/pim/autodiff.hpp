#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pim/graph.hpp"

namespace pim::ad {

class Tape;

// A recorded dense 2-D value. `grad` has the value's shape once backward ran
// and the tensor requires a gradient.
struct Tensor {
  Matrix value;
  Matrix grad;
  bool requires_grad = false;
  std::vector<std::size_t> parents;
  // Propagates this tensor's grad into its parents' grads.
  std::function<void(Tape&, std::size_t self)> backward;
};

// Lightweight handle to a tensor on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in order; backward() replays them in exact reverse.
// Single-threaded; use one tape per concurrent computation.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var variable(Matrix value);

  // Fills grads with d(loss)/d(tensor). Grads from earlier calls are
  // discarded. Throws kShapeMismatch if loss is not 1x1.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }
  Tensor& node(std::size_t id) { return nodes_[id]; }
  const Tensor& node(std::size_t id) const { return nodes_[id]; }

  // Adds `g` into the grad slot of `id` when that tensor requires grad.
  void accumulate(std::size_t id, const Matrix& g);
  template <typename Expr>
  void accumulate_expr(std::size_t id, const Expr& g) {
    auto& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
  }

  Var record(Matrix value, std::vector<std::size_t> parents,
             std::function<void(Tape&, std::size_t)> backward);

 private:
  std::vector<Tensor> nodes_;
};

Var matmul(Var a, Var b);
Var transpose(Var a);
// Elementwise a + b; b may also be a 1 x cols row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var sigmoid(Var a);
Var tanh(Var a);
// log(max(x, floor)); the gradient is zero where the floor is active.
Var log(Var a, double floor = 1e-12);
Var sum(Var a);
Var mean_rows(Var a);
Var concat_rows(std::span<const Var> parts);
// Row r of a as a 1 x cols tensor.
Var row(Var a, Eigen::Index r);

// Builds a scalar on a fresh tape from the given parameter variables.
using TapeFunction = std::function<Var(Tape&, std::span<const Var> params)>;

// Max over all parameter entries of |analytic - central difference| /
// max(1, |analytic|).
double grad_check(const TapeFunction& f, std::span<const Matrix> params, double eps = 1e-5);

}  // namespace pim::ad
