#include "pim/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pim/error.hpp"

namespace pim::ad {

namespace {

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw Error(ErrorCode::kShapeMismatch, std::string(op) + ": incompatible shapes " + shape(a) + " and " + shape(b));
}

void same_tape(Var a, Var b) {
  if (a.tape() != b.tape() || a.tape() == nullptr)
    throw Error(ErrorCode::kInvalidArgument, "operands live on different tapes");
}

}  // namespace

const Matrix& Var::value() const { return tape_->node(id_).value; }
const Matrix& Var::grad() const { return tape_->node(id_).grad; }

double Var::scalar() const {
  const auto& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw Error(ErrorCode::kShapeMismatch, "expected a 1x1 tensor, got " + shape(v));
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Tensor{std::move(value), {}, false, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::variable(Matrix value) {
  nodes_.push_back(Tensor{std::move(value), {}, true, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<std::size_t> parents,
                 std::function<void(Tape&, std::size_t)> backward) {
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [&](std::size_t p) { return nodes_[p].requires_grad; });
  nodes_.push_back(Tensor{std::move(value), {}, needs, std::move(parents),
                          needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Matrix& g) { accumulate_expr(id, g); }

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw Error(ErrorCode::kInvalidArgument, "loss belongs to another tape");
  const auto& lv = nodes_[loss.id()].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw Error(ErrorCode::kShapeMismatch, "backward needs a scalar loss, got " + shape(lv));
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id()].requires_grad) return;
  nodes_[loss.id()].grad = Matrix::Ones(1, 1);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    auto& n = nodes_[i];
    if (n.backward && n.grad.size() != 0) n.backward(*this, i);
  }
  for (auto& n : nodes_)
    if (n.requires_grad && n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  if (a.cols() != b.rows()) shape_error("matmul", a.value(), b.value());
  Matrix out = a.value() * b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) t.accumulate_expr(ia, g * t.node(ib).value.transpose());
    if (t.node(ib).requires_grad) t.accumulate_expr(ib, t.node(ia).value.transpose() * g);
  });
}

Var transpose(Var a) {
  Matrix out = a.value().transpose();
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.node(self).grad.transpose());
  });
}

Var add(Var a, Var b) {
  same_tape(a, b);
  const auto ia = a.id(), ib = b.id();
  if (a.rows() == b.rows() && a.cols() == b.cols()) {
    Matrix out = a.value() + b.value();
    return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
      const Matrix& g = t.node(self).grad;
      t.accumulate_expr(ia, g);
      t.accumulate_expr(ib, g);
    });
  }
  if (b.rows() == 1 && a.cols() == b.cols()) {
    Matrix out = a.value().rowwise() + b.value().row(0);
    return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
      const Matrix& g = t.node(self).grad;
      t.accumulate_expr(ia, g);
      if (t.node(ib).requires_grad) t.accumulate_expr(ib, g.colwise().sum());
    });
  }
  shape_error("add", a.value(), b.value());
}

Var sub(Var a, Var b) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("sub", a.value(), b.value());
  Matrix out = a.value() - b.value();
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.node(self).grad;
    t.accumulate_expr(ia, g);
    if (t.node(ib).requires_grad) t.accumulate_expr(ib, -g);
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a.value(), b.value());
  Matrix out = a.value().cwiseProduct(b.value());
  const auto ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(out), {ia, ib}, [ia, ib](Tape& t, std::size_t self) {
    const Matrix& g = t.node(self).grad;
    if (t.node(ia).requires_grad) t.accumulate_expr(ia, g.cwiseProduct(t.node(ib).value));
    if (t.node(ib).requires_grad) t.accumulate_expr(ib, g.cwiseProduct(t.node(ia).value));
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value() * s;
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia, s](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.node(self).grad * s);
  });
}

Var add_scalar(Var a, double s) {
  Matrix out = a.value().array() + s;
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, t.node(self).grad);
  });
}

Var sigmoid(Var a) {
  Matrix out = a.value().unaryExpr([](double x) {
    // Branching keeps exp() from overflowing for large |x|.
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& y = t.node(self).value;
    t.accumulate_expr(ia, t.node(self).grad.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var tanh(Var a) {
  Matrix out = a.value().array().tanh().matrix();
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia](Tape& t, std::size_t self) {
    const Matrix& y = t.node(self).value;
    t.accumulate_expr(ia, t.node(self).grad.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var log(Var a, double floor) {
  Matrix out = a.value().unaryExpr([floor](double x) { return std::log(std::max(x, floor)); });
  const auto ia = a.id();
  return a.tape()->record(std::move(out), {ia}, [ia, floor](Tape& t, std::size_t self) {
    const Matrix& x = t.node(ia).value;
    Matrix d = x.unaryExpr([floor](double v) { return v > floor ? 1.0 / v : 0.0; });
    t.accumulate_expr(ia, t.node(self).grad.cwiseProduct(d));
  });
}

Var sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  const auto ia = a.id();
  const auto r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(out), {ia}, [ia, r, c](Tape& t, std::size_t self) {
    t.accumulate_expr(ia, Matrix::Constant(r, c, t.node(self).grad(0, 0)));
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw Error(ErrorCode::kShapeMismatch, "mean_rows of an empty tensor");
  Matrix out = a.value().colwise().mean();
  const auto ia = a.id();
  const auto r = a.rows();
  return a.tape()->record(std::move(out), {ia}, [ia, r](Tape& t, std::size_t self) {
    const Matrix& g = t.node(self).grad;
    t.accumulate_expr(ia, g.replicate(r, 1) / static_cast<double>(r));
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorCode::kInvalidArgument, "concat_rows needs at least one part");
  Tape* tape = parts.front().tape();
  const auto cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<std::size_t> ids;
  for (const auto& p : parts) {
    same_tape(parts.front(), p);
    if (p.cols() != cols) shape_error("concat_rows", parts.front().value(), p.value());
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  auto parents = ids;
  return tape->record(std::move(out), std::move(parents), [ids](Tape& t, std::size_t self) {
    const Matrix& g = t.node(self).grad;
    Eigen::Index off = 0;
    for (const auto id : ids) {
      const auto r = t.node(id).value.rows();
      t.accumulate_expr(id, g.middleRows(off, r));
      off += r;
    }
  });
}

Var row(Var a, Eigen::Index r) {
  if (r < 0 || r >= a.rows()) throw Error(ErrorCode::kShapeMismatch, "row index out of range");
  Matrix out = a.value().row(r);
  const auto ia = a.id();
  const auto rows = a.rows(), cols = a.cols();
  return a.tape()->record(std::move(out), {ia}, [ia, r, rows, cols](Tape& t, std::size_t self) {
    Matrix g = Matrix::Zero(rows, cols);
    g.row(r) = t.node(self).grad;
    t.accumulate_expr(ia, g);
  });
}

double grad_check(const TapeFunction& f, std::span<const Matrix> params, double eps) {
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : params) vars.push_back(tape.variable(p));
    const Var loss = f(tape, vars);
    tape.backward(loss);
    for (const auto& v : vars) analytic.push_back(v.grad());
  }
  auto evaluate = [&](const std::vector<Matrix>& values) {
    Tape tape;
    std::vector<Var> vars;
    for (const auto& p : values) vars.push_back(tape.variable(p));
    return f(tape, vars).scalar();
  };
  std::vector<Matrix> work(params.begin(), params.end());
  double worst = 0.0;
  for (std::size_t p = 0; p < work.size(); ++p) {
    for (Eigen::Index i = 0; i < work[p].size(); ++i) {
      const double orig = work[p](i);
      work[p](i) = orig + eps;
      const double up = evaluate(work);
      work[p](i) = orig - eps;
      const double down = evaluate(work);
      work[p](i) = orig;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[p](i);
      worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
    }
  }
  return worst;
}

}  // namespace pim::ad
