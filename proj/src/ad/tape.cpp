#include "cdrive/ad/tape.hpp"

#include <cmath>
#include <stdexcept>

#include "cdrive/ad/focal.hpp"

namespace cdrive::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(const ParamSet& params, std::size_t index) {
  const auto key = std::make_pair(&params, index);
  if (const auto it = param_leaves_.find(key); it != param_leaves_.end()) return {this, it->second};
  Node n;
  n.value = params.value(index);
  n.requires_grad = params.trainable(index);
  n.params = &params;
  n.param_index = index;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_leaves_[key] = id;
  return {this, id};
}

Var Tape::record(Matrix value, std::vector<int> parents, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (int p : parents) n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {this, static_cast<int>(nodes_.size() - 1)};
}

void Tape::add_grad(int id, const Matrix& g) { add_grad_expr(id, g); }

void Tape::backward(Var loss) {
  if (loss.tape != this) throw std::invalid_argument("loss belongs to another tape");
  if (value(loss.id).rows() != 1 || value(loss.id).cols() != 1)
    throw std::invalid_argument("loss head must be scalar (1x1)");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  if (!nodes_[loss.id].requires_grad) return;
  nodes_[loss.id].grad = Matrix::Ones(1, 1);
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

Gradients Tape::param_gradients() const {
  Gradients out;
  for (const auto& [key, id] : param_leaves_) {
    const Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    const auto& name = n.params->entry(n.param_index).name;
    if (n.grad.size() == 0)
      out.emplace(name, Matrix::Zero(n.value.rows(), n.value.cols()));
    else
      out.emplace(name, n.grad);
  }
  return out;
}

// --- ops --------------------------------------------------------------------

namespace {

void same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Tape& t = *a.tape;
  const int ia = a.id, ib = b.id;
  return t.record(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    const Matrix& g = t.grad(self);
    if (t.requires_grad(ia)) t.add_grad_expr(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.add_grad_expr(ib, t.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  same_shape(a, b, "add");
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    t.add_grad(ia, t.grad(self));
    t.add_grad(ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  same_shape(a, b, "sub");
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& t, int self) {
    t.add_grad(ia, t.grad(self));
    t.add_grad_expr(ib, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  same_shape(a, b, "mul");
  const int ia = a.id, ib = b.id;
  return a.tape->record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& t, int self) {
    if (t.requires_grad(ia)) t.add_grad_expr(ia, t.grad(self).cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.add_grad_expr(ib, t.grad(self).cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id;
  return a.tape->record(a.value() * s, {ia}, [ia, s](Tape& t, int self) { t.add_grad_expr(ia, t.grad(self) * s); });
}

Var one_minus(Var a) {
  const int ia = a.id;
  return a.tape->record((1.0 - a.value().array()).matrix(), {ia},
                        [ia](Tape& t, int self) { t.add_grad_expr(ia, -t.grad(self)); });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw std::invalid_argument("add_row: bias shape mismatch");
  const int ia = a.id, ir = row.id;
  Matrix v = a.value();
  v.rowwise() += row.value().row(0);
  return a.tape->record(std::move(v), {ia, ir}, [ia, ir](Tape& t, int self) {
    t.add_grad(ia, t.grad(self));
    if (t.requires_grad(ir)) t.add_grad_expr(ir, t.grad(self).colwise().sum());
  });
}

Var relu(Var a) {
  const int ia = a.id;
  return a.tape->record(a.value().cwiseMax(0.0), {ia}, [ia](Tape& t, int self) {
    t.add_grad_expr(ia, (t.value(ia).array() > 0.0).select(t.grad(self).array(), 0.0).matrix());
  });
}

Var tanh(Var a) {
  const int ia = a.id;
  Matrix v = a.value().array().tanh().matrix();
  return a.tape->record(std::move(v), {ia}, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.add_grad_expr(ia, (t.grad(self).array() * (1.0 - y * y)).matrix());
  });
}

Var sigmoid(Var a) {
  const int ia = a.id;
  Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape->record(std::move(v), {ia}, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.add_grad_expr(ia, (t.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var square(Var a) {
  const int ia = a.id;
  return a.tape->record(a.value().cwiseProduct(a.value()), {ia}, [ia](Tape& t, int self) {
    t.add_grad_expr(ia, 2.0 * t.grad(self).cwiseProduct(t.value(ia)));
  });
}

Var sum(Var a) {
  const int ia = a.id;
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return a.tape->record(std::move(v), {ia}, [ia](Tape& t, int self) {
    const auto& x = t.value(ia);
    t.add_grad_expr(ia, Matrix::Constant(x.rows(), x.cols(), t.grad(self)(0, 0)));
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean of empty matrix");
  return scale(sum(a), 1.0 / n);
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: nothing to join");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<int> ids;
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
    ids.push_back(p.id);
    widths.push_back(p.cols());
  }
  Matrix v(rows, cols);
  Eigen::Index c = 0;
  for (const auto& p : parts) {
    v.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  return parts[0].tape->record(std::move(v), ids, [ids, widths](Tape& t, int self) {
    Eigen::Index c = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (t.requires_grad(ids[i])) t.add_grad_expr(ids[i], t.grad(self).middleCols(c, widths[i]));
      c += widths[i];
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) throw std::invalid_argument("slice_cols: out of range");
  const int ia = a.id;
  return a.tape->record(a.value().middleCols(start, count), {ia}, [ia, start, count](Tape& t, int self) {
    const auto& x = t.value(ia);
    Matrix g = Matrix::Zero(x.rows(), x.cols());
    g.middleCols(start, count) = t.grad(self);
    t.add_grad(ia, g);
  });
}

Var repeat_rows(Var row, Eigen::Index times) {
  if (row.rows() != 1) throw std::invalid_argument("repeat_rows expects a single row");
  const int ir = row.id;
  return row.tape->record(row.value().replicate(times, 1), {ir}, [ir](Tape& t, int self) {
    t.add_grad_expr(ir, t.grad(self).colwise().sum());
  });
}

Var mean_rows(Var a) {
  const int ia = a.id;
  const Eigen::Index n = a.rows();
  Matrix v = n == 0 ? Matrix::Zero(1, a.cols()) : Matrix(a.value().colwise().mean());
  return a.tape->record(std::move(v), {ia}, [ia, n](Tape& t, int self) {
    if (n == 0) return;
    t.add_grad_expr(ia, (t.grad(self) / static_cast<double>(n)).replicate(n, 1));
  });
}

Var max_rows(Var a) {
  const int ia = a.id;
  const Eigen::Index n = a.rows(), m = a.cols();
  Matrix v = Matrix::Zero(1, m);
  std::vector<Eigen::Index> arg(m, 0);
  if (n > 0) {
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < n; ++i)
        if (a.value()(i, j) > a.value()(best, j)) best = i;
      arg[j] = best;
      v(0, j) = a.value()(best, j);
    }
  }
  return a.tape->record(std::move(v), {ia}, [ia, n, m, arg](Tape& t, int self) {
    if (n == 0) return;
    Matrix g = Matrix::Zero(n, m);
    for (Eigen::Index j = 0; j < m; ++j) g(arg[j], j) = t.grad(self)(0, j);
    t.add_grad(ia, g);
  });
}

Var softmax_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count <= 0 || start + count > a.cols()) throw std::invalid_argument("softmax_cols: out of range");
  const int ia = a.id;
  Matrix v = a.value();
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    auto seg = v.row(r).segment(start, count);
    const double mx = seg.maxCoeff();
    seg = (seg.array() - mx).exp().matrix();
    seg /= seg.sum();
  }
  return a.tape->record(std::move(v), {ia}, [ia, start, count](Tape& t, int self) {
    Matrix g = t.grad(self);
    const Matrix& y = t.value(self);
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      const auto ys = y.row(r).segment(start, count);
      const auto gs = g.row(r).segment(start, count);
      const double dot = ys.dot(gs);
      g.row(r).segment(start, count) = (ys.array() * (gs.array() - dot)).matrix();
    }
    t.add_grad(ia, g);
  });
}

Var sigmoid_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count <= 0 || start + count > a.cols()) throw std::invalid_argument("sigmoid_cols: out of range");
  const int ia = a.id;
  Matrix v = a.value();
  v.middleCols(start, count) = (1.0 / (1.0 + (-v.middleCols(start, count).array()).exp())).matrix();
  return a.tape->record(std::move(v), {ia}, [ia, start, count](Tape& t, int self) {
    Matrix g = t.grad(self);
    const auto y = t.value(self).middleCols(start, count).array();
    g.middleCols(start, count) = (g.middleCols(start, count).array() * y * (1.0 - y)).matrix();
    t.add_grad(ia, g);
  });
}

namespace {

// log-softmax of a flat vector.
Eigen::VectorXd log_softmax(const Matrix& logits) {
  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(logits.data(), logits.size());
  const double mx = z.maxCoeff();
  const double lse = mx + std::log((z.array() - mx).exp().sum());
  return (z.array() - lse).matrix();
}

}  // namespace

Var softmax_cross_entropy(Var logits, int label, double gamma) {
  const auto& x = logits.value();
  if (x.rows() != 1 && x.cols() != 1) throw std::invalid_argument("softmax_cross_entropy expects a vector");
  if (label < 0 || label >= x.size()) throw std::invalid_argument("softmax_cross_entropy: label out of range");
  const Eigen::VectorXd lp = log_softmax(x);
  const FocalTerm ft = focal_from_logp(lp(label), gamma);
  Matrix v(1, 1);
  v(0, 0) = ft.loss;
  const int il = logits.id;
  return logits.tape->record(std::move(v), {il}, [il, lp, label, ft](Tape& t, int self) {
    const auto& x = t.value(il);
    Matrix g(x.rows(), x.cols());
    const double up = t.grad(self)(0, 0) * ft.dloss_dlogp;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      g.data()[j] = up * ((j == label ? 1.0 : 0.0) - std::exp(lp(j)));
    t.add_grad(il, g);
  });
}

Var softmax_cross_entropy_soft(Var logits, const Matrix& target) {
  const auto& x = logits.value();
  if (target.size() != x.size()) throw std::invalid_argument("soft cross-entropy: target size mismatch");
  const Eigen::VectorXd lp = log_softmax(x);
  const Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(target.data(), target.size());
  Matrix v(1, 1);
  v(0, 0) = -q.dot(lp);
  const int il = logits.id;
  return logits.tape->record(std::move(v), {il}, [il, lp, q](Tape& t, int self) {
    const auto& x = t.value(il);
    Matrix g(x.rows(), x.cols());
    const double up = t.grad(self)(0, 0);
    const double mass = q.sum();
    for (Eigen::Index j = 0; j < x.size(); ++j) g.data()[j] = up * (mass * std::exp(lp(j)) - q(j));
    t.add_grad(il, g);
  });
}

}  // namespace cdrive::ad
