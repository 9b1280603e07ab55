#pragma once

#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "cdrive/ad/params.hpp"

namespace cdrive::ad {

class Tape;

/// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

/// Reverse-mode recording of matrix operations. One tape per evaluation;
/// tapes are not shared across threads.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Var constant(Matrix value);
  /// Leaf bound to a parameter array. Frozen arrays are recorded as constants.
  Var param(const ParamSet& params, std::size_t index);
  Var param(const ParamSet& params, const std::string& name) { return param(params, params.index_of(name)); }

  /// Records a custom operation. `backward` reads grad(self) and adds into
  /// the parents' gradients via add_grad().
  Var record(Matrix value, std::vector<int> parents, Backward backward);

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  void add_grad(int id, const Matrix& g);
  template <class Expr>
  void add_grad_expr(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad = g;
    else n.grad += g;
  }

  /// Seeds d(loss)/d(loss) = 1 and propagates. Throws std::invalid_argument
  /// when the loss is not 1x1.
  void backward(Var loss);

  /// Gradients of every trainable parameter leaf (zeros for untouched ones).
  Gradients param_gradients() const;

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
    const ParamSet* params = nullptr;
    std::size_t param_index = 0;
  };
  std::vector<Node> nodes_;
  std::map<std::pair<const ParamSet*, std::size_t>, int> param_leaves_;
};

// Elementwise and linear algebra ops. Shapes follow Eigen semantics; rows are
// batch entries.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var one_minus(Var a);
Var add_row(Var a, Var row);  // broadcasts a 1 x n row over all rows of a
Var relu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var square(Var a);
Var sum(Var a);                 // 1 x 1
Var mean(Var a);                // 1 x 1
Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var repeat_rows(Var row, Eigen::Index times);
Var mean_rows(Var a);           // 1 x n; zeros for an empty input
Var max_rows(Var a);            // 1 x n; zeros for an empty input
/// Row-wise softmax over columns [start, start + count).
Var softmax_cols(Var a, Eigen::Index start, Eigen::Index count);
/// Sigmoid over columns [start, start + count), identity elsewhere.
Var sigmoid_cols(Var a, Eigen::Index start, Eigen::Index count);

/// Focal-modulated softmax cross-entropy of a k x 1 (or 1 x k) logit vector
/// against class `label`: (1 - p)^gamma * (-ln p). gamma = 0 is plain
/// cross-entropy.
Var softmax_cross_entropy(Var logits, int label, double gamma = 0.0);
/// Cross-entropy against a target distribution over the k logits.
Var softmax_cross_entropy_soft(Var logits, const Matrix& target);

}  // namespace cdrive::ad
