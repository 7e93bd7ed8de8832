#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sgvqa::nn {

using Matrix = Eigen::MatrixXd;

// Trainable tensor plus optimizer state. Owned by a ParamStore; gradients
// accumulate across Tape::backward calls until the optimizer consumes them.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m;
  Matrix adam_v;

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)),
        adam_m(Matrix::Zero(rows, cols)),
        adam_v(Matrix::Zero(rows, cols)) {}
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; invalid once the tape is gone.
class Var {
 public:
  Var() = default;
  bool valid() const { return tape_ != nullptr; }
  const Matrix& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }

 private:
  friend class Tape;
  Var(Tape* t, int i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

// Reverse-mode tape over Eigen matrices. One tape per forward pass; node
// creation order is the topological order used by backward.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix v);
  Var zeros(int rows, int cols);
  // Leaf bound to a parameter; the value is referenced, not copied, and the
  // parameter's grad receives this node's gradient on backward.
  Var param(Parameter& p);
  // Embedding-style lookup with sparse gradient accumulation straight into
  // the table's grad rows.
  Var lookup_rows(Parameter& table, std::vector<int> ids);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var add_rowvec(Var m, Var row);  // broadcast a 1 x c row over every row of m
  Var mul(Var a, Var b);           // elementwise
  Var scale(Var a, double s);
  Var relu(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var transpose(Var a);

  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_cols(Var m, int col0, int ncols);
  Var row(Var m, int r);
  Var gather_rows(Var m, std::vector<int> ids);
  // Mean of rows grouped by segment id; segments with no rows yield zero rows.
  Var segment_mean_rows(Var m, std::vector<int> segments, int num_segments);
  Var mean_rows(Var m);            // 1 x c column means
  Var repeat_row(Var row, int n);

  // Softmax over the entries of an n x 1 column; masked entries are exactly 0.
  Var masked_softmax_col(Var col, const std::vector<uint8_t>& mask);
  Var log_softmax_row(Var logits);  // 1 x n
  Var pick(Var m, int r, int c);    // 1 x 1
  Var sum_all(Var m);               // 1 x 1

  // Convenience: x * w + b with b broadcast per row.
  Var linear(Var x, Parameter& w, Parameter& b);

  bool all_finite(Var v) const;

  // Seeds d(loss)/d(loss) = seed and sweeps the tape in reverse, then flushes
  // gradients of parameter leaves into their Parameter::grad.
  void backward(Var loss, double seed = 1.0);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix owned;
    const Matrix* view = nullptr;  // set for parameter leaves
    Matrix grad;
    std::function<void(Tape&, const Matrix&)> backprop;  // (tape, upstream grad)
    Parameter* bound = nullptr;

    const Matrix& val() const { return view ? *view : owned; }
  };

  friend class Var;
  const Matrix& val(int i) const { return nodes_[i].val(); }
  Matrix& grad(int i);
  Var push(Matrix value, std::function<void(Tape&, const Matrix&)> backprop);
  Var push_view(const Matrix* view, Parameter* bound);

  std::vector<Node> nodes_;
};

}  // namespace sgvqa::nn
