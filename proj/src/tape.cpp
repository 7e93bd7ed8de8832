#include "sgvqa/nn/tape.hpp"

#include <cmath>
#include <utility>

#include "sgvqa/util.hpp"

namespace sgvqa::nn {

const Matrix& Var::value() const {
  if (!tape_) fail("Var::value: unbound handle");
  return tape_->val(idx_);
}

Matrix& Tape::grad(int i) {
  Node& n = nodes_[i];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(n.val().rows(), n.val().cols());
  return n.grad;
}

Var Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> backprop) {
  Node n;
  n.owned = std::move(value);
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push_view(const Matrix* view, Parameter* bound) {
  Node n;
  n.view = view;
  n.bound = bound;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix v) { return push(std::move(v), nullptr); }

Var Tape::zeros(int rows, int cols) { return constant(Matrix::Zero(rows, cols)); }

Var Tape::param(Parameter& p) { return push_view(&p.value, &p); }

Var Tape::lookup_rows(Parameter& table, std::vector<int> ids) {
  const int cols = static_cast<int>(table.value.cols());
  Matrix out(static_cast<int>(ids.size()), cols);
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.value.rows())
      fail("lookup_rows: id ", ids[i], " outside table '", table.name, "' of ",
           table.value.rows(), " rows");
    out.row(static_cast<int>(i)) = table.value.row(ids[i]);
  }
  Parameter* t = &table;
  return push(std::move(out), [t, ids = std::move(ids)](Tape&, const Matrix& g) {
    for (size_t i = 0; i < ids.size(); ++i)
      t->grad.row(ids[i]) += g.row(static_cast<int>(i));
  });
}

Var Tape::matmul(Var a, Var b) {
  if (a.cols() != b.rows())
    fail("matmul: shape mismatch ", a.rows(), "x", a.cols(), " * ", b.rows(), "x", b.cols());
  const int ia = a.idx_, ib = b.idx_;
  return push(val(ia) * val(ib), [ia, ib](Tape& t, const Matrix& g) {
    t.grad(ia) += g * t.val(ib).transpose();
    t.grad(ib) += t.val(ia).transpose() * g;
  });
}

Var Tape::add(Var a, Var b) {
  const int ia = a.idx_, ib = b.idx_;
  return push(val(ia) + val(ib), [ia, ib](Tape& t, const Matrix& g) {
    t.grad(ia) += g;
    t.grad(ib) += g;
  });
}

Var Tape::sub(Var a, Var b) {
  const int ia = a.idx_, ib = b.idx_;
  return push(val(ia) - val(ib), [ia, ib](Tape& t, const Matrix& g) {
    t.grad(ia) += g;
    t.grad(ib) -= g;
  });
}

Var Tape::add_rowvec(Var m, Var rowv) {
  if (rowv.rows() != 1 || rowv.cols() != m.cols())
    fail("add_rowvec: row shape ", rowv.rows(), "x", rowv.cols(), " vs matrix cols ", m.cols());
  const int im = m.idx_, ir = rowv.idx_;
  Matrix out = val(im);
  out.rowwise() += Eigen::RowVectorXd(val(ir).row(0));
  return push(std::move(out), [im, ir](Tape& t, const Matrix& g) {
    t.grad(im) += g;
    t.grad(ir) += g.colwise().sum();
  });
}

Var Tape::mul(Var a, Var b) {
  const int ia = a.idx_, ib = b.idx_;
  return push(val(ia).cwiseProduct(val(ib)), [ia, ib](Tape& t, const Matrix& g) {
    t.grad(ia) += g.cwiseProduct(t.val(ib));
    t.grad(ib) += g.cwiseProduct(t.val(ia));
  });
}

Var Tape::scale(Var a, double s) {
  const int ia = a.idx_;
  return push(val(ia) * s, [ia, s](Tape& t, const Matrix& g) { t.grad(ia) += g * s; });
}

Var Tape::relu(Var a) {
  const int ia = a.idx_;
  return push(val(ia).cwiseMax(0.0), [ia](Tape& t, const Matrix& g) {
    t.grad(ia) += g.cwiseProduct((t.val(ia).array() > 0.0).cast<double>().matrix());
  });
}

Var Tape::tanh(Var a) {
  const int ia = a.idx_;
  Matrix v = val(ia).array().tanh().matrix();
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(v), [ia, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.val(self);
    t.grad(ia) += g.cwiseProduct((1.0 - y.array().square()).matrix());
  });
}

Var Tape::sigmoid(Var a) {
  const int ia = a.idx_;
  Matrix v = (1.0 / (1.0 + (-val(ia).array()).exp())).matrix();
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(v), [ia, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.val(self);
    t.grad(ia) += g.cwiseProduct((y.array() * (1.0 - y.array())).matrix());
  });
}

Var Tape::transpose(Var a) {
  const int ia = a.idx_;
  return push(val(ia).transpose(),
              [ia](Tape& t, const Matrix& g) { t.grad(ia) += g.transpose(); });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail("concat_cols: no parts");
  const int rows = parts[0].rows();
  int cols = 0;
  std::vector<int> idx, widths;
  for (const Var& p : parts) {
    if (p.rows() != rows) fail("concat_cols: row mismatch");
    idx.push_back(p.idx_);
    widths.push_back(p.cols());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  int c = 0;
  for (size_t i = 0; i < idx.size(); ++i) {
    out.middleCols(c, widths[i]) = val(idx[i]);
    c += widths[i];
  }
  return push(std::move(out), [idx, widths](Tape& t, const Matrix& g) {
    int c = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
      t.grad(idx[i]) += g.middleCols(c, widths[i]);
      c += widths[i];
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) fail("concat_rows: no parts");
  const int cols = parts[0].cols();
  int rows = 0;
  std::vector<int> idx, heights;
  for (const Var& p : parts) {
    if (p.cols() != cols) fail("concat_rows: col mismatch");
    idx.push_back(p.idx_);
    heights.push_back(p.rows());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  int r = 0;
  for (size_t i = 0; i < idx.size(); ++i) {
    out.middleRows(r, heights[i]) = val(idx[i]);
    r += heights[i];
  }
  return push(std::move(out), [idx, heights](Tape& t, const Matrix& g) {
    int r = 0;
    for (size_t i = 0; i < idx.size(); ++i) {
      t.grad(idx[i]) += g.middleRows(r, heights[i]);
      r += heights[i];
    }
  });
}

Var Tape::slice_cols(Var m, int col0, int ncols) {
  if (col0 < 0 || col0 + ncols > m.cols()) fail("slice_cols: out of range");
  const int im = m.idx_;
  return push(val(im).middleCols(col0, ncols), [im, col0, ncols](Tape& t, const Matrix& g) {
    t.grad(im).middleCols(col0, ncols) += g;
  });
}

Var Tape::row(Var m, int r) { return gather_rows(m, {r}); }

Var Tape::gather_rows(Var m, std::vector<int> ids) {
  const int im = m.idx_;
  Matrix out(static_cast<int>(ids.size()), m.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= m.rows()) fail("gather_rows: row ", ids[i], " out of range");
    out.row(static_cast<int>(i)) = val(im).row(ids[i]);
  }
  return push(std::move(out), [im, ids = std::move(ids)](Tape& t, const Matrix& g) {
    for (size_t i = 0; i < ids.size(); ++i)
      t.grad(im).row(ids[i]) += g.row(static_cast<int>(i));
  });
}

Var Tape::segment_mean_rows(Var m, std::vector<int> segments, int num_segments) {
  if (static_cast<int>(segments.size()) != m.rows())
    fail("segment_mean_rows: segment list length ", segments.size(), " vs rows ", m.rows());
  const int im = m.idx_;
  std::vector<int> counts(num_segments, 0);
  for (int s : segments) {
    if (s < 0 || s >= num_segments) fail("segment_mean_rows: segment ", s, " out of range");
    counts[s]++;
  }
  Matrix out = Matrix::Zero(num_segments, m.cols());
  for (int r = 0; r < m.rows(); ++r) out.row(segments[r]) += val(im).row(r);
  for (int s = 0; s < num_segments; ++s)
    if (counts[s] > 0) out.row(s) /= static_cast<double>(counts[s]);
  return push(std::move(out),
              [im, segments = std::move(segments), counts](Tape& t, const Matrix& g) {
                for (size_t r = 0; r < segments.size(); ++r)
                  t.grad(im).row(static_cast<int>(r)) +=
                      g.row(segments[r]) / static_cast<double>(counts[segments[r]]);
              });
}

Var Tape::mean_rows(Var m) {
  const int im = m.idx_;
  const int n = m.rows();
  if (n == 0) fail("mean_rows: empty matrix");
  Matrix out = val(im).colwise().mean();
  return push(std::move(out), [im, n](Tape& t, const Matrix& g) {
    t.grad(im).rowwise() += Eigen::RowVectorXd(g.row(0) / static_cast<double>(n));
  });
}

Var Tape::repeat_row(Var rowv, int n) {
  if (rowv.rows() != 1) fail("repeat_row: input must be 1 x c");
  const int ir = rowv.idx_;
  Matrix out = val(ir).replicate(n, 1);
  return push(std::move(out),
              [ir](Tape& t, const Matrix& g) { t.grad(ir) += g.colwise().sum(); });
}

Var Tape::masked_softmax_col(Var col, const std::vector<uint8_t>& mask) {
  if (col.cols() != 1) fail("masked_softmax_col: input must be n x 1");
  if (static_cast<int>(mask.size()) != col.rows())
    fail("masked_softmax_col: mask length ", mask.size(), " vs rows ", col.rows());
  const int ic = col.idx_;
  const Matrix& x = val(ic);
  double mx = -std::numeric_limits<double>::infinity();
  int live = 0;
  for (int i = 0; i < x.rows(); ++i)
    if (mask[i]) {
      mx = std::max(mx, x(i, 0));
      ++live;
    }
  if (live == 0) fail("masked_softmax_col: no unmasked entries");
  Matrix y = Matrix::Zero(x.rows(), 1);
  double z = 0.0;
  for (int i = 0; i < x.rows(); ++i)
    if (mask[i]) {
      y(i, 0) = std::exp(x(i, 0) - mx);
      z += y(i, 0);
    }
  y /= z;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(y), [ic, self, mask](Tape& t, const Matrix& g) {
    const Matrix& y = t.val(self);
    double dot = 0.0;
    for (int i = 0; i < y.rows(); ++i)
      if (mask[i]) dot += g(i, 0) * y(i, 0);
    Matrix dx = Matrix::Zero(y.rows(), 1);
    for (int i = 0; i < y.rows(); ++i)
      if (mask[i]) dx(i, 0) = y(i, 0) * (g(i, 0) - dot);
    t.grad(ic) += dx;
  });
}

Var Tape::log_softmax_row(Var logits) {
  if (logits.rows() != 1) fail("log_softmax_row: input must be 1 x n");
  const int il = logits.idx_;
  const Matrix& x = val(il);
  const double mx = x.maxCoeff();
  const double lse = mx + std::log((x.array() - mx).exp().sum());
  Matrix y = x.array() - lse;
  const int self = static_cast<int>(nodes_.size());
  return push(std::move(y), [il, self](Tape& t, const Matrix& g) {
    const Matrix p = t.val(self).array().exp().matrix();
    t.grad(il) += g - p * g.sum();
  });
}

Var Tape::pick(Var m, int r, int c) {
  if (r < 0 || r >= m.rows() || c < 0 || c >= m.cols()) fail("pick: out of range");
  const int im = m.idx_;
  Matrix out(1, 1);
  out(0, 0) = val(im)(r, c);
  return push(std::move(out),
              [im, r, c](Tape& t, const Matrix& g) { t.grad(im)(r, c) += g(0, 0); });
}

Var Tape::sum_all(Var m) {
  const int im = m.idx_;
  Matrix out(1, 1);
  out(0, 0) = val(im).sum();
  return push(std::move(out), [im](Tape& t, const Matrix& g) {
    t.grad(im).array() += g(0, 0);
  });
}

Var Tape::linear(Var x, Parameter& w, Parameter& b) {
  return add_rowvec(matmul(x, param(w)), param(b));
}

bool Tape::all_finite(Var v) const { return val(v.idx_).allFinite(); }

void Tape::backward(Var loss, double seed) {
  if (loss.tape_ != this) fail("backward: loss from another tape");
  if (loss.rows() != 1 || loss.cols() != 1) fail("backward: loss must be 1 x 1");
  grad(loss.idx_)(0, 0) += seed;
  for (int i = loss.idx_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) continue;  // never touched, nothing to propagate
    if (n.backprop) n.backprop(*this, n.grad);
    if (n.bound) n.bound->grad += n.grad;
  }
}

}  // namespace sgvqa::nn
