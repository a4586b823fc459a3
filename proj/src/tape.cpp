#include "egcm/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "egcm/error.hpp"

namespace egcm::ad {

Var Tape::constant(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var{nodes_.size() - 1};
}

Var Tape::parameter(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, true});
  params_.push_back(Var{nodes_.size() - 1});
  return params_.back();
}

Var Tape::record(Tensor2 value, std::span<const Var> inputs, Backprop backprop) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [this](Var v) { return nodes_[v.id].requires_grad; });
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backprop) : Backprop{}, needs});
  return Var{nodes_.size() - 1};
}

Tensor2 Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty() && !n.value.empty()) return Tensor2(n.value.rows(), n.value.cols());
  return n.grad;
}

Tensor2& Tape::grad_buffer(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.empty()) n.grad = Tensor2(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor2& g) {
  if (!nodes_[v.id].requires_grad) return;
  Tensor2& buf = grad_buffer(v);
  if (!buf.same_shape(g)) throw ShapeError("gradient shape mismatch");
  auto b = buf.data();
  auto s = g.data();
  for (std::size_t i = 0; i < b.size(); ++i) b[i] += s[i];
}

void Tape::backward(Var loss) {
  const Tensor2& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward needs a scalar loss");
  for (Node& n : nodes_) n.grad = Tensor2();
  nodes_[loss.id].grad = Tensor2(1, 1, 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backprop || n.grad.empty()) continue;
    // The closure may grow other nodes' buffers; keep our gradient stable.
    const Tensor2 g = n.grad;
    n.backprop(*this, g);
  }
}

Var matmul(Tape& t, Var a, Var b) {
  const Var in[] = {a, b};
  return t.record(egcm::matmul(t.value(a), t.value(b)), in, [a, b](Tape& tp, const Tensor2& g) {
    if (tp.requires_grad(a)) tp.accumulate(a, matmul_nt(g, tp.value(b)));
    if (tp.requires_grad(b)) tp.accumulate(b, matmul_tn(tp.value(a), g));
  });
}

Var add_row_bias(Tape& t, Var x, Var bias) {
  const Tensor2& xv = t.value(x);
  const Tensor2& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) throw ShapeError("bias must be 1 x cols");
  Tensor2 y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
  }
  const Var in[] = {x, bias};
  return t.record(std::move(y), in, [x, bias](Tape& tp, const Tensor2& g) {
    tp.accumulate(x, g);
    if (tp.requires_grad(bias)) {
      Tensor2& gb = tp.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
    }
  });
}

Var relu(Tape& t, Var x) {
  const Var in[] = {x};
  return t.record(egcm::relu(t.value(x)), in, [x](Tape& tp, const Tensor2& g) {
    Tensor2 gx = g;
    const auto xv = tp.value(x).data();
    auto gd = gx.data();
    // Subgradient 0 at exactly 0.
    for (std::size_t i = 0; i < gd.size(); ++i)
      if (!(xv[i] > 0.0)) gd[i] = 0.0;
    tp.accumulate(x, gx);
  });
}

Var mul_mask(Tape& t, Var x, Tensor2 mask) {
  const Tensor2& xv = t.value(x);
  if (!xv.same_shape(mask)) throw ShapeError("mask shape mismatch");
  Tensor2 y = xv;
  auto yd = y.data();
  auto md = mask.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] *= md[i];
  const Var in[] = {x};
  return t.record(std::move(y), in, [x, mask = std::move(mask)](Tape& tp, const Tensor2& g) {
    Tensor2 gx = g;
    auto gd = gx.data();
    auto md = mask.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= md[i];
    tp.accumulate(x, gx);
  });
}

Var dropout(Tape& t, Var x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return x;
  const Tensor2& xv = t.value(x);
  return mul_mask(t, x, dropout_mask(xv.rows(), xv.cols(), p, rng));
}

Var hconcat(Tape& t, Var a, Var b) {
  const std::size_t ca = t.value(a).cols();
  const Var in[] = {a, b};
  return t.record(egcm::hconcat(t.value(a), t.value(b)), in, [a, b, ca](Tape& tp, const Tensor2& g) {
    if (tp.requires_grad(a)) {
      Tensor2& ga = tp.grad_buffer(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < ca; ++c) ga(r, c) += g(r, c);
    }
    if (tp.requires_grad(b)) {
      Tensor2& gb = tp.grad_buffer(b);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = ca; c < g.cols(); ++c) gb(r, c - ca) += g(r, c);
    }
  });
}

Var softmax_rows(Tape& t, Var x) {
  const Var in[] = {x};
  // The node about to be recorded; its value is the softmax output.
  const Var self{t.size()};
  // dx = y * (g - <g, y>) per row.
  return t.record(egcm::softmax_rows(t.value(x)), in, [x, self](Tape& tp, const Tensor2& g) {
    const Tensor2& yv = tp.value(self);
    Tensor2 gx(g.rows(), g.cols());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < g.cols(); ++c) dot += g(r, c) * yv(r, c);
      for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) = yv(r, c) * (g(r, c) - dot);
    }
    tp.accumulate(x, gx);
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor2& av = t.value(a);
  const Tensor2& bv = t.value(b);
  if (!av.same_shape(bv)) throw ShapeError("add shape mismatch");
  Tensor2 y = av;
  auto yd = y.data();
  auto bd = bv.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += bd[i];
  const Var in[] = {a, b};
  return t.record(std::move(y), in, [a, b](Tape& tp, const Tensor2& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var scale(Tape& t, Var a, double factor) {
  Tensor2 y = t.value(a);
  for (double& v : y.data()) v *= factor;
  const Var in[] = {a};
  return t.record(std::move(y), in, [a, factor](Tape& tp, const Tensor2& g) {
    Tensor2 ga = g;
    for (double& v : ga.data()) v *= factor;
    tp.accumulate(a, ga);
  });
}

Var sum(Tape& t, Var x) {
  double s = 0.0;
  for (double v : t.value(x).data()) s += v;
  const Var in[] = {x};
  return t.record(Tensor2(1, 1, s), in, [x](Tape& tp, const Tensor2& g) {
    const Tensor2& xv = tp.value(x);
    tp.accumulate(x, Tensor2(xv.rows(), xv.cols(), g(0, 0)));
  });
}

Var gather_concat_rows(Tape& t, Var x, std::span<const std::size_t> left,
                       std::span<const std::size_t> right) {
  if (left.size() != right.size()) throw ShapeError("gather index lists differ in length");
  const Tensor2& xv = t.value(x);
  const std::size_t d = xv.cols();
  Tensor2 y(left.size(), 2 * d);
  for (std::size_t r = 0; r < left.size(); ++r) {
    if (left[r] >= xv.rows() || right[r] >= xv.rows()) throw std::out_of_range("gather index");
    auto out = y.row(r);
    std::copy(xv.row(left[r]).begin(), xv.row(left[r]).end(), out.begin());
    std::copy(xv.row(right[r]).begin(), xv.row(right[r]).end(), out.begin() + static_cast<std::ptrdiff_t>(d));
  }
  const Var in[] = {x};
  std::vector<std::size_t> l(left.begin(), left.end());
  std::vector<std::size_t> rr(right.begin(), right.end());
  return t.record(std::move(y), in, [x, d, l = std::move(l), rr = std::move(rr)](Tape& tp, const Tensor2& g) {
    Tensor2& gx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < l.size(); ++r) {
      auto gl = gx.row(l[r]);
      for (std::size_t c = 0; c < d; ++c) gl[c] += g(r, c);
      auto gr = gx.row(rr[r]);
      for (std::size_t c = 0; c < d; ++c) gr[c] += g(r, d + c);
    }
  });
}

Var binary_cross_entropy(Tape& t, Var probs, std::span<const int> labels,
                         std::span<const std::size_t> rows, double clamp) {
  const Tensor2& pv = t.value(probs);
  if (pv.cols() != 2) throw ShapeError("binary_cross_entropy expects two probability columns");
  if (labels.size() != pv.rows()) throw ShapeError("label count does not match probability rows");
  if (rows.empty()) throw std::invalid_argument("cross-entropy over an empty edge mask");
  const double lo = clamp;
  const double hi = 1.0 - clamp;
  double total = 0.0;
  for (std::size_t r : rows) {
    const std::size_t col = labels[r] == 1 ? 1 : 0;
    const double p = std::clamp(pv(r, col), lo, hi);
    total -= std::log(p);
  }
  const double n = static_cast<double>(rows.size());
  const Var in[] = {probs};
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  std::vector<int> lab(labels.begin(), labels.end());
  return t.record(Tensor2(1, 1, total / n), in,
                  [probs, lo, hi, n, idx = std::move(idx), lab = std::move(lab)](Tape& tp, const Tensor2& g) {
                    const Tensor2& pv = tp.value(probs);
                    Tensor2& gp = tp.grad_buffer(probs);
                    for (std::size_t r : idx) {
                      const std::size_t col = lab[r] == 1 ? 1 : 0;
                      const double p = pv(r, col);
                      if (p < lo || p > hi) continue;  // clamped: flat
                      gp(r, col) += -g(0, 0) / (n * p);
                    }
                  });
}

}  // namespace egcm::ad
