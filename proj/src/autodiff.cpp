// Copyright 2026 The tadvit Authors
// SPDX-License-Identifier: Apache-2.0
#include "tadvit/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tadvit {
namespace {

template <typename Scalar>
using NodePtr = std::shared_ptr<Node<Scalar>>;

template <typename Scalar>
Var<Scalar> make_result(Tensor<Scalar> value, std::vector<Var<Scalar>> inputs,
                        std::function<void(Node<Scalar>&)> backward) {
  Tape<Scalar>* tape = nullptr;
  for (const auto& in : inputs) {
    if (!in.requires_grad()) continue;
    if (tape && in.tape() != tape) throw Error("op mixes values from different tapes");
    tape = in.tape();
  }
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  if (!tape) return Var<Scalar>(std::move(node));
  node->inputs.reserve(inputs.size());
  for (auto& in : inputs) node->inputs.push_back(in.node());
  node->backward = std::move(backward);
  return tape->record(std::move(node));
}

template <typename Scalar>
bool wants(const NodePtr<Scalar>& n) {
  return n->requires_grad;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename Scalar>
void require_matrix(const Var<Scalar>& x, const char* op) {
  require(x.valid() && x.value().rank() == 2,
          std::string(op) + ": expected a matrix, got " +
              (x.valid() ? to_string(x.shape()) : std::string("<null>")));
}

/// Row-wise softmax of a row-major block, in place.
template <typename Derived>
void softmax_rows_inplace(Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  for (Index r = 0; r < m.rows(); ++r) {
    auto row = m.row(r).array();
    row = (row - row.maxCoeff()).exp();
    row *= Scalar(1) / row.sum();
  }
}

/// gx += y * (g - <y, g>) row by row: the softmax Jacobian-vector product.
template <typename Y, typename G, typename Out>
void softmax_backward_add(const Eigen::MatrixBase<Y>& y, const Eigen::MatrixBase<G>& g,
                          Eigen::MatrixBase<Out>&& gx) {
  for (Index r = 0; r < y.rows(); ++r) {
    const auto dot = y.row(r).dot(g.row(r));
    gx.row(r).array() += y.row(r).array() * (g.row(r).array() - dot);
  }
}
template <typename Y, typename G, typename Out>
void softmax_backward_add(const Eigen::MatrixBase<Y>& y, const Eigen::MatrixBase<G>& g,
                          Eigen::MatrixBase<Out>& gx) {
  softmax_backward_add(y, g, std::move(gx));
}

}  // namespace

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  require(a.cols() == b.rows(),
          "matmul: inner dimensions differ, " + to_string(a.shape()) + " * " + to_string(b.shape()));
  Tensor<Scalar> out({a.rows(), b.cols()}, typename Tensor<Scalar>::Uninitialized{});
  out.matrix().noalias() = a.value().matrix() * b.value().matrix();
  return make_result<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& n) {
    auto& lhs = n.inputs[0];
    auto& rhs = n.inputs[1];
    if (wants(lhs))
      lhs->grad_buffer().matrix().noalias() += n.grad.matrix() * rhs->value.matrix().transpose();
    if (wants(rhs))
      rhs->grad_buffer().matrix().noalias() += lhs->value.matrix().transpose() * n.grad.matrix();
  });
}

template <typename Scalar>
Var<Scalar> matmul_nt(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  require(a.cols() == b.cols(), "matmul_nt: inner dimensions differ, " + to_string(a.shape()) +
                                    " * " + to_string(b.shape()) + "^T");
  Tensor<Scalar> out({a.rows(), b.rows()}, typename Tensor<Scalar>::Uninitialized{});
  out.matrix().noalias() = a.value().matrix() * b.value().matrix().transpose();
  return make_result<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& n) {
    auto& lhs = n.inputs[0];
    auto& rhs = n.inputs[1];
    if (wants(lhs)) lhs->grad_buffer().matrix().noalias() += n.grad.matrix() * rhs->value.matrix();
    if (wants(rhs))
      rhs->grad_buffer().matrix().noalias() += n.grad.matrix().transpose() * lhs->value.matrix();
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require(a.shape() == b.shape(),
          "add: shapes differ, " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<Scalar> out(a.shape(), typename Tensor<Scalar>::Uninitialized{});
  out.array() = a.value().array() + b.value().array();
  return make_result<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& n) {
    for (auto& in : n.inputs)
      if (wants(in)) in->grad_buffer().array() += n.grad.array();
  });
}

template <typename Scalar>
Var<Scalar> add_bias(const Var<Scalar>& x, const Var<Scalar>& bias) {
  require(bias.value().size() == x.cols() && bias.value().size() == bias.cols(),
          "add_bias: bias " + to_string(bias.shape()) + " does not match rows of " +
              to_string(x.shape()));
  Tensor<Scalar> out(x.shape(), typename Tensor<Scalar>::Uninitialized{});
  out.matrix() = x.value().matrix().rowwise() + bias.value().matrix().row(0);
  return make_result<Scalar>(std::move(out), {x, bias}, [](Node<Scalar>& n) {
    if (wants(n.inputs[0])) n.inputs[0]->grad_buffer().array() += n.grad.array();
    if (wants(n.inputs[1]))
      n.inputs[1]->grad_buffer().matrix().row(0) += n.grad.matrix().colwise().sum();
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require(a.shape() == b.shape(),
          "mul: shapes differ, " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  Tensor<Scalar> out(a.shape(), typename Tensor<Scalar>::Uninitialized{});
  out.array() = a.value().array() * b.value().array();
  return make_result<Scalar>(std::move(out), {a, b}, [](Node<Scalar>& n) {
    auto& lhs = n.inputs[0];
    auto& rhs = n.inputs[1];
    if (wants(lhs)) lhs->grad_buffer().array() += n.grad.array() * rhs->value.array();
    if (wants(rhs)) rhs->grad_buffer().array() += n.grad.array() * lhs->value.array();
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& x, Scalar factor) {
  Tensor<Scalar> out(x.shape(), typename Tensor<Scalar>::Uninitialized{});
  out.array() = x.value().array() * factor;
  return make_result<Scalar>(std::move(out), {x}, [factor](Node<Scalar>& n) {
    if (wants(n.inputs[0])) n.inputs[0]->grad_buffer().array() += n.grad.array() * factor;
  });
}

template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& x) {
  const Scalar c = static_cast<Scalar>(std::sqrt(2.0 / std::numbers::pi));
  const Scalar k = static_cast<Scalar>(0.044715);
  const auto& in = x.value().array();
  Tensor<Scalar> t(x.shape(), typename Tensor<Scalar>::Uninitialized{});
  t.array() = (c * (in + k * in.cube())).tanh();
  Tensor<Scalar> out(x.shape(), typename Tensor<Scalar>::Uninitialized{});
  out.array() = Scalar(0.5) * in * (Scalar(1) + t.array());
  return make_result<Scalar>(std::move(out), {x}, [c, k, t = std::move(t)](Node<Scalar>& n) {
    auto& src = n.inputs[0];
    if (!wants(src)) return;
    const auto& v = src->value.array();
    const auto& th = t.array();
    src->grad_buffer().array() +=
        n.grad.array() * (Scalar(0.5) * (Scalar(1) + th) +
                          Scalar(0.5) * v * (Scalar(1) - th.square()) * c *
                              (Scalar(1) + Scalar(3) * k * v.square()));
  });
}

template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gain, const Var<Scalar>& bias,
                       Scalar eps) {
  const Index d = x.cols();
  require(d > 0, "layer_norm: empty feature dimension");
  require(gain.value().size() == d && bias.value().size() == d,
          "layer_norm: gain " + to_string(gain.shape()) + " / bias " + to_string(bias.shape()) +
              " do not match " + to_string(x.shape()));
  const Index rows = x.rows();
  using Matrix = typename Tensor<Scalar>::Matrix;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const auto xm = x.value().matrix();
  Vector inv_std(rows);
  Matrix normed(rows, d);
  for (Index r = 0; r < rows; ++r) {
    const Scalar mean = xm.row(r).mean();
    auto centered = (xm.row(r).array() - mean);
    const Scalar var = centered.square().mean();
    inv_std(r) = Scalar(1) / std::sqrt(var + eps);
    normed.row(r) = (centered * inv_std(r)).matrix();
  }
  Tensor<Scalar> out(x.shape(), typename Tensor<Scalar>::Uninitialized{});
  out.matrix() = (normed.array().rowwise() * gain.value().matrix().row(0).array()).matrix();
  out.matrix().rowwise() += bias.value().matrix().row(0);
  return make_result<Scalar>(
      std::move(out), {x, gain, bias},
      [normed = std::move(normed), inv_std = std::move(inv_std)](Node<Scalar>& n) {
        auto& src = n.inputs[0];
        auto& g = n.inputs[1];
        auto& b = n.inputs[2];
        const auto go = n.grad.matrix();
        if (wants(g))
          g->grad_buffer().matrix().row(0) +=
              (go.array() * normed.array()).matrix().colwise().sum();
        if (wants(b)) b->grad_buffer().matrix().row(0) += go.colwise().sum();
        if (!wants(src)) return;
        auto gx = src->grad_buffer().matrix();
        const auto gain_row = g->value.matrix().row(0).array();
        for (Index r = 0; r < go.rows(); ++r) {
          const auto dn = (go.row(r).array() * gain_row).eval();
          const Scalar mean_dn = dn.mean();
          const Scalar mean_dn_n = (dn * normed.row(r).array()).mean();
          gx.row(r).array() +=
              inv_std(r) * (dn - mean_dn - normed.row(r).array() * mean_dn_n);
        }
      });
}

template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& x) {
  Tensor<Scalar> out(x.shape(), typename Tensor<Scalar>::Uninitialized{});
  auto om = out.matrix();
  om = x.value().matrix();
  softmax_rows_inplace(om);
  return make_result<Scalar>(std::move(out), {x}, [](Node<Scalar>& n) {
    auto& src = n.inputs[0];
    if (!wants(src)) return;
    softmax_backward_add(n.value.matrix(), n.grad.matrix(), src->grad_buffer().matrix());
  });
}

template <typename Scalar>
Var<Scalar> attention(const Var<Scalar>& qkv, int heads) {
  require_matrix(qkv, "attention");
  require(heads >= 1 && qkv.cols() % (3 * heads) == 0,
          "attention: " + std::to_string(qkv.cols()) + " columns do not split into q, k, v for " +
              std::to_string(heads) + " heads");
  using Matrix = typename Tensor<Scalar>::Matrix;
  const Index n_rows = qkv.rows();
  const Index d = qkv.cols() / 3;
  const Index dh = d / heads;
  const Scalar scaling = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));
  const auto in = qkv.value().matrix();
  const bool keep = qkv.requires_grad();
  Tensor<Scalar> out({n_rows, d}, typename Tensor<Scalar>::Uninitialized{});
  auto om = out.matrix();
  std::vector<Matrix> probs;
  if (keep) probs.reserve(static_cast<std::size_t>(heads));
  Matrix p(n_rows, n_rows);
  for (int h = 0; h < heads; ++h) {
    p.noalias() = in.middleCols(h * dh, dh) * in.middleCols(d + h * dh, dh).transpose();
    p *= scaling;
    softmax_rows_inplace(p);
    om.middleCols(h * dh, dh).noalias() = p * in.middleCols(2 * d + h * dh, dh);
    if (keep) probs.push_back(p);
  }
  return make_result<Scalar>(
      std::move(out), {qkv}, [probs = std::move(probs), heads, d, dh, scaling](Node<Scalar>& n) {
        auto& src = n.inputs[0];
        if (!wants(src)) return;
        const auto x = src->value.matrix();
        const auto go = n.grad.matrix();
        auto gx = src->grad_buffer().matrix();
        Matrix dp(x.rows(), x.rows());
        Matrix ds(x.rows(), x.rows());
        for (int h = 0; h < heads; ++h) {
          const Matrix& p = probs[static_cast<std::size_t>(h)];
          const auto q = x.middleCols(h * dh, dh);
          const auto k = x.middleCols(d + h * dh, dh);
          const auto v = x.middleCols(2 * d + h * dh, dh);
          const auto g = go.middleCols(h * dh, dh);
          gx.middleCols(2 * d + h * dh, dh).noalias() += p.transpose() * g;
          dp.noalias() = g * v.transpose();
          ds.setZero();
          softmax_backward_add(p, dp, ds);
          ds *= scaling;
          gx.middleCols(h * dh, dh).noalias() += ds * k;
          gx.middleCols(d + h * dh, dh).noalias() += ds.transpose() * q;
        }
      });
}

template <typename Scalar>
Var<Scalar> slice_cols(const Var<Scalar>& x, Index start, Index count) {
  require(start >= 0 && count > 0 && start + count <= x.cols(),
          "slice_cols: columns [" + std::to_string(start) + ", " + std::to_string(start + count) +
              ") out of range for " + to_string(x.shape()));
  Tensor<Scalar> out({x.rows(), count}, typename Tensor<Scalar>::Uninitialized{});
  out.matrix() = x.value().matrix().middleCols(start, count);
  return make_result<Scalar>(std::move(out), {x}, [start, count](Node<Scalar>& n) {
    if (wants(n.inputs[0]))
      n.inputs[0]->grad_buffer().matrix().middleCols(start, count) += n.grad.matrix();
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require(p.rows() == rows, "concat_cols: row counts differ, " + to_string(p.shape()) +
                                  " vs " + to_string(parts.front().shape()));
    cols += p.cols();
  }
  Tensor<Scalar> out({rows, cols}, typename Tensor<Scalar>::Uninitialized{});
  Index offset = 0;
  for (const auto& p : parts) {
    out.matrix().middleCols(offset, p.cols()) = p.value().matrix();
    offset += p.cols();
  }
  return make_result<Scalar>(std::move(out), std::vector<Var<Scalar>>(parts.begin(), parts.end()),
                             [](Node<Scalar>& n) {
                               Index offset = 0;
                               for (auto& in : n.inputs) {
                                 const Index c = in->value.cols();
                                 if (wants(in))
                                   in->grad_buffer().matrix() += n.grad.matrix().middleCols(offset, c);
                                 offset += c;
                               }
                             });
}

template <typename Scalar>
Var<Scalar> gather_rows(const Var<Scalar>& x, std::span<const Index> indices) {
  require(!indices.empty(), "gather_rows: no indices");
  const Index rows = x.rows();
  for (Index i : indices)
    require(i >= 0 && i < rows, "gather_rows: index " + std::to_string(i) + " out of range for " +
                                    to_string(x.shape()));
  std::vector<Index> idx(indices.begin(), indices.end());
  Tensor<Scalar> out({static_cast<Index>(idx.size()), x.cols()}, typename Tensor<Scalar>::Uninitialized{});
  for (std::size_t i = 0; i < idx.size(); ++i)
    out.matrix().row(static_cast<Index>(i)) = x.value().matrix().row(idx[i]);
  return make_result<Scalar>(std::move(out), {x}, [idx = std::move(idx)](Node<Scalar>& n) {
    if (!wants(n.inputs[0])) return;
    auto gx = n.inputs[0]->grad_buffer().matrix();
    for (std::size_t i = 0; i < idx.size(); ++i) gx.row(idx[i]) += n.grad.matrix().row(static_cast<Index>(i));
  });
}

template <typename Scalar>
Var<Scalar> scatter_rows(const Var<Scalar>& rows, std::span<const Index> indices,
                         const Var<Scalar>& fill, Index total) {
  const Index d = rows.cols();
  require(fill.value().size() == d, "scatter_rows: fill " + to_string(fill.shape()) +
                                        " does not match rows " + to_string(rows.shape()));
  require(static_cast<Index>(indices.size()) == rows.rows(),
          "scatter_rows: " + std::to_string(indices.size()) + " indices for " +
              std::to_string(rows.rows()) + " rows");
  std::vector<std::uint8_t> taken(static_cast<std::size_t>(total), 0);
  for (Index i : indices) {
    require(i >= 0 && i < total, "scatter_rows: index " + std::to_string(i) +
                                     " out of range for " + std::to_string(total) + " rows");
    require(!taken[static_cast<std::size_t>(i)], "scatter_rows: duplicate index " + std::to_string(i));
    taken[static_cast<std::size_t>(i)] = 1;
  }
  std::vector<Index> idx(indices.begin(), indices.end());
  Tensor<Scalar> out({total, d}, typename Tensor<Scalar>::Uninitialized{});
  auto om = out.matrix();
  for (Index r = 0; r < total; ++r)
    if (!taken[static_cast<std::size_t>(r)]) om.row(r) = fill.value().matrix().row(0);
  for (std::size_t i = 0; i < idx.size(); ++i) om.row(idx[i]) = rows.value().matrix().row(static_cast<Index>(i));
  return make_result<Scalar>(
      std::move(out), {rows, fill},
      [idx = std::move(idx), taken = std::move(taken)](Node<Scalar>& n) {
        const auto go = n.grad.matrix();
        if (wants(n.inputs[0])) {
          auto gr = n.inputs[0]->grad_buffer().matrix();
          for (std::size_t i = 0; i < idx.size(); ++i) gr.row(static_cast<Index>(i)) += go.row(idx[i]);
        }
        if (wants(n.inputs[1])) {
          auto gf = n.inputs[1]->grad_buffer().matrix();
          for (Index r = 0; r < go.rows(); ++r)
            if (!taken[static_cast<std::size_t>(r)]) gf.row(0) += go.row(r);
        }
      });
}

template <typename Scalar>
Var<Scalar> mean_rows(const Var<Scalar>& x) {
  // Each column is summed in ascending order, so the pooled value does not
  // depend on the order of the rows.
  const auto xm = x.value().matrix();
  const Index rows = xm.rows();
  Tensor<Scalar> out({1, x.cols()}, typename Tensor<Scalar>::Uninitialized{});
  std::vector<Scalar> column(static_cast<std::size_t>(rows));
  for (Index c = 0; c < xm.cols(); ++c) {
    for (Index r = 0; r < rows; ++r) column[static_cast<std::size_t>(r)] = xm(r, c);
    std::sort(column.begin(), column.end());
    Scalar total(0);
    for (Scalar v : column) total += v;
    out[c] = total / static_cast<Scalar>(rows);
  }
  return make_result<Scalar>(std::move(out), {x}, [](Node<Scalar>& n) {
    auto& src = n.inputs[0];
    if (!wants(src)) return;
    const Scalar inv = Scalar(1) / static_cast<Scalar>(src->value.rows());
    src->grad_buffer().matrix().rowwise() += n.grad.matrix().row(0) * inv;
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& x) {
  Tensor<Scalar> out({1});
  out[0] = x.value().array().sum();
  return make_result<Scalar>(std::move(out), {x}, [](Node<Scalar>& n) {
    if (wants(n.inputs[0])) n.inputs[0]->grad_buffer().array() += n.grad[0];
  });
}

template <typename Scalar>
Var<Scalar> masked_mse(const Var<Scalar>& prediction, const Var<Scalar>& target,
                       std::span<const std::uint8_t> row_mask) {
  require(prediction.shape() == target.shape(), "masked_mse: prediction " +
                                                    to_string(prediction.shape()) + " vs target " +
                                                    to_string(target.shape()));
  require(static_cast<Index>(row_mask.size()) == prediction.rows(),
          "masked_mse: mask has " + std::to_string(row_mask.size()) + " rows, prediction " +
              to_string(prediction.shape()));
  std::vector<Index> rows;
  for (std::size_t r = 0; r < row_mask.size(); ++r)
    if (row_mask[r]) rows.push_back(static_cast<Index>(r));
  const Index cols = prediction.cols();
  const Scalar count = static_cast<Scalar>(rows.size()) * static_cast<Scalar>(cols);
  const auto pm = prediction.value().matrix();
  const auto tm = target.value().matrix();
  Scalar total = 0;
  for (Index r : rows) total += (pm.row(r) - tm.row(r)).squaredNorm();
  Tensor<Scalar> out({1});
  out[0] = rows.empty() ? Scalar(0) : total / count;
  return make_result<Scalar>(
      std::move(out), {prediction, target}, [rows = std::move(rows), count](Node<Scalar>& n) {
        if (rows.empty()) return;
        auto& p = n.inputs[0];
        auto& t = n.inputs[1];
        const Scalar factor = Scalar(2) * n.grad[0] / count;
        for (Index r : rows) {
          const auto diff = (p->value.matrix().row(r) - t->value.matrix().row(r)).eval();
          if (wants(p)) p->grad_buffer().matrix().row(r) += factor * diff;
          if (wants(t)) t->grad_buffer().matrix().row(r) -= factor * diff;
        }
      });
}

template <typename Scalar>
Var<Scalar> softmax_cross_entropy(const Var<Scalar>& logits, Index label) {
  require(logits.rows() == 1, "softmax_cross_entropy: expected one logit row, got " +
                                  to_string(logits.shape()));
  if (label < 0 || label >= logits.cols()) {
    throw ConfigError("softmax_cross_entropy: label " + std::to_string(label) +
                      " outside [0, " + std::to_string(logits.cols()) + ")");
  }
  const auto z = logits.value().array();
  const Scalar top = z.maxCoeff();
  const Scalar lse = top + std::log((z - top).exp().sum());
  Tensor<Scalar> out({1});
  out[0] = lse - z(label);
  return make_result<Scalar>(std::move(out), {logits}, [lse, label](Node<Scalar>& n) {
    auto& src = n.inputs[0];
    if (!wants(src)) return;
    auto g = src->grad_buffer().array();
    g += n.grad[0] * (src->value.array() - lse).exp();
    g(label) -= n.grad[0];
  });
}

#define TADVIT_INSTANTIATE_OPS(S)                                                              \
  template Var<S> matmul(const Var<S>&, const Var<S>&);                                        \
  template Var<S> matmul_nt(const Var<S>&, const Var<S>&);                                     \
  template Var<S> add(const Var<S>&, const Var<S>&);                                           \
  template Var<S> add_bias(const Var<S>&, const Var<S>&);                                      \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                           \
  template Var<S> scale(const Var<S>&, S);                                                     \
  template Var<S> gelu(const Var<S>&);                                                         \
  template Var<S> layer_norm(const Var<S>&, const Var<S>&, const Var<S>&, S);                  \
  template Var<S> softmax_rows(const Var<S>&);                                                 \
  template Var<S> attention(const Var<S>&, int);                                                 \
  template Var<S> slice_cols(const Var<S>&, Index, Index);                                     \
  template Var<S> concat_cols(std::span<const Var<S>>);                                        \
  template Var<S> gather_rows(const Var<S>&, std::span<const Index>);                          \
  template Var<S> scatter_rows(const Var<S>&, std::span<const Index>, const Var<S>&, Index);   \
  template Var<S> mean_rows(const Var<S>&);                                                    \
  template Var<S> sum(const Var<S>&);                                                          \
  template Var<S> masked_mse(const Var<S>&, const Var<S>&, std::span<const std::uint8_t>);     \
  template Var<S> softmax_cross_entropy(const Var<S>&, Index);

TADVIT_INSTANTIATE_OPS(float)
TADVIT_INSTANTIATE_OPS(double)

}  // namespace tadvit
