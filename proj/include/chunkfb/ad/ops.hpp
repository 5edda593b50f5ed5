#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "chunkfb/ad/tape.hpp"
#include "chunkfb/random.hpp"

namespace chunkfb::ad {

namespace detail {

template <typename Scalar>
void check_finite(const Tensor<Scalar>& v, const char* op) {
  if (!v.allFinite()) throw Error(std::string(op) + ": non-finite result");
}

template <typename Scalar>
[[noreturn]] void shape_error(const char* op, const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  throw Error(std::string(op) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

template <typename Scalar>
void same_tape(Var<Scalar> a, Var<Scalar> b, const char* op) {
  if (a.tape != b.tape) throw Error(std::string(op) + ": operands live on different tapes");
}

template <typename Scalar>
Var<Scalar> record(Tape<Scalar>& t, Tensor<Scalar> value, const char* op, bool needs_grad,
                   typename Tape<Scalar>::BackwardFn fn) {
  check_finite(value, op);
  return t.push(std::move(value), needs_grad, std::move(fn));
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b, "matmul");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows()) detail::shape_error("matmul", av, bv);
  Tensor<Scalar> out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  return detail::record(*a.tape, std::move(out), "matmul", a.needs_grad() || b.needs_grad(),
                        [a, b](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          if (t.needs_grad(a)) t.accumulate(a, g * t.value(b).transpose());
                          if (t.needs_grad(b)) t.accumulate(b, t.value(a).transpose() * g);
                        });
}

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b, "add");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) detail::shape_error("add", av, bv);
  return detail::record(*a.tape, Tensor<Scalar>(av + bv), "add", a.needs_grad() || b.needs_grad(),
                        [a, b](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          t.accumulate(a, g);
                          t.accumulate(b, g);
                        });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b, "sub");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) detail::shape_error("sub", av, bv);
  return detail::record(*a.tape, Tensor<Scalar>(av - bv), "sub", a.needs_grad() || b.needs_grad(),
                        [a, b](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          t.accumulate(a, g);
                          t.accumulate(b, -g);
                        });
}

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  detail::same_tape(a, b, "mul");
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows() || av.cols() != bv.cols()) detail::shape_error("mul", av, bv);
  return detail::record(*a.tape, Tensor<Scalar>(av.cwiseProduct(bv)), "mul",
                        a.needs_grad() || b.needs_grad(),
                        [a, b](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
                          if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
                        });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(Var<Scalar> a, Var<Scalar> b) { return mul(a, b); }

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  return detail::record(*a.tape, Tensor<Scalar>(a.value() * s), "scale", a.needs_grad(),
                        [a, s](Tape<Scalar>& t, const Tensor<Scalar>& g) { t.accumulate(a, g * s); });
}

/// Adds a 1 x n row to every row of `a`.
template <typename Scalar>
Var<Scalar> add_row(Var<Scalar> a, Var<Scalar> row) {
  detail::same_tape(a, row, "add_row");
  const auto& av = a.value();
  const auto& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) detail::shape_error("add_row", av, rv);
  Tensor<Scalar> out = av;
  out.rowwise() += rv.row(0);
  return detail::record(*a.tape, std::move(out), "add_row", a.needs_grad() || row.needs_grad(),
                        [a, row](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          t.accumulate(a, g);
                          if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
                        });
}

/// Adds a constant of the same shape.
template <typename Scalar>
Var<Scalar> add_const(Var<Scalar> a, const Tensor<Scalar>& c) {
  const auto& av = a.value();
  if (av.rows() != c.rows() || av.cols() != c.cols()) detail::shape_error("add_const", av, c);
  return detail::record(*a.tape, Tensor<Scalar>(av + c), "add_const", a.needs_grad(),
                        [a](Tape<Scalar>& t, const Tensor<Scalar>& g) { t.accumulate(a, g); });
}

/// Row-wise mix `mask * fresh + (1 - mask) * old` for a constant m x 1 mask.
template <typename Scalar>
Var<Scalar> blend(const Tensor<Scalar>& mask, Var<Scalar> fresh, Var<Scalar> old) {
  detail::same_tape(fresh, old, "blend");
  const auto& fv = fresh.value();
  const auto& ov = old.value();
  if (fv.rows() != ov.rows() || fv.cols() != ov.cols()) detail::shape_error("blend", fv, ov);
  if (mask.rows() != fv.rows() || mask.cols() != 1) detail::shape_error("blend", mask, fv);
  Tensor<Scalar> out(fv.rows(), fv.cols());
  for (Index r = 0; r < fv.rows(); ++r) {
    const Scalar m = mask(r, 0);
    out.row(r) = m * fv.row(r) + (Scalar(1) - m) * ov.row(r);
  }
  return detail::record(*fresh.tape, std::move(out), "blend", fresh.needs_grad() || old.needs_grad(),
                        [mask, fresh, old](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          Tensor<Scalar> gf = g, go = g;
                          for (Index r = 0; r < g.rows(); ++r) {
                            gf.row(r) *= mask(r, 0);
                            go.row(r) *= Scalar(1) - mask(r, 0);
                          }
                          t.accumulate(fresh, gf);
                          t.accumulate(old, go);
                        });
}

template <typename Scalar>
Var<Scalar> sigmoid(Var<Scalar> a) {
  Tensor<Scalar> out = (Scalar(1) + (-a.value().array()).exp()).inverse().matrix();
  const std::size_t self = a.tape->size();
  return detail::record(*a.tape, std::move(out), "sigmoid", a.needs_grad(),
                        [a, self](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          const auto& y = t.value(Var<Scalar>{&t, self}).array();
                          t.accumulate(a, (g.array() * y * (Scalar(1) - y)).matrix());
                        });
}

template <typename Scalar>
Var<Scalar> tanh(Var<Scalar> a) {
  Tensor<Scalar> out = a.value().array().tanh().matrix();
  const std::size_t self = a.tape->size();
  return detail::record(*a.tape, std::move(out), "tanh", a.needs_grad(),
                        [a, self](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          const auto& y = t.value(Var<Scalar>{&t, self}).array();
                          t.accumulate(a, (g.array() * (Scalar(1) - y * y)).matrix());
                        });
}

/// Softmax along `axis` (1: within each row, 0: within each column), with
/// max subtraction.
template <typename Scalar>
Var<Scalar> softmax(Var<Scalar> a, int axis = 1) {
  if (axis != 0 && axis != 1) throw Error("softmax: axis must be 0 or 1");
  Tensor<Scalar> x = axis == 1 ? Tensor<Scalar>(a.value()) : Tensor<Scalar>(a.value().transpose());
  for (Index r = 0; r < x.rows(); ++r) {
    x.row(r).array() -= x.row(r).maxCoeff();
    x.row(r) = x.row(r).array().exp().matrix();
    x.row(r) /= x.row(r).sum();
  }
  Tensor<Scalar> out = axis == 1 ? std::move(x) : Tensor<Scalar>(x.transpose());
  const std::size_t self = a.tape->size();
  return detail::record(*a.tape, std::move(out), "softmax", a.needs_grad(),
                        [a, self, axis](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          const auto& y = t.value(Var<Scalar>{&t, self});
                          const Tensor<Scalar> gy = g.cwiseProduct(y);
                          Tensor<Scalar> ga = gy;
                          if (axis == 1) {
                            for (Index r = 0; r < y.rows(); ++r) ga.row(r) -= gy.row(r).sum() * y.row(r);
                          } else {
                            for (Index c = 0; c < y.cols(); ++c) ga.col(c) -= gy.col(c).sum() * y.col(c);
                          }
                          t.accumulate(a, ga);
                        });
}

/// Concatenation along `axis` (0: stack rows, 1: join columns).
template <typename Scalar>
Var<Scalar> concat(const std::vector<Var<Scalar>>& parts, int axis = 1) {
  if (parts.empty()) throw Error("concat: no operands");
  if (axis != 0 && axis != 1) throw Error("concat: axis must be 0 or 1");
  Tape<Scalar>& tape = *parts.front().tape;
  const auto& first = parts.front().value();
  Index rows = 0, cols = 0;
  bool needs = false;
  for (const auto& p : parts) {
    detail::same_tape(parts.front(), p, "concat");
    const auto& v = p.value();
    if (axis == 1 && v.rows() != first.rows()) detail::shape_error("concat", first, v);
    if (axis == 0 && v.cols() != first.cols()) detail::shape_error("concat", first, v);
    rows = axis == 0 ? rows + v.rows() : first.rows();
    cols = axis == 1 ? cols + v.cols() : first.cols();
    needs = needs || p.needs_grad();
  }
  Tensor<Scalar> out(rows, cols);
  Index offset = 0;
  for (const auto& p : parts) {
    const auto& v = p.value();
    if (axis == 1) {
      out.middleCols(offset, v.cols()) = v;
      offset += v.cols();
    } else {
      out.middleRows(offset, v.rows()) = v;
      offset += v.rows();
    }
  }
  return detail::record(tape, std::move(out), "concat", needs,
                        [parts, axis](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          Index off = 0;
                          for (const auto& p : parts) {
                            const auto& v = t.value(p);
                            if (axis == 1) {
                              if (t.needs_grad(p)) t.accumulate(p, g.middleCols(off, v.cols()));
                              off += v.cols();
                            } else {
                              if (t.needs_grad(p)) t.accumulate(p, g.middleRows(off, v.rows()));
                              off += v.rows();
                            }
                          }
                        });
}

template <typename Scalar>
Var<Scalar> concat(Var<Scalar> a, Var<Scalar> b, int axis = 1) {
  return concat(std::vector<Var<Scalar>>{a, b}, axis);
}

/// `length` rows (axis 0) or columns (axis 1) starting at `start`.
template <typename Scalar>
Var<Scalar> slice(Var<Scalar> a, int axis, Index start, Index length) {
  const auto& v = a.value();
  const Index extent = axis == 0 ? v.rows() : v.cols();
  if ((axis != 0 && axis != 1) || start < 0 || length < 0 || start + length > extent) {
    throw Error("slice: range [" + std::to_string(start) + ", " + std::to_string(start + length) +
                ") outside " + shape_string(v));
  }
  Tensor<Scalar> out = axis == 0 ? Tensor<Scalar>(v.middleRows(start, length))
                                 : Tensor<Scalar>(v.middleCols(start, length));
  return detail::record(*a.tape, std::move(out), "slice", a.needs_grad(),
                        [a, axis, start, length](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          auto& ga = t.grad_buffer(a);
                          if (axis == 0) ga.middleRows(start, length) += g;
                          else ga.middleCols(start, length) += g;
                        });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  return detail::record(*a.tape, Tensor<Scalar>(a.value().transpose()), "transpose", a.needs_grad(),
                        [a](Tape<Scalar>& t, const Tensor<Scalar>& g) { t.accumulate(a, g.transpose()); });
}

/// Row-major reinterpretation with the same element count.
template <typename Scalar>
Var<Scalar> reshape(Var<Scalar> a, Index rows, Index cols) {
  const auto& v = a.value();
  if (rows * cols != v.size()) {
    throw Error("reshape: cannot view " + shape_string(v) + " as [" + std::to_string(rows) + "x" +
                std::to_string(cols) + "]");
  }
  Tensor<Scalar> out = Eigen::Map<const Tensor<Scalar>>(v.data(), rows, cols);
  const Index r0 = v.rows(), c0 = v.cols();
  return detail::record(*a.tape, std::move(out), "reshape", a.needs_grad(),
                        [a, r0, c0](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          t.accumulate(a, Eigen::Map<const Tensor<Scalar>>(g.data(), r0, c0));
                        });
}

/// Stacks `times` copies of `a` vertically.
template <typename Scalar>
Var<Scalar> tile_rows(Var<Scalar> a, Index times) {
  const auto& v = a.value();
  Tensor<Scalar> out = v.replicate(times, 1);
  const Index rows = v.rows();
  return detail::record(*a.tape, std::move(out), "tile_rows", a.needs_grad(),
                        [a, times, rows](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          Tensor<Scalar> ga = g.middleRows(0, rows);
                          for (Index k = 1; k < times; ++k) ga += g.middleRows(k * rows, rows);
                          t.accumulate(a, ga);
                        });
}

/// Rows of `table` selected by `ids`.
template <typename Scalar>
Var<Scalar> embedding_lookup(Var<Scalar> table, std::span<const int> ids) {
  const auto& tv = table.value();
  Tensor<Scalar> out(static_cast<Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw Error("embedding_lookup: id " + std::to_string(ids[i]) + " outside table of " +
                  std::to_string(tv.rows()) + " rows");
    }
    out.row(static_cast<Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idv(ids.begin(), ids.end());
  return detail::record(*table.tape, std::move(out), "embedding_lookup", table.needs_grad(),
                        [table, idv = std::move(idv)](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          auto& gt = t.grad_buffer(table);
                          for (std::size_t i = 0; i < idv.size(); ++i) gt.row(idv[i]) += g.row(static_cast<Index>(i));
                        });
}

/// Keep-mask for inverted dropout: entries are 1 with probability 1 - p.
template <typename Scalar>
Tensor<Scalar> dropout_mask(Index rows, Index cols, double p, Rng& rng) {
  Tensor<Scalar> mask(rows, cols);
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.bernoulli(p) ? Scalar(0) : Scalar(1);
  return mask;
}

/// Zeroes masked entries and rescales survivors by 1 / (1 - p).
template <typename Scalar>
Var<Scalar> dropout(Var<Scalar> a, const Tensor<Scalar>& mask, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: p must be in [0,1)");
  const auto& v = a.value();
  if (mask.rows() != v.rows() || mask.cols() != v.cols()) detail::shape_error("dropout", v, mask);
  if (p == 0.0) return a;
  const Scalar keep = Scalar(1) / Scalar(1.0 - p);
  Tensor<Scalar> m = mask * keep;
  Tensor<Scalar> out = v.cwiseProduct(m);
  return detail::record(*a.tape, std::move(out), "dropout", a.needs_grad(),
                        [a, m = std::move(m)](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          t.accumulate(a, g.cwiseProduct(m));
                        });
}

/// Attention read-out. `weights` is B x J, `memory` stacks J blocks of B rows
/// (row j*B + b belongs to batch entry b at position j); returns B x D.
template <typename Scalar>
Var<Scalar> attend(Var<Scalar> weights, Var<Scalar> memory) {
  detail::same_tape(weights, memory, "attend");
  const auto& w = weights.value();
  const auto& m = memory.value();
  const Index B = w.rows(), J = w.cols();
  if (m.rows() != B * J) detail::shape_error("attend", w, m);
  Tensor<Scalar> out = Tensor<Scalar>::Zero(B, m.cols());
  for (Index j = 0; j < J; ++j) {
    for (Index b = 0; b < B; ++b) out.row(b) += w(b, j) * m.row(j * B + b);
  }
  return detail::record(*weights.tape, std::move(out), "attend", weights.needs_grad() || memory.needs_grad(),
                        [weights, memory](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          const auto& wv = t.value(weights);
                          const auto& mv = t.value(memory);
                          const Index Bn = wv.rows(), Jn = wv.cols();
                          if (t.needs_grad(weights)) {
                            Tensor<Scalar> gw(Bn, Jn);
                            for (Index j = 0; j < Jn; ++j) {
                              for (Index b = 0; b < Bn; ++b) gw(b, j) = g.row(b).dot(mv.row(j * Bn + b));
                            }
                            t.accumulate(weights, gw);
                          }
                          if (t.needs_grad(memory)) {
                            auto& gm = t.grad_buffer(memory);
                            for (Index j = 0; j < Jn; ++j) {
                              for (Index b = 0; b < Bn; ++b) gm.row(j * Bn + b) += wv(b, j) * g.row(b);
                            }
                          }
                        });
}

template <typename Scalar>
Var<Scalar> sum(Var<Scalar> a) {
  Tensor<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return detail::record(*a.tape, std::move(out), "sum", a.needs_grad(),
                        [a](Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          const auto& v = t.value(a);
                          t.accumulate(a, Tensor<Scalar>::Constant(v.rows(), v.cols(), g(0, 0)));
                        });
}

/// sum_b weights[b] * -log softmax(logits.row(b))[targets[b]]. Rows with
/// weight 0 receive an exactly zero gradient.
template <typename Scalar>
Var<Scalar> weighted_nll(Var<Scalar> logits, std::span<const int> targets, std::span<const Scalar> weights) {
  const auto& z = logits.value();
  if (static_cast<Index>(targets.size()) != z.rows() || static_cast<Index>(weights.size()) != z.rows()) {
    throw Error("weighted_nll: " + std::to_string(targets.size()) + " targets / " +
                std::to_string(weights.size()) + " weights for logits " + shape_string(z));
  }
  Tensor<Scalar> probs(z.rows(), z.cols());
  Scalar total = 0;
  for (Index b = 0; b < z.rows(); ++b) {
    const int y = targets[static_cast<std::size_t>(b)];
    if (y < 0 || y >= z.cols()) throw Error("weighted_nll: target " + std::to_string(y) + " out of range");
    const Scalar mx = z.row(b).maxCoeff();
    probs.row(b) = (z.row(b).array() - mx).exp().matrix();
    const Scalar norm = probs.row(b).sum();
    probs.row(b) /= norm;
    const Scalar w = weights[static_cast<std::size_t>(b)];
    if (w != Scalar(0)) total += w * (std::log(norm) + mx - z(b, y));
  }
  Tensor<Scalar> out(1, 1);
  out(0, 0) = total;
  std::vector<int> tv(targets.begin(), targets.end());
  std::vector<Scalar> wv(weights.begin(), weights.end());
  return detail::record(*logits.tape, std::move(out), "weighted_nll", logits.needs_grad(),
                        [logits, probs = std::move(probs), tv = std::move(tv), wv = std::move(wv)](
                            Tape<Scalar>& t, const Tensor<Scalar>& g) {
                          auto& gz = t.grad_buffer(logits);
                          const Scalar scale = g(0, 0);
                          for (Index b = 0; b < probs.rows(); ++b) {
                            const Scalar w = wv[static_cast<std::size_t>(b)];
                            if (w == Scalar(0)) continue;
                            gz.row(b) += (scale * w) * probs.row(b);
                            gz(b, tv[static_cast<std::size_t>(b)]) -= scale * w;
                          }
                        });
}

}  // namespace chunkfb::ad
