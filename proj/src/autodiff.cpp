#include "edad/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigen_map.hpp"

namespace edad {

const Tensor& Var::value() const { return tape_->value(id_); }

bool Var::tracked() const { return tape_->tracked(id_); }

Var Tape::variable(Tensor value) {
  value.require_finite("variable");
  nodes_.push_back(Node{std::move(value), nullptr, grad_enabled_});
  return {this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  value.require_finite("constant");
  nodes_.push_back(Node{std::move(value), nullptr, false});
  return {this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::span<const Var> parents, BackwardFn backward, const char* op) {
  value.require_finite(op);
  bool tracked = false;
  if (grad_enabled_) {
    for (const auto& p : parents) {
      if (p.tape() != this) throw ContractError(std::string(op) + ": operand belongs to another tape");
      tracked = tracked || nodes_[p.id()].tracked;
    }
  }
  nodes_.push_back(Node{std::move(value), tracked ? std::move(backward) : nullptr, tracked});
  return {this, nodes_.size() - 1};
}

Tensor& Tape::grad(std::size_t id) {
  if (!has_grad_[id]) {
    grads_[id] = Tensor(nodes_[id].value.shape(), real{0});
    has_grad_[id] = 1;
  }
  return grads_[id];
}

std::vector<Tensor> Tape::gradient(Var loss, std::span<const Var> params) {
  if (loss.tape() != this) throw ContractError("gradient: loss belongs to another tape");
  if (!grad_enabled_) throw ContractError("gradient: tape records values only");
  if (loss.value().size() != 1)
    throw ContractError("gradient: loss must be a scalar, got shape " + shape_string(loss.value().shape()));
  grads_.assign(nodes_.size(), Tensor());
  has_grad_.assign(nodes_.size(), 0);
  if (nodes_[loss.id()].tracked) {
    grad(loss.id()).fill(real{1});
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      if (!has_grad_[id] || !nodes_[id].backward) continue;
      nodes_[id].backward(*this, grads_[id]);
    }
  }
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) {
    if (p.tape() != this) throw ContractError("gradient: parameter belongs to another tape");
    out.push_back(has_grad_[p.id()] ? grads_[p.id()] : Tensor(p.value().shape(), real{0}));
  }
  grads_.clear();
  has_grad_.clear();
  return out;
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

Tensor map_values(const Tensor& a, auto&& f) {
  Tensor out = Tensor::matrix(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

/// Shared backward for unary elementwise ops: dx += g * local(x, y).
template <class Local>
Tape::BackwardFn unary_backward(std::size_t in, std::size_t self, Local local) {
  return [in, self, local](Tape& t, const Tensor& g) {
    if (!t.tracked(in)) return;
    const Tensor& x = t.value(in);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(in);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * local(x[i], y[i]);
  };
}

real stable_softplus(real x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

real sigmoid(real x) {
  if (x >= 0) return real{1} / (real{1} + std::exp(-x));
  const real e = std::exp(x);
  return e / (real{1} + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out = matmul_values(av, bv);
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents,
      [ia, ib](Tape& t, const Tensor& g) {
        if (t.tracked(ia)) as_matrix(t.grad(ia)).noalias() += as_matrix(g) * as_matrix(t.value(ib)).transpose();
        if (t.tracked(ib)) as_matrix(t.grad(ib)).noalias() += as_matrix(t.value(ia)).transpose() * as_matrix(g);
      },
      "matmul");
}

Var transpose(Var a) {
  Tensor out = transpose_values(a.value());
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents,
      [ia](Tape& t, const Tensor& g) { as_matrix(t.grad(ia)) += as_matrix(g).transpose(); }, "transpose");
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents,
      [ia, ib](Tape& t, const Tensor& g) {
        if (t.tracked(ia)) t.grad(ia) += g;
        if (t.tracked(ib)) t.grad(ib) += g;
      },
      "add");
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents,
      [ia, ib](Tape& t, const Tensor& g) {
        if (t.tracked(ia)) t.grad(ia) += g;
        if (t.tracked(ib)) {
          Tensor& gb = t.grad(ib);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
      },
      "sub");
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const std::size_t ia = a.id(), ib = b.id();
  Var parents[] = {a, b};
  return a.tape()->record(std::move(out), parents,
      [ia, ib](Tape& t, const Tensor& g) {
        if (t.tracked(ia)) {
          Tensor& ga = t.grad(ia);
          const Tensor& bv = t.value(ib);
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (t.tracked(ib)) {
          Tensor& gb = t.grad(ib);
          const Tensor& av = t.value(ia);
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
      },
      "mul");
}

Var scale(Var a, real s) {
  Tensor out = a.value();
  out *= s;
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents,
      [ia, s](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
      },
      "scale");
}

Var add_scalar(Var a, real s) {
  Tensor out = map_values(a.value(), [s](real x) { return x + s; });
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents, [ia](Tape& t, const Tensor& g) { t.grad(ia) += g; }, "add_scalar");
}

Var add_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw DimensionError("add_row: row " + shape_string(rv.shape()) + " vs matrix " + shape_string(av.shape()));
  Tensor out = av;
  as_matrix(out).rowwise() += as_matrix(rv).row(0);
  const std::size_t ia = a.id(), ir = row.id();
  Var parents[] = {a, row};
  return a.tape()->record(std::move(out), parents,
      [ia, ir](Tape& t, const Tensor& g) {
        if (t.tracked(ia)) t.grad(ia) += g;
        if (t.tracked(ir)) as_matrix(t.grad(ir)).row(0) += as_matrix(g).colwise().sum();
      },
      "add_row");
}

Var mul_row(Var a, Var row) {
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols())
    throw DimensionError("mul_row: row " + shape_string(rv.shape()) + " vs matrix " + shape_string(av.shape()));
  Tensor out = av;
  as_matrix(out).array().rowwise() *= as_matrix(rv).row(0).array();
  const std::size_t ia = a.id(), ir = row.id();
  Var parents[] = {a, row};
  return a.tape()->record(std::move(out), parents,
      [ia, ir](Tape& t, const Tensor& g) {
        const auto gm = as_matrix(g);
        if (t.tracked(ia))
          as_matrix(t.grad(ia)).array() += gm.array().rowwise() * as_matrix(t.value(ir)).row(0).array();
        if (t.tracked(ir))
          as_matrix(t.grad(ir)).row(0).array() += (gm.array() * as_matrix(t.value(ia)).array()).colwise().sum();
      },
      "mul_row");
}

Var relu(Var a) {
  Tensor out = map_values(a.value(), [](real x) { return x > 0 ? x : real{0}; });
  Var parents[] = {a};
  Tape* t = a.tape();
  const std::size_t self = t->size();
  return t->record(std::move(out), parents,
      unary_backward(a.id(), self, [](real x, real) { return x > 0 ? real{1} : real{0}; }), "relu");
}

Var exp(Var a) {
  Tensor out = map_values(a.value(), [](real x) { return std::exp(x); });
  Var parents[] = {a};
  Tape* t = a.tape();
  const std::size_t self = t->size();
  return t->record(std::move(out), parents, unary_backward(a.id(), self, [](real, real y) { return y; }), "exp");
}

Var log(Var a) {
  Tensor out = map_values(a.value(), [](real x) { return std::log(x); });
  Var parents[] = {a};
  Tape* t = a.tape();
  const std::size_t self = t->size();
  return t->record(std::move(out), parents, unary_backward(a.id(), self, [](real x, real) { return real{1} / x; }),
                   "log");
}

Var softplus(Var a) {
  Tensor out = map_values(a.value(), stable_softplus);
  Var parents[] = {a};
  Tape* t = a.tape();
  const std::size_t self = t->size();
  return t->record(std::move(out), parents, unary_backward(a.id(), self, [](real x, real) { return sigmoid(x); }),
                   "softplus");
}

Var clamp(Var a, real lo, real hi) {
  Tensor out = map_values(a.value(), [lo, hi](real x) { return std::clamp(x, lo, hi); });
  Var parents[] = {a};
  Tape* t = a.tape();
  const std::size_t self = t->size();
  return t->record(std::move(out), parents,
      unary_backward(a.id(), self, [lo, hi](real x, real) { return (x >= lo && x <= hi) ? real{1} : real{0}; }),
      "clamp");
}

Var softmax_rows(Var a) {
  const Tensor& av = a.value();
  Tensor out = av;
  const std::size_t r = av.rows(), c = av.cols();
  for (std::size_t i = 0; i < r; ++i) {
    real* row = out.data() + i * c;
    const real mx = *std::max_element(row, row + c);
    real total = 0;
    for (std::size_t j = 0; j < c; ++j) total += (row[j] = std::exp(row[j] - mx));
    for (std::size_t j = 0; j < c; ++j) row[j] /= total;
  }
  Tape* t = a.tape();
  const std::size_t ia = a.id(), self = t->size();
  Var parents[] = {a};
  return t->record(std::move(out), parents,
      [ia, self](Tape& t, const Tensor& g) {
        const auto y = as_matrix(t.value(self));
        const auto gm = as_matrix(g);
        const auto dot = (gm.array() * y.array()).rowwise().sum().eval();
        as_matrix(t.grad(ia)).array() += y.array() * (gm.array().colwise() - dot);
      },
      "softmax_rows");
}

Var sum(Var a) {
  const Tensor& av = a.value();
  real total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i];
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(Tensor::scalar(total), parents,
      [ia](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(ia);
        const real s = g[0];
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s;
      },
      "sum");
}

Var mean(Var a) { return scale(sum(a), real{1} / static_cast<real>(a.value().size())); }

Var sum_rows(Var a) {
  const Tensor& av = a.value();
  Tensor out = Tensor::matrix(av.rows(), 1);
  as_matrix(out).col(0) = as_matrix(av).rowwise().sum();
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents,
      [ia](Tape& t, const Tensor& g) { as_matrix(t.grad(ia)).colwise() += as_matrix(g).col(0); }, "sum_rows");
}

Var frobenius_sq(Var a) {
  const Tensor& av = a.value();
  real total = 0;
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i] * av[i];
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(Tensor::scalar(total), parents,
      [ia](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(ia);
        const Tensor& x = t.value(ia);
        const real s = 2 * g[0];
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * x[i];
      },
      "frobenius_sq");
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = a.value();
  if (begin >= end || end > av.cols())
    throw DimensionError("slice_cols [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                         shape_string(av.shape()));
  Tensor out = Tensor::matrix(av.rows(), end - begin);
  as_matrix(out) = as_matrix(av).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents,
      [ia, begin](Tape& t, const Tensor& g) {
        as_matrix(t.grad(ia)).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(g.cols())) +=
            as_matrix(g);
      },
      "slice_cols");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw DimensionError("concat_cols: row counts differ");
    c += p.cols();
  }
  Tensor out = Tensor::matrix(r, c);
  std::vector<std::size_t> ids, offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    as_matrix(out).middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(p.cols())) =
        as_matrix(p.value());
    ids.push_back(p.id());
    offsets.push_back(off);
    off += p.cols();
  }
  return parts[0].tape()->record(std::move(out), parts,
      [ids, offsets](Tape& t, const Tensor& g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!t.tracked(ids[k])) continue;
          Tensor& gp = t.grad(ids[k]);
          as_matrix(gp) += as_matrix(g).middleCols(static_cast<Eigen::Index>(offsets[k]),
                                                   static_cast<Eigen::Index>(gp.cols()));
        }
      },
      "concat_cols");
}

Var gather_rows(Var a, std::span<const std::size_t> perm) {
  const Tensor& av = a.value();
  const std::size_t c = av.cols();
  if (perm.size() != av.rows()) throw ContractError("gather_rows: permutation length differs from row count");
  std::vector<bool> seen(perm.size(), false);
  Tensor out = Tensor::matrix(perm.size(), c);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (perm[i] >= av.rows() || seen[perm[i]]) throw ContractError("gather_rows: not a permutation");
    seen[perm[i]] = true;
    std::copy_n(av.data() + perm[i] * c, c, out.data() + i * c);
  }
  const std::size_t ia = a.id();
  std::vector<std::size_t> idx(perm.begin(), perm.end());
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents,
      [ia, idx = std::move(idx)](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(ia);
        const std::size_t c = g.cols();
        for (std::size_t i = 0; i < idx.size(); ++i)
          for (std::size_t j = 0; j < c; ++j) ga[idx[i] * c + j] += g[i * c + j];
      },
      "gather_rows");
}

namespace {

/// Normalizes `groups` contiguous blocks of `n` values each; returns per-block 1/s.
std::vector<real> normalize_blocks(const Tensor& x, Tensor& y, std::size_t groups, std::size_t n, real eps) {
  std::vector<real> inv_std(groups);
  for (std::size_t gi = 0; gi < groups; ++gi) {
    const real* xs = x.data() + gi * n;
    real* ys = y.data() + gi * n;
    real mu = 0;
    for (std::size_t k = 0; k < n; ++k) mu += xs[k];
    mu /= static_cast<real>(n);
    real var = 0;
    for (std::size_t k = 0; k < n; ++k) var += (xs[k] - mu) * (xs[k] - mu);
    var /= static_cast<real>(n);
    const real inv = real{1} / std::sqrt(var + eps);
    for (std::size_t k = 0; k < n; ++k) ys[k] = (xs[k] - mu) * inv;
    inv_std[gi] = inv;
  }
  return inv_std;
}

Tape::BackwardFn normalize_backward(std::size_t ia, std::size_t self, std::size_t groups, std::size_t n,
                                    std::vector<real> inv_std) {
  return [=, inv_std = std::move(inv_std)](Tape& t, const Tensor& g) {
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t gi = 0; gi < groups; ++gi) {
      const real* gs = g.data() + gi * n;
      const real* ys = y.data() + gi * n;
      real g_mean = 0, gy_mean = 0;
      for (std::size_t k = 0; k < n; ++k) {
        g_mean += gs[k];
        gy_mean += gs[k] * ys[k];
      }
      g_mean /= static_cast<real>(n);
      gy_mean /= static_cast<real>(n);
      real* out = gx.data() + gi * n;
      for (std::size_t k = 0; k < n; ++k) out[k] += inv_std[gi] * (gs[k] - g_mean - ys[k] * gy_mean);
    }
  };
}

}  // namespace

Var normalize_rows(Var a, real eps) {
  const Tensor& av = a.value();
  Tensor out = Tensor::matrix(av.rows(), av.cols());
  auto inv = normalize_blocks(av, out, av.rows(), av.cols(), eps);
  Tape* t = a.tape();
  const std::size_t self = t->size();
  Var parents[] = {a};
  return t->record(std::move(out), parents, normalize_backward(a.id(), self, av.rows(), av.cols(), std::move(inv)),
                   "normalize_rows");
}

Var normalize_all(Var a, real eps) {
  const Tensor& av = a.value();
  Tensor out = Tensor::matrix(av.rows(), av.cols());
  auto inv = normalize_blocks(av, out, 1, av.size(), eps);
  Tape* t = a.tape();
  const std::size_t self = t->size();
  Var parents[] = {a};
  return t->record(std::move(out), parents, normalize_backward(a.id(), self, 1, av.size(), std::move(inv)),
                   "normalize_all");
}

Var pairwise_sum(Var p, Var q) {
  const Tensor& pv = p.value();
  const Tensor& qv = q.value();
  if (pv.cols() != qv.cols()) throw DimensionError("pairwise_sum: column counts differ");
  const std::size_t np = pv.rows(), nq = qv.rows(), h = pv.cols();
  Tensor out = Tensor::matrix(np * nq, h);
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < nq; ++j) {
      real* o = out.data() + (i * nq + j) * h;
      for (std::size_t k = 0; k < h; ++k) o[k] = pv(i, k) + qv(j, k);
    }
  const std::size_t ip = p.id(), iq = q.id();
  Var parents[] = {p, q};
  return p.tape()->record(std::move(out), parents,
      [ip, iq, np, nq, h](Tape& t, const Tensor& g) {
        const bool tp = t.tracked(ip), tq = t.tracked(iq);
        Tensor* gp = tp ? &t.grad(ip) : nullptr;
        Tensor* gq = tq ? &t.grad(iq) : nullptr;
        for (std::size_t i = 0; i < np; ++i)
          for (std::size_t j = 0; j < nq; ++j) {
            const real* gs = g.data() + (i * nq + j) * h;
            for (std::size_t k = 0; k < h; ++k) {
              if (gp) (*gp)(i, k) += gs[k];
              if (gq) (*gq)(j, k) += gs[k];
            }
          }
      },
      "pairwise_sum");
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& av = a.value();
  if (rows * cols != av.size())
    throw DimensionError("reshape " + shape_string(av.shape()) + " to " + std::to_string(rows) + "x" +
                         std::to_string(cols));
  Tensor out({rows, cols}, std::vector<real>(av.values().begin(), av.values().end()));
  const std::size_t ia = a.id();
  Var parents[] = {a};
  return a.tape()->record(std::move(out), parents,
      [ia](Tape& t, const Tensor& g) {
        Tensor& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      },
      "reshape");
}

}  // namespace edad
