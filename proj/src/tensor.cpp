/*
 * Copyright 2026 The tabsynth authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "tabsynth/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace tabsynth::ad {

namespace {

std::atomic<std::uint64_t> g_next_id{1};

#ifdef NDEBUG
bool g_finite_checks = false;
#else
bool g_finite_checks = true;
#endif

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ',';
    os << s[i];
  }
  os << ')';
  return os.str();
}

[[noreturn]] void shape_error(OpKind op, const std::string& detail) {
  throw Error(ErrorCategory::validation,
              std::string(op_name(op)) + ": " + detail);
}

void check_finite(const Node& n) {
  if (!g_finite_checks) return;
  for (double v : n.values) {
    if (!std::isfinite(v))
      throw Error(ErrorCategory::numeric,
                  std::string("non-finite value produced by ") +
                      op_name(n.op));
  }
}

std::shared_ptr<Node> make_node(OpKind op, Shape shape,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->shape = std::move(shape);
  n->values.resize(shape_size(n->shape));
  n->parents = std::move(parents);
  n->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

void ensure_grad(Node* n) {
  if (n->grad.empty()) n->grad.assign(n->values.size(), 0.0);
}

// ---- broadcasting ---------------------------------------------------------

struct Bcast {
  Shape out;
  std::size_t n = 0;
  std::vector<std::size_t> stride_a, stride_b;  // 0 marks a broadcast dim
};

Bcast make_bcast(OpKind op, const Shape& a, const Shape& b) {
  const std::size_t rank = std::max(a.size(), b.size());
  Bcast bc;
  bc.out.resize(rank);
  bc.stride_a.assign(rank, 0);
  bc.stride_b.assign(rank, 0);
  for (std::size_t d = 0; d < rank; ++d) {
    const std::size_t ia = d + a.size() >= rank ? d + a.size() - rank : SIZE_MAX;
    const std::size_t ib = d + b.size() >= rank ? d + b.size() - rank : SIZE_MAX;
    const std::size_t da = ia == SIZE_MAX ? 1 : a[ia];
    const std::size_t db = ib == SIZE_MAX ? 1 : b[ib];
    if (da != db && da != 1 && db != 1)
      shape_error(op, "incompatible shapes " + shape_str(a) + " and " +
                          shape_str(b));
    bc.out[d] = std::max(da, db);
  }
  // Row-major strides over the input's own shape, zeroed on broadcast dims.
  auto fill = [&](const Shape& s, std::vector<std::size_t>& stride) {
    std::size_t acc = 1;
    for (std::size_t j = s.size(); j > 0; --j) {
      const std::size_t d = rank - s.size() + (j - 1);
      stride[d] = (s[j - 1] == 1 && bc.out[d] != 1) ? 0 : acc;
      acc *= s[j - 1];
    }
  };
  fill(a, bc.stride_a);
  fill(b, bc.stride_b);
  bc.n = shape_size(bc.out);
  return bc;
}

template <class F>
void bcast_apply(const Bcast& bc, F&& f) {
  const std::size_t rank = bc.out.size();
  if (bc.n == 0) return;
  std::vector<std::size_t> idx(rank, 0);
  std::size_t offa = 0, offb = 0;
  for (std::size_t flat = 0; flat < bc.n; ++flat) {
    f(flat, offa, offb);
    std::size_t d = rank;
    while (d > 0) {
      --d;
      ++idx[d];
      offa += bc.stride_a[d];
      offb += bc.stride_b[d];
      if (idx[d] < bc.out[d]) break;
      offa -= bc.stride_a[d] * bc.out[d];
      offb -= bc.stride_b[d] * bc.out[d];
      idx[d] = 0;
    }
  }
}

// ---- gemm -----------------------------------------------------------------

// C(m,n) = opA(m,k) * opB(k,n); A stored ta ? (k,m) : (m,k),
// B stored tb ? (n,k) : (k,n). Accumulates into C when acc is set.
void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k,
          const double* A, const double* B, double* C, bool acc) {
  if (!acc) std::fill(C, C + m * n, 0.0);
  if (!ta && !tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* a = A + i * k;
      double* c = C + i * n;
      for (std::size_t l = 0; l < k; ++l) {
        const double av = a[l];
        if (av == 0.0) continue;
        const double* b = B + l * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  } else if (!ta && tb) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* a = A + i * k;
      double* c = C + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* b = B + j * k;
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += a[l] * b[l];
        c[j] += s;
      }
    }
  } else if (ta && !tb) {
    for (std::size_t l = 0; l < k; ++l) {
      const double* a = A + l * m;
      const double* b = B + l * n;
      for (std::size_t i = 0; i < m; ++i) {
        const double av = a[i];
        if (av == 0.0) continue;
        double* c = C + i * n;
        for (std::size_t j = 0; j < n; ++j) c[j] += av * b[j];
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      double* c = C + i * n;
      for (std::size_t j = 0; j < n; ++j) {
        const double* b = B + j * k;
        double s = 0.0;
        for (std::size_t l = 0; l < k; ++l) s += A[l * m + i] * b[l];
        c[j] += s;
      }
    }
  }
}

}  // namespace

const char* op_name(OpKind k) {
  switch (k) {
    case OpKind::leaf: return "leaf";
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::mul: return "mul";
    case OpKind::relu: return "relu";
    case OpKind::silu: return "silu";
    case OpKind::softmax_rows: return "softmax_rows";
    case OpKind::layer_norm: return "layer_norm";
    case OpKind::concat: return "concat";
    case OpKind::slice: return "slice";
    case OpKind::mean: return "mean";
    case OpKind::sum_squares: return "sum_squares";
    case OpKind::exp: return "exp";
    case OpKind::log: return "log";
    case OpKind::scale: return "scale";
    case OpKind::reshape: return "reshape";
  }
  return "?";
}

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }
bool finite_checks_enabled() { return g_finite_checks; }

Tensor wrap_node(std::shared_ptr<Node> n) { return Tensor(std::move(n)); }

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  if (shape_size(shape) != values.size())
    throw Error(ErrorCategory::validation,
                "tensor: value count does not match shape " + shape_str(shape));
  auto n = make_node(OpKind::leaf, std::move(shape), {});
  n->values = std::move(values);
  check_finite(*n);
  return wrap_node(std::move(n));
}

Tensor Tensor::param(Shape shape, std::vector<double> values) {
  Tensor t = constant(std::move(shape), std::move(values));
  t.node()->requires_grad = true;
  return t;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = make_node(OpKind::leaf, std::move(shape), {});
  n->requires_grad = requires_grad;
  return wrap_node(std::move(n));
}

void Tensor::zero_grad() {
  if (!node_->grad.empty())
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (size() != 1)
    throw Error(ErrorCategory::validation,
                "item: tensor has " + std::to_string(size()) + " entries");
  return node_->values[0];
}

Tensor Tensor::reshape(Shape shape) const {
  if (shape_size(shape) != size())
    shape_error(OpKind::reshape, "element count mismatch: " +
                                     shape_str(node_->shape) + " -> " +
                                     shape_str(shape));
  auto out = make_node(OpKind::reshape, std::move(shape), {node_});
  out->values = node_->values;
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = node_.get();
    out->backward_fn = [on, in]() {
      ensure_grad(in);
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        in->grad[i] += on->grad[i];
    };
  }
  return wrap_node(std::move(out));
}

// ---- elementwise binary ---------------------------------------------------

namespace {

Tensor binary_op(OpKind op, const Tensor& a, const Tensor& b) {
  Bcast bc = make_bcast(op, a.shape(), b.shape());
  auto out = make_node(op, bc.out, {a.node(), b.node()});
  const double* av = a.node()->values.data();
  const double* bv = b.node()->values.data();
  double* ov = out->values.data();
  if (op == OpKind::add) {
    bcast_apply(bc, [&](std::size_t f, std::size_t ia, std::size_t ib) {
      ov[f] = av[ia] + bv[ib];
    });
  } else {
    bcast_apply(bc, [&](std::size_t f, std::size_t ia, std::size_t ib) {
      ov[f] = av[ia] * bv[ib];
    });
  }
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    out->backward_fn = [on, an, bn, op, bc = std::move(bc)]() {
      const double* g = on->grad.data();
      const bool need_a = an->requires_grad;
      const bool need_b = bn->requires_grad;
      if (need_a) ensure_grad(an);
      if (need_b) ensure_grad(bn);
      if (op == OpKind::add) {
        bcast_apply(bc, [&](std::size_t f, std::size_t ia, std::size_t ib) {
          if (need_a) an->grad[ia] += g[f];
          if (need_b) bn->grad[ib] += g[f];
        });
      } else {
        const double* av = an->values.data();
        const double* bv = bn->values.data();
        bcast_apply(bc, [&](std::size_t f, std::size_t ia, std::size_t ib) {
          if (need_a) an->grad[ia] += g[f] * bv[ib];
          if (need_b) bn->grad[ib] += g[f] * av[ia];
        });
      }
    };
  }
  return wrap_node(std::move(out));
}

Tensor unary_op(OpKind op, const Tensor& t,
                const std::function<double(double)>& f,
                const std::function<double(double, double)>& dfdx_times_g) {
  auto out = make_node(op, t.shape(), {t.node()});
  const double* x = t.node()->values.data();
  double* y = out->values.data();
  for (std::size_t i = 0; i < out->values.size(); ++i) y[i] = f(x[i]);
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in, dfdx_times_g]() {
      ensure_grad(in);
      const double* g = on->grad.data();
      const double* x = in->values.data();
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        in->grad[i] += dfdx_times_g(x[i], g[i]);
    };
  }
  return wrap_node(std::move(out));
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(OpKind::add, a, b);
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(OpKind::mul, a, b);
}

Tensor relu(const Tensor& t) {
  return unary_op(
      OpKind::relu, t, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double g) { return x > 0.0 ? g : 0.0; });
}

Tensor silu(const Tensor& t) {
  return unary_op(
      OpKind::silu, t,
      [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double g) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return g * s * (1.0 + x * (1.0 - s));
      });
}

Tensor exp(const Tensor& t) {
  return unary_op(
      OpKind::exp, t, [](double x) { return std::exp(x); },
      [](double x, double g) { return g * std::exp(x); });
}

Tensor log(const Tensor& t) {
  return unary_op(
      OpKind::log, t, [](double x) { return std::log(x); },
      [](double x, double g) { return g / x; });
}

Tensor scale(const Tensor& t, double factor) {
  auto out = make_node(OpKind::scale, t.shape(), {t.node()});
  const double* x = t.node()->values.data();
  double* y = out->values.data();
  for (std::size_t i = 0; i < out->values.size(); ++i) y[i] = factor * x[i];
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in, factor]() {
      ensure_grad(in);
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        in->grad[i] += factor * on->grad[i];
    };
  }
  return wrap_node(std::move(out));
}

Tensor sum_all(const Tensor& t) {
  std::size_t n = shape_size(t.shape());
  Tensor col = t.reshape({n, 1});
  Tensor ones = Tensor::constant({1, n}, std::vector<double>(n, 1.0));
  return matmul(ones, col).reshape({1});
}

// ---- matmul ---------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a, bool trans_b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2)
    shape_error(OpKind::matmul, "operands must have rank >= 2, got " +
                                    shape_str(sa) + " and " + shape_str(sb));
  const bool b_shared = sb.size() == 2 && sa.size() > 2;
  if (!b_shared && sa.size() != sb.size())
    shape_error(OpKind::matmul,
                "rank mismatch " + shape_str(sa) + " vs " + shape_str(sb));
  std::size_t batch = 1;
  for (std::size_t d = 0; d + 2 < sa.size(); ++d) {
    batch *= sa[d];
    if (!b_shared && sb[d] != sa[d])
      shape_error(OpKind::matmul, "batch dims differ: " + shape_str(sa) +
                                      " vs " + shape_str(sb));
  }
  const std::size_t ra = sa[sa.size() - 2], ca = sa[sa.size() - 1];
  const std::size_t rb = sb[sb.size() - 2], cb = sb[sb.size() - 1];
  const std::size_t m = trans_a ? ca : ra;
  const std::size_t k = trans_a ? ra : ca;
  const std::size_t k2 = trans_b ? cb : rb;
  const std::size_t n = trans_b ? rb : cb;
  if (k != k2)
    shape_error(OpKind::matmul, "inner dims differ: " + shape_str(sa) +
                                    (trans_a ? "^T" : "") + " x " +
                                    shape_str(sb) + (trans_b ? "^T" : ""));
  Shape out_shape(sa.begin(), sa.end() - 2);
  out_shape.push_back(m);
  out_shape.push_back(n);
  auto out = make_node(OpKind::matmul, std::move(out_shape),
                       {a.node(), b.node()});
  const std::size_t a_slab = ra * ca, b_slab = b_shared ? 0 : rb * cb;
  const std::size_t c_slab = m * n;
  const double* A = a.node()->values.data();
  const double* B = b.node()->values.data();
  double* C = out->values.data();
  for (std::size_t s = 0; s < batch; ++s)
    gemm(trans_a, trans_b, m, n, k, A + s * a_slab, B + s * b_slab,
         C + s * c_slab, false);
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* an = a.node().get();
    Node* bn = b.node().get();
    out->backward_fn = [on, an, bn, trans_a, trans_b, batch, a_slab, b_slab,
                        c_slab, m, n, k]() {
      const bool need_a = an->requires_grad;
      const bool need_b = bn->requires_grad;
      if (need_a) ensure_grad(an);
      if (need_b) ensure_grad(bn);
      for (std::size_t s = 0; s < batch; ++s) {
        const double* dC = on->grad.data() + s * c_slab;
        const double* A = an->values.data() + s * a_slab;
        const double* B = bn->values.data() + s * b_slab;
        double* dA = an->grad.data() + s * a_slab;
        double* dB = bn->grad.data() + s * b_slab;
        if (need_a) {
          if (!trans_a && !trans_b)       gemm(false, true,  m, k, n, dC, B, dA, true);
          else if (!trans_a && trans_b)   gemm(false, false, m, k, n, dC, B, dA, true);
          else if (trans_a && !trans_b)   gemm(false, true,  k, m, n, B, dC, dA, true);
          else                            gemm(true,  true,  k, m, n, B, dC, dA, true);
        }
        if (need_b) {
          if (!trans_a && !trans_b)       gemm(true,  false, k, n, m, A, dC, dB, true);
          else if (!trans_a && trans_b)   gemm(true,  false, n, k, m, dC, A, dB, true);
          else if (trans_a && !trans_b)   gemm(false, false, k, n, m, A, dC, dB, true);
          else                            gemm(true,  true,  n, k, m, dC, A, dB, true);
        }
      }
    };
  }
  return wrap_node(std::move(out));
}

// ---- softmax / layer norm -------------------------------------------------

Tensor softmax_rows(const Tensor& t) {
  const Shape& s = t.shape();
  if (s.empty()) shape_error(OpKind::softmax_rows, "rank-0 input");
  const std::size_t row = s.back();
  if (row == 0) shape_error(OpKind::softmax_rows, "empty rows");
  const std::size_t nrows = t.size() / row;
  auto out = make_node(OpKind::softmax_rows, s, {t.node()});
  const double* x = t.node()->values.data();
  double* y = out->values.data();
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* xr = x + r * row;
    double* yr = y + r * row;
    double mx = xr[0];
    for (std::size_t j = 1; j < row; ++j) mx = std::max(mx, xr[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < row; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      z += yr[j];
    }
    for (std::size_t j = 0; j < row; ++j) yr[j] /= z;
  }
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in, row, nrows]() {
      ensure_grad(in);
      const double* y = on->values.data();
      const double* g = on->grad.data();
      for (std::size_t r = 0; r < nrows; ++r) {
        const double* yr = y + r * row;
        const double* gr = g + r * row;
        double dot = 0.0;
        for (std::size_t j = 0; j < row; ++j) dot += gr[j] * yr[j];
        double* dx = in->grad.data() + r * row;
        for (std::size_t j = 0; j < row; ++j)
          dx[j] += yr[j] * (gr[j] - dot);
      }
    };
  }
  return wrap_node(std::move(out));
}

Tensor layer_norm(const Tensor& t, double eps) {
  const Shape& s = t.shape();
  if (s.empty()) shape_error(OpKind::layer_norm, "rank-0 input");
  const std::size_t row = s.back();
  const std::size_t nrows = t.size() / row;
  auto out = make_node(OpKind::layer_norm, s, {t.node()});
  const double* x = t.node()->values.data();
  double* y = out->values.data();
  std::vector<double> inv_sd(nrows);
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* xr = x + r * row;
    double mu = 0.0;
    for (std::size_t j = 0; j < row; ++j) mu += xr[j];
    mu /= double(row);
    double var = 0.0;
    for (std::size_t j = 0; j < row; ++j) {
      const double d = xr[j] - mu;
      var += d * d;
    }
    var /= double(row);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sd[r] = is;
    double* yr = y + r * row;
    for (std::size_t j = 0; j < row; ++j) yr[j] = (xr[j] - mu) * is;
  }
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in, row, nrows, inv_sd = std::move(inv_sd)]() {
      ensure_grad(in);
      const double* y = on->values.data();
      const double* g = on->grad.data();
      for (std::size_t r = 0; r < nrows; ++r) {
        const double* yr = y + r * row;
        const double* gr = g + r * row;
        double gmean = 0.0, gymean = 0.0;
        for (std::size_t j = 0; j < row; ++j) {
          gmean += gr[j];
          gymean += gr[j] * yr[j];
        }
        gmean /= double(row);
        gymean /= double(row);
        double* dx = in->grad.data() + r * row;
        const double is = inv_sd[r];
        for (std::size_t j = 0; j < row; ++j)
          dx[j] += is * (gr[j] - gmean - yr[j] * gymean);
      }
    };
  }
  return wrap_node(std::move(out));
}

// ---- concat / slice -------------------------------------------------------

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) shape_error(OpKind::concat, "no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size())
    shape_error(OpKind::concat, "axis " + std::to_string(axis) +
                                    " out of range for " + shape_str(first));
  Shape out_shape = first;
  std::size_t total_axis = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != first.size())
      shape_error(OpKind::concat, "rank mismatch " + shape_str(first) +
                                      " vs " + shape_str(s));
    for (std::size_t d = 0; d < s.size(); ++d)
      if (d != axis && s[d] != first[d])
        shape_error(OpKind::concat, "shape mismatch " + shape_str(first) +
                                        " vs " + shape_str(s));
    total_axis += s[axis];
  }
  out_shape[axis] = total_axis;
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) parents.push_back(p.node());
  auto out = make_node(OpKind::concat, out_shape, std::move(parents));

  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= out_shape[d];
  for (std::size_t d = axis + 1; d < out_shape.size(); ++d)
    inner *= out_shape[d];

  double* y = out->values.data();
  const std::size_t out_stride = total_axis * inner;
  std::size_t axis_off = 0;
  std::vector<std::size_t> offsets(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = axis_off;
    const std::size_t len = parts[p].shape()[axis];
    const double* x = parts[p].node()->values.data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy(x + o * len * inner, x + (o + 1) * len * inner,
                y + o * out_stride + axis_off * inner);
    axis_off += len;
  }
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    out->backward_fn = [on, outer, inner, out_stride, axis,
                        offsets = std::move(offsets)]() {
      const double* g = on->grad.data();
      for (std::size_t p = 0; p < on->parents.size(); ++p) {
        Node* in = on->parents[p].get();
        if (!in->requires_grad) continue;
        ensure_grad(in);
        const std::size_t len = in->shape[axis];
        double* dx = in->grad.data();
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = g + o * out_stride + offsets[p] * inner;
          double* dst = dx + o * len * inner;
          for (std::size_t i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
      }
    };
  }
  return wrap_node(std::move(out));
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t start,
             std::size_t length) {
  const Shape& s = t.shape();
  if (axis >= s.size())
    shape_error(OpKind::slice, "axis " + std::to_string(axis) +
                                   " out of range for " + shape_str(s));
  if (start + length > s[axis] || length == 0)
    shape_error(OpKind::slice,
                "range [" + std::to_string(start) + "," +
                    std::to_string(start + length) + ") invalid for axis of " +
                    std::to_string(s[axis]));
  Shape out_shape = s;
  out_shape[axis] = length;
  auto out = make_node(OpKind::slice, out_shape, {t.node()});
  std::size_t outer = 1, inner = 1;
  for (std::size_t d = 0; d < axis; ++d) outer *= s[d];
  for (std::size_t d = axis + 1; d < s.size(); ++d) inner *= s[d];
  const std::size_t in_stride = s[axis] * inner;
  const double* x = t.node()->values.data();
  double* y = out->values.data();
  for (std::size_t o = 0; o < outer; ++o)
    std::copy(x + o * in_stride + start * inner,
              x + o * in_stride + (start + length) * inner,
              y + o * length * inner);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in, outer, inner, in_stride, start, length]() {
      ensure_grad(in);
      const double* g = on->grad.data();
      for (std::size_t o = 0; o < outer; ++o) {
        double* dst = in->grad.data() + o * in_stride + start * inner;
        const double* src = g + o * length * inner;
        for (std::size_t i = 0; i < length * inner; ++i) dst[i] += src[i];
      }
    };
  }
  return wrap_node(std::move(out));
}

// ---- reductions -----------------------------------------------------------

Tensor mean(const Tensor& t) {
  if (t.size() == 0) shape_error(OpKind::mean, "empty input");
  auto out = make_node(OpKind::mean, {1}, {t.node()});
  double s = 0.0;
  for (double v : t.node()->values) s += v;
  out->values[0] = s / double(t.size());
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in]() {
      ensure_grad(in);
      const double g = on->grad[0] / double(in->values.size());
      for (double& d : in->grad) d += g;
    };
  }
  return wrap_node(std::move(out));
}

Tensor sum_squares(const Tensor& t) {
  auto out = make_node(OpKind::sum_squares, {1}, {t.node()});
  double s = 0.0;
  for (double v : t.node()->values) s += v * v;
  out->values[0] = s;
  check_finite(*out);
  if (out->requires_grad) {
    Node* on = out.get();
    Node* in = t.node().get();
    out->backward_fn = [on, in]() {
      ensure_grad(in);
      const double g = on->grad[0];
      const double* x = in->values.data();
      for (std::size_t i = 0; i < in->grad.size(); ++i)
        in->grad[i] += 2.0 * x[i] * g;
    };
  }
  return wrap_node(std::move(out));
}

// ---- dispatcher -----------------------------------------------------------

Tensor forward_op(OpKind kind, std::span<const Tensor> in,
                  const OpAttrs& at) {
  auto need = [&](std::size_t n) {
    if (in.size() != n)
      shape_error(kind, "expects " + std::to_string(n) + " inputs, got " +
                            std::to_string(in.size()));
  };
  switch (kind) {
    case OpKind::matmul: need(2); return matmul(in[0], in[1], at.trans_a, at.trans_b);
    case OpKind::add: need(2); return add(in[0], in[1]);
    case OpKind::mul: need(2); return mul(in[0], in[1]);
    case OpKind::relu: need(1); return relu(in[0]);
    case OpKind::silu: need(1); return silu(in[0]);
    case OpKind::softmax_rows: need(1); return softmax_rows(in[0]);
    case OpKind::layer_norm: need(1); return layer_norm(in[0]);
    case OpKind::concat: return concat(in, at.axis);
    case OpKind::slice: need(1); return slice(in[0], at.axis, at.start, at.length);
    case OpKind::mean: need(1); return mean(in[0]);
    case OpKind::sum_squares: need(1); return sum_squares(in[0]);
    case OpKind::exp: need(1); return exp(in[0]);
    case OpKind::log: need(1); return log(in[0]);
    case OpKind::scale: need(1); return scale(in[0], at.factor);
    case OpKind::reshape: need(1); return in[0].reshape(at.shape);
    case OpKind::leaf:
      break;
  }
  shape_error(kind, "not a forward op");
}

// ---- backward sweep -------------------------------------------------------

void backward(const Tensor& loss) {
  Node* root = loss.node().get();
  if (root->values.size() != 1)
    throw Error(ErrorCategory::validation,
                "backward: loss must be a scalar, got " +
                    shape_str(root->shape));
  if (!root->requires_grad) return;

  // Gather requires_grad nodes reachable through parents; creation ids give
  // a topological order because inputs always predate their consumers.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root};
  seen.insert(root);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents) {
      Node* pn = p.get();
      if (pn->requires_grad && seen.insert(pn).second) stack.push_back(pn);
    }
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id > b->id; });

  ensure_grad(root);
  root->grad[0] += 1.0;
  for (Node* n : order) {
    if (n->backward_fn && !n->grad.empty()) n->backward_fn();
  }
}

std::vector<OpRecord> trace(const Tensor& root) {
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (const auto& p : n->parents)
      if (seen.insert(p.get()).second) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(),
            [](const Node* a, const Node* b) { return a->id < b->id; });
  std::vector<OpRecord> recs;
  recs.reserve(order.size());
  for (Node* n : order) {
    OpRecord r;
    r.id = n->id;
    r.op = n->op;
    r.shape = n->shape;
    for (const auto& p : n->parents) r.inputs.push_back(p->id);
    recs.push_back(std::move(r));
  }
  return recs;
}

// ---- Adam -----------------------------------------------------------------

Adam::Adam(std::vector<Tensor> params, double lr, double beta1, double beta2,
           double eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  m_.resize(params_.size());
  v_.resize(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!params_[i].requires_grad())
      throw Error(ErrorCategory::validation,
                  "Adam: parameter " + std::to_string(i) +
                      " does not require gradients");
    m_[i].assign(params_[i].size(), 0.0);
    v_[i].assign(params_[i].size(), 0.0);
  }
}

void Adam::step() {
  ++steps_;
  const double bc1 = 1.0 - std::pow(beta1_, double(steps_));
  const double bc2 = 1.0 - std::pow(beta2_, double(steps_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    if (!p.has_grad())
      throw Error(ErrorCategory::training,
                  "Adam: parameter " + std::to_string(i) +
                      " has no gradient; run backward first");
    auto g = p.grad();
    auto w = p.mutable_values();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      const double mh = m[j] / bc1;
      const double vh = v[j] / bc2;
      w[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) p.zero_grad();
}

// ---- gradient checking ----------------------------------------------------

GradCheckReport grad_check(std::span<Tensor> params,
                           const std::function<Tensor()>& build_loss,
                           double fd_step, double tolerance) {
  for (Tensor& p : params) p.zero_grad();
  Tensor loss = build_loss();
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (Tensor& p : params) {
    if (p.has_grad())
      analytic.emplace_back(p.grad().begin(), p.grad().end());
    else
      analytic.emplace_back(p.size(), 0.0);
  }

  GradCheckReport rep;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto w = params[pi].mutable_values();
    for (std::size_t c = 0; c < w.size(); ++c) {
      const double orig = w[c];
      w[c] = orig + fd_step;
      const double up = build_loss().item();
      w[c] = orig - fd_step;
      const double dn = build_loss().item();
      w[c] = orig;
      const double fd = (up - dn) / (2.0 * fd_step);
      const double a = analytic[pi][c];
      const double denom = std::max({std::abs(a), std::abs(fd), 1e-3});
      const double rel = std::abs(a - fd) / denom;
      if (rel > rep.max_rel_error) {
        rep.max_rel_error = rel;
        rep.worst = std::to_string(pi) + "/" + std::to_string(c);
      }
      ++rep.coords_checked;
    }
  }
  rep.passed = rep.max_rel_error < tolerance;
  return rep;
}

}  // namespace tabsynth::ad
