#include "mmner/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "mmner/error.hpp"

namespace mmner {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr make_node(Shape shape, bool requires_grad) {
  auto node = std::make_shared<Node>();
  const int64_t n = shape_numel(node->shape = std::move(shape));
  node->value.assign(static_cast<size_t>(n), 0.0);
  node->requires_grad = requires_grad;
  if (requires_grad) {
    node->grad.assign(static_cast<size_t>(n), 0.0);
  }
  return node;
}

NodePtr result_node(Shape shape, std::vector<NodePtr> parents) {
  bool needs_grad = false;
  for (const auto& p : parents) {
    needs_grad = needs_grad || p->requires_grad;
  }
  auto node = make_node(std::move(shape), needs_grad);
  node->parents = std::move(parents);
  return node;
}

void check_positive_dims(const Shape& shape) {
  for (int64_t d : shape) {
    if (d <= 0) {
      throw ShapeError("tensor shape must have positive dims, got " + shape_str(shape));
    }
  }
}

bool scalar_like(const Node& n) { return n.value.size() == 1; }

}  // namespace

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    n *= d;
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) {
      out << 'x';
    }
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::leaf(Shape shape, std::vector<double> data, bool requires_grad) {
  check_positive_dims(shape);
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("tensor data size " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(data);
  node->requires_grad = requires_grad;
  if (requires_grad) {
    node->grad.assign(node->value.size(), 0.0);
  }
  return Tensor(std::move(node));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_positive_dims(shape);
  return Tensor(make_node(std::move(shape), requires_grad));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

Tensor Tensor::scalar(double v) { return leaf({1}, {v}); }

Tensor Tensor::uniform(Shape shape, double lo, double hi, Rng& rng, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  for (auto& v : t.data()) {
    v = rng.uniform(lo, hi);
  }
  return t;
}

std::span<const double> Tensor::grad() const { return node_->grad; }
std::span<double> Tensor::grad() { return node_->grad; }

double Tensor::item() const {
  if (numel() != 1) {
    throw ContractError("item() on tensor of shape " + shape_str(shape()));
  }
  return node_->value[0];
}

double Tensor::at(int64_t i, int64_t j) const {
  return node_->value[static_cast<size_t>(i * node_->shape[1] + j)];
}

void Tensor::zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

namespace {

// Binary elementwise with scalar broadcast on either side.
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name,
                 double (*fwd)(double, double), double (*dfa)(double, double),
                 double (*dfb)(double, double)) {
  const Node& na = *a.node();
  const Node& nb = *b.node();
  const bool a_scalar = scalar_like(na);
  const bool b_scalar = scalar_like(nb);
  if (!a_scalar && !b_scalar && na.shape != nb.shape) {
    throw ShapeError(std::string(name) + ": shape mismatch " + shape_str(na.shape) + " vs " +
                     shape_str(nb.shape));
  }
  const Node& big = (a_scalar && !b_scalar) ? nb : na;
  auto node = result_node(big.shape, {a.node(), b.node()});
  const size_t n = node->value.size();
  for (size_t i = 0; i < n; ++i) {
    const double x = na.value[a_scalar ? 0 : i];
    const double y = nb.value[b_scalar ? 0 : i];
    node->value[i] = fwd(x, y);
  }
  if (node->requires_grad) {
    node->backward = [dfa, dfb, a_scalar, b_scalar](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      const size_t n = self.value.size();
      for (size_t i = 0; i < n; ++i) {
        const double g = self.grad[i];
        const double x = pa.value[a_scalar ? 0 : i];
        const double y = pb.value[b_scalar ? 0 : i];
        if (pa.requires_grad) {
          pa.grad[a_scalar ? 0 : i] += g * dfa(x, y);
        }
        if (pb.requires_grad) {
          pb.grad[b_scalar ? 0 : i] += g * dfb(x, y);
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor unary_op(const Tensor& a, double (*fwd)(double), double (*dfdx)(double, double)) {
  // dfdx receives (x, f(x)) so sigmoid/tanh reuse the forward value.
  auto node = result_node(a.node()->shape, {a.node()});
  const auto& in = a.node()->value;
  for (size_t i = 0; i < in.size(); ++i) {
    node->value[i] = fwd(in[i]);
  }
  if (node->requires_grad) {
    node->backward = [dfdx](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (size_t i = 0; i < self.value.size(); ++i) {
        p.grad[i] += self.grad[i] * dfdx(p.value[i], self.value[i]);
      }
    };
  }
  return Tensor(std::move(node));
}

double stable_sigmoid(double x) {
  if (x >= 0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor add_scalar(const Tensor& a, double c) { return add(a, Tensor::scalar(c)); }
Tensor mul_scalar(const Tensor& a, double c) { return mul(a, Tensor::scalar(c)); }

Tensor tanh(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::tanh(v); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, +[](double v) { return stable_sigmoid(v); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary_op(
      x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) {
      throw NumericError("log: argument " + std::to_string(v) + " outside domain");
    }
  }
  return unary_op(
      x, [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor softmax(const Tensor& x, int axis) {
  const Shape& shape = x.node()->shape;
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw ShapeError("softmax: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(shape));
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) {
      throw NumericError("softmax: non-finite input");
    }
  }
  const int64_t n = shape[static_cast<size_t>(axis)];
  int64_t inner = 1;
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) {
    inner *= shape[i];
  }
  const int64_t outer = x.numel() / (n * inner);

  auto node = result_node(shape, {x.node()});
  const auto& in = x.node()->value;
  auto& out = node->value;
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t r = 0; r < inner; ++r) {
      const int64_t base = o * n * inner + r;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t j = 0; j < n; ++j) {
        mx = std::max(mx, in[static_cast<size_t>(base + j * inner)]);
      }
      double denom = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const size_t idx = static_cast<size_t>(base + j * inner);
        out[idx] = std::exp(in[idx] - mx);
        denom += out[idx];
      }
      for (int64_t j = 0; j < n; ++j) {
        out[static_cast<size_t>(base + j * inner)] /= denom;
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [n, inner, outer](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t r = 0; r < inner; ++r) {
          const int64_t base = o * n * inner + r;
          double dot = 0.0;
          for (int64_t j = 0; j < n; ++j) {
            const size_t idx = static_cast<size_t>(base + j * inner);
            dot += self.grad[idx] * self.value[idx];
          }
          for (int64_t j = 0; j < n; ++j) {
            const size_t idx = static_cast<size_t>(base + j * inner);
            p.grad[idx] += self.value[idx] * (self.grad[idx] - dot);
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor log_softmax(const Tensor& x, int axis) {
  const Shape& shape = x.node()->shape;
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw ShapeError("log_softmax: axis " + std::to_string(axis) + " out of range for " +
                     shape_str(shape));
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) {
      throw NumericError("log_softmax: non-finite input");
    }
  }
  const int64_t n = shape[static_cast<size_t>(axis)];
  int64_t inner = 1;
  for (size_t i = static_cast<size_t>(axis) + 1; i < shape.size(); ++i) {
    inner *= shape[i];
  }
  const int64_t outer = x.numel() / (n * inner);
  auto node = result_node(shape, {x.node()});
  const auto& in = x.node()->value;
  auto& out = node->value;
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t r = 0; r < inner; ++r) {
      const int64_t base = o * n * inner + r;
      double mx = -std::numeric_limits<double>::infinity();
      for (int64_t j = 0; j < n; ++j) {
        mx = std::max(mx, in[static_cast<size_t>(base + j * inner)]);
      }
      double denom = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        denom += std::exp(in[static_cast<size_t>(base + j * inner)] - mx);
      }
      const double log_denom = mx + std::log(denom);
      for (int64_t j = 0; j < n; ++j) {
        const size_t idx = static_cast<size_t>(base + j * inner);
        out[idx] = in[idx] - log_denom;
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [n, inner, outer](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (int64_t o = 0; o < outer; ++o) {
        for (int64_t r = 0; r < inner; ++r) {
          const int64_t base = o * n * inner + r;
          double gsum = 0.0;
          for (int64_t j = 0; j < n; ++j) {
            gsum += self.grad[static_cast<size_t>(base + j * inner)];
          }
          for (int64_t j = 0; j < n; ++j) {
            const size_t idx = static_cast<size_t>(base + j * inner);
            p.grad[idx] += self.grad[idx] - std::exp(self.value[idx]) * gsum;
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.node()->shape;
  const Shape& sb = b.node()->shape;
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(sa) + " x " + shape_str(sb));
  }
  const int64_t m = sa[0], k = sa[1], n = sb[1];
  auto node = result_node({m, n}, {a.node(), b.node()});
  const double* pa = a.node()->value.data();
  const double* pb = b.node()->value.data();
  double* pc = node->value.data();
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = pa[i * k + kk];
      const double* brow = pb + kk * n;
      double* crow = pc + i * n;
      for (int64_t j = 0; j < n; ++j) {
        crow[j] += av * brow[j];
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [m, k, n](Node& self) {
      Node& pa = *self.parents[0];
      Node& pb = *self.parents[1];
      const double* g = self.grad.data();
      if (pa.requires_grad) {
        // dA = G * B^T
        const double* b = pb.value.data();
        for (int64_t i = 0; i < m; ++i) {
          for (int64_t kk = 0; kk < k; ++kk) {
            double acc = 0.0;
            const double* grow = g + i * n;
            const double* brow = b + kk * n;
            for (int64_t j = 0; j < n; ++j) {
              acc += grow[j] * brow[j];
            }
            pa.grad[static_cast<size_t>(i * k + kk)] += acc;
          }
        }
      }
      if (pb.requires_grad) {
        // dB = A^T * G
        const double* a = pa.value.data();
        for (int64_t i = 0; i < m; ++i) {
          const double* grow = g + i * n;
          for (int64_t kk = 0; kk < k; ++kk) {
            const double av = a[i * k + kk];
            double* brow = pb.grad.data() + kk * n;
            for (int64_t j = 0; j < n; ++j) {
              brow[j] += av * grow[j];
            }
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor transpose(const Tensor& x) {
  const Shape& s = x.node()->shape;
  if (s.size() != 2) {
    throw ShapeError("transpose: expected 2-D tensor, got " + shape_str(s));
  }
  const int64_t m = s[0], n = s[1];
  auto node = result_node({n, m}, {x.node()});
  const auto& in = x.node()->value;
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      node->value[static_cast<size_t>(j * m + i)] = in[static_cast<size_t>(i * n + j)];
    }
  }
  if (node->requires_grad) {
    node->backward = [m, n](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (int64_t i = 0; i < m; ++i) {
        for (int64_t j = 0; j < n; ++j) {
          p.grad[static_cast<size_t>(i * n + j)] += self.grad[static_cast<size_t>(j * m + i)];
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor conv1d(const Tensor& x, const Tensor& kernels, Padding padding) {
  const Shape& sx = x.node()->shape;
  const Shape& sk = kernels.node()->shape;
  if (sx.size() != 2 || sk.size() != 3 || sx[1] != sk[1]) {
    throw ShapeError("conv1d: expected x [len x ch_in] and kernels [ks x ch_in x ch_out], got " +
                     shape_str(sx) + " and " + shape_str(sk));
  }
  const int64_t len = sx[0], ci = sx[1], ks = sk[0], co = sk[2];
  int64_t out_len;
  int64_t pad_left;
  if (padding == Padding::valid) {
    if (ks > len) {
      throw ShapeError("conv1d: kernel size " + std::to_string(ks) +
                       " exceeds input length " + std::to_string(len) + " under valid padding");
    }
    out_len = len - ks + 1;
    pad_left = 0;
  } else {
    out_len = len;
    pad_left = (ks - 1) / 2;
  }
  auto node = result_node({out_len, co}, {x.node(), kernels.node()});
  const double* px = x.node()->value.data();
  const double* pk = kernels.node()->value.data();
  double* po = node->value.data();
  for (int64_t t = 0; t < out_len; ++t) {
    for (int64_t j = 0; j < ks; ++j) {
      const int64_t src = t + j - pad_left;
      if (src < 0 || src >= len) {
        continue;
      }
      const double* xrow = px + src * ci;
      const double* krow = pk + j * ci * co;
      double* orow = po + t * co;
      for (int64_t c = 0; c < ci; ++c) {
        const double xv = xrow[c];
        const double* kk = krow + c * co;
        for (int64_t o = 0; o < co; ++o) {
          orow[o] += xv * kk[o];
        }
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [len, ci, ks, co, out_len, pad_left](Node& self) {
      Node& px = *self.parents[0];
      Node& pk = *self.parents[1];
      const double* g = self.grad.data();
      for (int64_t t = 0; t < out_len; ++t) {
        const double* grow = g + t * co;
        for (int64_t j = 0; j < ks; ++j) {
          const int64_t src = t + j - pad_left;
          if (src < 0 || src >= len) {
            continue;
          }
          for (int64_t c = 0; c < ci; ++c) {
            const double xv = px.value[static_cast<size_t>(src * ci + c)];
            const double* kk = pk.value.data() + (j * ci + c) * co;
            double acc = 0.0;
            for (int64_t o = 0; o < co; ++o) {
              acc += grow[o] * kk[o];
              if (pk.requires_grad) {
                pk.grad[static_cast<size_t>((j * ci + c) * co + o)] += grow[o] * xv;
              }
            }
            if (px.requires_grad) {
              px.grad[static_cast<size_t>(src * ci + c)] += acc;
            }
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor maxpool1d(const Tensor& x, int64_t pool) {
  const Shape& s = x.node()->shape;
  if (s.size() != 2) {
    throw ShapeError("maxpool1d: expected 2-D tensor, got " + shape_str(s));
  }
  if (pool < 1) {
    throw ContractError("maxpool1d: pool size must be >= 1");
  }
  const int64_t len = s[0], ch = s[1];
  const int64_t out_len = (len + pool - 1) / pool;
  auto node = result_node({out_len, ch}, {x.node()});
  std::vector<int64_t> argmax(static_cast<size_t>(out_len * ch));
  const auto& in = x.node()->value;
  for (int64_t t = 0; t < out_len; ++t) {
    const int64_t begin = t * pool;
    const int64_t end = std::min(begin + pool, len);
    for (int64_t c = 0; c < ch; ++c) {
      double best = in[static_cast<size_t>(begin * ch + c)];
      int64_t best_at = begin;
      for (int64_t u = begin + 1; u < end; ++u) {
        const double v = in[static_cast<size_t>(u * ch + c)];
        if (v > best) {
          best = v;
          best_at = u;
        }
      }
      node->value[static_cast<size_t>(t * ch + c)] = best;
      argmax[static_cast<size_t>(t * ch + c)] = best_at;
    }
  }
  if (node->requires_grad) {
    node->backward = [argmax = std::move(argmax), ch](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (size_t i = 0; i < self.value.size(); ++i) {
        const int64_t c = static_cast<int64_t>(i) % ch;
        p.grad[static_cast<size_t>(argmax[i] * ch + c)] += self.grad[i];
      }
    };
  }
  return Tensor(std::move(node));
}

namespace {

Tensor concat2d(std::span<const Tensor> parts, int axis) {
  if (parts.empty()) {
    throw ContractError("concat: no operands");
  }
  const Shape& first = parts[0].node()->shape;
  if (first.size() != 2) {
    throw ShapeError("concat: expected 2-D tensors, got " + shape_str(first));
  }
  int64_t total = 0;
  std::vector<NodePtr> parents;
  parents.reserve(parts.size());
  for (const Tensor& t : parts) {
    const Shape& s = t.node()->shape;
    if (s.size() != 2 || s[1 - axis] != first[1 - axis]) {
      throw ShapeError("concat: shape " + shape_str(s) + " incompatible with " +
                       shape_str(first));
    }
    total += s[static_cast<size_t>(axis)];
    parents.push_back(t.node());
  }
  Shape out_shape = first;
  out_shape[static_cast<size_t>(axis)] = total;
  auto node = result_node(out_shape, std::move(parents));

  if (axis == 0) {
    size_t off = 0;
    for (const auto& p : node->parents) {
      std::copy(p->value.begin(), p->value.end(), node->value.begin() + off);
      off += p->value.size();
    }
    node->backward = [](Node& self) {
      size_t off = 0;
      for (const auto& p : self.parents) {
        if (p->requires_grad) {
          for (size_t i = 0; i < p->value.size(); ++i) {
            p->grad[i] += self.grad[off + i];
          }
        }
        off += p->value.size();
      }
    };
  } else {
    const int64_t rows = first[0];
    const int64_t out_cols = total;
    int64_t col_off = 0;
    for (const auto& p : node->parents) {
      const int64_t cols = p->shape[1];
      for (int64_t r = 0; r < rows; ++r) {
        std::copy(p->value.begin() + r * cols, p->value.begin() + (r + 1) * cols,
                  node->value.begin() + r * out_cols + col_off);
      }
      col_off += cols;
    }
    node->backward = [rows, out_cols](Node& self) {
      int64_t col_off = 0;
      for (const auto& p : self.parents) {
        const int64_t cols = p->shape[1];
        if (p->requires_grad) {
          for (int64_t r = 0; r < rows; ++r) {
            for (int64_t c = 0; c < cols; ++c) {
              p->grad[static_cast<size_t>(r * cols + c)] +=
                  self.grad[static_cast<size_t>(r * out_cols + col_off + c)];
            }
          }
        }
        col_off += cols;
      }
    };
  }
  if (!node->requires_grad) {
    node->backward = nullptr;
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor concat_rows(std::span<const Tensor> parts) { return concat2d(parts, 0); }
Tensor concat_cols(std::span<const Tensor> parts) { return concat2d(parts, 1); }
Tensor concat_rows(std::initializer_list<Tensor> parts) {
  return concat2d(std::span<const Tensor>(parts.begin(), parts.size()), 0);
}
Tensor concat_cols(std::initializer_list<Tensor> parts) {
  return concat2d(std::span<const Tensor>(parts.begin(), parts.size()), 1);
}

namespace {

Tensor slice2d(const Tensor& x, int64_t start, int64_t len, int axis) {
  const Shape& s = x.node()->shape;
  if (s.size() != 2) {
    throw ShapeError("slice: expected 2-D tensor, got " + shape_str(s));
  }
  if (start < 0 || len < 1 || start + len > s[static_cast<size_t>(axis)]) {
    throw ShapeError("slice: range [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of bounds for " + shape_str(s));
  }
  Shape out_shape = s;
  out_shape[static_cast<size_t>(axis)] = len;
  auto node = result_node(out_shape, {x.node()});
  const int64_t rows = s[0], cols = s[1];
  const auto& in = x.node()->value;
  if (axis == 0) {
    std::copy(in.begin() + start * cols, in.begin() + (start + len) * cols, node->value.begin());
  } else {
    for (int64_t r = 0; r < rows; ++r) {
      std::copy(in.begin() + r * cols + start, in.begin() + r * cols + start + len,
                node->value.begin() + r * len);
    }
  }
  if (node->requires_grad) {
    node->backward = [start, len, rows, cols, axis](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      if (axis == 0) {
        for (size_t i = 0; i < self.value.size(); ++i) {
          p.grad[static_cast<size_t>(start * cols) + i] += self.grad[i];
        }
      } else {
        for (int64_t r = 0; r < rows; ++r) {
          for (int64_t c = 0; c < len; ++c) {
            p.grad[static_cast<size_t>(r * cols + start + c)] +=
                self.grad[static_cast<size_t>(r * len + c)];
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

}  // namespace

Tensor slice_rows(const Tensor& x, int64_t start, int64_t len) { return slice2d(x, start, len, 0); }
Tensor slice_cols(const Tensor& x, int64_t start, int64_t len) { return slice2d(x, start, len, 1); }

Tensor gather_rows(const Tensor& table, std::span<const int64_t> ids) {
  const Shape& s = table.node()->shape;
  if (s.size() != 2) {
    throw ShapeError("gather_rows: expected 2-D table, got " + shape_str(s));
  }
  if (ids.empty()) {
    throw ContractError("gather_rows: empty id list");
  }
  const int64_t rows = s[0], cols = s[1];
  for (int64_t id : ids) {
    if (id < 0 || id >= rows) {
      throw ContractError("gather_rows: id " + std::to_string(id) + " out of range [0, " +
                          std::to_string(rows) + ")");
    }
  }
  auto node = result_node({static_cast<int64_t>(ids.size()), cols}, {table.node()});
  const auto& in = table.node()->value;
  for (size_t i = 0; i < ids.size(); ++i) {
    std::copy(in.begin() + ids[i] * cols, in.begin() + (ids[i] + 1) * cols,
              node->value.begin() + static_cast<int64_t>(i) * cols);
  }
  if (node->requires_grad) {
    std::vector<int64_t> idv(ids.begin(), ids.end());
    node->backward = [idv = std::move(idv), cols](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (size_t i = 0; i < idv.size(); ++i) {
        for (int64_t c = 0; c < cols; ++c) {
          p.grad[static_cast<size_t>(idv[i] * cols + c)] +=
              self.grad[static_cast<size_t>(static_cast<int64_t>(i) * cols + c)];
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor add_rowwise(const Tensor& x, const Tensor& b) {
  const Shape& sx = x.node()->shape;
  const Shape& sb = b.node()->shape;
  if (sx.size() != 2 || sb.size() != 2 || sb[0] != 1 || sb[1] != sx[1]) {
    throw ShapeError("add_rowwise: expected [m x n] and [1 x n], got " + shape_str(sx) +
                     " and " + shape_str(sb));
  }
  const int64_t rows = sx[0], cols = sx[1];
  auto node = result_node(sx, {x.node(), b.node()});
  const auto& in = x.node()->value;
  const auto& bias = b.node()->value;
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < cols; ++c) {
      node->value[static_cast<size_t>(r * cols + c)] =
          in[static_cast<size_t>(r * cols + c)] + bias[static_cast<size_t>(c)];
    }
  }
  if (node->requires_grad) {
    node->backward = [rows, cols](Node& self) {
      Node& px = *self.parents[0];
      Node& pb = *self.parents[1];
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t c = 0; c < cols; ++c) {
          const double g = self.grad[static_cast<size_t>(r * cols + c)];
          if (px.requires_grad) {
            px.grad[static_cast<size_t>(r * cols + c)] += g;
          }
          if (pb.requires_grad) {
            pb.grad[static_cast<size_t>(c)] += g;
          }
        }
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor reshape(const Tensor& x, Shape shape) {
  check_positive_dims(shape);
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_str(x.shape()) + " as " + shape_str(shape));
  }
  auto node = result_node(std::move(shape), {x.node()});
  node->value = x.node()->value;
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (size_t i = 0; i < self.grad.size(); ++i) {
        p.grad[i] += self.grad[i];
      }
    };
  }
  return Tensor(std::move(node));
}

Tensor sum(const Tensor& x) {
  auto node = result_node({1}, {x.node()});
  double acc = 0.0;
  for (double v : x.node()->value) {
    acc += v;
  }
  node->value[0] = acc;
  if (node->requires_grad) {
    node->backward = [](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      const double g = self.grad[0];
      for (auto& gv : p.grad) {
        gv += g;
      }
    };
  }
  return Tensor(std::move(node));
}

size_t backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward: loss must be a defined scalar tensor");
  }
  if (!loss.requires_grad()) {
    throw ContractError("backward: loss is not connected to any requires_grad tensor");
  }
  // Iterative post-order over grad-requiring ancestors; visits each node once.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    bool descended = false;
    while (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && !seen.count(parent)) {
        seen.insert(parent);
        stack.emplace_back(parent, 0);
        descended = true;
        break;
      }
    }
    if (!descended && (stack.back().second >= stack.back().first->parents.size())) {
      order.push_back(stack.back().first);
      stack.pop_back();
    }
  }
  // Intermediate grads are transient per sweep; only leaves accumulate
  // across repeated backward calls.
  for (Node* node : order) {
    if (!node->parents.empty()) {
      std::fill(node->grad.begin(), node->grad.end(), 0.0);
    }
  }
  loss.node()->grad[0] += 1.0;
  size_t visited = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    ++visited;
    if ((*it)->backward) {
      (*it)->backward(**it);
    }
  }
  return visited;
}

}  // namespace mmner
