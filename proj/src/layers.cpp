#include "mmner/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmner/error.hpp"

namespace mmner {

namespace {

using detail::Node;

std::shared_ptr<Node> op_node(Shape shape, std::vector<std::shared_ptr<Node>> parents) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value.assign(static_cast<size_t>(shape_numel(node->shape)), 0.0);
  node->parents = std::move(parents);
  for (const auto& p : node->parents) {
    node->requires_grad = node->requires_grad || p->requires_grad;
  }
  if (node->requires_grad) {
    node->grad.assign(node->value.size(), 0.0);
  }
  return node;
}

}  // namespace

Tensor sine_relu(const Tensor& x, double epsilon) {
  if (!(epsilon > 0.0)) {
    throw ContractError("sine_relu: epsilon must be positive");
  }
  auto node = op_node(x.shape(), {x.node()});
  const auto& in = x.node()->value;
  for (size_t i = 0; i < in.size(); ++i) {
    const double v = in[i];
    node->value[i] = v > 0.0 ? v : epsilon * (std::sin(v) - std::cos(v));
  }
  if (node->requires_grad) {
    node->backward = [epsilon](Node& self) {
      Node& p = *self.parents[0];
      if (!p.requires_grad) {
        return;
      }
      for (size_t i = 0; i < self.value.size(); ++i) {
        const double v = p.value[i];
        const double d = v > 0.0 ? 1.0 : epsilon * (std::cos(v) + std::sin(v));
        p.grad[i] += self.grad[i] * d;
      }
    };
  }
  return Tensor(node);
}

Tensor targeted_dropout(const Tensor& x, double drop_rate, double target_rate, bool training,
                        Rng& rng, bool target_highest) {
  if (drop_rate < 0.0 || drop_rate > 1.0 || target_rate < 0.0 || target_rate > 1.0) {
    throw ContractError("targeted_dropout: rates must lie in [0, 1]");
  }
  if (!training || drop_rate == 0.0 || target_rate == 0.0) {
    return x;
  }
  const size_t n = static_cast<size_t>(x.numel());
  const size_t k = static_cast<size_t>(target_rate * static_cast<double>(n));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const auto& values = x.node()->value;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const double ma = std::fabs(values[a]);
    const double mb = std::fabs(values[b]);
    return target_highest ? ma > mb : ma < mb;
  });
  std::vector<double> mask(n, 1.0);
  for (size_t i = 0; i < k; ++i) {
    if (rng.uniform() < drop_rate) {
      mask[order[i]] = 0.0;
    }
  }
  return mul(x, Tensor::leaf(x.shape(), std::move(mask)));
}

Tensor group_norm(const Tensor& x, int64_t groups, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  const Shape& s = x.shape();
  if (s.size() != 2) {
    throw ShapeError("group_norm: expected [len x C], got " + shape_str(s));
  }
  const int64_t len = s[0], channels = s[1];
  if (groups < 1 || channels % groups != 0) {
    throw ShapeError("group_norm: " + std::to_string(channels) + " channels not divisible by " +
                     std::to_string(groups) + " groups");
  }
  if (gamma.shape() != Shape{1, channels} || beta.shape() != Shape{1, channels}) {
    throw ShapeError("group_norm: gamma/beta must be [1 x " + std::to_string(channels) + "]");
  }
  const int64_t group_ch = channels / groups;
  auto node = op_node(s, {x.node(), gamma.node(), beta.node()});
  const auto& in = x.node()->value;
  const auto& g = gamma.node()->value;
  const auto& b = beta.node()->value;
  std::vector<double> means(static_cast<size_t>(groups));
  std::vector<double> inv_stds(static_cast<size_t>(groups));
  for (int64_t grp = 0; grp < groups; ++grp) {
    const int64_t c0 = grp * group_ch;
    double mean = 0.0;
    for (int64_t t = 0; t < len; ++t) {
      for (int64_t c = c0; c < c0 + group_ch; ++c) {
        mean += in[static_cast<size_t>(t * channels + c)];
      }
    }
    const double count = static_cast<double>(len * group_ch);
    mean /= count;
    double var = 0.0;
    for (int64_t t = 0; t < len; ++t) {
      for (int64_t c = c0; c < c0 + group_ch; ++c) {
        const double d = in[static_cast<size_t>(t * channels + c)] - mean;
        var += d * d;
      }
    }
    var /= count;
    const double inv_std = 1.0 / std::sqrt(var + eps);
    means[static_cast<size_t>(grp)] = mean;
    inv_stds[static_cast<size_t>(grp)] = inv_std;
    for (int64_t t = 0; t < len; ++t) {
      for (int64_t c = c0; c < c0 + group_ch; ++c) {
        const size_t idx = static_cast<size_t>(t * channels + c);
        node->value[idx] = g[static_cast<size_t>(c)] * (in[idx] - mean) * inv_std +
                           b[static_cast<size_t>(c)];
      }
    }
  }
  if (node->requires_grad) {
    node->backward = [len, channels, groups, group_ch, means = std::move(means),
                      inv_stds = std::move(inv_stds)](Node& self) {
      Node& px = *self.parents[0];
      Node& pg = *self.parents[1];
      Node& pb = *self.parents[2];
      const double count = static_cast<double>(len * group_ch);
      for (int64_t grp = 0; grp < groups; ++grp) {
        const int64_t c0 = grp * group_ch;
        const double mean = means[static_cast<size_t>(grp)];
        const double inv_std = inv_stds[static_cast<size_t>(grp)];
        // accumulate the two reductions the input gradient needs
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int64_t t = 0; t < len; ++t) {
          for (int64_t c = c0; c < c0 + group_ch; ++c) {
            const size_t idx = static_cast<size_t>(t * channels + c);
            const double xhat = (px.value[idx] - mean) * inv_std;
            const double dxhat = self.grad[idx] * pg.value[static_cast<size_t>(c)];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
            if (pg.requires_grad) {
              pg.grad[static_cast<size_t>(c)] += self.grad[idx] * xhat;
            }
            if (pb.requires_grad) {
              pb.grad[static_cast<size_t>(c)] += self.grad[idx];
            }
          }
        }
        if (px.requires_grad) {
          for (int64_t t = 0; t < len; ++t) {
            for (int64_t c = c0; c < c0 + group_ch; ++c) {
              const size_t idx = static_cast<size_t>(t * channels + c);
              const double xhat = (px.value[idx] - mean) * inv_std;
              const double dxhat = self.grad[idx] * pg.value[static_cast<size_t>(c)];
              px.grad[idx] +=
                  inv_std * (dxhat - sum_dxhat / count - xhat * sum_dxhat_xhat / count);
            }
          }
        }
      }
    };
  }
  return Tensor(node);
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const Shape& s = x.shape();
  if (s.size() != 2) {
    throw ShapeError("layer_norm: expected 2-D input, got " + shape_str(s));
  }
  const int64_t rows = s[0], cols = s[1];
  if (gamma.shape() != Shape{1, cols} || beta.shape() != Shape{1, cols}) {
    throw ShapeError("layer_norm: gamma/beta must be [1 x " + std::to_string(cols) + "]");
  }
  auto node = op_node(s, {x.node(), gamma.node(), beta.node()});
  const auto& in = x.node()->value;
  const auto& g = gamma.node()->value;
  const auto& b = beta.node()->value;
  std::vector<double> means(static_cast<size_t>(rows));
  std::vector<double> inv_stds(static_cast<size_t>(rows));
  for (int64_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      mean += in[static_cast<size_t>(r * cols + c)];
    }
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (int64_t c = 0; c < cols; ++c) {
      const double d = in[static_cast<size_t>(r * cols + c)] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    means[static_cast<size_t>(r)] = mean;
    inv_stds[static_cast<size_t>(r)] = inv_std;
    for (int64_t c = 0; c < cols; ++c) {
      const size_t idx = static_cast<size_t>(r * cols + c);
      node->value[idx] =
          g[static_cast<size_t>(c)] * (in[idx] - mean) * inv_std + b[static_cast<size_t>(c)];
    }
  }
  if (node->requires_grad) {
    node->backward = [rows, cols, means = std::move(means),
                      inv_stds = std::move(inv_stds)](Node& self) {
      Node& px = *self.parents[0];
      Node& pg = *self.parents[1];
      Node& pb = *self.parents[2];
      for (int64_t r = 0; r < rows; ++r) {
        const double mean = means[static_cast<size_t>(r)];
        const double inv_std = inv_stds[static_cast<size_t>(r)];
        double sum_dxhat = 0.0;
        double sum_dxhat_xhat = 0.0;
        for (int64_t c = 0; c < cols; ++c) {
          const size_t idx = static_cast<size_t>(r * cols + c);
          const double xhat = (px.value[idx] - mean) * inv_std;
          const double dxhat = self.grad[idx] * pg.value[static_cast<size_t>(c)];
          sum_dxhat += dxhat;
          sum_dxhat_xhat += dxhat * xhat;
          if (pg.requires_grad) {
            pg.grad[static_cast<size_t>(c)] += self.grad[idx] * xhat;
          }
          if (pb.requires_grad) {
            pb.grad[static_cast<size_t>(c)] += self.grad[idx];
          }
        }
        if (px.requires_grad) {
          const double n = static_cast<double>(cols);
          for (int64_t c = 0; c < cols; ++c) {
            const size_t idx = static_cast<size_t>(r * cols + c);
            const double xhat = (px.value[idx] - mean) * inv_std;
            const double dxhat = self.grad[idx] * pg.value[static_cast<size_t>(c)];
            px.grad[idx] += inv_std * (dxhat - sum_dxhat / n - xhat * sum_dxhat_xhat / n);
          }
        }
      }
    };
  }
  return Tensor(node);
}

Tensor glorot_uniform(Shape shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  const double scale = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return Tensor::uniform(std::move(shape), -scale, scale, rng, /*requires_grad=*/true);
}

LstmParams make_lstm(int64_t input, int64_t hidden, Rng& rng) {
  LstmParams p;
  p.hidden = hidden;
  auto w = [&] { return glorot_uniform({input, hidden}, input, hidden, rng); };
  auto u = [&] { return glorot_uniform({hidden, hidden}, hidden, hidden, rng); };
  auto b = [&] { return Tensor::zeros({1, hidden}, true); };
  p.W_f = w();
  p.W_i = w();
  p.W_o = w();
  p.W_c = w();
  p.U_f = u();
  p.U_i = u();
  p.U_o = u();
  p.U_c = u();
  p.b_f = b();
  p.b_i = b();
  p.b_o = b();
  p.b_c = b();
  return p;
}

std::vector<NamedParam> LstmParams::named(const std::string& prefix) const {
  return {{prefix + ".W_f", W_f}, {prefix + ".W_i", W_i}, {prefix + ".W_o", W_o},
          {prefix + ".W_c", W_c}, {prefix + ".U_f", U_f}, {prefix + ".U_i", U_i},
          {prefix + ".U_o", U_o}, {prefix + ".U_c", U_c}, {prefix + ".b_f", b_f},
          {prefix + ".b_i", b_i}, {prefix + ".b_o", b_o}, {prefix + ".b_c", b_c}};
}

std::pair<Tensor, Tensor> lstm_step(const Tensor& x_t, const Tensor& h_prev, const Tensor& c_prev,
                                    const LstmParams& params) {
  auto gate = [&](const Tensor& W, const Tensor& U, const Tensor& b) {
    return add(add(matmul(x_t, W), matmul(h_prev, U)), b);
  };
  const Tensor f = sigmoid(gate(params.W_f, params.U_f, params.b_f));
  const Tensor i = sigmoid(gate(params.W_i, params.U_i, params.b_i));
  const Tensor o = sigmoid(gate(params.W_o, params.U_o, params.b_o));
  const Tensor candidate = tanh(gate(params.W_c, params.U_c, params.b_c));
  const Tensor c_t = add(mul(f, c_prev), mul(i, candidate));
  const Tensor h_t = mul(o, tanh(c_t));
  return {h_t, c_t};
}

std::vector<Tensor> lstm_run(std::span<const Tensor> xs, const LstmParams& params, bool reverse) {
  if (xs.empty()) {
    throw ContractError("lstm_run: empty sequence");
  }
  Tensor h = Tensor::zeros({1, params.hidden});
  Tensor c = Tensor::zeros({1, params.hidden});
  std::vector<Tensor> out(xs.size());
  for (size_t step = 0; step < xs.size(); ++step) {
    const size_t pos = reverse ? xs.size() - 1 - step : step;
    std::tie(h, c) = lstm_step(xs[pos], h, c, params);
    out[pos] = h;
  }
  return out;
}

std::vector<Tensor> bilstm(std::span<const Tensor> xs, const LstmParams& fwd,
                           const LstmParams& bwd) {
  if (xs.empty()) {
    throw ContractError("bilstm: empty sequence");
  }
  const auto hf = lstm_run(xs, fwd, /*reverse=*/false);
  const auto hb = lstm_run(xs, bwd, /*reverse=*/true);
  std::vector<Tensor> out;
  out.reserve(xs.size());
  for (size_t t = 0; t < xs.size(); ++t) {
    out.push_back(concat_cols({hf[t], hb[t]}));
  }
  return out;
}

AttentionParams make_attention(int64_t dim, Rng& rng) {
  AttentionParams p;
  p.W_w = glorot_uniform({dim, dim}, dim, dim, rng);
  p.b_w = Tensor::zeros({1, dim}, true);
  return p;
}

std::vector<NamedParam> AttentionParams::named(const std::string& prefix) const {
  return {{prefix + ".W_w", W_w}, {prefix + ".b_w", b_w}};
}

namespace {

Tensor attention_alphas(std::span<const Tensor> modalities, const AttentionParams& params) {
  if (modalities.empty()) {
    throw ContractError("modality_attention: no inputs");
  }
  const Shape& first = modalities[0].shape();
  std::vector<Tensor> scores;
  scores.reserve(modalities.size());
  for (const Tensor& h : modalities) {
    if (h.shape() != first) {
      throw ShapeError("modality_attention: mixed shapes " + shape_str(first) + " vs " +
                       shape_str(h.shape()));
    }
    const Tensor u = tanh(add(matmul(h, params.W_w), params.b_w));
    scores.push_back(sum(mul(h, u)));  // h . u
  }
  std::vector<Tensor> row(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    row[i] = reshape(scores[i], {1, 1});
  }
  return softmax(concat_cols(std::span<const Tensor>(row)), 1);  // [1 x n]
}

}  // namespace

Tensor modality_attention_weights(std::span<const Tensor> modalities,
                                  const AttentionParams& params) {
  return attention_alphas(modalities, params);
}

Tensor modality_attention(std::span<const Tensor> modalities, const AttentionParams& params) {
  const Tensor alphas = attention_alphas(modalities, params);
  Tensor out;
  for (size_t i = 0; i < modalities.size(); ++i) {
    const Tensor weighted = mul(modalities[i], slice_cols(alphas, static_cast<int64_t>(i), 1));
    out = out.defined() ? add(out, weighted) : weighted;
  }
  return out;
}

}  // namespace mmner
