#include "tokd/numeric/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "tokd/numeric/errors.hpp"
#include "tokd/numeric/kernels.hpp"

namespace tokd::ops {
namespace kp = kernels::parallel;

namespace {

template <typename T>
void require_same_shape(const char* op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

template <typename T>
void accumulate(Tensor<T>& dst, const Tensor<T>& src) {
  T* d = dst.data();
  const T* s = src.data();
  const std::size_t n = dst.numel();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) d[i] += s[i];
}

}  // namespace

template <typename T>
Var<T> linear(Var<T> x, Var<T> weight, std::optional<Var<T>> bias) {
  const Tensor<T>& xv = x.value();
  const Tensor<T>& wv = weight.value();
  if (wv.rank() != 2 || xv.cols() != wv.dim(0)) {
    throw DimensionError("linear: input " + shape_string(xv.shape()) + " incompatible with weight " +
                         shape_string(wv.shape()));
  }
  const std::size_t rows = xv.rows(), in = wv.dim(0), out = wv.dim(1);
  if (bias && (bias->value().rank() != 1 || bias->value().dim(0) != out)) {
    throw DimensionError("linear: bias " + shape_string(bias->value().shape()) + " incompatible with weight " +
                         shape_string(wv.shape()));
  }
  Shape out_shape = xv.shape();
  out_shape.back() = out;
  Tensor<T> y(out_shape);
  kp::gemm_nn(rows, out, in, xv.data(), wv.data(), y.data(), false);
  std::uint64_t flops = 2ull * rows * in * out;
  if (bias) {
    kp::add_row_bias(rows, out, bias->value().data(), y.data());
    flops += rows * out;
  }
  Graph<T>& g = x.graph();
  const std::size_t xi = x.id(), wi = weight.id();
  const std::optional<std::size_t> bi = bias ? std::optional<std::size_t>(bias->id()) : std::nullopt;
  std::vector<Var<T>> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  return g.record(
      "linear", std::move(y), inputs,
      [xi, wi, bi, rows, in, out](Graph<T>& gr, const Tensor<T>& dy) {
        if (gr.requires_grad(xi)) {
          kp::gemm_nt(rows, in, out, dy.data(), gr.value(wi).data(), gr.grad_buffer(xi).data(), true);
        }
        if (gr.requires_grad(wi)) {
          kp::gemm_tn(rows, out, in, gr.value(xi).data(), dy.data(), gr.grad_buffer(wi).data(), true);
        }
        if (bi && gr.requires_grad(*bi)) kp::column_sums(rows, out, dy.data(), gr.grad_buffer(*bi).data());
      },
      flops);
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_shape("add", a.value(), b.value());
  Tensor<T> y = a.value();
  accumulate(y, b.value());
  const std::size_t ai = a.id(), bi = b.id();
  const auto n = y.numel();
  return a.graph().record(
      "add", std::move(y), {a, b},
      [ai, bi](Graph<T>& gr, const Tensor<T>& dy) {
        if (gr.requires_grad(ai)) accumulate(gr.grad_buffer(ai), dy);
        if (gr.requires_grad(bi)) accumulate(gr.grad_buffer(bi), dy);
      },
      n * flop_cost::kAdd);
}

template <typename T>
Var<T> mul(Var<T> a, Var<T> b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor<T> y = a.value();
  for (std::size_t i = 0; i < y.numel(); ++i) y[i] *= b.value()[i];
  const std::size_t ai = a.id(), bi = b.id();
  const auto n = y.numel();
  return a.graph().record(
      "mul", std::move(y), {a, b},
      [ai, bi](Graph<T>& gr, const Tensor<T>& dy) {
        if (gr.requires_grad(ai)) {
          Tensor<T>& ga = gr.grad_buffer(ai);
          for (std::size_t i = 0; i < dy.numel(); ++i) ga[i] += dy[i] * gr.value(bi)[i];
        }
        if (gr.requires_grad(bi)) {
          Tensor<T>& gb = gr.grad_buffer(bi);
          for (std::size_t i = 0; i < dy.numel(); ++i) gb[i] += dy[i] * gr.value(ai)[i];
        }
      },
      n * flop_cost::kScale);
}

template <typename T>
Var<T> scale(Var<T> x, T factor) {
  Tensor<T> y = x.value();
  for (auto& v : y.values()) v *= factor;
  const std::size_t xi = x.id();
  const auto n = y.numel();
  return x.graph().record(
      "scale", std::move(y), {x},
      [xi, factor](Graph<T>& gr, const Tensor<T>& dy) {
        Tensor<T>& gx = gr.grad_buffer(xi);
        for (std::size_t i = 0; i < dy.numel(); ++i) gx[i] += factor * dy[i];
      },
      n * flop_cost::kScale);
}

template <typename T>
Var<T> sum(Var<T> x) {
  T acc = 0;
  for (T v : x.value().values()) acc += v;
  const std::size_t xi = x.id();
  const auto n = x.value().numel();
  return x.graph().record(
      "sum", Tensor<T>::scalar(acc), {x},
      [xi](Graph<T>& gr, const Tensor<T>& dy) {
        Tensor<T>& gx = gr.grad_buffer(xi);
        for (auto& v : gx.values()) v += dy[0];
      },
      n * flop_cost::kAdd);
}

template <typename T>
Var<T> layer_norm(Var<T> x, Var<T> gain, Var<T> bias, T eps) {
  const Tensor<T>& xv = x.value();
  const std::size_t d = xv.cols();
  if (d == 0) throw DimensionError("layer_norm: empty trailing axis");
  if (gain.value().numel() != d || bias.value().numel() != d) {
    throw DimensionError("layer_norm: input " + shape_string(xv.shape()) + " with gain " +
                         shape_string(gain.value().shape()) + " and bias " + shape_string(bias.value().shape()));
  }
  if (!(eps > T(0))) throw ArgumentError("layer_norm: eps must be positive");
  const std::size_t rows = xv.rows();
  Tensor<T> y(xv.shape());
  auto xhat = std::make_shared<Tensor<T>>(xv.shape());
  auto rstd = std::make_shared<std::vector<T>>(rows);
  const T* gp = gain.value().data();
  const T* bp = bias.value().data();
  const auto nrows = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static) if (rows * d >= (1u << 15))
  for (std::ptrdiff_t r = 0; r < nrows; ++r) {
    const T* xr = xv.data() + r * d;
    T mean = 0;
    for (std::size_t c = 0; c < d; ++c) mean += xr[c];
    mean /= static_cast<T>(d);
    T var = 0;
    for (std::size_t c = 0; c < d; ++c) var += (xr[c] - mean) * (xr[c] - mean);
    var /= static_cast<T>(d);
    const T rs = T(1) / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    T* hr = xhat->data() + r * d;
    T* yr = y.data() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      hr[c] = (xr[c] - mean) * rs;
      yr[c] = hr[c] * gp[c] + bp[c];
    }
  }
  const std::size_t xi = x.id(), gi = gain.id(), bi = bias.id();
  return x.graph().record(
      "layer_norm", std::move(y), {x, gain, bias},
      [xi, gi, bi, xhat, rstd, rows, d](Graph<T>& gr, const Tensor<T>& dy) {
        if (gr.requires_grad(gi)) {
          T* gg = gr.grad_buffer(gi).data();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < d; ++c) gg[c] += dy[r * d + c] * (*xhat)[r * d + c];
        }
        if (gr.requires_grad(bi)) kernels::parallel::column_sums(rows, d, dy.data(), gr.grad_buffer(bi).data());
        if (gr.requires_grad(xi)) {
          const T* gp2 = gr.value(gi).data();
          T* gx = gr.grad_buffer(xi).data();
          std::vector<T> dh(d);
          for (std::size_t r = 0; r < rows; ++r) {
            T mean_dh = 0, mean_dh_h = 0;
            for (std::size_t c = 0; c < d; ++c) {
              dh[c] = dy[r * d + c] * gp2[c];
              mean_dh += dh[c];
              mean_dh_h += dh[c] * (*xhat)[r * d + c];
            }
            mean_dh /= static_cast<T>(d);
            mean_dh_h /= static_cast<T>(d);
            for (std::size_t c = 0; c < d; ++c) {
              gx[r * d + c] += (*rstd)[r] * (dh[c] - mean_dh - (*xhat)[r * d + c] * mean_dh_h);
            }
          }
        }
      },
      xv.numel() * flop_cost::kLayerNorm);
}

template <typename T>
Var<T> gelu(Var<T> x) {
  constexpr T kInvSqrt2 = T(1) / std::numbers::sqrt2_v<T>;
  Tensor<T> y = x.value();
  for (auto& v : y.values()) v = T(0.5) * v * (T(1) + std::erf(v * kInvSqrt2));
  const std::size_t xi = x.id();
  const auto n = y.numel();
  return x.graph().record(
      "gelu", std::move(y), {x},
      [xi](Graph<T>& gr, const Tensor<T>& dy) {
        constexpr T kInvSqrt2Pi = std::numbers::inv_sqrtpi_v<T> / std::numbers::sqrt2_v<T>;
        const Tensor<T>& xv = gr.value(xi);
        Tensor<T>& gx = gr.grad_buffer(xi);
        for (std::size_t i = 0; i < xv.numel(); ++i) {
          const T v = xv[i];
          const T cdf = T(0.5) * (T(1) + std::erf(v * kInvSqrt2));
          const T pdf = kInvSqrt2Pi * std::exp(T(-0.5) * v * v);
          gx[i] += dy[i] * (cdf + v * pdf);
        }
      },
      n * flop_cost::kGelu);
}

template <typename T>
Var<T> sigmoid(Var<T> x) {
  Tensor<T> y = x.value();
  for (auto& v : y.values()) v = T(1) / (T(1) + std::exp(-v));
  const std::size_t xi = x.id();
  const auto n = y.numel();
  auto out = std::make_shared<Tensor<T>>(y);
  return x.graph().record(
      "sigmoid", std::move(y), {x},
      [xi, out](Graph<T>& gr, const Tensor<T>& dy) {
        Tensor<T>& gx = gr.grad_buffer(xi);
        for (std::size_t i = 0; i < dy.numel(); ++i) gx[i] += dy[i] * (*out)[i] * (T(1) - (*out)[i]);
      },
      n * flop_cost::kSigmoid);
}

namespace {

template <typename T>
void softmax_row(T* row, std::size_t n) {
  T mx = row[0];
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
  T total = 0;
  for (std::size_t j = 0; j < n; ++j) {
    row[j] = std::exp(row[j] - mx);
    total += row[j];
  }
  const T inv = T(1) / total;
  for (std::size_t j = 0; j < n; ++j) row[j] *= inv;
}

// dx = y * (dy - <dy, y>) for one row.
template <typename T>
void softmax_row_backward(const T* y, const T* dy, T* dx, std::size_t n, bool accumulate_into) {
  T dot = 0;
  for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
  for (std::size_t j = 0; j < n; ++j) {
    const T v = y[j] * (dy[j] - dot);
    dx[j] = accumulate_into ? dx[j] + v : v;
  }
}

}  // namespace

template <typename T>
Var<T> softmax_rows(Var<T> x) {
  Tensor<T> y = x.value();
  const std::size_t rows = y.rows(), cols = y.cols();
  for (std::size_t r = 0; r < rows; ++r) softmax_row(y.data() + r * cols, cols);
  auto out = std::make_shared<Tensor<T>>(y);
  const std::size_t xi = x.id();
  return x.graph().record(
      "softmax_rows", std::move(y), {x},
      [xi, out, rows, cols](Graph<T>& gr, const Tensor<T>& dy) {
        Tensor<T>& gx = gr.grad_buffer(xi);
        for (std::size_t r = 0; r < rows; ++r) {
          softmax_row_backward(out->data() + r * cols, dy.data() + r * cols, gx.data() + r * cols, cols, true);
        }
      },
      rows * cols * flop_cost::kSoftmax);
}

namespace {

constexpr double kNormEps = 1e-12;

// Saved per-head state of the attention core.
template <typename T>
struct HeadCache {
  std::vector<T> q_hat, k_hat, v;  // [n, dh]
  std::vector<T> q_norm, k_norm;   // [n]
  std::vector<T> cosine;           // [n, n] = q_hat k_hat^T
  std::vector<T> prob;             // [n, n]
};

template <typename T>
void normalize_rows(std::vector<T>& m, std::vector<T>& norms, std::size_t n, std::size_t dh) {
  for (std::size_t i = 0; i < n; ++i) {
    T ss = 0;
    for (std::size_t c = 0; c < dh; ++c) ss += m[i * dh + c] * m[i * dh + c];
    const T nrm = std::sqrt(ss + static_cast<T>(kNormEps));
    norms[i] = nrm;
    for (std::size_t c = 0; c < dh; ++c) m[i * dh + c] /= nrm;
  }
}

template <typename T>
HeadCache<T> attention_head_forward(const Tensor<T>& qkv, T temperature, std::size_t heads, std::size_t head) {
  const std::size_t n = qkv.rows(), d = qkv.cols() / 3, dh = d / heads;
  HeadCache<T> c;
  c.q_hat.resize(n * dh);
  c.k_hat.resize(n * dh);
  c.v.resize(n * dh);
  c.q_norm.resize(n);
  c.k_norm.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = qkv.data() + i * 3 * d + head * dh;
    std::copy(row, row + dh, c.q_hat.data() + i * dh);
    std::copy(row + d, row + d + dh, c.k_hat.data() + i * dh);
    std::copy(row + 2 * d, row + 2 * d + dh, c.v.data() + i * dh);
  }
  normalize_rows(c.q_hat, c.q_norm, n, dh);
  normalize_rows(c.k_hat, c.k_norm, n, dh);
  c.cosine.resize(n * n);
  kp::gemm_nt(n, n, dh, c.q_hat.data(), c.k_hat.data(), c.cosine.data(), false);
  c.prob.resize(n * n);
  for (std::size_t i = 0; i < n * n; ++i) c.prob[i] = temperature * c.cosine[i];
  for (std::size_t i = 0; i < n; ++i) softmax_row(c.prob.data() + i * n, n);
  return c;
}

template <typename T>
void check_heads(std::size_t d, std::size_t heads) {
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention: model width " + std::to_string(d) + " not divisible by " + std::to_string(heads) +
                      " heads");
  }
}

}  // namespace

template <typename T>
Tensor<T> attention_probabilities(const Tensor<T>& qkv, const Tensor<T>& temperature, std::size_t heads,
                                  std::size_t head) {
  if (qkv.cols() % 3 != 0) throw DimensionError("attention: packed qkv width must be a multiple of 3");
  check_heads<T>(qkv.cols() / 3, heads);
  auto c = attention_head_forward(qkv, temperature[head], heads, head);
  return Tensor<T>({qkv.rows(), qkv.rows()}, std::move(c.prob));
}

template <typename T>
Var<T> qknorm_attention(Var<T> qkv, Var<T> temperature, std::size_t heads) {
  const Tensor<T>& qv = qkv.value();
  if (qv.rank() != 2 || qv.cols() % 3 != 0) {
    throw DimensionError("attention: packed qkv must be [n, 3d], got " + shape_string(qv.shape()));
  }
  const std::size_t n = qv.rows(), d = qv.cols() / 3;
  check_heads<T>(d, heads);
  if (temperature.value().numel() != heads) {
    throw DimensionError("attention: temperature " + shape_string(temperature.value().shape()) + " for " +
                         std::to_string(heads) + " heads");
  }
  const std::size_t dh = d / heads;
  auto caches = std::make_shared<std::vector<HeadCache<T>>>(heads);
  Tensor<T> out({n, d});
  std::vector<T> head_out(n * dh);
  for (std::size_t h = 0; h < heads; ++h) {
    HeadCache<T>& c = (*caches)[h] = attention_head_forward(qv, temperature.value()[h], heads, h);
    kp::gemm_nn(n, dh, n, c.prob.data(), c.v.data(), head_out.data(), false);
    for (std::size_t i = 0; i < n; ++i) std::copy_n(head_out.data() + i * dh, dh, out.data() + i * d + h * dh);
  }
  const std::uint64_t per_head = 2 * flop_cost::kQkNormalize * n * dh + 2ull * n * n * dh + n * n +
                                 flop_cost::kSoftmax * n * n + 2ull * n * n * dh;
  const std::size_t qi = qkv.id(), ti = temperature.id();
  return qkv.graph().record(
      "qknorm_attention", std::move(out), {qkv, temperature},
      [qi, ti, caches, n, d, dh, heads](Graph<T>& gr, const Tensor<T>& dy) {
        const bool want_qkv = gr.requires_grad(qi), want_t = gr.requires_grad(ti);
        std::vector<T> d_out(n * dh), d_v(n * dh), d_prob(n * n), d_q(n * dh), d_k(n * dh);
        for (std::size_t h = 0; h < heads; ++h) {
          const HeadCache<T>& c = (*caches)[h];
          const T tau = gr.value(ti)[h];
          for (std::size_t i = 0; i < n; ++i) std::copy_n(dy.data() + i * d + h * dh, dh, d_out.data() + i * dh);
          // d_prob = d_out v^T, then through the softmax into logits.
          kp::gemm_nt(n, n, dh, d_out.data(), c.v.data(), d_prob.data(), false);
          for (std::size_t i = 0; i < n; ++i) {
            softmax_row_backward(c.prob.data() + i * n, d_prob.data() + i * n, d_prob.data() + i * n, n, false);
          }
          if (want_t) {
            T acc = 0;
            for (std::size_t i = 0; i < n * n; ++i) acc += d_prob[i] * c.cosine[i];
            gr.grad_buffer(ti)[h] += acc;
          }
          if (!want_qkv) continue;
          kp::gemm_tn(n, dh, n, c.prob.data(), d_out.data(), d_v.data(), false);
          for (auto& v : d_prob) v *= tau;  // now d(cosine)
          kp::gemm_nn(n, dh, n, d_prob.data(), c.k_hat.data(), d_q.data(), false);
          kp::gemm_tn(n, dh, n, d_prob.data(), c.q_hat.data(), d_k.data(), false);
          T* gq = gr.grad_buffer(qi).data();
          for (std::size_t i = 0; i < n; ++i) {
            T dq_dot = 0, dk_dot = 0;
            for (std::size_t e = 0; e < dh; ++e) {
              dq_dot += d_q[i * dh + e] * c.q_hat[i * dh + e];
              dk_dot += d_k[i * dh + e] * c.k_hat[i * dh + e];
            }
            T* row = gq + i * 3 * d + h * dh;
            for (std::size_t e = 0; e < dh; ++e) {
              row[e] += (d_q[i * dh + e] - c.q_hat[i * dh + e] * dq_dot) / c.q_norm[i];
              row[d + e] += (d_k[i * dh + e] - c.k_hat[i * dh + e] * dk_dot) / c.k_norm[i];
              row[2 * d + e] += d_v[i * dh + e];
            }
          }
        }
      },
      heads * per_head);
}

template <typename T>
Var<T> mhsa_qknorm(Var<T> x, const AttentionWeights<T>& w, std::size_t heads) {
  check_heads<T>(x.value().cols(), heads);
  Var<T> qkv = linear(x, w.qkv_weight, std::optional<Var<T>>(w.qkv_bias));
  Var<T> mixed = qknorm_attention(qkv, w.temperature, heads);
  return linear(mixed, w.out_weight, std::optional<Var<T>>(w.out_bias));
}

template <typename T>
Var<T> modulate(Var<T> x, Var<T> sigma, std::optional<Var<T>> mu, std::span<const std::uint8_t> role) {
  const Tensor<T>& xv = x.value();
  const std::size_t rows = xv.rows(), d = xv.cols();
  const Tensor<T>& sv = sigma.value();
  if (sv.rank() != 2 || sv.cols() != d) {
    throw DimensionError("modulate: tokens " + shape_string(xv.shape()) + " with scale table " +
                         shape_string(sv.shape()));
  }
  if (mu && mu->value().shape() != sv.shape()) {
    throw DimensionError("modulate: shift table " + shape_string(mu->value().shape()) + " vs scale table " +
                         shape_string(sv.shape()));
  }
  if (role.size() != rows) {
    throw DimensionError("modulate: " + std::to_string(role.size()) + " role indicators for " +
                         std::to_string(rows) + " tokens");
  }
  const std::size_t table_rows = sv.rows();
  for (auto r : role) {
    if (r >= table_rows) throw ArgumentError("modulate: role indicator out of range");
  }
  std::vector<T> one_plus(sv.numel());
  for (std::size_t i = 0; i < sv.numel(); ++i) one_plus[i] = T(1) + sv[i];
  Tensor<T> y(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* s = one_plus.data() + role[r] * d;
    const T* xr = xv.data() + r * d;
    T* yr = y.data() + r * d;
    if (mu) {
      const T* m = mu->value().data() + role[r] * d;
      for (std::size_t c = 0; c < d; ++c) yr[c] = s[c] * xr[c] + m[c];
    } else {
      for (std::size_t c = 0; c < d; ++c) yr[c] = s[c] * xr[c];
    }
  }
  std::vector<Var<T>> inputs{x, sigma};
  if (mu) inputs.push_back(*mu);
  const std::size_t xi = x.id(), si = sigma.id();
  const std::optional<std::size_t> mi = mu ? std::optional<std::size_t>(mu->id()) : std::nullopt;
  std::vector<std::uint8_t> roles(role.begin(), role.end());
  const std::uint64_t flops = (mu ? 2 : 1) * xv.numel() + sv.numel();
  return x.graph().record(
      "modulate", std::move(y), inputs,
      [xi, si, mi, roles = std::move(roles), one_plus = std::move(one_plus), rows, d](Graph<T>& gr,
                                                                                      const Tensor<T>& dy) {
        if (gr.requires_grad(xi)) {
          T* gx = gr.grad_buffer(xi).data();
          for (std::size_t r = 0; r < rows; ++r) {
            const T* s = one_plus.data() + roles[r] * d;
            for (std::size_t c = 0; c < d; ++c) gx[r * d + c] += s[c] * dy[r * d + c];
          }
        }
        if (gr.requires_grad(si)) {
          const Tensor<T>& xv2 = gr.value(xi);
          T* gs = gr.grad_buffer(si).data();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < d; ++c) gs[roles[r] * d + c] += xv2[r * d + c] * dy[r * d + c];
        }
        if (mi && gr.requires_grad(*mi)) {
          T* gm = gr.grad_buffer(*mi).data();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < d; ++c) gm[roles[r] * d + c] += dy[r * d + c];
        }
      },
      flops);
}

template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
  const std::size_t d = parts.front().value().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.value().cols() != d) {
      throw DimensionError("concat_rows: width mismatch " + shape_string(parts.front().value().shape()) + " vs " +
                           shape_string(p.value().shape()));
    }
    rows += p.value().rows();
  }
  Tensor<T> y({rows, d});
  std::vector<std::size_t> ids, offsets;
  std::size_t at = 0;
  for (const auto& p : parts) {
    std::copy_n(p.value().data(), p.value().numel(), y.data() + at);
    ids.push_back(p.id());
    offsets.push_back(at);
    at += p.value().numel();
  }
  return parts.front().graph().record(
      "concat_rows", std::move(y), parts,
      [ids, offsets](Graph<T>& gr, const Tensor<T>& dy) {
        for (std::size_t i = 0; i < ids.size(); ++i) {
          if (!gr.requires_grad(ids[i])) continue;
          Tensor<T>& g = gr.grad_buffer(ids[i]);
          for (std::size_t k = 0; k < g.numel(); ++k) g[k] += dy[offsets[i] + k];
        }
      },
      0);
}

template <typename T>
Var<T> slice_rows(Var<T> x, std::size_t begin, std::size_t end) {
  const Tensor<T>& xv = x.value();
  if (xv.rank() != 2 || begin >= end || end > xv.rows()) {
    throw DimensionError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(end) + ") of " +
                         shape_string(xv.shape()));
  }
  const std::size_t d = xv.cols();
  Tensor<T> y({end - begin, d});
  std::copy_n(xv.data() + begin * d, y.numel(), y.data());
  const std::size_t xi = x.id();
  return x.graph().record(
      "slice_rows", std::move(y), {x},
      [xi, begin, d](Graph<T>& gr, const Tensor<T>& dy) {
        T* g = gr.grad_buffer(xi).data() + begin * d;
        for (std::size_t k = 0; k < dy.numel(); ++k) g[k] += dy[k];
      },
      0);
}

template <typename T>
Var<T> gather(Var<T> x, Shape shape, std::vector<std::size_t> source) {
  const Tensor<T>& xv = x.value();
  if (shape_numel(shape) != source.size()) throw DimensionError("gather: index count does not match output shape");
  Tensor<T> y(std::move(shape));
  for (std::size_t j = 0; j < source.size(); ++j) {
    if (source[j] >= xv.numel()) throw DimensionError("gather: index out of range");
    y[j] = xv[source[j]];
  }
  const std::size_t xi = x.id();
  return x.graph().record(
      "gather", std::move(y), {x},
      [xi, source = std::move(source)](Graph<T>& gr, const Tensor<T>& dy) {
        Tensor<T>& g = gr.grad_buffer(xi);
        for (std::size_t j = 0; j < source.size(); ++j) g[source[j]] += dy[j];
      },
      0);
}

template <typename T>
Var<T> mse(Var<T> pred, const Tensor<T>& target) {
  require_same_shape("mse", pred.value(), target);
  const Tensor<T>& pv = pred.value();
  T acc = 0;
  for (std::size_t i = 0; i < pv.numel(); ++i) acc += (pv[i] - target[i]) * (pv[i] - target[i]);
  const T n = static_cast<T>(pv.numel());
  const std::size_t pi = pred.id();
  return pred.graph().record(
      "mse", Tensor<T>::scalar(acc / n), {pred},
      [pi, target, n](Graph<T>& gr, const Tensor<T>& dy) {
        const Tensor<T>& p = gr.value(pi);
        Tensor<T>& g = gr.grad_buffer(pi);
        const T f = T(2) * dy[0] / n;
        for (std::size_t i = 0; i < p.numel(); ++i) g[i] += f * (p[i] - target[i]);
      },
      pv.numel() * flop_cost::kMse);
}

template <typename T>
Var<T> gradient_l1(Var<T> pred, const Tensor<T>& target) {
  require_same_shape("gradient_l1", pred.value(), target);
  const Tensor<T>& pv = pred.value();
  if (pv.rank() != 3 || pv.dim(0) < 2 || pv.dim(1) < 2) {
    throw DimensionError("gradient_l1: expects an [H>=2, W>=2, C] image, got " + shape_string(pv.shape()));
  }
  const std::size_t h = pv.dim(0), w = pv.dim(1), c = pv.dim(2);
  const T nh = static_cast<T>((w - 1) * h * c), nv = static_cast<T>(w * (h - 1) * c);
  auto at = [w, c](std::size_t y, std::size_t x, std::size_t ch) { return (y * w + x) * c + ch; };
  T acc_h = 0, acc_v = 0;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < c; ++ch) {
        if (x + 1 < w) {
          acc_h += std::abs((pv[at(y, x + 1, ch)] - pv[at(y, x, ch)]) - (target[at(y, x + 1, ch)] - target[at(y, x, ch)]));
        }
        if (y + 1 < h) {
          acc_v += std::abs((pv[at(y + 1, x, ch)] - pv[at(y, x, ch)]) - (target[at(y + 1, x, ch)] - target[at(y, x, ch)]));
        }
      }
  const T value = T(0.5) * (acc_h / nh + acc_v / nv);
  const std::size_t pi = pred.id();
  return pred.graph().record(
      "gradient_l1", Tensor<T>::scalar(value), {pred},
      [pi, target, h, w, c, nh, nv, at](Graph<T>& gr, const Tensor<T>& dy) {
        const Tensor<T>& p = gr.value(pi);
        Tensor<T>& g = gr.grad_buffer(pi);
        auto sgn = [](T v) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); };
        const T fh = T(0.5) * dy[0] / nh, fv = T(0.5) * dy[0] / nv;
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch) {
              if (x + 1 < w) {
                const T s = fh * sgn((p[at(y, x + 1, ch)] - p[at(y, x, ch)]) -
                                     (target[at(y, x + 1, ch)] - target[at(y, x, ch)]));
                g[at(y, x + 1, ch)] += s;
                g[at(y, x, ch)] -= s;
              }
              if (y + 1 < h) {
                const T s = fv * sgn((p[at(y + 1, x, ch)] - p[at(y, x, ch)]) -
                                     (target[at(y + 1, x, ch)] - target[at(y, x, ch)]));
                g[at(y + 1, x, ch)] += s;
                g[at(y, x, ch)] -= s;
              }
            }
      },
      ((w - 1) * h + w * (h - 1)) * c * flop_cost::kGradientL1);
}

#define TOKD_INSTANTIATE_OPS(T)                                                                            \
  template Var<T> linear(Var<T>, Var<T>, std::optional<Var<T>>);                                          \
  template Var<T> add(Var<T>, Var<T>);                                                                     \
  template Var<T> mul(Var<T>, Var<T>);                                                                     \
  template Var<T> scale(Var<T>, T);                                                                        \
  template Var<T> sum(Var<T>);                                                                             \
  template Var<T> layer_norm(Var<T>, Var<T>, Var<T>, T);                                                   \
  template Var<T> gelu(Var<T>);                                                                            \
  template Var<T> sigmoid(Var<T>);                                                                         \
  template Var<T> softmax_rows(Var<T>);                                                                    \
  template Var<T> qknorm_attention(Var<T>, Var<T>, std::size_t);                                          \
  template Var<T> mhsa_qknorm(Var<T>, const AttentionWeights<T>&, std::size_t);                           \
  template Tensor<T> attention_probabilities(const Tensor<T>&, const Tensor<T>&, std::size_t, std::size_t); \
  template Var<T> modulate(Var<T>, Var<T>, std::optional<Var<T>>, std::span<const std::uint8_t>);          \
  template Var<T> concat_rows(const std::vector<Var<T>>&);                                                 \
  template Var<T> slice_rows(Var<T>, std::size_t, std::size_t);                                            \
  template Var<T> gather(Var<T>, Shape, std::vector<std::size_t>);                                         \
  template Var<T> mse(Var<T>, const Tensor<T>&);                                                           \
  template Var<T> gradient_l1(Var<T>, const Tensor<T>&);

TOKD_INSTANTIATE_OPS(float)
TOKD_INSTANTIATE_OPS(double)

#undef TOKD_INSTANTIATE_OPS

}  // namespace tokd::ops
